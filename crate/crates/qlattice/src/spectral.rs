//! Eigenvalue computation, real/ghost classification, parameter sweeps
//! with trajectory matching, and log-log unfolding fits.

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;

use crate::error::Error;
use crate::linalg;
use crate::model::LatticeOperator;
use crate::model::Word;
use crate::Result;

type C64 = Complex<f64>;

/// Default absolute tolerance for calling an eigenvalue real.
pub const DEFAULT_TOL_ABS: f64 = 1e-9;
/// Default relative tolerance factor (scaled by the operator norm).
pub const DEFAULT_TOL_REL: f64 = 1e-12;
/// Below this |t| real/ghost counts are flagged low-confidence: the
/// eigenvalue scale 2*sqrt(|t|) approaches the classification tolerance.
pub const LOW_CONFIDENCE_T: f64 = 1e-6;
/// Above this |t| samples are flagged: couplings approach the sign change
/// at xi = 1.
pub const LARGE_COUPLING_T: f64 = 0.5;

/// Sorted spectrum of one operator instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Eigenvalues sorted by (real part, imaginary part).
    pub eigenvalues: Vec<C64>,
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Split of a spectrum into real eigenvalues and conjugate ghost pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumClassification {
    /// Real eigenvalues, ascending.
    pub real_eigenvalues: Vec<f64>,
    /// One representative per conjugate pair, imaginary part > 0,
    /// sorted by (real part, imaginary part).
    pub ghost_pairs: Vec<C64>,
    /// Number of real eigenvalues.
    pub n_real: usize,
    /// Number of non-real eigenvalues (twice the pair count).
    pub n_ghost: usize,
    /// The absolute threshold |Im q| was compared against.
    pub tolerance_used: f64,
}

/// Health flag for one sweep sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleStatus {
    Clean,
    /// t = 0: the operator is a Jordan block; the degenerate spectrum is
    /// recorded but not classified.
    Defective,
    /// |t| below [`LOW_CONFIDENCE_T`]; counts are tolerance-limited.
    LowConfidence,
    /// |t| above [`LARGE_COUPLING_T`]; couplings leave the default range.
    LargeCoupling,
}

/// Spectra over a parameter grid, matched into continuous trajectories.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub t_grid: Vec<f64>,
    /// `trajectories[i][k]` is trajectory i at `t_grid[k]`; at each k the
    /// multiset over i equals the spectrum at that sample.
    pub trajectories: Vec<Vec<C64>>,
    /// Real-eigenvalue count at each sample (dimension at defective
    /// samples, where all eigenvalues are exactly zero).
    pub real_count_per_t: Vec<usize>,
    pub statuses: Vec<SampleStatus>,
}

/// Least-squares power-law fit |q(t)| = c * t^p on a positive window.
#[derive(Debug, Clone)]
pub struct UnfoldingFit {
    /// Shared exponent: median of the per-trajectory slopes.
    pub exponent: f64,
    /// Trajectory ids the fit used, ascending.
    pub trajectories: Vec<usize>,
    /// Per-trajectory amplitude, parallel to `trajectories`.
    pub coefficients: Vec<f64>,
    /// Per-trajectory raw slope, parallel to `trajectories`.
    pub slopes: Vec<f64>,
    pub fit_window: (f64, f64),
    /// Root-mean-square deviation in log-log coordinates.
    pub residual: f64,
}

/// Computes the full spectrum. Strictly triangular instances (all
/// subdiagonal or all superdiagonal couplings exactly zero) short-circuit
/// to the exact all-zero spectrum; everything else goes through shifted
/// Hessenberg QR capped at 100 N sweeps.
pub fn eigenvalues(op: &LatticeOperator) -> Result<Spectrum> {
    let n = op.n();
    let sub = op.sub();
    let sup = op.sup();
    if sub.iter().all(|&x| x == 0.0) || sup.iter().all(|&x| x == 0.0) {
        return Ok(Spectrum {
            eigenvalues: vec![C64::new(0.0, 0.0); n],
        });
    }
    let iterations = 100 * n;
    let mut values = crate::eigen::real_eigenvalues(op.entries(), iterations)
        .ok_or(Error::EigensolverFailure { n, iterations })?;
    linalg::enforce_conjugate_pairs(&mut values);
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(Spectrum { eigenvalues: values })
}

/// Splits a spectrum into real eigenvalues and conjugate ghost pairs.
/// An eigenvalue is real iff |Im q| <= tol_abs + tol_rel * scale; the
/// rest must pair up as conjugates within ten times that threshold.
pub fn classify(
    s: &Spectrum,
    tol_abs: f64,
    tol_rel: f64,
    scale: f64,
) -> Result<SpectrumClassification> {
    debug_assert!(tol_abs > 0.0 && tol_rel >= 0.0 && scale >= 0.0);
    let tol = tol_abs + tol_rel * scale;

    let mut real_eigenvalues = Vec::new();
    let mut upper: Vec<C64> = Vec::new();
    let mut lower: Vec<C64> = Vec::new();
    for &q in &s.eigenvalues {
        if q.im.abs() <= tol {
            real_eigenvalues.push(q.re);
        } else if q.im > 0.0 {
            upper.push(q);
        } else {
            lower.push(q);
        }
    }

    let pair_tol = 10.0 * tol;
    if upper.len() != lower.len() {
        return Err(Error::PairingFailure {
            count: upper.len().abs_diff(lower.len()),
            tolerance: pair_tol,
        });
    }
    let mut ghost_pairs = Vec::with_capacity(upper.len());
    let mut mismatches = 0usize;
    for &q in &upper {
        let target = q.conj();
        let Some((slot, &partner)) = lower
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - target).norm().total_cmp(&(b.1 - target).norm()))
        else {
            mismatches += 1;
            continue;
        };
        if (partner - target).norm() > pair_tol {
            mismatches += 1;
        }
        lower.swap_remove(slot);
        ghost_pairs.push(q);
    }
    if mismatches > 0 {
        return Err(Error::PairingFailure {
            count: mismatches,
            tolerance: pair_tol,
        });
    }

    real_eigenvalues.sort_by(f64::total_cmp);
    ghost_pairs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let n_real = real_eigenvalues.len();
    let n_ghost = 2 * ghost_pairs.len();
    Ok(SpectrumClassification {
        real_eigenvalues,
        ghost_pairs,
        n_real,
        n_ghost,
        tolerance_used: tol,
    })
}

/// Classification with default tolerances, scaled by the Frobenius norm
/// of the operator.
pub fn classify_operator(op: &LatticeOperator) -> Result<SpectrumClassification> {
    let s = eigenvalues(op)?;
    classify(&s, DEFAULT_TOL_ABS, DEFAULT_TOL_REL, op.frobenius_norm())
}

fn status_for(t: f64) -> SampleStatus {
    if t == 0.0 {
        SampleStatus::Defective
    } else if t.abs() < LOW_CONFIDENCE_T {
        SampleStatus::LowConfidence
    } else if t.abs() > LARGE_COUPLING_T {
        SampleStatus::LargeCoupling
    } else {
        SampleStatus::Clean
    }
}

/// Matches a new spectrum onto the previous trajectory endpoints:
/// per-row nearest neighbor first, minimum-cost assignment when that is
/// not injective.
fn match_step(prev: &[C64], next: &[C64]) -> Vec<usize> {
    let n = prev.len();
    let mut choice = vec![0usize; n];
    let mut taken = vec![false; n];
    let mut injective = true;
    for i in 0..n {
        let j = (0..n)
            .min_by(|&a, &b| (next[a] - prev[i]).norm().total_cmp(&(next[b] - prev[i]).norm()))
            .expect("non-empty spectrum");
        choice[i] = j;
        if taken[j] {
            injective = false;
        }
        taken[j] = true;
    }
    if injective {
        return choice;
    }
    let cost = DMatrix::from_fn(n, n, |i, j| (next[j] - prev[i]).norm());
    linalg::assignment(&cost)
}

/// Computes spectra over a strictly increasing parameter grid and chains
/// them into N continuous trajectories. Samples are solved in parallel;
/// the result is identical to sequential evaluation.
pub fn sweep(n: usize, word: &Word, t_grid: &[f64]) -> Result<SweepResult> {
    if t_grid.len() < 2 || t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSampleGrid { min: 2 });
    }
    let spectra: Vec<Result<(Spectrum, f64)>> = t_grid
        .par_iter()
        .map(|&t| {
            let op = LatticeOperator::build(n, word, t)
                .and_then(|op| Ok((eigenvalues(&op)?, op.frobenius_norm())))
                .map_err(|e| Error::AtSample { t, source: Box::new(e) })?;
            Ok(op)
        })
        .collect();

    let mut trajectories: Vec<Vec<C64>> = vec![Vec::with_capacity(t_grid.len()); n];
    let mut real_count_per_t = Vec::with_capacity(t_grid.len());
    let mut statuses = Vec::with_capacity(t_grid.len());
    let mut prev: Vec<C64> = Vec::new();

    for (k, item) in spectra.into_iter().enumerate() {
        let (spectrum, scale) = item?;
        let t = t_grid[k];
        let status = status_for(t);

        let count = if status == SampleStatus::Defective {
            n
        } else {
            classify(&spectrum, DEFAULT_TOL_ABS, DEFAULT_TOL_REL, scale)
                .map_err(|e| Error::AtSample { t, source: Box::new(e) })?
                .n_real
        };

        let ordered: Vec<C64> = if k == 0 {
            spectrum.eigenvalues.clone()
        } else {
            let assign = match_step(&prev, &spectrum.eigenvalues);
            (0..n).map(|i| spectrum.eigenvalues[assign[i]]).collect()
        };
        for (i, &q) in ordered.iter().enumerate() {
            trajectories[i].push(q);
        }
        prev = ordered;
        real_count_per_t.push(count);
        statuses.push(status);
    }

    Ok(SweepResult {
        t_grid: t_grid.to_vec(),
        trajectories,
        real_count_per_t,
        statuses,
    })
}

/// Fits log|q(t)| = log c + p log t per selected trajectory over the
/// window, then takes the median slope as the shared exponent.
pub fn unfolding_fit(
    sr: &SweepResult,
    trajectory_ids: &[usize],
    window: (f64, f64),
) -> Result<UnfoldingFit> {
    let (t_min, t_max) = window;
    if !(t_min.is_finite() && t_max.is_finite()) || t_min <= 0.0 {
        return Err(Error::InvalidWindow {
            t_min,
            t_max,
            reason: "window must satisfy 0 < t_min < t_max",
        });
    }
    if t_min >= t_max {
        return Err(Error::InvalidWindow {
            t_min,
            t_max,
            reason: "window must satisfy 0 < t_min < t_max",
        });
    }
    let samples: Vec<usize> = (0..sr.t_grid.len())
        .filter(|&k| sr.t_grid[k] >= t_min && sr.t_grid[k] <= t_max)
        .collect();
    if samples.len() < 2 {
        return Err(Error::InvalidWindow {
            t_min,
            t_max,
            reason: "window must contain at least two grid samples",
        });
    }

    let mut ids: Vec<usize> = trajectory_ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.is_empty() {
        return Err(Error::EmptySelection);
    }
    if let Some(&id) = ids.iter().find(|&&id| id >= sr.trajectories.len()) {
        return Err(Error::InvalidTrajectoryId {
            id,
            count: sr.trajectories.len(),
        });
    }

    // Per-trajectory log-log regression.
    let mut slopes = Vec::with_capacity(ids.len());
    let mut mean_logs = Vec::with_capacity(ids.len());
    let log_t: Vec<f64> = samples.iter().map(|&k| sr.t_grid[k].ln()).collect();
    let mean_lt = log_t.iter().sum::<f64>() / log_t.len() as f64;
    for &id in &ids {
        let mut log_q = Vec::with_capacity(samples.len());
        for (&k, _) in samples.iter().zip(log_t.iter()) {
            let q = sr.trajectories[id][k];
            let t = sr.t_grid[k];
            let scale = q.norm().max(1.0);
            if q.im.abs() > 1e-9 * scale.max(1.0) {
                return Err(Error::NonRealTrajectory {
                    trajectory: id,
                    t,
                    im_magnitude: q.im.abs(),
                });
            }
            if q.norm() <= DEFAULT_TOL_ABS {
                return Err(Error::ZeroTrajectoryValue { trajectory: id, t });
            }
            log_q.push(q.norm().ln());
        }
        let mean_lq = log_q.iter().sum::<f64>() / log_q.len() as f64;
        let mut num = 0.0;
        let mut den = 0.0;
        for (lt, lq) in log_t.iter().zip(log_q.iter()) {
            num += (lt - mean_lt) * (lq - mean_lq);
            den += (lt - mean_lt) * (lt - mean_lt);
        }
        slopes.push(num / den);
        mean_logs.push((mean_lq, log_q));
    }

    let mut sorted = slopes.clone();
    sorted.sort_by(f64::total_cmp);
    let exponent = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };

    // Amplitudes under the shared exponent, then the pooled residual.
    let mut coefficients = Vec::with_capacity(ids.len());
    let mut sq_sum = 0.0;
    let mut count = 0usize;
    for (mean_lq, log_q) in &mean_logs {
        let log_c = mean_lq - exponent * mean_lt;
        coefficients.push(log_c.exp());
        for (lt, lq) in log_t.iter().zip(log_q.iter()) {
            let dev = lq - (log_c + exponent * lt);
            sq_sum += dev * dev;
            count += 1;
        }
    }
    let residual = (sq_sum / count as f64).sqrt();

    Ok(UnfoldingFit {
        exponent,
        trajectories: ids,
        coefficients,
        slopes,
        fit_window: window,
        residual,
    })
}

/// Characteristic polynomial det(zI - Q) by the tridiagonal continuant
/// recurrence; independent of the eigensolver path.
pub fn char_poly_at(op: &LatticeOperator, z: C64) -> C64 {
    let sub = op.sub();
    let sup = op.sup();
    let mut d_prev = C64::new(1.0, 0.0);
    let mut d = z;
    for k in 1..op.n() {
        let next = z * d - C64::new(sub[k - 1] * sup[k - 1], 0.0) * d_prev;
        d_prev = d;
        d = next;
    }
    d
}
