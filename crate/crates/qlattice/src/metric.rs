//! Intertwining (quasi-Hermiticity) machinery: biorthogonal eigensystems,
//! positive metric reconstruction from weights, the brute-force Hermitian
//! intertwiner null space, metric factorization, and Hermitization.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::Error;
use crate::linalg::{self, Side, TriDiag};
use crate::model::LatticeOperator;
use crate::spectral;
use crate::Result;

type C64 = Complex<f64>;

/// Relative gap below which a spectrum is treated as degenerate.
const GAP_TOL_REL: f64 = 1e-10;
/// Biorthogonality ceiling for unit left/right eigenvector pairs.
const BIORTH_TOL: f64 = 1e-9;
/// Relative singular-value cutoff for the intertwiner null space.
const NULLSPACE_TOL_REL: f64 = 1e-8;

/// Eigenvalues with paired unit right and left eigenvectors, ordered by
/// (real part, imaginary part) of the eigenvalue.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub values: Vec<C64>,
    /// Right eigenvectors x_n with Q x_n = q_n x_n.
    pub right: Vec<DVector<C64>>,
    /// Left eigenvectors psi_n with Q^H psi_n = conj(q_n) psi_n.
    pub left: Vec<DVector<C64>>,
}

/// One member of the metric family, built from prescribed weights.
#[derive(Debug, Clone)]
pub struct MetricSolution {
    /// Hermitian metric, symmetrized storage.
    pub theta: DMatrix<C64>,
    pub kappa: Vec<f64>,
    /// Frobenius norm of Q^H theta - theta Q.
    pub residual: f64,
    pub positive_definite: bool,
    /// Smallest eigenvalue of theta, the positivity witness.
    pub min_eigenvalue: f64,
    /// Eigenvalue ratio of theta; infinite when not positive definite.
    pub condition_number: f64,
}

/// How to split theta into omega^H omega.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factorization {
    /// Hermitian principal square root (default; gauge-free).
    PrincipalRoot,
    /// Upper-triangular factor from a Cholesky decomposition.
    Triangular,
}

/// Similarity image of an operator under a metric factor.
#[derive(Debug, Clone)]
pub struct HermitizationResult {
    pub omega: DMatrix<C64>,
    /// The mapped operator omega Q omega^{-1}.
    pub q_image: DMatrix<C64>,
    /// Frobenius norm of q_image - q_image^H.
    pub hermiticity_residual: f64,
    /// Largest distance between the sorted spectra of Q and q_image.
    pub isospectrality_residual: f64,
    /// Condition number of omega (ratio of extreme singular values).
    pub condition_number: f64,
}

pub(crate) fn complexify(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

fn min_gap(values: &[C64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            gap = gap.min((values[i] - values[j]).norm());
        }
    }
    gap
}

/// Solves for all eigenvector pairs by shifted inverse iteration on the
/// compact tridiagonal form. Requires a simple spectrum.
pub fn eigensystem(op: &LatticeOperator) -> Result<Eigensystem> {
    let spectrum = spectral::eigenvalues(op)?;
    let values = spectrum.eigenvalues;
    let scale = op.frobenius_norm().max(1.0);
    let threshold = GAP_TOL_REL * scale;
    let gap = min_gap(&values);
    if gap <= threshold {
        return Err(Error::DegenerateSpectrum {
            min_gap: gap,
            threshold,
        });
    }

    let tri = TriDiag::from_real(&op.sub(), op.n(), &op.sup());
    let right: Vec<DVector<C64>> = values
        .iter()
        .map(|&q| linalg::tridiag_eigenvector(&tri, q, Side::Right))
        .collect();
    let left: Vec<DVector<C64>> = values
        .iter()
        .map(|&q| linalg::tridiag_eigenvector(&tri, q, Side::Left))
        .collect();

    let mut max_overlap = 0.0f64;
    for (m, psi) in left.iter().enumerate() {
        for (n, x) in right.iter().enumerate() {
            if m != n {
                max_overlap = max_overlap.max(psi.dotc(x).norm());
            }
        }
    }
    if max_overlap > BIORTH_TOL {
        return Err(Error::BiorthogonalityFailure { max_overlap });
    }
    Ok(Eigensystem { values, right, left })
}

/// Unit left eigenvectors, ordered by eigenvalue (real part, imaginary
/// part).
pub fn left_eigenvectors(op: &LatticeOperator) -> Result<Vec<DVector<C64>>> {
    Ok(eigensystem(op)?.left)
}

/// Builds the weighted dyadic metric theta = sum kappa_n psi_n psi_n^H
/// over left eigenvectors, ordered by ascending eigenvalue. Requires a
/// fully real simple spectrum.
pub fn metric_from_weights(op: &LatticeOperator, kappa: &[f64]) -> Result<MetricSolution> {
    let n = op.n();
    if kappa.len() != n {
        return Err(Error::WeightCount {
            expected: n,
            got: kappa.len(),
        });
    }
    for (index, &value) in kappa.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositiveWeight { index, value });
        }
    }
    let classification = spectral::classify_operator(op)?;
    if classification.n_real != n {
        return Err(Error::NonRealSpectrum {
            n_real: classification.n_real,
            n,
        });
    }
    let system = eigensystem(op)?;

    let mut theta = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for (k, psi) in system.left.iter().enumerate() {
        let dyad = psi * psi.adjoint();
        theta += dyad * C64::new(kappa[k], 0.0);
    }
    let theta = hermitian_part(&theta);

    let q = complexify(op.entries());
    let residual = (q.adjoint() * &theta - &theta * &q).norm();
    let (min_eigenvalue, max_eigenvalue) = eigenvalue_extremes(&theta);
    let condition_number = if min_eigenvalue > 0.0 {
        max_eigenvalue / min_eigenvalue
    } else {
        f64::INFINITY
    };
    Ok(MetricSolution {
        theta,
        kappa: kappa.to_vec(),
        residual,
        positive_definite: min_eigenvalue > 0.0,
        min_eigenvalue,
        condition_number,
    })
}

fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    let adj = m.adjoint();
    (m + adj) * C64::new(0.5, 0.0)
}

fn smallest_eigenvalue(hermitian: &DMatrix<C64>) -> f64 {
    eigenvalue_extremes(hermitian).0
}

fn eigenvalue_extremes(hermitian: &DMatrix<C64>) -> (f64, f64) {
    let eig = nalgebra::linalg::SymmetricEigen::new(hermitian.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// Condition number of a Hermitian positive definite matrix; infinite
/// when the smallest eigenvalue is not positive.
pub fn condition_number(hermitian: &DMatrix<C64>) -> f64 {
    let (min, max) = eigenvalue_extremes(hermitian);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Orthonormal basis (Frobenius inner product) of the Hermitian solution
/// space of Q^H theta = theta Q, from the null space of the real-linear
/// map Herm(N) -> AntiHerm(N). Serves as a brute-force oracle for the
/// dyadic construction.
pub fn intertwiner_basis(op: &LatticeOperator) -> Vec<DMatrix<C64>> {
    let n = op.n();
    let q = complexify(op.entries());
    let herm = hermitian_basis(n);
    let anti = antihermitian_basis(n);
    let dim = n * n;

    // Column a holds the coordinates of Q^H H_a - H_a Q in the
    // anti-Hermitian basis.
    let mut map = DMatrix::zeros(dim, dim);
    for (a, h) in herm.iter().enumerate() {
        let image = q.adjoint() * h - h * &q;
        for (b, basis) in anti.iter().enumerate() {
            let coeff: C64 = (basis.adjoint() * &image).trace();
            map[(b, a)] = coeff.re;
        }
    }

    let svd = nalgebra::linalg::SVD::new(map, false, true);
    let v_t = svd.v_t.expect("requested");
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = NULLSPACE_TOL_REL * sigma_max.max(f64::EPSILON);

    let mut basis = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= tol {
            let row = v_t.row(k);
            let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
            for (a, h) in herm.iter().enumerate() {
                m += h * C64::new(row[a], 0.0);
            }
            basis.push(hermitian_part(&m));
        }
    }
    // Singular vectors below the cutoff are orthonormal already; the
    // count is the null-space dimension.
    basis
}

fn hermitian_basis(n: usize) -> Vec<DMatrix<C64>> {
    let mut out = Vec::with_capacity(n * n);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        m[(i, i)] = C64::new(1.0, 0.0);
        out.push(m);
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
            m[(i, j)] = C64::new(inv_sqrt2, 0.0);
            m[(j, i)] = C64::new(inv_sqrt2, 0.0);
            out.push(m);
            let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
            m[(i, j)] = C64::new(0.0, inv_sqrt2);
            m[(j, i)] = C64::new(0.0, -inv_sqrt2);
            out.push(m);
        }
    }
    out
}

fn antihermitian_basis(n: usize) -> Vec<DMatrix<C64>> {
    hermitian_basis(n)
        .into_iter()
        .map(|m| m * C64::new(0.0, 1.0))
        .collect()
}

/// Relative Frobenius residual of projecting `m` onto the span of an
/// orthonormal Hermitian basis.
pub fn span_fit_residual(basis: &[DMatrix<C64>], m: &DMatrix<C64>) -> f64 {
    let mut projection = DMatrix::from_element(m.nrows(), m.ncols(), C64::new(0.0, 0.0));
    for b in basis {
        let coeff: C64 = (b.adjoint() * m).trace();
        projection += b * coeff;
    }
    let norm = m.norm();
    if norm == 0.0 {
        0.0
    } else {
        (m - projection).norm() / norm
    }
}

/// Factors a Hermitian positive definite metric as omega^H omega using
/// the Hermitian principal square root.
pub fn factor_metric(theta: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    factor_metric_with(theta, Factorization::PrincipalRoot)
}

/// Factorization with an explicit method choice.
pub fn factor_metric_with(theta: &DMatrix<C64>, method: Factorization) -> Result<DMatrix<C64>> {
    let theta = hermitian_part(theta);
    match method {
        Factorization::PrincipalRoot => {
            let eig = nalgebra::linalg::SymmetricEigen::new(theta);
            let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            if min <= 0.0 {
                return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
            }
            let sqrt_vals =
                DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|l| C64::new(l.sqrt(), 0.0)));
            let v = eig.eigenvectors;
            let omega = &v * DMatrix::from_diagonal(&sqrt_vals) * v.adjoint();
            Ok(hermitian_part(&omega))
        }
        Factorization::Triangular => {
            // The complex Cholesky happily takes complex square roots of
            // negative pivots, so definiteness must be checked up front.
            let min = smallest_eigenvalue(&theta);
            if min <= 0.0 {
                return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
            }
            match nalgebra::linalg::Cholesky::new(theta) {
                Some(ch) => Ok(ch.l().adjoint()),
                None => Err(Error::NotPositiveDefinite { min_eigenvalue: min }),
            }
        }
    }
}

/// Maps the operator through the similarity q_image = omega Q omega^{-1}
/// and reports Hermiticity, isospectrality, and conditioning.
pub fn hermitize(op: &LatticeOperator, omega: &DMatrix<C64>) -> Result<HermitizationResult> {
    hermitize_matrix(&complexify(op.entries()), omega)
}

/// Matrix-level Hermitization, also used for reduced sector models.
pub fn hermitize_matrix(q: &DMatrix<C64>, omega: &DMatrix<C64>) -> Result<HermitizationResult> {
    let n = q.nrows();
    if n == 0 {
        return Ok(HermitizationResult {
            omega: omega.clone(),
            q_image: q.clone(),
            hermiticity_residual: 0.0,
            isospectrality_residual: 0.0,
            condition_number: 1.0,
        });
    }
    let svd = nalgebra::linalg::SVD::new(omega.clone(), false, false);
    let s_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let s_min = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    let condition_number = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    if s_min <= f64::EPSILON * s_max {
        return Err(Error::SingularFactor {
            condition: condition_number,
        });
    }
    let inverse = omega
        .clone()
        .try_inverse()
        .ok_or(Error::SingularFactor {
            condition: condition_number,
        })?;
    let q_image = omega * q * inverse;
    let hermiticity_residual = (&q_image - q_image.adjoint()).norm();

    let iterations = 100 * n;
    let sorted = |m: &DMatrix<C64>| -> Result<Vec<C64>> {
        let mut vals = crate::eigen::complex_eigenvalues(m, iterations)
            .ok_or(Error::EigensolverFailure { n, iterations })?;
        vals.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(vals)
    };
    let original = sorted(q)?;
    let image_vals = sorted(&q_image)?;
    let isospectrality_residual = original
        .iter()
        .zip(image_vals.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);

    Ok(HermitizationResult {
        omega: omega.clone(),
        q_image,
        hermiticity_residual,
        isospectrality_residual,
        condition_number,
    })
}
