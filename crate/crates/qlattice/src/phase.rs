//! Word-resolved phase taxonomy: reality tables over the whole word set,
//! defectiveness certificates at the shared exceptional point, and the
//! spectral projector machinery for the real sector of a mixed spectrum.

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;

use crate::error::Error;
use crate::linalg::{self, Side};
use crate::metric::{self, HermitizationResult};
use crate::model::{self, LatticeOperator};
use crate::spectral;
use crate::Result;

type C64 = Complex<f64>;

/// Eigenvalues within this distance of the probe point belong to its
/// cluster.
const CLUSTER_TOL: f64 = 1e-6;
/// Relative singular-value cutoff for numerical rank.
const RANK_TOL_REL: f64 = 1e-10;
/// Columns with less residual mass than this are dropped when the real
/// eigenvectors are orthonormalized.
const BASIS_DROP_TOL: f64 = 1e-10;

/// Reality counts for one word, probed on both sides of the exceptional
/// point.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTableRow {
    pub index: u128,
    pub word: String,
    /// Real eigenvalue count at coupling -t0.
    pub n_real_before: usize,
    /// Real eigenvalue count at coupling +t0.
    pub n_real_after: usize,
    pub t0: f64,
}

/// Classifies every word of half-length n/2 at couplings -t0 and +t0,
/// ordered by word index.
pub fn classify_all_words(n: usize, t0: f64) -> Result<Vec<PhaseTableRow>> {
    if !(t0 > 0.0 && t0 < 1.0) || !t0.is_finite() {
        return Err(Error::InvalidProbeTime { t0 });
    }
    let half = n / 2;
    if half >= 64 {
        return Err(Error::WordTooLong { got: half, max: 63 });
    }
    let count: u64 = 1 << half;
    (0..count)
        .into_par_iter()
        .map(|raw| {
            let index = raw as u128;
            let word = model::word_from_index(half, index)?;
            let row = (|| -> Result<PhaseTableRow> {
                let before = model::build_operator(n, &word, -t0)?;
                let after = model::build_operator(n, &word, t0)?;
                let n_real_before = spectral::classify_operator(&before)?.n_real;
                let n_real_after = spectral::classify_operator(&after)?.n_real;
                Ok(PhaseTableRow {
                    index,
                    word: word.to_string(),
                    n_real_before,
                    n_real_after,
                    t0,
                })
            })();
            row.map_err(|source| Error::AtWord {
                word: word.to_string(),
                index,
                source: Box::new(source),
            })
        })
        .collect()
}

/// Multiplicity data for one probe point of the spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectivenessCertificate {
    /// The probed eigenvalue.
    pub z: C64,
    /// Coupling of the probed operator.
    pub t: f64,
    /// Eigenvalues within the cluster tolerance of z.
    pub algebraic_multiplicity: usize,
    /// Nullity of Q - zI at the numerical rank tolerance.
    pub geometric_multiplicity: usize,
    /// Numerical rank of Q - zI.
    pub rank: usize,
}

/// Certifies the algebraic/geometric multiplicity split of `z` as an
/// eigenvalue of the operator. A defective point has algebraic
/// multiplicity strictly above geometric.
pub fn defectiveness(op: &LatticeOperator, z: C64) -> Result<DefectivenessCertificate> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::NonFinite { name: "z" });
    }
    let n = op.n();
    let spectrum = spectral::eigenvalues(op)?;
    let algebraic_multiplicity = spectrum
        .eigenvalues
        .iter()
        .filter(|q| (*q - z).norm() <= CLUSTER_TOL)
        .count();

    let mut shifted = metric::complexify(op.entries());
    for i in 0..n {
        shifted[(i, i)] -= z;
    }
    let svd = nalgebra::linalg::SVD::new(shifted, false, false);
    let tol = RANK_TOL_REL * op.frobenius_norm().max(1.0);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();

    Ok(DefectivenessCertificate {
        z,
        t: op.t(),
        algebraic_multiplicity,
        geometric_multiplicity: n - rank,
        rank,
    })
}

/// The real spectral sector of a mixed-phase operator: the oblique
/// projector onto it, an orthonormal basis compression of the operator,
/// and a positive metric for the compressed block.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    /// Oblique spectral projector onto the real sector (n by n).
    pub projector: DMatrix<C64>,
    /// Dimension of the real sector.
    pub reduced_dim: usize,
    /// Real eigenvalues retained, ascending.
    pub real_eigenvalues: Vec<f64>,
    /// Orthonormal basis of the sector, one column per dimension.
    pub basis: DMatrix<C64>,
    /// Compression of the operator to the sector basis.
    pub q_reduced: DMatrix<C64>,
    /// Unit-weight metric of the compressed block.
    pub theta_reduced: DMatrix<C64>,
    /// Frobenius norm of P^2 - P.
    pub idempotency_residual: f64,
    /// Frobenius norm of QP - PQ.
    pub commutation_residual: f64,
}

/// Splits off the real spectral sector of an operator with a simple
/// spectrum. An empty sector (no real eigenvalues) yields a zero
/// projector and 0 by 0 blocks.
pub fn real_subspace_projector(op: &LatticeOperator) -> Result<ReducedModel> {
    let n = op.n();
    let system = metric::eigensystem(op)?;
    let tol = spectral::DEFAULT_TOL_ABS + spectral::DEFAULT_TOL_REL * op.frobenius_norm();

    let mut projector = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    let mut real_eigenvalues = Vec::new();
    let mut real_vectors = Vec::new();
    for (k, &q) in system.values.iter().enumerate() {
        if q.im.abs() > tol {
            continue;
        }
        let x = &system.right[k];
        let psi = &system.left[k];
        let overlap = psi.dotc(x);
        if overlap.norm() <= 1e-12 {
            return Err(Error::BiorthogonalityFailure {
                max_overlap: overlap.norm(),
            });
        }
        projector += (x * psi.adjoint()) / overlap;
        real_eigenvalues.push(q.re);
        real_vectors.push(x.clone());
    }

    let basis = linalg::orthonormalize(&real_vectors, BASIS_DROP_TOL);
    if basis.len() != real_vectors.len() {
        return Err(Error::ClassificationMismatch {
            detail: format!(
                "real eigenvectors span {} dimensions for {} retained eigenvalues",
                basis.len(),
                real_vectors.len()
            ),
        });
    }
    let reduced_dim = basis.len();
    let b = linalg::columns_to_matrix(&basis, n);
    let q = metric::complexify(op.entries());
    let q_reduced = b.adjoint() * &q * &b;

    // The compressed block is not tridiagonal and its left eigenvectors
    // are not compressions of the full ones, so they are recomputed.
    let mut theta_reduced =
        DMatrix::from_element(reduced_dim, reduced_dim, C64::new(0.0, 0.0));
    for &value in &real_eigenvalues {
        let phi = linalg::dense_eigenvector(&q_reduced, C64::new(value, 0.0), Side::Left);
        theta_reduced += &phi * phi.adjoint();
    }
    let theta_reduced = (&theta_reduced + theta_reduced.adjoint()) * C64::new(0.5, 0.0);

    let idempotency_residual = (&projector * &projector - &projector).norm();
    let commutation_residual = (&q * &projector - &projector * &q).norm();

    Ok(ReducedModel {
        projector,
        reduced_dim,
        real_eigenvalues,
        basis: b,
        q_reduced,
        theta_reduced,
        idempotency_residual,
        commutation_residual,
    })
}

/// Hermitizes the compressed real-sector block with its unit-weight
/// metric.
pub fn reduced_hermitize(model: &ReducedModel) -> Result<HermitizationResult> {
    if model.reduced_dim == 0 {
        let empty = DMatrix::from_element(0, 0, C64::new(0.0, 0.0));
        return metric::hermitize_matrix(&model.q_reduced, &empty);
    }
    let omega = metric::factor_metric(&model.theta_reduced)?;
    metric::hermitize_matrix(&model.q_reduced, &omega)
}
