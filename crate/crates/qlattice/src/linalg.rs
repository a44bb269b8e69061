//! Internal numerical kernels shared across the crate: a pivoted complex
//! tridiagonal LU, inverse-iteration eigenvector refinement, a minimum-cost
//! assignment solver, and small orthonormalization helpers.

use nalgebra::{Complex, DMatrix, DVector};

pub(crate) type C64 = Complex<f64>;

/// Compact complex tridiagonal matrix: `sub` and `sup` have length n-1,
/// `diag` length n.
#[derive(Debug, Clone)]
pub(crate) struct TriDiag {
    pub sub: Vec<C64>,
    pub diag: Vec<C64>,
    pub sup: Vec<C64>,
}

impl TriDiag {
    pub fn from_real(sub: &[f64], diag_len: usize, sup: &[f64]) -> Self {
        TriDiag {
            sub: sub.iter().map(|&x| C64::new(x, 0.0)).collect(),
            diag: vec![C64::new(0.0, 0.0); diag_len],
            sup: sup.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Returns a copy with `shift` subtracted from the diagonal.
    pub fn shifted(&self, shift: C64) -> Self {
        let mut out = self.clone();
        for d in &mut out.diag {
            *d -= shift;
        }
        out
    }

    /// y = A x for the original (unfactored) matrix.
    pub fn apply(&self, x: &DVector<C64>) -> DVector<C64> {
        let n = self.n();
        let mut y = DVector::from_element(n, C64::new(0.0, 0.0));
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.sup[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    /// y = A^H x for the original matrix.
    #[cfg(test)]
    pub fn apply_adjoint(&self, x: &DVector<C64>) -> DVector<C64> {
        let n = self.n();
        let mut y = DVector::from_element(n, C64::new(0.0, 0.0));
        for i in 0..n {
            let mut acc = self.diag[i].conj() * x[i];
            if i > 0 {
                acc += self.sup[i - 1].conj() * x[i - 1];
            }
            if i + 1 < n {
                acc += self.sub[i].conj() * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.sub
            .iter()
            .chain(self.diag.iter())
            .chain(self.sup.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Pivoted LU factorization of a complex tridiagonal matrix. The second
/// superdiagonal `du2` holds fill-in from row interchanges; `ipiv[i]`
/// records whether rows i and i+1 were swapped at step i.
#[derive(Debug, Clone)]
pub(crate) struct TriDiagLu {
    dl: Vec<C64>,
    d: Vec<C64>,
    du: Vec<C64>,
    du2: Vec<C64>,
    ipiv: Vec<usize>,
}

impl TriDiagLu {
    /// Factors the matrix. When `regularize` is set, pivots smaller than
    /// a few ulps of the matrix scale are replaced by that threshold so
    /// inverse iteration can run on exactly singular shifts.
    pub fn factor(m: &TriDiag, regularize: bool) -> Self {
        let n = m.n();
        let mut dl = m.sub.clone();
        let mut d = m.diag.clone();
        let mut du = m.sup.clone();
        let mut du2 = vec![C64::new(0.0, 0.0); n.saturating_sub(2)];
        let mut ipiv: Vec<usize> = (0..n).collect();

        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= dl[i].norm() {
                if d[i].norm() != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                } else {
                    dl[i] = C64::new(0.0, 0.0);
                }
                if i + 2 < n {
                    du2[i] = C64::new(0.0, 0.0);
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                ipiv[i] = i + 1;
            }
        }

        if regularize {
            let scale = m.max_abs().max(1.0);
            let floor = f64::EPSILON * scale;
            for pivot in &mut d {
                if pivot.norm() < floor {
                    *pivot = if pivot.norm() == 0.0 {
                        C64::new(floor, 0.0)
                    } else {
                        *pivot * (floor / pivot.norm())
                    };
                }
            }
        }

        TriDiagLu { dl, d, du, du2, ipiv }
    }

    /// Smallest pivot magnitude; zero signals an exactly singular matrix
    /// when factoring without regularization.
    #[cfg(test)]
    pub fn min_pivot(&self) -> f64 {
        self.d.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
    }

    /// Solves A x = b in place.
    pub fn solve(&self, b: &mut DVector<C64>) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.ipiv[i] == i {
                let update = self.dl[i] * b[i];
                b[i + 1] -= update;
            } else {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }

    /// Solves A^H x = b in place.
    pub fn solve_adjoint(&self, b: &mut DVector<C64>) {
        let n = self.d.len();
        b[0] /= self.d[0].conj();
        if n > 1 {
            b[1] = (b[1] - self.du[0].conj() * b[0]) / self.d[1].conj();
        }
        for i in 2..n {
            b[i] = (b[i] - self.du[i - 1].conj() * b[i - 1] - self.du2[i - 2].conj() * b[i - 2])
                / self.d[i].conj();
        }
        for i in (0..n.saturating_sub(1)).rev() {
            if self.ipiv[i] == i {
                let update = self.dl[i].conj() * b[i + 1];
                b[i] -= update;
            } else {
                let temp = b[i + 1];
                b[i + 1] = b[i] - self.dl[i].conj() * temp;
                b[i] = temp;
            }
        }
    }
}

/// Deterministic, sign-varying start vector for inverse iteration. Unit
/// norm, no symmetry with the lattice operators.
pub(crate) fn iteration_seed(n: usize) -> DVector<C64> {
    let mut v = DVector::from_fn(n, |i, _| {
        C64::new(1.0 + 0.5 * (2.4 * i as f64 + 0.7).cos(), 0.0)
    });
    let norm = v.norm();
    v /= C64::new(norm, 0.0);
    v
}

/// Normalizes to unit norm and rotates the phase so the first component
/// above the noise floor is positive real.
pub(crate) fn fix_phase(v: &mut DVector<C64>) {
    let norm = v.norm();
    if norm == 0.0 {
        return;
    }
    *v /= C64::new(norm, 0.0);
    let n = v.len();
    let floor = n as f64 * f64::EPSILON;
    if let Some(lead) = v.iter().find(|z| z.norm() > floor) {
        let phase = lead / lead.norm();
        let rot = phase.conj();
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

/// Which side of the eigenproblem inverse iteration refines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    Right,
    Left,
}

/// Inverse iteration on a shifted tridiagonal matrix. Returns the unit,
/// phase-fixed eigenvector of A (Right) or of A^H at the conjugate
/// eigenvalue (Left), i.e. the left eigenvector row written as a column.
pub(crate) fn tridiag_eigenvector(m: &TriDiag, shift: C64, side: Side) -> DVector<C64> {
    let lu = TriDiagLu::factor(&m.shifted(shift), true);
    let n = m.n();
    let mut v = iteration_seed(n);
    let tol = 1e-13 * (n as f64).sqrt();
    for _ in 0..50 {
        let mut w = v.clone();
        match side {
            Side::Right => lu.solve(&mut w),
            Side::Left => lu.solve_adjoint(&mut w),
        }
        let norm = w.norm();
        if !norm.is_finite() || norm == 0.0 {
            break;
        }
        w /= C64::new(norm, 0.0);
        let overlap: C64 = v.dotc(&w);
        let aligned = if overlap.norm() > 0.0 {
            &w * (overlap.conj() / overlap.norm())
        } else {
            w.clone()
        };
        let delta = (&aligned - &v).norm();
        v = w;
        if delta < tol {
            break;
        }
    }
    fix_phase(&mut v);
    v
}

/// Inverse iteration for one eigenvector of a small dense complex
/// matrix; same contract as [`tridiag_eigenvector`]. When the shifted
/// matrix is singular to working precision the shift is nudged off the
/// eigenvalue until the factorization produces finite iterates.
pub(crate) fn dense_eigenvector(m: &DMatrix<C64>, shift: C64, side: Side) -> DVector<C64> {
    let n = m.nrows();
    let scale = m.norm().max(1.0);
    let base = match side {
        Side::Right => m.clone(),
        Side::Left => m.adjoint(),
    };
    let sh = match side {
        Side::Right => shift,
        Side::Left => shift.conj(),
    };
    let tol = 1e-13 * (n as f64).sqrt();
    let mut delta = 0.0f64;
    'attempt: for _ in 0..8 {
        let mut shifted = base.clone();
        for i in 0..n {
            shifted[(i, i)] -= sh + C64::new(delta, 0.0);
        }
        let lu = shifted.lu();
        let mut v = iteration_seed(n);
        for _ in 0..50 {
            let Some(mut w) = lu.solve(&v) else {
                delta = (delta * 16.0).max(f64::EPSILON * scale);
                continue 'attempt;
            };
            let norm = w.norm();
            if !norm.is_finite() || norm == 0.0 {
                delta = (delta * 16.0).max(f64::EPSILON * scale);
                continue 'attempt;
            }
            w /= C64::new(norm, 0.0);
            let overlap: C64 = v.dotc(&w);
            let aligned = if overlap.norm() > 0.0 {
                &w * (overlap.conj() / overlap.norm())
            } else {
                w.clone()
            };
            let delta_v = (&aligned - &v).norm();
            v = w;
            if delta_v < tol {
                break;
            }
        }
        fix_phase(&mut v);
        return v;
    }
    let mut v = iteration_seed(n);
    fix_phase(&mut v);
    v
}

/// Minimum-cost perfect matching on a square cost matrix (Hungarian
/// method with potentials, O(n^3)). Returns `assign` with row i matched
/// to column `assign[i]`.
pub(crate) fn assignment(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "assignment needs a square cost matrix");
    if n == 0 {
        return Vec::new();
    }
    // 1-based with index 0 as sentinel; p[j] is the row matched to column j.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
    }
    assign
}

/// Rounds a spectrum of a real matrix onto exact conjugate pairs. Values
/// are paired greedily by distance; unpaired imaginary parts are left
/// untouched.
pub(crate) fn enforce_conjugate_pairs(values: &mut [C64]) {
    let mut pos: Vec<usize> = (0..values.len()).filter(|&i| values[i].im > 0.0).collect();
    let mut neg: Vec<usize> = (0..values.len()).filter(|&i| values[i].im < 0.0).collect();
    while let Some(i) = pos.pop() {
        let target = values[i].conj();
        let Some((slot, _)) = neg
            .iter()
            .enumerate()
            .min_by(|a, b| {
                let da = (values[*a.1] - target).norm();
                let db = (values[*b.1] - target).norm();
                da.total_cmp(&db)
            })
        else {
            break;
        };
        let j = neg.swap_remove(slot);
        let mean = 0.5 * (values[i] + values[j].conj());
        values[i] = mean;
        values[j] = mean.conj();
    }
}

/// Modified Gram-Schmidt with one reorthogonalization pass. Columns of
/// the result span the same space as the input columns; near-dependent
/// columns (norm below `drop_tol` after projection) are dropped.
pub(crate) fn orthonormalize(columns: &[DVector<C64>], drop_tol: f64) -> Vec<DVector<C64>> {
    let mut basis: Vec<DVector<C64>> = Vec::with_capacity(columns.len());
    for col in columns {
        let mut w = col.clone();
        for _ in 0..2 {
            for b in &basis {
                let coeff = b.dotc(&w);
                w -= b * coeff;
            }
        }
        let norm = w.norm();
        if norm > drop_tol {
            w /= C64::new(norm, 0.0);
            basis.push(w);
        }
    }
    basis
}

/// Stacks column vectors into a dense matrix.
pub(crate) fn columns_to_matrix(columns: &[DVector<C64>], rows: usize) -> DMatrix<C64> {
    let mut m = DMatrix::from_element(rows, columns.len(), C64::new(0.0, 0.0));
    for (j, col) in columns.iter().enumerate() {
        m.set_column(j, col);
    }
    m
}
