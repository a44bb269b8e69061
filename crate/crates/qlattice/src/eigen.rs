//! Dense eigenvalue kernels: real Hessenberg double-shift QR and complex
//! Hessenberg single-shift QR, both with exceptional shifts every ten
//! stalled sweeps. The operators in this crate have spectra symmetric
//! under q -> -q and often contain fourfold quadruples {q, -q, conj q,
//! -conj q}, patterns on which plain Francis iteration without
//! exceptional restarts can stagnate indefinitely. Two restart forms
//! alternate so the kick itself cannot settle into a meta-cycle, and
//! the real route falls back to the complex one (whose shift dynamics
//! are independent) before giving up.

use nalgebra::DMatrix;

use crate::linalg::C64;

/// Per-window sweep limit; exceptional shifts fire every ten sweeps.
const WINDOW_SWEEP_CAP: usize = 60;

fn sign_with(magnitude: f64, sign_of: f64) -> f64 {
    if sign_of >= 0.0 {
        magnitude.abs()
    } else {
        -magnitude.abs()
    }
}

/// Eigenvalues of a real upper-Hessenberg matrix by the double-shift QR
/// iteration (EISPACK hqr lineage). Returns None when either the global
/// sweep budget or the per-window cap is exhausted.
pub(crate) fn hessenberg_eigenvalues(a: &mut DMatrix<f64>, max_sweeps: usize) -> Option<Vec<C64>> {
    let n = a.nrows();
    let mut out: Vec<C64> = Vec::with_capacity(n);
    if n == 0 {
        return Some(out);
    }
    let eps = f64::EPSILON;
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    if anorm == 0.0 {
        return Some(vec![C64::new(0.0, 0.0); n]);
    }

    let mut sweeps = 0usize;
    let mut shift_total = 0.0f64;
    let mut en = n - 1;
    'outer: loop {
        let mut its = 0usize;
        loop {
            // Smallest window start with a negligible subdiagonal entry.
            let mut lo = 0usize;
            for l in (1..=en).rev() {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() <= eps * s {
                    a[(l, l - 1)] = 0.0;
                    lo = l;
                    break;
                }
            }

            let x = a[(en, en)];
            if lo == en {
                out.push(C64::new(x + shift_total, 0.0));
                if en == 0 {
                    break 'outer;
                }
                en -= 1;
                break;
            }

            let y = a[(en - 1, en - 1)];
            let w = a[(en, en - 1)] * a[(en - 1, en)];
            if lo + 1 == en {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                let x = x + shift_total;
                if q >= 0.0 {
                    let z = p + sign_with(z, p);
                    out.push(C64::new(x + z, 0.0));
                    out.push(C64::new(if z != 0.0 { x - w / z } else { x + z }, 0.0));
                } else {
                    out.push(C64::new(x + p, z));
                    out.push(C64::new(x + p, -z));
                }
                if en == 1 {
                    break 'outer;
                }
                en -= 2;
                break;
            }

            if its == WINDOW_SWEEP_CAP || sweeps >= max_sweeps {
                return None;
            }
            let (mut x, mut y, mut w) = (x, y, w);
            if its > 0 && its % 10 == 0 {
                // Exceptional shift: perturb away from a stagnating
                // cycle. The window may have split since the counter
                // last reset, so the kick must recur, and the two forms
                // alternate to keep the restarts themselves aperiodic.
                if (its / 10) % 2 == 1 {
                    shift_total += x;
                    for i in 0..=en {
                        a[(i, i)] -= x;
                    }
                    let s = a[(en, en - 1)].abs() + a[(en - 1, en - 2)].abs();
                    x = 0.75 * s;
                    y = x;
                    w = -0.4375 * s * s;
                } else {
                    // Repeated real shift off the trailing entry.
                    let sigma = a[(en, en)] + 0.75 * a[(en, en - 1)].abs();
                    x = sigma;
                    y = sigma;
                    w = 0.0;
                }
            }
            its += 1;
            sweeps += 1;

            // Start row for the implicit double shift.
            let mut m = lo;
            let (mut p, mut q, mut r) = (0.0, 0.0, 0.0);
            for mi in (lo..=en - 2).rev() {
                let z = a[(mi, mi)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(mi + 1, mi)] + a[(mi, mi + 1)];
                q = a[(mi + 1, mi + 1)] - z - rr - ss;
                r = a[(mi + 2, mi + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if mi == lo {
                    m = mi;
                    break;
                }
                let u = a[(mi, mi - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(mi - 1, mi - 1)].abs() + z.abs() + a[(mi + 1, mi + 1)].abs());
                if u <= eps * v {
                    m = mi;
                    break;
                }
            }
            for i in m + 2..=en {
                a[(i, i - 2)] = 0.0;
                if i != m + 2 {
                    a[(i, i - 3)] = 0.0;
                }
            }

            // Chase the bulge.
            for k in m..en {
                let mut norm_x = 0.0;
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = if k != en - 1 { a[(k + 2, k - 1)] } else { 0.0 };
                    norm_x = p.abs() + q.abs() + r.abs();
                    if norm_x != 0.0 {
                        p /= norm_x;
                        q /= norm_x;
                        r /= norm_x;
                    }
                }
                let s = sign_with((p * p + q * q + r * r).sqrt(), p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if lo != m {
                        a[(k, k - 1)] = -a[(k, k - 1)];
                    }
                } else {
                    a[(k, k - 1)] = -s * norm_x;
                }
                p += s;
                let x = p / s;
                let y = q / s;
                let z = r / s;
                q /= p;
                r /= p;
                for j in k..=en {
                    let mut pj = a[(k, j)] + q * a[(k + 1, j)];
                    if k != en - 1 {
                        pj += r * a[(k + 2, j)];
                        a[(k + 2, j)] -= pj * z;
                    }
                    a[(k + 1, j)] -= pj * y;
                    a[(k, j)] -= pj * x;
                }
                let mmin = en.min(k + 3);
                for i in lo..=mmin {
                    let mut pi = x * a[(i, k)] + y * a[(i, k + 1)];
                    if k != en - 1 {
                        pi += z * a[(i, k + 2)];
                        a[(i, k + 2)] -= pi * r;
                    }
                    a[(i, k + 1)] -= pi * q;
                    a[(i, k)] -= pi;
                }
            }
        }
    }
    Some(out)
}

fn is_hessenberg_real(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    (0..n).all(|j| (j + 2..n).all(|i| m[(i, j)] == 0.0))
}

/// Eigenvalues of a general real square matrix: Hessenberg reduction
/// (skipped when the input already is one) followed by double-shift QR.
/// A stalled double-shift run is retried on the complexified matrix,
/// whose single-shift dynamics do not share the failure mode.
pub(crate) fn real_eigenvalues(m: &DMatrix<f64>, max_sweeps: usize) -> Option<Vec<C64>> {
    let h = if is_hessenberg_real(m) {
        m.clone()
    } else {
        nalgebra::linalg::Hessenberg::new(m.clone()).unpack_h()
    };
    let mut real_route = h.clone();
    if let Some(values) = hessenberg_eigenvalues(&mut real_route, max_sweeps) {
        return Some(values);
    }
    let mut complex_route = h.map(|x| C64::new(x, 0.0));
    complex_hessenberg_eigenvalues(&mut complex_route, max_sweeps)
}

fn cabs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Givens pair (c real, s complex) with [c s; -conj(s) c]^H applied from
/// the left mapping (a, b) to (r, 0).
fn zrotg(a: C64, b: C64) -> (f64, C64, C64) {
    if b == C64::new(0.0, 0.0) {
        return (1.0, C64::new(0.0, 0.0), a);
    }
    if a == C64::new(0.0, 0.0) {
        return (0.0, C64::new(1.0, 0.0), b);
    }
    let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let alpha = a / a.norm();
    let c = a.norm() / norm;
    let s = alpha * b.conj() / norm;
    (c, s, alpha * norm)
}

/// Both roots of the 2x2 block [[a, b], [c, d]], product-form stable.
fn eig2x2(a: C64, b: C64, c: C64, d: C64) -> (C64, C64) {
    let tr = a + d;
    let mid = 0.5 * tr;
    let det = a * d - b * c;
    let disc = (mid * mid - det).sqrt();
    let l1 = if (mid + disc).norm() >= (mid - disc).norm() {
        mid + disc
    } else {
        mid - disc
    };
    let l2 = if l1.norm() > 0.0 { det / l1 } else { tr - l1 };
    (l1, l2)
}

/// Eigenvalues of a complex upper-Hessenberg matrix by explicit
/// single-shift (Wilkinson) QR sweeps with Givens rotations.
pub(crate) fn complex_hessenberg_eigenvalues(
    h: &mut DMatrix<C64>,
    max_sweeps: usize,
) -> Option<Vec<C64>> {
    let n = h.nrows();
    let mut out: Vec<C64> = Vec::with_capacity(n);
    if n == 0 {
        return Some(out);
    }
    let eps = f64::EPSILON;
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += cabs1(h[(i, j)]);
        }
    }
    if anorm == 0.0 {
        return Some(vec![C64::new(0.0, 0.0); n]);
    }

    let mut sweeps = 0usize;
    let mut en = n - 1;
    'outer: loop {
        let mut its = 0usize;
        loop {
            let mut lo = 0usize;
            for l in (1..=en).rev() {
                let mut s = cabs1(h[(l - 1, l - 1)]) + cabs1(h[(l, l)]);
                if s == 0.0 {
                    s = anorm;
                }
                if cabs1(h[(l, l - 1)]) <= eps * s {
                    h[(l, l - 1)] = C64::new(0.0, 0.0);
                    lo = l;
                    break;
                }
            }

            if lo == en {
                out.push(h[(en, en)]);
                if en == 0 {
                    break 'outer;
                }
                en -= 1;
                break;
            }
            if lo + 1 == en {
                let (l1, l2) = eig2x2(
                    h[(en - 1, en - 1)],
                    h[(en - 1, en)],
                    h[(en, en - 1)],
                    h[(en, en)],
                );
                out.push(l1);
                out.push(l2);
                if en == 1 {
                    break 'outer;
                }
                en -= 2;
                break;
            }

            if its == WINDOW_SWEEP_CAP || sweeps >= max_sweeps {
                return None;
            }
            let shift = if its > 0 && its % 10 == 0 {
                // Alternating exceptional shifts, as in the real kernel.
                let kick = 0.75 * cabs1(h[(en, en - 1)]);
                if (its / 10) % 2 == 1 {
                    h[(en, en)] + C64::new(kick, 0.0)
                } else {
                    h[(en, en)] + C64::new(0.0, kick)
                }
            } else {
                let (l1, l2) = eig2x2(
                    h[(en - 1, en - 1)],
                    h[(en - 1, en)],
                    h[(en, en - 1)],
                    h[(en, en)],
                );
                let d = h[(en, en)];
                if (l1 - d).norm() <= (l2 - d).norm() {
                    l1
                } else {
                    l2
                }
            };
            its += 1;
            sweeps += 1;

            for i in lo..=en {
                h[(i, i)] -= shift;
            }
            // QR: zero the window subdiagonal with stored rotations.
            let mut rots = Vec::with_capacity(en - lo);
            for k in lo..en {
                let (c, s, r) = zrotg(h[(k, k)], h[(k + 1, k)]);
                h[(k, k)] = r;
                h[(k + 1, k)] = C64::new(0.0, 0.0);
                for j in k + 1..=en {
                    let t1 = C64::new(c, 0.0) * h[(k, j)] + s * h[(k + 1, j)];
                    h[(k + 1, j)] = -s.conj() * h[(k, j)] + C64::new(c, 0.0) * h[(k + 1, j)];
                    h[(k, j)] = t1;
                }
                rots.push((c, s));
            }
            // RQ: apply the adjoint rotations on the right.
            for (idx, &(c, s)) in rots.iter().enumerate() {
                let k = lo + idx;
                for i in lo..=(k + 1).min(en) {
                    let t1 = C64::new(c, 0.0) * h[(i, k)] + s.conj() * h[(i, k + 1)];
                    h[(i, k + 1)] = -s * h[(i, k)] + C64::new(c, 0.0) * h[(i, k + 1)];
                    h[(i, k)] = t1;
                }
            }
            for i in lo..=en {
                h[(i, i)] += shift;
            }
        }
    }
    Some(out)
}

fn is_hessenberg_complex(m: &DMatrix<C64>) -> bool {
    let n = m.nrows();
    (0..n).all(|j| (j + 2..n).all(|i| m[(i, j)] == C64::new(0.0, 0.0)))
}

/// Eigenvalues of a general complex square matrix.
pub(crate) fn complex_eigenvalues(m: &DMatrix<C64>, max_sweeps: usize) -> Option<Vec<C64>> {
    let mut h = if is_hessenberg_complex(m) {
        m.clone()
    } else {
        nalgebra::linalg::Hessenberg::new(m.clone()).unpack_h()
    };
    complex_hessenberg_eigenvalues(&mut h, max_sweeps)
}
