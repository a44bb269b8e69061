//! Resolvent-norm fields on rectangular grids: smallest singular values
//! of the shifted operator, sublevel-set component analysis with a
//! merge-threshold matrix between eigenvalue clusters, and level-line
//! extraction.

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use std::collections::VecDeque;

use crate::error::Error;
use crate::linalg::{self, TriDiag, TriDiagLu};
use crate::model::LatticeOperator;
use crate::spectral;
use crate::Result;

type C64 = Complex<f64>;

/// Iteration cap before the power iteration hands off to the dense
/// route.
const POWER_ITER_CAP: usize = 200;
/// Consecutive stalls of the singular value estimate that count as
/// convergence.
const STALL_RUNS: usize = 3;
/// Relative stall threshold per iteration.
const STALL_TOL: f64 = 1e-14;

/// Rectangular sampling window in the complex plane. Samples are stored
/// row-major: index = iy * nx + ix, with the real part increasing along
/// a row and the imaginary part increasing across rows.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self> {
        let bounds = [re_min, re_max, im_min, im_max];
        if bounds.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidGrid {
                reason: "bounds must be finite",
            });
        }
        if !(re_min < re_max) || !(im_min < im_max) {
            return Err(Error::InvalidGrid {
                reason: "window must have positive extent",
            });
        }
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid {
                reason: "each axis needs at least two samples",
            });
        }
        Ok(GridSpec {
            re_min,
            re_max,
            im_min,
            im_max,
            nx,
            ny,
        })
    }

    /// The window [-1.5, 1.5]^2 at 201 samples per axis.
    pub fn default_window() -> Self {
        GridSpec::new(-1.5, 1.5, -1.5, 1.5, 201, 201).expect("static bounds")
    }

    pub fn dx(&self) -> f64 {
        (self.re_max - self.re_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.im_max - self.im_min) / (self.ny - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, ix: usize, iy: usize) -> C64 {
        // The last row and column snap to the stated bounds; the step
        // form can overshoot them by an ulp, taking the sample outside
        // the window it defines.
        let re = if ix + 1 == self.nx {
            self.re_max
        } else {
            self.re_min + self.dx() * ix as f64
        };
        let im = if iy + 1 == self.ny {
            self.im_max
        } else {
            self.im_min + self.dy() * iy as f64
        };
        C64::new(re, im)
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    /// Nearest sample to z, clamped to the window.
    pub fn nearest(&self, z: C64) -> (usize, usize) {
        let fx = ((z.re - self.re_min) / self.dx()).round();
        let fy = ((z.im - self.im_min) / self.dy()).round();
        let ix = (fx.max(0.0) as usize).min(self.nx - 1);
        let iy = (fy.max(0.0) as usize).min(self.ny - 1);
        (ix, iy)
    }
}

/// Sampled field of smallest singular values of zI - Q.
#[derive(Debug, Clone)]
pub struct ResolventField {
    pub grid: GridSpec,
    /// Row-major samples, grid.len() entries.
    pub values: Vec<f64>,
}

impl ResolventField {
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }
}

/// Smallest singular value of zI - Q through the compact route: inverse
/// power iteration on the normal equations with the tridiagonal LU,
/// with a dense handoff when the iteration fails to settle.
pub fn sigma_min(op: &LatticeOperator, z: C64) -> f64 {
    let tri = TriDiag::from_real(&op.sub(), op.n(), &op.sup());
    let shifted = tri.shifted(z);
    let lu = TriDiagLu::factor(&shifted, true);
    let n = tri.n();

    let mut v = linalg::iteration_seed(n);
    let mut previous = f64::INFINITY;
    let mut stall = 0;
    for _ in 0..POWER_ITER_CAP {
        let mut w = v.clone();
        lu.solve_adjoint(&mut w);
        lu.solve(&mut w);
        let norm = w.norm();
        if !norm.is_finite() || norm == 0.0 {
            break;
        }
        v = w / C64::new(norm, 0.0);
        let sigma = shifted.apply(&v).norm();
        if (sigma - previous).abs() <= STALL_TOL * sigma.max(f64::MIN_POSITIVE) {
            stall += 1;
            if stall >= STALL_RUNS {
                return sigma;
            }
        } else {
            stall = 0;
        }
        previous = sigma;
    }
    sigma_min_dense(op, z)
}

/// Smallest singular value of zI - Q through a full dense decomposition.
/// Kept independent of the compact route so the two can cross-check
/// each other.
pub fn sigma_min_dense(op: &LatticeOperator, z: C64) -> f64 {
    let n = op.n();
    let mut m = op.entries().map(|x| C64::new(-x, 0.0));
    for i in 0..n {
        m[(i, i)] += z;
    }
    nalgebra::linalg::SVD::new(m, false, false)
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Samples sigma_min over the grid, in parallel, in row-major order.
pub fn resolvent_field(op: &LatticeOperator, grid: &GridSpec) -> ResolventField {
    let nx = grid.nx;
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| sigma_min(op, grid.point(idx % nx, idx / nx)))
        .collect();
    ResolventField {
        grid: grid.clone(),
        values,
    }
}

/// A group of eigenvalues closer together than the grid can resolve,
/// tracked as one unit by the component analysis.
#[derive(Debug, Clone)]
pub struct Cluster {
    /// Indices into the sorted spectrum of the operator.
    pub members: Vec<usize>,
    pub centroid: C64,
    /// Row-major index of the sample nearest the centroid.
    pub representative: usize,
}

/// A cluster whose representative sample was not inside the sublevel
/// set at some threshold; such clusters count as separate from
/// everything at that threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct UncoveredCluster {
    pub cluster: usize,
    pub epsilon: f64,
    /// Field value at the representative sample.
    pub value: f64,
}

/// Connected-component analysis of the sublevel sets {z : s(z) < eps}
/// across a descending threshold ladder.
#[derive(Debug, Clone)]
pub struct ComponentReport {
    pub ladder: Vec<f64>,
    /// Sublevel component count per ladder entry.
    pub component_counts: Vec<usize>,
    pub clusters: Vec<Cluster>,
    /// Component label of each cluster per ladder entry; None when the
    /// representative sample is uncovered.
    pub cluster_components: Vec<Vec<Option<usize>>>,
    /// Entry (i, j) is the largest ladder threshold at which clusters i
    /// and j sit in distinct components, or zero if they never separate
    /// on the ladder.
    pub merge_matrix: DMatrix<f64>,
    pub uncovered: Vec<UncoveredCluster>,
}

fn validate_ladder(ladder: &[f64]) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::InvalidLadder);
    }
    for pair in ladder.windows(2) {
        if !(pair[1] < pair[0]) {
            return Err(Error::InvalidLadder);
        }
    }
    if ladder.iter().any(|&e| !e.is_finite() || e <= 0.0) {
        return Err(Error::InvalidLadder);
    }
    Ok(())
}

/// The thresholds 1e-1 down to 1e-8 by decades.
pub fn default_ladder() -> Vec<f64> {
    (1..=8).map(|k| 10f64.powi(-k)).collect()
}

/// Labels 4-connected components of `mask`, row-major. Returns one
/// label per sample (usize::MAX off the mask) and the component count.
fn label_components(grid: &GridSpec, mask: &[bool]) -> (Vec<usize>, usize) {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut labels = vec![usize::MAX; mask.len()];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if !mask[start] || labels[start] != usize::MAX {
            continue;
        }
        labels[start] = next;
        queue.push_back(start);
        while let Some(idx) = queue.pop_front() {
            let (ix, iy) = (idx % nx, idx / nx);
            let mut visit = |jx: usize, jy: usize| {
                let j = jy * nx + jx;
                if mask[j] && labels[j] == usize::MAX {
                    labels[j] = next;
                    queue.push_back(j);
                }
            };
            if ix > 0 {
                visit(ix - 1, iy);
            }
            if ix + 1 < nx {
                visit(ix + 1, iy);
            }
            if iy > 0 {
                visit(ix, iy - 1);
            }
            if iy + 1 < ny {
                visit(ix, iy + 1);
            }
        }
        next += 1;
    }
    (labels, next)
}

/// Single-linkage grouping of eigenvalues that fall within twice the
/// grid step of each other.
fn cluster_eigenvalues(grid: &GridSpec, eigenvalues: &[C64]) -> Result<Vec<Cluster>> {
    for q in eigenvalues {
        if !grid.contains(*q) {
            return Err(Error::EigenvalueOutsideGrid { re: q.re, im: q.im });
        }
    }
    let n = eigenvalues.len();
    let radius = 2.0 * grid.dx().max(grid.dy());
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (eigenvalues[i] - eigenvalues[j]).norm() <= radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_to_group: std::collections::HashMap<usize, usize> =
        std::collections::HashMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let slot = *root_to_group.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(i);
    }
    groups.sort_by(|a, b| a[0].cmp(&b[0]));

    Ok(groups
        .into_iter()
        .map(|members| {
            let centroid = members.iter().map(|&i| eigenvalues[i]).sum::<C64>()
                / C64::new(members.len() as f64, 0.0);
            let (ix, iy) = grid.nearest(centroid);
            Cluster {
                members,
                centroid,
                representative: grid.index(ix, iy),
            }
        })
        .collect())
}

/// Runs the sublevel component analysis of a sampled field against the
/// operator's eigenvalue clusters.
pub fn component_report(
    op: &LatticeOperator,
    field: &ResolventField,
    ladder: &[f64],
) -> Result<ComponentReport> {
    validate_ladder(ladder)?;
    let spectrum = spectral::eigenvalues(op)?;
    let clusters = cluster_eigenvalues(&field.grid, &spectrum.eigenvalues)?;
    let k = clusters.len();

    let mut component_counts = Vec::with_capacity(ladder.len());
    let mut cluster_components = Vec::with_capacity(ladder.len());
    let mut uncovered = Vec::new();
    for &eps in ladder {
        let mask: Vec<bool> = field.values.iter().map(|&s| s < eps).collect();
        let (labels, count) = label_components(&field.grid, &mask);
        component_counts.push(count);
        let mut row = Vec::with_capacity(k);
        for (c, cluster) in clusters.iter().enumerate() {
            let idx = cluster.representative;
            if mask[idx] {
                row.push(Some(labels[idx]));
            } else {
                row.push(None);
                uncovered.push(UncoveredCluster {
                    cluster: c,
                    epsilon: eps,
                    value: field.values[idx],
                });
            }
        }
        cluster_components.push(row);
    }

    // Sublevel sets shrink with the threshold, so separation is
    // monotone: the first (largest) threshold that separates a pair is
    // its merge threshold. An uncovered representative separates its
    // cluster from everything at that threshold.
    let mut merge_matrix = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i + 1..k {
            let mut merge = 0.0;
            for (l, &eps) in ladder.iter().enumerate() {
                let (a, b) = (cluster_components[l][i], cluster_components[l][j]);
                let together = matches!((a, b), (Some(x), Some(y)) if x == y);
                if !together {
                    merge = eps;
                    break;
                }
            }
            merge_matrix[(i, j)] = merge;
            merge_matrix[(j, i)] = merge;
        }
    }

    Ok(ComponentReport {
        ladder: ladder.to_vec(),
        component_counts,
        clusters,
        cluster_components,
        merge_matrix,
        uncovered,
    })
}

/// A grid edge holding at most one level-line crossing: either the
/// horizontal edge from sample (ix, iy) to (ix+1, iy) or the vertical
/// edge from (ix, iy) to (ix, iy+1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum GridEdge {
    H(usize, usize),
    V(usize, usize),
}

/// Crossing point on an edge, interpolated in a fixed orientation so
/// both adjacent cells compute bit-identical coordinates.
fn edge_crossing(field: &ResolventField, epsilon: f64, edge: GridEdge) -> C64 {
    let grid = &field.grid;
    let ((ax, ay), (bx, by)) = match edge {
        GridEdge::H(ix, iy) => ((ix, iy), (ix + 1, iy)),
        GridEdge::V(ix, iy) => ((ix, iy), (ix, iy + 1)),
    };
    let (va, vb) = (field.value(ax, ay), field.value(bx, by));
    let t = (epsilon - va) / (vb - va);
    let (pa, pb) = (grid.point(ax, ay), grid.point(bx, by));
    pa + (pb - pa) * C64::new(t, 0.0)
}

/// Marching-squares pass: every cell contributes up to two edge pairs,
/// with saddles resolved by the cell-center mean. Cells are scanned
/// row-major, so the output order is deterministic.
fn crossing_pairs(field: &ResolventField, epsilon: f64) -> Vec<(GridEdge, GridEdge)> {
    let grid = &field.grid;
    let mut pairs = Vec::new();
    for iy in 0..grid.ny - 1 {
        for ix in 0..grid.nx - 1 {
            // corners counterclockwise from (ix, iy); edge e joins
            // corner e to corner (e + 1) % 4
            let v = [
                field.value(ix, iy),
                field.value(ix + 1, iy),
                field.value(ix + 1, iy + 1),
                field.value(ix, iy + 1),
            ];
            let edge = |e: usize| -> GridEdge {
                match e {
                    0 => GridEdge::H(ix, iy),
                    1 => GridEdge::V(ix + 1, iy),
                    2 => GridEdge::H(ix, iy + 1),
                    _ => GridEdge::V(ix, iy),
                }
            };
            let mut case = 0usize;
            for (bit, &val) in v.iter().enumerate() {
                if val < epsilon {
                    case |= 1 << bit;
                }
            }
            if case == 0 || case == 15 {
                continue;
            }
            let mut emit = |ea: usize, eb: usize| pairs.push((edge(ea), edge(eb)));
            match case {
                1 | 14 => emit(3, 0),
                2 | 13 => emit(0, 1),
                4 | 11 => emit(1, 2),
                8 | 7 => emit(2, 3),
                3 | 12 => emit(3, 1),
                6 | 9 => emit(0, 2),
                5 | 10 => {
                    let center = v.iter().sum::<f64>() / 4.0;
                    let center_in = center < epsilon;
                    // case 5 has corners 0 and 2 inside; case 10 has 1
                    // and 3
                    if (case == 5) == center_in {
                        emit(3, 2);
                        emit(0, 1);
                    } else {
                        emit(3, 0);
                        emit(1, 2);
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    pairs
}

/// Level-line segments of the field at one threshold.
pub fn contour_segments(field: &ResolventField, epsilon: f64) -> Vec<(C64, C64)> {
    crossing_pairs(field, epsilon)
        .into_iter()
        .map(|(a, b)| {
            (
                edge_crossing(field, epsilon, a),
                edge_crossing(field, epsilon, b),
            )
        })
        .collect()
}

/// Level lines chained into polylines. Closed loops repeat their first
/// point at the end; open chains terminate at the window boundary.
pub fn contour_polylines(field: &ResolventField, epsilon: f64) -> Vec<Vec<C64>> {
    let pairs = crossing_pairs(field, epsilon);
    let mut by_edge: std::collections::HashMap<GridEdge, Vec<usize>> =
        std::collections::HashMap::new();
    for (i, &(a, b)) in pairs.iter().enumerate() {
        by_edge.entry(a).or_default().push(i);
        by_edge.entry(b).or_default().push(i);
    }

    let mut visited = vec![false; pairs.len()];
    let mut polylines = Vec::new();
    for seed in 0..pairs.len() {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        let mut chain: VecDeque<GridEdge> = VecDeque::new();
        chain.push_back(pairs[seed].0);
        chain.push_back(pairs[seed].1);

        // grow forward from the tail, then backward from the head
        for forward in [true, false] {
            loop {
                let (end, far) = if forward {
                    (*chain.back().unwrap(), *chain.front().unwrap())
                } else {
                    (*chain.front().unwrap(), *chain.back().unwrap())
                };
                let next = by_edge
                    .get(&end)
                    .into_iter()
                    .flatten()
                    .copied()
                    .find(|&i| !visited[i]);
                let Some(i) = next else { break };
                visited[i] = true;
                let (a, b) = pairs[i];
                let other = if a == end { b } else { a };
                if forward {
                    chain.push_back(other);
                } else {
                    chain.push_front(other);
                }
                if other == far {
                    break;
                }
            }
        }

        polylines.push(
            chain
                .iter()
                .map(|&e| edge_crossing(field, epsilon, e))
                .collect(),
        );
    }
    polylines
}
