//! Serialization of analysis results to CSV and JSON documents. CSV
//! floats carry 17 significant digits so values round-trip exactly;
//! JSON documents are pretty-printed, end with a newline, and carry a
//! schema_version field.

use nalgebra::{Complex, DMatrix};
use serde::Serialize;
use std::fmt::Write as _;

use crate::metric::{HermitizationResult, MetricSolution};
use crate::model::{LatticeOperator, Word};
use crate::phase::{PhaseTableRow, ReducedModel};
use crate::pseudospectrum::{self, ComponentReport, ResolventField};
use crate::spectral::{SampleStatus, SpectrumClassification, SweepResult};

type C64 = Complex<f64>;

pub const SCHEMA_VERSION: &str = "1";

/// Full-precision float field: 17 significant digits.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn finish_json<T: Serialize>(doc: &T) -> String {
    let mut out = serde_json::to_string_pretty(doc).expect("documents serialize");
    out.push('\n');
    out
}

#[derive(Serialize)]
struct JsonComplex {
    re: f64,
    im: f64,
}

impl From<C64> for JsonComplex {
    fn from(z: C64) -> Self {
        JsonComplex { re: z.re, im: z.im }
    }
}

fn complex_row_major(m: &DMatrix<C64>) -> Vec<JsonComplex> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)].into());
        }
    }
    out
}

/// Dense complex matrix CSV: each entry becomes a re,im column pair.
fn complex_matrix_csv(m: &DMatrix<C64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .flat_map(|j| [fmt(m[(i, j)].re), fmt(m[(i, j)].im)])
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn status_name(status: SampleStatus) -> &'static str {
    match status {
        SampleStatus::Clean => "clean",
        SampleStatus::Defective => "defective",
        SampleStatus::LowConfidence => "low-confidence",
        SampleStatus::LargeCoupling => "large-coupling",
    }
}

#[derive(Serialize)]
struct OperatorDesc {
    n: usize,
    word: String,
    t: f64,
}

impl From<&LatticeOperator> for OperatorDesc {
    fn from(op: &LatticeOperator) -> Self {
        OperatorDesc {
            n: op.n(),
            word: op.word().to_string(),
            t: op.t(),
        }
    }
}

#[derive(Serialize)]
struct MatrixDoc {
    schema_version: &'static str,
    n: usize,
    word: String,
    t: f64,
    sub: Vec<f64>,
    sup: Vec<f64>,
}

pub fn matrix_json(op: &LatticeOperator) -> String {
    finish_json(&MatrixDoc {
        schema_version: SCHEMA_VERSION,
        n: op.n(),
        word: op.word().to_string(),
        t: op.t(),
        sub: op.sub(),
        sup: op.sup(),
    })
}

/// Dense real entries, one CSV row per matrix row.
pub fn matrix_csv(op: &LatticeOperator) -> String {
    let m = op.entries();
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt(m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct SweepDoc {
    schema_version: &'static str,
    n: usize,
    word: String,
    t_grid: Vec<f64>,
    trajectories: Vec<Vec<JsonComplex>>,
    real_count_per_t: Vec<usize>,
    statuses: Vec<&'static str>,
}

pub fn sweep_json(n: usize, word: &Word, sweep: &SweepResult) -> String {
    finish_json(&SweepDoc {
        schema_version: SCHEMA_VERSION,
        n,
        word: word.to_string(),
        t_grid: sweep.t_grid.clone(),
        trajectories: sweep
            .trajectories
            .iter()
            .map(|tr| tr.iter().map(|&z| z.into()).collect())
            .collect(),
        real_count_per_t: sweep.real_count_per_t.clone(),
        statuses: sweep.statuses.iter().map(|&s| status_name(s)).collect(),
    })
}

/// One row per coupling sample: t, the trajectory values, and the real
/// count.
pub fn sweep_csv(sweep: &SweepResult) -> String {
    let n = sweep.trajectories.len();
    let mut out = String::from("t");
    for k in 1..=n {
        let _ = write!(out, ",re_q{k},im_q{k}");
    }
    out.push_str(",n_real\n");
    for (i, &t) in sweep.t_grid.iter().enumerate() {
        out.push_str(&fmt(t));
        for trajectory in &sweep.trajectories {
            let _ = write!(out, ",{},{}", fmt(trajectory[i].re), fmt(trajectory[i].im));
        }
        let _ = writeln!(out, ",{}", sweep.real_count_per_t[i]);
    }
    out
}

#[derive(Serialize)]
struct ClassificationDoc {
    schema_version: &'static str,
    n: usize,
    word: String,
    t: f64,
    tolerance_used: f64,
    n_real: usize,
    n_ghost: usize,
    real_eigenvalues: Vec<f64>,
    /// One representative per conjugate pair, positive imaginary part.
    ghost_pairs: Vec<JsonComplex>,
}

pub fn classification_json(op: &LatticeOperator, c: &SpectrumClassification) -> String {
    finish_json(&ClassificationDoc {
        schema_version: SCHEMA_VERSION,
        n: op.n(),
        word: op.word().to_string(),
        t: op.t(),
        tolerance_used: c.tolerance_used,
        n_real: c.n_real,
        n_ghost: c.n_ghost,
        real_eigenvalues: c.real_eigenvalues.clone(),
        ghost_pairs: c.ghost_pairs.iter().map(|&z| z.into()).collect(),
    })
}

/// Eigenvalue rows tagged real/ghost; ghost pairs expand to both
/// conjugate members.
pub fn classification_csv(c: &SpectrumClassification) -> String {
    let mut out = String::from("re,im,class\n");
    for &q in &c.real_eigenvalues {
        let _ = writeln!(out, "{},{},real", fmt(q), fmt(0.0));
    }
    for &z in &c.ghost_pairs {
        let _ = writeln!(out, "{},{},ghost", fmt(z.re), fmt(-z.im));
        let _ = writeln!(out, "{},{},ghost", fmt(z.re), fmt(z.im));
    }
    out
}

#[derive(Serialize)]
struct GridDoc {
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    nx: usize,
    ny: usize,
}

impl From<&pseudospectrum::GridSpec> for GridDoc {
    fn from(g: &pseudospectrum::GridSpec) -> Self {
        GridDoc {
            re_min: g.re_min,
            re_max: g.re_max,
            im_min: g.im_min,
            im_max: g.im_max,
            nx: g.nx,
            ny: g.ny,
        }
    }
}

/// Row-major field samples: header re_z, im_z, s.
pub fn field_csv(field: &ResolventField) -> String {
    let grid = &field.grid;
    let mut out = String::from("re_z,im_z,s\n");
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let z = grid.point(ix, iy);
            let _ = writeln!(
                out,
                "{},{},{}",
                fmt(z.re),
                fmt(z.im),
                fmt(field.value(ix, iy))
            );
        }
    }
    out
}

#[derive(Serialize)]
struct ClusterDoc {
    members: Vec<usize>,
    centroid: JsonComplex,
    representative: usize,
}

#[derive(Serialize)]
struct UncoveredDoc {
    cluster: usize,
    epsilon: f64,
    value: f64,
}

#[derive(Serialize)]
struct PseudospecDoc {
    schema_version: &'static str,
    operator: OperatorDesc,
    grid: GridDoc,
    values: Vec<f64>,
    ladder: Vec<f64>,
    component_counts: Vec<usize>,
    clusters: Vec<ClusterDoc>,
    cluster_components: Vec<Vec<Option<usize>>>,
    merge_matrix: Vec<Vec<f64>>,
    uncovered: Vec<UncoveredDoc>,
}

pub fn pseudospec_json(
    op: &LatticeOperator,
    field: &ResolventField,
    report: &ComponentReport,
) -> String {
    let k = report.clusters.len();
    let merge_matrix = (0..k)
        .map(|i| (0..k).map(|j| report.merge_matrix[(i, j)]).collect())
        .collect();
    finish_json(&PseudospecDoc {
        schema_version: SCHEMA_VERSION,
        operator: op.into(),
        grid: (&field.grid).into(),
        values: field.values.clone(),
        ladder: report.ladder.clone(),
        component_counts: report.component_counts.clone(),
        clusters: report
            .clusters
            .iter()
            .map(|c| ClusterDoc {
                members: c.members.clone(),
                centroid: c.centroid.into(),
                representative: c.representative,
            })
            .collect(),
        cluster_components: report.cluster_components.clone(),
        merge_matrix,
        uncovered: report
            .uncovered
            .iter()
            .map(|u| UncoveredDoc {
                cluster: u.cluster,
                epsilon: u.epsilon,
                value: u.value,
            })
            .collect(),
    })
}

#[derive(Serialize)]
struct ContourLevelDoc {
    epsilon: f64,
    /// Polylines as (re, im) pairs; closed loops repeat the first point.
    polylines: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize)]
struct ContoursDoc {
    schema_version: &'static str,
    operator: OperatorDesc,
    grid: GridDoc,
    contours: Vec<ContourLevelDoc>,
}

pub fn contours_json(op: &LatticeOperator, field: &ResolventField, ladder: &[f64]) -> String {
    let contours = ladder
        .iter()
        .map(|&epsilon| ContourLevelDoc {
            epsilon,
            polylines: pseudospectrum::contour_polylines(field, epsilon)
                .into_iter()
                .map(|line| line.into_iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        })
        .collect();
    finish_json(&ContoursDoc {
        schema_version: SCHEMA_VERSION,
        operator: op.into(),
        grid: (&field.grid).into(),
        contours,
    })
}

#[derive(Serialize)]
struct MetricDoc {
    schema_version: &'static str,
    n: usize,
    word: String,
    t: f64,
    kappa: Vec<f64>,
    /// Row-major entries.
    theta: Vec<JsonComplex>,
    residual: f64,
    min_eigenvalue: f64,
    condition_number: f64,
}

impl MetricDoc {
    fn build(op: &LatticeOperator, m: &MetricSolution) -> Self {
        MetricDoc {
            schema_version: SCHEMA_VERSION,
            n: op.n(),
            word: op.word().to_string(),
            t: op.t(),
            kappa: m.kappa.clone(),
            theta: complex_row_major(&m.theta),
            residual: m.residual,
            min_eigenvalue: m.min_eigenvalue,
            condition_number: m.condition_number,
        }
    }
}

pub fn metric_json(op: &LatticeOperator, m: &MetricSolution) -> String {
    finish_json(&MetricDoc::build(op, m))
}

/// The metric as a dense complex CSV (re,im column pairs).
pub fn metric_csv(m: &MetricSolution) -> String {
    complex_matrix_csv(&m.theta)
}

#[derive(Serialize)]
struct HermitizationDoc {
    #[serde(flatten)]
    metric: MetricDoc,
    omega: Vec<JsonComplex>,
    q_image: Vec<JsonComplex>,
    hermiticity_residual: f64,
    isospectrality_residual: f64,
    omega_condition_number: f64,
}

pub fn hermitization_json(
    op: &LatticeOperator,
    m: &MetricSolution,
    h: &HermitizationResult,
) -> String {
    finish_json(&HermitizationDoc {
        metric: MetricDoc::build(op, m),
        omega: complex_row_major(&h.omega),
        q_image: complex_row_major(&h.q_image),
        hermiticity_residual: h.hermiticity_residual,
        isospectrality_residual: h.isospectrality_residual,
        omega_condition_number: h.condition_number,
    })
}

#[derive(Serialize)]
struct HermitizationBlock {
    omega: Vec<JsonComplex>,
    q_image: Vec<JsonComplex>,
    hermiticity_residual: f64,
    isospectrality_residual: f64,
    omega_condition_number: f64,
}

#[derive(Serialize)]
struct ProjectDoc {
    schema_version: &'static str,
    n: usize,
    word: String,
    t: f64,
    reduced_dim: usize,
    real_eigenvalues: Vec<f64>,
    /// Row-major n by n entries.
    projector: Vec<JsonComplex>,
    /// Row-major n by reduced_dim entries.
    basis: Vec<JsonComplex>,
    q_reduced: Vec<JsonComplex>,
    theta_reduced: Vec<JsonComplex>,
    idempotency_residual: f64,
    commutation_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    hermitization: Option<HermitizationBlock>,
}

pub fn project_json(
    op: &LatticeOperator,
    model: &ReducedModel,
    hermitization: Option<&HermitizationResult>,
) -> String {
    finish_json(&ProjectDoc {
        schema_version: SCHEMA_VERSION,
        n: op.n(),
        word: op.word().to_string(),
        t: op.t(),
        reduced_dim: model.reduced_dim,
        real_eigenvalues: model.real_eigenvalues.clone(),
        projector: complex_row_major(&model.projector),
        basis: complex_row_major(&model.basis),
        q_reduced: complex_row_major(&model.q_reduced),
        theta_reduced: complex_row_major(&model.theta_reduced),
        idempotency_residual: model.idempotency_residual,
        commutation_residual: model.commutation_residual,
        hermitization: hermitization.map(|h| HermitizationBlock {
            omega: complex_row_major(&h.omega),
            q_image: complex_row_major(&h.q_image),
            hermiticity_residual: h.hermiticity_residual,
            isospectrality_residual: h.isospectrality_residual,
            omega_condition_number: h.condition_number,
        }),
    })
}

/// The compressed operator block as a dense complex CSV.
pub fn project_csv(model: &ReducedModel) -> String {
    complex_matrix_csv(&model.q_reduced)
}

#[derive(Serialize)]
struct PhaseRowDoc {
    index: u64,
    word: String,
    n_real_before: usize,
    n_real_after: usize,
}

#[derive(Serialize)]
struct PhaseTableDoc {
    schema_version: &'static str,
    n: usize,
    t0: f64,
    rows: Vec<PhaseRowDoc>,
}

pub fn phase_table_json(n: usize, t0: f64, rows: &[PhaseTableRow]) -> String {
    finish_json(&PhaseTableDoc {
        schema_version: SCHEMA_VERSION,
        n,
        t0,
        rows: rows
            .iter()
            .map(|r| PhaseRowDoc {
                index: r.index as u64,
                word: r.word.clone(),
                n_real_before: r.n_real_before,
                n_real_after: r.n_real_after,
            })
            .collect(),
    })
}

pub fn phase_table_csv(rows: &[PhaseTableRow]) -> String {
    let mut out = String::from("index,word,n_real_before,n_real_after,t0\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.index,
            r.word,
            r.n_real_before,
            r.n_real_after,
            fmt(r.t0)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model;
    use crate::pseudospectrum::GridSpec;
    use crate::{metric, phase, spectral};
    use serde_json::Value;

    fn op(n: usize, w: &str, t: f64) -> LatticeOperator {
        model::build_operator(n, &Word::parse(w).unwrap(), t).unwrap()
    }

    fn parse(doc: &str) -> Value {
        assert!(doc.ends_with('\n'), "documents end with a newline");
        serde_json::from_str(doc).unwrap()
    }

    #[test]
    fn matrix_documents() {
        let q = op(2, "o", 0.1);
        let doc = parse(&matrix_json(&q));
        assert_eq!(doc["schema_version"], "1");
        assert_eq!(doc["n"], 2);
        assert_eq!(doc["word"], "o");
        assert_eq!(doc["sub"][0], 0.1);
        assert_eq!(doc["sup"][0], 0.9);

        let csv = matrix_csv(&q);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        for (i, line) in lines.iter().enumerate() {
            let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
            assert_eq!(fields.len(), 2);
            for (j, &x) in fields.iter().enumerate() {
                assert_eq!(x, q.entries()[(i, j)], "round-trip at ({i},{j})");
            }
        }
    }

    #[test]
    fn sweep_documents() {
        let word = Word::parse("o").unwrap();
        let sweep = spectral::sweep(2, &word, &[-0.1, 0.0, 0.1]).unwrap();
        let csv = sweep_csv(&sweep);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,re_q1,im_q1,re_q2,im_q2,n_real");
        assert_eq!(lines.len(), 4);
        let last: Vec<&str> = lines[3].split(',').collect();
        assert_eq!(last.len(), 6);
        assert_eq!(last[5], "2");
        assert_eq!(last[0].parse::<f64>().unwrap(), 0.1);

        let doc = parse(&sweep_json(2, &word, &sweep));
        assert_eq!(doc["statuses"][1], "defective");
        assert_eq!(doc["real_count_per_t"][2], 2);
        assert_eq!(doc["trajectories"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn classification_documents() {
        let q = op(2, "o", -0.1);
        let c = spectral::classify_operator(&q).unwrap();
        let csv = classification_csv(&c);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "re,im,class");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].ends_with(",ghost"));
        let neg: Vec<&str> = lines[1].split(',').collect();
        let pos: Vec<&str> = lines[2].split(',').collect();
        let a: f64 = neg[1].parse().unwrap();
        let b: f64 = pos[1].parse().unwrap();
        assert_eq!(a, -b, "conjugate members");

        let doc = parse(&classification_json(&q, &c));
        assert_eq!(doc["n_ghost"], 2);
        assert_eq!(doc["n_real"], 0);
        assert!(doc["ghost_pairs"][0]["im"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn field_and_report_documents() {
        let q = op(2, "o", 0.1);
        let grid = GridSpec::new(-1.0, 1.0, -1.0, 1.0, 5, 4).unwrap();
        let field = pseudospectrum::resolvent_field(&q, &grid);
        let csv = field_csv(&field);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "re_z,im_z,s");
        assert_eq!(lines.len(), 1 + 20);
        // row-major: the second sample advances along the real axis
        let first: Vec<f64> = lines[1].split(',').map(|f| f.parse().unwrap()).collect();
        let second: Vec<f64> = lines[2].split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(first[0], -1.0);
        assert_eq!(first[1], -1.0);
        assert!(second[0] > first[0]);
        assert_eq!(second[1], first[1]);

        // a finer grid keeps the two eigenvalues in separate clusters
        let fine = GridSpec::new(-1.0, 1.0, -1.0, 1.0, 21, 21).unwrap();
        let field = pseudospectrum::resolvent_field(&q, &fine);
        let report = pseudospectrum::component_report(&q, &field, &[0.5, 0.05]).unwrap();
        let doc = parse(&pseudospec_json(&q, &field, &report));
        assert_eq!(doc["grid"]["nx"], 21);
        assert_eq!(doc["ladder"][1], 0.05);
        assert_eq!(doc["values"].as_array().unwrap().len(), 441);
        assert_eq!(doc["merge_matrix"].as_array().unwrap().len(), 2);
        assert!(doc["clusters"][0]["centroid"]["re"].is_f64());
    }

    #[test]
    fn contour_document_lists_point_pairs() {
        let q = op(2, "e", 0.5);
        let grid = GridSpec::new(-1.0, 1.0, -1.0, 1.0, 41, 41).unwrap();
        let field = pseudospectrum::resolvent_field(&q, &grid);
        let doc = parse(&contours_json(&q, &field, &[0.2]));
        let level = &doc["contours"][0];
        assert_eq!(level["epsilon"], 0.2);
        let polylines = level["polylines"].as_array().unwrap();
        assert!(!polylines.is_empty());
        let first_point = polylines[0][0].as_array().unwrap();
        assert_eq!(first_point.len(), 2);
    }

    #[test]
    fn metric_and_hermitization_documents() {
        let q = op(2, "o", 0.1);
        let m = metric::metric_from_weights(&q, &[1.0, 1.0]).unwrap();
        let doc = parse(&metric_json(&q, &m));
        assert_eq!(doc["kappa"].as_array().unwrap().len(), 2);
        assert_eq!(doc["theta"].as_array().unwrap().len(), 4);
        assert!((doc["theta"][0]["re"].as_f64().unwrap() - 0.2).abs() < 1e-12);
        assert!(doc["condition_number"].as_f64().unwrap() > 1.0);

        let csv = metric_csv(&m);
        let first: Vec<f64> = csv
            .lines()
            .next()
            .unwrap()
            .split(',')
            .map(|f| f.parse().unwrap())
            .collect();
        assert_eq!(first.len(), 4);
        assert!((first[0] - 0.2).abs() < 1e-12);

        let omega = metric::factor_metric(&m.theta).unwrap();
        let h = metric::hermitize(&q, &omega).unwrap();
        let doc = parse(&hermitization_json(&q, &m, &h));
        assert_eq!(doc["omega"].as_array().unwrap().len(), 4);
        assert_eq!(doc["q_image"].as_array().unwrap().len(), 4);
        assert!(doc["hermiticity_residual"].as_f64().unwrap() < 1e-10);
        assert!(doc["theta"].is_array(), "metric fields flatten in");
    }

    #[test]
    fn project_document() {
        let q = op(10, "ooooe", -0.1);
        let model = phase::real_subspace_projector(&q).unwrap();
        let h = phase::reduced_hermitize(&model).unwrap();
        let doc = parse(&project_json(&q, &model, Some(&h)));
        assert_eq!(doc["reduced_dim"], 2);
        assert_eq!(doc["projector"].as_array().unwrap().len(), 100);
        assert_eq!(doc["basis"].as_array().unwrap().len(), 20);
        assert_eq!(doc["q_reduced"].as_array().unwrap().len(), 4);
        assert!(doc["hermitization"]["omega"].is_array());

        let without = parse(&project_json(&q, &model, None));
        assert!(without.get("hermitization").is_none());

        let csv = project_csv(&model);
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn phase_table_documents() {
        let rows = phase::classify_all_words(4, 0.1).unwrap();
        let csv = phase_table_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "index,word,n_real_before,n_real_after,t0");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0,oo,"));
        assert!(lines[4].starts_with("3,ee,"));

        let doc = parse(&phase_table_json(4, 0.1, &rows));
        assert_eq!(doc["rows"].as_array().unwrap().len(), 4);
        assert_eq!(doc["rows"][3]["word"], "ee");
        assert_eq!(doc["rows"][3]["n_real_after"], 4);
        assert_eq!(doc["t0"], 0.1);
    }
}
