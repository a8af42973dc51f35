//! Run orchestration, summaries, sweeps and file emission.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mlplast::driver::{self, Problem, RunReport};
use mlplast::geometry::BoundaryTag;
use mlplast::material::{von_mises, HardeningCurve};
use mlplast::nodegen;
use mlplast::verify::{self, ErrorNorm, RadialState, SegmentFront};

use crate::config::{ConfigError, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("solver failure: {0}")]
    Solver(mlplast::Error),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: mlplast::Error },
}

impl RunError {
    /// 1 for configuration problems, 2 for everything raised while solving.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Solver(_) | RunError::Output { .. } => 2,
        }
    }
}

/// Errors that only depend on the inputs count as configuration errors.
fn classify(e: mlplast::Error) -> RunError {
    use mlplast::Error as E;
    match e {
        E::InvalidDomain(_)
        | E::BoundaryUnderResolved { .. }
        | E::NodeLimitExceeded { .. }
        | E::InvalidBasis(_)
        | E::InvalidMaterial(_)
        | E::TooFewNodes { .. } => RunError::Config(ConfigError::Model(e)),
        other => RunError::Solver(other),
    }
}

/// Generates nodes, computes weights and factorizes the stiffness matrix.
pub fn prepare(cfg: &RunConfig) -> Result<Problem, RunError> {
    let domain = cfg.domain().map_err(classify)?;
    let nodes = nodegen::fill(&domain, cfg.spacing, cfg.seed).map_err(classify)?;
    let material = cfg.material().map_err(classify)?;
    Problem::new(&domain, nodes, &cfg.basis(), material).map_err(classify)
}

/// Result of one run.
#[derive(Debug)]
pub struct Outcome {
    pub problem: Problem,
    pub report: RunReport,
    pub summary: Summary,
    pub front_shape: Vec<SegmentFront>,
    /// Closed-form cylindrical components per node, when available.
    pub reference: Option<Vec<RadialState>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub case: String,
    pub nodes: usize,
    pub boundary_nodes: usize,
    pub spacing: f64,
    pub seed: u64,
    pub pressure: f64,
    pub load_steps: usize,
    pub iterations: Vec<usize>,
    pub return_mappings: usize,
    pub plastic_nodes: usize,
    pub max_displacement: f64,
    /// Edge averages over nodes tagged inner-pressure and outer-free.
    pub vms_inner: f64,
    pub vms_outer: f64,
    pub u_inner: f64,
    pub u_outer: f64,
    pub front_radius: Option<f64>,
    /// Why the front is missing, if it is.
    pub front_note: String,
    pub front_circularity: Option<f64>,
    pub front_reference: Option<f64>,
    pub error: Option<ErrorNorm>,
    pub max_relative_error: Option<f64>,
}

impl Summary {
    pub fn total_iterations(&self) -> usize {
        self.iterations.iter().sum()
    }

    pub fn mean_iterations(&self) -> f64 {
        self.total_iterations() as f64 / self.iterations.len().max(1) as f64
    }

    /// `key=value` lines.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("nan".to_string(), |x| x.to_string());
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        line("case", self.case.clone());
        line("nodes", self.nodes.to_string());
        line("boundary_nodes", self.boundary_nodes.to_string());
        line("h_mm", self.spacing.to_string());
        line("seed", self.seed.to_string());
        line("pressure_GPa", self.pressure.to_string());
        line("load_steps", self.load_steps.to_string());
        line(
            "picard_iterations",
            self.iterations.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","),
        );
        line("picard_iterations_total", self.total_iterations().to_string());
        line("picard_iterations_mean", self.mean_iterations().to_string());
        line("return_mappings", self.return_mappings.to_string());
        line("plastic_nodes", self.plastic_nodes.to_string());
        line("max_u_mm", self.max_displacement.to_string());
        line("vms_inner_GPa", self.vms_inner.to_string());
        line("vms_outer_GPa", self.vms_outer.to_string());
        line("u_inner_mm", self.u_inner.to_string());
        line("u_outer_mm", self.u_outer.to_string());
        line("front_radius_mm", opt(self.front_radius));
        if !self.front_note.is_empty() {
            line("front_note", self.front_note.clone());
        }
        line("front_circularity", opt(self.front_circularity));
        line("front_reference_mm", opt(self.front_reference));
        line("l2_error_mm", opt(self.error.map(|e| e.raw)));
        line("l2_error_per_node_mm", opt(self.error.map(|e| e.per_node)));
        line("max_relative_u_error", opt(self.max_relative_error));
        s
    }
}

fn edge_average(problem: &Problem, tag: BoundaryTag, value: impl Fn(usize) -> f64) -> f64 {
    let nodes = &problem.nodes;
    let (mut sum, mut count) = (0.0, 0usize);
    for i in 0..nodes.boundary_count {
        if nodes.tags[i] == tag || nodes.partners[i].is_some_and(|(t, _)| t == tag) {
            sum += value(i);
            count += 1;
        }
    }
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Closed-form radial state as a function of radius, if one applies.
fn reference_profile(cfg: &RunConfig) -> Option<(Box<dyn Fn(f64) -> mlplast::Result<RadialState>>, Option<f64>)> {
    if !cfg.is_plain_cylinder() {
        return None;
    }
    let (a, b, p, sy) = (cfg.inner_radius, cfg.outer_radius, cfg.pressure, cfg.yield_stress);
    let ec = cfg.material().ok()?.elastic;
    let perfect = matches!(cfg.curve(), HardeningCurve::Perfect { .. });
    if p <= verify::onset_pressure(a, b, sy) {
        return Some((Box::new(move |r| verify::elastic_reference(r, p, a, b, &ec)), None));
    }
    if !perfect {
        return None;
    }
    let c = verify::front_from_pressure(p, a, b, sy).ok()?.radius;
    Some((Box::new(move |r| verify::plastic_reference(r, c, a, b, sy, &ec)), Some(c)))
}

/// Runs the configured case without writing anything.
pub fn solve(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let problem = prepare(cfg)?;
    let load = cfg.load().map_err(classify)?;
    let report = driver::run(&problem, &load, &cfg.solver()).map_err(RunError::Solver)?;
    Ok(summarize(cfg, problem, report))
}

/// Post-processes a finished run.
pub fn summarize(cfg: &RunConfig, problem: Problem, report: RunReport) -> Outcome {
    let nodes = &problem.nodes;
    let stress = report.stresses();
    let eqps = report.eqps();
    let norm = |i: usize| report.displacement[i][0].hypot(report.displacement[i][1]);
    let vms = |i: usize| von_mises(&stress[i]);

    let plastic_nodes = eqps.iter().filter(|&&e| e > 0.0).count();
    let (front_radius, front_note, front_shape) = if plastic_nodes == 0 {
        (None, "no plastic nodes".to_string(), Vec::new())
    } else {
        let whole = verify::extract_front(&nodes.positions, &stress, &eqps, 0.0, 0.5 * std::f64::consts::PI);
        let shape = verify::front_shape(&nodes.positions, &stress, &eqps, cfg.front_segments).unwrap_or_default();
        match whole {
            Ok(f) => (Some(f.radius), String::new(), shape),
            Err(e) => (None, e.to_string(), shape),
        }
    };

    let (mut reference, mut error, mut max_relative_error, mut front_reference) = (None, None, None, None);
    if let Some((profile, c)) = reference_profile(cfg) {
        front_reference = c;
        let states: mlplast::Result<Vec<RadialState>> = nodes
            .positions
            .iter()
            .map(|p| profile(p[0].hypot(p[1])))
            .collect();
        if let Ok(states) = states {
            let exact: Vec<[f64; 2]> = nodes
                .positions
                .iter()
                .zip(&states)
                .map(|(p, s)| {
                    let r = p[0].hypot(p[1]);
                    [s.displacement * p[0] / r, s.displacement * p[1] / r]
                })
                .collect();
            error = verify::error_norm(&report.displacement, &exact).ok();
            max_relative_error = Some(
                report
                    .displacement
                    .iter()
                    .zip(&exact)
                    .map(|(u, e)| (u[0] - e[0]).hypot(u[1] - e[1]) / e[0].hypot(e[1]))
                    .fold(0.0, f64::max),
            );
            reference = Some(states);
        }
    }

    let summary = Summary {
        case: cfg.case.to_string(),
        nodes: nodes.len(),
        boundary_nodes: nodes.boundary_count,
        spacing: cfg.spacing,
        seed: cfg.seed,
        pressure: cfg.pressure,
        load_steps: cfg.load_steps,
        iterations: report.steps.iter().map(|s| s.iterations).collect(),
        return_mappings: report.return_mappings,
        plastic_nodes,
        max_displacement: report.max_displacement(),
        vms_inner: edge_average(&problem, BoundaryTag::InnerPressure, vms),
        vms_outer: edge_average(&problem, BoundaryTag::OuterFree, vms),
        u_inner: edge_average(&problem, BoundaryTag::InnerPressure, norm),
        u_outer: edge_average(&problem, BoundaryTag::OuterFree, norm),
        front_radius,
        front_note,
        front_circularity: verify::circularity(&front_shape),
        front_reference,
        error,
        max_relative_error,
    };
    Outcome { problem, report, summary, front_shape, reference }
}

fn output<T>(path: &Path, r: mlplast::Result<T>) -> Result<T, RunError> {
    r.map_err(|source| RunError::Output { path: path.to_path_buf(), source })
}

/// Writes the artifacts of a finished run into `cfg.out_dir`; returns the
/// written paths.
pub fn write_artifacts(cfg: &RunConfig, outcome: &Outcome) -> Result<Vec<PathBuf>, RunError> {
    let dir = &cfg.out_dir;
    output(dir, std::fs::create_dir_all(dir).map_err(Into::into))?;
    let mut written = Vec::new();
    let nodes = &outcome.problem.nodes;
    let report = &outcome.report;
    let stress = report.stresses();

    let path = dir.join("fields.csv");
    let eqps = report.eqps();
    output(
        &path,
        mlplast::elastic::write_field_csv(&path, nodes, &report.displacement, &stress, Some(&eqps)),
    )?;
    written.push(path);

    let path = dir.join("summary.txt");
    output(&path, std::fs::write(&path, outcome.summary.to_text()).map_err(Into::into))?;
    written.push(path);

    let path = dir.join("trace.csv");
    output(&path, report.write_trace_csv(&path))?;
    written.push(path);

    let path = dir.join("nodes.csv");
    output(&path, nodes.write_csv(&path))?;
    written.push(path);

    if !outcome.front_shape.is_empty() {
        let path = dir.join("front_shape.csv");
        output(&path, verify::write_front_shape_csv(&path, &outcome.front_shape))?;
        written.push(path);
    }

    if let Some(reference) = &outcome.reference {
        let path = dir.join("comparison.csv");
        let samples = verify::radial_comparison(&nodes.positions, &stress, &report.displacement, reference);
        output(&path, samples.and_then(|s| verify::write_comparison_csv(&path, &s)))?;
        written.push(path);
    }

    if cfg.export_matrix {
        let path = dir.join("matrix.mtx");
        output(&path, outcome.problem.system().export_matrix(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// Solves and writes all artifacts.
pub fn run_case(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let outcome = solve(cfg)?;
    write_artifacts(cfg, &outcome)?;
    Ok(outcome)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Spacing,
    Seed,
    LoadSteps,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Spacing => "h",
            SweepAxis::Seed => "seed",
            SweepAxis::LoadSteps => "n-load",
        }
    }

    fn apply(self, cfg: &mut RunConfig, value: f64) {
        match self {
            SweepAxis::Spacing => cfg.spacing = value,
            SweepAxis::Seed => cfg.seed = value as u64,
            SweepAxis::LoadSteps => cfg.load_steps = value as usize,
        }
    }
}

/// Axis and values, e.g. `h=4,2,1`, `seed=1..10` or `n-load=5,10,25`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl FromStr for SweepSpec {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let bad = |message: String| ConfigError::Value { key: "sweep".into(), message };
        let (axis, list) = s.split_once('=').ok_or_else(|| bad(format!("expected axis=values, got `{s}`")))?;
        let axis = match axis.trim() {
            "h" => SweepAxis::Spacing,
            "seed" => SweepAxis::Seed,
            "n-load" | "n_load" => SweepAxis::LoadSteps,
            other => return Err(bad(format!("unknown axis `{other}` (expected h, seed or n-load)"))),
        };
        let values: Vec<f64> = if let Some((lo, hi)) = list.split_once("..") {
            let parse = |t: &str| t.trim().parse::<u64>().map_err(|e| bad(format!("`{t}`: {e}")));
            let (lo, hi) = (parse(lo)?, parse(hi)?);
            (lo..=hi).map(|v| v as f64).collect()
        } else {
            list.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| bad(format!("`{t}`: {e}"))))
                .collect::<Result<_, _>>()?
        };
        if values.len() < 2 {
            return Err(bad("a sweep needs at least two values".into()));
        }
        if axis != SweepAxis::Spacing && values.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
            return Err(bad(format!("{} values must be non-negative integers", axis.as_str())));
        }
        Ok(SweepSpec { axis, values })
    }
}

/// One sweep run; `Err` holds the failure message.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub result: Result<Summary, String>,
}

/// Runs the configuration once per value. Failed runs are recorded and the
/// sweep continues; configuration errors of individual values count as
/// failures too.
pub fn sweep(cfg: &RunConfig, spec: &SweepSpec) -> Vec<SweepRow> {
    spec.values
        .iter()
        .map(|&value| {
            let mut c = cfg.clone();
            spec.axis.apply(&mut c, value);
            let result = c
                .validate()
                .map_err(RunError::from)
                .and_then(|_| solve(&c))
                .map(|o| o.summary)
                .map_err(|e| e.to_string());
            SweepRow { value, result }
        })
        .collect()
}

pub fn write_sweep_csv(path: &Path, axis: SweepAxis, rows: &[SweepRow]) -> Result<(), RunError> {
    let write = || -> std::io::Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let axis_col = match axis {
            SweepAxis::Spacing => "h_mm",
            SweepAxis::Seed => "seed",
            SweepAxis::LoadSteps => "n_load",
        };
        writeln!(
            out,
            "{axis_col},nodes,l2_error_mm,l2_error_per_node_mm,max_relative_u_error,max_u_mm,\
             picard_iterations_total,picard_iterations_mean,front_radius_mm,status"
        )?;
        let opt = |v: Option<f64>| v.map_or("nan".to_string(), |x| x.to_string());
        for row in rows {
            match &row.result {
                Ok(s) => writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},ok",
                    row.value,
                    s.nodes,
                    opt(s.error.map(|e| e.raw)),
                    opt(s.error.map(|e| e.per_node)),
                    opt(s.max_relative_error),
                    s.max_displacement,
                    s.total_iterations(),
                    s.mean_iterations(),
                    opt(s.front_radius),
                )?,
                Err(msg) => writeln!(
                    out,
                    "{},0,nan,nan,nan,nan,0,nan,nan,\"failed: {}\"",
                    row.value,
                    msg.replace('"', "'")
                )?,
            }
        }
        out.flush()
    };
    write().map_err(|e| RunError::Output { path: path.to_path_buf(), source: e.into() })
}
