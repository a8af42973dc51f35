//! Incremental loading with Picard iterations on a constant stiffness matrix.
//!
//! Each load step starts from an elastic prediction for the load increment.
//! Nodes whose trial stress violates the yield condition are returned to the
//! yield surface, and the stress removed by the return mapping is fed back as
//! a body force in the next elastic solve until the field is in equilibrium.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::approx::{BasisConfig, Operator, Parity, WeightStore};
use crate::elastic::{
    assemble, solve_elastic, stress_from_elastic_strain, strain_from_displacement,
    BoundaryConditionSet, ComponentBc, Tensor2PS,
};
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::linsys::{Factorization, SparseSystem};
use crate::material::{correct, MaterialModel, PointState};
use crate::nodegen::NodeSet;

/// Total load and number of equal increments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoadProgram {
    /// Inner-wall pressure [GPa].
    pub pressure: f64,
    pub steps: usize,
}

impl LoadProgram {
    pub fn new(pressure: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::OutOfRange("number of load steps must be at least 1".into()));
        }
        if !pressure.is_finite() {
            return Err(Error::OutOfRange(format!("pressure must be finite, got {pressure}")));
        }
        Ok(LoadProgram { pressure, steps })
    }

    pub fn increment(&self) -> f64 {
        self.pressure / self.steps as f64
    }

    /// Load applied once step `i` (1-based) is complete.
    pub fn load_at(&self, step: usize) -> f64 {
        self.pressure * step as f64 / self.steps as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Picard and return-mapping tolerance.
    pub tolerance: f64,
    pub max_return_iterations: usize,
    pub max_picard_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-6,
            max_return_iterations: 50,
            max_picard_iterations: 500,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::OutOfRange(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_return_iterations == 0 || self.max_picard_iterations == 0 {
            return Err(Error::OutOfRange("iteration caps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Discretized problem with its factorized stiffness matrix.
pub struct Problem {
    pub nodes: NodeSet,
    pub weights: WeightStore,
    pub material: MaterialModel,
    /// Boundary conditions at unit load factor; targets scale linearly with the load.
    pub pattern: BoundaryConditionSet,
    /// Length used to make the interior residual dimensionless.
    pub length_scale: f64,
    system: SparseSystem,
    factorization: Factorization,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("nodes", &self.nodes.len())
            .field("length_scale", &self.length_scale)
            .finish()
    }
}

impl Problem {
    /// Pressure on inner-pressure pieces, free surfaces elsewhere. Symmetry
    /// edges are treated by mirroring the stencils across them.
    pub fn new(domain: &Domain, nodes: NodeSet, basis: &BasisConfig, material: MaterialModel) -> Result<Self> {
        let mirrors = domain.mirror_lines();
        if mirrors.is_empty() {
            let pattern = BoundaryConditionSet::from_tags(&nodes, 1.0);
            return Problem::with_pattern(nodes, basis, material, pattern, domain.scale());
        }
        let pattern = BoundaryConditionSet::mirrored(&nodes, 1.0);
        let weights = WeightStore::build_mirrored(&nodes, basis, mirrors)?;
        Problem::from_parts(nodes, weights, material, pattern, domain.scale())
    }

    /// Plain nearest-neighbour stencils with an explicit boundary pattern.
    pub fn with_pattern(
        nodes: NodeSet,
        basis: &BasisConfig,
        material: MaterialModel,
        pattern: BoundaryConditionSet,
        length_scale: f64,
    ) -> Result<Self> {
        let weights = WeightStore::build(&nodes, basis)?;
        Problem::from_parts(nodes, weights, material, pattern, length_scale)
    }

    pub fn from_parts(
        nodes: NodeSet,
        weights: WeightStore,
        material: MaterialModel,
        pattern: BoundaryConditionSet,
        length_scale: f64,
    ) -> Result<Self> {
        material.hardening.validate()?;
        let system = assemble(&nodes, &weights, &material.elastic, &pattern)?;
        let factorization = system.factorize()?;
        Ok(Problem {
            nodes,
            weights,
            material,
            pattern,
            length_scale,
            system,
            factorization,
        })
    }

    pub fn system(&self) -> &SparseSystem {
        &self.system
    }

    pub fn factorization(&self) -> &Factorization {
        &self.factorization
    }

    /// Boundary targets at the given load factor.
    pub fn targets(&self, factor: f64) -> Vec<[ComponentBc; 2]> {
        self.pattern
            .nodes
            .iter()
            .map(|c| c.map(|bc| bc.scaled(factor)))
            .collect()
    }
}

/// One Picard pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEntry {
    pub step: usize,
    pub iteration: usize,
    /// Dimensionless interior residual.
    pub interior: f64,
    /// Dimensionless boundary traction mismatch.
    pub boundary: f64,
    pub plastic_nodes: usize,
}

impl TraceEntry {
    pub fn residual(&self) -> f64 {
        self.interior.max(self.boundary)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub load: f64,
    pub iterations: usize,
    pub residual: f64,
    pub plastic_nodes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub steps: Vec<StepReport>,
    pub displacement: Vec<[f64; 2]>,
    pub states: Vec<PointState>,
    pub trace: Vec<TraceEntry>,
    /// Number of node-level return mappings performed.
    pub return_mappings: usize,
}

impl RunReport {
    pub fn stresses(&self) -> Vec<Tensor2PS> {
        self.states.iter().map(|s| s.stress).collect()
    }

    pub fn eqps(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.eqps).collect()
    }

    pub fn total_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.iterations).sum()
    }

    pub fn mean_iterations(&self) -> f64 {
        self.total_iterations() as f64 / self.steps.len().max(1) as f64
    }

    pub fn max_displacement(&self) -> f64 {
        self.displacement.iter().map(|u| u[0].hypot(u[1])).fold(0.0, f64::max)
    }

    /// Residual trace CSV.
    pub fn write_trace_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "step,iteration,residual,interior_residual,boundary_residual,plastic_nodes")?;
        for t in &self.trace {
            writeln!(
                out,
                "{},{},{:e},{:e},{:e},{}",
                t.step,
                t.iteration,
                t.residual(),
                t.interior,
                t.boundary,
                t.plastic_nodes
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Divergence of a stress field at every row obeying equilibrium (interior
/// nodes and [`ComponentBc::Equilibrium`] components); zero elsewhere.
pub fn compute_residuum(
    nodes: &NodeSet,
    weights: &WeightStore,
    pattern: &BoundaryConditionSet,
    stress: &[Tensor2PS],
) -> Vec<[f64; 2]> {
    let sxx: Vec<f64> = stress.iter().map(|s| s.xx).collect();
    let syy: Vec<f64> = stress.iter().map(|s| s.yy).collect();
    let sxy: Vec<f64> = stress.iter().map(|s| s.xy).collect();
    (0..nodes.len())
        .into_par_iter()
        .map(|i| {
            let active = |c: usize| !nodes.is_boundary(i) || pattern.nodes[i][c] == ComponentBc::Equilibrium;
            let mut r = [0.0; 2];
            if active(0) {
                r[0] = weights.apply(Operator::Dx, i, &sxx) + weights.apply_with(Operator::Dy, i, &sxy, Parity::SHEAR);
            }
            if active(1) {
                r[1] = weights.apply_with(Operator::Dx, i, &sxy, Parity::SHEAR) + weights.apply(Operator::Dy, i, &syy);
            }
            r
        })
        .collect()
}

/// Right-hand side values for the boundary rows of a correction solve:
/// target traction minus the current traction, or target displacement minus
/// the current displacement. Equilibrium components get 0.
pub fn boundary_residual(
    pattern: &BoundaryConditionSet,
    targets: &[[ComponentBc; 2]],
    stress: &[Tensor2PS],
    displacement: &[[f64; 2]],
) -> Vec<[f64; 2]> {
    targets
        .iter()
        .enumerate()
        .map(|(i, bc)| {
            let t = stress[i].traction(pattern.normals[i]);
            let mut r = [0.0; 2];
            for c in 0..2 {
                r[c] = match bc[c] {
                    ComponentBc::Essential(v) => v - displacement[i][c],
                    ComponentBc::Traction(v) => v - t[c],
                    ComponentBc::Equilibrium => 0.0,
                };
            }
            r
        })
        .collect()
}

/// Largest traction mismatch over traction-mode components.
fn traction_mismatch(targets: &[[ComponentBc; 2]], residual: &[[f64; 2]]) -> f64 {
    let mut m: f64 = 0.0;
    for (bc, r) in targets.iter().zip(residual) {
        for c in 0..2 {
            if matches!(bc[c], ComponentBc::Traction(_)) {
                m = m.max(r[c].abs());
            }
        }
    }
    m
}

/// Runs the load program from an unloaded state.
pub fn run(problem: &Problem, load: &LoadProgram, cfg: &SolverConfig) -> Result<RunReport> {
    cfg.validate()?;
    let n = problem.nodes.len();
    let mut report = RunReport {
        steps: Vec::with_capacity(load.steps),
        displacement: vec![[0.0; 2]; n],
        states: vec![PointState::default(); n],
        trace: Vec::new(),
        return_mappings: 0,
    };
    for step in 1..=load.steps {
        run_step(problem, load, step, cfg, &mut report)?;
    }
    Ok(report)
}

fn run_step(problem: &Problem, load: &LoadProgram, step: usize, cfg: &SolverConfig, report: &mut RunReport) -> Result<()> {
    let nodes = &problem.nodes;
    let n = nodes.len();
    let ec = &problem.material.elastic;
    let sigma_ref = problem.material.hardening.initial_yield();
    let interior_scale = sigma_ref / problem.length_scale;
    let targets = problem.targets(load.load_at(step));
    let mut residuum = vec![[0.0; 2]; n];
    let mut history = Vec::new();

    for iteration in 1..=cfg.max_picard_iterations {
        let stress: Vec<Tensor2PS> = report.states.iter().map(|s| s.stress).collect();
        let boundary = boundary_residual(&problem.pattern, &targets, &stress, &report.displacement);
        let body_force: Vec<[f64; 2]> = residuum.iter().map(|r| [-r[0], -r[1]]).collect();
        let du = solve_elastic(&problem.factorization, nodes, &problem.pattern, &body_force, &boundary)?;
        for (u, d) in report.displacement.iter_mut().zip(&du) {
            u[0] += d[0];
            u[1] += d[1];
        }
        let dstrain = strain_from_displacement(&problem.weights, &du);

        let corrected: Vec<(PointState, Tensor2PS, bool)> = report
            .states
            .par_iter()
            .zip(dstrain.par_iter())
            .map(|(state, de)| {
                let eps = state.elastic_strain + *de;
                let trial = PointState {
                    stress: stress_from_elastic_strain(ec, &eps),
                    elastic_strain: eps,
                    eqps: state.eqps,
                };
                let out = correct(&trial, &problem.material, cfg.max_return_iterations, cfg.tolerance)?;
                Ok((out.state, trial.stress - out.state.stress, out.plastic))
            })
            .collect::<Result<_>>()
            .map_err(|e| {
                // A failed return mapping after the first pass means the
                // iterates have left the physical range.
                if iteration > 1 {
                    diverged(step, &history)
                } else {
                    e
                }
            })?;

        let mut plastic_nodes = 0;
        let mut excess = Vec::with_capacity(n);
        for (state, (new, ex, plastic)) in report.states.iter_mut().zip(corrected) {
            *state = new;
            excess.push(ex);
            plastic_nodes += plastic as usize;
        }
        report.return_mappings += plastic_nodes;

        residuum = compute_residuum(nodes, &problem.weights, &problem.pattern, &excess);
        let interior = residuum.iter().map(|r| r[0].hypot(r[1])).fold(0.0, f64::max) / interior_scale;
        let stress: Vec<Tensor2PS> = report.states.iter().map(|s| s.stress).collect();
        let mismatch = boundary_residual(&problem.pattern, &targets, &stress, &report.displacement);
        let boundary = traction_mismatch(&targets, &mismatch) / sigma_ref;
        let entry = TraceEntry { step, iteration, interior, boundary, plastic_nodes };
        report.trace.push(entry);
        history.push(entry.residual());
        if entry.residual() <= cfg.tolerance {
            report.steps.push(StepReport {
                step,
                load: load.load_at(step),
                iterations: iteration,
                residual: entry.residual(),
                plastic_nodes: report.states.iter().filter(|s| s.eqps > 0.0).count(),
            });
            return Ok(());
        }
        let smallest = history.iter().copied().fold(f64::INFINITY, f64::min);
        if !entry.residual().is_finite() || entry.residual() > DIVERGENCE_GROWTH * smallest {
            break;
        }
    }
    Err(diverged(step, &history))
}

/// Growth of the residual over its smallest value in the step that counts
/// as divergence.
const DIVERGENCE_GROWTH: f64 = 1e6;

fn diverged(step: usize, history: &[f64]) -> Error {
    Error::PicardDiverged {
        step,
        iterations: history.len(),
        last: history.last().copied().unwrap_or(f64::NAN),
        history: history.to_vec(),
    }
}
