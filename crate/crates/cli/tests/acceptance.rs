//! Benchmark acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness. Failing criteria are printed but only
//! make the process exit non-zero when `MLPLAST_ACCEPTANCE_STRICT` is set.
//! `MLPLAST_ACCEPTANCE_LONG` adds the elastic run at h = 0.5 mm.

use std::time::Instant;

use mlplast::approx::{BasisConfig, Operator, WeightStore};
use mlplast::elastic::{assemble, solve_elastic, stress_from_elastic_strain, BoundaryConditionSet, ElasticConstants, Tensor2PS};
use mlplast::geometry::Domain;
use mlplast::material::{return_mapping, update_state, von_mises, HardeningCurve, PointState};
use mlplast::nodegen::{fill, MIN_DISTANCE_FACTOR};
use mlplast::verify;
use mlplast_cli::{solve, Case, Outcome, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Default)]
struct Tally {
    passed: usize,
    failed: usize,
}

impl Tally {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

fn run(case: Case, spacing: f64, seed: u64, load_steps: Option<usize>) -> Result<Outcome, String> {
    let mut cfg = RunConfig::preset(case);
    cfg.spacing = spacing;
    cfg.seed = seed;
    if let Some(n) = load_steps {
        cfg.load_steps = n;
    }
    let start = Instant::now();
    let out = solve(&cfg).map_err(|e| e.to_string());
    eprintln!("  {case} h={spacing} seed={seed} steps={}: {:.1} s", cfg.load_steps, start.elapsed().as_secs_f64());
    out
}

fn converged_steps_ok(outcome: &Outcome, tolerance: f64) -> bool {
    outcome.report.steps.iter().all(|s| s.residual <= tolerance)
}

fn elastic(t: &mut Tally) {
    let levels = [4.0, 2.0, 1.0];
    let seeds: Vec<u64> = (1..=10).collect();
    let mut l2 = vec![vec![f64::NAN; seeds.len()]; levels.len()];
    let mut max_rel = vec![vec![f64::NAN; seeds.len()]; levels.len()];
    for (li, &h) in levels.iter().enumerate() {
        for (si, &seed) in seeds.iter().enumerate() {
            if let Ok(o) = run(Case::Elastic, h, seed, None) {
                l2[li][si] = o.summary.error.map_or(f64::NAN, |e| e.raw);
                max_rel[li][si] = o.summary.max_relative_error.unwrap_or(f64::NAN);
            }
        }
    }
    let worst = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) });
    let best = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);

    let at_two = worst(&max_rel[1]);
    t.check(
        "elastic benchmark h=2",
        at_two <= 0.01,
        format!("max node-wise relative displacement error {at_two:.3e} over 10 seeds (limit 1e-2)"),
    );
    if std::env::var_os("MLPLAST_ACCEPTANCE_LONG").is_some() {
        let fine = run(Case::Elastic, 0.5, 1, None).ok().and_then(|o| o.summary.max_relative_error).unwrap_or(f64::NAN);
        t.check("elastic benchmark h=0.5", fine <= 1e-3, format!("max relative error {fine:.3e} (limit 1e-3)"));
    }

    let decreasing = (0..seeds.len()).all(|s| l2[0][s] > l2[1][s] && l2[1][s] > l2[2][s]);
    let spread: Vec<f64> = l2.iter().map(|row| worst(row) - best(row)).collect();
    let means: Vec<f64> = l2.iter().map(|row| row.iter().sum::<f64>() / row.len() as f64).collect();
    t.check(
        "elastic convergence h=4,2,1",
        decreasing && spread[2] < spread[1],
        format!(
            "mean l2 {:.3e} > {:.3e} > {:.3e} for every seed: {decreasing}; seed spread {:.3e} -> {:.3e}",
            means[0], means[1], means[2], spread[1], spread[2]
        ),
    );
}

fn perfect_plastic(t: &mut Tally, residual_ok: &mut bool) {
    let front = verify::front_from_pressure(0.19, 100.0, 200.0, 0.24).map(|f| f.radius).unwrap_or(f64::NAN);
    let limit = verify::limit_pressure(100.0, 200.0, 0.24);
    t.check(
        "closed-form front and limit load",
        (front - 182.89).abs() <= 0.05 && (limit - 0.19209).abs() <= 1e-4,
        format!("front at p=0.19 {front:.3} mm, limit load {limit:.5} GPa"),
    );

    match run(Case::PerfectPlastic, 1.0, 1, None) {
        Ok(o) => {
            let s = &o.summary;
            let c = s.front_radius.unwrap_or(f64::NAN);
            let ok = within(s.vms_inner, 0.2400, 0.005)
                && within(s.vms_outer, 0.2106, 0.01)
                && within(s.u_inner, 0.3623, 0.02)
                && within(s.u_outer, 0.2053, 0.02)
                && (c - 186.67).abs() <= 1.5;
            t.check(
                "perfectly plastic benchmark h=1",
                ok,
                format!(
                    "vms {:.5}/{:.5} GPa, |u| {:.5}/{:.5} mm, front {c:.2} mm ({} nodes)",
                    s.vms_inner, s.vms_outer, s.u_inner, s.u_outer, s.nodes
                ),
            );
            let located = o.front_shape.iter().filter(|seg| seg.radius.is_some()).count();
            let circ = s.front_circularity.unwrap_or(f64::NAN);
            t.check(
                "front circularity h=1",
                located == o.front_shape.len() && circ <= 0.01,
                format!("{located}/{} segments located, max deviation from mean {circ:.3e} (limit 1e-2)", o.front_shape.len()),
            );
            *residual_ok &= converged_steps_ok(&o, 1e-6);
        }
        Err(e) => {
            t.check("perfectly plastic benchmark h=1", false, e.clone());
            t.check("front circularity h=1", false, e);
        }
    }
}

fn linear_hardening(t: &mut Tally, residual_ok: &mut bool) {
    match run(Case::LinearHardening, 1.0, 1, None) {
        Ok(o) => {
            let s = &o.summary;
            let c = s.front_radius.unwrap_or(f64::NAN);
            let ok = within(s.vms_inner, 0.25589, 0.02)
                && within(s.vms_outer, 0.13635, 0.02)
                && within(s.u_inner, 0.22212, 0.02)
                && within(s.u_outer, 0.13295, 0.02)
                && (c - 149.42).abs() <= 1.5;
            t.check(
                "linear hardening benchmark h=1",
                ok,
                format!(
                    "vms {:.5}/{:.5} GPa, |u| {:.5}/{:.5} mm, front {c:.2} mm",
                    s.vms_inner, s.vms_outer, s.u_inner, s.u_outer
                ),
            );
            *residual_ok &= converged_steps_ok(&o, 1e-6);
        }
        Err(e) => t.check("linear hardening benchmark h=1", false, e),
    }
}

fn load_steps(t: &mut Tally, residual_ok: &mut bool) {
    let mut max_u = Vec::new();
    let mut mean_it = Vec::new();
    for n in [5, 10, 25] {
        match run(Case::PerfectPlastic, 2.0, 1, Some(n)) {
            Ok(o) => {
                max_u.push(o.summary.max_displacement);
                mean_it.push(o.summary.mean_iterations());
                *residual_ok &= converged_steps_ok(&o, 1e-6);
            }
            Err(_) => {
                max_u.push(f64::NAN);
                mean_it.push(f64::NAN);
            }
        }
    }
    let hi = max_u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = max_u.iter().copied().fold(f64::INFINITY, f64::min);
    let variation = (hi - lo) / lo;
    let non_increasing = mean_it.windows(2).all(|w| w[1] <= w[0]);
    t.check(
        "load-step insensitivity h=2",
        variation < 1e-3 && non_increasing,
        format!(
            "max |u| {:.6}/{:.6}/{:.6} mm for N=5/10/25, variation {:.3}% (limit 0.1%); mean iterations {:.1}/{:.1}/{:.1}",
            max_u[0], max_u[1], max_u[2], 100.0 * variation, mean_it[0], mean_it[1], mean_it[2]
        ),
    );
}

fn irregular(t: &mut Tally, residual_ok: &mut bool) {
    match run(Case::Irregular, 2.0, 1, None) {
        Ok(o) => {
            let eqps = o.report.eqps();
            let (i, &peak) = eqps.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
            let p = o.problem.nodes.positions[i];
            let (lo, hi) = bounding_box(&o.problem.nodes.positions);
            let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
            t.check(
                "irregular domain h=2",
                peak > 0.0 && p[0] > mid[0] && p[1] < mid[1],
                format!("completed; peak plastic strain {peak:.3e} at ({:.1}, {:.1}) mm, domain centre ({:.1}, {:.1})", p[0], p[1], mid[0], mid[1]),
            );
            *residual_ok &= converged_steps_ok(&o, 1e-6);
        }
        Err(e) => t.check("irregular domain h=2", false, e),
    }
}

fn bounding_box(points: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

fn derivative(op: Operator, (i, j): (i32, i32), p: [f64; 2]) -> f64 {
    let mono = |a: i32, b: i32, ca: f64| if a < 0 || b < 0 { 0.0 } else { ca * p[0].powi(a) * p[1].powi(b) };
    let (fi, fj) = (i as f64, j as f64);
    match op {
        Operator::Dx => mono(i - 1, j, fi),
        Operator::Dy => mono(i, j - 1, fj),
        Operator::Dxx => mono(i - 2, j, fi * (fi - 1.0)),
        Operator::Dyy => mono(i, j - 2, fj * (fj - 1.0)),
        Operator::Dxy => mono(i - 1, j - 1, fi * fj),
    }
}

/// Largest reproduction error of the five operators on all monomials up to
/// degree three, scaled by the size of the exact derivative.
fn polynomial_reproduction() -> f64 {
    let domain = Domain::rectangle([0.0, 0.0], [1.0, 1.0]).unwrap();
    let nodes = fill(&domain, 0.05, 1).unwrap();
    let w = WeightStore::build(&nodes, &BasisConfig::default()).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..=3 {
        for j in 0..=(3 - i) {
            let field: Vec<f64> = nodes.positions.iter().map(|p| p[0].powi(i) * p[1].powi(j)).collect();
            for op in Operator::ALL {
                for (c, &p) in nodes.positions.iter().enumerate() {
                    let exact = derivative(op, (i, j), p);
                    let err = (w.apply(op, c, &field) - exact).abs() / exact.abs().max(1.0);
                    worst = worst.max(err);
                }
            }
        }
    }
    worst
}

fn patch_test() -> f64 {
    let domain = Domain::rectangle([0.0, 0.0], [1.0, 1.0]).unwrap();
    let nodes = fill(&domain, 0.05, 2).unwrap();
    let w = WeightStore::build(&nodes, &BasisConfig::default()).unwrap();
    let ec = ElasticConstants::new(210.0, 0.3).unwrap();
    let exact = |p: [f64; 2]| [1e-3 * p[0] + 2e-4 * p[1], -3e-4 * p[1] + 1e-4 * p[0]];
    let values: Vec<[f64; 2]> = nodes.positions[..nodes.boundary_count].iter().map(|&p| exact(p)).collect();
    let bcs = BoundaryConditionSet::essential(&values);
    let fact = assemble(&nodes, &w, &ec, &bcs).unwrap().factorize().unwrap();
    let zeros = vec![[0.0; 2]; nodes.len()];
    let u = solve_elastic(&fact, &nodes, &bcs, &zeros, &bcs.values()).unwrap();
    nodes
        .positions
        .iter()
        .zip(&u)
        .map(|(&p, u)| {
            let e = exact(p);
            (u[0] - e[0]).abs().max((u[1] - e[1]).abs())
        })
        .fold(0.0, f64::max)
}

/// Root of `vms - 3 mu dg - yield(eqps + dg)` by plain bisection.
fn bisection(vms: f64, eqps: f64, curve: &HardeningCurve, mu: f64) -> f64 {
    let g = |dg: f64| vms - 3.0 * mu * dg - curve.yield_stress(eqps + dg);
    let (mut lo, mut hi) = (0.0, vms / (3.0 * mu));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Worst return-mapping disagreement with bisection and worst relative trace
/// change under the state update, over random plastic states.
fn constitutive_properties() -> (f64, f64, usize) {
    let ec = ElasticConstants::new(210.0, 0.3).unwrap();
    let curves = [
        RunConfig::preset(Case::PerfectPlastic).curve(),
        RunConfig::preset(Case::LinearHardening).curve(),
        RunConfig::preset(Case::Irregular).curve(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut map_err, mut trace_err, mut count) = (0.0f64, 0.0f64, 0);
    while count < 1000 {
        let curve = &curves[count % curves.len()];
        let mut r = || rng.random_range(-4e-3..4e-3);
        let eps = Tensor2PS::new(r(), r(), 0.0, r());
        let eqps = rng.random_range(0.0..0.05);
        let stress = stress_from_elastic_strain(&ec, &eps);
        let vms = von_mises(&stress);
        if vms <= curve.yield_stress(eqps) * (1.0 + 1e-9) {
            continue;
        }
        let state = PointState { stress, elastic_strain: eps, eqps };
        let dg = return_mapping(vms, eqps, curve, ec.mu, 100, 1e-13).unwrap();
        map_err = map_err.max((dg - bisection(vms, eqps, curve, ec.mu)).abs());
        let new = update_state(&state, dg, ec.mu).unwrap();
        let scale = stress.max_abs().max(stress.trace().abs());
        trace_err = trace_err.max((new.stress.trace() - stress.trace()).abs() / scale);
        count += 1;
    }
    (map_err, trace_err, count)
}

fn nodegen_invariants() -> bool {
    let domain = Domain::quarter_annulus(100.0, 200.0).unwrap();
    (1..=5).all(|seed| {
        let a = fill(&domain, 4.0, seed).unwrap();
        let b = fill(&domain, 4.0, seed).unwrap();
        a == b && a.separation_distance() >= MIN_DISTANCE_FACTOR * 4.0 * (1.0 - 1e-12)
    })
}

fn properties(t: &mut Tally, residual_ok: bool) {
    let poly = polynomial_reproduction();
    let patch = patch_test();
    let (map_err, trace_err, count) = constitutive_properties();
    let nodegen = nodegen_invariants();
    t.check(
        "property suites",
        poly <= 1e-6 && patch <= 1e-8 && map_err <= 1e-9 && trace_err <= 1e-14 && nodegen && residual_ok,
        format!(
            "polynomial reproduction {poly:.1e}, patch test {patch:.1e}, return mapping vs bisection {map_err:.1e} \
             and trace change {trace_err:.1e} over {count} states, node generation invariants {nodegen}, \
             converged-step residuals within tolerance {residual_ok}"
        ),
    );
}

fn main() {
    let start = Instant::now();
    let mut t = Tally::default();
    let mut residual_ok = true;
    elastic(&mut t);
    perfect_plastic(&mut t, &mut residual_ok);
    linear_hardening(&mut t, &mut residual_ok);
    load_steps(&mut t, &mut residual_ok);
    irregular(&mut t, &mut residual_ok);
    properties(&mut t, residual_ok);
    println!(
        "acceptance: {} passed, {} failed ({:.0} s)",
        t.passed,
        t.failed,
        start.elapsed().as_secs_f64()
    );
    if t.failed > 0 && std::env::var_os("MLPLAST_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
