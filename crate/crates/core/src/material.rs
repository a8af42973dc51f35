//! Von Mises plasticity with isotropic hardening.

use crate::elastic::{ElasticConstants, Tensor2PS};
use crate::error::{Error, Result};

/// Yield stress as a function of the accumulated plastic strain.
#[derive(Clone, Debug, PartialEq)]
pub enum HardeningCurve {
    Perfect { yield_stress: f64 },
    Linear { yield_stress: f64, modulus: f64 },
    /// Knots `(eqps, yield stress)`, strictly increasing in `eqps` and starting at 0.
    Piecewise { knots: Vec<(f64, f64)> },
}

impl HardeningCurve {
    pub fn piecewise(knots: Vec<(f64, f64)>) -> Result<Self> {
        let c = HardeningCurve::Piecewise { knots };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidMaterial(m));
        match self {
            HardeningCurve::Perfect { yield_stress } => {
                if !(*yield_stress > 0.0) {
                    return bad(format!("yield stress must be positive, got {yield_stress}"));
                }
            }
            HardeningCurve::Linear { yield_stress, modulus } => {
                if !(*yield_stress > 0.0) {
                    return bad(format!("yield stress must be positive, got {yield_stress}"));
                }
                if !(*modulus >= 0.0) {
                    return bad(format!("hardening modulus must be non-negative, got {modulus}"));
                }
            }
            HardeningCurve::Piecewise { knots } => {
                if knots.len() < 2 {
                    return bad("piecewise curve needs at least two knots".into());
                }
                if knots[0].0 != 0.0 {
                    return bad(format!("first knot must sit at zero plastic strain, got {}", knots[0].0));
                }
                for w in knots.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return bad("knot strains must be strictly increasing".into());
                    }
                    if !(w[1].1 >= w[0].1) {
                        return bad("yield stress must not decrease along the curve".into());
                    }
                }
                if !(knots[0].1 > 0.0) {
                    return bad("initial yield stress must be positive".into());
                }
            }
        }
        Ok(())
    }

    pub fn initial_yield(&self) -> f64 {
        self.yield_stress(0.0)
    }

    pub fn yield_stress(&self, eqps: f64) -> f64 {
        match self {
            HardeningCurve::Perfect { yield_stress } => *yield_stress,
            HardeningCurve::Linear { yield_stress, modulus } => yield_stress + modulus * eqps,
            HardeningCurve::Piecewise { knots } => {
                let k = segment(knots, eqps);
                let (e0, s0) = knots[k];
                s0 + segment_slope(knots, k) * (eqps - e0)
            }
        }
    }

    /// Slope of the curve; at a knot the right-hand segment is used.
    pub fn slope(&self, eqps: f64) -> f64 {
        match self {
            HardeningCurve::Perfect { .. } => 0.0,
            HardeningCurve::Linear { modulus, .. } => *modulus,
            HardeningCurve::Piecewise { knots } => segment_slope(knots, segment(knots, eqps)),
        }
    }
}

/// Index of the segment starting at or left of `eqps`, clamped to the last one.
fn segment(knots: &[(f64, f64)], eqps: f64) -> usize {
    let last = knots.len() - 2;
    let after = knots.partition_point(|k| k.0 <= eqps);
    after.saturating_sub(1).min(last)
}

fn segment_slope(knots: &[(f64, f64)], k: usize) -> f64 {
    (knots[k + 1].1 - knots[k].1) / (knots[k + 1].0 - knots[k].0)
}

/// Elastic constants plus hardening.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialModel {
    pub elastic: ElasticConstants,
    pub hardening: HardeningCurve,
}

impl MaterialModel {
    pub fn new(elastic: ElasticConstants, hardening: HardeningCurve) -> Result<Self> {
        hardening.validate()?;
        Ok(MaterialModel { elastic, hardening })
    }
}

/// Local state carried by every node.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointState {
    pub stress: Tensor2PS,
    pub elastic_strain: Tensor2PS,
    /// Accumulated plastic strain.
    pub eqps: f64,
}

pub fn von_mises(s: &Tensor2PS) -> f64 {
    let d1 = s.xx - s.yy;
    let d2 = s.yy - s.zz;
    let d3 = s.zz - s.xx;
    (0.5 * (d1 * d1 + d2 * d2 + d3 * d3 + 6.0 * s.xy * s.xy)).sqrt()
}

/// Positive values flag inadmissible states.
pub fn yield_function(s: &Tensor2PS, eqps: f64, curve: &HardeningCurve) -> f64 {
    von_mises(s) - curve.yield_stress(eqps)
}

/// Newton solve of `vms - 3 mu dg - yield(eqps + dg) = 0` starting from `dg = 0`.
pub fn return_mapping(
    trial_vms: f64,
    eqps: f64,
    curve: &HardeningCurve,
    mu: f64,
    max_iterations: usize,
    tolerance: f64,
) -> Result<f64> {
    let phi_trial = trial_vms - curve.yield_stress(eqps);
    if !(phi_trial > 0.0) {
        return Err(Error::NotYielding(phi_trial));
    }
    if !(mu > 0.0) || max_iterations == 0 {
        return Err(Error::OutOfRange(format!("mu = {mu}, max iterations = {max_iterations}")));
    }
    let mut dg = 0.0;
    let mut phi = phi_trial;
    let mut k = 0;
    loop {
        let h = curve.slope(eqps + dg);
        dg += phi / (3.0 * mu + h);
        phi = trial_vms - 3.0 * mu * dg - curve.yield_stress(eqps + dg);
        k += 1;
        if phi.abs() <= tolerance {
            return Ok(dg);
        }
        if k >= max_iterations {
            return Err(Error::ReturnMappingDiverged { iterations: k, residual: phi });
        }
    }
}

/// Radial return of the deviator by `dg`; the hydrostatic stress and the
/// volumetric elastic strain are kept.
pub fn update_state(state: &PointState, dg: f64, mu: f64) -> Result<PointState> {
    if dg == 0.0 {
        return Ok(*state);
    }
    if dg < 0.0 {
        return Err(Error::OutOfRange(format!("negative plastic multiplier {dg}")));
    }
    let vms = von_mises(&state.stress);
    if vms == 0.0 {
        return Err(Error::UndefinedFlowDirection);
    }
    let p = state.stress.trace() / 3.0;
    let s = state.stress.deviator() * (1.0 - 3.0 * mu * dg / vms);
    let eps_v = state.elastic_strain.trace();
    Ok(PointState {
        stress: s + Tensor2PS::spherical(p),
        elastic_strain: s * (0.5 / mu) + Tensor2PS::spherical(eps_v / 3.0),
        eqps: state.eqps + dg,
    })
}

/// Outcome of [`correct`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correction {
    pub state: PointState,
    pub plastic: bool,
}

/// Elastic predictor check followed by return mapping where the trial state yields.
pub fn correct(
    trial: &PointState,
    model: &MaterialModel,
    max_iterations: usize,
    tolerance: f64,
) -> Result<Correction> {
    let vms = von_mises(&trial.stress);
    if vms - model.hardening.yield_stress(trial.eqps) <= 0.0 {
        return Ok(Correction { state: *trial, plastic: false });
    }
    let mu = model.elastic.mu;
    let dg = return_mapping(vms, trial.eqps, &model.hardening, mu, max_iterations, tolerance)?;
    Ok(Correction { state: update_state(trial, dg, mu)?, plastic: true })
}
