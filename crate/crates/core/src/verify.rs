//! Closed-form thick-walled cylinder references, error norms and plastic
//! front extraction.
//!
//! The plastic references use the shear yield stress `k = sigma_y / sqrt(3)`.
//! In the plastic zone `sigma_theta - sigma_r = 2k`; in the elastic zone the
//! stresses are those of a cylinder loaded to incipient yield at `r = c`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::elastic::{ElasticConstants, Tensor2PS};
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Cylindrical stress components [GPa] and radial displacement [mm].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialState {
    pub radial: f64,
    pub hoop: f64,
    pub axial: f64,
    pub displacement: f64,
}

fn check_radius(r: f64, a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && b > a) {
        return Err(Error::OutOfRange(format!("need 0 < a < b, got a = {a}, b = {b}")));
    }
    // Nodes placed on the walls may sit a rounding error outside.
    let slack = 1e-9 * b;
    if !(r >= a - slack && r <= b + slack) {
        return Err(Error::OutOfRange(format!("radius {r} outside [{a}, {b}]")));
    }
    Ok(())
}

/// Lamé solution of a pressurised cylinder in plane strain.
pub fn elastic_reference(r: f64, p: f64, a: f64, b: f64, ec: &ElasticConstants) -> Result<RadialState> {
    check_radius(r, a, b)?;
    let k = b * b / (a * a) - 1.0;
    let (e, nu) = (ec.young, ec.poisson);
    Ok(RadialState {
        radial: -p * (b * b / (r * r) - 1.0) / k,
        hoop: p * (b * b / (r * r) + 1.0) / k,
        axial: 2.0 * nu * p / k,
        displacement: p / e * ((1.0 + nu) * (1.0 - 2.0 * nu) * r + (1.0 + nu) * b * b / r) / k,
    })
}

/// Partly plastic cylinder with the front at `r = c`.
pub fn plastic_reference(r: f64, c: f64, a: f64, b: f64, yield_stress: f64, ec: &ElasticConstants) -> Result<RadialState> {
    check_radius(r, a, b)?;
    if !(c >= a && c <= b) {
        return Err(Error::OutOfRange(format!("front radius {c} outside [{a}, {b}]")));
    }
    let shear = yield_stress / 3f64.sqrt();
    let (nu, mu) = (ec.poisson, ec.mu);
    let (radial, hoop) = zone_stresses(r, c, b, shear, r < c);
    Ok(RadialState {
        radial,
        hoop,
        axial: nu * (radial + hoop),
        displacement: (1.0 - nu) * shear * c * c / (mu * r) + (1.0 - 2.0 * nu) * radial * r / (2.0 * mu),
    })
}

/// In-plane stresses of the plastic (`true`) or elastic branch.
fn zone_stresses(r: f64, c: f64, b: f64, shear: f64, plastic: bool) -> (f64, f64) {
    let cb = c * c / (b * b);
    if plastic {
        let log = (c * c / (r * r)).ln();
        (-shear * (1.0 - cb + log), shear * (1.0 + cb - log))
    } else {
        (-shear * cb * (b * b / (r * r) - 1.0), shear * cb * (b * b / (r * r) + 1.0))
    }
}

/// Pressure needed to push the front to `c`.
pub fn pressure_for_front(c: f64, a: f64, b: f64, yield_stress: f64) -> f64 {
    yield_stress / 3f64.sqrt() * (1.0 - c * c / (b * b) + (c * c / (a * a)).ln())
}

/// Pressure at which the inner wall starts to yield.
pub fn onset_pressure(a: f64, b: f64, yield_stress: f64) -> f64 {
    pressure_for_front(a, a, b, yield_stress)
}

/// Pressure at which the whole wall is plastic.
pub fn limit_pressure(a: f64, b: f64, yield_stress: f64) -> f64 {
    pressure_for_front(b, a, b, yield_stress)
}

/// Front radius for a given pressure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontRadius {
    pub radius: f64,
    /// The pressure is below the onset of yielding; `radius` is then `a`.
    pub below_onset: bool,
}

/// Solves `pressure_for_front(c) = p` for `c` by bisection on `[a, b]`.
pub fn front_from_pressure(p: f64, a: f64, b: f64, yield_stress: f64) -> Result<FrontRadius> {
    if !(a > 0.0 && b > a && yield_stress > 0.0 && p.is_finite()) {
        return Err(Error::OutOfRange(format!(
            "invalid cylinder a = {a}, b = {b}, yield stress {yield_stress}, pressure {p}"
        )));
    }
    if p <= onset_pressure(a, b, yield_stress) {
        return Ok(FrontRadius { radius: a, below_onset: true });
    }
    let limit = limit_pressure(a, b, yield_stress);
    if p > limit {
        return Err(Error::BeyondLimitLoad { pressure: p, limit });
    }
    let (mut lo, mut hi) = (a, b);
    while hi - lo > 1e-10 * b {
        let mid = 0.5 * (lo + hi);
        if pressure_for_front(mid, a, b, yield_stress) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(FrontRadius { radius: 0.5 * (lo + hi), below_onset: false })
}

/// `(sigma_r, sigma_theta, sigma_z)` at `position`.
pub fn to_cylindrical(s: &Tensor2PS, position: Point) -> Result<[f64; 3]> {
    let r = position[0].hypot(position[1]);
    if r == 0.0 || !r.is_finite() {
        return Err(Error::OutOfRange("cylindrical components undefined at the origin".into()));
    }
    let (c, sn) = (position[0] / r, position[1] / r);
    Ok([
        s.xx * c * c + s.yy * sn * sn + 2.0 * s.xy * c * sn,
        s.xx * sn * sn + s.yy * c * c - 2.0 * s.xy * c * sn,
        s.zz,
    ])
}

/// Euclidean error norm of a displacement field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorNorm {
    /// `sqrt(sum |u_i - u_ref_i|^2)`.
    pub raw: f64,
    /// `raw / sqrt(N)`.
    pub per_node: f64,
}

pub fn error_norm(u: &[[f64; 2]], reference: &[[f64; 2]]) -> Result<ErrorNorm> {
    if u.len() != reference.len() {
        return Err(Error::DimensionMismatch { expected: reference.len(), got: u.len() });
    }
    let sum: f64 = u
        .iter()
        .zip(reference)
        .map(|(a, b)| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))
        .sum();
    let raw = sum.sqrt();
    let per_node = if u.is_empty() { 0.0 } else { raw / (u.len() as f64).sqrt() };
    Ok(ErrorNorm { raw, per_node })
}

/// Radial displacement reference as a Cartesian vector field.
pub fn radial_field(positions: &[Point], u_r: impl Fn(f64) -> f64) -> Vec<[f64; 2]> {
    positions
        .iter()
        .map(|p| {
            let r = p[0].hypot(p[1]);
            let u = u_r(r);
            [u * p[0] / r, u * p[1] / r]
        })
        .collect()
}

/// `f(r) = c1 / r + c2 / r^2 + c3 ln(1 / r) + c4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontFit {
    pub coefficients: [f64; 4],
    /// Fitted on nodes with positive accumulated plastic strain.
    pub plastic: bool,
    pub r_min: f64,
    pub r_max: f64,
    /// Root-mean-square fit residual.
    pub rms: f64,
}

impl FrontFit {
    pub fn eval(&self, r: f64) -> f64 {
        let [c1, c2, c3, c4] = self.coefficients;
        c1 / r + c2 / (r * r) - c3 * r.ln() + c4
    }
}

/// Least-squares fit of the front profile. Radii are rescaled by their
/// maximum before a Householder QR solve; the coefficients are mapped back
/// to the unscaled form.
pub fn fit_profile(radii: &[f64], values: &[f64], plastic: bool) -> Result<FrontFit> {
    if radii.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: radii.len(), got: values.len() });
    }
    if radii.len() < 4 {
        return Err(Error::FrontNotLocalized(format!("{} samples cannot fix 4 constants", radii.len())));
    }
    let s = radii.iter().copied().fold(0.0, f64::max);
    if !(s > 0.0) || radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::OutOfRange("fit radii must be positive".into()));
    }
    let m = radii.len();
    let mut a = DMatrix::<f64>::zeros(m, 4);
    for (i, &r) in radii.iter().enumerate() {
        let x = r / s;
        a[(i, 0)] = 1.0 / x;
        a[(i, 1)] = 1.0 / (x * x);
        a[(i, 2)] = -x.ln();
        a[(i, 3)] = 1.0;
    }
    let norms: Vec<f64> = (0..4).map(|j| a.column(j).norm().max(f64::MIN_POSITIVE)).collect();
    for j in 0..4 {
        a.column_mut(j).unscale_mut(norms[j]);
    }
    let y = DVector::from_column_slice(values);
    let qr = a.clone().qr();
    let rhs = qr.q().transpose() * &y;
    let d = qr
        .r()
        .solve_upper_triangular(&rhs)
        .filter(|d| d.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::FrontNotLocalized("rank-deficient fit".into()))?;
    let resid = (&a * &d - &y).norm() / (m as f64).sqrt();
    let d: Vec<f64> = (0..4).map(|j| d[j] / norms[j]).collect();
    let coefficients = [d[0] * s, d[1] * s * s, d[2], d[3] + d[2] * s.ln()];
    Ok(FrontFit {
        coefficients,
        plastic,
        r_min: radii.iter().copied().fold(f64::INFINITY, f64::min),
        r_max: s,
        rms: resid,
    })
}

/// Front estimate with the two fits that produced it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontEstimate {
    pub radius: f64,
    pub plastic_fit: FrontFit,
    pub elastic_fit: FrontFit,
}

/// Minimum number of nodes per regime for a front fit.
pub const MIN_FIT_NODES: usize = 20;

/// Intersection of the hoop-stress fits over plastic and elastic nodes with
/// polar angle in `[theta_from, theta_to]`.
pub fn extract_front(
    positions: &[Point],
    stress: &[Tensor2PS],
    eqps: &[f64],
    theta_from: f64,
    theta_to: f64,
) -> Result<FrontEstimate> {
    if stress.len() != positions.len() || eqps.len() != positions.len() {
        return Err(Error::DimensionMismatch { expected: positions.len(), got: stress.len().min(eqps.len()) });
    }
    let mut plastic = (Vec::new(), Vec::new());
    let mut elastic = (Vec::new(), Vec::new());
    for ((p, s), &e) in positions.iter().zip(stress).zip(eqps) {
        let r = p[0].hypot(p[1]);
        if r == 0.0 {
            continue;
        }
        let theta = p[1].atan2(p[0]);
        if theta < theta_from || theta > theta_to {
            continue;
        }
        let hoop = to_cylindrical(s, *p)?[1];
        let target = if e > 0.0 { &mut plastic } else { &mut elastic };
        target.0.push(r);
        target.1.push(hoop);
    }
    if plastic.0.len() < MIN_FIT_NODES || elastic.0.len() < MIN_FIT_NODES {
        return Err(Error::FrontNotLocalized(format!(
            "{} plastic and {} elastic nodes in the sector, need {MIN_FIT_NODES} each",
            plastic.0.len(),
            elastic.0.len()
        )));
    }
    let plastic_fit = fit_profile(&plastic.0, &plastic.1, true)?;
    let elastic_fit = fit_profile(&elastic.0, &elastic.1, false)?;

    // Bracket around the band where the two node classes meet.
    let (lo, hi) = {
        let a = elastic_fit.r_min;
        let b = plastic_fit.r_max;
        (a.min(b), a.max(b))
    };
    let span = elastic_fit.r_max.max(plastic_fit.r_max) - plastic_fit.r_min.min(elastic_fit.r_min);
    let pad = 0.05 * span;
    let (from, to) = ((lo - pad).max(f64::MIN_POSITIVE), hi + pad);
    let gap = |r: f64| plastic_fit.eval(r) - elastic_fit.eval(r);
    let samples = 400;
    let centre = 0.5 * (lo + hi);
    let mut best: Option<(f64, f64)> = None;
    let mut prev = (from, gap(from));
    for i in 1..=samples {
        let r = from + (to - from) * i as f64 / samples as f64;
        let g = gap(r);
        if prev.1 == 0.0 || prev.1.signum() != g.signum() {
            let candidate = (prev.0, r);
            let d = |c: (f64, f64)| (0.5 * (c.0 + c.1) - centre).abs();
            if best.is_none_or(|b| d(candidate) < d(b)) {
                best = Some(candidate);
            }
        }
        prev = (r, g);
    }
    let (mut a, mut b) = best.ok_or_else(|| {
        Error::FrontNotLocalized(format!("fits do not cross between {from:.3} and {to:.3} mm"))
    })?;
    let ga = gap(a);
    if ga == 0.0 {
        b = a;
    }
    while b - a > 1e-10 * to {
        let mid = 0.5 * (a + b);
        if gap(mid).signum() == ga.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(FrontEstimate {
        radius: 0.5 * (a + b),
        plastic_fit,
        elastic_fit,
    })
}

/// Front radius of one angular segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentFront {
    pub theta_from: f64,
    pub theta_to: f64,
    /// `None` when the segment is too sparse or the fits do not cross.
    pub radius: Option<f64>,
}

impl SegmentFront {
    pub fn angle(&self) -> f64 {
        0.5 * (self.theta_from + self.theta_to)
    }
}

/// Splits the quarter `[0, pi/2]` into `segments` equal sectors and extracts
/// the front in each.
pub fn front_shape(positions: &[Point], stress: &[Tensor2PS], eqps: &[f64], segments: usize) -> Result<Vec<SegmentFront>> {
    if segments == 0 {
        return Err(Error::OutOfRange("need at least one segment".into()));
    }
    let width = 0.5 * PI / segments as f64;
    Ok((0..segments)
        .into_par_iter()
        .map(|k| {
            let (from, to) = (k as f64 * width, (k + 1) as f64 * width);
            SegmentFront {
                theta_from: from,
                theta_to: to,
                radius: extract_front(positions, stress, eqps, from, to).ok().map(|f| f.radius),
            }
        })
        .collect())
}

/// Largest relative deviation of the located segment radii from their mean.
pub fn circularity(shape: &[SegmentFront]) -> Option<f64> {
    let radii: Vec<f64> = shape.iter().filter_map(|s| s.radius).collect();
    if radii.is_empty() {
        return None;
    }
    let mean = radii.iter().sum::<f64>() / radii.len() as f64;
    Some(radii.iter().map(|r| (r - mean).abs()).fold(0.0, f64::max) / mean)
}

/// `angle_rad,radius_mm`; unlocated segments are written as `nan`.
pub fn write_front_shape_csv(path: &Path, shape: &[SegmentFront]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "angle_rad,radius_mm")?;
    for s in shape {
        match s.radius {
            Some(r) => writeln!(out, "{:?},{:?}", s.angle(), r)?,
            None => writeln!(out, "{:?},nan", s.angle())?,
        }
    }
    out.flush()?;
    Ok(())
}

/// One row of a radial comparison table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialSample {
    pub radius: f64,
    pub numerical: RadialState,
    pub analytical: RadialState,
}

/// Numerical against analytical cylindrical components at every node;
/// `reference` holds the closed-form state per node.
pub fn radial_comparison(
    positions: &[Point],
    stress: &[Tensor2PS],
    displacement: &[[f64; 2]],
    reference: &[RadialState],
) -> Result<Vec<RadialSample>> {
    if stress.len() != positions.len() || displacement.len() != positions.len() || reference.len() != positions.len() {
        return Err(Error::DimensionMismatch { expected: positions.len(), got: reference.len() });
    }
    positions
        .iter()
        .zip(stress)
        .zip(displacement)
        .zip(reference)
        .map(|(((p, s), u), reference)| {
            let r = p[0].hypot(p[1]);
            let [radial, hoop, axial] = to_cylindrical(s, *p)?;
            Ok(RadialSample {
                radius: r,
                numerical: RadialState {
                    radial,
                    hoop,
                    axial,
                    displacement: (u[0] * p[0] + u[1] * p[1]) / r,
                },
                analytical: *reference,
            })
        })
        .collect()
}

pub fn write_comparison_csv(path: &Path, samples: &[RadialSample]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        out,
        "r_mm,sr_GPa,sr_ref_GPa,st_GPa,st_ref_GPa,sz_GPa,sz_ref_GPa,ur_mm,ur_ref_mm"
    )?;
    for s in samples {
        let (n, a) = (s.numerical, s.analytical);
        writeln!(
            out,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            s.radius, n.radial, a.radial, n.hoop, a.hoop, n.axial, a.axial, n.displacement, a.displacement
        )?;
    }
    out.flush()?;
    Ok(())
}
