//! Plane-strain Navier-Cauchy assembly, elastic solves and strain/stress fields.

use std::io::Write;
use std::ops::{Add, AddAssign, Mul, Sub};
use std::path::Path;

use rayon::prelude::*;

use crate::approx::{Operator, Parity, WeightStore};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, Point};
use crate::linsys::{Factorization, SparseSystem};
use crate::nodegen::NodeSet;

/// Isotropic linear-elastic constants in GPa.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElasticConstants {
    pub young: f64,
    pub poisson: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl ElasticConstants {
    pub fn new(young: f64, poisson: f64) -> Result<Self> {
        if !(young > 0.0) || !young.is_finite() {
            return Err(Error::InvalidMaterial(format!("Young's modulus must be positive, got {young}")));
        }
        if !(poisson > 0.0 && poisson < 0.5) {
            return Err(Error::InvalidMaterial(format!("Poisson ratio must lie in (0, 0.5), got {poisson}")));
        }
        Ok(ElasticConstants {
            young,
            poisson,
            lambda: young * poisson / ((1.0 - 2.0 * poisson) * (1.0 + poisson)),
            mu: young / (2.0 * (1.0 + poisson)),
        })
    }
}

/// Symmetric plane-strain tensor; out-of-plane shears are identically zero.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Tensor2PS {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
}

impl Tensor2PS {
    pub const ZERO: Tensor2PS = Tensor2PS { xx: 0.0, yy: 0.0, zz: 0.0, xy: 0.0 };

    pub fn new(xx: f64, yy: f64, zz: f64, xy: f64) -> Self {
        Tensor2PS { xx, yy, zz, xy }
    }

    /// `p * I`.
    pub fn spherical(p: f64) -> Self {
        Tensor2PS { xx: p, yy: p, zz: p, xy: 0.0 }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    pub fn deviator(&self) -> Self {
        *self - Tensor2PS::spherical(self.trace() / 3.0)
    }

    /// In-plane traction `sigma . n`.
    pub fn traction(&self, n: [f64; 2]) -> [f64; 2] {
        [self.xx * n[0] + self.xy * n[1], self.xy * n[0] + self.yy * n[1]]
    }

    pub fn max_abs(&self) -> f64 {
        self.xx.abs().max(self.yy.abs()).max(self.zz.abs()).max(self.xy.abs())
    }
}

impl Add for Tensor2PS {
    type Output = Tensor2PS;
    fn add(self, o: Tensor2PS) -> Tensor2PS {
        Tensor2PS::new(self.xx + o.xx, self.yy + o.yy, self.zz + o.zz, self.xy + o.xy)
    }
}

impl AddAssign for Tensor2PS {
    fn add_assign(&mut self, o: Tensor2PS) {
        *self = *self + o;
    }
}

impl Sub for Tensor2PS {
    type Output = Tensor2PS;
    fn sub(self, o: Tensor2PS) -> Tensor2PS {
        Tensor2PS::new(self.xx - o.xx, self.yy - o.yy, self.zz - o.zz, self.xy - o.xy)
    }
}

impl Mul<f64> for Tensor2PS {
    type Output = Tensor2PS;
    fn mul(self, s: f64) -> Tensor2PS {
        Tensor2PS::new(self.xx * s, self.yy * s, self.zz * s, self.xy * s)
    }
}

/// Condition imposed on one displacement component at a boundary node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ComponentBc {
    /// Prescribed displacement [mm].
    Essential(f64),
    /// Prescribed traction component [GPa].
    Traction(f64),
    /// The equilibrium equation holds for this component, as at an interior
    /// node. Used for the tangential component on mirrored symmetry lines.
    Equilibrium,
}

impl ComponentBc {
    /// Prescribed value; 0 for [`ComponentBc::Equilibrium`].
    pub fn value(self) -> f64 {
        match self {
            ComponentBc::Essential(v) | ComponentBc::Traction(v) => v,
            ComponentBc::Equilibrium => 0.0,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        match self {
            ComponentBc::Essential(v) => ComponentBc::Essential(v * factor),
            ComponentBc::Traction(v) => ComponentBc::Traction(v * factor),
            ComponentBc::Equilibrium => ComponentBc::Equilibrium,
        }
    }

    pub fn is_essential(self) -> bool {
        matches!(self, ComponentBc::Essential(_))
    }
}

/// Per-boundary-node conditions for the x and y equations.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryConditionSet {
    pub nodes: Vec<[ComponentBc; 2]>,
    /// Normal used by the traction rows of each node.
    pub normals: Vec<Point>,
}

fn tag_conditions(tag: BoundaryTag, normal: Point, pressure: f64) -> [ComponentBc; 2] {
    match tag {
        BoundaryTag::InnerPressure => [
            ComponentBc::Traction(-pressure * normal[0]),
            ComponentBc::Traction(-pressure * normal[1]),
        ],
        BoundaryTag::OuterFree | BoundaryTag::CutoutFree => {
            [ComponentBc::Traction(0.0), ComponentBc::Traction(0.0)]
        }
        BoundaryTag::SymmetryX => [ComponentBc::Essential(0.0), ComponentBc::Traction(0.0)],
        BoundaryTag::SymmetryY => [ComponentBc::Traction(0.0), ComponentBc::Essential(0.0)],
    }
}

impl BoundaryConditionSet {
    /// Conditions derived from boundary tags: pressure `p` on inner-pressure
    /// pieces, free surfaces elsewhere and rollers (fixed normal displacement,
    /// zero shear traction) on the symmetry edges.
    pub fn from_tags(nodes: &NodeSet, pressure: f64) -> Self {
        let bcs = (0..nodes.boundary_count)
            .map(|i| tag_conditions(nodes.tags[i], nodes.normals[i], pressure))
            .collect();
        BoundaryConditionSet {
            nodes: bcs,
            normals: nodes.normals.clone(),
        }
    }

    /// Like [`from_tags`](Self::from_tags), for weights built on mirrored
    /// stencils: the shear-free condition on a symmetry edge is carried by
    /// the mirror images, so the tangential component obeys equilibrium. At
    /// a corner the tangential component takes the condition of the other
    /// piece, with that piece's normal.
    pub fn mirrored(nodes: &NodeSet, pressure: f64) -> Self {
        let mut out = Self::from_tags(nodes, pressure);
        for i in 0..nodes.boundary_count {
            let tangential = match nodes.tags[i] {
                BoundaryTag::SymmetryX => 1,
                BoundaryTag::SymmetryY => 0,
                _ => continue,
            };
            out.nodes[i][tangential] = match nodes.partners[i] {
                Some((tag @ (BoundaryTag::SymmetryX | BoundaryTag::SymmetryY), _)) => {
                    tag_conditions(tag, [0.0, 0.0], pressure)[tangential]
                }
                Some((tag, normal)) => {
                    out.normals[i] = normal;
                    tag_conditions(tag, normal, pressure)[tangential]
                }
                None => ComponentBc::Equilibrium,
            };
        }
        out
    }

    /// Prescribed displacements on every boundary node.
    pub fn essential(values: &[[f64; 2]]) -> Self {
        BoundaryConditionSet {
            nodes: values
                .iter()
                .map(|v| [ComponentBc::Essential(v[0]), ComponentBc::Essential(v[1])])
                .collect(),
            normals: vec![[0.0, 0.0]; values.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Prescribed values in node order.
    pub fn values(&self) -> Vec<[f64; 2]> {
        self.nodes.iter().map(|c| [c[0].value(), c[1].value()]).collect()
    }
}

/// Builds the `2N x 2N` system. Interior rows hold the Navier-Cauchy
/// operator, boundary rows hold traction or identity rows.
pub fn assemble(
    nodes: &NodeSet,
    weights: &WeightStore,
    ec: &ElasticConstants,
    bcs: &BoundaryConditionSet,
) -> Result<SparseSystem> {
    let n = nodes.len();
    if weights.node_count() != n {
        return Err(Error::DimensionMismatch { expected: n, got: weights.node_count() });
    }
    if bcs.len() != nodes.boundary_count || bcs.normals.len() != bcs.len() {
        return Err(Error::DimensionMismatch { expected: nodes.boundary_count, got: bcs.len() });
    }
    let (lam, mu) = (ec.lambda, ec.mu);
    let mut sys = SparseSystem::new(2 * n);
    for i in 0..n {
        let st = weights.stencil(i);
        let signs: Vec<(f64, f64)> = weights
            .images(i)
            .iter()
            .map(|&code| (Parity::X_COMPONENT.sign(code), Parity::Y_COMPONENT.sign(code)))
            .collect();
        let conditions = if i < nodes.boundary_count {
            bcs.nodes[i]
        } else {
            [ComponentBc::Equilibrium; 2]
        };
        for (comp, bc) in conditions.into_iter().enumerate() {
            let row = comp * n + i;
            match bc {
                ComponentBc::Equilibrium => {
                    let (wxx, wyy, wxy) = (
                        weights.weights(Operator::Dxx, i),
                        weights.weights(Operator::Dyy, i),
                        weights.weights(Operator::Dxy, i),
                    );
                    for (k, &j) in st.iter().enumerate() {
                        let (cu, cv) = if comp == 0 {
                            ((lam + 2.0 * mu) * wxx[k] + mu * wyy[k], (lam + mu) * wxy[k])
                        } else {
                            ((lam + mu) * wxy[k], mu * wxx[k] + (lam + 2.0 * mu) * wyy[k])
                        };
                        sys.add(row, j, cu * signs[k].0);
                        sys.add(row, n + j, cv * signs[k].1);
                    }
                }
                ComponentBc::Essential(v) => {
                    sys.add(row, row, 1.0);
                    sys.rhs[row] = v;
                }
                ComponentBc::Traction(t) => {
                    let nv = bcs.normals[i];
                    if !(nv[0].is_finite() && nv[1].is_finite() && nv != [0.0, 0.0]) {
                        return Err(Error::MissingNormal { node: i });
                    }
                    let (nx, ny) = (nv[0], nv[1]);
                    let (wx, wy) = (weights.weights(Operator::Dx, i), weights.weights(Operator::Dy, i));
                    for (k, &j) in st.iter().enumerate() {
                        let (cu, cv) = if comp == 0 {
                            ((lam + 2.0 * mu) * nx * wx[k] + mu * ny * wy[k], lam * nx * wy[k] + mu * ny * wx[k])
                        } else {
                            (mu * nx * wy[k] + lam * ny * wx[k], mu * nx * wx[k] + (lam + 2.0 * mu) * ny * wy[k])
                        };
                        sys.add(row, j, cu * signs[k].0);
                        sys.add(row, n + j, cv * signs[k].1);
                    }
                    sys.rhs[row] = t;
                }
            }
        }
    }
    Ok(sys)
}

/// Right-hand side from body forces and boundary values. Rows obeying
/// equilibrium get `-body_force`, the other boundary rows `boundary_rhs`.
pub fn build_rhs(
    nodes: &NodeSet,
    bcs: &BoundaryConditionSet,
    body_force: &[[f64; 2]],
    boundary_rhs: &[[f64; 2]],
) -> Result<Vec<f64>> {
    let n = nodes.len();
    if bcs.len() != nodes.boundary_count {
        return Err(Error::DimensionMismatch { expected: nodes.boundary_count, got: bcs.len() });
    }
    if body_force.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: body_force.len() });
    }
    if boundary_rhs.len() != nodes.boundary_count {
        return Err(Error::DimensionMismatch { expected: nodes.boundary_count, got: boundary_rhs.len() });
    }
    let mut rhs = vec![0.0; 2 * n];
    for i in 0..n {
        for c in 0..2 {
            let equilibrium = i >= nodes.boundary_count || bcs.nodes[i][c] == ComponentBc::Equilibrium;
            rhs[c * n + i] = if equilibrium { -body_force[i][c] } else { boundary_rhs[i][c] };
        }
    }
    Ok(rhs)
}

/// Solves for a displacement increment.
pub fn solve_elastic(
    fact: &Factorization,
    nodes: &NodeSet,
    bcs: &BoundaryConditionSet,
    body_force: &[[f64; 2]],
    boundary_rhs: &[[f64; 2]],
) -> Result<Vec<[f64; 2]>> {
    let rhs = build_rhs(nodes, bcs, body_force, boundary_rhs)?;
    let x = fact.solve(&rhs)?;
    Ok(split_field(&x))
}

/// `[u_0..u_{N-1}, v_0..v_{N-1}]` to per-node pairs.
pub fn split_field(x: &[f64]) -> Vec<[f64; 2]> {
    let n = x.len() / 2;
    (0..n).map(|i| [x[i], x[n + i]]).collect()
}

/// Per-node pairs to `[u.., v..]`.
pub fn join_field(u: &[[f64; 2]]) -> Vec<f64> {
    u.iter().map(|p| p[0]).chain(u.iter().map(|p| p[1])).collect()
}

/// Small-strain tensor of a displacement field; `zz = 0`.
pub fn strain_from_displacement(weights: &WeightStore, u: &[[f64; 2]]) -> Vec<Tensor2PS> {
    let ux: Vec<f64> = u.iter().map(|p| p[0]).collect();
    let uy: Vec<f64> = u.iter().map(|p| p[1]).collect();
    (0..u.len())
        .into_par_iter()
        .map(|i| {
            let du_dx = weights.apply_with(Operator::Dx, i, &ux, Parity::X_COMPONENT);
            let du_dy = weights.apply_with(Operator::Dy, i, &ux, Parity::X_COMPONENT);
            let dv_dx = weights.apply_with(Operator::Dx, i, &uy, Parity::Y_COMPONENT);
            let dv_dy = weights.apply_with(Operator::Dy, i, &uy, Parity::Y_COMPONENT);
            Tensor2PS::new(du_dx, dv_dy, 0.0, 0.5 * (du_dy + dv_dx))
        })
        .collect()
}

/// `2 mu eps + lambda tr(eps) I`.
pub fn stress_from_elastic_strain(ec: &ElasticConstants, eps: &Tensor2PS) -> Tensor2PS {
    *eps * (2.0 * ec.mu) + Tensor2PS::spherical(ec.lambda * eps.trace())
}

/// Inverse of [`stress_from_elastic_strain`].
pub fn elastic_strain_from_stress(ec: &ElasticConstants, sigma: &Tensor2PS) -> Tensor2PS {
    let tr_eps = sigma.trace() / (3.0 * ec.lambda + 2.0 * ec.mu);
    (*sigma - Tensor2PS::spherical(ec.lambda * tr_eps)) * (0.5 / ec.mu)
}

/// Field CSV: positions, displacement and stress, plus the accumulated
/// plastic strain when given.
pub fn write_field_csv(
    path: &Path,
    nodes: &NodeSet,
    u: &[[f64; 2]],
    stress: &[Tensor2PS],
    eqps: Option<&[f64]>,
) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(out, "x_mm,y_mm,u_mm,v_mm,sxx_GPa,syy_GPa,szz_GPa,sxy_GPa")?;
    if eqps.is_some() {
        write!(out, ",eqps")?;
    }
    writeln!(out)?;
    for i in 0..nodes.len() {
        let [x, y] = nodes.positions[i];
        let s = stress[i];
        write!(out, "{x},{y},{},{},{},{},{},{}", u[i][0], u[i][1], s.xx, s.yy, s.zz, s.xy)?;
        if let Some(e) = eqps {
            write!(out, ",{}", e[i])?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}
