//! RBF-FD stencil weights with polyharmonic splines and monomial
//! augmentation.
//!
//! For a stencil centred at `x_c` with nodes `x_1..x_n`, the weights of an
//! operator `L` solve the saddle-point system
//!
//! ```text
//! [ F   P ] [ w      ]   [ L f_j (x_c) ]
//! [ P^T 0 ] [ lambda ] = [ L p_k (x_c) ]
//! ```
//!
//! where `F_ij = phi(|x_i - x_j|)` and `P` holds the monomials up to degree
//! `m` evaluated at the stencil nodes. Coordinates are shifted to the centre
//! and scaled by the stencil radius before assembly.

use nalgebra::{DMatrix, FullPivLU};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{MirrorLines, Point};
use crate::nodegen::{KnnIndex, NodeSet};

/// Approximated differential operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Operator {
    Dx,
    Dy,
    Dxx,
    Dyy,
    Dxy,
}

impl Operator {
    pub const ALL: [Operator; 5] = [
        Operator::Dx,
        Operator::Dy,
        Operator::Dxx,
        Operator::Dyy,
        Operator::Dxy,
    ];

    fn slot(self) -> usize {
        self as usize
    }

    /// Derivative order; the scaled weights carry `radius^-order`.
    pub fn order(self) -> i32 {
        match self {
            Operator::Dx | Operator::Dy => 1,
            _ => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisConfig {
    /// PHS exponent `k`; `r^k` for odd `k`, `r^k log r` for even `k`.
    pub phs_order: u32,
    /// Highest total degree of the augmenting monomials.
    pub monomial_degree: u32,
    pub stencil_size: usize,
    /// Stencil size at boundary nodes, whose neighbourhoods are one-sided.
    pub boundary_stencil_size: usize,
}

impl Default for BasisConfig {
    fn default() -> Self {
        BasisConfig {
            phs_order: 3,
            monomial_degree: 3,
            stencil_size: 20,
            boundary_stencil_size: 30,
        }
    }
}

impl BasisConfig {
    pub fn monomial_count(&self) -> usize {
        let m = self.monomial_degree as usize;
        (m + 1) * (m + 2) / 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.phs_order == 0 {
            return Err(Error::InvalidBasis("PHS order must be at least 1".into()));
        }
        let smallest = self.stencil_size.min(self.boundary_stencil_size);
        if smallest < self.monomial_count() {
            return Err(Error::InvalidBasis(format!(
                "stencil size {} is below the {} monomials of degree {}",
                smallest,
                self.monomial_count(),
                self.monomial_degree
            )));
        }
        Ok(())
    }

    /// Stencil size of every node.
    pub fn sizes(&self, nodes: &NodeSet) -> Vec<usize> {
        (0..nodes.len())
            .map(|i| if nodes.is_boundary(i) { self.boundary_stencil_size } else { self.stencil_size })
            .collect()
    }
}

/// Stencil index lists, one per node, stored back to back. The first entry
/// of every stencil is its centre.
///
/// With mirror lines, a stencil entry may refer to a reflected copy of a
/// node; `images` holds the [`MirrorLines`] image code of every entry (0 for
/// the node itself).
#[derive(Clone, Debug, PartialEq)]
pub struct Stencils {
    offsets: Vec<usize>,
    indices: Vec<usize>,
    images: Vec<u8>,
    pub mirrors: MirrorLines,
}

impl Stencils {
    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    fn range(&self, node: usize) -> std::ops::Range<usize> {
        self.offsets[node]..self.offsets[node + 1]
    }

    pub fn of(&self, node: usize) -> &[usize] {
        &self.indices[self.range(node)]
    }

    pub fn images(&self, node: usize) -> &[u8] {
        &self.images[self.range(node)]
    }

    /// Total number of stencil entries.
    pub fn entry_count(&self) -> usize {
        self.indices.len()
    }

    /// Stencil point coordinates, images resolved.
    pub fn points(&self, nodes: &NodeSet, node: usize) -> Vec<Point> {
        self.of(node)
            .iter()
            .zip(self.images(node))
            .map(|(&j, &code)| {
                self.mirrors
                    .image(nodes.positions[j], code)
                    .expect("image codes only use existing lines")
            })
            .collect()
    }
}

/// For every node, its `n` nearest neighbours including itself.
pub fn build_stencils(nodes: &NodeSet, n: usize) -> Result<Stencils> {
    build_stencils_mirrored(nodes, n, MirrorLines::default())
}

/// Nearest-neighbour stencils over the nodes and their reflections across
/// `mirrors`. Nodes lying on a line have no image across it.
pub fn build_stencils_mirrored(nodes: &NodeSet, n: usize, mirrors: MirrorLines) -> Result<Stencils> {
    build_stencils_sized(nodes, &vec![n; nodes.len()], mirrors)
}

/// Like [`build_stencils_mirrored`] with a separate stencil size per node.
pub fn build_stencils_sized(nodes: &NodeSet, sizes: &[usize], mirrors: MirrorLines) -> Result<Stencils> {
    assert_eq!(sizes.len(), nodes.len(), "one stencil size per node");
    if let Some(&n) = sizes.iter().find(|&&n| n > nodes.len()) {
        return Err(Error::TooFewNodes { k: n, n: nodes.len() });
    }
    let tol = 1e-9 * nodes.h.max(f64::MIN_POSITIVE);
    let mut cloud: Vec<Point> = nodes.positions.clone();
    let mut origin: Vec<(usize, u8)> = (0..nodes.len()).map(|i| (i, 0)).collect();
    for code in 1..4u8 {
        for (i, &p) in nodes.positions.iter().enumerate() {
            if mirrors.touches(p, code, tol) {
                continue;
            }
            if let Some(q) = mirrors.image(p, code) {
                cloud.push(q);
                origin.push((i, code));
            }
        }
    }
    let index = KnnIndex::new(&cloud, nodes.h);
    let per_node: Result<Vec<Vec<usize>>> = nodes
        .positions
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut s = index.nearest(p, sizes[i])?;
            // Coincident points would tie with the centre; keep the centre first.
            if let Some(pos) = s.iter().position(|&j| j == i) {
                s[..=pos].rotate_right(1);
            }
            Ok(s)
        })
        .collect();
    let per_node = per_node?;
    let mut offsets = Vec::with_capacity(per_node.len() + 1);
    offsets.push(0);
    for s in &per_node {
        offsets.push(offsets.last().unwrap() + s.len());
    }
    let flat: Vec<usize> = per_node.into_iter().flatten().collect();
    Ok(Stencils {
        offsets,
        indices: flat.iter().map(|&k| origin[k].0).collect(),
        images: flat.iter().map(|&k| origin[k].1).collect(),
        mirrors,
    })
}

/// Sign behaviour of a nodal field under reflection across the vertical
/// (`odd_x`) and horizontal (`odd_y`) mirror lines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Parity {
    pub odd_x: bool,
    pub odd_y: bool,
}

impl Parity {
    /// Scalars and normal stresses.
    pub const EVEN: Parity = Parity { odd_x: false, odd_y: false };
    /// x displacement.
    pub const X_COMPONENT: Parity = Parity { odd_x: true, odd_y: false };
    /// y displacement.
    pub const Y_COMPONENT: Parity = Parity { odd_x: false, odd_y: true };
    /// Shear stress or strain.
    pub const SHEAR: Parity = Parity { odd_x: true, odd_y: true };

    /// Factor applied to a node value seen through image `code`.
    pub fn sign(self, code: u8) -> f64 {
        let flips = (self.odd_x && code & 1 != 0) as u8 + (self.odd_y && code & 2 != 0) as u8;
        if flips % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Radial function `phi(r)` and its first two radial derivatives.
fn phs(k: u32, r: f64) -> (f64, f64, f64) {
    let kf = k as f64;
    if k % 2 == 1 {
        let f = r.powi(k as i32);
        let d1 = kf * r.powi(k as i32 - 1);
        let d2 = kf * (kf - 1.0) * r.powi(k as i32 - 2);
        (f, d1, d2)
    } else {
        if r == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let lr = r.ln();
        let f = r.powi(k as i32) * lr;
        let d1 = r.powi(k as i32 - 1) * (kf * lr + 1.0);
        let d2 = r.powi(k as i32 - 2) * (kf * (kf - 1.0) * lr + 2.0 * kf - 1.0);
        (f, d1, d2)
    }
}

/// `L phi(|x - x_i|)` evaluated at the centre, with `d = x_c - x_i`.
/// All derivatives are defined as 0 at `r = 0` (the Hessian of `r^3`
/// vanishes at the origin).
fn phs_operator(k: u32, op: Operator, d: Point) -> f64 {
    let r = d[0].hypot(d[1]);
    if r == 0.0 {
        return 0.0;
    }
    let (_, d1, d2) = phs(k, r);
    let (x, y) = (d[0], d[1]);
    match op {
        Operator::Dx => d1 * x / r,
        Operator::Dy => d1 * y / r,
        Operator::Dxx => d2 * x * x / (r * r) + d1 / r * (1.0 - x * x / (r * r)),
        Operator::Dyy => d2 * y * y / (r * r) + d1 / r * (1.0 - y * y / (r * r)),
        Operator::Dxy => (d2 - d1 / r) * x * y / (r * r),
    }
}

/// Exponents `(a, b)` of `x^a y^b`, ordered by total degree.
pub fn monomial_exponents(degree: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for total in 0..=degree {
        for b in 0..=total {
            out.push((total - b, b));
        }
    }
    out
}

/// `L (x^a y^b)` at the origin.
fn monomial_operator(op: Operator, (a, b): (u32, u32)) -> f64 {
    match (op, a, b) {
        (Operator::Dx, 1, 0) | (Operator::Dy, 0, 1) | (Operator::Dxy, 1, 1) => 1.0,
        (Operator::Dxx, 2, 0) | (Operator::Dyy, 0, 2) => 2.0,
        _ => 0.0,
    }
}

/// Weights of all five operators at every node.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightStore {
    pub stencils: Stencils,
    weights: [Vec<f64>; 5],
}

impl WeightStore {
    pub fn build(nodes: &NodeSet, cfg: &BasisConfig) -> Result<Self> {
        cfg.validate()?;
        Self::build_mirrored(nodes, cfg, MirrorLines::default())
    }

    /// Weights on stencils that see reflected copies of the nodes.
    pub fn build_mirrored(nodes: &NodeSet, cfg: &BasisConfig, mirrors: MirrorLines) -> Result<Self> {
        cfg.validate()?;
        let stencils = build_stencils_sized(nodes, &cfg.sizes(nodes), mirrors)?;
        Self::from_stencils(nodes, stencils, cfg)
    }

    pub fn from_stencils(nodes: &NodeSet, stencils: Stencils, cfg: &BasisConfig) -> Result<Self> {
        cfg.validate()?;
        let per_node: Result<Vec<[Vec<f64>; 5]>> = (0..stencils.node_count())
            .into_par_iter()
            .map(|c| {
                let pts = stencils.points(nodes, c);
                stencil_weights(&pts, cfg, &Operator::ALL).map_err(|_| Error::SingularStencil { node: c })
            })
            .collect();
        let mut weights: [Vec<f64>; 5] = Default::default();
        for w in weights.iter_mut() {
            w.reserve(stencils.entry_count());
        }
        for node in per_node? {
            for (slot, w) in node.into_iter().enumerate() {
                weights[slot].extend(w);
            }
        }
        Ok(WeightStore { stencils, weights })
    }

    pub fn stencil(&self, node: usize) -> &[usize] {
        self.stencils.of(node)
    }

    pub fn images(&self, node: usize) -> &[u8] {
        self.stencils.images(node)
    }

    pub fn weights(&self, op: Operator, node: usize) -> &[f64] {
        &self.weights[op.slot()][self.stencils.range(node)]
    }

    pub fn node_count(&self) -> usize {
        self.stencils.node_count()
    }

    /// Applies operator `op` at `node` to an even nodal field.
    pub fn apply(&self, op: Operator, node: usize, field: &[f64]) -> f64 {
        apply(self.weights(op, node), self.stencil(node), field)
    }

    /// Applies `op` to a field with the given mirror parity.
    pub fn apply_with(&self, op: Operator, node: usize, field: &[f64], parity: Parity) -> f64 {
        if parity == Parity::EVEN {
            return self.apply(op, node, field);
        }
        self.weights(op, node)
            .iter()
            .zip(self.stencil(node))
            .zip(self.images(node))
            .map(|((w, &j), &code)| w * parity.sign(code) * field[j])
            .sum()
    }

    /// Applies `op` at every node.
    pub fn apply_all(&self, op: Operator, field: &[f64]) -> Vec<f64> {
        (0..self.node_count()).map(|c| self.apply(op, c, field)).collect()
    }

    /// CSV dump of one node's stencil and weights.
    pub fn write_node_csv(&self, nodes: &NodeSet, node: usize, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "index,x_mm,y_mm,w_dx_per_mm,w_dy_per_mm,w_dxx_per_mm2,w_dyy_per_mm2,w_dxy_per_mm2")?;
        let points = self.stencils.points(nodes, node);
        for (k, &j) in self.stencil(node).iter().enumerate() {
            let p = points[k];
            write!(out, "{j},{:?},{:?}", p[0], p[1])?;
            for op in Operator::ALL {
                write!(out, ",{:?}", self.weights(op, node)[k])?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `sum_i w_i g(x_i)` over a stencil.
pub fn apply(weights: &[f64], stencil: &[usize], field: &[f64]) -> f64 {
    weights
        .iter()
        .zip(stencil)
        .map(|(w, &j)| w * field[j])
        .sum()
}

/// Weights of one operator for every node of a stencil table.
pub fn compute_weights(
    nodes: &NodeSet,
    stencils: &Stencils,
    cfg: &BasisConfig,
    op: Operator,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(stencils.entry_count());
    for c in 0..stencils.node_count() {
        let pts = stencils.points(nodes, c);
        let [w] = stencil_weights(&pts, cfg, &[op])
            .map_err(|_| Error::SingularStencil { node: c })?
            .try_into()
            .expect("one operator requested");
        out.extend(w);
    }
    Ok(out)
}

/// Weights for the stencil `points` (centre first) and each of `ops`.
/// Returns `Err(())` for a singular local system.
pub fn stencil_weights<const K: usize>(
    points: &[Point],
    cfg: &BasisConfig,
    ops: &[Operator; K],
) -> std::result::Result<[Vec<f64>; K], ()> {
    let n = points.len();
    let monomials = monomial_exponents(cfg.monomial_degree);
    let np = monomials.len();
    let center = points[0];
    let radius = points
        .iter()
        .map(|p| (p[0] - center[0]).hypot(p[1] - center[1]))
        .fold(0.0, f64::max);
    let scale = if radius > 0.0 { radius } else { 1.0 };
    let local: Vec<Point> = points
        .iter()
        .map(|p| [(p[0] - center[0]) / scale, (p[1] - center[1]) / scale])
        .collect();

    let dim = n + np;
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            let r = (local[i][0] - local[j][0]).hypot(local[i][1] - local[j][1]);
            a[(i, j)] = phs(cfg.phs_order, r).0;
        }
        for (k, &(ea, eb)) in monomials.iter().enumerate() {
            let v = local[i][0].powi(ea as i32) * local[i][1].powi(eb as i32);
            a[(i, n + k)] = v;
            a[(n + k, i)] = v;
        }
    }
    let mut rhs = DMatrix::<f64>::zeros(dim, K);
    for (col, &op) in ops.iter().enumerate() {
        for i in 0..n {
            rhs[(i, col)] = phs_operator(cfg.phs_order, op, [-local[i][0], -local[i][1]]);
        }
        for (k, &e) in monomials.iter().enumerate() {
            rhs[(n + k, col)] = monomial_operator(op, e);
        }
    }

    let lu = FullPivLU::new(a);
    let diag = lu.u().diagonal();
    let max_pivot = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min_pivot = diag.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if !(max_pivot > 0.0) || min_pivot <= 1e-13 * max_pivot {
        return Err(());
    }
    let sol = lu.solve(&rhs).ok_or(())?;
    let mut out: [Vec<f64>; K] = std::array::from_fn(|_| Vec::with_capacity(n));
    for (col, &op) in ops.iter().enumerate() {
        let unscale = scale.powi(-op.order());
        out[col].extend((0..n).map(|i| sol[(i, col)] * unscale));
        if out[col].iter().any(|w| !w.is_finite()) {
            return Err(());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::nodegen::fill;

    fn grid(nx: usize, spacing: f64) -> NodeSet {
        let mut pts = Vec::new();
        for j in 0..nx {
            for i in 0..nx {
                pts.push([i as f64 * spacing, j as f64 * spacing]);
            }
        }
        NodeSet::from_parts(&[], &pts, spacing)
    }

    #[test]
    fn stencil_of_size_one_is_self() {
        let nodes = grid(4, 1.0);
        let s = build_stencils(&nodes, 1).unwrap();
        for i in 0..nodes.len() {
            assert_eq!(s.of(i), &[i]);
        }
        assert!(build_stencils(&nodes, 17).is_err());
    }

    #[test]
    fn five_point_cross_on_grid() {
        let nodes = grid(5, 1.0);
        let s = build_stencils(&nodes, 5).unwrap();
        let center = 12;
        let mut got = s.of(center).to_vec();
        assert_eq!(got[0], center);
        got.sort();
        assert_eq!(got, vec![7, 11, 12, 13, 17]);
    }

    #[test]
    fn stencils_match_brute_force() {
        let d = Domain::rectangle([0.0, 0.0], [1.0, 1.0]).unwrap();
        let nodes = fill(&d, 0.04, 5).unwrap();
        let s = build_stencils(&nodes, 20).unwrap();
        for i in 0..nodes.len() {
            let brute = crate::nodegen::nearest_brute_force(&nodes.positions, nodes.positions[i], 20);
            assert_eq!(s.of(i), brute.as_slice());
        }
    }

    #[test]
    fn exactness_on_low_order_fields() {
        let d = Domain::quarter_annulus(100.0, 200.0).unwrap();
        let nodes = fill(&d, 8.0, 2).unwrap();
        let w = WeightStore::build(&nodes, &BasisConfig::default()).unwrap();
        let f = |g: &dyn Fn(Point) -> f64| nodes.positions.iter().map(|&p| g(p)).collect::<Vec<_>>();
        let x = f(&|p| p[0]);
        let r2 = f(&|p| p[0] * p[0] + p[1] * p[1]);
        let xy = f(&|p| p[0] * p[1]);
        let ones = f(&|_| 1.0);
        let zeros = f(&|_| 0.0);
        for c in 0..nodes.len() {
            assert!((w.apply(Operator::Dx, c, &x) - 1.0).abs() < 1e-7);
            let lap = w.apply(Operator::Dxx, c, &r2) + w.apply(Operator::Dyy, c, &r2);
            assert!((lap - 4.0).abs() < 1e-6, "laplacian {lap}");
            assert!((w.apply(Operator::Dxy, c, &xy) - 1.0).abs() < 1e-6);
            for op in Operator::ALL {
                assert!(w.apply(op, c, &ones).abs() < 1e-8);
                assert_eq!(w.apply(op, c, &zeros), 0.0);
            }
        }
    }

    #[test]
    fn single_operator_matches_store() {
        let d = Domain::rectangle([0.0, 0.0], [1.0, 1.0]).unwrap();
        let nodes = fill(&d, 0.1, 1).unwrap();
        let cfg = BasisConfig::default();
        let store = WeightStore::build(&nodes, &cfg).unwrap();
        let single = compute_weights(&nodes, &store.stencils, &cfg, Operator::Dxy).unwrap();
        let mut start = 0;
        for c in 0..nodes.len() {
            let a = store.weights(Operator::Dxy, c);
            let b = &single[start..start + a.len()];
            start += a.len();
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }
    }

    #[test]
    fn degenerate_stencil_is_reported() {
        // Collinear nodes cannot carry quadratic monomials in y.
        let pts: Vec<Point> = (0..30).map(|i| [i as f64, 0.0]).collect();
        let nodes = NodeSet::from_parts(&[], &pts, 1.0);
        let err = WeightStore::build(&nodes, &BasisConfig::default()).unwrap_err();
        assert!(matches!(err, Error::SingularStencil { .. }));
    }

    #[test]
    fn even_phs_order_reproduces_polynomials() {
        let d = Domain::rectangle([0.0, 0.0], [1.0, 1.0]).unwrap();
        let nodes = fill(&d, 0.1, 1).unwrap();
        let cfg = BasisConfig {
            phs_order: 4,
            monomial_degree: 2,
            stencil_size: 15,
            boundary_stencil_size: 15,
        };
        let w = WeightStore::build(&nodes, &cfg).unwrap();
        let g: Vec<f64> = nodes.positions.iter().map(|p| p[0] * p[0] - 3.0 * p[1]).collect();
        for c in 0..nodes.len() {
            assert!((w.apply(Operator::Dxx, c, &g) - 2.0).abs() < 1e-6);
            assert!((w.apply(Operator::Dy, c, &g) + 3.0).abs() < 1e-7);
        }
    }

    #[test]
    fn mirrored_stencils_see_images() {
        let d = Domain::quarter_annulus(100.0, 200.0).unwrap();
        let nodes = fill(&d, 8.0, 3).unwrap();
        let mirrors = d.mirror_lines();
        let w = WeightStore::build_mirrored(&nodes, &BasisConfig::default(), mirrors).unwrap();
        let mut imaged = 0;
        for c in 0..nodes.len() {
            assert_eq!(w.stencil(c)[0], c);
            assert_eq!(w.images(c)[0], 0);
            let pts = w.stencils.points(&nodes, c);
            // Nearest-first against a brute-force search over the augmented cloud.
            let dmax = pts.iter().map(|q| crate::geometry::dist(*q, nodes.positions[c])).fold(0.0, f64::max);
            for code in 0..4u8 {
                for (j, &p) in nodes.positions.iter().enumerate() {
                    if code > 0 && mirrors.touches(p, code, 1e-6) {
                        continue;
                    }
                    let q = mirrors.image(p, code).unwrap();
                    let inside = w.stencil(c).iter().zip(w.images(c)).any(|(&s, &k)| s == j && k == code);
                    if !inside {
                        assert!(crate::geometry::dist(q, nodes.positions[c]) >= dmax - 1e-9);
                    }
                }
            }
            imaged += w.images(c).iter().filter(|&&k| k != 0).count();
        }
        assert!(imaged > 0);

        // A field with the symmetry of the x displacement: odd in x, even in y.
        let ux: Vec<f64> = nodes.positions.iter().map(|p| p[0] * (1.0 + 0.01 * p[1] * p[1])).collect();
        let uy: Vec<f64> = nodes.positions.iter().map(|p| p[1] * p[1] * p[1] * 1e-3 + p[1] * p[0] * p[0] * 1e-3).collect();
        for c in 0..nodes.len() {
            let [x, y] = nodes.positions[c];
            let dux = w.apply_with(Operator::Dx, c, &ux, Parity::X_COMPONENT);
            assert!((dux - (1.0 + 0.01 * y * y)).abs() < 1e-6 * (1.0 + 0.01 * y * y), "node {c}");
            let duy = w.apply_with(Operator::Dy, c, &uy, Parity::Y_COMPONENT);
            let exact = 3e-3 * y * y + 1e-3 * x * x;
            assert!((duy - exact).abs() < 1e-6 * exact.max(1.0), "node {c}: {duy} vs {exact}");
        }
    }

    #[test]
    fn boundary_nodes_get_larger_stencils() {
        let domain = Domain::quarter_annulus(100.0, 200.0).unwrap();
        let nodes = fill(&domain, 8.0, 1).unwrap();
        let w = WeightStore::build(&nodes, &BasisConfig::default()).unwrap();
        for c in 0..nodes.len() {
            let expected = if nodes.is_boundary(c) { 30 } else { 20 };
            assert_eq!(w.stencil(c).len(), expected);
            assert_eq!(w.weights(Operator::Dxx, c).len(), expected);
        }
    }

    #[test]
    fn parity_signs() {
        assert_eq!(Parity::EVEN.sign(3), 1.0);
        assert_eq!(Parity::X_COMPONENT.sign(1), -1.0);
        assert_eq!(Parity::X_COMPONENT.sign(2), 1.0);
        assert_eq!(Parity::Y_COMPONENT.sign(3), -1.0);
        assert_eq!(Parity::SHEAR.sign(1), -1.0);
        assert_eq!(Parity::SHEAR.sign(3), 1.0);
    }

    #[test]
    fn invalid_config() {
        let cfg = BasisConfig {
            phs_order: 3,
            monomial_degree: 3,
            stencil_size: 9,
            boundary_stencil_size: 30,
        };
        assert!(cfg.validate().is_err());
        assert!(BasisConfig { boundary_stencil_size: 9, ..Default::default() }.validate().is_err());
        assert!(BasisConfig { phs_order: 0, ..Default::default() }.validate().is_err());
    }
}
