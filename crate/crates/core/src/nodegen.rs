//! Advancing-front fill of a domain with quasi-uniform scattered nodes, and
//! a uniform-grid index for nearest-neighbour queries.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{dist, BoundaryNode, BoundaryTag, Domain, Point};

/// Candidates spawned around each expanded node.
pub const CANDIDATES: usize = 12;

/// Candidates closer than `MIN_DISTANCE_FACTOR * h` to an accepted node are
/// discarded.
pub const MIN_DISTANCE_FACTOR: f64 = 0.85;

/// Scattered nodes. Boundary nodes occupy the first `boundary_count` slots.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSet {
    pub positions: Vec<Point>,
    pub boundary_count: usize,
    /// Outward normals of the boundary slots.
    pub normals: Vec<Point>,
    pub tags: Vec<BoundaryTag>,
    pub corners: Vec<bool>,
    /// Tag and normal of the second piece at corner slots.
    pub partners: Vec<Option<(BoundaryTag, Point)>>,
    pub h: f64,
    pub seed: u64,
}

impl NodeSet {
    /// Assembles a node set from explicit boundary and interior nodes, e.g.
    /// a regular grid for tests.
    pub fn from_parts(boundary: &[BoundaryNode], interior: &[Point], h: f64) -> Self {
        let mut positions: Vec<Point> = boundary.iter().map(|b| b.position).collect();
        positions.extend_from_slice(interior);
        NodeSet {
            positions,
            boundary_count: boundary.len(),
            normals: boundary.iter().map(|b| b.normal).collect(),
            tags: boundary.iter().map(|b| b.tag).collect(),
            corners: boundary.iter().map(|b| b.corner).collect(),
            partners: boundary.iter().map(|b| b.partner).collect(),
            h,
            seed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        i < self.boundary_count
    }

    pub fn interior_count(&self) -> usize {
        self.len() - self.boundary_count
    }

    pub fn nearest_neighbors(&self, query: Point, k: usize) -> Result<Vec<usize>> {
        KnnIndex::new(&self.positions, self.h).nearest(query, k)
    }

    /// Smallest pairwise distance, by brute force.
    pub fn separation_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                best = best.min(dist(self.positions[i], self.positions[j]));
            }
        }
        best
    }

    /// CSV with columns `x_mm,y_mm,is_boundary,nx,ny,tag`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "x_mm,y_mm,is_boundary,nx,ny,tag")?;
        for (i, p) in self.positions.iter().enumerate() {
            if self.is_boundary(i) {
                let n = self.normals[i];
                writeln!(
                    out,
                    "{:?},{:?},1,{:?},{:?},{}",
                    p[0], p[1], n[0], n[1], self.tags[i]
                )?;
            } else {
                writeln!(out, "{:?},{:?},0,0,0,interior", p[0], p[1])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Uniform background grid over a point cloud.
#[derive(Clone, Debug)]
pub struct KnnIndex<'a> {
    points: &'a [Point],
    origin: Point,
    cell: f64,
    dims: [usize; 2],
    cells: Vec<Vec<u32>>,
}

impl<'a> KnnIndex<'a> {
    pub fn new(points: &'a [Point], cell: f64) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        if points.is_empty() {
            lo = [0.0; 2];
            hi = [0.0; 2];
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
        // Keep the grid at a sane size whatever the requested cell.
        let cell = if cell > 0.0 && cell.is_finite() { cell } else { extent };
        let cell = cell.max(extent / (2.0 * (points.len() as f64).sqrt() + 1.0));
        let dims = [
            ((hi[0] - lo[0]) / cell) as usize + 1,
            ((hi[1] - lo[1]) / cell) as usize + 1,
        ];
        let mut cells = vec![Vec::new(); dims[0] * dims[1]];
        for (i, p) in points.iter().enumerate() {
            let c = Self::cell_of(lo, cell, dims, *p);
            cells[c[1] * dims[0] + c[0]].push(i as u32);
        }
        KnnIndex {
            points,
            origin: lo,
            cell,
            dims,
            cells,
        }
    }

    fn cell_of(origin: Point, cell: f64, dims: [usize; 2], p: Point) -> [usize; 2] {
        let mut c = [0; 2];
        for d in 0..2 {
            let v = ((p[d] - origin[d]) / cell).floor();
            c[d] = v.clamp(0.0, (dims[d] - 1) as f64) as usize;
        }
        c
    }

    /// The `k` nearest points, ascending by distance, ties by index.
    pub fn nearest(&self, query: Point, k: usize) -> Result<Vec<usize>> {
        let n = self.points.len();
        if k > n {
            return Err(Error::TooFewNodes { k, n });
        }
        if k == 0 {
            return Ok(Vec::new());
        }
        let qc = [
            ((query[0] - self.origin[0]) / self.cell).floor() as i64,
            ((query[1] - self.origin[1]) / self.cell).floor() as i64,
        ];
        let dims = [self.dims[0] as i64, self.dims[1] as i64];
        let mut found: Vec<(f64, usize)> = Vec::with_capacity(4 * k);
        let max_ring = (dims[0] + dims[1] + qc[0].abs() + qc[1].abs()) as usize;
        for ring in 0..=max_ring {
            let r = ring as i64;
            for cy in (qc[1] - r)..=(qc[1] + r) {
                if cy < 0 || cy >= dims[1] {
                    continue;
                }
                let on_edge_row = cy == qc[1] - r || cy == qc[1] + r;
                let xs: Vec<i64> = if on_edge_row {
                    ((qc[0] - r)..=(qc[0] + r)).collect()
                } else {
                    vec![qc[0] - r, qc[0] + r]
                };
                for cx in xs {
                    if cx < 0 || cx >= dims[0] {
                        continue;
                    }
                    for &idx in &self.cells[(cy * dims[0] + cx) as usize] {
                        let p = self.points[idx as usize];
                        let d2 = (p[0] - query[0]).powi(2) + (p[1] - query[1]).powi(2);
                        found.push((d2, idx as usize));
                    }
                }
            }
            if found.len() >= k {
                // Points in rings beyond `ring` are at least `ring * cell` away.
                let bound = ring as f64 * self.cell;
                found.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                if found[k - 1].0 <= bound * bound || found.len() == n {
                    break;
                }
            }
        }
        found.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(found.into_iter().take(k).map(|(_, i)| i).collect())
    }
}

/// Brute-force nearest neighbours, ascending by distance, ties by index.
pub fn nearest_brute_force(points: &[Point], query: Point, k: usize) -> Vec<usize> {
    let mut all: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| ((p[0] - query[0]).powi(2) + (p[1] - query[1]).powi(2), i))
        .collect();
    all.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Occupancy grid used while filling; cell size equals `h` so a rejection
/// radius below `h` only needs the 3 x 3 neighbourhood.
struct FillGrid {
    origin: Point,
    cell: f64,
    dims: [usize; 2],
    cells: Vec<Vec<u32>>,
}

impl FillGrid {
    fn new(lo: Point, hi: Point, cell: f64) -> Self {
        let dims = [
            ((hi[0] - lo[0]) / cell) as usize + 3,
            ((hi[1] - lo[1]) / cell) as usize + 3,
        ];
        FillGrid {
            origin: [lo[0] - cell, lo[1] - cell],
            cell,
            dims,
            cells: vec![Vec::new(); dims[0] * dims[1]],
        }
    }

    fn cell_of(&self, p: Point) -> [usize; 2] {
        let cx = ((p[0] - self.origin[0]) / self.cell).floor();
        let cy = ((p[1] - self.origin[1]) / self.cell).floor();
        [
            cx.clamp(0.0, (self.dims[0] - 1) as f64) as usize,
            cy.clamp(0.0, (self.dims[1] - 1) as f64) as usize,
        ]
    }

    fn insert(&mut self, p: Point, idx: usize) {
        let [cx, cy] = self.cell_of(p);
        self.cells[cy * self.dims[0] + cx].push(idx as u32);
    }

    fn has_within(&self, positions: &[Point], p: Point, radius: f64) -> bool {
        let [cx, cy] = self.cell_of(p);
        let r2 = radius * radius;
        for y in cy.saturating_sub(1)..=(cy + 1).min(self.dims[1] - 1) {
            for x in cx.saturating_sub(1)..=(cx + 1).min(self.dims[0] - 1) {
                for &j in &self.cells[y * self.dims[0] + x] {
                    let q = positions[j as usize];
                    if (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2) < r2 {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Fills `domain` with nodes of spacing `h`, seeding the front with a
/// uniform boundary discretization.
pub fn fill(domain: &Domain, h: f64, seed: u64) -> Result<NodeSet> {
    let boundary = domain.discretize_boundary(h)?;
    fill_from_boundary(domain, &boundary, h, seed)
}

pub fn fill_from_boundary(
    domain: &Domain,
    boundary: &[BoundaryNode],
    h: f64,
    seed: u64,
) -> Result<NodeSet> {
    let limit = (100.0 * domain.approximate_area() / (h * h)).ceil() as usize + boundary.len();
    let (lo, hi) = domain.bounding_box();
    let mut grid = FillGrid::new(lo, hi, h);
    let mut nodes = NodeSet::from_parts(boundary, &[], h);
    nodes.seed = seed;
    for (i, b) in boundary.iter().enumerate() {
        grid.insert(b.position, i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut queue: VecDeque<usize> = (0..boundary.len()).collect();
    let min_dist = MIN_DISTANCE_FACTOR * h;
    let step = 2.0 * PI / CANDIDATES as f64;

    while let Some(i) = queue.pop_front() {
        let center = nodes.positions[i];
        let rotation: f64 = rng.random::<f64>() * 2.0 * PI;
        for c in 0..CANDIDATES {
            let angle = rotation + c as f64 * step;
            let cand = [center[0] + h * angle.cos(), center[1] + h * angle.sin()];
            if !domain.contains(cand) || grid.has_within(&nodes.positions, cand, min_dist) {
                continue;
            }
            let idx = nodes.positions.len();
            if idx >= limit {
                return Err(Error::NodeLimitExceeded { limit });
            }
            nodes.positions.push(cand);
            grid.insert(cand, idx);
            queue.push_back(idx);
        }
    }
    Ok(nodes)
}
