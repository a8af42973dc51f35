//! Computational domains: a quarter annulus or an axis-aligned rectangle,
//! optionally perforated by circular cut-outs.
//!
//! Every boundary curve is the zero level set of a scalar function that is
//! positive inside the domain. A point on one curve belongs to the domain
//! boundary when all the other level functions are non-negative there, which
//! is how trimmed arcs are found without any explicit curve intersection.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Boundary-condition label carried by each boundary piece.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    InnerPressure,
    OuterFree,
    /// The `x = 0` edge; the x displacement is fixed there.
    SymmetryX,
    /// The `y = 0` edge; the y displacement is fixed there.
    SymmetryY,
    CutoutFree,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 5] = [
        BoundaryTag::InnerPressure,
        BoundaryTag::OuterFree,
        BoundaryTag::SymmetryX,
        BoundaryTag::SymmetryY,
        BoundaryTag::CutoutFree,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::InnerPressure => "inner-pressure",
            BoundaryTag::OuterFree => "outer-free",
            BoundaryTag::SymmetryX => "symmetry-x",
            BoundaryTag::SymmetryY => "symmetry-y",
            BoundaryTag::CutoutFree => "cutout-free",
        }
    }

    /// Lower value wins a shared corner. Pieces with an essential component
    /// come first.
    fn corner_precedence(self) -> u8 {
        match self {
            BoundaryTag::SymmetryX => 0,
            BoundaryTag::SymmetryY => 1,
            BoundaryTag::InnerPressure => 2,
            BoundaryTag::OuterFree => 3,
            BoundaryTag::CutoutFree => 4,
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundaryTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundaryTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidDomain(format!("unknown boundary tag '{s}'")))
    }
}

/// A disc removed from the domain.
#[derive(Clone, Debug, PartialEq)]
pub struct Cutout {
    pub center: Point,
    pub radius: f64,
    pub tag: BoundaryTag,
}

impl Cutout {
    pub fn new(center: Point, radius: f64) -> Self {
        Cutout {
            center,
            radius,
            tag: BoundaryTag::CutoutFree,
        }
    }

    pub fn with_tag(mut self, tag: BoundaryTag) -> Self {
        self.tag = tag;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outline {
    /// First-quadrant part of the annulus `inner < |p| < outer`.
    QuarterAnnulus { inner: f64, outer: f64 },
    /// Axis-aligned box; `tags` label the left, right, bottom and top sides.
    Rectangle {
        min: Point,
        max: Point,
        tags: [BoundaryTag; 4],
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    outline: Outline,
    cutouts: Vec<Cutout>,
    pieces: Vec<Piece>,
}

/// A node on the domain boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryNode {
    pub position: Point,
    pub normal: Point,
    pub tag: BoundaryTag,
    /// True where two boundary pieces meet; the normal there is the one of
    /// the owning piece.
    pub corner: bool,
    /// Tag and normal of the other piece meeting at a corner.
    pub partner: Option<(BoundaryTag, Point)>,
}

/// Symmetry lines of a domain: a vertical line `x = x0` and/or a horizontal
/// line `y = y0`. Image code bit 0 reflects across the vertical line, bit 1
/// across the horizontal one.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MirrorLines {
    pub x: Option<f64>,
    pub y: Option<f64>,
}

impl MirrorLines {
    pub fn is_empty(&self) -> bool {
        self.x.is_none() && self.y.is_none()
    }

    /// Image of `p` under `code`, or `None` when a required line is absent.
    pub fn image(&self, p: Point, code: u8) -> Option<Point> {
        let mut q = p;
        if code & 1 != 0 {
            q[0] = 2.0 * self.x? - q[0];
        }
        if code & 2 != 0 {
            q[1] = 2.0 * self.y? - q[1];
        }
        Some(q)
    }

    /// Whether `p` lies on the line(s) used by `code` within `tol`, so the
    /// image coincides with `p` along that direction.
    pub fn touches(&self, p: Point, code: u8, tol: f64) -> bool {
        (code & 1 != 0 && self.x.is_some_and(|x| (p[0] - x).abs() <= tol))
            || (code & 2 != 0 && self.y.is_some_and(|y| (p[1] - y).abs() <= tol))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Level {
    /// Inside means `|p - c| > r`.
    OutsideDisc { center: Point, radius: f64 },
    /// Inside means `|p - c| < r`.
    InsideDisc { center: Point, radius: f64 },
    /// Inside means `(p - origin) . inward > 0`.
    HalfPlane { origin: Point, inward: Point },
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Param {
    Arc {
        center: Point,
        radius: f64,
        from: f64,
        to: f64,
        closed: bool,
    },
    Segment { start: Point, end: Point },
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Piece {
    level: Level,
    param: Param,
    tag: BoundaryTag,
}

impl Level {
    fn eval(&self, p: Point) -> f64 {
        match *self {
            Level::OutsideDisc { center, radius } => dist(p, center) - radius,
            Level::InsideDisc { center, radius } => radius - dist(p, center),
            Level::HalfPlane { origin, inward } => {
                (p[0] - origin[0]) * inward[0] + (p[1] - origin[1]) * inward[1]
            }
        }
    }

    fn outward_normal(&self, p: Point) -> Point {
        match *self {
            Level::OutsideDisc { center, .. } => unit([center[0] - p[0], center[1] - p[1]]),
            Level::InsideDisc { center, .. } => unit([p[0] - center[0], p[1] - center[1]]),
            Level::HalfPlane { inward, .. } => [-inward[0], -inward[1]],
        }
    }
}

impl Param {
    fn range(&self) -> (f64, f64) {
        match *self {
            Param::Arc { from, to, .. } => (from, to),
            Param::Segment { .. } => (0.0, 1.0),
        }
    }

    fn point(&self, t: f64) -> Point {
        match *self {
            Param::Arc { center, radius, .. } => {
                [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            }
            Param::Segment { start, end } => [
                start[0] + t * (end[0] - start[0]),
                start[1] + t * (end[1] - start[1]),
            ],
        }
    }

    /// Arc length per unit parameter.
    fn speed(&self) -> f64 {
        match *self {
            Param::Arc { radius, .. } => radius,
            Param::Segment { start, end } => dist(start, end),
        }
    }

    fn closed(&self) -> bool {
        matches!(self, Param::Arc { closed: true, .. })
    }
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn unit(v: Point) -> Point {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

impl Domain {
    /// Quarter annulus `a < r < b` in the first quadrant with the benchmark
    /// labels: pressurised inner arc, free outer arc and two symmetry edges.
    pub fn quarter_annulus(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner && outer.is_finite()) {
            return Err(Error::InvalidDomain(format!(
                "need 0 < a < b, got a = {inner}, b = {outer}"
            )));
        }
        Self::build(
            Outline::QuarterAnnulus {
                inner,
                outer,
            },
            Vec::new(),
        )
    }

    /// Rectangle with the default side labels (symmetry on the left and
    /// bottom sides, free elsewhere).
    pub fn rectangle(min: Point, max: Point) -> Result<Self> {
        Self::rectangle_with_tags(
            min,
            max,
            [
                BoundaryTag::SymmetryX,
                BoundaryTag::OuterFree,
                BoundaryTag::SymmetryY,
                BoundaryTag::OuterFree,
            ],
        )
    }

    pub fn rectangle_with_tags(min: Point, max: Point, tags: [BoundaryTag; 4]) -> Result<Self> {
        if !(max[0] > min[0] && max[1] > min[1]) {
            return Err(Error::InvalidDomain(format!(
                "empty rectangle {min:?} .. {max:?}"
            )));
        }
        Self::build(Outline::Rectangle { min, max, tags }, Vec::new())
    }

    /// Adds a circular cut-out. Fails if the cut-out swallows an entire
    /// labelled piece of the outline.
    pub fn with_cutout(self, cutout: Cutout) -> Result<Self> {
        if !(cutout.radius > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "cut-out radius must be positive, got {}",
                cutout.radius
            )));
        }
        let mut cutouts = self.cutouts;
        cutouts.push(cutout);
        let domain = Self::build(self.outline, cutouts)?;
        let outline_pieces = domain.pieces.len() - domain.cutouts.len();
        for k in 0..outline_pieces {
            if domain.kept_intervals(k, 4096).is_empty() {
                return Err(Error::InvalidDomain(format!(
                    "cut-outs remove the whole {} boundary",
                    domain.pieces[k].tag
                )));
            }
        }
        Ok(domain)
    }

    fn build(outline: Outline, cutouts: Vec<Cutout>) -> Result<Self> {
        let mut pieces = Vec::new();
        match outline {
            Outline::QuarterAnnulus { inner, outer } => {
                let arc = |radius, level, tag| Piece {
                    level,
                    param: Param::Arc {
                        center: [0.0, 0.0],
                        radius,
                        from: 0.0,
                        to: FRAC_PI_2,
                        closed: false,
                    },
                    tag,
                };
                pieces.push(arc(
                    inner,
                    Level::OutsideDisc {
                        center: [0.0, 0.0],
                        radius: inner,
                    },
                    BoundaryTag::InnerPressure,
                ));
                pieces.push(arc(
                    outer,
                    Level::InsideDisc {
                        center: [0.0, 0.0],
                        radius: outer,
                    },
                    BoundaryTag::OuterFree,
                ));
                pieces.push(Piece {
                    level: Level::HalfPlane {
                        origin: [0.0, 0.0],
                        inward: [1.0, 0.0],
                    },
                    param: Param::Segment {
                        start: [0.0, 0.0],
                        end: [0.0, outer],
                    },
                    tag: BoundaryTag::SymmetryX,
                });
                pieces.push(Piece {
                    level: Level::HalfPlane {
                        origin: [0.0, 0.0],
                        inward: [0.0, 1.0],
                    },
                    param: Param::Segment {
                        start: [0.0, 0.0],
                        end: [outer, 0.0],
                    },
                    tag: BoundaryTag::SymmetryY,
                });
            }
            Outline::Rectangle { min, max, tags } => {
                let sides = [
                    ([min[0], min[1]], [min[0], max[1]], [1.0, 0.0]),
                    ([max[0], min[1]], [max[0], max[1]], [-1.0, 0.0]),
                    ([min[0], min[1]], [max[0], min[1]], [0.0, 1.0]),
                    ([min[0], max[1]], [max[0], max[1]], [0.0, -1.0]),
                ];
                for ((start, end, inward), tag) in sides.into_iter().zip(tags) {
                    pieces.push(Piece {
                        level: Level::HalfPlane {
                            origin: start,
                            inward,
                        },
                        param: Param::Segment { start, end },
                        tag,
                    });
                }
            }
        }
        for c in &cutouts {
            pieces.push(Piece {
                level: Level::OutsideDisc {
                    center: c.center,
                    radius: c.radius,
                },
                param: Param::Arc {
                    center: c.center,
                    radius: c.radius,
                    from: 0.0,
                    to: 2.0 * PI,
                    closed: true,
                },
                tag: c.tag,
            });
        }
        Ok(Domain {
            outline,
            cutouts,
            pieces,
        })
    }

    /// Lines carrying the symmetry-x and symmetry-y labels.
    pub fn mirror_lines(&self) -> MirrorLines {
        let mut lines = MirrorLines::default();
        for piece in &self.pieces {
            if let Param::Segment { start, end } = piece.param {
                match piece.tag {
                    BoundaryTag::SymmetryX if start[0] == end[0] => lines.x = Some(start[0]),
                    BoundaryTag::SymmetryY if start[1] == end[1] => lines.y = Some(start[1]),
                    _ => {}
                }
            }
        }
        lines
    }

    pub fn outline(&self) -> &Outline {
        &self.outline
    }

    pub fn cutouts(&self) -> &[Cutout] {
        &self.cutouts
    }

    /// Characteristic length: the outer radius or the rectangle diagonal.
    pub fn scale(&self) -> f64 {
        match self.outline {
            Outline::QuarterAnnulus { outer, .. } => outer,
            Outline::Rectangle { min, max, .. } => dist(min, max),
        }
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        match self.outline {
            Outline::QuarterAnnulus { outer, .. } => ([0.0, 0.0], [outer, outer]),
            Outline::Rectangle { min, max, .. } => (min, max),
        }
    }

    /// Strict interior test.
    pub fn contains(&self, p: Point) -> bool {
        let tol = 1e-12 * self.scale();
        self.pieces.iter().all(|piece| piece.level.eval(p) > tol)
    }

    /// Area estimate from a 512 x 512 midpoint sampling of the bounding box.
    pub fn approximate_area(&self) -> f64 {
        const M: usize = 512;
        let (lo, hi) = self.bounding_box();
        let (dx, dy) = ((hi[0] - lo[0]) / M as f64, (hi[1] - lo[1]) / M as f64);
        let mut inside = 0usize;
        for i in 0..M {
            for j in 0..M {
                let p = [lo[0] + (i as f64 + 0.5) * dx, lo[1] + (j as f64 + 0.5) * dy];
                if self.contains(p) {
                    inside += 1;
                }
            }
        }
        inside as f64 * dx * dy
    }

    fn tolerance(&self) -> f64 {
        1e-9 * self.scale()
    }

    fn kept(&self, k: usize, p: Point) -> bool {
        let tol = self.tolerance();
        self.pieces
            .iter()
            .enumerate()
            .all(|(j, piece)| j == k || piece.level.eval(p) >= -tol)
    }

    /// Parameter intervals of piece `k` that lie on the domain boundary.
    /// Returns `(from, to, closed_loop)` triples.
    fn kept_intervals(&self, k: usize, samples: usize) -> Vec<(f64, f64, bool)> {
        let param = self.pieces[k].param;
        let (t0, t1) = param.range();
        let at = |i: usize| t0 + (t1 - t0) * i as f64 / samples as f64;
        let flags: Vec<bool> = (0..=samples)
            .map(|i| self.kept(k, param.point(at(i))))
            .collect();

        let refine = |inside: f64, outside: f64| {
            let (mut a, mut b) = (inside, outside);
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                if self.kept(k, param.point(mid)) {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            a
        };

        if param.closed() {
            // Sample `samples` coincides with sample 0.
            let n = samples;
            if flags[..n].iter().all(|&f| f) {
                return vec![(t0, t1, true)];
            }
            let Some(start) = flags[..n].iter().position(|&f| !f) else {
                return Vec::new();
            };
            let step = (t1 - t0) / n as f64;
            let mut out = Vec::new();
            let mut i = 0;
            while i < n {
                let idx = (start + i) % n;
                if !flags[idx] {
                    i += 1;
                    continue;
                }
                let first = start + i;
                while i < n && flags[(start + i) % n] {
                    i += 1;
                }
                let last = start + i - 1;
                // Unwrapped parameters so that `to > from` across the seam.
                let t_first = t0 + first as f64 * step;
                let t_last = t0 + last as f64 * step;
                let from = refine(t_first, t_first - step);
                let to = refine(t_last, t_last + step);
                out.push((from, to, false));
            }
            out
        } else {
            let mut out = Vec::new();
            let mut i = 0;
            while i <= samples {
                if !flags[i] {
                    i += 1;
                    continue;
                }
                let first = i;
                while i <= samples && flags[i] {
                    i += 1;
                }
                let last = i - 1;
                let from = if first == 0 { t0 } else { refine(at(first), at(first - 1)) };
                let to = if last == samples { t1 } else { refine(at(last), at(last + 1)) };
                out.push((from, to, false));
            }
            out
        }
    }

    /// Places nodes uniformly (by arc length) on every boundary piece.
    pub fn discretize_boundary(&self, h: f64) -> Result<Vec<BoundaryNode>> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidDomain(format!("spacing must be positive, got {h}")));
        }
        let tol = self.tolerance();
        let mut nodes: Vec<BoundaryNode> = Vec::new();
        let mut corner_slots: Vec<usize> = Vec::new();
        let mut piece_id = 0;

        for (k, piece) in self.pieces.iter().enumerate() {
            let (t0, t1) = piece.param.range();
            let length = (t1 - t0) * piece.param.speed();
            let samples = ((16.0 * length / h).ceil() as usize).clamp(4096, 1 << 20);
            for (from, to, closed) in self.kept_intervals(k, samples) {
                let arc_len = (to - from) * piece.param.speed();
                if arc_len <= tol {
                    continue;
                }
                let segments = ((arc_len / h).round() as usize).max(1);
                let count = if closed { segments } else { segments + 1 };
                if count < 3 {
                    return Err(Error::BoundaryUnderResolved {
                        piece: piece_id,
                        nodes: count,
                    });
                }
                piece_id += 1;
                for i in 0..count {
                    let t = from + (to - from) * i as f64 / segments as f64;
                    let p = piece.param.point(t);
                    let node = BoundaryNode {
                        position: p,
                        normal: piece.level.outward_normal(p),
                        tag: piece.tag,
                        corner: !closed && (i == 0 || i + 1 == count),
                        partner: None,
                    };
                    if !node.corner {
                        nodes.push(node);
                        continue;
                    }
                    match corner_slots
                        .iter()
                        .copied()
                        .find(|&s| dist(nodes[s].position, p) <= tol * 10.0)
                    {
                        Some(slot) => {
                            let existing = &mut nodes[slot];
                            if node.tag.corner_precedence() < existing.tag.corner_precedence() {
                                existing.partner = Some((existing.tag, existing.normal));
                                existing.normal = node.normal;
                                existing.tag = node.tag;
                            } else {
                                existing.partner = Some((node.tag, node.normal));
                            }
                        }
                        None => {
                            corner_slots.push(nodes.len());
                            nodes.push(node);
                        }
                    }
                }
            }
        }
        Ok(nodes)
    }
}
