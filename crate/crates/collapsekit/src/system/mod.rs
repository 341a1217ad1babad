//! Inverse systems of nested spaces with retraction bonds.
//!
//! A system holds spaces `C_0 ..= C_N` and bonds `r_1 ..= r_N` with
//! `r_i: C_i -> C_{i-1}`; each `C_{i-1}` sits inside `C_i` under the
//! identity identification of its chart, and each bond fixes it
//! pointwise. Composites, stationary-set certificates, and insulation
//! verdicts are all depth-stamped: they certify the loaded prefix, never
//! the infinite system.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{CellComplex, SimplicialComplex};
use crate::geometry::{
    compose, ChartMetric, ConvexRegion, GeometryError, MetricSpace, Point, RetractionMap,
    SimplicialMap,
};

mod checks;
mod sets;

pub use checks::{
    fully_insulated_check, insulated_check, stationary_check, InsulationOutcome,
    InsulationReport, StationaryOutcome, StationaryReport, SystemVerdict,
};
pub use sets::{
    normalize_pieces, pieces_equal, pl_preimage, schedule_cell_images, star_family,
    IntervalPiece, OpenSetRep,
};

/// One space of an inverse system, tagged by its chart model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Space {
    /// A closed interval of the line.
    Interval { lo: f64, hi: f64 },
    /// A star of unit segments around a center; arms are numbered
    /// `1 ..= arms` and `arms = 0` is the bare center.
    Star { arms: usize },
    /// The cube `[0,1]^dim`; lower-dimensional points are identified
    /// with zero-padded ones.
    Cube { dim: usize },
    /// A convex region of the plane (or of R^d) with the Euclidean
    /// metric.
    Region { region: ConvexRegion },
    /// A finite simplicial complex; `path` metrics treat it as a graph
    /// of unit edges hanging from `root`.
    Complex {
        complex: SimplicialComplex,
        metric: ComplexMetric,
        root: u32,
    },
    /// A mapping telescope over `stages[0] ..= stages[top]` glued by
    /// `maps[i]: stages[i+1] -> stages[i]`; points are cylinder charts.
    Telescope {
        stages: Vec<SimplicialComplex>,
        maps: Vec<SimplicialMap>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComplexMetric {
    /// Chart-local simplicial metric (edge length sqrt(2)).
    Chart,
    /// Graph path metric with unit edges, for trees.
    Path,
}

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("bond indices ({i}, {j}) outside the loaded prefix of depth {depth}")]
    IndexOutOfRange { i: usize, j: usize, depth: usize },
    #[error("system structure mismatch: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl Space {
    /// Membership in the space, with a small tolerance at boundaries.
    pub fn contains(&self, p: &Point) -> bool {
        let tol = 1e-9;
        match (self, p) {
            (Space::Interval { lo, hi }, Point::Scalar { x }) => {
                *x >= lo - tol && *x <= hi + tol
            }
            (Space::Star { arms }, Point::Arm { arm, s }) => {
                (*s == 0.0 || (1..=*arms).contains(arm)) && *s >= 0.0 && *s <= 1.0 + tol
            }
            (Space::Cube { dim }, Point::Vector { coords }) => {
                // Trailing zeros embed a point of a lower cube, so a
                // longer vector still belongs here when its tail is flat.
                coords.iter().skip(*dim).all(|c| c.abs() <= tol)
                    && coords
                        .iter()
                        .take(*dim)
                        .all(|c| *c >= -tol && *c <= 1.0 + tol)
            }
            (Space::Region { region }, Point::Vector { coords }) => region.contains(coords, tol),
            (Space::Complex { complex, .. }, Point::Simplicial { .. }) => {
                match p.minimal_carrier() {
                    Some(c) => complex.cells().contains(&c),
                    None => false,
                }
            }
            (Space::Telescope { stages, .. }, Point::Cylinder { level, base, .. }) => {
                *level < stages.len()
                    && match base.minimal_carrier() {
                        Some(c) => stages[*level].cells().contains(&c),
                        None => false,
                    }
            }
            _ => false,
        }
    }

    /// Chart metric of the space. Pairs the chart cannot relate come
    /// back as infinity; the product metric caps them at 1.
    pub fn dist(&self, a: &Point, b: &Point) -> f64 {
        match self {
            Space::Complex {
                metric: ComplexMetric::Path,
                complex,
                root,
            } => tree_path_dist(complex, *root, a, b).unwrap_or(f64::INFINITY),
            Space::Telescope { maps, .. } => {
                telescope_dist(maps, a, b).unwrap_or(f64::INFINITY)
            }
            _ => ChartMetric.dist(a, b),
        }
    }

    /// Deterministic sample grid with roughly `1/density` points per
    /// unit length, capped so high-dimensional cubes stay tractable.
    pub fn grid(&self, density: f64) -> Vec<Point> {
        let density = density.clamp(1e-6, 1.0);
        match self {
            Space::Interval { lo, hi } => {
                let steps = (((hi - lo) / density).round() as usize).max(1);
                (0..=steps)
                    .map(|k| Point::scalar(lo + (hi - lo) * k as f64 / steps as f64))
                    .collect()
            }
            Space::Star { arms } => {
                let steps = ((1.0 / density).round() as usize).max(1);
                let mut out = vec![Point::arm(0, 0.0)];
                for arm in 1..=*arms {
                    for k in 1..=steps {
                        out.push(Point::arm(arm, k as f64 / steps as f64));
                    }
                }
                out
            }
            Space::Cube { dim } => {
                if *dim == 0 {
                    return vec![Point::vector(Vec::new())];
                }
                let budget = 20_000f64;
                let per_axis = budget
                    .powf(1.0 / *dim as f64)
                    .floor()
                    .min(1.0 / density + 1.0)
                    .max(2.0) as usize;
                let steps = per_axis - 1;
                let mut out = Vec::new();
                let mut idx = vec![0usize; *dim];
                loop {
                    out.push(Point::vector(
                        idx.iter()
                            .map(|k| *k as f64 / steps as f64)
                            .collect::<Vec<f64>>(),
                    ));
                    let mut axis = 0;
                    loop {
                        if axis == *dim {
                            return out;
                        }
                        idx[axis] += 1;
                        if idx[axis] <= steps {
                            break;
                        }
                        idx[axis] = 0;
                        axis += 1;
                    }
                }
            }
            Space::Region { region } => region_grid(region, density),
            Space::Complex { complex, .. } => complex_grid(complex, density),
            Space::Telescope { stages, .. } => {
                let mut out = Vec::new();
                for (level, stage) in stages.iter().enumerate() {
                    let heights: Vec<f64> = if level == 0 {
                        vec![0.0]
                    } else {
                        let steps = ((1.0 / density).round() as usize).clamp(1, 8);
                        (1..=steps)
                            .map(|k| (level - 1) as f64 + k as f64 / steps as f64)
                            .collect()
                    };
                    for base in complex_grid(stage, density.max(0.25)) {
                        for h in &heights {
                            out.push(
                                Point::cylinder(level, base.clone(), *h)
                                    .expect("heights stay in the level band"),
                            );
                        }
                    }
                }
                out
            }
        }
    }
}

/// Path distance on a rooted tree complex with unit edges.
fn tree_path_dist(
    complex: &SimplicialComplex,
    root: u32,
    a: &Point,
    b: &Point,
) -> Option<f64> {
    tree_path_dist_with(&tree_parents(complex, root), a, b)
}

/// Same as [`tree_path_dist`] against a parent table computed once by
/// the caller; cuts out the per-call breadth-first walk in bulk
/// distance computations.
pub fn tree_path_dist_with(parent: &BTreeMap<u32, u32>, a: &Point, b: &Point) -> Option<f64> {
    let pos_a = position_in(parent, a)?;
    let pos_b = position_in(parent, b)?;
    // Same-edge points: compare offsets directly.
    if pos_a.0 == pos_b.0 && edge_of(a) == edge_of(b) && edge_of(a).is_some() {
        return Some((pos_a.1 - pos_b.1).abs());
    }
    let depth = |v: u32| -> i64 {
        let mut d = 0;
        let mut cur = v;
        while let Some(p) = parent.get(&cur) {
            d += 1;
            cur = *p;
        }
        d
    };
    let lca = |mut u: u32, mut v: u32| -> u32 {
        let (mut du, mut dv) = (depth(u), depth(v));
        while du > dv {
            u = parent[&u];
            du -= 1;
        }
        while dv > du {
            v = parent[&v];
            dv -= 1;
        }
        while u != v {
            u = parent[&u];
            v = parent[&v];
        }
        u
    };
    let vdist = |u: u32, v: u32| -> f64 { (depth(u) + depth(v) - 2 * depth(lca(u, v))) as f64 };
    // Anchor each point on the two ends of its edge and take the best
    // combination; in a tree one of them realizes the geodesic.
    let anchors = |p: &Point, pos: (u32, f64)| -> Vec<(u32, f64)> {
        match edge_of(p) {
            Some((u, v)) => {
                let t = pos.1;
                if parent.get(&v) == Some(&u) {
                    vec![(u, t), (v, 1.0 - t)]
                } else {
                    vec![(v, t), (u, 1.0 - t)]
                }
            }
            None => vec![(pos.0, 0.0)],
        }
    };
    let mut best = f64::INFINITY;
    for (u, du) in anchors(a, pos_a) {
        for (v, dv) in anchors(b, pos_b) {
            best = best.min(du + dv + vdist(u, v));
        }
    }
    Some(best)
}

fn edge_of(p: &Point) -> Option<(u32, u32)> {
    match p.minimal_carrier() {
        Some(c) => match c.vertices() {
            [u, v] => Some((*u, *v)),
            _ => None,
        },
        None => None,
    }
}

/// (nearest root-ward vertex, offset toward the child), as in the tree
/// clamp chart.
fn position_in(parent: &BTreeMap<u32, u32>, p: &Point) -> Option<(u32, f64)> {
    let reduced = p.reduce_carrier();
    let (carrier, coords) = match &reduced {
        Point::Simplicial { carrier, coords } => (carrier, coords),
        _ => return None,
    };
    match carrier.vertices() {
        [v] => Some((*v, 0.0)),
        [a, b] => {
            if parent.get(a) == Some(b) {
                Some((*b, coords[0]))
            } else if parent.get(b) == Some(a) {
                Some((*a, coords[1]))
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Parent table of a tree complex, reconstructed from its edges.
pub fn tree_parents(complex: &SimplicialComplex, root: u32) -> BTreeMap<u32, u32> {
    let mut adjacency: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for cell in complex.cells() {
        if let [u, v] = cell.vertices() {
            adjacency.entry(*u).or_default().push(*v);
            adjacency.entry(*v).or_default().push(*u);
        }
    }
    let mut parent = BTreeMap::new();
    let mut queue = std::collections::VecDeque::from([root]);
    let mut seen = std::collections::BTreeSet::from([root]);
    while let Some(u) = queue.pop_front() {
        for v in adjacency.get(&u).into_iter().flatten() {
            if seen.insert(*v) {
                parent.insert(*v, u);
                queue.push_back(*v);
            }
        }
    }
    parent
}

/// Telescope quasi-metric: height difference plus the chart distance of
/// the bases pushed down to the lower level.
fn telescope_dist(maps: &[SimplicialMap], a: &Point, b: &Point) -> Option<f64> {
    let (la, ba, ha) = cylinder_parts(a)?;
    let (lb, bb, hb) = cylinder_parts(b)?;
    let common = la.min(lb);
    let push = |mut base: Point, from: usize| -> Option<Point> {
        let mut level = from;
        while level > common {
            base = maps.get(level - 1)?.eval(&base).ok()?;
            level -= 1;
        }
        Some(base)
    };
    let pa = push(ba, la)?;
    let pb = push(bb, lb)?;
    Some((ha - hb).abs() + ChartMetric.dist(&pa, &pb))
}

fn cylinder_parts(p: &Point) -> Option<(usize, Point, f64)> {
    match p {
        Point::Cylinder {
            level,
            base,
            height,
        } => Some((*level, (**base).clone(), *height)),
        _ => None,
    }
}

fn region_grid(region: &ConvexRegion, density: f64) -> Vec<Point> {
    match region {
        ConvexRegion::Ball { center, radius } => {
            if *radius == 0.0 {
                return vec![Point::vector(center.clone())];
            }
            let steps = ((2.0 / density).round() as usize).clamp(2, 256);
            let mut out = Vec::new();
            let dim = center.len();
            if dim != 2 {
                // Only planar regions get dense grids; higher dimensions
                // fall back to the center point.
                return vec![Point::vector(center.clone())];
            }
            for jy in 0..=steps {
                for jx in 0..=steps {
                    let x = center[0] - radius + 2.0 * radius * jx as f64 / steps as f64;
                    let y = center[1] - radius + 2.0 * radius * jy as f64 / steps as f64;
                    if region.contains(&[x, y], 1e-9) {
                        out.push(Point::vector(vec![x, y]));
                    }
                }
            }
            out
        }
        ConvexRegion::Segment { a, b } => {
            let steps = ((1.0 / density).round() as usize).max(1);
            (0..=steps)
                .map(|k| {
                    let t = k as f64 / steps as f64;
                    Point::vector(
                        a.iter()
                            .zip(b)
                            .map(|(u, v)| u + t * (v - u))
                            .collect::<Vec<f64>>(),
                    )
                })
                .collect()
        }
        ConvexRegion::Polytope { .. } => {
            let rx = region.boundary_radius(&[1.0, 0.0]).unwrap_or(1.0);
            let ry = region.boundary_radius(&[0.0, 1.0]).unwrap_or(1.0);
            let (rx2, ry2) = (
                region.boundary_radius(&[-1.0, 0.0]).unwrap_or(1.0),
                region.boundary_radius(&[0.0, -1.0]).unwrap_or(1.0),
            );
            let steps = ((2.0 / density).round() as usize).clamp(2, 256);
            let mut out = Vec::new();
            for jy in 0..=steps {
                for jx in 0..=steps {
                    let x = -rx2 + (rx + rx2) * jx as f64 / steps as f64;
                    let y = -ry2 + (ry + ry2) * jy as f64 / steps as f64;
                    if region.contains(&[x, y], 1e-9) {
                        out.push(Point::vector(vec![x, y]));
                    }
                }
            }
            out
        }
    }
}

impl MetricSpace for Space {
    fn dist(&self, a: &Point, b: &Point) -> f64 {
        Space::dist(self, a, b)
    }
}

/// A space's metric with the tree parent table, when one applies,
/// computed up front. Bulk consumers (thread clouds, Hausdorff scans)
/// would otherwise rebuild it on every distance call.
pub struct CachedMetric<'a> {
    space: &'a Space,
    parents: Option<BTreeMap<u32, u32>>,
}

impl<'a> CachedMetric<'a> {
    pub fn new(space: &'a Space) -> CachedMetric<'a> {
        let parents = match space {
            Space::Complex {
                metric: ComplexMetric::Path,
                complex,
                root,
            } => Some(tree_parents(complex, *root)),
            _ => None,
        };
        CachedMetric { space, parents }
    }
}

impl MetricSpace for CachedMetric<'_> {
    fn dist(&self, a: &Point, b: &Point) -> f64 {
        match &self.parents {
            Some(parent) => tree_path_dist_with(parent, a, b).unwrap_or(f64::INFINITY),
            None => self.space.dist(a, b),
        }
    }
}

fn complex_grid(complex: &SimplicialComplex, density: f64) -> Vec<Point> {
    let mut out = Vec::new();
    let steps = ((1.0 / density).round() as usize).clamp(1, 16);
    for cell in complex.cells() {
        match cell.vertices() {
            [_] => out.push(
                Point::simplicial(cell.clone(), vec![1.0]).expect("vertex barycenter"),
            ),
            [_, _] => {
                for k in 1..steps {
                    let t = k as f64 / steps as f64;
                    out.push(
                        Point::simplicial(cell.clone(), vec![1.0 - t, t])
                            .expect("edge grid point"),
                    );
                }
            }
            verts => {
                let n = verts.len();
                out.push(
                    Point::simplicial(cell.clone(), vec![1.0 / n as f64; n])
                        .expect("barycenter"),
                );
            }
        }
    }
    out
}

/// The inverse system itself: `spaces[i]` is `C_i`, `bonds[i]` is the
/// retraction `r_{i+1}: C_{i+1} -> C_i`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InverseSystem {
    #[serde(default)]
    pub name: String,
    pub spaces: Vec<Space>,
    pub bonds: Vec<RetractionMap>,
}

impl InverseSystem {
    /// Index of the deepest loaded space.
    pub fn depth(&self) -> usize {
        self.bonds.len()
    }

    pub fn space(&self, i: usize) -> &Space {
        &self.spaces[i]
    }

    /// Structural sanity: one more space than bonds, and each bond kind
    /// matches the chart family of its endpoint spaces.
    pub fn validate(&self) -> Result<(), SystemError> {
        if self.spaces.len() != self.bonds.len() + 1 {
            return Err(SystemError::Mismatch(format!(
                "{} spaces with {} bonds",
                self.spaces.len(),
                self.bonds.len()
            )));
        }
        for (i, bond) in self.bonds.iter().enumerate() {
            let fine = match (bond, &self.spaces[i + 1], &self.spaces[i]) {
                (RetractionMap::Identity, a, b) => a == b,
                (RetractionMap::Pl1d { .. }, Space::Interval { .. }, Space::Interval { .. }) => {
                    true
                }
                (
                    RetractionMap::ArmFold { .. } | RetractionMap::ArmCrush { .. },
                    Space::Star { arms: hi },
                    Space::Star { arms: lo },
                ) => hi == &(lo + 1),
                (
                    RetractionMap::Projection { keep },
                    Space::Cube { dim: hi },
                    Space::Cube { dim: lo },
                ) => *hi == lo + 1 && keep == lo,
                (
                    RetractionMap::RadialClamp { .. }
                    | RetractionMap::NearestPoint { .. }
                    | RetractionMap::TangentDisk { .. }
                    | RetractionMap::Constant { .. },
                    Space::Region { .. },
                    Space::Region { .. },
                ) => true,
                (
                    RetractionMap::Schedule { .. }
                    | RetractionMap::ElementarySimplicial { .. }
                    | RetractionMap::TreeClamp { .. },
                    Space::Complex { .. },
                    Space::Complex { .. },
                ) => true,
                (
                    RetractionMap::Cylinder { stage, .. },
                    Space::Telescope { stages: hi, .. },
                    Space::Telescope { stages: lo, .. },
                ) => *stage == hi.len() - 1 && hi.len() == lo.len() + 1,
                _ => false,
            };
            if !fine {
                return Err(SystemError::Mismatch(format!(
                    "bond {} does not map space {} onto space {}",
                    i + 1,
                    i + 1,
                    i
                )));
            }
        }
        Ok(())
    }

    /// The composite retraction `C_j -> C_i`, built by chaining the
    /// stored bonds; `i == j` gives the identity.
    pub fn bond_composite(&self, i: usize, j: usize) -> Result<RetractionMap, SystemError> {
        if i > j || j > self.depth() {
            return Err(SystemError::IndexOutOfRange {
                i,
                j,
                depth: self.depth(),
            });
        }
        Ok(compose(self.bonds[i..j].to_vec()))
    }

    /// Evaluates the composite `C_j -> C_i` by applying the stored
    /// bonds one at a time, exactly as `bond_composite` would.
    pub fn project(&self, x: &Point, j: usize, i: usize) -> Result<Point, SystemError> {
        if i > j || j > self.depth() {
            return Err(SystemError::IndexOutOfRange {
                i,
                j,
                depth: self.depth(),
            });
        }
        let mut cur = x.clone();
        for k in (i..j).rev() {
            cur = self.bonds[k].eval(&cur)?;
        }
        Ok(cur)
    }

    /// Smallest level whose space contains the point.
    pub fn level_of(&self, x: &Point) -> Option<usize> {
        (0..self.spaces.len()).find(|i| self.spaces[*i].contains(x))
    }
}
