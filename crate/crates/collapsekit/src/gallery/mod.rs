//! Ready-made inverse systems: growing rays, cones over widening
//! fans, cube towers, tangent disks, polygon hulls, mapping telescopes,
//! tree ball filtrations, and simplex shells. Each builder returns an
//! [`InverseSystem`] that passes validation and is ready for the
//! stationary, insulation, and limit machinery.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{CellComplex, CollapseStep, Simplex, SimplicialComplex};
use crate::geometry::{ConvexRegion, GeometryError, Point, RetractionMap, SimplicialMap};
use crate::limitkit::{is_stable, product_metric, thread_from_top, LimitError, Thread};
use crate::system::{
    tree_parents, tree_path_dist_with, ComplexMetric, InverseSystem, Space, SystemError,
};

#[derive(Debug, Error)]
pub enum GalleryError {
    #[error("bad gallery spec: {0}")]
    InvalidSpec(String),
    #[error("telescope maps do not glue: {0}")]
    MapMismatch(String),
    #[error("not a tree: {0}")]
    NotATree(String),
    #[error("wrong system kind: {0}")]
    WrongSystemKind(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Limit(#[from] LimitError),
}

/// Parameters for [`build`]: which system, how deep to load it, and
/// the per-family knobs (simplex dimension, tree shape, telescope
/// preset). Unused knobs are ignored.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GallerySpec {
    pub name: String,
    pub depth: usize,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub tree: Option<String>,
    #[serde(default)]
    pub preset: Option<String>,
}

impl GallerySpec {
    pub fn new(name: impl Into<String>, depth: usize) -> GallerySpec {
        GallerySpec {
            name: name.into(),
            depth,
            dim: None,
            tree: None,
            preset: None,
        }
    }
}

pub const GALLERY_NAMES: [&str; 12] = [
    "cone-retract",
    "cone-crush",
    "ray-endpoint",
    "ray-shift",
    "ray-bucket",
    "infinite-cube",
    "tangent-disks",
    "circle-hulls",
    "telescope",
    "tree-balls",
    "tree-countable",
    "rn-shells",
];

/// Builds the named system to the requested depth.
pub fn build(spec: &GallerySpec) -> Result<InverseSystem, GalleryError> {
    if spec.depth == 0 {
        return Err(GalleryError::InvalidSpec(
            "depth must be at least 1".to_string(),
        ));
    }
    let depth = spec.depth;
    let system = match spec.name.as_str() {
        "ray-endpoint" => ray_system("ray-endpoint", depth, endpoint_bond),
        "ray-shift" => ray_system("ray-shift", depth, shift_bond),
        "ray-bucket" => ray_system("ray-bucket", depth, bucket_bond),
        "cone-retract" => cone_system("cone-retract", depth, |i| RetractionMap::ArmFold {
            from: i + 1,
        }),
        "cone-crush" => cone_system("cone-crush", depth, |i| RetractionMap::ArmCrush {
            arm: i + 1,
        }),
        "infinite-cube" => InverseSystem {
            name: "infinite-cube".to_string(),
            spaces: (0..=depth).map(|i| Space::Cube { dim: i }).collect(),
            bonds: (0..depth)
                .map(|i| RetractionMap::Projection { keep: i })
                .collect(),
        },
        "tangent-disks" => InverseSystem {
            name: "tangent-disks".to_string(),
            spaces: (0..=depth)
                .map(|i| Space::Region {
                    region: ConvexRegion::Ball {
                        center: vec![0.0, (i + 1) as f64],
                        radius: (i + 1) as f64,
                    },
                })
                .collect(),
            bonds: (0..depth)
                .map(|i| RetractionMap::TangentDisk {
                    radius: (i + 2) as f64,
                    target: (i + 1) as f64,
                })
                .collect(),
        },
        "circle-hulls" => circle_hulls(depth),
        "telescope" => {
            let preset = spec.preset.as_deref().unwrap_or("subdivision");
            let (stages, maps) = telescope_stages(preset, depth)?;
            telescope_build(stages, maps)?.1
        }
        "tree-balls" => {
            let shape = tree_shape(spec.tree.as_deref().unwrap_or("binary"))?;
            tree_balls(&shape, depth)
        }
        "tree-countable" => {
            let shape = tree_shape(spec.tree.as_deref().unwrap_or("binary"))?;
            let edges: Vec<(u32, u32)> = (1..=depth as u32)
                .map(|v| ((shape.parent)(v), v))
                .collect();
            countable_tree_filtration(&edges, 0, depth)?
        }
        "rn-shells" => {
            let n = spec.dim.unwrap_or(2);
            if n < 1 {
                return Err(GalleryError::InvalidSpec(
                    "rn-shells needs dimension at least 1".to_string(),
                ));
            }
            InverseSystem {
                name: "rn-shells".to_string(),
                spaces: (0..=depth)
                    .map(|i| Space::Region {
                        region: ConvexRegion::centered_simplex(n, (i + 1) as f64),
                    })
                    .collect(),
                bonds: (0..depth)
                    .map(|i| RetractionMap::RadialClamp {
                        target: ConvexRegion::centered_simplex(n, (i + 1) as f64),
                    })
                    .collect(),
            }
        }
        other => {
            return Err(GalleryError::InvalidSpec(format!(
                "unknown system name {other:?}; expected one of {GALLERY_NAMES:?}"
            )))
        }
    };
    system.validate()?;
    Ok(system)
}

/// Growing intervals `[0, i]` with one piecewise-linear bond per level.
fn ray_system(
    name: &str,
    depth: usize,
    bond: impl Fn(usize) -> Vec<(f64, f64)>,
) -> InverseSystem {
    InverseSystem {
        name: name.to_string(),
        spaces: (0..=depth)
            .map(|i| Space::Interval {
                lo: 0.0,
                hi: i as f64,
            })
            .collect(),
        bonds: (0..depth)
            .map(|i| RetractionMap::Pl1d {
                breakpoints: bond(i),
            })
            .collect(),
    }
}

/// `r_{i+1}` presses the newest interval onto its left endpoint.
fn endpoint_bond(i: usize) -> Vec<(f64, f64)> {
    let i = i as f64;
    if i == 0.0 {
        vec![(0.0, 0.0), (1.0, 0.0)]
    } else {
        vec![(0.0, 0.0), (i, i), (i + 1.0, i)]
    }
}

/// `r_{i+1}` folds the newest interval back and forth across the one
/// below it, producing the oscillating limit arc.
fn shift_bond(i: usize) -> Vec<(f64, f64)> {
    let i = i as f64;
    if i == 0.0 {
        vec![(0.0, 0.0), (1.0, 0.0)]
    } else {
        vec![(0.0, 0.0), (i, i), (i + 0.5, i - 1.0), (i + 1.0, i)]
    }
}

/// `r_{i+1}` sweeps the newest interval linearly back over everything
/// below it, so deep points shadow the whole base.
fn bucket_bond(i: usize) -> Vec<(f64, f64)> {
    let i = i as f64;
    if i == 0.0 {
        vec![(0.0, 0.0), (1.0, 0.0)]
    } else {
        vec![(0.0, 0.0), (i, i), (i + 1.0, 0.0)]
    }
}

/// Stars with one more arm per level; the bond folds or crushes the
/// newest arm.
fn cone_system(
    name: &str,
    depth: usize,
    bond: impl Fn(usize) -> RetractionMap,
) -> InverseSystem {
    InverseSystem {
        name: name.to_string(),
        spaces: (0..=depth).map(|i| Space::Star { arms: i }).collect(),
        bonds: (0..depth).map(bond).collect(),
    }
}

/// Point, diameter segment, then doubling polygon hulls of the unit
/// circle; bonds are the constant map, nearest-point projection, and
/// radial clamps.
fn circle_hulls(depth: usize) -> InverseSystem {
    let segment = ConvexRegion::Segment {
        a: vec![-1.0, 0.0],
        b: vec![1.0, 0.0],
    };
    let mut spaces = vec![Space::Region {
        region: ConvexRegion::Ball {
            center: vec![1.0, 0.0],
            radius: 0.0,
        },
    }];
    let mut bonds = Vec::new();
    for j in 1..=depth {
        spaces.push(Space::Region {
            region: if j == 1 {
                segment.clone()
            } else {
                ConvexRegion::regular_polygon(1 << j, 1.0, 0.0)
            },
        });
        bonds.push(match j {
            1 => RetractionMap::Constant {
                target: Point::vector(vec![1.0, 0.0]),
            },
            2 => RetractionMap::NearestPoint {
                target: segment.clone(),
            },
            _ => RetractionMap::RadialClamp {
                target: ConvexRegion::regular_polygon(1 << (j - 1), 1.0, 0.0),
            },
        });
    }
    InverseSystem {
        name: "circle-hulls".to_string(),
        spaces,
        bonds,
    }
}

/// The cylinder tower of a stage list: `spaces[i]` glues the first
/// `i + 1` stages, `bonds[i]` collapses the newest cylinder band.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TelescopeSpace {
    pub stages: Vec<SimplicialComplex>,
    pub maps: Vec<SimplicialMap>,
}

/// Glues the stages into telescope spaces after checking that every
/// map is simplicial between its neighbors.
pub fn telescope_build(
    stages: Vec<SimplicialComplex>,
    maps: Vec<SimplicialMap>,
) -> Result<(TelescopeSpace, InverseSystem), GalleryError> {
    if stages.len() != maps.len() + 1 {
        return Err(GalleryError::MapMismatch(format!(
            "{} stages with {} maps",
            stages.len(),
            maps.len()
        )));
    }
    for (i, map) in maps.iter().enumerate() {
        let (from, to) = (&stages[i + 1], &stages[i]);
        for v in from.vertices() {
            let w = map.vertex_map.get(v).ok_or_else(|| {
                GalleryError::MapMismatch(format!("map {i} misses vertex {v} of stage {}", i + 1))
            })?;
            if !to.vertices().contains(w) {
                return Err(GalleryError::MapMismatch(format!(
                    "map {i} sends vertex {v} outside stage {i}"
                )));
            }
        }
        for cell in from.cells() {
            let image: BTreeSet<u32> =
                cell.vertices().iter().map(|v| map.vertex_map[v]).collect();
            let image = Simplex::new(image).expect("nonempty image");
            if !to.cells().contains(&image) {
                return Err(GalleryError::MapMismatch(format!(
                    "map {i} sends cell {:?} to {:?}, not a cell of stage {i}",
                    cell.vertices(),
                    image.vertices()
                )));
            }
        }
    }
    let spaces = (0..stages.len())
        .map(|i| Space::Telescope {
            stages: stages[..=i].to_vec(),
            maps: maps[..i].to_vec(),
        })
        .collect();
    let bonds = maps
        .iter()
        .enumerate()
        .map(|(i, map)| RetractionMap::Cylinder {
            stage: i + 1,
            map: map.clone(),
        })
        .collect();
    let system = InverseSystem {
        name: "telescope".to_string(),
        spaces,
        bonds,
    };
    system.validate()?;
    Ok((TelescopeSpace { stages, maps }, system))
}

/// Stage lists for the named telescope presets: a single point, circles
/// with tripling-then-doubling subdivision forgotten degree-one maps,
/// or circles with angle-doubling degree-two maps.
pub fn telescope_stages(
    preset: &str,
    depth: usize,
) -> Result<(Vec<SimplicialComplex>, Vec<SimplicialMap>), GalleryError> {
    let mut stages = Vec::new();
    let mut maps = Vec::new();
    match preset {
        "point" => {
            let point = SimplicialComplex::from_maximal([Simplex::new([0]).expect("vertex")]);
            stages = vec![point; depth + 1];
            maps = vec![SimplicialMap::new([(0, 0)]); depth];
        }
        "subdivision" => {
            for i in 0..=depth {
                stages.push(cycle_complex(3 << i));
            }
            for i in 0..depth {
                let m = 3 << i;
                maps.push(SimplicialMap::new((0..(2 * m) as u32).map(|v| {
                    let w = if v % 2 == 0 {
                        v / 2
                    } else {
                        (v / 2 + 1) % m as u32
                    };
                    (v, w)
                })));
            }
        }
        "doubling" => {
            for i in 0..=depth {
                stages.push(cycle_complex(1 << (i + 2)));
            }
            for i in 0..depth {
                let m = (1 << (i + 2)) as u32;
                maps.push(SimplicialMap::new((0..2 * m).map(|v| (v, v % m))));
            }
        }
        other => {
            return Err(GalleryError::InvalidSpec(format!(
                "unknown telescope preset {other:?}; expected point, subdivision, or doubling"
            )))
        }
    }
    Ok((stages, maps))
}

/// Cycle graph on `m` vertices labeled `0 .. m`.
fn cycle_complex(m: usize) -> SimplicialComplex {
    SimplicialComplex::from_maximal((0..m as u32).map(|k| {
        Simplex::new([k, (k + 1) % m as u32]).expect("cycle edge")
    }))
}

/// A rooted tree given by its parent function and the list of vertices
/// at each depth.
pub struct TreeShape {
    pub name: &'static str,
    pub parent: fn(u32) -> u32,
    pub level: fn(usize) -> Vec<u32>,
}

/// The built-in shapes: the heap-labeled binary tree, a single path,
/// and a three-ray star.
pub fn tree_shape(name: &str) -> Result<TreeShape, GalleryError> {
    match name {
        "binary" => Ok(TreeShape {
            name: "binary",
            parent: |v| (v - 1) / 2,
            level: |d| {
                let lo = (1u32 << d) - 1;
                let hi = (1u32 << (d + 1)) - 1;
                (lo..hi).collect()
            },
        }),
        "path" => Ok(TreeShape {
            name: "path",
            parent: |v| v - 1,
            level: |d| vec![d as u32],
        }),
        "star3" => Ok(TreeShape {
            name: "star3",
            parent: |v| if v <= 3 { 0 } else { v - 3 },
            level: |d| {
                if d == 0 {
                    vec![0]
                } else {
                    (1..=3).map(|r| 3 * (d as u32 - 1) + r).collect()
                }
            },
        }),
        other => Err(GalleryError::InvalidSpec(format!(
            "unknown tree shape {other:?}; expected binary, path, or star3"
        ))),
    }
}

/// Balls of growing radius around the root; each bond is the schedule
/// collapsing the newest leaf edges onto their inner endpoints.
fn tree_balls(shape: &TreeShape, depth: usize) -> InverseSystem {
    let mut spaces = Vec::with_capacity(depth + 1);
    for i in 0..=depth {
        spaces.push(tree_space(ball_complex(shape, i)));
    }
    let bonds = (0..depth)
        .map(|i| {
            let mut leaves = (shape.level)(i + 1);
            leaves.sort_unstable();
            RetractionMap::Schedule {
                steps: leaves
                    .into_iter()
                    .map(|v| CollapseStep {
                        tau: Simplex::new([v]).expect("leaf vertex"),
                        sigma: Simplex::new([(shape.parent)(v), v]).expect("leaf edge"),
                    })
                    .collect(),
            }
        })
        .collect();
    InverseSystem {
        name: format!("tree-balls-{}", shape.name),
        spaces,
        bonds,
    }
}

fn ball_complex(shape: &TreeShape, radius: usize) -> SimplicialComplex {
    if radius == 0 {
        return SimplicialComplex::from_maximal([Simplex::new([0]).expect("root")]);
    }
    SimplicialComplex::from_maximal((1..=radius).flat_map(|d| {
        (shape.level)(d)
            .into_iter()
            .map(|v| Simplex::new([(shape.parent)(v), v]).expect("tree edge"))
    }))
}

fn tree_space(complex: SimplicialComplex) -> Space {
    Space::Complex {
        complex,
        metric: ComplexMetric::Path,
        root: 0,
    }
}

/// Grows a subtree one arc at a time: each stage attaches the walk
/// from the next unplaced vertex (ascending labels) down to the
/// current subtree, and its bond collapses that arc back, outermost
/// edge first. Stops early when the tree is exhausted.
pub fn countable_tree_filtration(
    edges: &[(u32, u32)],
    root: u32,
    depth: usize,
) -> Result<InverseSystem, GalleryError> {
    let mut parent: BTreeMap<u32, u32> = BTreeMap::new();
    let mut adjacency: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    let mut vertices: BTreeSet<u32> = BTreeSet::from([root]);
    for &(u, v) in edges {
        if u == v {
            return Err(GalleryError::NotATree(format!("loop edge at {u}")));
        }
        adjacency.entry(u).or_default().push(v);
        adjacency.entry(v).or_default().push(u);
        vertices.insert(u);
        vertices.insert(v);
    }
    let mut queue = std::collections::VecDeque::from([root]);
    let mut seen = BTreeSet::from([root]);
    while let Some(u) = queue.pop_front() {
        for &v in adjacency.get(&u).into_iter().flatten() {
            if seen.insert(v) {
                parent.insert(v, u);
                queue.push_back(v);
            }
        }
    }
    if seen.len() < vertices.len() {
        return Err(GalleryError::NotATree(format!(
            "{} vertices unreachable from {root}",
            vertices.len() - seen.len()
        )));
    }
    if edges.len() + 1 != vertices.len() {
        return Err(GalleryError::NotATree(format!(
            "{} edges on {} vertices",
            edges.len(),
            vertices.len()
        )));
    }

    let mut placed = BTreeSet::from([root]);
    let mut complex = SimplicialComplex::from_maximal([Simplex::new([root]).expect("root")]);
    let mut spaces = vec![tree_space(complex.clone())];
    let mut bonds = Vec::new();
    for &v in vertices.iter().filter(|v| **v != root) {
        if bonds.len() == depth {
            break;
        }
        if placed.contains(&v) {
            continue;
        }
        // The arc from v down to the current subtree, outermost first.
        let mut arc = vec![v];
        let mut cur = v;
        while !placed.contains(&parent[&cur]) {
            cur = parent[&cur];
            arc.push(cur);
        }
        for &w in &arc {
            placed.insert(w);
            complex.insert_closed(Simplex::new([parent[&w], w]).expect("arc edge"));
        }
        spaces.push(tree_space(complex.clone()));
        bonds.push(RetractionMap::Schedule {
            steps: arc
                .iter()
                .map(|&w| CollapseStep {
                    tau: Simplex::new([w]).expect("arc vertex"),
                    sigma: Simplex::new([parent[&w], w]).expect("arc edge"),
                })
                .collect(),
        });
    }
    Ok(InverseSystem {
        name: "tree-countable".to_string(),
        spaces,
        bonds,
    })
}

/// End census of a tree-ball system: the surviving directions at the
/// loaded depth, one class per deepest-band germ, with the product
/// metric separations between class representatives.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EndReport {
    pub depth: usize,
    pub class_count: usize,
    /// Deepest sampled point of each class, in grid order.
    pub representatives: Vec<Point>,
    /// `(class a, class b, product-metric distance)` for every pair.
    pub separations: Vec<(usize, usize, f64)>,
}

/// Counts end classes of a path-metric tree system by clustering the
/// unstable threads of the deepest edge band and measuring pairwise
/// separations of their representatives.
pub fn tree_ends(system: &InverseSystem, depth: usize) -> Result<EndReport, GalleryError> {
    for space in &system.spaces {
        match space {
            Space::Complex {
                metric: ComplexMetric::Path,
                ..
            } => {}
            other => {
                return Err(GalleryError::WrongSystemKind(format!(
                    "tree ends need path-metric complexes, found {other:?}"
                )))
            }
        }
    }
    if depth > system.depth() || depth == 0 {
        return Err(GalleryError::InvalidSpec(format!(
            "end census depth {depth} outside the loaded prefix 1..={}",
            system.depth()
        )));
    }
    let (complex, root) = match system.space(depth) {
        Space::Complex { complex, root, .. } => (complex, *root),
        _ => unreachable!("checked above"),
    };
    let parents = tree_parents(complex, root);
    let tree_depth_of = |p: &Point| -> f64 {
        let origin = Point::vertex(root);
        tree_path_dist_with(&parents, &origin, p).unwrap_or(f64::NAN)
    };

    let window = 3;
    let tol = 1e-9;
    let grid = system.space(depth).grid(0.125);
    let mut band: Vec<(Point, Thread)> = Vec::new();
    for top in grid {
        let thread = thread_from_top(system, &top, depth)?;
        if is_stable(system, &thread, window, tol) {
            continue;
        }
        // Only the deepest band carries end germs; shallower unstable
        // threads are the collar where motion has not yet settled.
        if tree_depth_of(&top) > depth as f64 - 1.0 + 1e-9 {
            band.push((top, thread));
        }
    }

    // Chain the band at spacing below the sibling gap (a quarter edge)
    // but above the grid step (an eighth).
    let epsilon = 0.18;
    let n = band.len();
    let mut group: Vec<usize> = (0..n).collect();
    fn find(group: &mut Vec<usize>, mut x: usize) -> usize {
        while group[x] != x {
            group[x] = group[group[x]];
            x = group[x];
        }
        x
    }
    for a in 0..n {
        for b in a + 1..n {
            let d = tree_path_dist_with(&parents, &band[a].0, &band[b].0)
                .unwrap_or(f64::INFINITY);
            if d <= epsilon {
                let (ra, rb) = (find(&mut group, a), find(&mut group, b));
                if ra != rb {
                    group[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for a in 0..n {
        let r = find(&mut group, a);
        classes.entry(r).or_default().push(a);
    }

    // One representative per class: its deepest sampled point.
    let mut representatives = Vec::new();
    let mut rep_threads = Vec::new();
    for members in classes.values() {
        let &deepest = members
            .iter()
            .max_by(|&&a, &&b| {
                tree_depth_of(&band[a].0)
                    .partial_cmp(&tree_depth_of(&band[b].0))
                    .expect("grid depths are finite")
            })
            .expect("classes are nonempty");
        representatives.push(band[deepest].0.clone());
        rep_threads.push(band[deepest].1.clone());
    }
    let mut separations = Vec::new();
    for a in 0..rep_threads.len() {
        for b in a + 1..rep_threads.len() {
            separations.push((
                a,
                b,
                product_metric(system, &rep_threads[a], &rep_threads[b])?,
            ));
        }
    }
    Ok(EndReport {
        depth,
        class_count: representatives.len(),
        representatives,
        separations,
    })
}
