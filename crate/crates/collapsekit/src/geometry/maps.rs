use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::complex::{Cell, CollapseStep, Simplex};

use super::chart::norm;
use super::collapse::{cubical_collapse_eval, cylinder_collapse_eval, simplicial_collapse_eval};
use super::convex::ConvexRegion;
use super::{GeometryError, Point};

/// Vertex tables serialize as sorted `[from, to]` pairs; JSON objects
/// cannot key on integers.
mod vertex_pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<u32, u32>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter().map(|(k, v)| (*k, *v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u32, u32>, D::Error> {
        Ok(Vec::<(u32, u32)>::deserialize(d)?.into_iter().collect())
    }
}

/// A simplicial map given by where each vertex goes; simplices may
/// degenerate. Barycentric weights of vertices with a common image are
/// added.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplicialMap {
    #[serde(with = "vertex_pairs")]
    pub vertex_map: BTreeMap<u32, u32>,
}

impl SimplicialMap {
    pub fn new(vertex_map: impl IntoIterator<Item = (u32, u32)>) -> SimplicialMap {
        SimplicialMap {
            vertex_map: vertex_map.into_iter().collect(),
        }
    }

    pub fn eval(&self, p: &Point) -> Result<Point, GeometryError> {
        let (carrier, coords) = match p {
            Point::Simplicial { carrier, coords } => (carrier, coords),
            other => {
                return Err(GeometryError::Unsupported {
                    map: "simplicial map".to_string(),
                    point: other.to_string(),
                })
            }
        };
        let mut weights: BTreeMap<u32, f64> = BTreeMap::new();
        for (v, c) in carrier.vertices().iter().zip(coords) {
            let image = *self.vertex_map.get(v).ok_or_else(|| {
                GeometryError::OutsideDomain(format!("vertex {v} has no image"))
            })?;
            *weights.entry(image).or_insert(0.0) += *c;
        }
        let carrier = Simplex::new(weights.keys().copied()).expect("nonempty image");
        let coords = weights.into_values().collect();
        Ok(Point::simplicial(carrier, coords)?.reduce_carrier())
    }
}

/// An evaluable retraction. Every variant fixes its image pointwise and
/// is idempotent; the clamp-style variants within float tolerance, the
/// combinatorial ones bitwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RetractionMap {
    Identity,
    /// Piecewise-linear map of a closed interval, given by its graph's
    /// breakpoints in increasing x order. Segments whose endpoints lie
    /// on the diagonal are evaluated as the exact identity.
    Pl1d { breakpoints: Vec<(f64, f64)> },
    /// Sends star arm `from` isometrically onto arm `from - 1`, or to
    /// the center when `from` is 1.
    ArmFold { from: usize },
    /// Crushes star arm `arm` to the center.
    ArmCrush { arm: usize },
    /// Keeps the first `keep` coordinates of a box point.
    Projection { keep: usize },
    /// Scales points radially into a star-shaped region around the
    /// origin.
    RadialClamp { target: ConvexRegion },
    /// Retraction of the disk of radius `radius` tangent to the origin
    /// from above onto the smaller tangent disk of radius `target`,
    /// along rays toward the origin.
    TangentDisk { radius: f64, target: f64 },
    /// Euclidean nearest-point projection onto a ball or segment.
    NearestPoint { target: ConvexRegion },
    /// Constant map.
    Constant { target: Point },
    /// One elementary simplicial collapse, evaluated by the ray chart.
    ElementarySimplicial { sigma: Simplex, tau: Simplex },
    /// A whole collapse schedule applied step by step.
    Schedule { steps: Vec<CollapseStep<Simplex>> },
    /// Mapping-cylinder collapse of telescope stage `stage`.
    Cylinder { stage: usize, map: SimplicialMap },
    /// The cubical apex collapse on `[-1,1]^dim`.
    CubicalApex { dim: usize },
    /// Clamp of a tree (path metric, unit edges) onto the ball of radius
    /// `radius` around the root; `parent` maps each non-root vertex to
    /// its parent.
    TreeClamp {
        radius: u32,
        #[serde(with = "vertex_pairs")]
        parent: BTreeMap<u32, u32>,
    },
    /// Right-to-left composition: the last map runs first.
    Composite { maps: Vec<RetractionMap> },
}

/// Depth of a tree vertex, following parent links to the root.
pub(crate) fn tree_depth(parent: &BTreeMap<u32, u32>, v: u32) -> u32 {
    let mut depth = 0;
    let mut cur = v;
    while let Some(p) = parent.get(&cur) {
        depth += 1;
        cur = *p;
    }
    depth
}

/// Ancestor of `v` at the given depth (depth of `v` must not be
/// smaller).
pub(crate) fn tree_ancestor(parent: &BTreeMap<u32, u32>, v: u32, depth: u32) -> u32 {
    let mut cur = v;
    let mut d = tree_depth(parent, v);
    while d > depth {
        cur = parent[&cur];
        d -= 1;
    }
    cur
}

/// Position of a tree point as (edge lower vertex, offset): a vertex is
/// (v, 0); an interior edge point on (u, v) with v the child is (u, t).
pub(crate) fn tree_position(
    parent: &BTreeMap<u32, u32>,
    p: &Point,
) -> Result<(u32, f64), GeometryError> {
    let (carrier, coords) = match p {
        Point::Simplicial { carrier, coords } => (carrier, coords),
        other => {
            return Err(GeometryError::Unsupported {
                map: "tree chart".to_string(),
                point: other.to_string(),
            })
        }
    };
    match carrier.vertices() {
        [v] => Ok((*v, 0.0)),
        [a, b] => {
            let (child, child_weight) = if parent.get(a) == Some(b) {
                (*a, coords[0])
            } else if parent.get(b) == Some(a) {
                (*b, coords[1])
            } else {
                return Err(GeometryError::OutsideDomain(format!(
                    "{carrier} is not a tree edge"
                )));
            };
            if child_weight == 1.0 {
                Ok((child, 0.0))
            } else {
                Ok((parent[&child], child_weight))
            }
        }
        _ => Err(GeometryError::OutsideDomain(format!(
            "{carrier} is not a cell of a 1-complex"
        ))),
    }
}

impl RetractionMap {
    pub fn eval(&self, x: &Point) -> Result<Point, GeometryError> {
        match self {
            RetractionMap::Identity => Ok(x.clone()),

            RetractionMap::Pl1d { breakpoints } => {
                let v = match x {
                    Point::Scalar { x } => *x,
                    other => return Err(unsupported("piecewise-linear map", other)),
                };
                pl_eval(breakpoints, v).map(Point::scalar)
            }

            RetractionMap::ArmFold { from } => match x {
                Point::Arm { arm, s } if arm == from => {
                    if *from == 1 {
                        Ok(Point::arm(0, 0.0))
                    } else {
                        Ok(Point::arm(from - 1, *s))
                    }
                }
                Point::Arm { .. } => Ok(x.clone()),
                other => Err(unsupported("arm fold", other)),
            },

            RetractionMap::ArmCrush { arm: folded } => match x {
                Point::Arm { arm, .. } if arm == folded => Ok(Point::arm(0, 0.0)),
                Point::Arm { .. } => Ok(x.clone()),
                other => Err(unsupported("arm crush", other)),
            },

            RetractionMap::Projection { keep } => match x {
                Point::Vector { coords } => {
                    if coords.len() <= *keep {
                        Ok(x.clone())
                    } else {
                        Ok(Point::vector(&coords[..*keep]))
                    }
                }
                other => Err(unsupported("projection", other)),
            },

            RetractionMap::RadialClamp { target } => match x {
                Point::Vector { coords } => {
                    let len = norm(coords);
                    if len == 0.0 {
                        return Ok(x.clone());
                    }
                    let rho = target.boundary_radius(coords)?;
                    if rho >= 1.0 {
                        Ok(x.clone())
                    } else {
                        Ok(Point::vector(
                            coords.iter().map(|c| c * rho).collect::<Vec<f64>>(),
                        ))
                    }
                }
                other => Err(unsupported("radial clamp", other)),
            },

            RetractionMap::TangentDisk { radius, target } => match x {
                Point::Vector { coords } if coords.len() == 2 => {
                    let (px, py) = (coords[0], coords[1]);
                    let sq = px * px + py * py;
                    let big = ConvexRegion::Ball {
                        center: vec![0.0, *radius],
                        radius: *radius,
                    };
                    if !big.contains(coords, 1e-9) {
                        return Err(GeometryError::OutsideDomain(format!(
                            "{coords:?} is outside the disk of radius {radius}"
                        )));
                    }
                    // Inside the target disk means |x|^2 <= 2 * target * y.
                    if sq <= 2.0 * target * py + 1e-12 {
                        return Ok(x.clone());
                    }
                    let t = 2.0 * target * py / sq;
                    Ok(Point::vector(vec![t * px, t * py]))
                }
                other => Err(unsupported("tangent-disk retraction", other)),
            },

            RetractionMap::NearestPoint { target } => match x {
                Point::Vector { coords } => {
                    Ok(Point::vector(target.nearest_point(coords)?))
                }
                other => Err(unsupported("nearest-point projection", other)),
            },

            RetractionMap::Constant { target } => Ok(target.clone()),

            RetractionMap::ElementarySimplicial { sigma, tau } => {
                let x = x.reduce_carrier();
                match &x {
                    Point::Simplicial { carrier, .. } => {
                        // Points carried outside sigma are fixed; the
                        // collapse only moves the interior of sigma and
                        // of its free facet.
                        if carrier == sigma || carrier.is_proper_face_of(sigma) {
                            simplicial_collapse_eval(sigma, tau, &x)
                        } else {
                            Ok(x)
                        }
                    }
                    other => Err(unsupported("elementary collapse", other)),
                }
            }

            RetractionMap::Schedule { steps } => {
                let mut cur = x.clone();
                for step in steps {
                    cur = RetractionMap::ElementarySimplicial {
                        sigma: step.sigma.clone(),
                        tau: step.tau.clone(),
                    }
                    .eval(&cur)?;
                }
                Ok(cur)
            }

            RetractionMap::Cylinder { stage, map } => cylinder_collapse_eval(map, *stage, x),

            RetractionMap::CubicalApex { dim } => cubical_collapse_eval(*dim, x),

            RetractionMap::TreeClamp { radius, parent } => {
                let (lower, offset) = tree_position(parent, x)?;
                let depth = tree_depth(parent, lower) as f64 + offset;
                if depth <= *radius as f64 {
                    Ok(x.clone())
                } else {
                    // Integer ball radius: the clamp image is the
                    // ancestor vertex at exactly that depth.
                    Ok(Point::vertex(tree_ancestor(parent, lower, *radius)))
                }
            }

            RetractionMap::Composite { maps } => {
                let mut cur = x.clone();
                for map in maps.iter().rev() {
                    cur = map.eval(&cur)?;
                }
                Ok(cur)
            }
        }
    }
}

fn unsupported(map: &str, point: &Point) -> GeometryError {
    GeometryError::Unsupported {
        map: map.to_string(),
        point: point.to_string(),
    }
}

/// Evaluates a piecewise-linear breakpoint graph, treating diagonal
/// segments as the exact identity.
pub(crate) fn pl_eval(breakpoints: &[(f64, f64)], x: f64) -> Result<f64, GeometryError> {
    if breakpoints.is_empty() {
        return Err(GeometryError::OutsideDomain(
            "empty breakpoint list".to_string(),
        ));
    }
    let lo = breakpoints[0].0;
    let hi = breakpoints[breakpoints.len() - 1].0;
    if x < lo - 1e-9 || x > hi + 1e-9 {
        return Err(GeometryError::OutsideDomain(format!(
            "{x} outside [{lo}, {hi}]"
        )));
    }
    let x = x.clamp(lo, hi);
    for pair in breakpoints.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        if x <= x1 {
            if x == x0 {
                return Ok(y0);
            }
            if x == x1 {
                return Ok(y1);
            }
            if x0 == y0 && x1 == y1 {
                return Ok(x);
            }
            return Ok(y0 + (x - x0) * (y1 - y0) / (x1 - x0));
        }
    }
    Ok(breakpoints[breakpoints.len() - 1].1)
}

/// Composes retractions right-to-left: `compose([a, b, c])` evaluates
/// `c` first. An empty list is the identity; a single map is returned
/// as is.
pub fn compose(maps: Vec<RetractionMap>) -> RetractionMap {
    match maps.len() {
        0 => RetractionMap::Identity,
        1 => maps.into_iter().next().expect("one map"),
        _ => RetractionMap::Composite { maps },
    }
}

