//! Point charts, evaluable retractions, and deformation-retraction tracks.
//!
//! Points carry their own chart so maps can be evaluated without a global
//! ambient space: a simplex is realized with all edges of length sqrt(2),
//! a cube cell as `[-1,1]^n`, a mapping cylinder as (base, height) pairs.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{Cell, Simplex};

mod chart;
mod collapse;
mod convex;
mod homotopy;
mod maps;

pub use chart::{centered_simplex_vertices, collapse_chart_vertices};
pub use collapse::{cubical_collapse_eval, cylinder_collapse_eval, simplicial_collapse_eval};
pub use convex::{ConvexRegion, Facet};
pub use homotopy::{chart_lerp, track_faithful_check, HomotopyEvaluator, TrackReport};
pub use maps::{compose, RetractionMap, SimplicialMap};

/// Absolute slack allowed when validating barycentric coordinates.
pub const COORD_TOL: f64 = 1e-12;

/// A point in one of the chart families used across the crate.
///
/// The serialized form is tagged by `chart`; complex-carried points keep
/// the `carrier`/`coords` field names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "chart", rename_all = "kebab-case")]
pub enum Point {
    /// A point of a 1-D interval model.
    Scalar { x: f64 },
    /// A point on one arm of a star of unit segments; `s` is the distance
    /// from the center, and the center itself is `arm: 0, s: 0`.
    Arm { arm: usize, s: f64 },
    /// A point of a Euclidean box or region chart.
    Vector { coords: Vec<f64> },
    /// Barycentric coordinates over the sorted vertices of `carrier`.
    Simplicial { carrier: Simplex, coords: Vec<f64> },
    /// A mapping-cylinder point: `base` lives on the level-`level` space
    /// and `height` is in `(level-1, level]` (level 0 has height 0).
    Cylinder {
        level: usize,
        base: Box<Point>,
        height: f64,
    },
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("point outside the map's domain: {0}")]
    OutsideDomain(String),
    #[error("malformed point: {0}")]
    BadPoint(String),
    #[error("composition chain mismatch: {0}")]
    ChainMismatch(String),
    #[error("{map} cannot evaluate {point}")]
    Unsupported { map: String, point: String },
}

impl Point {
    pub fn scalar(x: f64) -> Point {
        Point::Scalar { x }
    }

    pub fn vector(coords: impl Into<Vec<f64>>) -> Point {
        Point::Vector {
            coords: coords.into(),
        }
    }

    /// A star-space point; the center is canonicalized to arm 0.
    pub fn arm(arm: usize, s: f64) -> Point {
        if s == 0.0 {
            Point::Arm { arm: 0, s: 0.0 }
        } else {
            Point::Arm { arm, s }
        }
    }

    /// A barycentric point; coordinates are clamped at `-COORD_TOL` and
    /// renormalized when the sum strays within tolerance of 1.
    pub fn simplicial(carrier: Simplex, coords: Vec<f64>) -> Result<Point, GeometryError> {
        let n = carrier.vertices().len();
        if coords.len() != n {
            return Err(GeometryError::BadPoint(format!(
                "{} coords for carrier {carrier}",
                coords.len()
            )));
        }
        let mut coords = coords;
        for c in coords.iter_mut() {
            if *c < 0.0 {
                if *c < -COORD_TOL {
                    return Err(GeometryError::BadPoint(format!(
                        "negative barycentric coordinate {c}"
                    )));
                }
                *c = 0.0;
            }
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > COORD_TOL {
            return Err(GeometryError::BadPoint(format!(
                "barycentric coordinates sum to {sum}"
            )));
        }
        if sum != 1.0 {
            for c in coords.iter_mut() {
                *c /= sum;
            }
        }
        Ok(Point::Simplicial { carrier, coords })
    }

    /// The point sitting on a single vertex.
    pub fn vertex(v: u32) -> Point {
        Point::Simplicial {
            carrier: Simplex::new([v]).expect("one vertex"),
            coords: vec![1.0],
        }
    }

    pub fn cylinder(level: usize, base: Point, height: f64) -> Result<Point, GeometryError> {
        let lo = if level == 0 { 0.0 } else { (level - 1) as f64 };
        let hi = level as f64;
        let ok = if level == 0 {
            height == 0.0
        } else {
            height > lo && height <= hi
        };
        if !ok {
            return Err(GeometryError::BadPoint(format!(
                "height {height} outside ({lo}, {hi}] for level {level}"
            )));
        }
        Ok(Point::Cylinder {
            level,
            base: Box::new(base),
            height,
        })
    }

    /// The minimal carrier of a simplicial point: the face spanned by its
    /// strictly positive coordinates. Other chart kinds return `None`.
    pub fn minimal_carrier(&self) -> Option<Simplex> {
        match self {
            Point::Simplicial { carrier, coords } => {
                let verts: Vec<u32> = carrier
                    .vertices()
                    .iter()
                    .zip(coords)
                    .filter(|(_, c)| **c > 0.0)
                    .map(|(v, _)| *v)
                    .collect();
                Some(Simplex::new(verts).expect("a valid point has a positive coordinate"))
            }
            _ => None,
        }
    }

    /// Re-expresses a simplicial point over a larger carrier, padding the
    /// new vertices with zeros.
    pub fn promote_to(&self, target: &Simplex) -> Result<Point, GeometryError> {
        match self {
            Point::Simplicial { carrier, coords } => {
                if carrier == target {
                    return Ok(self.clone());
                }
                if !carrier.is_proper_face_of(target) {
                    return Err(GeometryError::BadPoint(format!(
                        "carrier {carrier} is not a face of {target}"
                    )));
                }
                let mut out = vec![0.0; target.vertices().len()];
                for (v, c) in carrier.vertices().iter().zip(coords) {
                    let slot = target
                        .vertices()
                        .iter()
                        .position(|w| w == v)
                        .expect("face vertices are in the coface");
                    out[slot] = *c;
                }
                Ok(Point::Simplicial {
                    carrier: target.clone(),
                    coords: out,
                })
            }
            _ => Err(GeometryError::BadPoint(
                "only simplicial points have carriers".to_string(),
            )),
        }
    }

    /// Drops zero coordinates so the carrier is minimal.
    pub fn reduce_carrier(&self) -> Point {
        match self {
            Point::Simplicial { carrier, coords } => {
                let kept: Vec<(u32, f64)> = carrier
                    .vertices()
                    .iter()
                    .zip(coords)
                    .filter(|(_, c)| **c > 0.0)
                    .map(|(v, c)| (*v, *c))
                    .collect();
                Point::Simplicial {
                    carrier: Simplex::new(kept.iter().map(|(v, _)| *v))
                        .expect("a valid point has a positive coordinate"),
                    coords: kept.into_iter().map(|(_, c)| c).collect(),
                }
            }
            other => other.clone(),
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Scalar { x } => write!(f, "{x}"),
            Point::Arm { arm, s } => write!(f, "arm {arm} at {s}"),
            Point::Vector { coords } => write!(f, "{coords:?}"),
            Point::Simplicial { carrier, coords } => write!(f, "{carrier} bary {coords:?}"),
            Point::Cylinder {
                level,
                base,
                height,
            } => write!(f, "cyl level {level} height {height} over {base}"),
        }
    }
}

/// Distance oracle used by track checks; each model space in the crate
/// implements it for the point charts it hosts.
pub trait MetricSpace {
    fn dist(&self, a: &Point, b: &Point) -> f64;
}

/// Chart-local metric: exact for scalar, arm, and vector points and for
/// simplicial points sharing a carrier (edge length sqrt(2)). Pairs it
/// cannot relate return infinity.
pub struct ChartMetric;

impl MetricSpace for ChartMetric {
    fn dist(&self, a: &Point, b: &Point) -> f64 {
        match (a, b) {
            (Point::Scalar { x }, Point::Scalar { x: y }) => (x - y).abs(),
            (Point::Arm { arm: i, s }, Point::Arm { arm: j, s: t }) => {
                if i == j || *s == 0.0 || *t == 0.0 {
                    (s - t).abs()
                } else {
                    s + t
                }
            }
            (Point::Vector { coords: u }, Point::Vector { coords: v }) => {
                let n = u.len().max(v.len());
                (0..n)
                    .map(|k| {
                        let d = u.get(k).copied().unwrap_or(0.0)
                            - v.get(k).copied().unwrap_or(0.0);
                        d * d
                    })
                    .sum::<f64>()
                    .sqrt()
            }
            (Point::Simplicial { .. }, Point::Simplicial { .. }) => {
                match chart::simplicial_chart_dist(a, b) {
                    Some(d) => d,
                    None => f64::INFINITY,
                }
            }
            (
                Point::Cylinder {
                    level: la,
                    base: ba,
                    height: ha,
                },
                Point::Cylinder {
                    level: lb,
                    base: bb,
                    height: hb,
                },
            ) if la == lb => (ha - hb).abs() + self.dist(ba, bb),
            _ => f64::INFINITY,
        }
    }
}
