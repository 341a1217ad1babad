use serde::{Deserialize, Serialize};

use super::chart::{dot, norm};
use super::GeometryError;

/// One half-space constraint `<normal, x> <= offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// A convex target region for clamp-style retractions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum ConvexRegion {
    Ball { center: Vec<f64>, radius: f64 },
    Segment { a: Vec<f64>, b: Vec<f64> },
    /// Intersection of half-spaces; for radial use the origin must be
    /// interior, i.e. every offset positive.
    Polytope { facets: Vec<Facet> },
}

impl ConvexRegion {
    /// The regular polygon with `sides` vertices on the circle of radius
    /// `circumradius`, one vertex at angle `phase`.
    pub fn regular_polygon(sides: usize, circumradius: f64, phase: f64) -> ConvexRegion {
        assert!(sides >= 3, "a polygon needs at least three sides");
        let apothem = circumradius * (std::f64::consts::PI / sides as f64).cos();
        let facets = (0..sides)
            .map(|k| {
                let theta = phase + (2 * k + 1) as f64 * std::f64::consts::PI / sides as f64;
                Facet {
                    normal: vec![theta.cos(), theta.sin()],
                    offset: apothem,
                }
            })
            .collect();
        ConvexRegion::Polytope { facets }
    }

    /// The regular `m`-simplex with edge `sqrt(2) * scale`, centered at
    /// the origin, as a half-space intersection.
    pub fn centered_simplex(m: usize, scale: f64) -> ConvexRegion {
        assert!(m >= 1, "a solid simplex needs dimension >= 1");
        let verts = super::centered_simplex_vertices(m);
        let facets = verts
            .iter()
            .map(|v| {
                let len = norm(v);
                Facet {
                    normal: v.iter().map(|c| -c / len).collect(),
                    offset: scale * len / m as f64,
                }
            })
            .collect();
        ConvexRegion::Polytope { facets }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            ConvexRegion::Ball { center, radius } => {
                let d: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                d <= radius + tol
            }
            ConvexRegion::Segment { .. } => {
                let p = self.nearest_point(x).expect("segments support projection");
                let d: f64 = x
                    .iter()
                    .zip(&p)
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum::<f64>()
                    .sqrt();
                d <= tol
            }
            ConvexRegion::Polytope { facets } => facets
                .iter()
                .all(|f| dot(&f.normal, x) <= f.offset + tol),
        }
    }

    /// Distance from the origin to the boundary in direction `u`
    /// (`u` need not be normalized; the result scales accordingly so
    /// that `boundary_radius(u) * u` is the boundary point when `|u|=1`).
    /// Requires the origin in the interior.
    pub fn boundary_radius(&self, u: &[f64]) -> Result<f64, GeometryError> {
        match self {
            ConvexRegion::Ball { center, radius } => {
                if norm(center) > 1e-12 {
                    return Err(GeometryError::OutsideDomain(
                        "radial clamp needs a ball centered at the origin".to_string(),
                    ));
                }
                let len = norm(u);
                if len == 0.0 {
                    return Err(GeometryError::BadPoint("zero direction".to_string()));
                }
                Ok(radius / len)
            }
            ConvexRegion::Polytope { facets } => {
                let mut best = f64::INFINITY;
                for f in facets {
                    if f.offset <= 0.0 {
                        return Err(GeometryError::OutsideDomain(
                            "radial clamp needs the origin interior to the polytope".to_string(),
                        ));
                    }
                    let d = dot(&f.normal, u);
                    if d > 0.0 {
                        best = best.min(f.offset / d);
                    }
                }
                if best.is_finite() {
                    Ok(best)
                } else {
                    Err(GeometryError::OutsideDomain(
                        "unbounded direction in radial clamp".to_string(),
                    ))
                }
            }
            ConvexRegion::Segment { .. } => Err(GeometryError::OutsideDomain(
                "segments have no radial interior".to_string(),
            )),
        }
    }

    /// Euclidean nearest point; supported for balls and segments, where
    /// it is a closed form.
    pub fn nearest_point(&self, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
        match self {
            ConvexRegion::Ball { center, radius } => {
                let offset: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
                let d = norm(&offset);
                if d <= *radius {
                    Ok(x.to_vec())
                } else {
                    let s = radius / d;
                    Ok(center
                        .iter()
                        .zip(&offset)
                        .map(|(c, o)| c + s * o)
                        .collect())
                }
            }
            ConvexRegion::Segment { a, b } => {
                let ab: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
                let ax: Vec<f64> = x.iter().zip(a).map(|(x, y)| x - y).collect();
                let len2 = dot(&ab, &ab);
                let t = if len2 == 0.0 {
                    0.0
                } else {
                    (dot(&ax, &ab) / len2).clamp(0.0, 1.0)
                };
                Ok(a.iter().zip(&ab).map(|(c, d)| c + t * d).collect())
            }
            ConvexRegion::Polytope { .. } => Err(GeometryError::Unsupported {
                map: "nearest-point projection".to_string(),
                point: "polytope targets (only balls and segments)".to_string(),
            }),
        }
    }
}
