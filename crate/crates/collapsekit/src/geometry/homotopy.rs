use crate::complex::Simplex;

use super::maps::{tree_ancestor, tree_depth, tree_position};
use super::{GeometryError, MetricSpace, Point, RetractionMap};

/// Constant-speed interpolation between two points of the same chart
/// family. Endpoints are returned exactly at `t = 0` and `t = 1`.
pub fn chart_lerp(a: &Point, b: &Point, t: f64) -> Result<Point, GeometryError> {
    if t == 0.0 {
        return Ok(a.clone());
    }
    if t == 1.0 {
        return Ok(b.clone());
    }
    match (a, b) {
        (Point::Scalar { x }, Point::Scalar { x: y }) => {
            Ok(Point::scalar((1.0 - t) * x + t * y))
        }
        (Point::Arm { arm: i, s }, Point::Arm { arm: j, s: u }) => {
            if i == j || *s == 0.0 || *u == 0.0 {
                let arm = if *s == 0.0 { *j } else { *i };
                Ok(Point::arm(arm, (1.0 - t) * s + t * u))
            } else {
                // Distinct arms: the geodesic passes through the center.
                let traveled = t * (s + u);
                if traveled <= *s {
                    Ok(Point::arm(*i, s - traveled))
                } else {
                    Ok(Point::arm(*j, traveled - s))
                }
            }
        }
        (Point::Vector { coords: x }, Point::Vector { coords: y }) => {
            let n = x.len().max(y.len());
            let coords = (0..n)
                .map(|k| {
                    let a = x.get(k).copied().unwrap_or(0.0);
                    let b = y.get(k).copied().unwrap_or(0.0);
                    (1.0 - t) * a + t * b
                })
                .collect::<Vec<f64>>();
            Ok(Point::vector(coords))
        }
        (
            Point::Simplicial {
                carrier: ca,
                coords: xa,
            },
            Point::Simplicial {
                carrier: cb,
                coords: xb,
            },
        ) => {
            let union = Simplex::new(
                ca.vertices()
                    .iter()
                    .chain(cb.vertices())
                    .copied()
                    .collect::<std::collections::BTreeSet<u32>>(),
            )
            .expect("nonempty union carrier");
            let weight = |carrier: &Simplex, coords: &[f64], v: u32| -> f64 {
                carrier
                    .vertices()
                    .iter()
                    .position(|w| *w == v)
                    .map_or(0.0, |i| coords[i])
            };
            let coords: Vec<f64> = union
                .vertices()
                .iter()
                .map(|v| (1.0 - t) * weight(ca, xa, *v) + t * weight(cb, xb, *v))
                .collect();
            Ok(Point::simplicial(union, coords)?.reduce_carrier())
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
        ) if la == lb => {
            let base = chart_lerp(ba, bb, t)?;
            Point::cylinder(*la, base, (1.0 - t) * ha + t * hb)
        }
        _ => Err(GeometryError::Unsupported {
            map: "chart interpolation".to_string(),
            point: format!("{a} to {b}"),
        }),
    }
}

/// The deformation retraction culminating in a retraction: straight
/// tracks in the chart for primitive maps, cylinder rays for cylinder
/// collapses, root-ward geodesics for tree clamps, and uniform time
/// splitting for composites and schedules.
#[derive(Clone, Debug)]
pub struct HomotopyEvaluator {
    pub map: RetractionMap,
}

impl HomotopyEvaluator {
    pub fn new(map: RetractionMap) -> HomotopyEvaluator {
        HomotopyEvaluator { map }
    }

    pub fn eval(&self, x: &Point, t: f64) -> Result<Point, GeometryError> {
        if !(-1e-12..=1.0 + 1e-12).contains(&t) {
            return Err(GeometryError::OutsideDomain(format!(
                "homotopy time {t} outside [0, 1]"
            )));
        }
        let t = t.clamp(0.0, 1.0);
        if t == 0.0 {
            return Ok(x.clone());
        }
        if t == 1.0 {
            return self.map.eval(x);
        }
        match &self.map {
            RetractionMap::Identity => Ok(x.clone()),

            RetractionMap::Composite { maps } => {
                let factors: Vec<RetractionMap> = maps.iter().rev().cloned().collect();
                split_eval(&factors, x, t)
            }

            RetractionMap::Schedule { steps } => {
                let factors: Vec<RetractionMap> = steps
                    .iter()
                    .map(|s| RetractionMap::ElementarySimplicial {
                        sigma: s.sigma.clone(),
                        tau: s.tau.clone(),
                    })
                    .collect();
                split_eval(&factors, x, t)
            }

            RetractionMap::Cylinder { stage, .. } => match x {
                Point::Cylinder {
                    level,
                    base,
                    height,
                } if level == stage => {
                    // Slide down the cylinder ray of the base point.
                    let h = (1.0 - t) * height + t * (*stage as f64 - 1.0);
                    Point::cylinder(*stage, (**base).clone(), h)
                }
                _ => Ok(x.clone()),
            },

            RetractionMap::TreeClamp { radius, parent } => {
                let (lower, offset) = tree_position(parent, x)?;
                let lower_depth = tree_depth(parent, lower);
                let depth = lower_depth as f64 + offset;
                if depth <= *radius as f64 {
                    return Ok(x.clone());
                }
                let d = (1.0 - t) * depth + t * *radius as f64;
                if offset > 0.0 && d >= lower_depth as f64 {
                    // The descent has not yet left the starting edge.
                    let frac = d - lower_depth as f64;
                    if frac == 0.0 {
                        return Ok(Point::vertex(lower));
                    }
                    let carrier = match x {
                        Point::Simplicial { carrier, .. } => carrier.clone(),
                        _ => unreachable!("tree_position accepted the point"),
                    };
                    let coords = if carrier.vertices()[0] == lower {
                        vec![1.0 - frac, frac]
                    } else {
                        vec![frac, 1.0 - frac]
                    };
                    return Point::simplicial(carrier, coords);
                }
                let k = d.floor() as u32;
                let frac = d - k as f64;
                let anchor = tree_ancestor(parent, lower, k);
                if frac == 0.0 {
                    Ok(Point::vertex(anchor))
                } else {
                    let child = tree_ancestor(parent, lower, k + 1);
                    let carrier = Simplex::new([anchor, child]).expect("tree edge");
                    let coords = if carrier.vertices()[0] == anchor {
                        vec![1.0 - frac, frac]
                    } else {
                        vec![frac, 1.0 - frac]
                    };
                    Point::simplicial(carrier, coords)
                }
            }

            map => {
                let y = map.eval(x)?;
                chart_lerp(x, &y, t)
            }
        }
    }
}

/// Runs the first factors to completion and the active one partially,
/// each factor owning an equal share of the time interval.
fn split_eval(factors: &[RetractionMap], x: &Point, t: f64) -> Result<Point, GeometryError> {
    if factors.is_empty() {
        return Ok(x.clone());
    }
    let n = factors.len() as f64;
    let scaled = t * n;
    let k = (scaled.floor() as usize).min(factors.len() - 1);
    let mut cur = x.clone();
    for factor in &factors[..k] {
        cur = factor.eval(&cur)?;
    }
    HomotopyEvaluator::new(factors[k].clone()).eval(&cur, scaled - k as f64)
}

/// Outcome of [`track_faithful_check`].
#[derive(Clone, Debug)]
pub struct TrackReport {
    pub passed: bool,
    /// Largest observed distance between the track endpoint of a point
    /// and the endpoint reached from partway along its track.
    pub worst: f64,
    pub tol: f64,
    /// A `(sample, time)` pair realizing the worst violation, when the
    /// check failed.
    pub witness: Option<(Point, f64)>,
    pub samples_checked: usize,
}

/// Verifies the track-faithfulness identity: running the homotopy to
/// completion from any point along a track must land on that track's
/// own endpoint.
pub fn track_faithful_check<M: MetricSpace>(
    space: &M,
    h: &HomotopyEvaluator,
    samples: &[Point],
    ts: &[f64],
    tol: f64,
) -> Result<TrackReport, GeometryError> {
    let mut worst = 0.0_f64;
    let mut witness = None;
    for x in samples {
        let end = h.eval(x, 1.0)?;
        for &t in ts {
            let mid = h.eval(x, t)?;
            let replayed = h.eval(&mid, 1.0)?;
            let d = space.dist(&replayed, &end);
            if d > worst {
                worst = d;
                witness = Some((x.clone(), t));
            }
        }
    }
    let passed = worst <= tol;
    Ok(TrackReport {
        passed,
        worst,
        tol,
        witness: if passed { None } else { witness },
        samples_checked: samples.len(),
    })
}
