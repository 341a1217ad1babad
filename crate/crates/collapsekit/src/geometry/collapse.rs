use crate::complex::{Cell, Simplex};

use super::maps::SimplicialMap;
use super::{GeometryError, Point, COORD_TOL};

/// Evaluates the elementary collapse retraction of `sigma` through its
/// free facet `tau`: the point where the ray from the reflected apex
/// through `x` leaves `sigma` on the boundary away from `tau`.
///
/// Points whose minimal carrier already lies on that boundary are
/// returned unchanged, so the map is exactly idempotent and fixes its
/// image bitwise.
pub fn simplicial_collapse_eval(
    sigma: &Simplex,
    tau: &Simplex,
    x: &Point,
) -> Result<Point, GeometryError> {
    if !tau.is_proper_face_of(sigma) || tau.dim() + 1 != sigma.dim() {
        return Err(GeometryError::OutsideDomain(format!(
            "{tau} is not a facet of {sigma}"
        )));
    }
    let carrier = match x {
        Point::Simplicial { carrier, .. } => carrier,
        other => {
            return Err(GeometryError::Unsupported {
                map: format!("collapse of {sigma}"),
                point: other.to_string(),
            })
        }
    };
    if carrier != sigma && !carrier.is_proper_face_of(sigma) {
        return Err(GeometryError::OutsideDomain(format!(
            "carrier {carrier} is not a face of {sigma}"
        )));
    }
    let support = x.minimal_carrier().expect("simplicial point");
    if support != *sigma && support != *tau {
        // Fixed, but canonicalized so downstream face tests see the
        // minimal carrier.
        return Ok(x.reduce_carrier());
    }

    let full = x.promote_to(sigma).unwrap_or_else(|_| x.clone());
    let coords = match &full {
        Point::Simplicial { coords, .. } => coords,
        _ => unreachable!(),
    };
    // Chart-free form of the ray construction: the ray source is the
    // apex reflected through the facet barycenter, whose affine
    // coordinates over sigma are 2/n on each tau vertex and -1 on the
    // apex. The exit time is where the first tau coordinate vanishes.
    let n = tau.vertices().len() as f64;
    let apex_slot = sigma
        .vertices()
        .iter()
        .position(|v| !tau.contains_vertex(*v))
        .expect("tau is a proper facet");
    let source = |i: usize| if i == apex_slot { -1.0 } else { 2.0 / n };

    let mut s_exit = f64::INFINITY;
    for (i, &c) in coords.iter().enumerate() {
        let a = source(i);
        if c < a {
            s_exit = s_exit.min(a / (a - c));
        }
    }
    debug_assert!(s_exit.is_finite() && s_exit >= 1.0 - COORD_TOL);

    let out: Vec<f64> = coords
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let v = (1.0 - s_exit) * source(i) + s_exit * c;
            if v.abs() < COORD_TOL {
                0.0
            } else {
                v
            }
        })
        .collect();
    Ok(Point::simplicial(sigma.clone(), out)?.reduce_carrier())
}

/// Whether a point of `[-1,1]^n` lies on the retraction image: the
/// boundary minus the open top face (last coordinate 1).
fn on_cube_image(coords: &[f64]) -> bool {
    let n = coords.len();
    coords[..n - 1].iter().any(|c| c.abs() == 1.0) || coords[n - 1] == -1.0
}

/// Evaluates the cubical apex collapse on `[-1,1]^n`: the point where
/// the ray from `(0,...,0,2)` through `x` exits the cube, which always
/// lands on the boundary minus the open top face. That image is fixed
/// bitwise.
pub fn cubical_collapse_eval(n: usize, x: &Point) -> Result<Point, GeometryError> {
    let coords = match x {
        Point::Vector { coords } if coords.len() == n && n >= 1 => coords,
        other => {
            return Err(GeometryError::Unsupported {
                map: format!("cubical collapse in dimension {n}"),
                point: other.to_string(),
            })
        }
    };
    if coords.iter().any(|c| c.abs() > 1.0 + COORD_TOL) {
        return Err(GeometryError::OutsideDomain(format!(
            "{coords:?} is outside the cube"
        )));
    }
    if on_cube_image(coords) {
        return Ok(x.clone());
    }

    // Sideways coordinates scale as s*x_i; the vertical one follows
    // 2 + s*(x_n - 2). Find the first wall the ray reaches.
    let mut s_exit = 3.0 / (2.0 - coords[n - 1]);
    let mut wall = n - 1;
    for (i, &c) in coords[..n - 1].iter().enumerate() {
        if c != 0.0 {
            let s = 1.0 / c.abs();
            if s < s_exit {
                s_exit = s;
                wall = i;
            }
        }
    }
    let mut out: Vec<f64> = Vec::with_capacity(n);
    for (i, &c) in coords.iter().enumerate() {
        let v = if i == wall {
            // Pin the binding wall exactly so the image test holds on
            // re-evaluation.
            if i == n - 1 {
                -1.0
            } else {
                c.signum()
            }
        } else if i == n - 1 {
            2.0 + s_exit * (c - 2.0)
        } else {
            s_exit * c
        };
        out.push(v.clamp(-1.0, 1.0));
    }
    Ok(Point::vector(out))
}

/// Evaluates the mapping-cylinder collapse of stage `stage`: points on
/// the open cylinder `(stage-1, stage]` drop to the image of their base
/// under `map`; lower levels are fixed.
pub fn cylinder_collapse_eval(
    map: &SimplicialMap,
    stage: usize,
    point: &Point,
) -> Result<Point, GeometryError> {
    match point {
        Point::Cylinder { level, base, .. } => {
            if *level < stage {
                Ok(point.clone())
            } else if *level == stage {
                let image = map.eval(base)?;
                let new_level = stage - 1;
                Point::cylinder(new_level, image, new_level as f64)
            } else {
                Err(GeometryError::OutsideDomain(format!(
                    "level {level} is beyond stage {stage}"
                )))
            }
        }
        other => Err(GeometryError::Unsupported {
            map: format!("cylinder collapse at stage {stage}"),
            point: other.to_string(),
        }),
    }
}
