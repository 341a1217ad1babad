//! Set representations used by the stationarity and insulation checks.
//!
//! Interval sets over line models carry exact endpoint algebra: the
//! preimage under a piecewise-linear bond is computed by inverting each
//! segment, so certificates over those systems are exact rather than
//! sampled. Star sets over complexes get the same treatment through a
//! combinatorial replay of collapse schedules. Metric balls cover every
//! other chart and are checked by sampling.

use serde::{Deserialize, Serialize};

use crate::complex::{Cell, CellComplex, CollapseStep, Simplex, SimplicialComplex};
use crate::geometry::Point;

use super::Space;

const END_TOL: f64 = 1e-9;

/// One interval of the line with explicit end membership, so sets can
/// stay exact at clamped domain boundaries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalPiece {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl IntervalPiece {
    pub fn open(lo: f64, hi: f64) -> Self {
        IntervalPiece {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        IntervalPiece {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn contains_value(&self, x: f64) -> bool {
        (x > self.lo || (x == self.lo && self.lo_closed))
            && (x < self.hi || (x == self.hi && self.hi_closed))
    }

    /// Intersection with a closed interval, closing any clipped end.
    fn clip(&self, lo: f64, hi: f64) -> IntervalPiece {
        let mut out = *self;
        if out.lo < lo {
            out.lo = lo;
            out.lo_closed = true;
        }
        if out.hi > hi {
            out.hi = hi;
            out.hi_closed = true;
        }
        out
    }
}

/// A subset of one space of an inverse system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OpenSetRep {
    /// Finite union of intervals of a line model.
    Intervals { pieces: Vec<IntervalPiece> },
    /// Union of open stars of the given cells in the hosting complex.
    CellStars { centers: Vec<Simplex> },
    /// Open metric ball, intersected with the hosting space.
    MetricBall { center: Point, radius: f64 },
}

impl OpenSetRep {
    pub fn interval(lo: f64, hi: f64) -> Self {
        OpenSetRep::Intervals {
            pieces: vec![IntervalPiece::open(lo, hi)],
        }
    }

    /// Membership relative to the hosting space: a ball never reaches
    /// outside it, and star membership requires the carrier to be a
    /// cell of the hosting complex.
    pub fn contains(&self, host: &Space, p: &Point) -> bool {
        match self {
            OpenSetRep::Intervals { pieces } => match p {
                Point::Scalar { x } => pieces.iter().any(|piece| piece.contains_value(*x)),
                _ => false,
            },
            OpenSetRep::CellStars { centers } => {
                let carrier = match p.minimal_carrier() {
                    Some(c) => c,
                    None => return false,
                };
                let in_host = match host {
                    Space::Complex { complex, .. } => complex.cells().contains(&carrier),
                    _ => false,
                };
                in_host
                    && centers
                        .iter()
                        .any(|c| *c == carrier || c.is_proper_face_of(&carrier))
            }
            OpenSetRep::MetricBall { center, radius } => {
                host.contains(p) && host.dist(center, p) < *radius
            }
        }
    }
}

/// Normal form: sorted, merged, empties dropped. Two equal sets always
/// normalize to the same piece list up to float tolerance.
pub fn normalize_pieces(mut pieces: Vec<IntervalPiece>) -> Vec<IntervalPiece> {
    pieces.retain(|p| !p.is_empty());
    pieces.sort_by(|a, b| {
        a.lo.partial_cmp(&b.lo)
            .unwrap()
            .then(a.hi.partial_cmp(&b.hi).unwrap())
    });
    let mut out: Vec<IntervalPiece> = Vec::new();
    for p in pieces {
        match out.last_mut() {
            Some(cur)
                if p.lo < cur.hi - END_TOL
                    || ((p.lo - cur.hi).abs() <= END_TOL
                        && (cur.hi_closed || p.lo_closed)) =>
            {
                if (p.lo - cur.lo).abs() <= END_TOL {
                    cur.lo_closed |= p.lo_closed;
                }
                if p.hi > cur.hi + END_TOL {
                    cur.hi = p.hi;
                    cur.hi_closed = p.hi_closed;
                } else if (p.hi - cur.hi).abs() <= END_TOL {
                    cur.hi_closed |= p.hi_closed;
                }
            }
            _ => out.push(p),
        }
    }
    out
}

pub fn pieces_equal(a: &[IntervalPiece], b: &[IntervalPiece]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(p, q)| {
            (p.lo - q.lo).abs() <= END_TOL
                && (p.hi - q.hi).abs() <= END_TOL
                && p.lo_closed == q.lo_closed
                && p.hi_closed == q.hi_closed
        })
}

/// Exact preimage of an interval union under one piecewise-linear bond,
/// segment by segment.
pub fn pl_preimage(breakpoints: &[(f64, f64)], pieces: &[IntervalPiece]) -> Vec<IntervalPiece> {
    let mut out = Vec::new();
    for w in breakpoints.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x1 <= x0 {
            continue;
        }
        for p in pieces {
            if y0 == y1 {
                if p.contains_value(y0) {
                    out.push(IntervalPiece::closed(x0, x1));
                }
                continue;
            }
            let solve = |y: f64| x0 + (y - y0) * (x1 - x0) / (y1 - y0);
            let piece = if y1 > y0 {
                IntervalPiece {
                    lo: solve(p.lo),
                    hi: solve(p.hi),
                    lo_closed: p.lo_closed,
                    hi_closed: p.hi_closed,
                }
            } else {
                IntervalPiece {
                    lo: solve(p.hi),
                    hi: solve(p.lo),
                    lo_closed: p.hi_closed,
                    hi_closed: p.lo_closed,
                }
            };
            let clipped = piece.clip(x0, x1);
            if !clipped.is_empty() {
                out.push(clipped);
            }
        }
    }
    normalize_pieces(out)
}

/// `part` minus `cut`: at most a left and a right remainder.
fn subtract_piece(part: &IntervalPiece, cut: &IntervalPiece) -> Vec<IntervalPiece> {
    if cut.is_empty() {
        return vec![*part];
    }
    let mut left = *part;
    if part.hi > cut.lo {
        left.hi = cut.lo;
        left.hi_closed = !cut.lo_closed;
    } else if part.hi == cut.lo {
        left.hi_closed = part.hi_closed && !cut.lo_closed;
    }
    let mut right = *part;
    if part.lo < cut.hi {
        right.lo = cut.hi;
        right.lo_closed = !cut.hi_closed;
    } else if part.lo == cut.hi {
        right.lo_closed = part.lo_closed && !cut.hi_closed;
    }
    [left, right].into_iter().filter(|p| !p.is_empty()).collect()
}

/// A point of `a` not in `b`, if the difference is nonempty. Prefers
/// wide leftovers so the witness is numerically comfortable.
pub fn piece_difference_point(a: &[IntervalPiece], b: &[IntervalPiece]) -> Option<f64> {
    let mut best: Option<IntervalPiece> = None;
    for piece in a {
        let mut leftover = vec![*piece];
        for cut in b {
            leftover = leftover
                .into_iter()
                .flat_map(|part| subtract_piece(&part, cut))
                .collect();
        }
        for part in leftover {
            if best.map_or(true, |cur| part.hi - part.lo > cur.hi - cur.lo) {
                best = Some(part);
            }
        }
    }
    best.map(|p| 0.5 * (p.lo + p.hi))
}

/// The cells whose interiors one elementary collapse can reach from the
/// interior of `sigma` (or of `tau`): all proper faces of `sigma` that
/// contain the vertex opposite `tau`.
fn collapse_image_cells(step: &CollapseStep<Simplex>) -> Vec<Simplex> {
    let apex: Vec<u32> = step
        .sigma
        .vertices()
        .iter()
        .copied()
        .filter(|v| !step.tau.contains_vertex(*v))
        .collect();
    step.sigma
        .proper_subsets()
        .into_iter()
        .filter(|d| apex.iter().all(|v| d.contains_vertex(*v)))
        .collect()
}

/// Replays a collapse schedule on a set of cells, replacing each moved
/// cell by the cells its interior spreads onto.
pub(crate) fn replay_schedule_on_set(
    set: &mut std::collections::BTreeSet<Simplex>,
    steps: &[CollapseStep<Simplex>],
) {
    for step in steps {
        if set.contains(&step.sigma) || set.contains(&step.tau) {
            set.remove(&step.sigma);
            set.remove(&step.tau);
            set.extend(collapse_image_cells(step));
        }
    }
}

/// Per-cell image tracking through a collapse schedule: for each cell of
/// the starting complex, the set of cells whose interiors its interior
/// can land in.
pub fn schedule_cell_images(
    complex: &SimplicialComplex,
    steps: &[CollapseStep<Simplex>],
) -> std::collections::BTreeMap<Simplex, std::collections::BTreeSet<Simplex>> {
    use std::collections::{BTreeMap, BTreeSet};
    let mut images: BTreeMap<Simplex, BTreeSet<Simplex>> = complex
        .cells()
        .iter()
        .map(|c| (c.clone(), BTreeSet::from([c.clone()])))
        .collect();
    for set in images.values_mut() {
        replay_schedule_on_set(set, steps);
    }
    images
}

/// The up-closure of `centers` in `complex`: every cell having one of
/// them as a face. This is the cell family of a union of open stars.
pub fn star_family(
    complex: &SimplicialComplex,
    centers: &[Simplex],
) -> std::collections::BTreeSet<Simplex> {
    complex
        .cells()
        .iter()
        .filter(|cell| {
            centers
                .iter()
                .any(|c| c == *cell || c.is_proper_face_of(cell))
        })
        .cloned()
        .collect()
}
