use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Cell, CellComplex, Violation};

/// An axis-aligned box on the integer grid.
///
/// Each factor is either a degenerate point `{k}` stored as `(k, k)` or a
/// unit interval `[k, k+1]` stored as `(k, k+1)`. Serializes as an array
/// of `[lo, hi]` pairs.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(try_from = "Vec<(i64, i64)>", into = "Vec<(i64, i64)>")]
pub struct CubeCell(Vec<(i64, i64)>);

impl CubeCell {
    pub fn new(factors: impl IntoIterator<Item = (i64, i64)>) -> Result<Self, String> {
        let factors: Vec<(i64, i64)> = factors.into_iter().collect();
        if factors.is_empty() {
            return Err("a cube cell needs at least one factor".to_string());
        }
        for &(lo, hi) in &factors {
            if hi != lo && hi != lo + 1 {
                return Err(format!(
                    "factor [{lo},{hi}] is neither a point nor a unit interval"
                ));
            }
        }
        Ok(CubeCell(factors))
    }

    pub fn factors(&self) -> &[(i64, i64)] {
        &self.0
    }

    /// Number of coordinate factors, degenerate or not.
    pub fn ambient_dim(&self) -> usize {
        self.0.len()
    }

    /// All faces of this cell, the cell itself included.
    pub fn faces(&self) -> Vec<CubeCell> {
        let mut out = vec![self.clone()];
        for (axis, &(lo, hi)) in self.0.iter().enumerate() {
            if lo == hi {
                continue;
            }
            let mut next = Vec::new();
            for cell in &out {
                for end in [lo, hi] {
                    let mut factors = cell.0.clone();
                    factors[axis] = (end, end);
                    next.push(CubeCell(factors));
                }
            }
            out.extend(next);
        }
        out
    }
}

impl TryFrom<Vec<(i64, i64)>> for CubeCell {
    type Error = String;
    fn try_from(v: Vec<(i64, i64)>) -> Result<Self, Self::Error> {
        CubeCell::new(v)
    }
}

impl From<CubeCell> for Vec<(i64, i64)> {
    fn from(c: CubeCell) -> Vec<(i64, i64)> {
        c.0
    }
}

impl fmt::Display for CubeCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &(lo, hi)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "x")?;
            }
            if lo == hi {
                write!(f, "{{{lo}}}")?;
            } else {
                write!(f, "[{lo},{hi}]")?;
            }
        }
        Ok(())
    }
}

impl Cell for CubeCell {
    fn dim(&self) -> usize {
        self.0.iter().filter(|(lo, hi)| lo != hi).count()
    }

    fn facets(&self) -> Vec<CubeCell> {
        let mut out = Vec::new();
        for (axis, &(lo, hi)) in self.0.iter().enumerate() {
            if lo == hi {
                continue;
            }
            for end in [lo, hi] {
                let mut factors = self.0.clone();
                factors[axis] = (end, end);
                out.push(CubeCell(factors));
            }
        }
        out
    }

    fn is_proper_face_of(&self, other: &CubeCell) -> bool {
        if self.0.len() != other.0.len() || self == other {
            return false;
        }
        self.0
            .iter()
            .zip(other.0.iter())
            .all(|(&(slo, shi), &(olo, ohi))| olo <= slo && shi <= ohi)
    }
}

/// A finite cubical complex on the integer grid.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubicalComplex {
    cells: BTreeSet<CubeCell>,
}

impl CubicalComplex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(cells: BTreeSet<CubeCell>) -> Self {
        CubicalComplex { cells }
    }

    /// Builds the closure of the given cells.
    pub fn from_maximal(cells: impl IntoIterator<Item = CubeCell>) -> Self {
        let mut complex = CubicalComplex::new();
        for cell in cells {
            for face in cell.faces() {
                complex.insert_cell(face);
            }
        }
        complex
    }

    /// The solid unit cube `[0,1]^n` with all its faces.
    pub fn unit_cube(n: usize) -> Self {
        let top = CubeCell::new(vec![(0, 1); n]).expect("n >= 1");
        Self::from_maximal([top])
    }

    pub fn dim(&self) -> Option<usize> {
        self.cells.iter().map(|c| c.dim()).max()
    }
}

impl CellComplex for CubicalComplex {
    type Cell = CubeCell;

    fn cells(&self) -> &BTreeSet<CubeCell> {
        &self.cells
    }

    fn insert_cell(&mut self, cell: CubeCell) {
        self.cells.insert(cell);
    }

    fn remove_cell(&mut self, cell: &CubeCell) {
        self.cells.remove(cell);
    }

    fn extra_violations(&self) -> Vec<Violation<CubeCell>> {
        Vec::new()
    }
}
