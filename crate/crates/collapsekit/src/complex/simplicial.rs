use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Cell, CellComplex, Violation};

/// A simplex stored as its sorted vertex ids.
///
/// Serializes as a plain vertex array; input arrays may be unsorted but
/// must be nonempty and duplicate-free.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Simplex(Vec<u32>);

impl Simplex {
    pub fn new(vertices: impl IntoIterator<Item = u32>) -> Result<Self, String> {
        let mut v: Vec<u32> = vertices.into_iter().collect();
        if v.is_empty() {
            return Err("a simplex needs at least one vertex".to_string());
        }
        v.sort_unstable();
        if v.windows(2).any(|w| w[0] == w[1]) {
            return Err(format!("duplicate vertex in simplex {v:?}"));
        }
        Ok(Simplex(v))
    }

    pub fn vertices(&self) -> &[u32] {
        &self.0
    }

    pub fn contains_vertex(&self, v: u32) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    /// All nonempty proper subsets, used when closing a complex.
    pub fn proper_subsets(&self) -> Vec<Simplex> {
        let n = self.0.len();
        let mut out = Vec::new();
        for mask in 1..(1u64 << n) - 1 {
            let verts: Vec<u32> = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| self.0[i])
                .collect();
            out.push(Simplex(verts));
        }
        out
    }
}

impl TryFrom<Vec<u32>> for Simplex {
    type Error = String;
    fn try_from(v: Vec<u32>) -> Result<Self, Self::Error> {
        Simplex::new(v)
    }
}

impl From<Simplex> for Vec<u32> {
    fn from(s: Simplex) -> Vec<u32> {
        s.0
    }
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

impl Cell for Simplex {
    fn dim(&self) -> usize {
        self.0.len() - 1
    }

    fn facets(&self) -> Vec<Simplex> {
        if self.0.len() == 1 {
            return Vec::new();
        }
        (0..self.0.len())
            .map(|skip| {
                let verts: Vec<u32> = self
                    .0
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, v)| *v)
                    .collect();
                Simplex(verts)
            })
            .collect()
    }

    fn is_proper_face_of(&self, other: &Simplex) -> bool {
        if self.0.len() >= other.0.len() {
            return false;
        }
        self.0.iter().all(|v| other.contains_vertex(*v))
    }
}

/// A finite abstract simplicial complex.
///
/// The vertex registry and the singleton simplices are kept in sync by
/// [`CellComplex::insert_cell`] and [`CellComplex::remove_cell`];
/// deserialized data may be out of sync, which [`super::validate`] reports.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplicialComplex {
    vertices: BTreeSet<u32>,
    simplices: BTreeSet<Simplex>,
}

impl SimplicialComplex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from raw parts without closure or validation.
    pub fn from_parts(vertices: BTreeSet<u32>, simplices: BTreeSet<Simplex>) -> Self {
        SimplicialComplex {
            vertices,
            simplices,
        }
    }

    /// Builds the closure of the given simplices.
    pub fn from_maximal(simplices: impl IntoIterator<Item = Simplex>) -> Self {
        let mut complex = SimplicialComplex::new();
        for s in simplices {
            complex.insert_closed(s);
        }
        complex
    }

    /// The full simplex on vertices `0..=n` with all its faces.
    pub fn full_simplex(n: u32) -> Self {
        Self::from_maximal([Simplex::new(0..=n).expect("nonempty range")])
    }

    /// The boundary of the full simplex on vertices `0..=n`.
    pub fn simplex_boundary(n: u32) -> Self {
        let top = Simplex::new(0..=n).expect("nonempty range");
        Self::from_maximal(top.facets())
    }

    /// Inserts a simplex together with all of its faces.
    pub fn insert_closed(&mut self, simplex: Simplex) {
        for face in simplex.proper_subsets() {
            self.insert_cell(face);
        }
        self.insert_cell(simplex);
    }

    pub fn vertices(&self) -> &BTreeSet<u32> {
        &self.vertices
    }

    pub fn simplices(&self) -> &BTreeSet<Simplex> {
        &self.simplices
    }

    pub fn dim(&self) -> Option<usize> {
        self.simplices.iter().map(|s| s.dim()).max()
    }
}

impl CellComplex for SimplicialComplex {
    type Cell = Simplex;

    fn cells(&self) -> &BTreeSet<Simplex> {
        &self.simplices
    }

    fn insert_cell(&mut self, cell: Simplex) {
        for v in cell.vertices() {
            self.vertices.insert(*v);
        }
        self.simplices.insert(cell);
    }

    fn remove_cell(&mut self, cell: &Simplex) {
        self.simplices.remove(cell);
        if cell.dim() == 0 {
            let v = cell.vertices()[0];
            let still_used = self.simplices.iter().any(|s| s.contains_vertex(v));
            if !still_used {
                self.vertices.remove(&v);
            }
        }
    }

    fn extra_violations(&self) -> Vec<Violation<Simplex>> {
        let mut out = Vec::new();
        for v in &self.vertices {
            let singleton = Simplex(vec![*v]);
            if !self.simplices.contains(&singleton) {
                out.push(Violation::MissingSingleton { vertex: *v });
            }
        }
        for s in &self.simplices {
            for v in s.vertices() {
                if !self.vertices.contains(v) {
                    out.push(Violation::UnregisteredVertex {
                        cell: s.clone(),
                        vertex: *v,
                    });
                }
            }
        }
        out
    }
}
