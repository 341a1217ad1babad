//! Simplicial and cubical complexes with elementary collapse moves.
//!
//! Both complex kinds expose the same cell-level interface through
//! [`CellComplex`], so free-face detection, collapse/expansion moves,
//! schedule replay, and collapsibility search are written once.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::Hash;

use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

mod cubical;
mod prism;
mod search;
mod simplicial;

pub use cubical::{CubeCell, CubicalComplex};
pub use prism::prism_filtration;
pub use search::{collapse_search, CollapseTarget, SearchOutcome, SearchStrategy};
pub use simplicial::{Simplex, SimplicialComplex};

/// A single cell of a complex: a simplex or an axis-aligned grid box.
pub trait Cell: Clone + Ord + Hash + fmt::Debug + fmt::Display {
    /// Intrinsic dimension of the cell.
    fn dim(&self) -> usize;
    /// Codimension-one faces.
    fn facets(&self) -> Vec<Self>;
    /// Whether `self` is a face of `other` and distinct from it.
    fn is_proper_face_of(&self, other: &Self) -> bool;
}

/// Common storage interface for [`SimplicialComplex`] and [`CubicalComplex`].
pub trait CellComplex: Clone {
    type Cell: Cell;

    /// All cells, ordered.
    fn cells(&self) -> &BTreeSet<Self::Cell>;
    /// Inserts one cell (no closure is taken).
    fn insert_cell(&mut self, cell: Self::Cell);
    /// Removes one cell if present.
    fn remove_cell(&mut self, cell: &Self::Cell);
    /// Kind-specific invariant violations beyond face closure.
    fn extra_violations(&self) -> Vec<Violation<Self::Cell>>;

    fn contains(&self, cell: &Self::Cell) -> bool {
        self.cells().contains(cell)
    }
    fn len(&self) -> usize {
        self.cells().len()
    }
    fn is_empty(&self) -> bool {
        self.cells().is_empty()
    }
}

/// One invariant violation found by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation<C> {
    /// `cell` is present but its face `missing` is not.
    MissingFace { cell: C, missing: C },
    /// A simplex uses a vertex id absent from the vertex registry.
    UnregisteredVertex { cell: C, vertex: u32 },
    /// A registered vertex has no singleton simplex.
    MissingSingleton { vertex: u32 },
}

impl<C: fmt::Display> fmt::Display for Violation<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingFace { cell, missing } => {
                write!(f, "cell {cell} is present but its face {missing} is not")
            }
            Violation::UnregisteredVertex { cell, vertex } => {
                write!(f, "cell {cell} uses unregistered vertex {vertex}")
            }
            Violation::MissingSingleton { vertex } => {
                write!(f, "vertex {vertex} has no singleton cell")
            }
        }
    }
}

/// Outcome of [`validate`]: empty means the complex is well formed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport<C> {
    pub violations: Vec<Violation<C>>,
}

impl<C> ValidationReport<C> {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks face closure plus kind-specific registry invariants.
///
/// Closure under codimension-one faces implies closure under all faces,
/// so only facets are checked per cell.
pub fn validate<T: CellComplex>(complex: &T) -> ValidationReport<T::Cell> {
    let mut violations = Vec::new();
    for cell in complex.cells() {
        for facet in cell.facets() {
            if !complex.contains(&facet) {
                violations.push(Violation::MissingFace {
                    cell: cell.clone(),
                    missing: facet,
                });
            }
        }
    }
    violations.extend(complex.extra_violations());
    ValidationReport { violations }
}

/// A free-face pair: `tau` is a face of `sigma` and of nothing else.
///
/// Serializes as the two-element array `[tau, sigma]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CollapseStep<C> {
    pub tau: C,
    pub sigma: C,
}

impl<C: Serialize> Serialize for CollapseStep<C> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        (&self.tau, &self.sigma).serialize(serializer)
    }
}

impl<'de, C: Deserialize<'de>> Deserialize<'de> for CollapseStep<C> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (tau, sigma) = <(C, C)>::deserialize(deserializer)?;
        Ok(CollapseStep { tau, sigma })
    }
}

/// An ordered list of collapse steps plus the cell counts along the way.
///
/// `snapshots` has one more entry than `steps`; `snapshots[k]` is the cell
/// count before step `k` and the last entry is the final count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollapseSchedule<C> {
    pub steps: Vec<CollapseStep<C>>,
    pub snapshots: Vec<usize>,
}

impl<C: Clone> CollapseSchedule<C> {
    pub fn empty(initial_cells: usize) -> Self {
        CollapseSchedule {
            steps: Vec::new(),
            snapshots: vec![initial_cells],
        }
    }

    /// Appends `later` to `self`, assuming `later` starts where `self` ends.
    pub fn concat(&self, later: &CollapseSchedule<C>) -> CollapseSchedule<C> {
        let mut steps = self.steps.clone();
        steps.extend(later.steps.iter().cloned());
        let mut snapshots = self.snapshots.clone();
        snapshots.extend(later.snapshots.iter().skip(1).copied());
        CollapseSchedule { steps, snapshots }
    }
}

#[derive(Debug, Error)]
pub enum ComplexError {
    #[error("{tau} is not a free face with coface {sigma}: {reason}")]
    NotFree {
        tau: String,
        sigma: String,
        reason: String,
    },
    #[error("cannot expand by ({sigma}, {tau}): {reason}")]
    InvalidExpansion {
        sigma: String,
        tau: String,
        reason: String,
    },
}

/// Cells of `complex` that properly contain `tau`.
fn proper_cofaces<'a, T: CellComplex>(complex: &'a T, tau: &T::Cell) -> Vec<&'a T::Cell> {
    complex
        .cells()
        .iter()
        .filter(|sigma| tau.is_proper_face_of(sigma))
        .collect()
}

/// All free-face pairs, ordered lexicographically by `tau`.
pub fn free_faces<T: CellComplex>(complex: &T) -> Vec<CollapseStep<T::Cell>> {
    let mut pairs = Vec::new();
    for tau in complex.cells() {
        let cofaces = proper_cofaces(complex, tau);
        if let [sigma] = cofaces.as_slice() {
            // A unique proper coface is necessarily one dimension up:
            // any higher coface would contribute an intermediate face too.
            pairs.push(CollapseStep {
                tau: tau.clone(),
                sigma: (*sigma).clone(),
            });
        }
    }
    pairs
}

/// Removes the free pair `(step.tau, step.sigma)` from the complex.
pub fn elementary_collapse<T: CellComplex>(
    complex: &T,
    step: &CollapseStep<T::Cell>,
) -> Result<T, ComplexError> {
    let not_free = |reason: &str| ComplexError::NotFree {
        tau: step.tau.to_string(),
        sigma: step.sigma.to_string(),
        reason: reason.to_string(),
    };
    if !complex.contains(&step.tau) {
        return Err(not_free("tau is not in the complex"));
    }
    let cofaces = proper_cofaces(complex, &step.tau);
    match cofaces.as_slice() {
        [] => Err(not_free("tau has no proper coface")),
        [sigma] if **sigma == step.sigma => {
            let mut out = complex.clone();
            // Sigma goes first so that a singleton tau sees an up-to-date
            // usage count when the vertex registry is pruned.
            out.remove_cell(&step.sigma);
            out.remove_cell(&step.tau);
            Ok(out)
        }
        [sigma] => Err(not_free(&format!("unique coface is {sigma}, not sigma"))),
        many => Err(not_free(&format!("tau has {} proper cofaces", many.len()))),
    }
}

/// Adds the pair `(new_sigma, new_tau)` so that collapsing it again
/// restores the input. Both cells must be new, the result must be closed,
/// and `new_tau` must be free in the result with coface `new_sigma`.
pub fn elementary_expansion<T: CellComplex>(
    complex: &T,
    new_sigma: T::Cell,
    new_tau: T::Cell,
) -> Result<T, ComplexError> {
    let invalid = |reason: &str| ComplexError::InvalidExpansion {
        sigma: new_sigma.to_string(),
        tau: new_tau.to_string(),
        reason: reason.to_string(),
    };
    if complex.contains(&new_sigma) {
        return Err(invalid("sigma is already in the complex"));
    }
    if complex.contains(&new_tau) {
        return Err(invalid("tau is already in the complex"));
    }
    if !new_tau.is_proper_face_of(&new_sigma) || new_tau.dim() + 1 != new_sigma.dim() {
        return Err(invalid("tau is not a codimension-one face of sigma"));
    }
    let mut out = complex.clone();
    out.insert_cell(new_sigma.clone());
    out.insert_cell(new_tau.clone());
    let report = validate(&out);
    if !report.is_valid() {
        return Err(invalid(&format!(
            "result is not a complex: {}",
            report.violations[0]
        )));
    }
    let cofaces = proper_cofaces(&out, &new_tau);
    match cofaces.as_slice() {
        [sigma] if **sigma == new_sigma => Ok(out),
        _ => Err(invalid("tau would not be free with coface sigma")),
    }
}

/// Replays `steps` in order, checking freeness at every step.
///
/// Returns the final complex together with the schedule carrying the
/// cell-count snapshots.
pub fn apply_schedule<T: CellComplex>(
    complex: &T,
    steps: &[CollapseStep<T::Cell>],
) -> Result<(T, CollapseSchedule<T::Cell>), ComplexError> {
    let mut current = complex.clone();
    let mut snapshots = vec![current.len()];
    for step in steps {
        current = elementary_collapse(&current, step)?;
        snapshots.push(current.len());
    }
    Ok((
        current,
        CollapseSchedule {
            steps: steps.to_vec(),
            snapshots,
        },
    ))
}

/// Alternating cell count; constant along any collapse schedule.
pub fn euler_characteristic<T: CellComplex>(complex: &T) -> i64 {
    complex
        .cells()
        .iter()
        .map(|c| if c.dim() % 2 == 0 { 1 } else { -1 })
        .sum()
}
