use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    apply_schedule, elementary_collapse, free_faces, CellComplex, CollapseSchedule, CollapseStep,
};

/// What a collapse schedule should end at.
#[derive(Clone, Debug)]
pub enum CollapseTarget<T: CellComplex> {
    /// Any single vertex: the search succeeds once one cell remains.
    AnyVertex,
    /// A specific subcomplex, compared by cell set.
    Subcomplex(T),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchStrategy {
    /// Repeatedly take the lexicographically first admissible free pair,
    /// or a seeded uniform choice among them. Fast, incomplete.
    Greedy,
    /// Backtracking over all free-pair choices with memoized states.
    /// Complete on small complexes; a node budget keeps it bounded.
    Exhaustive,
}

/// Result of [`collapse_search`].
#[derive(Clone, Debug)]
pub enum SearchOutcome<C> {
    Found(CollapseSchedule<C>),
    /// `proven` is true only when an exhaustive search ran to completion,
    /// so no schedule exists at all.
    NotFound { proven: bool },
}

impl<C> SearchOutcome<C> {
    pub fn schedule(&self) -> Option<&CollapseSchedule<C>> {
        match self {
            SearchOutcome::Found(s) => Some(s),
            SearchOutcome::NotFound { .. } => None,
        }
    }
}

/// Upper bound on distinct states an exhaustive search will visit.
pub const EXHAUSTIVE_NODE_BUDGET: usize = 2_000_000;

fn reached<T: CellComplex>(current: &T, target: &CollapseTarget<T>) -> bool {
    match target {
        CollapseTarget::AnyVertex => current.len() == 1,
        CollapseTarget::Subcomplex(t) => current.cells() == t.cells(),
    }
}

/// Free pairs that do not touch the target subcomplex.
fn admissible_pairs<T: CellComplex>(
    current: &T,
    target: &CollapseTarget<T>,
) -> Vec<CollapseStep<T::Cell>> {
    let pairs = free_faces(current);
    match target {
        CollapseTarget::AnyVertex => pairs,
        CollapseTarget::Subcomplex(t) => pairs
            .into_iter()
            .filter(|p| !t.contains(&p.tau) && !t.contains(&p.sigma))
            .collect(),
    }
}

/// Searches for a collapse schedule from `complex` down to `target`.
///
/// `seed` only affects the greedy strategy, which picks uniformly among
/// the admissible pairs instead of taking the first. `step_limit` bounds
/// the schedule length for both strategies; a `None` limit means the
/// search may use as many steps as it likes.
pub fn collapse_search<T: CellComplex>(
    complex: &T,
    target: &CollapseTarget<T>,
    strategy: SearchStrategy,
    seed: Option<u64>,
    step_limit: Option<usize>,
) -> SearchOutcome<T::Cell> {
    match strategy {
        SearchStrategy::Greedy => greedy(complex, target, seed, step_limit),
        SearchStrategy::Exhaustive => exhaustive(complex, target, step_limit),
    }
}

fn greedy<T: CellComplex>(
    complex: &T,
    target: &CollapseTarget<T>,
    seed: Option<u64>,
    step_limit: Option<usize>,
) -> SearchOutcome<T::Cell> {
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let mut current = complex.clone();
    let mut steps = Vec::new();
    loop {
        if reached(&current, target) {
            let (_, schedule) = apply_schedule(complex, &steps)
                .expect("greedy steps were applied as they were chosen");
            return SearchOutcome::Found(schedule);
        }
        if step_limit.is_some_and(|limit| steps.len() >= limit) {
            return SearchOutcome::NotFound { proven: false };
        }
        let pairs = admissible_pairs(&current, target);
        if pairs.is_empty() {
            return SearchOutcome::NotFound { proven: false };
        }
        let pick = match rng.as_mut() {
            Some(rng) => rng.gen_range(0..pairs.len()),
            None => 0,
        };
        let step = pairs[pick].clone();
        current = elementary_collapse(&current, &step)
            .expect("free pairs reported by free_faces collapse cleanly");
        steps.push(step);
    }
}

/// Sorted cell list, the memo key for visited states.
fn state_key<T: CellComplex>(complex: &T) -> Vec<T::Cell> {
    complex.cells().iter().cloned().collect()
}

struct Dfs<'a, T: CellComplex> {
    target: &'a CollapseTarget<T>,
    step_limit: Option<usize>,
    visited: HashSet<Vec<T::Cell>>,
    truncated: bool,
}

impl<T: CellComplex> Dfs<'_, T> {
    fn run(&mut self, current: &T, path: &mut Vec<CollapseStep<T::Cell>>) -> bool {
        if reached(current, self.target) {
            return true;
        }
        if self.step_limit.is_some_and(|limit| path.len() >= limit) {
            self.truncated = true;
            return false;
        }
        if self.visited.len() >= EXHAUSTIVE_NODE_BUDGET {
            self.truncated = true;
            return false;
        }
        if !self.visited.insert(state_key(current)) {
            return false;
        }
        for step in admissible_pairs(current, self.target) {
            let next = elementary_collapse(current, &step)
                .expect("free pairs reported by free_faces collapse cleanly");
            path.push(step);
            if self.run(&next, path) {
                return true;
            }
            path.pop();
        }
        false
    }
}

fn exhaustive<T: CellComplex>(
    complex: &T,
    target: &CollapseTarget<T>,
    step_limit: Option<usize>,
) -> SearchOutcome<T::Cell> {
    let mut dfs = Dfs {
        target,
        step_limit,
        visited: HashSet::new(),
        truncated: false,
    };
    let mut path = Vec::new();
    if dfs.run(complex, &mut path) {
        let (_, schedule) =
            apply_schedule(complex, &path).expect("exhaustive path was applied as it was built");
        SearchOutcome::Found(schedule)
    } else {
        SearchOutcome::NotFound {
            proven: !dfs.truncated,
        }
    }
}
