use super::{
    apply_schedule, Cell, CellComplex, CollapseSchedule, ComplexError, Simplex, SimplicialComplex,
};

/// Copies a simplex to a level of the tower by shifting its vertex ids.
fn lift(simplex: &Simplex, level: usize, stride: u32) -> Simplex {
    let shift = stride
        .checked_mul(level as u32)
        .expect("vertex ids of the lifted complex fit in u32");
    Simplex::new(simplex.vertices().iter().map(|v| v + shift))
        .expect("lifting preserves simplex validity")
}

/// The `i`-th staircase simplex of `tau x [level, level+1]`: the first
/// `i+1` vertices taken on the lower level, the rest on the upper level,
/// sharing the pivot vertex.
fn staircase_cell(tau: &Simplex, i: usize, level: usize, stride: u32) -> Simplex {
    let w = tau.vertices();
    let lo = stride * level as u32;
    let hi = stride * (level as u32 + 1);
    let verts = w[..=i]
        .iter()
        .map(|v| v + lo)
        .chain(w[i..].iter().map(|v| v + hi));
    Simplex::new(verts).expect("staircase cells are valid simplices")
}

/// The free face consumed together with the `i`-th staircase simplex:
/// same split as [`staircase_cell`] but with the pivot vertex only on the
/// upper level.
fn staircase_face(tau: &Simplex, i: usize, level: usize, stride: u32) -> Simplex {
    let w = tau.vertices();
    let lo = stride * level as u32;
    let hi = stride * (level as u32 + 1);
    let verts = w[..i]
        .iter()
        .map(|v| v + lo)
        .chain(w[i..].iter().map(|v| v + hi));
    Simplex::new(verts).expect("staircase faces are valid simplices")
}

/// Builds the staircase triangulation of `base x [0, shells]` together
/// with a schedule collapsing it shell by shell onto the base copy at
/// level 0. Read in reverse, the schedule is the expansion filtration
/// growing the tower out of the base.
///
/// Level `k` reuses the base's vertex ids shifted by `k * (max id + 1)`,
/// so the level-0 copy is the base itself (replaced by its closure if it
/// was not closed). The schedule works top shell first; within a shell,
/// base simplices are processed by decreasing dimension, then
/// lexicographically.
pub fn prism_filtration(
    base: &SimplicialComplex,
    shells: usize,
) -> Result<(SimplicialComplex, CollapseSchedule<Simplex>), ComplexError> {
    let closed_base = SimplicialComplex::from_maximal(base.simplices().iter().cloned());
    let stride = match closed_base.vertices().iter().max() {
        Some(max) => max + 1,
        None => return Ok((closed_base, CollapseSchedule::empty(0))),
    };

    let mut tower = closed_base.clone();
    for level in 0..shells {
        for tau in closed_base.simplices() {
            for i in 0..tau.vertices().len() {
                tower.insert_closed(staircase_cell(tau, i, level, stride));
            }
        }
    }

    let mut by_dim: Vec<&Simplex> = closed_base.simplices().iter().collect();
    by_dim.sort_by(|a, b| b.dim().cmp(&a.dim()).then_with(|| a.cmp(b)));

    let mut steps = Vec::new();
    for level in (0..shells).rev() {
        for tau in &by_dim {
            steps.push(super::CollapseStep {
                tau: lift(tau, level + 1, stride),
                sigma: staircase_cell(tau, 0, level, stride),
            });
            for i in 1..tau.vertices().len() {
                steps.push(super::CollapseStep {
                    tau: staircase_face(tau, i, level, stride),
                    sigma: staircase_cell(tau, i, level, stride),
                });
            }
        }
    }

    let (end, schedule) = apply_schedule(&tower, &steps)?;
    debug_assert_eq!(end.cells(), closed_base.cells());
    Ok((tower, schedule))
}
