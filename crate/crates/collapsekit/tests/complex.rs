use std::collections::BTreeSet;

use collapsekit::complex::{
    apply_schedule, collapse_search, elementary_collapse, elementary_expansion,
    euler_characteristic, free_faces, prism_filtration, validate, Cell, CellComplex,
    CollapseStep, CollapseTarget, ComplexError, CubeCell, CubicalComplex, SearchOutcome,
    SearchStrategy, Simplex, SimplicialComplex, Violation,
};

fn simplex(verts: &[u32]) -> Simplex {
    Simplex::new(verts.iter().copied()).unwrap()
}

fn step(tau: &[u32], sigma: &[u32]) -> CollapseStep<Simplex> {
    CollapseStep {
        tau: simplex(tau),
        sigma: simplex(sigma),
    }
}

#[test]
fn single_edge_with_vertices_is_valid() {
    let c = SimplicialComplex::from_maximal([simplex(&[0, 1])]);
    assert!(validate(&c).is_valid());
    assert_eq!(c.simplices().len(), 3);
}

#[test]
fn bare_edge_reports_missing_vertex_faces() {
    let mut simplices = BTreeSet::new();
    simplices.insert(simplex(&[0, 1]));
    let c = SimplicialComplex::from_parts(BTreeSet::new(), simplices);
    let report = validate(&c);
    assert!(!report.is_valid());
    let missing: BTreeSet<Simplex> = report
        .violations
        .iter()
        .filter_map(|v| match v {
            Violation::MissingFace { missing, .. } => Some(missing.clone()),
            _ => None,
        })
        .collect();
    assert_eq!(
        missing,
        BTreeSet::from([simplex(&[0]), simplex(&[1])])
    );
}

#[test]
fn vertex_registry_mismatches_are_reported() {
    let mut simplices = BTreeSet::new();
    simplices.insert(simplex(&[3]));
    let c = SimplicialComplex::from_parts(BTreeSet::from([7]), simplices);
    let report = validate(&c);
    assert!(report
        .violations
        .contains(&Violation::MissingSingleton { vertex: 7 }));
    assert!(report.violations.contains(&Violation::UnregisteredVertex {
        cell: simplex(&[3]),
        vertex: 3
    }));
}

#[test]
fn full_three_simplex_has_fifteen_cells_and_is_valid() {
    // All nonempty subsets of a 4-element vertex set: 2^4 - 1 = 15.
    let c = SimplicialComplex::full_simplex(3);
    assert_eq!(c.simplices().len(), 15);
    assert!(validate(&c).is_valid());
}

#[test]
fn triangle_free_faces_are_its_three_edges() {
    let c = SimplicialComplex::from_maximal([simplex(&[0, 1, 2])]);
    let pairs = free_faces(&c);
    assert_eq!(
        pairs,
        vec![
            step(&[0, 1], &[0, 1, 2]),
            step(&[0, 2], &[0, 1, 2]),
            step(&[1, 2], &[0, 1, 2]),
        ]
    );
}

#[test]
fn triangle_boundary_has_no_free_face() {
    // Each vertex of the boundary circle sits in two edges.
    let c = SimplicialComplex::simplex_boundary(2);
    assert!(free_faces(&c).is_empty());
}

#[test]
fn glued_triangles_free_faces_are_the_four_boundary_edges() {
    let c = SimplicialComplex::from_maximal([simplex(&[0, 1, 2]), simplex(&[1, 2, 3])]);
    let pairs = free_faces(&c);
    assert_eq!(
        pairs,
        vec![
            step(&[0, 1], &[0, 1, 2]),
            step(&[0, 2], &[0, 1, 2]),
            step(&[1, 3], &[1, 2, 3]),
            step(&[2, 3], &[1, 2, 3]),
        ]
    );
}

#[test]
fn collapsing_triangle_through_one_edge() {
    let c = SimplicialComplex::from_maximal([simplex(&[0, 1, 2])]);
    let out = elementary_collapse(&c, &step(&[0, 1], &[0, 1, 2])).unwrap();
    let expect: BTreeSet<Simplex> = [
        simplex(&[0]),
        simplex(&[1]),
        simplex(&[2]),
        simplex(&[0, 2]),
        simplex(&[1, 2]),
    ]
    .into_iter()
    .collect();
    assert_eq!(out.simplices(), &expect);
}

#[test]
fn collapsing_an_edge_path_drops_the_leaf_vertex() {
    let c = SimplicialComplex::from_maximal([simplex(&[0, 1])]);
    let out = elementary_collapse(&c, &step(&[0], &[0, 1])).unwrap();
    assert_eq!(out.simplices(), &BTreeSet::from([simplex(&[1])]));
    assert_eq!(out.vertices(), &BTreeSet::from([1]));
}

#[test]
fn shared_edge_of_two_triangles_is_not_free() {
    let c = SimplicialComplex::from_maximal([simplex(&[0, 1, 2]), simplex(&[1, 2, 3])]);
    let err = elementary_collapse(&c, &step(&[1, 2], &[0, 1, 2])).unwrap_err();
    assert!(matches!(err, ComplexError::NotFree { .. }));
}

#[test]
fn expansion_restores_the_full_triangle() {
    let c = SimplicialComplex::from_maximal([simplex(&[0, 1, 2])]);
    let collapsed = elementary_collapse(&c, &step(&[0, 1], &[0, 1, 2])).unwrap();
    let restored =
        elementary_expansion(&collapsed, simplex(&[0, 1, 2]), simplex(&[0, 1])).unwrap();
    assert_eq!(restored, c);
}

#[test]
fn expansion_can_grow_a_fresh_edge() {
    let c = SimplicialComplex::from_maximal([simplex(&[1])]);
    let grown = elementary_expansion(&c, simplex(&[0, 1]), simplex(&[0])).unwrap();
    assert_eq!(grown, SimplicialComplex::from_maximal([simplex(&[0, 1])]));
    assert_eq!(grown.vertices(), &BTreeSet::from([0, 1]));
}

#[test]
fn expansion_missing_an_edge_face_is_rejected() {
    // Adding {0,1,2} with tau {0,2} leaves the face {0,1} absent.
    let c = SimplicialComplex::from_maximal([simplex(&[0, 2]), simplex(&[1, 2])]);
    let err = elementary_expansion(&c, simplex(&[0, 1, 2]), simplex(&[0, 2])).unwrap_err();
    assert!(matches!(err, ComplexError::InvalidExpansion { .. }));
}

#[test]
fn full_three_simplex_collapses_in_seven_steps() {
    // 15 cells down to 1 removes 14 cells, two per step.
    let c = SimplicialComplex::full_simplex(3);
    for strategy in [SearchStrategy::Greedy, SearchStrategy::Exhaustive] {
        let out = collapse_search(&c, &CollapseTarget::AnyVertex, strategy, None, None);
        let schedule = out.schedule().expect("collapsible");
        assert_eq!(schedule.steps.len(), 7);
        let (end, _) = apply_schedule(&c, &schedule.steps).unwrap();
        assert_eq!(end.len(), 1);
    }
}

#[test]
fn triangle_boundary_is_proven_non_collapsible() {
    let c = SimplicialComplex::simplex_boundary(2);
    let out = collapse_search(
        &c,
        &CollapseTarget::AnyVertex,
        SearchStrategy::Exhaustive,
        None,
        None,
    );
    assert!(matches!(out, SearchOutcome::NotFound { proven: true }));
}

#[test]
fn edge_path_collapses_in_one_step_per_edge() {
    for k in 1..6u32 {
        let edges = (0..k).map(|i| simplex(&[i, i + 1]));
        let c = SimplicialComplex::from_maximal(edges);
        let out = collapse_search(
            &c,
            &CollapseTarget::AnyVertex,
            SearchStrategy::Greedy,
            None,
            None,
        );
        assert_eq!(out.schedule().expect("collapsible").steps.len(), k as usize);
    }
}

#[test]
fn greedy_search_respects_a_subcomplex_target() {
    let c = SimplicialComplex::from_maximal([simplex(&[0, 1, 2])]);
    let target = SimplicialComplex::from_maximal([simplex(&[1, 2])]);
    let out = collapse_search(
        &c,
        &CollapseTarget::Subcomplex(target.clone()),
        SearchStrategy::Greedy,
        None,
        None,
    );
    let schedule = out.schedule().expect("triangle collapses onto an edge");
    let (end, _) = apply_schedule(&c, &schedule.steps).unwrap();
    assert_eq!(end.cells(), target.cells());
}

#[test]
fn seeded_greedy_runs_are_reproducible() {
    let c = SimplicialComplex::full_simplex(3);
    let run = |seed| {
        collapse_search(
            &c,
            &CollapseTarget::AnyVertex,
            SearchStrategy::Greedy,
            Some(seed),
            None,
        )
        .schedule()
        .expect("collapsible")
        .clone()
    };
    assert_eq!(run(11), run(11));
    assert_eq!(run(12), run(12));
}

#[test]
fn step_limit_makes_greedy_give_up_unproven() {
    let c = SimplicialComplex::full_simplex(3);
    let out = collapse_search(
        &c,
        &CollapseTarget::AnyVertex,
        SearchStrategy::Greedy,
        None,
        Some(2),
    );
    assert!(matches!(out, SearchOutcome::NotFound { proven: false }));
}

#[test]
fn prism_over_an_edge_is_two_triangles_collapsing_to_the_base() {
    let base = SimplicialComplex::from_maximal([simplex(&[0, 1])]);
    let (tower, schedule) = prism_filtration(&base, 1).unwrap();
    // Vertex ids on the upper level are shifted by 2: 0->2, 1->3.
    assert_eq!(
        tower
            .simplices()
            .iter()
            .filter(|s| s.dim() == 2)
            .cloned()
            .collect::<Vec<_>>(),
        vec![simplex(&[0, 1, 3]), simplex(&[0, 2, 3])]
    );
    assert_eq!(
        schedule.steps,
        vec![
            step(&[2, 3], &[0, 2, 3]),
            step(&[0, 3], &[0, 1, 3]),
            step(&[2], &[0, 2]),
            step(&[3], &[1, 3]),
        ]
    );
    let (end, _) = apply_schedule(&tower, &schedule.steps).unwrap();
    assert_eq!(end, base);
}

#[test]
fn prism_with_zero_shells_is_the_identity_schedule() {
    let base = SimplicialComplex::from_maximal([simplex(&[0, 1])]);
    let (tower, schedule) = prism_filtration(&base, 0).unwrap();
    assert_eq!(tower, base);
    assert!(schedule.steps.is_empty());
    assert_eq!(schedule.snapshots, vec![3]);
}

#[test]
fn boundary_tower_plus_core_collapses_to_a_vertex() {
    // Two shells over the triangle boundary, glued to the solid triangle
    // at level 0; the tower schedule runs first, then the triangle's own
    // collapse finishes at a single vertex.
    let boundary = SimplicialComplex::simplex_boundary(2);
    let (tower, tower_schedule) = prism_filtration(&boundary, 2).unwrap();
    let mut whole = tower.clone();
    whole.insert_closed(simplex(&[0, 1, 2]));

    let (after_tower, prefix) = apply_schedule(&whole, &tower_schedule.steps).unwrap();
    let core = SimplicialComplex::full_simplex(2);
    assert_eq!(after_tower, core);

    let core_out = collapse_search(
        &core,
        &CollapseTarget::AnyVertex,
        SearchStrategy::Greedy,
        None,
        None,
    );
    let suffix = core_out.schedule().expect("solid triangle collapses");
    let total = prefix.concat(suffix);
    let (end, _) = apply_schedule(&whole, &total.steps).unwrap();
    assert_eq!(end.len(), 1);
    assert_eq!(total.snapshots.len(), total.steps.len() + 1);
}

#[test]
fn euler_characteristic_is_constant_along_a_schedule() {
    let base = SimplicialComplex::from_maximal([simplex(&[0, 1, 2]), simplex(&[2, 3])]);
    let (tower, schedule) = prism_filtration(&base, 2).unwrap();
    let chi = euler_characteristic(&tower);
    let mut current = tower.clone();
    for s in &schedule.steps {
        current = elementary_collapse(&current, s).unwrap();
        assert_eq!(euler_characteristic(&current), chi);
    }
}

#[test]
fn simplicial_json_round_trip() {
    let c = SimplicialComplex::from_maximal([simplex(&[0, 1, 2])]);
    let json = serde_json::to_string(&c).unwrap();
    assert_eq!(
        json,
        r#"{"vertices":[0,1,2],"simplices":[[0],[0,1],[0,1,2],[0,2],[1],[1,2],[2]]}"#
    );
    let back: SimplicialComplex = serde_json::from_str(&json).unwrap();
    assert_eq!(back, c);
}

#[test]
fn unsorted_simplex_input_is_canonicalized() {
    let c: SimplicialComplex =
        serde_json::from_str(r#"{"vertices":[0,1],"simplices":[[1,0],[0],[1]]}"#).unwrap();
    assert!(c.simplices().contains(&simplex(&[0, 1])));
}

#[test]
fn duplicate_vertices_in_a_simplex_are_rejected() {
    let r: Result<SimplicialComplex, _> =
        serde_json::from_str(r#"{"vertices":[0],"simplices":[[0,0]]}"#);
    assert!(r.is_err());
}

#[test]
fn schedule_json_is_a_list_of_pairs() {
    let steps = vec![step(&[0, 1], &[0, 1, 2])];
    let json = serde_json::to_string(&steps).unwrap();
    assert_eq!(json, "[[[0,1],[0,1,2]]]");
    let back: Vec<CollapseStep<Simplex>> = serde_json::from_str(&json).unwrap();
    assert_eq!(back, steps);
}

#[test]
fn unit_square_collapses_to_a_vertex() {
    let c = CubicalComplex::unit_cube(2);
    assert_eq!(c.cells().len(), 9);
    assert!(validate(&c).is_valid());
    let out = collapse_search(
        &c,
        &CollapseTarget::AnyVertex,
        SearchStrategy::Exhaustive,
        None,
        None,
    );
    let schedule = out.schedule().expect("square collapses");
    assert_eq!(schedule.steps.len(), 4);
}

#[test]
fn cube_boundary_shell_is_proven_non_collapsible() {
    let solid = CubicalComplex::unit_cube(2);
    let top = CubeCell::new(vec![(0, 1), (0, 1)]).unwrap();
    let mut shell = solid.clone();
    shell.remove_cell(&top);
    let out = collapse_search(
        &shell,
        &CollapseTarget::AnyVertex,
        SearchStrategy::Exhaustive,
        None,
        None,
    );
    assert!(matches!(out, SearchOutcome::NotFound { proven: true }));
}

#[test]
fn cubical_json_round_trip() {
    let c = CubicalComplex::unit_cube(1);
    let json = serde_json::to_string(&c).unwrap();
    assert_eq!(json, r#"{"cells":[[[0,0]],[[0,1]],[[1,1]]]}"#);
    let back: CubicalComplex = serde_json::from_str(&json).unwrap();
    assert_eq!(back, c);
}

#[test]
fn wide_cube_factor_is_rejected() {
    let r: Result<CubicalComplex, _> = serde_json::from_str(r#"{"cells":[[[0,2]]]}"#);
    assert!(r.is_err());
}

#[test]
fn missing_cube_face_is_reported() {
    let top = CubeCell::new(vec![(0, 1)]).unwrap();
    let c = CubicalComplex::from_parts(BTreeSet::from([top.clone()]));
    let report = validate(&c);
    assert_eq!(report.violations.len(), 2);
    assert!(report.violations.iter().all(|v| matches!(
        v,
        Violation::MissingFace { cell, .. } if *cell == top
    )));
}
