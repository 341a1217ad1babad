use std::collections::BTreeMap;

use collapsekit::complex::{CollapseStep, Simplex};
use collapsekit::geometry::{
    centered_simplex_vertices, collapse_chart_vertices, compose, cubical_collapse_eval,
    cylinder_collapse_eval, simplicial_collapse_eval, track_faithful_check, ChartMetric,
    ConvexRegion, GeometryError, HomotopyEvaluator, MetricSpace, Point, RetractionMap,
    SimplicialMap,
};

fn sx(verts: &[u32]) -> Simplex {
    Simplex::new(verts.iter().copied()).unwrap()
}

fn bary(verts: &[u32], coords: &[f64]) -> Point {
    Point::simplicial(sx(verts), coords.to_vec()).unwrap()
}

fn assert_close(got: f64, want: f64, tol: f64) {
    assert!(
        (got - want).abs() <= tol,
        "got {got}, want {want} (tol {tol})"
    );
}

fn assert_points_close(got: &Point, want: &Point, tol: f64) {
    let d = ChartMetric.dist(got, want);
    assert!(d <= tol, "{got} is {d} away from {want} (tol {tol})");
}

/// Barycentric grid over the triangle {0, 1, 2} with k subdivisions per
/// edge: (k + 1)(k + 2) / 2 points.
fn triangle_grid(k: usize) -> Vec<Point> {
    let mut out = Vec::new();
    for i in 0..=k {
        for j in 0..=(k - i) {
            let a = i as f64 / k as f64;
            let b = j as f64 / k as f64;
            out.push(bary(&[0, 1, 2], &[a, b, 1.0 - a - b]));
        }
    }
    out
}

fn square_grid(k: usize, lo: f64, hi: f64) -> Vec<Point> {
    let mut out = Vec::new();
    for i in 0..=k {
        for j in 0..=k {
            let x = lo + (hi - lo) * i as f64 / k as f64;
            let y = lo + (hi - lo) * j as f64 / k as f64;
            out.push(Point::vector(vec![x, y]));
        }
    }
    out
}

fn times(k: usize) -> Vec<f64> {
    (0..=k).map(|i| i as f64 / k as f64).collect()
}

mod charts {
    use super::*;

    #[test]
    fn centered_simplex_charts_are_regular_with_unit_sqrt2_edges() {
        for m in 1..=4usize {
            let verts = centered_simplex_vertices(m);
            assert_eq!(verts.len(), m + 1);
            let want_norm_sq = m as f64 / (m + 1) as f64;
            for v in &verts {
                assert_eq!(v.len(), m);
                let norm_sq: f64 = v.iter().map(|c| c * c).sum();
                assert_close(norm_sq, want_norm_sq, 1e-12);
            }
            for (i, a) in verts.iter().enumerate() {
                for b in verts.iter().skip(i + 1) {
                    let d: f64 = a
                        .iter()
                        .zip(b)
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt();
                    assert_close(d, 2f64.sqrt(), 1e-12);
                }
            }
        }
    }

    #[test]
    fn collapse_chart_places_the_apex_above_the_facet_barycenter() {
        for n in 1..=4usize {
            let verts = collapse_chart_vertices(n);
            assert_eq!(verts.len(), n + 1);
            let apex = &verts[n];
            for (k, c) in apex.iter().enumerate() {
                if k + 1 == n {
                    assert_close(*c, ((n + 1) as f64 / n as f64).sqrt(), 1e-12);
                } else {
                    assert_eq!(*c, 0.0);
                }
            }
            for (i, a) in verts.iter().enumerate() {
                for b in verts.iter().skip(i + 1) {
                    let d: f64 = a
                        .iter()
                        .zip(b)
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt();
                    assert_close(d, 2f64.sqrt(), 1e-12);
                }
            }
        }
    }
}

mod simplicial_ray {
    use super::*;

    fn sigma() -> Simplex {
        sx(&[0, 1, 2])
    }

    fn tau() -> Simplex {
        sx(&[0, 1])
    }

    #[test]
    fn rim_points_are_fixed_bitwise() {
        let fixed = [
            Point::vertex(0),
            Point::vertex(1),
            Point::vertex(2),
            bary(&[0, 2], &[0.3, 0.7]),
            bary(&[1, 2], &[0.9, 0.1]),
        ];
        for x in fixed {
            let y = simplicial_collapse_eval(&sigma(), &tau(), &x).unwrap();
            assert_eq!(y, x);
        }
    }

    #[test]
    fn sigma_barycenter_lands_on_the_apex() {
        let x = bary(&[0, 1, 2], &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        let y = simplicial_collapse_eval(&sigma(), &tau(), &x).unwrap();
        assert_eq!(y, Point::vertex(2));
    }

    #[test]
    fn free_facet_barycenter_lands_on_the_apex() {
        let x = bary(&[0, 1], &[0.5, 0.5]);
        let y = simplicial_collapse_eval(&sigma(), &tau(), &x).unwrap();
        assert_eq!(y, Point::vertex(2));
    }

    #[test]
    fn interior_point_exits_through_the_rim() {
        let x = bary(&[0, 1, 2], &[0.5, 0.3, 0.2]);
        let y = simplicial_collapse_eval(&sigma(), &tau(), &x).unwrap();
        let want = bary(&[0, 2], &[2.0 / 7.0, 5.0 / 7.0]);
        assert_points_close(&y, &want, 1e-12);
    }

    #[test]
    fn facet_interior_point_exits_through_the_rim() {
        let x = bary(&[0, 1], &[0.6, 0.4]);
        let y = simplicial_collapse_eval(&sigma(), &tau(), &x).unwrap();
        let want = bary(&[0, 2], &[1.0 / 3.0, 2.0 / 3.0]);
        assert_points_close(&y, &want, 1e-12);
    }

    #[test]
    fn one_dimensional_collapse_pushes_the_free_vertex_across() {
        let edge = sx(&[0, 1]);
        let free = sx(&[0]);
        let x = bary(&[0, 1], &[0.7, 0.3]);
        assert_eq!(
            simplicial_collapse_eval(&edge, &free, &x).unwrap(),
            Point::vertex(1)
        );
        assert_eq!(
            simplicial_collapse_eval(&edge, &free, &Point::vertex(0)).unwrap(),
            Point::vertex(1)
        );
    }

    #[test]
    fn three_dimensional_interior_point_exits_through_a_rim_facet() {
        let sigma3 = sx(&[0, 1, 2, 3]);
        let tau2 = sx(&[0, 1, 2]);
        let x = bary(&[0, 1, 2, 3], &[0.4, 0.3, 0.2, 0.1]);
        let y = simplicial_collapse_eval(&sigma3, &tau2, &x).unwrap();
        let want = bary(&[0, 1, 3], &[2.0 / 7.0, 1.0 / 7.0, 4.0 / 7.0]);
        assert_points_close(&y, &want, 1e-12);
    }

    /// Independent check in the Euclidean chart: the output must sit on
    /// the ray from the reflected apex through the input, at or beyond
    /// the input, with one free-facet coordinate exhausted.
    #[test]
    fn outputs_agree_with_a_euclidean_ray_oracle() {
        let chart = collapse_chart_vertices(2);
        let source = [-chart[2][0], -chart[2][1]];
        let euclid = |p: &Point| -> [f64; 2] {
            let p = p.promote_to(&sigma()).unwrap_or_else(|_| p.clone());
            match p {
                Point::Simplicial { coords, .. } => {
                    let mut out = [0.0, 0.0];
                    for (w, v) in coords.iter().zip(&chart) {
                        out[0] += w * v[0];
                        out[1] += w * v[1];
                    }
                    out
                }
                _ => unreachable!(),
            }
        };
        for x in triangle_grid(9) {
            let y = simplicial_collapse_eval(&sigma(), &tau(), &x).unwrap();
            let xe = euclid(&x);
            let ye = euclid(&y);
            let dx = [xe[0] - source[0], xe[1] - source[1]];
            let dy = [ye[0] - source[0], ye[1] - source[1]];
            let cross = dx[0] * dy[1] - dx[1] * dy[0];
            assert!(cross.abs() < 1e-9, "output left the ray: {cross}");
            let sx2 = (dy[0] * dy[0] + dy[1] * dy[1]).sqrt();
            let sx1 = (dx[0] * dx[0] + dx[1] * dx[1]).sqrt();
            assert!(sx2 >= sx1 - 1e-12, "output fell behind the input");
            let promoted = y.promote_to(&sigma()).unwrap_or_else(|_| y.clone());
            if let Point::Simplicial { coords, .. } = promoted {
                assert!(
                    coords[0] == 0.0 || coords[1] == 0.0,
                    "output {coords:?} is not on the rim"
                );
            }
        }
    }

    #[test]
    fn evaluation_is_idempotent_and_fixes_the_rim_bitwise() {
        for x in triangle_grid(13) {
            let once = simplicial_collapse_eval(&sigma(), &tau(), &x).unwrap();
            let twice = simplicial_collapse_eval(&sigma(), &tau(), &once).unwrap();
            assert_eq!(twice, once);
        }
    }

    #[test]
    fn points_outside_the_simplex_are_rejected() {
        let stray = Point::vertex(7);
        assert!(matches!(
            simplicial_collapse_eval(&sigma(), &tau(), &stray),
            Err(GeometryError::OutsideDomain(_))
        ));
        assert!(simplicial_collapse_eval(&sigma(), &tau(), &Point::scalar(0.5)).is_err());
    }
}

mod cubical_ray {
    use super::*;

    fn on_bottom_or_side(coords: &[f64]) -> bool {
        let n = coords.len();
        coords[n - 1] == -1.0 || coords[..n - 1].iter().any(|c| c.abs() == 1.0)
    }

    #[test]
    fn one_dimensional_collapse_hits_the_far_end() {
        let y = cubical_collapse_eval(1, &Point::vector(vec![0.3])).unwrap();
        assert_eq!(y, Point::vector(vec![-1.0]));
    }

    #[test]
    fn the_origin_drops_to_the_bottom_center() {
        for n in 2..=4usize {
            let y = cubical_collapse_eval(n, &Point::vector(vec![0.0; n])).unwrap();
            let mut want = vec![0.0; n];
            want[n - 1] = -1.0;
            assert_eq!(y, Point::vector(want));
        }
    }

    #[test]
    fn image_points_are_fixed_bitwise() {
        let fixed = [
            Point::vector(vec![-1.0, 0.25]),
            Point::vector(vec![0.25, -1.0]),
            Point::vector(vec![1.0, 0.7]),
            Point::vector(vec![1.0, 1.0]),
            Point::vector(vec![0.5, -1.0, 0.5]),
        ];
        for x in fixed {
            let n = match &x {
                Point::Vector { coords } => coords.len(),
                _ => unreachable!(),
            };
            assert_eq!(cubical_collapse_eval(n, &x).unwrap(), x);
        }
    }

    #[test]
    fn side_exits_pin_the_binding_wall_exactly() {
        let y = cubical_collapse_eval(2, &Point::vector(vec![0.8, 0.5])).unwrap();
        match &y {
            Point::Vector { coords } => {
                assert_eq!(coords[0], 1.0);
                assert_close(coords[1], 0.125, 1e-12);
            }
            _ => panic!("wrong chart"),
        }
        let y = cubical_collapse_eval(2, &Point::vector(vec![-0.8, 0.5])).unwrap();
        match &y {
            Point::Vector { coords } => {
                assert_eq!(coords[0], -1.0);
                assert_close(coords[1], 0.125, 1e-12);
            }
            _ => panic!("wrong chart"),
        }
    }

    #[test]
    fn bottom_exits_land_on_the_floor() {
        let y = cubical_collapse_eval(2, &Point::vector(vec![0.5, 0.0])).unwrap();
        assert_points_close(&y, &Point::vector(vec![0.75, -1.0]), 1e-12);
        let y = cubical_collapse_eval(2, &Point::vector(vec![0.0, 1.0])).unwrap();
        assert_points_close(&y, &Point::vector(vec![0.0, -1.0]), 1e-12);
    }

    #[test]
    fn evaluation_is_idempotent_and_lands_on_the_image() {
        for x in square_grid(12, -1.0, 1.0) {
            let once = cubical_collapse_eval(2, &x).unwrap();
            match &once {
                Point::Vector { coords } => assert!(on_bottom_or_side(coords)),
                _ => panic!("wrong chart"),
            }
            let twice = cubical_collapse_eval(2, &once).unwrap();
            assert_eq!(twice, once);
        }
    }

    #[test]
    fn points_outside_the_cube_are_rejected() {
        assert!(matches!(
            cubical_collapse_eval(2, &Point::vector(vec![1.5, 0.0])),
            Err(GeometryError::OutsideDomain(_))
        ));
    }
}

mod cylinder {
    use super::*;

    /// Simplicial circle subdivision: the 12-gon double cover of vertex
    /// labels onto the 6-gon, even vertices to their half, odd vertices
    /// forward.
    fn subdivision() -> SimplicialMap {
        SimplicialMap::new((0..12u32).map(|v| {
            if v % 2 == 0 {
                (v, v / 2)
            } else {
                (v, (v / 2 + 1) % 6)
            }
        }))
    }

    #[test]
    fn stage_points_collapse_to_their_simplicial_image() {
        let map = subdivision();
        let x = Point::cylinder(1, bary(&[0, 1], &[0.25, 0.75]), 0.7).unwrap();
        let y = cylinder_collapse_eval(&map, 1, &x).unwrap();
        assert_eq!(
            y,
            Point::cylinder(0, bary(&[0, 1], &[0.25, 0.75]), 0.0).unwrap()
        );

        let x = Point::cylinder(1, bary(&[1, 2], &[0.4, 0.6]), 1.0).unwrap();
        let y = cylinder_collapse_eval(&map, 1, &x).unwrap();
        assert_eq!(y, Point::cylinder(0, Point::vertex(1), 0.0).unwrap());
    }

    #[test]
    fn lower_levels_are_fixed_bitwise() {
        let map = subdivision();
        let x = Point::cylinder(0, bary(&[2, 3], &[0.5, 0.5]), 0.0).unwrap();
        assert_eq!(cylinder_collapse_eval(&map, 1, &x).unwrap(), x);
    }

    #[test]
    fn higher_levels_are_outside_the_stage_domain() {
        let map = subdivision();
        let x = Point::cylinder(2, Point::vertex(0), 1.5).unwrap();
        assert!(matches!(
            cylinder_collapse_eval(&map, 1, &x),
            Err(GeometryError::OutsideDomain(_))
        ));
    }

    #[test]
    fn constant_maps_send_whole_stages_to_the_target_vertex() {
        let constant = SimplicialMap::new((0..12u32).map(|v| (v, 5)));
        for h in [0.1, 0.5, 1.0] {
            let x = Point::cylinder(1, bary(&[3, 4], &[0.5, 0.5]), h).unwrap();
            let y = cylinder_collapse_eval(&constant, 1, &x).unwrap();
            assert_eq!(y, Point::cylinder(0, Point::vertex(5), 0.0).unwrap());
        }
    }
}

mod composition {
    use super::*;

    fn vertex_schedule() -> Vec<CollapseStep<Simplex>> {
        vec![
            CollapseStep {
                tau: sx(&[1, 2]),
                sigma: sx(&[0, 1, 2]),
            },
            CollapseStep {
                tau: sx(&[2]),
                sigma: sx(&[0, 2]),
            },
            CollapseStep {
                tau: sx(&[1]),
                sigma: sx(&[0, 1]),
            },
        ]
    }

    #[test]
    fn empty_composition_is_the_identity() {
        let id = compose(vec![]);
        assert_eq!(id, RetractionMap::Identity);
        let x = bary(&[0, 1, 2], &[0.2, 0.3, 0.5]);
        assert_eq!(id.eval(&x).unwrap(), x);
    }

    #[test]
    fn single_map_composition_is_that_map() {
        let pl = RetractionMap::Pl1d {
            breakpoints: vec![(0.0, 0.0), (1.0, 1.0), (2.0, 1.0)],
        };
        let composed = compose(vec![pl.clone()]);
        assert_eq!(composed, pl);
        for i in 0..=20 {
            let x = Point::scalar(i as f64 / 10.0);
            assert_eq!(composed.eval(&x).unwrap(), pl.eval(&x).unwrap());
        }
    }

    #[test]
    fn schedule_to_a_vertex_fixes_it_and_is_idempotent() {
        let map = RetractionMap::Schedule {
            steps: vertex_schedule(),
        };
        assert_eq!(map.eval(&Point::vertex(0)).unwrap(), Point::vertex(0));
        let grid = triangle_grid(13);
        assert!(grid.len() >= 100);
        for x in grid {
            let once = map.eval(&x).unwrap();
            assert_eq!(once, Point::vertex(0));
            assert_eq!(map.eval(&once).unwrap(), once);
        }
    }

    #[test]
    fn composite_matches_sequential_evaluation() {
        let steps = vertex_schedule();
        let as_maps: Vec<RetractionMap> = steps
            .iter()
            .rev()
            .map(|s| RetractionMap::ElementarySimplicial {
                sigma: s.sigma.clone(),
                tau: s.tau.clone(),
            })
            .collect();
        let composite = compose(as_maps);
        let schedule = RetractionMap::Schedule { steps };
        for x in triangle_grid(9) {
            assert_eq!(
                composite.eval(&x).unwrap(),
                schedule.eval(&x).unwrap()
            );
        }
    }

    #[test]
    fn half_time_on_a_two_stage_composite_reaches_the_first_stop() {
        let first = RetractionMap::ElementarySimplicial {
            sigma: sx(&[0, 1, 2]),
            tau: sx(&[1, 2]),
        };
        let second = RetractionMap::ElementarySimplicial {
            sigma: sx(&[0, 1]),
            tau: sx(&[1]),
        };
        let h = HomotopyEvaluator::new(RetractionMap::Composite {
            maps: vec![second, first.clone()],
        });
        for x in triangle_grid(7) {
            let at_half = h.eval(&x, 0.5).unwrap();
            assert_eq!(at_half, first.eval(&x).unwrap());
            let quarter = h.eval(&x, 0.25).unwrap();
            let first_half = HomotopyEvaluator::new(first.clone()).eval(&x, 0.5).unwrap();
            assert_points_close(&quarter, &first_half, 1e-12);
        }
    }
}

mod tracks {
    use super::*;

    #[test]
    fn homotopy_endpoints_are_exact() {
        let maps = [
            RetractionMap::CubicalApex { dim: 2 },
            RetractionMap::Projection { keep: 1 },
        ];
        for map in maps {
            let h = HomotopyEvaluator::new(map.clone());
            let x = Point::vector(vec![0.25, 0.75]);
            assert_eq!(h.eval(&x, 0.0).unwrap(), x);
            assert_eq!(h.eval(&x, 1.0).unwrap(), map.eval(&x).unwrap());
        }
    }

    #[test]
    fn times_outside_the_unit_interval_are_rejected() {
        let h = HomotopyEvaluator::new(RetractionMap::Identity);
        let x = Point::scalar(0.0);
        assert!(matches!(
            h.eval(&x, 1.5),
            Err(GeometryError::OutsideDomain(_))
        ));
        assert!(h.eval(&x, -0.25).is_err());
    }

    #[test]
    fn product_collapse_is_track_faithful() {
        let h = HomotopyEvaluator::new(RetractionMap::Projection { keep: 1 });
        let samples = square_grid(9, 0.0, 1.0);
        let report = track_faithful_check(&ChartMetric, &h, &samples, &times(8), 1e-9).unwrap();
        assert!(report.passed, "worst violation {}", report.worst);
        assert_eq!(report.samples_checked, samples.len());
        assert!(report.witness.is_none());
    }

    #[test]
    fn elementary_collapse_homotopy_is_track_faithful() {
        let h = HomotopyEvaluator::new(RetractionMap::ElementarySimplicial {
            sigma: sx(&[0, 1, 2]),
            tau: sx(&[0, 1]),
        });
        let samples = triangle_grid(19);
        assert!(samples.len() >= 200);
        let report = track_faithful_check(&ChartMetric, &h, &samples, &times(8), 1e-9).unwrap();
        assert!(report.passed, "worst violation {}", report.worst);
    }

    #[test]
    fn schedule_homotopy_is_track_faithful() {
        let h = HomotopyEvaluator::new(RetractionMap::Schedule {
            steps: vec![
                CollapseStep {
                    tau: sx(&[1, 2]),
                    sigma: sx(&[0, 1, 2]),
                },
                CollapseStep {
                    tau: sx(&[2]),
                    sigma: sx(&[0, 2]),
                },
                CollapseStep {
                    tau: sx(&[1]),
                    sigma: sx(&[0, 1]),
                },
            ],
        });
        let report =
            track_faithful_check(&ChartMetric, &h, &triangle_grid(13), &times(9), 1e-9).unwrap();
        assert!(report.passed, "worst violation {}", report.worst);
    }

    #[test]
    fn cubical_collapse_homotopy_is_track_faithful() {
        let h = HomotopyEvaluator::new(RetractionMap::CubicalApex { dim: 2 });
        let report =
            track_faithful_check(&ChartMetric, &h, &square_grid(10, -1.0, 1.0), &times(8), 1e-9)
                .unwrap();
        assert!(report.passed, "worst violation {}", report.worst);
    }

    #[test]
    fn absolute_value_fold_fails_the_straight_line_track_check() {
        let h = HomotopyEvaluator::new(RetractionMap::Pl1d {
            breakpoints: vec![(-1.0, 1.0), (0.0, 0.0), (1.0, 1.0)],
        });
        let samples: Vec<Point> = (0..=20)
            .map(|i| Point::scalar(-1.0 + i as f64 / 10.0))
            .collect();
        let report = track_faithful_check(&ChartMetric, &h, &samples, &times(8), 1e-9).unwrap();
        assert!(!report.passed);
        assert!(report.worst >= 0.5);
        let (witness, _) = report.witness.expect("failing checks carry a witness");
        match witness {
            Point::Scalar { x } => assert!(x < 0.0, "violations start on the folded side"),
            _ => panic!("wrong chart"),
        }
    }

    #[test]
    fn arm_fold_straight_homotopy_is_not_track_faithful() {
        let h = HomotopyEvaluator::new(RetractionMap::ArmFold { from: 2 });
        let samples: Vec<Point> = (1..=10)
            .map(|i| Point::arm(2, i as f64 / 10.0))
            .chain((1..=10).map(|i| Point::arm(1, i as f64 / 10.0)))
            .collect();
        let report = track_faithful_check(&ChartMetric, &h, &samples, &times(8), 1e-9).unwrap();
        assert!(!report.passed, "folding two arms together cannot be track-faithful here");
    }

    #[test]
    fn cylinder_homotopy_slides_down_and_stays_track_faithful() {
        let map = SimplicialMap::new((0..6u32).map(|v| (v, v / 2)));
        let bond = RetractionMap::Cylinder { stage: 1, map };
        let h = HomotopyEvaluator::new(bond);
        let x = Point::cylinder(1, bary(&[0, 1], &[0.5, 0.5]), 0.8).unwrap();
        let mid = h.eval(&x, 0.5).unwrap();
        match &mid {
            Point::Cylinder { level, height, .. } => {
                assert_eq!(*level, 1);
                assert_close(*height, 0.4, 1e-12);
            }
            _ => panic!("wrong chart"),
        }
        let samples: Vec<Point> = (1..=8)
            .map(|i| Point::cylinder(1, bary(&[2, 3], &[0.25, 0.75]), i as f64 / 8.0).unwrap())
            .collect();
        let report = track_faithful_check(&ChartMetric, &h, &samples, &times(8), 1e-9).unwrap();
        assert!(report.passed, "worst violation {}", report.worst);
    }

    #[test]
    fn tree_clamp_homotopy_descends_the_root_geodesic() {
        let parent: BTreeMap<u32, u32> = [(1, 0), (2, 1), (3, 2)].into_iter().collect();
        let clamp = RetractionMap::TreeClamp {
            radius: 1,
            parent: parent.clone(),
        };
        let h = HomotopyEvaluator::new(clamp.clone());
        let leaf = Point::vertex(3);
        assert_eq!(h.eval(&leaf, 1.0).unwrap(), Point::vertex(1));
        assert_eq!(h.eval(&leaf, 0.5).unwrap(), Point::vertex(2));
        assert_points_close(
            &h.eval(&leaf, 0.25).unwrap(),
            &bary(&[2, 3], &[0.5, 0.5]),
            1e-12,
        );

        let edge_point = bary(&[1, 2], &[0.5, 0.5]);
        let mid = h.eval(&edge_point, 0.5).unwrap();
        assert_points_close(&mid, &bary(&[1, 2], &[0.75, 0.25]), 1e-12);

        let samples = vec![
            Point::vertex(0),
            Point::vertex(1),
            Point::vertex(2),
            Point::vertex(3),
            bary(&[0, 1], &[0.25, 0.75]),
            bary(&[1, 2], &[0.5, 0.5]),
            bary(&[2, 3], &[0.1, 0.9]),
        ];
        let report = track_faithful_check(&ChartMetric, &h, &samples, &times(8), 1e-9).unwrap();
        assert!(report.passed, "worst violation {}", report.worst);
    }

    /// Grid search for nontrivial fibers over interior image points: the
    /// clamp has none, the fold is caught red-handed.
    #[test]
    fn interior_fibers_separate_clamps_from_folds() {
        let nontrivial_fibers = |map: &RetractionMap, interior: &[f64]| -> usize {
            let mut found = 0;
            for &target in interior {
                for i in 0..=64 {
                    let y = -1.0 + i as f64 / 32.0;
                    let image = match map.eval(&Point::scalar(y)) {
                        Ok(Point::Scalar { x }) => x,
                        _ => continue,
                    };
                    if (image - target).abs() <= 1e-9 && (y - target).abs() > 1e-9 {
                        found += 1;
                    }
                }
            }
            found
        };
        let clamp = RetractionMap::Pl1d {
            breakpoints: vec![(-1.0, -1.0), (0.5, 0.5), (1.0, 0.5)],
        };
        let fold = RetractionMap::Pl1d {
            breakpoints: vec![(-1.0, 1.0), (0.0, 0.0), (1.0, 1.0)],
        };
        assert_eq!(nontrivial_fibers(&clamp, &[-0.5, 0.0, 0.25]), 0);
        assert!(nontrivial_fibers(&fold, &[0.25, 0.5, 0.75]) >= 3);
    }
}

mod retraction_laws {
    use super::*;

    fn clamp_map() -> RetractionMap {
        RetractionMap::Pl1d {
            breakpoints: vec![(0.0, 0.0), (2.0, 2.0), (3.0, 2.0)],
        }
    }

    /// Each map kind on a deterministic sample batch: applying twice
    /// must agree with applying once to within 1e-9.
    #[test]
    fn every_map_kind_is_idempotent_on_samples() {
        let parent: BTreeMap<u32, u32> = [(1, 0), (2, 1), (3, 2), (4, 2)].into_iter().collect();
        let hexagon = ConvexRegion::regular_polygon(6, 1.0, 0.0);
        let segment = ConvexRegion::Segment {
            a: vec![0.0, 0.0],
            b: vec![1.0, 0.0],
        };
        let cases: Vec<(RetractionMap, Vec<Point>)> = vec![
            (
                clamp_map(),
                (0..=120).map(|i| Point::scalar(i as f64 / 40.0)).collect(),
            ),
            (
                RetractionMap::ArmFold { from: 3 },
                (0..120)
                    .map(|i| Point::arm(i % 4, (i / 4) as f64 / 30.0))
                    .collect(),
            ),
            (
                RetractionMap::ArmCrush { arm: 2 },
                (0..120)
                    .map(|i| Point::arm(i % 4, (i / 4) as f64 / 30.0))
                    .collect(),
            ),
            (
                RetractionMap::Projection { keep: 1 },
                square_grid(10, 0.0, 1.0),
            ),
            (
                RetractionMap::RadialClamp { target: hexagon },
                square_grid(10, -2.0, 2.0),
            ),
            (
                RetractionMap::TangentDisk {
                    radius: 1.0,
                    target: 0.5,
                },
                (0..=10)
                    .flat_map(|i| {
                        (0..=10).filter_map(move |j| {
                            let x = -1.0 + i as f64 / 5.0;
                            let y = j as f64 / 5.0;
                            let inside = x * x + (y - 1.0) * (y - 1.0) <= 1.0;
                            inside.then(|| Point::vector(vec![x, y]))
                        })
                    })
                    .collect(),
            ),
            (
                RetractionMap::NearestPoint { target: segment },
                square_grid(10, -1.0, 2.0),
            ),
            (
                RetractionMap::Constant {
                    target: Point::scalar(0.25),
                },
                (0..=100).map(|i| Point::scalar(i as f64 / 100.0)).collect(),
            ),
            (
                RetractionMap::ElementarySimplicial {
                    sigma: sx(&[0, 1, 2]),
                    tau: sx(&[0, 1]),
                },
                triangle_grid(13),
            ),
            (
                RetractionMap::CubicalApex { dim: 2 },
                square_grid(10, -1.0, 1.0),
            ),
            (
                RetractionMap::TreeClamp { radius: 2, parent },
                vec![
                    Point::vertex(0),
                    Point::vertex(3),
                    Point::vertex(4),
                    bary(&[2, 3], &[0.5, 0.5]),
                    bary(&[0, 1], &[0.25, 0.75]),
                ],
            ),
        ];
        for (map, samples) in cases {
            assert!(samples.len() >= 5);
            for x in samples {
                let once = map.eval(&x).unwrap();
                let twice = map.eval(&once).unwrap();
                let d = ChartMetric.dist(&twice, &once);
                assert!(d <= 1e-9, "{map:?} moved {once} by {d} on reapplication");
            }
        }
    }

    #[test]
    fn image_points_are_fixed_within_tolerance() {
        let clamp = clamp_map();
        for i in 0..=100 {
            let x = Point::scalar(2.0 * i as f64 / 100.0);
            let y = clamp.eval(&x).unwrap();
            assert!(ChartMetric.dist(&x, &y) <= 1e-9);
        }
        let crush = RetractionMap::ArmCrush { arm: 2 };
        for i in 0..=100 {
            let arm = 1 + (i % 3) * 2;
            let x = Point::arm(arm as usize % 4, i as f64 / 100.0);
            if matches!(x, Point::Arm { arm: 2, .. }) {
                continue;
            }
            assert_eq!(crush.eval(&x).unwrap(), x);
        }
    }

    #[test]
    fn radial_clamp_pulls_outside_points_onto_the_boundary() {
        let hexagon = ConvexRegion::regular_polygon(6, 1.0, 0.0);
        let map = RetractionMap::RadialClamp {
            target: hexagon.clone(),
        };
        let y = map.eval(&Point::vector(vec![2.0, 0.0])).unwrap();
        match &y {
            Point::Vector { coords } => {
                assert!(hexagon.contains(coords, 1e-9));
                assert!(
                    !hexagon.contains(&[coords[0] * 1.001, coords[1] * 1.001], 0.0),
                    "image should sit on the boundary"
                );
            }
            _ => panic!("wrong chart"),
        }
        let inside = Point::vector(vec![0.1, 0.2]);
        assert_eq!(map.eval(&inside).unwrap(), inside);
    }

    #[test]
    fn tangent_disk_maps_onto_the_inner_circle() {
        let map = RetractionMap::TangentDisk {
            radius: 1.0,
            target: 0.5,
        };
        let y = map.eval(&Point::vector(vec![0.0, 2.0])).unwrap();
        assert_points_close(&y, &Point::vector(vec![0.0, 1.0]), 1e-12);
        let y = map.eval(&Point::vector(vec![0.8, 0.4])).unwrap();
        match &y {
            Point::Vector { coords } => {
                let dist_sq =
                    coords[0] * coords[0] + (coords[1] - 0.5) * (coords[1] - 0.5);
                assert_close(dist_sq.sqrt(), 0.5, 1e-12);
            }
            _ => panic!("wrong chart"),
        }
        let origin = Point::vector(vec![0.0, 0.0]);
        assert_eq!(map.eval(&origin).unwrap(), origin);
        assert!(matches!(
            map.eval(&Point::vector(vec![0.0, 2.5])),
            Err(GeometryError::OutsideDomain(_))
        ));
    }

    #[test]
    fn tree_clamp_sends_deep_points_to_the_radius_sphere() {
        let parent: BTreeMap<u32, u32> = [(1, 0), (2, 1), (3, 2), (4, 2)].into_iter().collect();
        let map = RetractionMap::TreeClamp { radius: 1, parent };
        assert_eq!(map.eval(&Point::vertex(3)).unwrap(), Point::vertex(1));
        assert_eq!(map.eval(&Point::vertex(4)).unwrap(), Point::vertex(1));
        assert_eq!(map.eval(&Point::vertex(1)).unwrap(), Point::vertex(1));
        let shallow = bary(&[0, 1], &[0.5, 0.5]);
        assert_eq!(map.eval(&shallow).unwrap(), shallow);
        let deep = bary(&[2, 3], &[0.25, 0.75]);
        assert_eq!(map.eval(&deep).unwrap(), Point::vertex(1));
    }
}

mod lerp {
    use super::*;
    use collapsekit::geometry::chart_lerp;

    #[test]
    fn endpoints_are_returned_exactly() {
        let a = Point::vector(vec![0.1, 0.2]);
        let b = Point::vector(vec![0.9, 0.4]);
        assert_eq!(chart_lerp(&a, &b, 0.0).unwrap(), a);
        assert_eq!(chart_lerp(&a, &b, 1.0).unwrap(), b);
    }

    #[test]
    fn cross_arm_paths_run_through_the_center() {
        let a = Point::arm(1, 0.6);
        let b = Point::arm(2, 0.2);
        assert_points_close(&chart_lerp(&a, &b, 0.5).unwrap(), &Point::arm(1, 0.2), 1e-12);
        assert_points_close(
            &chart_lerp(&a, &b, 0.75).unwrap(),
            &Point::arm(0, 0.0),
            1e-12,
        );
        assert_points_close(
            &chart_lerp(&a, &b, 0.875).unwrap(),
            &Point::arm(2, 0.1),
            1e-12,
        );
    }

    #[test]
    fn simplicial_lerp_crosses_carriers_through_their_union() {
        let a = Point::vertex(0);
        let b = Point::vertex(2);
        let mid = chart_lerp(&a, &b, 0.25).unwrap();
        assert_points_close(&mid, &bary(&[0, 2], &[0.75, 0.25]), 1e-12);
    }

    #[test]
    fn mixed_charts_are_refused() {
        let a = Point::scalar(0.0);
        let b = Point::vector(vec![0.0]);
        assert!(chart_lerp(&a, &b, 0.5).is_err());
    }
}

mod serialization {
    use super::*;

    #[test]
    fn points_carry_a_chart_tag() {
        let pairs = [
            (Point::scalar(0.5), r#"{"chart":"scalar","x":0.5}"#),
            (Point::arm(2, 0.25), r#"{"chart":"arm","arm":2,"s":0.25}"#),
            (
                Point::vertex(3),
                r#"{"chart":"simplicial","carrier":[3],"coords":[1.0]}"#,
            ),
            (
                Point::vector(vec![1.0, -0.5]),
                r#"{"chart":"vector","coords":[1.0,-0.5]}"#,
            ),
        ];
        for (point, want) in pairs {
            assert_eq!(serde_json::to_string(&point).unwrap(), want);
            let back: Point = serde_json::from_str(want).unwrap();
            assert_eq!(back, point);
        }
    }

    #[test]
    fn cylinder_points_nest_their_base() {
        let p = Point::cylinder(1, Point::vertex(0), 0.5).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(
            json,
            r#"{"chart":"cylinder","level":1,"base":{"chart":"simplicial","carrier":[0],"coords":[1.0]},"height":0.5}"#
        );
        let back: Point = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn retractions_round_trip_with_kind_tags() {
        let pl = RetractionMap::Pl1d {
            breakpoints: vec![(0.0, 0.0), (2.0, 1.0)],
        };
        assert_eq!(
            serde_json::to_string(&pl).unwrap(),
            r#"{"kind":"pl1d","breakpoints":[[0.0,0.0],[2.0,1.0]]}"#
        );

        let schedule = RetractionMap::Schedule {
            steps: vec![CollapseStep {
                tau: sx(&[0, 1]),
                sigma: sx(&[0, 1, 2]),
            }],
        };
        assert_eq!(
            serde_json::to_string(&schedule).unwrap(),
            r#"{"kind":"schedule","steps":[[[0,1],[0,1,2]]]}"#
        );

        let json = r#"{"kind":"cylinder","stage":2,"map":{"vertex_map":[[0,0],[1,0]]}}"#;
        let bond: RetractionMap = serde_json::from_str(json).unwrap();
        match &bond {
            RetractionMap::Cylinder { stage, map } => {
                assert_eq!(*stage, 2);
                assert_eq!(map.vertex_map.len(), 2);
            }
            _ => panic!("wrong kind"),
        }
        assert_eq!(serde_json::to_string(&bond).unwrap(), json);

        for kind in [
            RetractionMap::Identity,
            RetractionMap::ArmFold { from: 2 },
            RetractionMap::CubicalApex { dim: 3 },
            RetractionMap::ElementarySimplicial {
                sigma: sx(&[0, 1]),
                tau: sx(&[0]),
            },
        ] {
            let json = serde_json::to_string(&kind).unwrap();
            let back: RetractionMap = serde_json::from_str(&json).unwrap();
            assert_eq!(back, kind);
        }
    }
}
