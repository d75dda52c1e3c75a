use std::f64::consts::PI;
use std::sync::OnceLock;

use approx::assert_relative_eq;
use minmax_core::catalog::{build_star, p_residual, q_residual, solve_p, solve_q, StarExample, StarVariant};
use minmax_core::domain::{lift_lightlike, EdgeSigns, PolygonDomain};
use minmax_core::export::{extended_surface, SignedExample};
use minmax_core::feasibility::{check_js, check_lightlike, random_signed_polygon};
use minmax_core::mesh::{obj_string, parse_obj, GridSpec, MeshBuffer, MeshMetadata};
use minmax_core::reflection::{build_half_disk_map, Orientation};
use minmax_core::surfaces::{eval_surface, SurfaceKind};
use minmax_core::ComplexVal;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn star1() -> &'static StarExample {
    static S: OnceLock<StarExample> = OnceLock::new();
    S.get_or_init(|| build_star(4, 0.4, StarVariant::Alternating).unwrap())
}

fn disk_point() -> impl Strategy<Value = ComplexVal> {
    (0.0..0.95f64, 0.0..2.0 * PI).prop_map(|(r, t)| ComplexVal::from_polar(r, t))
}

fn signed_polygon() -> impl Strategy<Value = (PolygonDomain, EdgeSigns)> {
    (any::<u64>(), any::<bool>()).prop_filter_map("no polygon drawn", |(seed, close)| {
        random_signed_polygon(&mut ChaCha8Rng::seed_from_u64(seed), 8, close)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn p_solves_its_equation(n in 2u32..=8, r in 0.05..3.0f64) {
        let p = solve_p(n, r).unwrap();
        prop_assert!(p > 0.0 && p < 1.0);
        prop_assert!(p_residual(n, r, p).abs() < 1e-12);
    }

    #[test]
    fn q_solves_its_equation(half in 2u32..=5, t in 0.05..0.95f64) {
        let n = 2 * half;
        let r = t * (PI / n as f64).cos();
        let q = solve_q(n, r).unwrap();
        prop_assert!(q_residual(n, r, q).abs() < 1e-12);
    }

    #[test]
    fn checkers_agree((p, s) in signed_polygon()) {
        let js = check_js(&p, &s).unwrap();
        let ll = check_lightlike(&lift_lightlike(&p, &s, 0.0).unwrap(), &p).unwrap();
        prop_assert_eq!(js.verdict, ll.verdict);
        if js.violated_condition.is_some() && ll.violated_condition.is_some() {
            prop_assert!(js.kind().is_some());
        }
    }

    #[test]
    fn verdict_ignores_flips_scales_and_lifts((p, s) in signed_polygon(), lambda in 0.1..10.0f64, t0 in -5.0..5.0f64) {
        let v = check_js(&p, &s).unwrap().verdict;
        prop_assert_eq!(check_js(&p, &s.flipped()).unwrap().verdict, v);
        prop_assert_eq!(check_js(&p.scaled(lambda).unwrap(), &s).unwrap().verdict, v);
        prop_assert_eq!(check_lightlike(&lift_lightlike(&p, &s, t0).unwrap(), &p).unwrap().verdict, v);
    }

    #[test]
    fn conjugates_are_isometric(w in disk_point()) {
        let hf = &star1().height;
        for kind in [SurfaceKind::Min, SurfaceKind::Max] {
            let a = eval_surface(kind, hf, w).unwrap();
            let b = eval_surface(kind.conjugate(), hf, w).unwrap();
            prop_assert!((a.metric_det - b.metric_det).abs() <= 1e-10 * a.metric_det.abs().max(1.0));
        }
    }

    #[test]
    fn maximal_metric_is_spacelike(w in disk_point()) {
        let s = eval_surface(SurfaceKind::Max, &star1().height, w).unwrap();
        prop_assert!(s.metric_det > 0.0);
    }

    #[test]
    fn min_graph_lies_over_the_domain(w in disk_point()) {
        let ex = star1();
        let x = eval_surface(SurfaceKind::Min, &ex.height, w).unwrap().position;
        prop_assert!(ex.polygon.contains_closed(ComplexVal::new(x[0], x[1]), 1e-9));
    }

    #[test]
    fn half_disk_diameter_lands_on_the_arc(a in 0.0..2.0 * PI, span in 0.1..6.0f64, u in -0.999..0.999f64) {
        let w1 = ComplexVal::from_polar(1.0, a);
        let w2 = ComplexVal::from_polar(1.0, a + span);
        for side in [Orientation::CounterClockwise, Orientation::Clockwise] {
            let m = build_half_disk_map(w1, w2, side).unwrap();
            let z = m.eval(ComplexVal::new(u, 0.0));
            prop_assert!((z.norm() - 1.0).abs() < 1e-9);
            prop_assert!(m.on_arc(z));
            prop_assert!(m.eval(ComplexVal::new(u * 0.5, 0.3)).norm() < 1.0);
        }
    }

    #[test]
    fn reflected_halves_mirror_each_other(r in 0.0..0.9f64, t in 0.05..PI - 0.05) {
        static EXT: OnceLock<minmax_core::reflection::ExtendedSurface> = OnceLock::new();
        let ext = EXT.get_or_init(|| {
            let ex: SignedExample = star1().clone().into();
            extended_surface(&ex, 0).unwrap()
        });
        let w = ComplexVal::from_polar(r, t);
        let a = ext.position(SurfaceKind::Min, w).unwrap();
        let b = ext.position(SurfaceKind::Min, w.conj()).unwrap();
        prop_assert!((a[0] + b[0]).abs() < 1e-10 && (a[1] + b[1]).abs() < 1e-10 && (a[2] - b[2]).abs() < 1e-10);
        let a = ext.position(SurfaceKind::MinConj, w).unwrap();
        let b = ext.position(SurfaceKind::MinConj, w.conj()).unwrap();
        prop_assert!((a[0] - b[0]).abs() < 1e-10 && (a[1] - b[1]).abs() < 1e-10 && (a[2] + b[2]).abs() < 1e-10);
    }

    #[test]
    fn obj_round_trip_is_bit_exact(coords in prop::collection::vec(prop::array::uniform3(-1e6..1e6f64), 3..40)) {
        let n = coords.len();
        let tris: Vec<[usize; 3]> = (0..n - 2).map(|k| [0, k + 1, k + 2]).collect();
        let meta = MeshMetadata { surface: "min".into(), example: "test".into(), grid: "none".into() };
        let mesh = MeshBuffer { vertices: coords, triangles: tris, metadata: meta };
        let back = parse_obj(&obj_string(&mesh)).unwrap();
        prop_assert_eq!(back.vertices.len(), mesh.vertices.len());
        for (a, b) in back.vertices.iter().zip(&mesh.vertices) {
            prop_assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        prop_assert_eq!(back.triangles, mesh.triangles);
    }

    #[test]
    fn grid_triangles_index_the_grid(nr in 2usize..20, na in 3usize..40, clip in 0.1..0.999f64) {
        let g = GridSpec::new(nr, na, clip).unwrap();
        let n = g.points().len();
        prop_assert_eq!(n, nr * na + 1);
        prop_assert!(g.triangles().iter().all(|t| t.iter().all(|&i| i < n)));
    }
}

#[test]
fn scaled_square_keeps_its_margin_ratio() {
    let sq = PolygonDomain::new(vec![
        ComplexVal::new(0.0, 0.0),
        ComplexVal::new(1.0, 0.0),
        ComplexVal::new(1.0, 1.0),
        ComplexVal::new(0.0, 1.0),
    ])
    .unwrap();
    let s = EdgeSigns::parse("+-+-").unwrap();
    let a = check_js(&sq, &s).unwrap().margin.unwrap();
    let b = check_js(&sq.scaled(2.5).unwrap(), &s).unwrap().margin.unwrap();
    assert_relative_eq!(b, 2.5 * a, max_relative = 1e-12);
}
