use finsler_lab::expr::{parse, Expr};
use finsler_lab::field::Field;
use finsler_lab::forms::VectorField;
use finsler_lab::point::PhasePoint;
use finsler_lab::presets;
use finsler_lab::spray::{commutator, SpraySpec};
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![(0..2usize).prop_map(Expr::x), (0..2usize).prop_map(Expr::y), (-3.0..3.0f64).prop_map(Expr::constant),]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a / (b.cos() + 2.0)),
            inner.clone().prop_map(|a| a.sin()),
            inner.clone().prop_map(|a| (a.powf(2.0) + 1.0).sqrt()),
            inner.prop_map(|a| a.powf(3.0)),
        ]
    })
}

fn phase_point(dim: usize, half_width: f64) -> impl Strategy<Value = PhasePoint> {
    (prop::collection::vec(-half_width..half_width, dim), prop::collection::vec(-2.0..2.0f64, dim))
        .prop_filter_map("slit", |(x, y)| PhasePoint::new(x, y).ok().filter(|p| p.fibre_norm() > 0.1))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_expressions_reparse_to_the_same_function(e in expr(), p in phase_point(2, 1.0)) {
        let back = parse(&e.to_string(), 2).unwrap();
        let (a, b) = (e.eval(&p.x, &p.y).unwrap(), back.eval(&p.x, &p.y).unwrap());
        prop_assert!(close(a, b, 1e-12), "{e}: {a} vs {b}");
    }

    #[test]
    fn derivatives_are_linear(a in expr(), b in expr(), c in -2.0..2.0f64, p in phase_point(2, 1.0)) {
        let v = finsler_lab::expr::Var::y(0);
        let lhs = (&a + b.scale(c)).diff(v).eval(&p.x, &p.y).unwrap();
        let rhs = a.diff(v).eval(&p.x, &p.y).unwrap() + c * b.diff(v).eval(&p.x, &p.y).unwrap();
        prop_assert!(close(lhs, rhs, 1e-10));
    }

    #[test]
    fn presets_are_positively_homogeneous(k in 0..presets::NAMES.len(), p in phase_point(3, 0.25), lambda in 0.1..10.0f64) {
        let m = presets::by_name(presets::NAMES[k], 3).unwrap();
        let f = m.finsler();
        let a = f.eval(&p.x, &p.y).unwrap();
        let b = f.eval(&p.x, &p.scaled(lambda).y).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!(close(b, lambda * a, 1e-12));
    }

    #[test]
    fn geodesic_sprays_satisfy_c_g_bracket(k in 0..presets::NAMES.len(), p in phase_point(2, 0.25)) {
        let m = presets::by_name(presets::NAMES[k], 2).unwrap();
        let s = m.geodesic_spray();
        let cg = commutator(&VectorField::liouville(2), &s.geodesic_field(), &p).unwrap();
        let g = s.geodesic_field().eval(&p).unwrap();
        for (a, b) in cg.iter().zip(&g) {
            prop_assert!(close(*a, *b, 1e-9));
        }
    }

    #[test]
    fn deformation_by_p_then_minus_p_is_identity(p in phase_point(2, 0.3), c in -1.0..1.0f64) {
        let base = presets::funk(2).geodesic_spray();
        let factor = presets::funk_finsler(2).scale(c);
        let back = base.deform_unchecked(&factor).deform_unchecked(&factor.scale(-1.0));
        let a = Field::new(base.coeffs().to_vec()).eval(&p).unwrap();
        let b = Field::new(back.coeffs().to_vec()).eval(&p).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!(close(*u, *v, 1e-12));
        }
        prop_assert!(SpraySpec::flat(2).is_flat());
    }
}
