use num_complex::Complex64;
use proptest::prelude::*;
use pshlab::expr::{parse_expression, PotentialField};
use pshlab::flow::{integrate_flow, FlowConfig};
use pshlab::moment::{moment_map, solve_ray, MomentMapField, QuotientPoint};
use pshlab::par::{map_range_with, Exec};
use pshlab::symmetry::{haar_average, invariance_residual, GroupAction, QuadratureRule};
use std::sync::LazyLock;

static ROUND: LazyLock<MomentMapField> = LazyLock::new(|| {
    MomentMapField::new(
        PotentialField::validated("z1*cj(z1) + z2*cj(z2)", 2).unwrap(),
        1,
    )
    .unwrap()
});

static QUARTIC: LazyLock<MomentMapField> = LazyLock::new(|| {
    let f =
        PotentialField::validated("z1*cj(z1) + z2*cj(z2) + 0.1*z1*cj(z1)*z2*cj(z2)", 2).unwrap();
    MomentMapField::new(f, 1).unwrap()
});

/// `(coefficient, [a, b, c, d])` for `coef · z1^a cj(z1)^b z2^c cj(z2)^d`.
type Term = (f64, [u32; 4]);

fn term() -> impl Strategy<Value = Term> {
    (-2.0..2.0f64, [0u32..3, 0u32..3, 0u32..3, 0u32..3])
}

fn render(terms: &[Term]) -> String {
    terms
        .iter()
        .map(|(k, e)| {
            format!(
                "({k})*z1^{}*cj(z1)^{}*z2^{}*cj(z2)^{}",
                e[0], e[1], e[2], e[3]
            )
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

/// Real field `Σ k (m + conj m)` from a list of monomials.
fn realify(terms: &[Term]) -> String {
    let swapped: Vec<Term> = terms
        .iter()
        .map(|(k, e)| (*k, [e[1], e[0], e[3], e[2]]))
        .collect();
    format!("{} + {}", render(terms), render(&swapped))
}

fn direct(terms: &[Term], p: &[Complex64]) -> Complex64 {
    terms
        .iter()
        .map(|(k, e)| {
            *k * p[0].powu(e[0]) * p[0].conj().powu(e[1]) * p[1].powu(e[2]) * p[1].conj().powu(e[3])
        })
        .sum()
}

fn point() -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(
        (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Complex64::new(a, b)),
        2,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_form_reparses_to_the_same_tree(terms in prop::collection::vec(term(), 1..5)) {
        let e = parse_expression(&render(&terms), 2).unwrap();
        let again = parse_expression(&e.to_string(), 2).unwrap();
        prop_assert_eq!(again.to_string(), e.to_string());
    }

    #[test]
    fn parsed_polynomial_matches_direct_evaluation(
        terms in prop::collection::vec(term(), 1..5),
        p in point(),
    ) {
        let f = PotentialField::parse(&render(&terms), 2).unwrap();
        let got = f.value_complex(&p).unwrap();
        let want = direct(&terms, &p);
        prop_assert!((got - want).norm() <= 1e-12 * (1.0 + want.norm()), "{got} vs {want}");
    }

    #[test]
    fn symbolic_dbar_matches_central_differences(
        terms in prop::collection::vec(term(), 1..4),
        p in point(),
    ) {
        let f = PotentialField::validated(&realify(&terms), 2).unwrap();
        let dbar = f.dbar(&p).unwrap();
        let h = 1e-6;
        for j in 0..2 {
            let shift = |v: Complex64| {
                let mut q = p.clone();
                q[j] += v;
                f.value(&q).unwrap()
            };
            let dx = (shift(Complex64::new(h, 0.0)) - shift(Complex64::new(-h, 0.0))) / (2.0 * h);
            let dy = (shift(Complex64::new(0.0, h)) - shift(Complex64::new(0.0, -h))) / (2.0 * h);
            // ∂̄ = ½(∂x + i∂y)
            let fd = 0.5 * Complex64::new(dx, dy);
            prop_assert!((dbar[j] - fd).norm() < 1e-6 * (1.0 + fd.norm()), "{:?} vs {fd}", dbar[j]);
        }
    }

    #[test]
    fn quotient_point_is_scale_invariant(
        a in (-2.0..2.0f64, -2.0..2.0f64),
        b in (-2.0..2.0f64, -2.0..2.0f64),
        s in (0.1..10.0f64, 0.0..std::f64::consts::TAU),
    ) {
        let (a, b) = (Complex64::new(a.0, a.1), Complex64::new(b.0, b.1));
        prop_assume!(a.norm() + b.norm() > 1e-3);
        let lambda = Complex64::from_polar(s.0, s.1);
        let q = QuotientPoint::new(a, b).unwrap();
        let r = QuotientPoint::new(lambda * a, lambda * b).unwrap();
        prop_assert!(q.distance(&r) < 1e-12);
        let (x, y) = q.coords();
        prop_assert!(QuotientPoint::new(x, y).unwrap().distance(&q) < 1e-12);
        prop_assert!(QuotientPoint::from_sphere(q.to_sphere()).unwrap().distance(&q) < 1e-12);
    }

    #[test]
    fn moment_map_is_phase_invariant(p in point(), theta in 0.0..std::f64::consts::TAU) {
        let rot: Vec<Complex64> = p.iter().map(|z| z * Complex64::from_polar(1.0, theta)).collect();
        for m in [&*ROUND, &*QUARTIC] {
            let a = moment_map(m, &p).unwrap();
            let b = moment_map(m, &rot).unwrap();
            prop_assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
        }
        // round field: ∇φ = 2z, so μ = |z|²
        let norm: f64 = p.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((moment_map(&ROUND, &p).unwrap() - norm).abs() < 1e-12);
    }

    #[test]
    fn ray_root_lands_on_the_level(p in point(), b in 0.1..3.0f64) {
        let n = p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(n > 1e-3);
        let dir: Vec<Complex64> = p.iter().map(|z| z / n).collect();
        let (r, flagged) = solve_ray(&ROUND, &dir, b).unwrap();
        prop_assert!(!flagged);
        prop_assert!((r - b.sqrt()).abs() < 1e-12);
        let (r, _) = solve_ray(&QUARTIC, &dir, b).unwrap();
        let x: Vec<Complex64> = dir.iter().map(|z| z * r).collect();
        prop_assert!((moment_map(&QUARTIC, &x).unwrap() - b).abs() < 1e-10);
    }

    #[test]
    fn circle_average_is_invariant(terms in prop::collection::vec(term(), 1..4)) {
        let f = PotentialField::validated(&realify(&terms), 2).unwrap();
        let circle = GroupAction::circle(vec![1, 2]).unwrap();
        let q = QuadratureRule::circle(&circle, 16).unwrap();
        let avg = haar_average(&f, &circle, &q).unwrap().field;
        prop_assert!(invariance_residual(&avg, &circle, &q, 20, 3).unwrap().residual < 1e-10);
    }

    #[test]
    fn quadratic_flow_travels_straight_to_the_origin(x in 0.2..5.0f64) {
        let f = PotentialField::validated("z1*cj(z1)", 1).unwrap();
        let t = integrate_flow(&f, &[Complex64::new(x, 0.0)], &FlowConfig::default()).unwrap();
        prop_assert!((t.arc_length - x).abs() < 1e-4 * x.max(1.0));
        prop_assert!(t.monotonicity_violations().is_empty());
    }

    #[test]
    fn parallel_map_matches_sequential(n in 0usize..200, k in 1u64..1000) {
        let f = |i: usize| (i as u64).wrapping_mul(k).rotate_left(7);
        prop_assert_eq!(map_range_with(Exec::Sequential, n, f), map_range_with(Exec::default(), n, f));
    }
}
