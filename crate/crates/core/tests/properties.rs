use isolab::harmonics::HarmonicCoefficients;
use isolab::measures::{
    ball_perimeter, ball_volume, ellipsoid_measures, perimeter_nearly_spherical, volume_nearly_spherical,
};
use isolab::negpower::{counterexample_demo, negpower_deficit};
use isolab::penalized::{coordinate_derivatives, evaluate_j, PenalizedFunctional};
use isolab::quadrature::{build_sphere_rule, SphereRule};
use isolab::shapes::{build_counterexample, CounterexampleParams, Ellipsoid, NearlySphericalSet};
use isolab::stability::{
    fuglede_report, random_direction, scale_to_w1inf, taylor_coefficients, volume_matched_perturbation,
};
use isolab::weights::{eval_weight, ConvexProfile, RadialWeight};
use proptest::prelude::*;
use std::sync::OnceLock;

fn rule(n: usize) -> &'static SphereRule {
    static R2: OnceLock<SphereRule> = OnceLock::new();
    static R3: OnceLock<SphereRule> = OnceLock::new();
    match n {
        2 => R2.get_or_init(|| build_sphere_rule(2, 128).unwrap()),
        _ => R3.get_or_init(|| build_sphere_rule(3, 32).unwrap()),
    }
}

fn smooth_profile(i: usize) -> ConvexProfile {
    [ConvexProfile::Quadratic, ConvexProfile::CoshMinusOne][i % 2].clone()
}

fn any_profile(i: usize) -> ConvexProfile {
    match i % 4 {
        0 => ConvexProfile::Zero,
        1 => ConvexProfile::Quadratic,
        2 => ConvexProfile::CoshMinusOne,
        _ => ConvexProfile::flat_shoulder(1.0).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exp_convex_weight_is_smallest_at_zero(i in 0usize..4, t in -3.0f64..3.0) {
        let w = RadialWeight::exp_convex(any_profile(i));
        prop_assert!(eval_weight(&w, t.abs().max(1e-300)).unwrap() >= eval_weight(&w, 1e-300).unwrap());
    }

    #[test]
    fn second_difference_matches_second_derivative(i in 0usize..2, t in -3.0f64..3.0) {
        let w = smooth_profile(i);
        let h = 1e-4;
        let fd = (w.w(t + h) - 2.0 * w.w(t) + w.w(t - h)) / (h * h);
        prop_assert!((fd - w.d2w(t)).abs() <= 1e-5 * w.d2w(t).abs());
    }

    #[test]
    fn power_weight_decreases(p in -10.0f64..-0.1, a in 0.01f64..10.0, f in 1.001f64..3.0) {
        let w = RadialWeight::power(p);
        prop_assert!(eval_weight(&w, a * f).unwrap() < eval_weight(&w, a).unwrap());
    }

    #[test]
    fn rule_weights_are_positive(n in 2usize..4, res in 4usize..40) {
        let r = build_sphere_rule(n, res).unwrap();
        prop_assert!(r.weights.iter().all(|w| *w > 0.0));
    }

    #[test]
    fn circle_rule_is_exact_on_trig_polynomials(res in 8usize..64, k in 0usize..32, c in -1.0f64..1.0) {
        prop_assume!(2 * k < res);
        let r = build_sphere_rule(2, res).unwrap();
        let v = r.integrate(|x| {
            let th = x[1].atan2(x[0]);
            c + (k as f64 * th).cos() + (k as f64 * th).sin()
        }).unwrap();
        let exact = 2.0 * std::f64::consts::PI * (c + if k == 0 { 1.0 } else { 0.0 });
        prop_assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn doubling_resolution_stays_within_error_estimate(n in 2usize..4, a in -1.0f64..1.0, b in 0.1f64..2.0) {
        let base = if n == 2 { 16 } else { 8 };
        let f = |x: &[f64; 3]| (a * x[0] + b * x[1] * x[1]).exp();
        let (v, err) = build_sphere_rule(n, base).unwrap().integrate_with_error(f).unwrap();
        let finer = build_sphere_rule(n, 2 * base).unwrap().integrate(f).unwrap();
        prop_assert!((finer - v).abs() <= err + 1e-14 * v.abs());
    }

    #[test]
    fn unperturbed_set_is_the_ball(i in 0usize..4, n in 2usize..4, r in 0.3f64..2.0) {
        let w = RadialWeight::exp_convex(any_profile(i));
        let set = NearlySphericalSet::ball(n, r, 4).unwrap();
        let p = perimeter_nearly_spherical(&w, &set, rule(n)).unwrap().value;
        let v = volume_nearly_spherical(&w, &set, rule(n), false).unwrap().value;
        let pb = ball_perimeter(&w, r, n).unwrap().value;
        let vb = ball_volume(&w, r, n, false).unwrap().value;
        prop_assert!((p - pb).abs() <= 1e-12 * pb);
        prop_assert!((v - vb).abs() <= 1e-12 * vb);
    }

    #[test]
    fn round_ellipsoid_is_the_ball(i in 0usize..4, n in 2usize..4, r in 0.3f64..2.0) {
        let w = RadialWeight::exp_convex(any_profile(i));
        let (p, v) = ellipsoid_measures(&w, &Ellipsoid::new(vec![r; n]).unwrap(), rule(n), false).unwrap();
        let pb = ball_perimeter(&w, r, n).unwrap().value;
        let vb = ball_volume(&w, r, n, false).unwrap().value;
        prop_assert!((p.value - pb).abs() <= 1e-12 * pb);
        prop_assert!((v.value - vb).abs() <= 1e-12 * vb);
    }

    #[test]
    fn ball_volume_increases(i in 0usize..4, n in 2usize..4, r in 0.05f64..3.0, f in 1.001f64..2.0) {
        let w = RadialWeight::exp_convex(any_profile(i));
        prop_assert!(ball_volume(&w, r * f, n, false).unwrap().value > ball_volume(&w, r, n, false).unwrap().value);
    }

    #[test]
    fn taylor_identities(i in 0usize..4, n in 2usize..4, r in 0.5f64..2.0) {
        let t = taylor_coefficients(&any_profile(i), r, n).unwrap();
        prop_assert!(t.residual_first <= 1e-8 && t.residual_second <= 1e-8);
    }

    #[test]
    fn counterexample_is_deterministic(seed in 0u64..1000, count in 1usize..60) {
        let mut p = CounterexampleParams::new(2, -4.0, 8.0, 1e-3);
        p.seed = seed;
        p.count = count;
        let a = build_counterexample(p).unwrap();
        let b = build_counterexample(p).unwrap();
        prop_assert_eq!(a.selection, b.selection);
        prop_assert_eq!(a.balls, b.balls);
    }

    #[test]
    fn union_boundary_avoids_origin(seed in 0u64..1000, k in 0usize..64) {
        let mut p = CounterexampleParams::new(2, -4.0, 8.0, 1e-3);
        p.seed = seed;
        p.count = 50;
        let u = build_counterexample(p).unwrap();
        let t = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
        for b in &u.balls {
            let x = [b.center[0] + b.radius * t.cos(), b.center[1] + b.radius * t.sin()];
            prop_assert!(x[0].hypot(x[1]) >= b.radius.powf(1.0 / 8.0));
        }
    }

    #[test]
    fn counterexample_verdict_is_monotone(p in -10.0f64..-3.01, extra in 0.01f64..4.0, r in 1e-4f64..1.0, f in 0.01f64..1.0) {
        let alpha = (-p).max(1.0) + extra;
        if counterexample_demo(2, p, alpha, r, 50, 0).unwrap().inequality_fails {
            prop_assert!(counterexample_demo(2, p, alpha, r * f, 50, 0).unwrap().inequality_fails);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn weighted_balls_beat_perturbations(i in 0usize..2, n in 2usize..4, seed in 0u64..10_000, amp in 1e-3f64..5e-2) {
        let w = RadialWeight::exp_convex(smooth_profile(i));
        let dir = scale_to_w1inf(&random_direction(n, 5, seed).unwrap(), 1.0, rule(n)).unwrap();
        let set = volume_matched_perturbation(&w, 1.0, &dir, amp, rule(n), false).unwrap();
        let rep = fuglede_report(&w, 1.0, n, &set, rule(n), false).unwrap();
        prop_assert!(rep.deficit > 0.0, "margin {}", rep.deficit);
    }

    #[test]
    fn power_deficit_is_nonnegative(seed in 0u64..10_000, amp in 1e-3f64..2e-2) {
        let w = RadialWeight::power(-4.0);
        let dir = scale_to_w1inf(&random_direction(2, 6, seed).unwrap(), 1.0, rule(2)).unwrap();
        let set = volume_matched_perturbation(&w, 1.0, &dir, amp, rule(2), true).unwrap();
        prop_assert!(negpower_deficit(-4.0, &set, rule(2)).unwrap().stability.deficit >= 0.0);
    }

    #[test]
    fn penalized_ball_beats_sampled_sets(seed in 0u64..10_000, c0 in -0.5f64..0.5, amp in 1e-3f64..0.2) {
        let f = PenalizedFunctional::at_thresholds(ConvexProfile::Quadratic, 1.0, 2, 0.0).unwrap();
        let mut u = random_direction(2, 6, seed).unwrap();
        u.set(0, 1, c0).unwrap();
        let u = scale_to_w1inf(&u, amp, rule(2)).unwrap();
        let set = NearlySphericalSet::new(1.0, u).unwrap();
        prop_assume!(set.sample(rule(2)).unwrap().sup_abs() <= 0.2);
        let jb = evaluate_j(&f, &NearlySphericalSet::ball(2, 1.0, 6).unwrap(), rule(2)).unwrap();
        prop_assert!(evaluate_j(&f, &set, rule(2)).unwrap() >= jb);
    }

    #[test]
    fn centered_balls_follow_the_radial_formula(rho in 0.5f64..1.85, i in 0usize..2) {
        let f = PenalizedFunctional::at_thresholds(smooth_profile(i), 1.0, 2, 0.0).unwrap();
        let y0 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        let u = HarmonicCoefficients::single(2, 2, 0, 1, (rho - 1.0) / y0).unwrap();
        let j = evaluate_j(&f, &NearlySphericalSet::new(1.0, u).unwrap(), rule(2)).unwrap();
        let oracle = f.radial_reduction(rho).unwrap();
        prop_assert!((j - oracle).abs() <= 1e-10 * oracle);
    }
}

#[test]
fn ball_is_first_order_minimal_for_the_penalized_functional() {
    for n in [2, 3] {
        for w in [ConvexProfile::Quadratic, ConvexProfile::CoshMinusOne] {
            let f = PenalizedFunctional::at_thresholds(w, 1.0, n, 0.0).unwrap();
            let zero = HarmonicCoefficients::zeros(n, 4).unwrap();
            let d = coordinate_derivatives(&f, &zero, rule(n), 1e-5).unwrap();
            assert!(d.iter().all(|x| *x >= -1e-6), "n={n}: {d:?}");
        }
    }
}
