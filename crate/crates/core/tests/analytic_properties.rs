use proptest::prelude::*;
use twoatom_core::analytic::{
    coincidence_probability, emission_derivative_direct, emission_derivative_ordered_with,
    entangled_survival, first_emission_cdf_entangled, first_emission_rate, normalization_alpha,
    solve_compatibility, window_prob_exact, window_prob_taylor, Channel, NormalizedWindowModel,
    RatePair, WindowConfig, WindowVariant,
};
use twoatom_core::quadrature::integrate;

fn rates() -> impl Strategy<Value = RatePair> {
    (0.05f64..20.0, 0.05f64..20.0).prop_map(|(a, b)| RatePair::new(a, b).unwrap())
}

/// Rates plus a window where the Taylor density stays non-negative,
/// i.e. `2 tau Ga Gb <= Ga + Gb`.
fn rates_and_tau() -> impl Strategy<Value = (RatePair, f64)> {
    with_window(rates())
}

fn with_window(rates: impl Strategy<Value = RatePair>) -> impl Strategy<Value = (RatePair, f64)> {
    (rates, 0.001f64..0.999).prop_map(|(r, frac)| {
        let tau_max = r.gamma_f() / (2.0 * r.gamma_a() * r.gamma_b());
        (r, frac * tau_max)
    })
}

/// Brute-force sum over bins of P(A in bin k) P(B in bin k), stopped once the
/// remaining mass of the slower atom is below 1e-12.
fn coincidence_by_bins(r: &RatePair, tau: f64) -> f64 {
    let (ga, gb) = (r.gamma_a(), r.gamma_b());
    let mut total = 0.0;
    let mut k = 0u64;
    loop {
        let lo = k as f64 * tau;
        let hi = lo + tau;
        let pa = (-ga * lo).exp() - (-ga * hi).exp();
        let pb = (-gb * lo).exp() - (-gb * hi).exp();
        total += pa * pb;
        if (-ga.min(gb) * hi).exp() < 1e-12 {
            break;
        }
        k += 1;
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ordered_and_direct_forms_agree(r in rates(), t in 0.0f64..10.0) {
        let sol = solve_compatibility(&r).unwrap();
        for which in [Channel::A, Channel::B] {
            let ordered = emission_derivative_ordered_with(t, &r, &sol.channels, which);
            let direct = emission_derivative_direct(t, r.rate(which)).unwrap();
            prop_assert!((ordered - direct).abs() < 1e-12 * r.gamma_f());
        }
    }

    #[test]
    fn survival_plus_first_emissions_is_one(r in rates(), t in 0.0f64..50.0) {
        let s = entangled_survival(t, &r).unwrap() + first_emission_cdf_entangled(t, &r).unwrap();
        prop_assert!((s - 1.0).abs() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn product_density_nonnegative_and_normalized((r, tau) in rates_and_tau()) {
        let m = normalization_alpha(&r, &WindowConfig::grid_bin(tau).unwrap()).unwrap();
        let t_max = 40.0 / r.gamma_a().min(r.gamma_b());
        for k in 0..200 {
            let t = t_max * k as f64 / 199.0;
            prop_assert!(m.pdf(t) >= -1e-15 * r.gamma_f());
        }
        let total = integrate(|t| m.pdf(t), 0.0, t_max, 1e-12).value;
        prop_assert!((total - 1.0).abs() < 1e-6, "{}", total);
    }

    #[test]
    fn product_cdf_monotone_and_matches_density(
        (r, tau) in with_window((0.05f64..5.0, 0.05f64..5.0).prop_map(|(a, b)| RatePair::new(a, b).unwrap())), exact in any::<bool>()) {
        let variant = if exact { WindowVariant::Exact } else { WindowVariant::Taylor };
        let m = NormalizedWindowModel::new(&r, &WindowConfig::grid_bin(tau).unwrap(), variant).unwrap();
        let t_max = 10.0 / r.gamma_a().min(r.gamma_b());
        let h = 1e-5;
        let mut prev = m.cdf(0.0);
        prop_assert!(prev.abs() < 1e-14);
        for k in 1..300 {
            let t = t_max * k as f64 / 300.0;
            let c = m.cdf(t);
            prop_assert!(c >= prev - 1e-15);
            prev = c;
            // the exact variant has a kink at tau/2
            if (t - 0.5 * tau).abs() > 2.0 * h && t > h {
                let fd = (m.cdf(t + h) - m.cdf(t - h)) / (2.0 * h);
                prop_assert!((fd - m.pdf(t)).abs() < 1e-6, "t={} fd={} pdf={}", t, fd, m.pdf(t));
            }
        }
    }

    #[test]
    fn exact_window_is_a_probability(t in 0.0f64..20.0, tau in 0.0f64..50.0, g in 0.01f64..50.0) {
        let p = window_prob_exact(t, tau, g).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn taylor_over_exact_tends_to_one(t in 0.0f64..5.0, g in 0.1f64..5.0) {
        let mut last = f64::INFINITY;
        for tau in [1e-2, 1e-4, 1e-6] {
            // keep the window away from the clipping point at t = tau / 2
            if t < tau { continue; }
            let ratio = window_prob_taylor(t, tau, g).unwrap().value / window_prob_exact(t, tau, g).unwrap();
            let err = (ratio - 1.0).abs();
            prop_assert!(err <= last + 1e-12);
            last = err;
        }
        if t >= 1e-6 {
            prop_assert!(last < 1e-9);
        }
    }

    #[test]
    fn relabeling_invariance((r, tau) in rates_and_tau(), t in 0.0f64..5.0) {
        let s = r.swapped();
        let w = WindowConfig::grid_bin(tau).unwrap();
        prop_assert_eq!(first_emission_rate(&r), first_emission_rate(&s));
        let m = normalization_alpha(&r, &w).unwrap();
        let ms = normalization_alpha(&s, &w).unwrap();
        prop_assert!((m.alpha - ms.alpha).abs() < 1e-15 * m.alpha);
        prop_assert!((m.pdf(t) - ms.pdf(t)).abs() < 1e-13 * r.gamma_f());
        prop_assert!((m.cdf(t) - ms.cdf(t)).abs() < 1e-14);
    }

    #[test]
    fn coincidence_closed_form_matches_bin_series(r in (0.2f64..5.0, 0.2f64..5.0).prop_map(|(a, b)| RatePair::new(a, b).unwrap()), tau in 0.005f64..2.0) {
        let closed = coincidence_probability(&r, &WindowConfig::grid_bin(tau).unwrap());
        let series = coincidence_by_bins(&r, tau);
        prop_assert!((closed - series).abs() < 1e-10, "{} vs {}", closed, series);
    }
}

#[test]
fn bin_series_oracle_at_reference_point() {
    let r = RatePair::new(1.0, 1.5).unwrap();
    let series = coincidence_by_bins(&r, 0.1);
    assert!((series - 0.0599).abs() < 5e-5, "{series}");
}

#[test]
fn normalization_by_quadrature_at_reference_point() {
    let r = RatePair::new(1.0, 1.5).unwrap();
    let tau = 5.0 / 6.0;
    let w = WindowConfig::grid_bin(tau).unwrap();
    let t_max = 40.0;
    let unnormalized = integrate(
        |t| {
            twoatom_core::analytic::product_one_emission_unnormalized(t, &r, &w, WindowVariant::Taylor).unwrap() / tau
        },
        0.0,
        t_max,
        1e-13,
    )
    .value;
    let alpha = normalization_alpha(&r, &w).unwrap().alpha;
    assert!((unnormalized * alpha - 1.0).abs() < 1e-6);
}
