//! Property-based checks of the structural invariants.

use proptest::prelude::*;

use revax_core::density::hellinger_from_samples;
use revax_core::model::{
    rhs_model1, rhs_model2, ModelTag, ParameterSet, RateSchedule, StateVector,
};

fn arb_schedule(max_segments: usize) -> impl Strategy<Value = RateSchedule> {
    (1..=max_segments)
        .prop_flat_map(|segments| {
            (
                proptest::collection::vec(0.1f64..500.0, segments - 1),
                proptest::collection::vec(1e-6f64..2.0, segments),
            )
        })
        .prop_map(|(mut raw_breaks, rates)| {
            raw_breaks.sort_by(|a, b| a.total_cmp(b));
            raw_breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
            let rates = rates[..raw_breaks.len() + 1].to_vec();
            RateSchedule::new(raw_breaks, rates).unwrap()
        })
}

prop_compose! {
    fn arb_params()(
        alpha in arb_schedule(10),
        gamma1 in arb_schedule(4),
        phi in arb_schedule(4),
        beta in 1e-6f64..1.0,
        gamma2 in 1e-6f64..1.0,
        mu in 0.0f64..0.2,
        kappa in 1e-3f64..1.0,
        eta in 0.0f64..0.1,
        zeta1 in 0.0f64..0.5,
        zeta2 in 0.0f64..0.5,
    ) -> ParameterSet {
        ParameterSet { alpha, beta, gamma1, gamma2, phi, mu, kappa, eta, zeta1, zeta2 }
    }
}

fn arb_state(model: ModelTag) -> impl Strategy<Value = StateVector> {
    proptest::collection::vec(0.0f64..1e6, model.n_compartments())
        .prop_map(move |values| StateVector::new(model, values).unwrap())
}

proptest! {
    #[test]
    fn model1_derivatives_conserve_population(
        state in arb_state(ModelTag::M1),
        params in arb_params(),
        t in 0.0f64..600.0,
    ) {
        let d = rhs_model1(&state, &params, t).unwrap();
        let scale: f64 = d.values().iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        let total: f64 = d.values().iter().sum();
        prop_assert!(total.abs() / scale < 1e-12);
    }

    #[test]
    fn model2_derivatives_conserve_population(
        state in arb_state(ModelTag::M2),
        params in arb_params(),
        t in 0.0f64..600.0,
    ) {
        let d = rhs_model2(&state, &params, t).unwrap();
        let scale: f64 = d.values().iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        let total: f64 = d.values().iter().sum();
        prop_assert!(total.abs() / scale < 1e-12);
    }

    #[test]
    fn rate_lookup_is_piecewise_constant(
        schedule in arb_schedule(6),
        t in 0.0f64..600.0,
        jitter in 0.0f64..1.0,
    ) {
        // two times in the same inter-breakpoint interval agree
        let bps = schedule.breakpoints();
        let next = bps.iter().copied().find(|b| *b > t).unwrap_or(f64::INFINITY);
        let u = if next.is_finite() { t + (next - t) * jitter * 0.999 } else { t + jitter };
        prop_assert_eq!(schedule.rate_at(t), schedule.rate_at(u));
    }

    #[test]
    fn hellinger_is_symmetric_and_bounded(
        mut a in proptest::collection::vec(-50.0f64..50.0, 10..60),
        mut b in proptest::collection::vec(-50.0f64..50.0, 10..60),
        spread_a in 0.1f64..10.0,
        spread_b in 0.1f64..10.0,
    ) {
        // guarantee nonzero spread so the bandwidth rule is defined
        a[0] -= spread_a;
        a[1] += spread_a;
        b[0] -= spread_b;
        b[1] += spread_b;
        let fwd = hellinger_from_samples(&a, &b, 256).unwrap();
        let bwd = hellinger_from_samples(&b, &a, 256).unwrap();
        prop_assert!((0.0..=1.0).contains(&fwd));
        prop_assert_eq!(fwd.to_bits(), bwd.to_bits());
    }

    #[test]
    fn flows_are_nonnegative_decompositions(
        state in arb_state(ModelTag::M1),
        params in arb_params(),
    ) {
        // no derivative can be more negative than the total outflow of its
        // compartment allows: dX >= -(sum of per-capita outflow rates) * X
        let d = rhs_model1(&state, &params, 0.0).unwrap();
        let r = params.at(0.0);
        let y = state.values();
        let a = r.alpha * 1e-4;
        let out = [
            a * y[1] + r.mu,                     // S1
            r.beta + r.gamma1 + r.mu,            // E
            r.gamma1 + r.eta,                    // I
            r.mu,                                // RE
            r.zeta1,                             // RI
            0.0,                                 // D
            r.phi * a * y[1],                    // S2
            r.gamma2,                            // II
            0.0,                                 // RR
            r.zeta2 * (1.0 - r.kappa),           // V
        ];
        for i in 0..10 {
            prop_assert!(d.values()[i] >= -out[i] * y[i] - 1e-9 * y[i].max(1.0));
        }
    }
}
