use glap::source::{
    check_eti1, check_growth, check_limit_profile, check_ps, Eti1Grid, LimitGrid, Profile, SampleGrid, ScalarLaw,
    SourceTerm,
};
use glap::young::YoungFunction;
use proptest::prelude::*;

fn power(exponent: f64) -> ScalarLaw {
    ScalarLaw::Power { exponent }
}

/// Sums `A b f + B f0 + C h` with `f` a power, `f0` of lower order and `h`
/// below the critical gradient growth. `K` is the coefficient sum plus one.
fn composites() -> Vec<(&'static str, SourceTerm, YoungFunction)> {
    vec![
        (
            "cubic plus square",
            SourceTerm::lane_emden(4.0).with_f0(1.0, power(2.0)).with_k(3.0),
            YoungFunction::power(2.0).unwrap(),
        ),
        (
            "weighted cubic with gradient term",
            SourceTerm::lane_emden(4.0)
                .with_profile(Profile::ONE_PLUS_X1)
                .with_f0(0.5, power(2.0))
                .with_h(0.25, power(1.2))
                .with_k(4.0),
            YoungFunction::power(2.0).unwrap(),
        ),
        (
            "quartic over a 3-growth operator",
            SourceTerm::composite(2.0, power(4.0))
                .with_f0(1.0, power(1.0))
                .with_h(1.0, power(1.5))
                .with_k(5.0),
            YoungFunction::power(3.0).unwrap(),
        ),
    ]
}

#[test]
fn composite_sources_satisfy_growth_and_limit() {
    for (name, st, yf) in composites() {
        let eti = check_eti1(&st, &yf, 1.0, &Eti1Grid::default());
        assert!(eti.passed, "{name}: {eti:?}");
        let g = check_growth(&st, &yf, &SampleGrid::default());
        assert!(g.passed, "{name}: {g:?}");
        let l = check_limit_profile(&st, &yf, &LimitGrid::default());
        assert!(l.report.passed, "{name}: {:?}", l.report);
        assert!((l.q_hat - st.q).abs() <= 1e-2, "{name}: q_hat = {}", l.q_hat);
    }
}

#[test]
fn limit_exponent_matches_declared_q() {
    let yf = YoungFunction::power(2.0).unwrap();
    for q in [2.5, 3.0, 4.0, 5.5] {
        let l = check_limit_profile(&SourceTerm::lane_emden(q), &yf, &LimitGrid::default());
        assert!((l.q_hat - q).abs() <= 1e-2, "q = {q}: {}", l.q_hat);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn positivity_is_monotone_in_l(coef in 0.1f64..3.0, l in 0.0f64..4.0, extra in 0.0f64..4.0) {
        let yf = YoungFunction::power(2.0).unwrap();
        let st = SourceTerm::lane_emden(4.0).with_f0(-coef, power(2.0));
        let x = [[0.5, 0.0]];
        let here = check_ps(&st.clone().with_l(l), &yf, &x, 12, 1e-3);
        if here.positivity.passed {
            let there = check_ps(&st.with_l(l + extra), &yf, &x, 12, 1e-3);
            prop_assert!(there.positivity.passed, "L = {l} passes, L = {} does not", l + extra);
        }
    }
}
