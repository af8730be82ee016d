use expectile_lasso::adaptive::{fit_adaptive, AdaptiveConfig, AdaptiveFit};
use expectile_lasso::expectile::ErrorLaw;
use expectile_lasso::simgen::{generate_dataset, DimensionRule, SimSpec};
use expectile_lasso::solvers::SolverConfig;
use expectile_lasso::FitResult;
use proptest::prelude::*;

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn adaptive_fit_survives_json() {
    let spec = SimSpec::new(60, DimensionRule::Fixed(80), ErrorLaw::shifted_exp());
    let (data, _, tau) = generate_dataset(&spec, 0).unwrap();
    let mut fit = fit_adaptive(
        &data,
        tau,
        &AdaptiveConfig::default(),
        &SolverConfig::default(),
    )
    .unwrap();
    // High-dimensional weights are capped; pin one coordinate to exercise
    // the encoding of +inf.
    assert!(fit.weights.iter().all(|w| w.is_finite()));
    fit.weights[3] = f64::INFINITY;
    let text = serde_json::to_string(&fit).unwrap();
    let back: AdaptiveFit = serde_json::from_str(&text).unwrap();
    assert_eq!(bits(&back.weights), bits(&fit.weights));
    assert_eq!(bits(&back.final_fit.beta), bits(&fit.final_fit.beta));
    assert_eq!(back, fit);
}

proptest! {
    #[test]
    fn fit_result_numbers_are_exact(
        beta in prop::collection::vec(prop_oneof![Just(0.0), -1e300f64..1e300, -1e-300f64..1e-300], 1..20),
        objective in 0.0f64..1e12,
        kkt in 0.0f64..1.0,
        iterations in 0usize..100_000,
    ) {
        let fit = FitResult::new(beta, objective, kkt, iterations, true, vec![objective, objective / 3.0]);
        let text = serde_json::to_string(&fit).unwrap();
        let back: FitResult = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(bits(&back.beta), bits(&fit.beta));
        prop_assert_eq!(back.objective.to_bits(), fit.objective.to_bits());
        prop_assert_eq!(back.kkt_residual.to_bits(), fit.kkt_residual.to_bits());
        prop_assert_eq!(bits(&back.objective_trace), bits(&fit.objective_trace));
        prop_assert_eq!(back, fit);
    }
}
