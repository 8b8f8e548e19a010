use gridiron_core::features::FeatureCase;
use gridiron_core::svr::{
    kkt_max_violation, linear_objective, svr_fit, svr_predict, svr_reference_fit, KernelSpec, SolverOptions,
    SvrConfig, SvrHyper,
};
use proptest::prelude::*;

fn cases(rows: &[(Vec<f64>, f64)]) -> Vec<FeatureCase> {
    rows.iter()
        .enumerate()
        .map(|(i, (x, y))| FeatureCase {
            player_id: format!("p{i}"),
            season: 2010,
            week: 1,
            features: x.clone(),
            label: *y,
        })
        .collect()
}

fn rows(n: std::ops::Range<usize>, d: usize) -> impl Strategy<Value = Vec<(Vec<f64>, f64)>> {
    proptest::collection::vec((proptest::collection::vec(0.0f64..1.0, d), -3.0f64..3.0), n)
}

fn kernel() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        Just(KernelSpec::linear()),
        (0.0f64..2.0).prop_map(KernelSpec::rbf),
        ((0.1f64..1.0), 2u32..4).prop_map(|(g, d)| KernelSpec::polynomial(g, d)),
        (0.05f64..0.5).prop_map(KernelSpec::sigmoid),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dual_is_feasible_and_kkt_holds(
        data in rows(3..14, 2),
        kernel in kernel(),
        c in 0.05f64..=1.0,
        epsilon in 0.0f64..0.3,
    ) {
        let train = cases(&data);
        let config = SvrConfig { hyper: SvrHyper { c, epsilon }, kernel };
        let model = svr_fit(&train, &config, &SolverOptions { tol: 1e-3, max_iter: Some(1_000_000) }).unwrap();
        prop_assert!(model.converged);
        let sum: f64 = model.dual_coef.iter().sum();
        prop_assert!(sum.abs() <= 1e-12, "sum of dual coefficients {}", sum);
        prop_assert!(model.dual_coef.iter().all(|b| b.abs() <= model.c_eff * (1.0 + 1e-12)));
        prop_assert!(kkt_max_violation(&model, &train).unwrap() <= 1e-3);
    }

    #[test]
    fn shifting_labels_shifts_predictions(
        data in rows(3..12, 2),
        kernel in kernel(),
        k in -20.0f64..20.0,
    ) {
        let train = cases(&data);
        let shifted: Vec<FeatureCase> = train.iter().map(|c| FeatureCase { label: c.label + k, ..c.clone() }).collect();
        let config = SvrConfig { hyper: SvrHyper { c: 1.0, epsilon: 0.05 }, kernel };
        let opts = SolverOptions { tol: 1e-3, max_iter: Some(1_000_000) };
        let a = svr_fit(&train, &config, &opts).unwrap();
        let b = svr_fit(&shifted, &config, &opts).unwrap();
        for c in &train {
            let pa = svr_predict(&a, &c.features).unwrap();
            let pb = svr_predict(&b, &c.features).unwrap();
            prop_assert!((pb - pa - k).abs() <= 1e-6, "{} vs {} + {}", pb, pa, k);
        }
    }

    #[test]
    fn smo_objective_is_no_worse_than_the_oracle(
        data in rows(2..7, 2),
        c in 0.25f64..=1.0,
        epsilon in 0.0f64..0.25,
    ) {
        let train = cases(&data);
        let hyper = SvrHyper { c, epsilon };
        let config = SvrConfig { hyper, kernel: KernelSpec::linear() };
        let model = svr_fit(&train, &config, &SolverOptions { tol: 1e-6, max_iter: Some(1_000_000) }).unwrap();
        let w = model.weights.clone().unwrap();
        let reference = svr_reference_fit(&train, &hyper, &KernelSpec::linear(), 1e-6).unwrap();
        prop_assert!(linear_objective(&train, &w, model.bias, &hyper) <= reference.objective + 1e-2);
    }
}
