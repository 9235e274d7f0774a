use macbig::nn::gradcheck::{layer_suite, GradCheckConfig, SuiteOptions};

#[test]
fn every_layer_matches_finite_differences_on_three_seeds() {
    let cfg = GradCheckConfig::default();
    for seed in [0, 1, 2] {
        let results = layer_suite(seed, &cfg, &SuiteOptions::default());
        assert_eq!(results.len(), 9);
        for check in results {
            assert!(
                check.report.passed,
                "seed {seed} {}: {:?}",
                check.layer, check.report
            );
            assert!(check.report.max_rel_error < 1e-3);
        }
    }
}

#[test]
fn quick_suite_is_a_subset() {
    let results = layer_suite(
        5,
        &GradCheckConfig::default(),
        &SuiteOptions {
            quick: true,
            fault: None,
        },
    );
    let names: Vec<_> = results.iter().map(|c| c.layer.as_str()).collect();
    assert_eq!(
        names,
        [
            "conv1d_relu",
            "attention",
            "dense_relu",
            "maxpool_concat",
            "softmax"
        ]
    );
    assert!(results.iter().all(|c| c.report.passed));
}

#[test]
fn a_five_percent_gradient_error_is_caught_in_every_layer() {
    let cfg = GradCheckConfig::default();
    let layers = [
        "conv1d_relu",
        "attention",
        "dense_relu",
        "dense_linear",
        "dense_softmax",
        "bigru",
        "maxpool_concat",
        "softmax",
        "dropout",
    ];
    for layer in layers {
        let opts = SuiteOptions {
            quick: false,
            fault: Some(layer.to_string()),
        };
        for check in layer_suite(0, &cfg, &opts) {
            assert_eq!(
                check.report.passed,
                check.layer != layer,
                "{}: {:?}",
                check.layer,
                check.report
            );
        }
    }
}
