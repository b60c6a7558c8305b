use epi_harness::config::{round_fractions, InitSpec};
use epi_harness::{parse_config_str, HarnessError, Mode};
use metapop::model::{Variant, E, I, R, S};
use proptest::prelude::*;

const SIR: &str = r#"
[model]
L = 1
lambda = [2.0]
variant = "SIR"

[laws]
F = { family = "exponential", rate = 1.0 }

[init]
fractions = [[0.99, 0.0, 0.01, 0.0]]

[run]
mode = "fluid"
dt = 0.01
T = 20.0
"#;

fn two_patch(mode: &str, gamma: f64) -> String {
    format!(
        r#"
[model]
L = 2
lambda = [1.0, 1.0]
gamma = {gamma}
kappa = [[1.0, 0.2], [0.0, 1.0]]

[laws]
G = {{ family = "gamma", shape = 2.0, rate = 2.0 }}
F = {{ family = "lognormal", mu = 0.0, sigma = 0.5 }}

[init]
counts = [[90, 5, 5, 0], [100, 0, 0, 0]]

[run]
mode = "{mode}"
dt = 0.1
T = 2.0
"#
    )
}

#[test]
fn minimal_sir_fills_and_records_defaults() {
    let spec = parse_config_str(SIR).unwrap();
    assert_eq!(spec.mode, Mode::Fluid);
    assert_eq!(spec.model.variant, Variant::Sir);
    assert_eq!(spec.model.kappa, vec![vec![1.0]]);
    assert_eq!(spec.model.gamma, 0.0);
    assert_eq!(spec.checkpoints, vec![4.0, 8.0, 12.0, 16.0, 20.0]);
    assert_eq!(spec.tolerances.fclt_slots, vec![I]);
    for key in ["model.kappa", "model.gamma", "laws.F0", "run.checkpoints", "run.base_seed", "run.M", "run.P"] {
        assert!(spec.defaults.iter().any(|d| d.starts_with(key)), "{key} not recorded in {:?}", spec.defaults);
    }
    assert_eq!(spec.config_hash.len(), 64);
    match &spec.init {
        InitSpec::Fractions(f) => assert_eq!(f[0][I], 0.01),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_key_names_its_path() {
    let text = SIR.replace("lambda = [2.0]", "lambda = [2.0]\nbeta = 3");
    match parse_config_str(&text) {
        Err(HarnessError::Schema { path, message }) => {
            assert_eq!(path, "model.beta");
            assert!(message.contains("beta"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn malformed_text_reports_line_and_column() {
    let text = "[model]\nL = 1\nlambda = [2.0\n";
    match parse_config_str(text) {
        Err(e @ HarnessError::Parse { .. }) => {
            assert_eq!(e.code(), "PARSE_ERROR");
            let HarnessError::Parse { line, column, .. } = e else { unreachable!() };
            assert!(line >= 3, "line {line}");
            assert!(column >= 1);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn wrong_type_is_a_schema_violation() {
    let text = SIR.replace("dt = 0.01", "dt = \"small\"");
    match parse_config_str(&text) {
        Err(HarnessError::Schema { path, .. }) => assert_eq!(path, "run.dt"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn full_distance_infection_with_unit_gamma_is_refused_for_limit_modes() {
    for mode in ["fclt", "verify-fclt"] {
        let err = parse_config_str(&two_patch(mode, 1.0)).unwrap_err();
        assert_eq!(err.code(), "FCLT_INADMISSIBLE", "{mode}: {err}");
        assert_eq!(err.exit_code(), 2);
    }
    // the fluid and the simulator are fine with it
    assert!(parse_config_str(&two_patch("fluid", 1.0)).is_ok());
    assert!(parse_config_str(&two_patch("fclt", 0.5)).is_ok());
}

#[test]
fn validation_errors_are_forwarded() {
    let e = parse_config_str(&SIR.replace("lambda = [2.0]", "lambda = [-2.0]")).unwrap_err();
    assert_eq!(e.code(), "VALIDATION");
    assert!(e.to_string().contains("NEGATIVE_RATE"), "{e}");
    let e = parse_config_str(&SIR.replace("checkpoints", "x").replace("T = 20.0", "T = 20.0\ncheckpoints = [1.005]")).unwrap_err();
    assert!(e.to_string().contains("not on the dt grid"), "{e}");
    let e = parse_config_str(&SIR.replace("0.99", "0.5")).unwrap_err();
    assert!(e.to_string().contains("sum to"), "{e}");
    let e = parse_config_str(&SIR.replace("mode = \"fluid\"", "mode = \"simulate\"")).unwrap_err();
    assert!(e.to_string().contains("run.N"), "{e}");
}

#[test]
fn counts_must_agree_with_population_size() {
    let text = two_patch("simulate", 0.5).replace("T = 2.0", "T = 2.0\nN = [201]");
    assert!(parse_config_str(&text).unwrap_err().to_string().contains("count total 200"));
    let spec = parse_config_str(&two_patch("simulate", 0.5)).unwrap();
    assert_eq!(spec.n_list, vec![200]);
}

#[test]
fn sirs_user_columns_map_onto_internal_slots() {
    let text = SIR.replace("\"SIR\"", "\"SIRS\"").replace("[0.99, 0.0, 0.01, 0.0]", "[0.9, 0.0, 0.06, 0.04]").replace(
        "[laws]",
        "[laws]\nG = { family = \"exponential\", rate = 1.0 }",
    );
    let spec = parse_config_str(&text).unwrap();
    let f = spec.fractions();
    assert_eq!(f[0][S], 0.9);
    assert_eq!(f[0][E], 0.06);
    assert_eq!(f[0][I], 0.04);
    assert_eq!(f[0][R], 0.0);
    // I of an SIRS model is the first stage
    assert_eq!(spec.tolerances.fclt_slots, vec![E]);
}

proptest! {
    #[test]
    fn rounding_preserves_total_and_stays_within_one(
        weights in prop::collection::vec(0.0f64..1.0, 8),
        n in 1u64..100_000,
    ) {
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 1e-6);
        let f: Vec<[f64; 4]> = weights.chunks(4).map(|c| [c[0] / total, c[1] / total, c[2] / total, c[3] / total]).collect();
        let counts = round_fractions(&f, n);
        prop_assert_eq!(counts.total, n);
        for (row, c) in f.iter().zip(&counts.counts) {
            for k in 0..4 {
                prop_assert!((c[k] as f64 - row[k] * n as f64).abs() < 1.0 + 1e-9);
            }
        }
    }
}
