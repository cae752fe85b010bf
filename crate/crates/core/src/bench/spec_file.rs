//! TOML experiment specs. Keys mirror [`ExperimentSpec`]; unknown keys are rejected.
//!
//! ```toml
//! matrix_model = "gaussian"
//! K = 10
//! N_values = [20, 30, 50]
//! trials = 100
//! noise_variance = 0.0
//! master_seed = 1
//! output_dir = "results"
//!
//! [[algorithms]]
//! algorithm = "power"
//! accelerate = true
//! ```

use std::path::Path;

use super::{BenchError, BenchResult, ExperimentSpec};

pub fn parse_spec(text: &str) -> BenchResult<ExperimentSpec> {
    let spec: ExperimentSpec = toml::from_str(text).map_err(|e| BenchError::Spec(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_spec(path: &Path) -> BenchResult<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    parse_spec(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::MatrixModel;
    use crate::solvers::Algorithm;

    #[test]
    fn minimal_spec_gets_defaults() {
        let spec = parse_spec("matrix_model = \"partial-dft\"\nK = 4\nN_values = [8]\noutput_dir = \"o\"\n").unwrap();
        assert_eq!(spec.matrix_model, MatrixModel::PartialDft);
        assert_eq!(spec.trials, 100);
        assert_eq!(spec.algorithms.len(), 6);
        assert_eq!(spec.threshold(), 1e-8);
    }

    #[test]
    fn algorithm_tables() {
        let text = "matrix_model = \"gaussian\"\nK = 3\nN_values = [12, 15]\noutput_dir = \"o\"\n\
                    [[algorithms]]\nalgorithm = \"power-backtracking\"\naccelerate = true\nmax_iters = 50\n";
        let spec = parse_spec(text).unwrap();
        assert_eq!(spec.algorithms.len(), 1);
        assert_eq!(spec.algorithms[0].algorithm, Algorithm::PowerBacktracking);
        assert_eq!(spec.algorithms[0].max_iters, 50);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = "matrix_model = \"gaussian\"\nK = 3\nN_values = [12]\noutput_dir = \"o\"\ncolour = 1\n";
        assert!(matches!(parse_spec(text), Err(BenchError::Spec(_))));
        let text = "matrix_model = \"gaussian\"\nK = 3\nN_values = [12]\noutput_dir = \"o\"\n\
                    [[algorithms]]\nalgorithm = \"power\"\nspeed = 2\n";
        assert!(matches!(parse_spec(text), Err(BenchError::Spec(_))));
    }

    #[test]
    fn invalid_values_rejected() {
        let text = "matrix_model = \"partial-dft\"\nK = 10\nN_values = [5]\noutput_dir = \"o\"\n";
        assert!(matches!(parse_spec(text), Err(BenchError::Spec(_))));
    }

    #[test]
    fn solver_options() {
        use crate::solvers::{DStrategy, WfStepRule};
        let base = "matrix_model = \"gaussian\"\nK = 3\nN_values = [12]\noutput_dir = \"o\"\n";
        for (value, expected) in [
            ("\"lambda-max-phi\"", DStrategy::LambdaMaxPhi),
            ("\"lemma2-bound\"", DStrategy::Lemma2Bound),
            ("{ fixed = 2.5 }", DStrategy::Fixed(2.5)),
        ] {
            let text = format!("{base}[[algorithms]]\nalgorithm = \"power\"\nd_strategy = {value}\n");
            assert_eq!(parse_spec(&text).unwrap().algorithms[0].d_strategy, expected);
        }
        let text = format!("{base}[[algorithms]]\nalgorithm = \"wirtinger-flow\"\nwf_step = \"backtracking\"\n");
        assert_eq!(
            parse_spec(&text).unwrap().algorithms[0].wf_step,
            WfStepRule::Backtracking
        );
    }
}
