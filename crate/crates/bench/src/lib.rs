//! Benchmark fixtures. The benchmarks themselves live in `benches/`.

use nlnoise::{build_lag_problem, gen_ikeda, parse_var_list, EmbeddingSpec, IkedaConfig, RegressionProblem};

/// Noise-free Ikeda, `x_t` against `x_{t-1}, y_{t-1}`, standardized.
pub fn ikeda_problem(n: usize) -> RegressionProblem {
    let series = gen_ikeda(&IkedaConfig {
        n,
        seed: 1,
        ..Default::default()
    })
    .expect("ikeda");
    let vars = parse_var_list("x@1,y@1").expect("vars");
    let spec = EmbeddingSpec::from_vars("x", &vars).expect("spec");
    build_lag_problem(&series, &spec)
        .and_then(|p| p.standardize())
        .expect("problem")
}
