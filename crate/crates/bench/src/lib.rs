//! Benchmark fixtures shared by the criterion benches.

use preimpact_core::{build_scenario, ScenarioConfig, ScenarioKind, ScenarioOverrides};

/// Scenario `c` shortened to `t_end` seconds.
pub fn scenario_c(t_end: f64) -> ScenarioConfig {
    let mut cfg = build_scenario(ScenarioKind::C, &ScenarioOverrides::default())
        .expect("built-in scenario is valid");
    cfg.integrator.t_end = t_end;
    cfg
}
