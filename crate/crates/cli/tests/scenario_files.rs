use std::path::{Path, PathBuf};

use nmpc_cli::commands::{outcome_code, EXIT_COLLISION, EXIT_SUCCESS, EXIT_TIMEOUT};
use nmpc_cli::scenario_file::{load_scenario, ScenarioFile, SolverEntry};
use nmpc_cli::sweep::load_sweep;
use nmpc_core::Outcome;
use nmpc_testkit::strategies::small_scenario;
use proptest::prelude::*;

fn bundled() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    files.sort();
    files
}

fn is_sweep(p: &Path) -> bool {
    p.to_string_lossy().ends_with(".sweep.toml")
}

#[test]
fn every_bundled_scenario_round_trips() {
    let scenarios: Vec<_> = bundled().into_iter().filter(|p| !is_sweep(p)).collect();
    assert_eq!(scenarios.len(), 8);
    for path in scenarios {
        let loaded = load_scenario(&path).unwrap();
        let text = ScenarioFile::from_scenario(&loaded.scenario, loaded.file.solver).to_toml();
        let again = ScenarioFile::parse(&text, &path).unwrap();
        assert_eq!(again.to_scenario(), loaded.scenario, "{}", path.display());
        assert_eq!(again.solver_config(), loaded.solver);
    }
}

#[test]
fn bundled_sweeps_load() {
    let sweeps: Vec<_> = bundled().into_iter().filter(|p| is_sweep(p)).collect();
    assert_eq!(sweeps.len(), 2);
    for path in sweeps {
        let spec = load_sweep(&path).unwrap();
        assert_eq!(spec.targets.len(), 3);
        assert_eq!(spec.horizon_values, [5, 10, 15, 20, 25]);
        assert!(spec.dt_values.contains(&0.5));
    }
}

#[test]
fn exit_codes_are_a_function_of_outcome() {
    assert_eq!(outcome_code(Outcome::Success), EXIT_SUCCESS);
    assert_eq!(outcome_code(Outcome::Timeout), EXIT_TIMEOUT);
    assert_eq!(outcome_code(Outcome::Collision), EXIT_COLLISION);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn serialized_scenarios_parse_back_identically(
        scn in small_scenario(),
        budget in proptest::option::of(0.01..1.0f64),
    ) {
        let solver = budget.map(|b| SolverEntry { time_budget_s: Some(b), ..SolverEntry::default() });
        let text = ScenarioFile::from_scenario(&scn, solver).to_toml();
        let back = ScenarioFile::parse(&text, Path::new("gen.toml")).unwrap();
        prop_assert_eq!(back.to_scenario(), scn);
        prop_assert_eq!(back.solver, solver);
    }
}
