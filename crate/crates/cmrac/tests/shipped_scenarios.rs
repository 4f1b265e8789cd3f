//! The scenario files shipped under `scenarios/` must parse to exactly
//! the embedded presets.

use std::path::Path;

use cmrac::scenario::{parse_scenario, preset_paper_s4, preset_paper_s4_mrac};

fn read(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("cannot read {path:?}: {e}"))
}

#[test]
fn shipped_main_scenario_parses_to_the_embedded_preset() {
    let parsed = parse_scenario(&read("paper_s4.scn")).unwrap();
    assert_eq!(parsed, preset_paper_s4());
}

#[test]
fn shipped_baseline_scenario_parses_to_the_embedded_preset() {
    let parsed = parse_scenario(&read("paper_s4_mrac.scn")).unwrap();
    assert_eq!(parsed, preset_paper_s4_mrac());
}

#[test]
fn shipped_scenarios_build_and_pass_validation() {
    for name in ["paper_s4.scn", "paper_s4_mrac.scn"] {
        let scenario = parse_scenario(&read(name)).unwrap();
        scenario.validate_dimensions().unwrap();
        let (problem, integ) = scenario.build().unwrap();
        assert_eq!(problem.plant.state_dim(), 4);
        assert_eq!(problem.plant.input_dim(), 2);
        assert!((integ.horizon - 60.0).abs() < 1e-12);
    }
}
