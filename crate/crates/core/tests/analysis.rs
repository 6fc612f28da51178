use std::path::PathBuf;

use salvo_core::analysis::{audit, predict};
use salvo_core::scenario::load_scenario;
use salvo_core::{PursuerId, Scenario};

fn path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../scenarios/{name}.scn"))
}

fn failing(s: &Scenario) -> Vec<String> {
    audit(s, s.simulation_config().delta_factor)
        .unwrap()
        .into_iter()
        .filter(|f| !f.ok)
        .map(|f| f.check)
        .collect()
}

#[test]
fn committed_positive_fixtures_pass_static_checks() {
    for name in ["case1", "case1_complete", "case2", "case2_sinks", "case3", "single"] {
        let s = load_scenario(path(name)).unwrap();
        assert!(failing(&s).is_empty(), "{name}: {:?}", failing(&s));
    }
}

#[test]
fn oversized_fixed_window_is_flagged() {
    let s = load_scenario(path("broken_delta")).unwrap();
    assert_eq!(failing(&s), vec!["min-ttilde-bound".to_string()]);
}

#[test]
fn factor_at_or_above_one_is_flagged() {
    let s = load_scenario(path("case2")).unwrap();
    let bad = audit(&s, 1.0).unwrap();
    assert_eq!(bad.iter().filter(|f| !f.ok).count(), 3);
}

#[test]
fn new_sinks_inside_a_sink_window_are_flagged() {
    let text = std::fs::read_to_string(path("case2_sinks")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    // Drop every edge at the sub-event: five isolated pursuers, five sinks.
    v["graphs"][2]["edges"] = serde_json::json!([]);
    let s = Scenario::from_json(&v.to_string()).unwrap();
    assert_eq!(failing(&s), vec!["sink-ttilde-bound".to_string()]);
}

#[test]
fn prediction_on_case1() {
    let s = load_scenario(path("case1")).unwrap();
    let p = predict(&s).unwrap();
    assert_eq!(p.leader, PursuerId(4));
    assert!(p.leader_reachable);
    assert!((p.t_f.unwrap() - 5.705418260775).abs() < 1e-9);
    assert_eq!(p.local_leaders, vec![PursuerId(4)]);
    assert_eq!(p.sink_components.len(), 1);
    let min = p.t_tilde.values().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(p.delta_bound_min, min);
}

#[test]
fn prediction_on_disconnected_singletons() {
    let s = load_scenario(path("two_singletons")).unwrap();
    let p = predict(&s).unwrap();
    assert!(!p.leader_reachable);
    assert!(p.t_f.is_none());
    assert_eq!(p.local_leaders.len(), 2);
    assert!((p.first_t_tilde - 3.0).abs() < 1e-9);
}
