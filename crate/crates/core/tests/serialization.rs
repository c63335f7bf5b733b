use fracquery::boolean_fn::zoo;
use fracquery::bounds;
use fracquery::jump_process::{estimate, RunConfig, RunStats};
use fracquery::random_turn::{play_seeded, GameRecord, GameStart};
use fracquery::strategies::{MaxDerivative, SMax};
use serde_json::Value;

#[test]
fn run_stats_round_trip_through_json() {
    let f = zoo::maj3();
    let s = estimate(&f, &MaxDerivative, &[0.0; 3], &RunConfig::new(0.25).with_horizon(4), 200, 3).unwrap();
    let text = serde_json::to_string(&s).unwrap();
    let back: RunStats = serde_json::from_str(&text).unwrap();
    assert_eq!(back, s);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["horizon"], 4);
    assert!(v["l2_error_sq"].is_number());
}

#[test]
fn game_records_round_trip_through_json() {
    let f = zoo::maj3();
    let start = GameStart::from_f64(&[0.25, -0.25, 0.5], 4).unwrap();
    let g = play_seeded(&f, &start, &MaxDerivative, &MaxDerivative, 5, 0).unwrap();
    let back: GameRecord = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
    assert_eq!(back, g);
    assert!(g.moves.iter().all(|m| (1..=3).contains(&m.coordinate)));
}

#[test]
fn bound_report_serialises_every_check() {
    let f = zoo::or(2);
    let s = estimate(&f, &SMax, &[0.0; 2], &RunConfig::new(0.25), 500, 1).unwrap();
    let r = bounds::report(&f, &s).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    assert_eq!(v["per_level"].as_array().unwrap().len(), 2);
    assert_eq!(v["pass"], r.pass);
    assert!(v["osss"].is_object());
    assert!(v["bsw"].is_object());
    assert_eq!(v["zero_error"], true);
}
