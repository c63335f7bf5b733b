use std::fs;
use std::io::BufReader;
use std::process::{Command, Output};

use fracquery::dp_solver::read_field;
use serde_json::Value;

fn fracquery(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracquery"))
        .args(args)
        .env_remove("FRACQUERY_MEMORY_BUDGET")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = fracquery(args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    stdout(&o)
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&ok(args)).expect("valid JSON")
}

#[test]
fn optimal_tree_cost_of_iterated_majority() {
    assert_eq!(ok(&["tree-cost", "--fn", "itmaj:2", "--mode", "optimal"]).trim(), "393/64");
    assert_eq!(ok(&["tree-cost", "--fn", "maj3"]).trim(), "5/2");
}

#[test]
fn influence_tree_reports_both_tie_rules() {
    let v = json(&["tree-cost", "--fn", "itmaj:2", "--mode", "influence", "--format", "json"]);
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["mode"], "influence:lowest");
    assert_eq!(rows[0]["cost"], "99/16");
    assert_eq!(rows[1]["cost"], "1575/256");
}

#[test]
fn strategy_tree_cost_of_fixed_order() {
    let out = ok(&["tree-cost", "--fn", "or:2", "--mode", "strategy", "--strategy", "order:1,2"]);
    assert_eq!(out.trim(), "3/2");
}

#[test]
fn unknown_ids_are_configuration_errors() {
    let o = fracquery(&["tree-cost", "--fn", "xor:3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("maj3"), "{}", stderr(&o));

    let o = fracquery(&["simulate", "--fn", "or:2", "--strategy", "best", "--epsilon", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("s_max"), "{}", stderr(&o));
}

#[test]
fn malformed_values_are_configuration_errors() {
    for args in [
        &["simulate", "--fn", "or:2", "--strategy", "s_max", "--epsilon", "2^1"][..],
        &["simulate", "--fn", "or:2", "--strategy", "s_max", "--epsilon", "zero"],
        &["simulate", "--fn", "or:2", "--strategy", "s_max", "--epsilon", "1", "--x0", "0,0,0"],
        &["simulate", "--fn", "or:2", "--strategy", "s_max", "--epsilon", "1", "--x0", "0,2"],
        &["simulate", "--fn", "or:2", "--strategy", "dp_policy", "--epsilon", "0.3"],
        &["solve-dp", "--fn", "or:2"],
        &["tree-cost", "--fn", "or:2", "--mode", "strategy"],
        &["random-turn", "--fn", "or:2", "--x0", "0.1,0", "--M", "4"],
        &["or-analytic", "--point", "0.5"],
        &["convergence", "--fn", "or:2", "--kmin", "3", "--kmax", "2"],
        &["random-turn", "--format", "csv"],
    ] {
        let o = fracquery(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn missing_flags_are_usage_errors() {
    let o = fracquery(&["simulate", "--fn", "or:2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_reports_run_statistics() {
    let v = json(&[
        "simulate", "--fn", "or:20", "--strategy", "s_max", "--epsilon", "2^-6", "--runs", "2000", "--seed", "7",
    ]);
    let cost = v["mean_cost"].as_f64().unwrap();
    assert!((1.0..=1.6).contains(&cost), "{cost}");
    assert_eq!(v["delta"].as_array().unwrap().len(), 20);
    assert_eq!(v["runs"], 2000);
    assert_eq!(v["seed"], 7);
}

#[test]
fn simulate_is_deterministic() {
    let args = [
        "simulate", "--fn", "maj3", "--strategy", "itmaj", "--epsilon", "0.25", "--runs", "500", "--seed", "11",
        "--format", "csv",
    ];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
}

#[test]
fn unit_jumps_on_or_read_one_and_a_half_bits() {
    let v = json(&[
        "simulate", "--fn", "or:2", "--strategy", "random_unread", "--epsilon", "1", "--runs", "20000", "--seed", "5",
    ]);
    let (m, se) = (v["mean_cost"].as_f64().unwrap(), v["stderr"].as_f64().unwrap());
    assert!((m - 1.5).abs() <= 4.0 * se, "{m} ± {se}");
}

#[test]
fn trajectory_dump_uses_one_based_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    ok(&[
        "simulate", "--fn", "dictator:2:2", "--strategy", "max_derivative", "--epsilon", "0.5", "--runs", "10",
        "--trajectory", path.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,coordinate,old,new"));
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.split(',').nth(1) == Some("2")), "{text}");
}

#[test]
fn solved_field_round_trips_and_drives_a_policy() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.csv");
    let p = path.to_str().unwrap();
    ok(&["solve-dp", "--fn", "dictator:1:1", "--k", "5", "--out", p]);
    let s = read_field(BufReader::new(fs::File::open(&path).unwrap())).unwrap();
    assert_eq!(s.field.lattice.len(), 65);
    for idx in 0..s.field.lattice.len() {
        let x = s.field.lattice.point(idx)[0];
        assert!((s.field.value(idx) - (1.0 - x * x)).abs() < 1e-10);
    }

    ok(&["solve-dp", "--fn", "or:2", "--k", "2", "--out", p]);
    let strategy = format!("dp_policy:{p}");
    let common = ["--fn", "or:2", "--epsilon", "0.25", "--runs", "300", "--seed", "2"];
    let mut a = vec!["simulate", "--strategy", strategy.as_str()];
    a.extend(common);
    let mut b = vec!["simulate", "--strategy", "dp_policy"];
    b.extend(common);
    let (va, vb) = (json(&a), json(&b));
    assert_eq!(va["mean_cost"], vb["mean_cost"]);
    assert_eq!(va["delta"], vb["delta"]);
}

#[test]
fn solve_dp_is_bit_exact_across_invocations() {
    let args = ["solve-dp", "--fn", "maj3", "--k", "2"];
    assert_eq!(ok(&args), ok(&args));
}

#[test]
fn memory_budget_override_is_enforced() {
    let run = |budget: &str| {
        Command::new(env!("CARGO_BIN_EXE_fracquery"))
            .args(["solve-dp", "--fn", "or:2", "--k", "3", "--format", "json"])
            .env("FRACQUERY_MEMORY_BUDGET", budget)
            .output()
            .unwrap()
    };
    assert_eq!(run("1K").status.code(), Some(2));
    assert_eq!(run("lots").status.code(), Some(2));
    assert_eq!(run("64M").status.code(), Some(0));
}

#[test]
fn value_iteration_agrees_with_policy_iteration() {
    let a = json(&["solve-dp", "--fn", "or:2", "--k", "3", "--format", "json"]);
    let b = json(&["solve-dp", "--fn", "or:2", "--k", "3", "--format", "json", "--method", "value"]);
    let (a, b) = (a["value_at_origin"].as_f64().unwrap(), b["value_at_origin"].as_f64().unwrap());
    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
}

#[test]
fn or_analytic_outputs() {
    let u: f64 = ok(&["or-analytic", "--point", "0,0", "--format", "text"]).trim().parse().unwrap();
    assert!((u - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);

    let grid = ok(&["or-analytic", "--grid", "5"]);
    assert_eq!(grid.lines().count(), 26);
    assert_eq!(grid.lines().next(), Some("x1,x2,u"));

    let r = json(&["or-analytic", "--residuals"]);
    assert_eq!(r["pass"], true);
    assert_eq!(r["pde_points"], 100);
}

#[test]
fn bounds_check_passes_for_exact_strategies() {
    let o = fracquery(&[
        "bounds-check", "--fn", "maj3", "--strategy", "max_derivative", "--epsilon", "0.25", "--runs", "2000",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("overall: ok"));

    let v = json(&[
        "bounds-check", "--fn", "maj3", "--strategy", "dp_policy", "--epsilon", "0.5", "--horizon", "3", "--runs",
        "2000", "--format", "json",
    ]);
    assert_eq!(v["pass"], true);
    assert_eq!(v["zero_error"], false);
    assert_eq!(v["per_level"].as_array().unwrap().len(), 3);
}

#[test]
fn bounds_check_requires_the_origin() {
    let o = fracquery(&[
        "bounds-check", "--fn", "or:2", "--strategy", "s_max", "--epsilon", "0.5", "--x0", "0.5,0",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn random_turn_games_and_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("games.jsonl");
    let v = json(&[
        "random-turn", "--fn", "maj3", "--x0", "1/4,-1/4,0.5", "--M", "4", "--runs", "3000", "--seed", "1",
        "--games", path.to_str().unwrap(),
    ]);
    assert_eq!(v["harmonic_value"], 0.265625);
    assert!(v["z"].as_f64().unwrap() <= 4.0);
    let games = fs::read_to_string(&path).unwrap();
    assert_eq!(games.lines().count(), 3000);
    let first: Value = serde_json::from_str(games.lines().next().unwrap()).unwrap();
    assert_eq!(first["M"], 4);
    assert!(first["payoff"].as_f64().unwrap().abs() == 1.0);

    let c = json(&["random-turn", "--compare-maj3", "--M", "8", "--runs", "500"]);
    assert_eq!(c["consistent"], true);
}

#[test]
fn convergence_is_monotone_for_or() {
    let v = json(&["convergence", "--fn", "or:2", "--kmin", "1", "--kmax", "4"]);
    assert_eq!(v["monotone"], true);
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    let csv = ok(&["convergence", "--fn", "or:2", "--kmax", "3", "--format", "csv"]);
    assert_eq!(csv.lines().next(), Some("level,epsilon,value,decrease"));
}

#[test]
fn itmaj_scaling_reports_per_depth_reads() {
    let v = json(&["itmaj-scaling", "--kmax", "2", "--runs", "400", "--seed", "3"]);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        let k = r["k"].as_f64().unwrap();
        assert!(r["mean_reads"].as_f64().unwrap() <= 2.5f64.powf(k) + 0.2);
    }
    assert_eq!(v["epsilon"], 0.125);
    let o = fracquery(&["itmaj-scaling", "--kmax", "9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_file_receives_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cost.json");
    let out = ok(&[
        "tree-cost", "--fn", "maj3", "--format", "json", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["cost"], "5/2");
    assert_eq!(v["value"], 2.5);
}
