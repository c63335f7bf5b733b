//! Subcommand implementations.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use fracquery::analytic_or;
use fracquery::boolean_fn::zoo;
use fracquery::bounds;
use fracquery::dp_solver::{self, Solution, TieRule};
use fracquery::jump_process::{self, RunConfig, RunStats};
use fracquery::random_turn::{self, GameStart};
use fracquery::strategies::{self, MaxDerivative, TreeHeuristic, TwoSubtrees};
use fracquery::BooleanFunction;
use num_rational::Ratio;
use serde::Serialize;

use crate::parse::{self, config};
use crate::{
    Command, ConvergenceArgs, Format, OrAnalyticArgs, Output, RandomTurnArgs, ScalingArgs,
    SimulateArgs, SolveDpArgs, Status, Tie, TreeCostArgs, TreeMode,
};

/// Default jump size of the iterated-majority heuristic.
const SCALING_EPSILON: f64 = 0.125;
/// Largest admissible fourth root of the heuristic's mean reads at the deepest level.
const SCALING_ROOT_LIMIT: f64 = 2.49;

pub fn run(command: Command) -> anyhow::Result<Status> {
    match command {
        Command::SolveDp(a) => solve_dp(a),
        Command::Simulate(a) => simulate(a),
        Command::BoundsCheck(a) => bounds_check(a),
        Command::OrAnalytic(a) => or_analytic(a),
        Command::TreeCost(a) => tree_cost(a),
        Command::ItmajScaling(a) => itmaj_scaling(a),
        Command::RandomTurn(a) => random_turn(a),
        Command::Convergence(a) => convergence(a),
    }
}

fn sink(out: &Output) -> anyhow::Result<Box<dyn Write>> {
    Ok(match &out.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn format(out: &Output, default: Format, allowed: &[Format]) -> anyhow::Result<Format> {
    let f = out.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(config(format!(
            "format {f:?} not available here; choose one of {allowed:?}"
        )))
    }
}

fn emit_json<T: Serialize>(out: &Output, value: &T) -> anyhow::Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn emit_text(out: &Output, text: &str) -> anyhow::Result<()> {
    let mut w = sink(out)?;
    w.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

fn function(id: &str) -> anyhow::Result<BooleanFunction> {
    Ok(zoo::from_id(id)?)
}

fn start_point(f: &BooleanFunction, x0: Option<&str>) -> anyhow::Result<Vec<f64>> {
    match x0 {
        None => Ok(vec![0.0; f.n()]),
        Some(s) => {
            let x = parse::point(s)?;
            if x.len() != f.n() {
                return Err(config(format!(
                    "--x0 has {} coordinates, {} has {}",
                    x.len(),
                    f.id(),
                    f.n()
                )));
            }
            Ok(x)
        }
    }
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    function_id: &'a str,
    n: usize,
    level: u32,
    epsilon: f64,
    points: usize,
    value_at_origin: f64,
    report: &'a dp_solver::SolveReport,
}

fn solve_dp(a: SolveDpArgs) -> anyhow::Result<Status> {
    let f = function(&a.function)?;
    let level = a.jump.level()?;
    let opts = parse::solve_options(a.method)?;
    let fmt = format(&a.output, Format::Csv, &[Format::Csv, Format::Json, Format::Text])?;
    let s: Solution = dp_solver::solve_with(&f, level, &opts)?;
    let summary = SolveSummary {
        function_id: f.id(),
        n: f.n(),
        level,
        epsilon: s.field.lattice.epsilon(),
        points: s.field.lattice.len(),
        value_at_origin: s.field.at_origin(),
        report: &s.report,
    };
    match fmt {
        Format::Csv => {
            let mut w = sink(&a.output)?;
            dp_solver::write_field(&mut w, &s)?;
            w.flush()?;
        }
        Format::Json => emit_json(&a.output, &summary)?,
        Format::Text => emit_text(
            &a.output,
            &format!(
                "{} on the 2^-{level} lattice ({} points): u(0) = {}\n\
                 faces {}, policy iterations {}, sweeps {}, max residual {:e}",
                summary.function_id,
                summary.points,
                float(summary.value_at_origin),
                s.report.faces,
                s.report.policy_iterations,
                s.report.sweeps,
                s.report.max_residual
            ),
        )?,
    }
    Ok(Status::Ok)
}

fn run_simulation(a: &SimulateArgs) -> anyhow::Result<(BooleanFunction, RunStats)> {
    let f = function(&a.function)?;
    let epsilon = a.jump.resolve(None)?;
    let x0 = start_point(&f, a.x0.as_deref())?;
    let opts = parse::solve_options(crate::SolverMethod::Policy)?;
    let strategy = strategies::from_id_with(&a.strategy, &f, epsilon, &opts)?;
    let mut cfg = RunConfig::new(epsilon);
    if let Some(h) = a.horizon {
        cfg = cfg.with_horizon(h);
    }
    if let Some(path) = &a.trajectory {
        let t = jump_process::run(&f, strategy.as_ref(), &x0, &cfg.clone().recording(), a.seed, 0)?;
        let mut w = BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        );
        t.write_csv(&mut w)?;
        w.flush()?;
    }
    let stats = jump_process::estimate(&f, strategy.as_ref(), &x0, &cfg, a.runs, a.seed)?;
    Ok((f, stats))
}

fn run_stats_csv(s: &RunStats) -> String {
    let n = s.delta.len();
    let mut header = vec![
        "function_id", "strategy_id", "epsilon", "runs", "seed", "horizon", "mean_cost", "stderr",
        "mean_qv", "qv_stderr", "mean_output_sq", "output_sq_stderr", "l2_error_sq",
        "l2_error_sq_stderr", "determined_fraction", "mean_steps",
    ]
    .into_iter()
    .map(String::from)
    .collect::<Vec<_>>();
    let mut row = vec![
        s.function_id.clone(),
        s.strategy_id.clone(),
        float(s.epsilon),
        s.runs.to_string(),
        s.seed.to_string(),
        s.horizon.map(|h| h.to_string()).unwrap_or_default(),
        float(s.mean_cost),
        float(s.stderr),
        float(s.mean_qv),
        float(s.qv_stderr),
        float(s.mean_output_sq),
        float(s.output_sq_stderr),
        opt_float(s.l2_error_sq),
        opt_float(s.l2_error_sq_stderr),
        float(s.determined_fraction),
        float(s.mean_steps),
    ];
    for i in 0..n {
        header.push(format!("delta_{}", i + 1));
        row.push(float(s.delta[i]));
    }
    for i in 0..n {
        header.push(format!("delta_stderr_{}", i + 1));
        row.push(float(s.delta_stderr[i]));
    }
    format!("{}\n{}\n", header.join(","), row.join(","))
}

fn simulate(a: SimulateArgs) -> anyhow::Result<Status> {
    let fmt = format(&a.output, Format::Json, &[Format::Json, Format::Csv, Format::Text])?;
    let (_, s) = run_simulation(&a)?;
    match fmt {
        Format::Json => emit_json(&a.output, &s)?,
        Format::Csv => emit_text(&a.output, &run_stats_csv(&s))?,
        Format::Text => {
            let mut t = format!(
                "{} / {} at jump {} over {} runs (seed {})\nmean cost {} ± {}\n",
                s.function_id,
                s.strategy_id,
                s.epsilon,
                s.runs,
                s.seed,
                float(s.mean_cost),
                float(s.stderr)
            );
            for (i, (d, e)) in s.delta.iter().zip(&s.delta_stderr).enumerate() {
                t.push_str(&format!("delta_{} {} ± {}\n", i + 1, float(*d), float(*e)));
            }
            for note in &s.notes {
                t.push_str(&format!("note: {note}\n"));
            }
            emit_text(&a.output, &t)?;
        }
    }
    Ok(Status::Ok)
}

fn bounds_check(a: SimulateArgs) -> anyhow::Result<Status> {
    let fmt = format(&a.output, Format::Text, &[Format::Text, Format::Json])?;
    let (f, s) = run_simulation(&a)?;
    let report = bounds::report(&f, &s)?;
    match fmt {
        Format::Json => emit_json(&a.output, &report)?,
        _ => emit_text(&a.output, &report.render())?,
    }
    Ok(if report.pass {
        Status::Ok
    } else {
        Status::Violation
    })
}

fn or_analytic(a: OrAnalyticArgs) -> anyhow::Result<Status> {
    if a.residuals {
        let r = analytic_or::residual_report(100, 1000, a.seed)?;
        match format(&a.output, Format::Json, &[Format::Json, Format::Text])? {
            Format::Json => emit_json(&a.output, &r)?,
            _ => emit_text(
                &a.output,
                &format!(
                    "max |min second difference + 2| {:e} at {} points (step {}), max ODE residual {:e} at {} points: {}",
                    r.pde_max,
                    r.pde_points,
                    r.step,
                    r.ode_max,
                    r.ode_points,
                    if r.pass { "ok" } else { "FAIL" }
                ),
            )?,
        }
        return Ok(if r.pass { Status::Ok } else { Status::Violation });
    }
    match (&a.point, a.grid) {
        (Some(p), _) => {
            let x = parse::point(p)?;
            let [x1, x2] = x[..] else {
                return Err(config(format!("--point needs two coordinates, got `{p}`")));
            };
            let u = analytic_or::u_or2(x1, x2)?;
            match format(&a.output, Format::Json, &[Format::Json, Format::Csv, Format::Text])? {
                Format::Json => emit_json(&a.output, &analytic_or::GridPoint { x1, x2, u })?,
                Format::Csv => emit_text(
                    &a.output,
                    &format!("x1,x2,u\n{},{},{}\n", float(x1), float(x2), float(u)),
                )?,
                Format::Text => emit_text(&a.output, &float(u))?,
            }
        }
        (None, Some(m)) => {
            let points = analytic_or::grid(m)?;
            match format(&a.output, Format::Csv, &[Format::Csv, Format::Json])? {
                Format::Json => emit_json(&a.output, &points)?,
                _ => {
                    let mut t = String::from("x1,x2,u\n");
                    for p in &points {
                        t.push_str(&format!("{},{},{}\n", float(p.x1), float(p.x2), float(p.u)));
                    }
                    emit_text(&a.output, &t)?;
                }
            }
        }
        (None, None) => return Err(config("one of --point, --grid or --residuals is required")),
    }
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct TreeCost {
    function_id: String,
    mode: String,
    cost: String,
    value: f64,
}

fn tree_cost(a: TreeCostArgs) -> anyhow::Result<Status> {
    let f = function(&a.function)?;
    let fmt = format(&a.output, Format::Text, &[Format::Text, Format::Json, Format::Csv])?;
    let mut rows: Vec<(String, Ratio<i64>)> = Vec::new();
    match a.mode {
        TreeMode::Optimal => rows.push(("optimal".into(), dp_solver::optimal_decision_tree_cost(&f)?)),
        TreeMode::Influence => {
            if matches!(a.tie, Tie::Lowest | Tie::Both) {
                rows.push((
                    "influence:lowest".into(),
                    dp_solver::influence_tree_cost(&f, TieRule::LowestIndex)?,
                ));
            }
            if matches!(a.tie, Tie::Uniform | Tie::Both) {
                rows.push((
                    "influence:uniform".into(),
                    dp_solver::influence_tree_cost(&f, TieRule::UniformRandom)?,
                ));
            }
        }
        TreeMode::Strategy => {
            let id = a
                .strategy
                .as_deref()
                .ok_or_else(|| config("--mode strategy needs --strategy"))?;
            let s = strategies::from_id(id, &f, 1.0)?;
            rows.push((format!("strategy:{}", s.id()), dp_solver::tree_strategy_cost(&f, s.as_ref())?));
        }
    }
    let rows: Vec<TreeCost> = rows
        .into_iter()
        .map(|(mode, c)| TreeCost {
            function_id: f.id().to_string(),
            mode,
            cost: c.to_string(),
            value: *c.numer() as f64 / *c.denom() as f64,
        })
        .collect();
    match fmt {
        Format::Json if rows.len() == 1 => emit_json(&a.output, &rows[0])?,
        Format::Json => emit_json(&a.output, &rows)?,
        Format::Csv => {
            let mut t = String::from("function_id,mode,cost,value\n");
            for r in &rows {
                t.push_str(&format!("{},{},{},{}\n", r.function_id, r.mode, r.cost, float(r.value)));
            }
            emit_text(&a.output, &t)?;
        }
        Format::Text if rows.len() == 1 => emit_text(&a.output, &rows[0].cost)?,
        Format::Text => {
            let t: String = rows.iter().map(|r| format!("{} {}\n", r.mode, r.cost)).collect();
            emit_text(&a.output, &t)?;
        }
    }
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct ScalingRow {
    k: u32,
    mean_reads: f64,
    stderr: f64,
    root: f64,
    baseline_mean_reads: f64,
    baseline_stderr: f64,
    baseline_root: f64,
}

#[derive(Serialize)]
struct Scaling {
    epsilon: f64,
    runs: u64,
    seed: u64,
    rows: Vec<ScalingRow>,
    /// `m_k ≤ 2.5^k` at every depth and the deepest root at most the limit.
    pass: bool,
}

fn itmaj_scaling(a: ScalingArgs) -> anyhow::Result<Status> {
    if a.kmax == 0 || a.kmax > 6 {
        return Err(config(format!("--kmax {} outside 1..=6", a.kmax)));
    }
    let fmt = format(&a.output, Format::Json, &[Format::Json, Format::Csv, Format::Text])?;
    let epsilon = a.jump.resolve(Some(SCALING_EPSILON))?;
    let mut rows = Vec::new();
    let mut pass = true;
    for k in 1..=a.kmax {
        let f = zoo::itmaj(k);
        let x0 = vec![0.0; f.n()];
        let seed = a.seed.wrapping_add(u64::from(k));
        let h = jump_process::estimate(&f, &TreeHeuristic, &x0, &RunConfig::new(epsilon), a.runs, seed)?;
        let b = jump_process::estimate(&f, &TwoSubtrees, &x0, &RunConfig::new(1.0), a.runs, seed)?;
        let root = h.mean_cost.powf(1.0 / f64::from(k));
        pass &= h.mean_cost <= 2.5f64.powi(k as i32);
        if k == a.kmax {
            pass &= root <= SCALING_ROOT_LIMIT;
        }
        rows.push(ScalingRow {
            k,
            mean_reads: h.mean_cost,
            stderr: h.stderr,
            root,
            baseline_mean_reads: b.mean_cost,
            baseline_stderr: b.stderr,
            baseline_root: b.mean_cost.powf(1.0 / f64::from(k)),
        });
    }
    let out = Scaling {
        epsilon,
        runs: a.runs,
        seed: a.seed,
        rows,
        pass,
    };
    match fmt {
        Format::Json => emit_json(&a.output, &out)?,
        Format::Csv => {
            let mut t = String::from(
                "k,mean_reads,stderr,root,baseline_mean_reads,baseline_stderr,baseline_root\n",
            );
            for r in &out.rows {
                t.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.k,
                    float(r.mean_reads),
                    float(r.stderr),
                    float(r.root),
                    float(r.baseline_mean_reads),
                    float(r.baseline_stderr),
                    float(r.baseline_root)
                ));
            }
            emit_text(&a.output, &t)?;
        }
        Format::Text => {
            let mut t = format!("heuristic at jump {epsilon}, baseline at jump 1, {} runs\n", a.runs);
            for r in &out.rows {
                t.push_str(&format!(
                    "k={} heuristic {:.4} ± {:.4} (root {:.4})  baseline {:.4} ± {:.4} (root {:.4})\n",
                    r.k, r.mean_reads, r.stderr, r.root, r.baseline_mean_reads, r.baseline_stderr, r.baseline_root
                ));
            }
            t.push_str(if out.pass { "PASS\n" } else { "FAIL\n" });
            emit_text(&a.output, &t)?;
        }
    }
    Ok(if out.pass {
        Status::Ok
    } else {
        Status::Violation
    })
}

fn write_games(
    path: &Path,
    f: &BooleanFunction,
    start: &GameStart,
    runs: u64,
    seed: u64,
) -> anyhow::Result<()> {
    let mut w = BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    for r in 0..runs {
        let g = random_turn::play_seeded(f, start, &MaxDerivative, &MaxDerivative, seed, r)?;
        serde_json::to_writer(&mut w, &g)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn random_turn(a: RandomTurnArgs) -> anyhow::Result<Status> {
    let fmt = format(&a.output, Format::Json, &[Format::Json, Format::Text])?;
    if a.compare_maj3 {
        let c = random_turn::cost_comparison_maj3(a.m, a.runs, a.seed)?;
        match fmt {
            Format::Json => emit_json(&a.output, &c)?,
            _ => emit_text(
                &a.output,
                &format!(
                    "MAJ3 from {:?} at jump {}: middle {:.4} ± {:.4}, max_derivative {:.4} ± {:.4}, consistent {}",
                    c.start,
                    c.epsilon,
                    c.middle.mean_cost,
                    c.middle.stderr,
                    c.max_derivative.mean_cost,
                    c.max_derivative.stderr,
                    c.consistent
                ),
            )?,
        }
        return Ok(Status::Ok);
    }
    let f = function(&a.function)?;
    let p = match &a.x0 {
        Some(s) => parse::rational_point(s)?,
        None => vec![Ratio::from_integer(0); f.n()],
    };
    let start = GameStart::from_rationals(&p, a.m)?;
    if let Some(path) = &a.games {
        write_games(path, &f, &start, a.runs, a.seed)?;
    }
    let v = random_turn::game_value_estimate(&f, &start, a.runs, a.seed)?;
    match fmt {
        Format::Json => emit_json(&a.output, &v)?,
        _ => emit_text(
            &a.output,
            &format!(
                "{} from {:?}, M = {}: mean payoff {:.6} ± {:.6}, f(p) = {:.6}, z = {:.2}, mean turns {:.1}",
                v.function_id, v.start, v.m, v.mean_payoff, v.stderr, v.harmonic_value, v.z, v.mean_turns
            ),
        )?,
    }
    Ok(Status::Ok)
}

fn convergence(a: ConvergenceArgs) -> anyhow::Result<Status> {
    if a.kmin > a.kmax {
        return Err(config(format!("--kmin {} exceeds --kmax {}", a.kmin, a.kmax)));
    }
    let fmt = format(&a.output, Format::Json, &[Format::Json, Format::Csv, Format::Text])?;
    let f = function(&a.function)?;
    let opts = parse::solve_options(a.method)?;
    let levels: Vec<u32> = (a.kmin..=a.kmax).collect();
    let study = dp_solver::convergence_study(&f, &levels, &opts)?;
    match fmt {
        Format::Json => emit_json(&a.output, &study)?,
        Format::Csv => {
            let mut t = String::from("level,epsilon,value,decrease\n");
            for r in &study.rows {
                t.push_str(&format!(
                    "{},{},{},{}\n",
                    r.level,
                    float(r.epsilon),
                    float(r.value),
                    opt_float(r.decrease)
                ));
            }
            emit_text(&a.output, &t)?;
        }
        Format::Text => {
            let mut t = format!("{}: u(0) by level\n", study.function_id);
            for r in &study.rows {
                t.push_str(&format!("k={} {}\n", r.level, float(r.value)));
            }
            t.push_str(&format!(
                "monotone {}, extrapolated {}\n",
                study.monotone,
                opt_float(study.extrapolated)
            ));
            emit_text(&a.output, &t)?;
        }
    }
    Ok(Status::Ok)
}
