//! Subcommand execution. Each command resolves its defaults after the config
//! merge, runs the core routines, writes its artifacts under `--out`, and
//! returns the process exit code: 0 on success, 2 when a checked property
//! fails (usage and runtime errors become 1 in `main`).

use crate::config::{
    parse_family, parse_op, Cli, Cmd, ConfigMap, IterateArgs, MiddleClassArgs, OpSpec, SimulateArgs,
};
use anyhow::{anyhow, bail, Context, Result};
use randmarket_core::analysis::{
    gas_vs_operator, h_theorem_check, iterate, middle_class_stats, monotonicity_scan,
    solve_rate_for_mean, EntropyReport, ScanOutcome,
};
use randmarket_core::gas::{histogram, run as run_gas, Ensemble, SimParams};
use randmarket_core::{io, make_pdf, Family, Grid};
use std::fs;
use std::path::PathBuf;

pub fn run(cli: Cli) -> Result<i32> {
    let cfg = ConfigMap::load(cli.config.as_deref())?;
    match cli.cmd {
        Cmd::Iterate(mut args) => {
            args.merge(&cfg)?;
            cmd_iterate(args)
        }
        Cmd::Simulate(mut args) => {
            args.merge(&cfg)?;
            cmd_simulate(args)
        }
        Cmd::MiddleClass(mut args) => {
            args.merge(&cfg)?;
            cmd_middle_class(args)
        }
    }
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| anyhow!("--{flag} is required (flag or config)"))
}

fn out_dir(out: Option<PathBuf>) -> Result<PathBuf> {
    let dir = out.unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn fmtf(v: f64) -> String {
    format!("{v:.17}")
}

/// Entropy gate: only operators that guarantee the ordering can fail it.
fn entropy_exit_code(report: &EntropyReport) -> i32 {
    if report.gated && !report.violations.is_empty() {
        2
    } else {
        0
    }
}

/// Pick the iteration grid. Explicit flags are honored as given; otherwise
/// n = 4000 points on [0, 60] ([0, 2000] for the heavy tail), and under a cap
/// the defaults are snapped so the cap lands exactly on a grid node.
fn iterate_grid(
    family: &Family,
    op: &OpSpec,
    x_max: Option<f64>,
    n: Option<usize>,
) -> Result<Grid> {
    let explicit = x_max.is_some() || n.is_some();
    let default_x = match family {
        Family::ParetoLike => 2000.0,
        _ => 60.0,
    };
    let mut x = x_max.unwrap_or(default_x);
    let mut points = n.unwrap_or(4000);
    if let (Some(cap), false) = (op.cap(), explicit) {
        if !(cap.is_finite() && cap > 0.0) {
            bail!("cap must be positive, got {cap}");
        }
        // q whole cap-lengths cover at least the default window, and the
        // spacing divides the cap, so node_at(cap) is exact.
        let q = (default_x / cap).ceil().max(1.0) as usize;
        let per = 3999usize.div_ceil(q);
        x = q as f64 * cap;
        points = q * per + 1;
    }
    Ok(Grid::new(x, points)?)
}

fn cmd_iterate(args: IterateArgs) -> Result<i32> {
    let family = parse_family(&require(args.family, "family")?)?;
    let op = parse_op(&require(args.op, "op")?)?;
    let steps = args.steps.unwrap_or(10);
    let slack = args.slack.unwrap_or(1e-6);
    let dir = out_dir(args.out)?;
    let grid = iterate_grid(&family, &op, args.x_max, args.grid_n)?;

    let p0 = make_pdf(&family, grid)?.pdf.normalized()?;
    let params = op.to_params()?;
    println!(
        "[iterate] family={family} op={op:?} grid: n={} x_max={}",
        grid.len(),
        grid.x_max()
    );
    let trace = iterate(&p0, &params, steps)?;
    for s in &trace.steps {
        println!(
            "[iterate] step {:>3}: norm {:.9} mean {:.9} entropy {:.9} distance {:.9}",
            s.step, s.norm, s.mean, s.entropy, s.distance
        );
    }
    let report = h_theorem_check(&trace, slack);
    let last = trace.steps.last().expect("trace has a row per step");
    println!(
        "[iterate] target rate {:.9}; entropy gap {:.3e}; violations {}{}",
        trace.target_rate,
        report.gap,
        report.violations.len(),
        if report.gated {
            ""
        } else {
            " (not gated for this operator)"
        }
    );

    io::write_trace_csv(&dir.join("trace.csv"), &trace)?;
    io::write_pdf_csv(&dir.join("final.csv"), &trace.final_pdf)?;
    io::write_pdf_csv(&dir.join("target.csv"), &trace.target)?;
    io::write_kv(
        &dir.join("report.kv"),
        &[
            ("family", family.to_string()),
            ("steps", steps.to_string()),
            ("grid_n", grid.len().to_string()),
            ("x_max", fmtf(grid.x_max())),
            ("target_rate", fmtf(trace.target_rate)),
            ("target_entropy", fmtf(trace.target_entropy)),
            ("final_entropy", fmtf(report.final_entropy)),
            ("entropy_gap", fmtf(report.gap)),
            ("entropy_gated", report.gated.to_string()),
            ("entropy_violations", report.violations.len().to_string()),
            ("final_distance", fmtf(last.distance)),
            ("final_norm", fmtf(last.norm)),
        ],
    )?;
    println!(
        "[iterate] wrote trace.csv, final.csv, target.csv, report.kv in {}",
        dir.display()
    );
    Ok(entropy_exit_code(&report))
}

fn cmd_simulate(args: SimulateArgs) -> Result<i32> {
    let agents = args.agents.unwrap_or(100_000);
    let trades = args.trades.unwrap_or(10_000_000);
    let seed = require(args.seed, "seed")?;
    let lambda = args.lambda.unwrap_or(1.0);
    let cap = args.cap;
    let init = args.init_money.unwrap_or(1.0);
    let dir = out_dir(args.out)?;

    let ensemble = Ensemble::uniform(agents, init)?;
    let params = SimParams {
        trades,
        seed,
        effectiveness: lambda,
        cap,
    };
    params.validate()?;
    println!("[simulate] agents={agents} trades={trades} seed={seed} lambda={lambda} cap={cap:?}");
    let ensemble = run_gas(ensemble, &params)?;
    let drift = (ensemble.current_total() - ensemble.initial_total()).abs()
        / ensemble.initial_total().max(f64::MIN_POSITIVE);
    let mean = ensemble.mean();
    println!("[simulate] done; mean {mean:.9}, relative total drift {drift:.3e}");

    let hist_x_max = args
        .hist_x_max
        .unwrap_or_else(|| cap.unwrap_or((10.0 * init).max(1.0)));
    let hist_n = args.hist_n.unwrap_or(301);
    let grid = Grid::new(hist_x_max, hist_n)?;
    let hist = histogram(&ensemble, grid);

    let (target_family, target_rate) = match cap {
        Some(c) => {
            let rate = solve_rate_for_mean(c, mean)?;
            (Family::TruncatedExponential { rate, cap: c }, rate)
        }
        None => {
            let rate = 1.0 / mean;
            (Family::Exponential { rate }, rate)
        }
    };
    let target = make_pdf(&target_family, grid)?.pdf.normalized()?;
    let bridge = gas_vs_operator(&hist.pdf, &target)?;
    println!(
        "[simulate] histogram vs {target_family}: L1 {:.6}, mean gap {:.6}, clipped {}",
        bridge.l1, bridge.mean_gap, hist.clipped
    );

    io::write_ensemble_csv(&dir.join("snapshot.csv"), &ensemble)?;
    io::write_pdf_csv(&dir.join("histogram.csv"), &hist.pdf)?;
    io::write_pdf_csv(&dir.join("target.csv"), &target)?;
    io::write_kv(
        &dir.join("meta.kv"),
        &[
            ("agents", agents.to_string()),
            ("trades", trades.to_string()),
            ("seed", seed.to_string()),
            ("lambda", fmtf(lambda)),
            ("cap", cap.map(fmtf).unwrap_or_else(|| "none".to_string())),
            ("init_money", fmtf(init)),
            ("mean", fmtf(mean)),
            ("total_drift_rel", fmtf(drift)),
            ("target_family", target_family.to_string()),
            ("target_rate", fmtf(target_rate)),
            ("hist_clipped", hist.clipped.to_string()),
            ("l1_to_target", fmtf(bridge.l1)),
            ("mean_gap", fmtf(bridge.mean_gap)),
        ],
    )?;
    println!(
        "[simulate] wrote snapshot.csv, histogram.csv, target.csv, meta.kv in {}",
        dir.display()
    );
    Ok(0)
}

fn cmd_middle_class(args: MiddleClassArgs) -> Result<i32> {
    match (&args.scan, args.rate, args.cap) {
        (Some(spec), None, None) => {
            let mean = parse_scan_mean(spec)?;
            let al_raw = require(args.al, "aL")?;
            let als: Vec<f64> = al_raw
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| anyhow!("bad confinement value '{t}'"))
                })
                .collect::<Result<_>>()?;
            let dir = out_dir(args.out)?;
            let table = monotonicity_scan(mean, &als)?;
            println!("[middle-class] fixed mean {mean}: scanning rate*cap");
            println!(
                "[middle-class] {:>8} {:>12} {:>12} {:>12} {:>12}",
                "aL", "CM", "xCM", "per_capita", "proportion"
            );
            for outcome in &table.outcomes {
                match outcome {
                    ScanOutcome::Row(row) => {
                        let r = &row.report;
                        println!(
                            "[middle-class] {:>8} {:>12.8} {:>12.8} {:>12.8} {:>12.8}",
                            row.al, r.cm, r.xcm, r.per_capita, r.proportion
                        );
                    }
                    ScanOutcome::Infeasible { al, reason } => {
                        println!("[middle-class] {al:>8} infeasible: {reason}");
                    }
                }
            }
            let verdict = table.verdict();
            println!(
                "[middle-class] strictly decreasing: CM={} xCM={} per_capita={} proportion={}",
                verdict.cm, verdict.xcm, verdict.per_capita, verdict.proportion
            );
            io::write_scan_csv(&dir.join("scan.csv"), &table)?;
            io::write_kv(
                &dir.join("verdict.kv"),
                &[
                    ("mean", fmtf(mean)),
                    ("cm_decreasing", verdict.cm.to_string()),
                    ("xcm_decreasing", verdict.xcm.to_string()),
                    ("per_capita_decreasing", verdict.per_capita.to_string()),
                    ("proportion_decreasing", verdict.proportion.to_string()),
                ],
            )?;
            println!(
                "[middle-class] wrote scan.csv, verdict.kv in {}",
                dir.display()
            );
            Ok(if verdict.all_decreasing() { 0 } else { 2 })
        }
        (None, Some(rate), Some(cap)) => {
            let dir = out_dir(args.out)?;
            let r = middle_class_stats(rate, cap)?;
            println!(
                "[middle-class] rate {rate}, cap {cap}: mean {:.9}, band [{:.6}, {:.6}]",
                r.mean,
                0.5 * r.mean,
                2.0 * r.mean
            );
            println!(
                "[middle-class] CM {:.9} xCM {:.9} per_capita {:.9} proportion {:.9}",
                r.cm, r.xcm, r.per_capita, r.proportion
            );
            println!(
                "[middle-class] cross-checks: quadrature gap {:.3e}, per-capita consistency {:.3e}",
                r.quadrature_gap, r.per_capita_consistency
            );
            io::write_kv(
                &dir.join("report.kv"),
                &[
                    ("rate", fmtf(r.rate)),
                    ("cap", fmtf(r.cap)),
                    ("mean", fmtf(r.mean)),
                    ("cm", fmtf(r.cm)),
                    ("xcm", fmtf(r.xcm)),
                    ("per_capita", fmtf(r.per_capita)),
                    ("proportion", fmtf(r.proportion)),
                    ("quadrature_gap", fmtf(r.quadrature_gap)),
                    ("per_capita_consistency", fmtf(r.per_capita_consistency)),
                ],
            )?;
            println!("[middle-class] wrote report.kv in {}", dir.display());
            Ok(0)
        }
        _ => bail!("use either --scan m=MEAN with --aL LIST, or --rate with --cap"),
    }
}

fn parse_scan_mean(spec: &str) -> Result<f64> {
    let rest = spec
        .strip_prefix("m=")
        .ok_or_else(|| anyhow!("--scan expects m=MEAN, got '{spec}'"))?;
    rest.trim()
        .parse::<f64>()
        .map_err(|_| anyhow!("bad mean '{rest}' in --scan"))
}
