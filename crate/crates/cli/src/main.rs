//! Operator surface for the simulator: characterize model curves, compile
//! and inspect expression plans, sweep workload points across system
//! organizations, and fuzz compiled plans against the reference evaluator.
//!
//! Randomized commands take an explicit `--seed` and are reproducible:
//! the same invocation always produces the same output, independent of
//! `--jobs`. CSV output opens with a `# schema: <command> v1` comment line
//! so downstream consumers can pin their parsers.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use fcsim_core::commands::Codec;
use fcsim_core::planner::{self, Placement, PlanResult, PlanStep};
use fcsim_core::timing::{PowerParams, TimingParams};
use fcsim_core::workloads::{run_points, RunRecord, WorkloadSpec};
use fcsim_core::{
    Bits, ChipGeometry, ChipState, CommandFrame, Expr, ProgramMode, RberModel, SystemKind,
};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::thread;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "fcsim", version, about = "In-flash bulk bitwise processing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the sensing-latency, power, and error-rate model curves as CSV
    Characterize {
        /// JSON config overriding model parameters
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile a boolean expression and print its placement, command plan,
    /// wire encoding, and stats
    Plan {
        /// Expression text, e.g. '(a | b) & !c'
        #[arg(long, conflicts_with = "expr_file")]
        expr: Option<String>,
        /// File holding the expression text
        #[arg(long)]
        expr_file: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate workload points on all four system organizations, emit CSV
    Run {
        /// JSON config overriding geometry, model parameters, or points
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads across experiment points
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Compile and execute randomized expressions on a desk-scale die and
    /// compare against the reference evaluator bit for bit
    Verify {
        /// RNG seed; runs are reproducible per seed
        #[arg(long)]
        seed: u64,
        /// Number of random expressions
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Worker threads across cases
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

/// JSON experiment configuration. Every section is optional and every field
/// inside a section falls back to its built-in default, so `{}` is valid.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Config {
    geometry: Option<ChipGeometry>,
    timing: TimingParams,
    power: PowerParams,
    rber: RberModel,
    /// Workload points for `run`; defaults to the nine reference points.
    points: Option<Vec<WorkloadSpec>>,
}

fn load_config(path: &Option<PathBuf>) -> Result<Config> {
    let Some(p) = path else { return Ok(Config::default()) };
    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Characterize { config, out } => {
            let cfg = load_config(&config)?;
            cmd_characterize(&cfg, &mut open_out(&out)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Plan { expr, expr_file, config, out } => {
            let cfg = load_config(&config)?;
            let text = match (expr, expr_file) {
                (Some(t), None) => t,
                (None, Some(p)) => {
                    fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?
                }
                _ => bail!("pass exactly one of --expr or --expr-file"),
            };
            cmd_plan(&cfg, &text, &mut open_out(&out)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { config, out, jobs } => {
            let cfg = load_config(&config)?;
            cmd_run(&cfg, jobs, &mut open_out(&out)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { seed, cases, config, jobs } => {
            let cfg = load_config(&config)?;
            let clean = cmd_verify(&cfg, seed, cases, jobs)?;
            Ok(if clean { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn cmd_characterize(cfg: &Config, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "# schema: characterize v1")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["curve", "x", "y"])?;
    let mut rec = |curve: &str, x: f64, y: f64| w.write_record([curve, &x.to_string(), &y.to_string()]);
    let t = &cfg.timing;
    for wls in 1..=48u32 {
        rec("sense_raw_us_vs_wordlines", wls as f64, t.raw_sense_us(wls, 1))?;
    }
    for blocks in 1..=32u32 {
        rec("sense_raw_us_vs_blocks", blocks as f64, t.raw_sense_us(1, blocks))?;
        rec("sense_deployed_us_vs_blocks", blocks as f64, t.mws_us(1, blocks))?;
        rec("sense_power_scale_vs_blocks", blocks as f64, cfg.power.power_scale(blocks))?;
        rec(
            "fused_vs_serial_energy_ratio",
            blocks as f64,
            cfg.power.fused_vs_serial_energy_ratio(t, blocks),
        )?;
    }
    // wear surfaces at one-year retention, scrambler on and off
    let pecs = [100.0, 200.0, 500.0, 1_000.0, 2_000.0, 5_000.0, 10_000.0, 20_000.0];
    let modes =
        [("slc", ProgramMode::Slc), ("mlc", ProgramMode::Mlc), ("tlc", ProgramMode::Tlc)];
    for (name, mode) in modes {
        for pec in pecs {
            rec(&format!("rber_{name}_vs_pec"), pec, cfg.rber.rber(mode, true, pec, 365.0, 0.0))?;
            rec(
                &format!("rber_{name}_raw_vs_pec"),
                pec,
                cfg.rber.rber(mode, false, pec, 365.0, 0.0),
            )?;
        }
    }
    for i in 0..=20 {
        let ratio = 1.0 + 0.05 * i as f64;
        rec("rber_enhanced_vs_time_ratio", ratio, cfg.rber.enhanced_rber(ratio))?;
    }
    w.flush()?;
    Ok(())
}

fn wordline_list(mask: u64) -> String {
    (0..64)
        .filter(|i| mask >> i & 1 == 1)
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn describe_frame(frame: &CommandFrame) -> String {
    match frame {
        CommandFrame::Sense { flags, target } => {
            let mut fs = Vec::new();
            if flags.inverse {
                fs.push("inverse");
            }
            if flags.init_s {
                fs.push("init-s");
            }
            if flags.init_c {
                fs.push("init-c");
            }
            if flags.move_to_cache {
                fs.push("move");
            }
            let flags_s = if fs.is_empty() { "accumulate".to_string() } else { fs.join(",") };
            let groups = target
                .groups
                .iter()
                .map(|g| format!("block {} wl {}", g.block, wordline_list(g.wordlines)))
                .collect::<Vec<_>>()
                .join(" | ");
            format!("sense [{flags_s}]  {groups}")
        }
        CommandFrame::LatchXor { plane } => format!("latch xor (plane {plane})"),
        CommandFrame::Program { addr, .. } => {
            format!("program plane {} block {} wordline {}", addr.plane, addr.block, addr.wordline)
        }
    }
}

fn cmd_plan(cfg: &Config, text: &str, out: &mut dyn Write) -> Result<()> {
    let text = text.trim();
    if text.is_empty() {
        bail!("the expression is empty");
    }
    let expr = Expr::parse(text).context("parsing the expression")?;
    let g = cfg.geometry.unwrap_or_default();
    g.validate().map_err(anyhow::Error::msg)?;
    let placement = Placement::for_expr(&expr, &g)?;
    let plan = planner::compile(&expr, &placement)?;
    let codec = Codec::for_geometry(&g);

    writeln!(out, "expression: {expr}")?;
    writeln!(
        out,
        "placement: plane {}, {} variables in {} blocks",
        plan.plane,
        placement.var_count(),
        placement.blocks_used()
    )?;
    for (var, slot) in placement.iter() {
        writeln!(
            out,
            "  {var:<12} block {:>4} wordline {:>2}  {}",
            slot.block,
            slot.wordline,
            if slot.inverted { "complemented" } else { "direct" }
        )?;
    }
    writeln!(out, "steps:")?;
    for (i, step) in plan.steps.iter().enumerate() {
        match step {
            PlanStep::Frame(frame) => {
                let wire = plan_frame_hex(&codec, frame)?;
                writeln!(out, "  {:>3}  {}  [{wire}]", i + 1, describe_frame(frame))?;
            }
            PlanStep::ReadCache { slot } => {
                writeln!(out, "  {:>3}  read cache -> host slot {slot}", i + 1)?;
            }
            PlanStep::Host { op, args, out: o } => {
                let args = args.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ");
                writeln!(out, "  {:>3}  host {op:?}({args}) -> slot {o}", i + 1)?;
            }
        }
    }
    match plan.result {
        PlanResult::Cache => writeln!(out, "result: cache latch")?,
        PlanResult::Slot(s) => writeln!(out, "result: host slot {s}")?,
    }
    let st = plan.stats();
    writeln!(
        out,
        "stats: {} sense frames ({} inverse), {} latch xors, {} cache reads, {} host ops, \
         widest frame {} wordlines x {} blocks",
        st.sense_frames,
        st.inverse_frames,
        st.latch_xors,
        st.cache_reads,
        st.host_ops,
        st.max_wordlines,
        st.max_groups
    )?;
    Ok(())
}

fn plan_frame_hex(codec: &Codec, frame: &CommandFrame) -> Result<String> {
    Ok(hex(&codec.encode_to_vec(frame)?))
}

fn cmd_run(cfg: &Config, jobs: usize, out: &mut dyn Write) -> Result<()> {
    let g = cfg.geometry.unwrap_or_default();
    g.validate().map_err(anyhow::Error::msg)?;
    let points = cfg.points.clone().unwrap_or_else(WorkloadSpec::reference_points);
    if points.is_empty() {
        bail!("no workload points configured");
    }
    let systems = SystemKind::ALL;
    let jobs = jobs.clamp(1, points.len());
    let chunks: Vec<&[WorkloadSpec]> = points.chunks(points.len().div_ceil(jobs)).collect();
    let mut parts = Vec::new();
    thread::scope(|s| {
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|chunk| {
                s.spawn(|| run_points(chunk, &systems, &g, &cfg.timing, &cfg.power))
            })
            .collect();
        for h in handles {
            parts.push(h.join().expect("worker panicked"));
        }
    });
    let mut rows: Vec<RunRecord> = Vec::new();
    for part in parts {
        rows.extend(part?);
    }

    writeln!(out, "# schema: run v1")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "workload",
        "param",
        "system",
        "latency_us",
        "sense_busy_us",
        "channel_busy_us",
        "external_busy_us",
        "compute_us",
        "energy_uj",
        "flash_uj",
        "channel_uj",
        "external_uj",
        "dram_uj",
        "compute_uj",
        "sensings",
    ])?;
    for r in &rows {
        let m = &r.metrics;
        w.write_record([
            r.workload.to_string(),
            r.param.to_string(),
            r.system.to_string(),
            m.latency_us.to_string(),
            m.sense_busy_us.to_string(),
            m.channel_busy_us.to_string(),
            m.external_busy_us.to_string(),
            m.compute_us.to_string(),
            m.energy_uj.to_string(),
            m.flash_uj.to_string(),
            m.channel_uj.to_string(),
            m.external_uj.to_string(),
            m.dram_uj.to_string(),
            m.compute_uj.to_string(),
            m.sensings.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Decorrelates per-case seeds so results do not depend on `--jobs`.
fn case_seed(seed: u64, case: u64) -> u64 {
    seed ^ case.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn verify_case(g: &ChipGeometry, pool: &[String], seed: u64, case: usize) -> Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(case_seed(seed, case as u64));
    let expr = Expr::random(&mut rng, pool, 3);
    let env: BTreeMap<String, Bits> = expr
        .vars()
        .into_iter()
        .map(|v| (v, Bits::random(&mut rng, g.bitlines as usize, 0.5)))
        .collect();
    let placement = Placement::for_expr(&expr, g).map_err(|e| format!("placement: {e}"))?;
    let mut chip =
        ChipState::new(*g, case_seed(seed, case as u64)).map_err(|e| format!("chip: {e}"))?;
    planner::program_operands(&mut chip, &placement, &env)
        .map_err(|e| format!("programming: {e}"))?;
    let plan = planner::compile(&expr, &placement).map_err(|e| format!("compile: {e}"))?;
    let got = planner::execute(&mut chip, &plan).map_err(|e| format!("execute: {e}"))?;
    let want = expr.eval(&env).map_err(|e| format!("eval: {e}"))?;
    if got != want {
        return Err(format!("result mismatch for {expr}"));
    }
    Ok(())
}

fn cmd_verify(cfg: &Config, seed: u64, cases: usize, jobs: usize) -> Result<bool> {
    let g = cfg.geometry.unwrap_or_else(|| ChipGeometry::toy(64, 512));
    g.validate().map_err(anyhow::Error::msg)?;
    let pool: Vec<String> = (0..64).map(|i| format!("v{i}")).collect();
    let start = Instant::now();
    let jobs = jobs.clamp(1, cases.max(1));
    let per = cases.div_ceil(jobs);
    let mut failures: Vec<(usize, String)> = Vec::new();
    thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                let g = &g;
                let pool = &pool;
                s.spawn(move || {
                    let mut fails = Vec::new();
                    for i in w * per..((w + 1) * per).min(cases) {
                        if let Err(msg) = verify_case(g, pool, seed, i) {
                            fails.push((i, msg));
                        }
                    }
                    fails
                })
            })
            .collect();
        for h in handles {
            failures.extend(h.join().expect("worker panicked"));
        }
    });
    failures.sort_by_key(|f| f.0);
    for (i, msg) in &failures {
        println!("case {i}: {msg}");
    }
    println!(
        "verify: {} cases, {} failures, seed {seed}, {:.1} s",
        cases,
        failures.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(failures.is_empty())
}
