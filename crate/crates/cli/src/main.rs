use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use bystander_core::harness::{
    load_scenario, message_length_sweep, run_batch, BatchOutput, Expectations, Motion, ScenarioFile, SweepRow,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

const EXIT_PARSE: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser)]
#[command(name = "bystander", version, about = "Run bystander privacy signaling scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file for one or more seeded trials.
    Run {
        scenario: PathBuf,
        /// Base seed; trial i uses seed + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of trials (defaults to the file's trial.repetitions).
        #[arg(long)]
        reps: Option<u32>,
        /// Write the JSON-lines trace of every trial here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Report::Text)]
        report: Report,
        /// Compare results with the file's `expect` block; exit 3 on failure.
        #[arg(long)]
        check: bool,
        /// Worker threads (defaults to available cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Decode success rate per packet length.
    Sweep {
        scenario: PathBuf,
        /// `A..B` (inclusive, step 2) or a comma list.
        #[arg(long, default_value = "14..26", value_parser = parse_lengths)]
        lengths: Lengths,
        #[arg(long, value_enum, default_value_t = MotionArg::Walking)]
        motion: MotionArg,
        #[arg(long, default_value_t = 20)]
        trials: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Report::Text)]
        report: Report,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Report {
    Text,
    Machine,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MotionArg {
    Static,
    Walking,
}

#[derive(Clone, Debug)]
struct Lengths(Vec<usize>);

fn parse_lengths(s: &str) -> Result<Lengths, String> {
    let lengths: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| format!("bad length `{a}`"))?;
        let b: usize = b.trim().parse().map_err(|_| format!("bad length `{b}`"))?;
        if a > b {
            return Err(format!("empty range {s}"));
        }
        (a..=b).step_by(2).collect()
    } else {
        s.split(',')
            .map(|p| p.trim().parse().map_err(|_| format!("bad length `{p}`")))
            .collect::<Result<_, _>>()?
    };
    if let Some(bad) = lengths.iter().find(|l| !(14..=26).contains(*l)) {
        return Err(format!("length {bad} outside 14..26"));
    }
    Ok(Lengths(lengths))
}

fn workers(requested: Option<usize>) -> usize {
    requested.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

fn load(path: &Path) -> Result<ScenarioFile, ExitCode> {
    load_scenario(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_PARSE)
    })
}

/// Human-readable reasons the batch misses the file's thresholds.
fn check_failures(expect: &Expectations, out: &BatchOutput) -> Vec<String> {
    let agg = &out.aggregate;
    let mut failures = Vec::new();
    if let Some(min) = expect.min_accuracy {
        if agg.accuracy() < min {
            failures.push(format!("accuracy {:.3} < {min}", agg.accuracy()));
        }
    }
    if let Some(max) = expect.max_false_positive_rate {
        if agg.false_positive_rate() > max {
            failures.push(format!("false positive rate {:.3} > {max}", agg.false_positive_rate()));
        }
    }
    if let Some([lo, hi]) = expect.latency_ms {
        let outside = agg.latencies_ms.iter().filter(|l| **l < lo || **l > hi).count();
        if outside > 0 {
            failures.push(format!("{outside} latencies outside [{lo}, {hi}] ms"));
        }
    }
    failures
}

fn write_traces(path: &Path, out: &BatchOutput) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for trace in &out.traces {
        trace.write_jsonl(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    path: &Path,
    seed: u64,
    reps: Option<u32>,
    trace: Option<&Path>,
    report: Report,
    check: bool,
    workers: usize,
) -> anyhow::Result<ExitCode> {
    let file = match load(path) {
        Ok(f) => f,
        Err(code) => return Ok(code),
    };
    let reps = reps.unwrap_or(file.trial.repetitions);
    if reps == 0 {
        bail!("--reps must be at least 1");
    }
    let scenario = file.to_scenario();
    let out = run_batch(&scenario, file.modality(), &file.config, reps, seed, workers);
    if let Some(p) = trace {
        write_traces(p, &out)?;
    }
    let failures = match (&file.expect, check) {
        (Some(e), true) => check_failures(e, &out),
        _ => Vec::new(),
    };
    let agg = &out.aggregate;
    match report {
        Report::Text => {
            println!("scenario   {}", path.display());
            if !file.trial.condition.is_empty() {
                println!("condition  {}", file.trial.condition);
            }
            println!("modality   {}", file.modality().as_str());
            println!("trials     {} (seeds {}..{})", reps, seed, seed + reps as u64 - 1);
            println!("signals    {}", agg.signals);
            println!("accuracy   {:.3}", agg.accuracy());
            println!("fp rate    {:.3} ({} false toggles)", agg.false_positive_rate(), agg.false_positives);
            println!("fn rate    {:.3}", agg.false_negative_rate());
            match agg.mean_latency_ms() {
                Some(mean) => {
                    let lo = agg.latencies_ms.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = agg.latencies_ms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    println!("latency    mean {mean:.1} ms, min {lo:.1}, max {hi:.1}");
                }
                None => println!("latency    n/a"),
            }
            if file.modality() == bystander_core::Modality::Uwb {
                println!("ranging    {} sessions, {} fast-path hits", agg.ranging_sessions, agg.fast_path_hits);
            }
            println!("frame p95  {:.3} ms", out.frame_p95_ms);
            if check {
                if failures.is_empty() {
                    println!("check      pass");
                } else {
                    for f in &failures {
                        println!("check      FAIL {f}");
                    }
                }
            }
        }
        Report::Machine => {
            let doc = json!({
                "scenario": path.display().to_string(),
                "condition": file.trial.condition,
                "modality": file.modality(),
                "base_seed": seed,
                "repetitions": reps,
                "accuracy": agg.accuracy(),
                "false_positive_rate": agg.false_positive_rate(),
                "false_negative_rate": agg.false_negative_rate(),
                "mean_latency_ms": agg.mean_latency_ms(),
                "result": agg,
                "trace_hashes": out.trace_hashes,
                "frame_p95_ms": out.frame_p95_ms,
                "check": check.then(|| json!({ "passed": failures.is_empty(), "failures": failures })),
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
    }
    Ok(if failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_CHECK) })
}

fn cmd_sweep(
    path: &Path,
    lengths: &Lengths,
    motion: MotionArg,
    trials: u32,
    seed: u64,
    report: Report,
    workers: usize,
) -> anyhow::Result<ExitCode> {
    let file = match load(path) {
        Ok(f) => f,
        Err(code) => return Ok(code),
    };
    if file.modality() != bystander_core::Modality::Vlc {
        eprintln!("error: {}: sweep needs a vlc scenario", path.display());
        return Ok(ExitCode::from(EXIT_PARSE));
    }
    let motion = match motion {
        MotionArg::Static => Motion::Static,
        MotionArg::Walking => Motion::Walking,
    };
    let rows: Vec<SweepRow> =
        message_length_sweep(&file.to_scenario(), &file.config, &lengths.0, motion, trials, seed, workers);
    match report {
        Report::Text => {
            println!("bits  decoded  success");
            for r in &rows {
                println!("{:>4}  {:>3}/{:<3}  {:.2}", r.bits, r.decoded, r.signals, r.success_rate);
            }
        }
        Report::Machine => {
            let doc = json!({ "motion": motion, "trials": trials, "base_seed": seed, "rows": rows });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, seed, reps, trace, report, check, workers: w } => {
            cmd_run(&scenario, seed, reps, trace.as_deref(), report, check, workers(w))
        }
        Command::Sweep { scenario, lengths, motion, trials, seed, report, workers: w } => {
            cmd_sweep(&scenario, &lengths, motion, trials, seed, report, workers(w))
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
