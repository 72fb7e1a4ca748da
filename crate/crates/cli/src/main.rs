use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use nwd_core::decoder::io::{load_weights, save_schedule, save_weights};
use nwd_core::decoder::WeightSet;
use nwd_core::harness::{
    collect_ep, derive_schedule, estimate_ep, read_ep_samples, run_training, simulate,
    train_breakwater_set, write_ep_samples, ExperimentConfig, SimMode, SimResult,
};
use nwd_core::scheduling::pragmatic_schedule;
use nwd_core::training::records_to_csv;

#[derive(Parser)]
#[command(name = "nwd", version, about = "Neural window decoding of spatially coupled LDPC codes")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; also replaces the training seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and lift the code; print its size and dump the base matrix.
    BuildCode,
    /// Train a plain weight set.
    Train(TrainArgs),
    /// Train CN weights together with damping factors.
    TrainDamped(TrainArgs),
    /// Derive a CN update schedule from a damped weight set.
    DeriveSchedule(ScheduleArgs),
    /// Collect error-propagation samples with the plain set.
    CollectEp(CollectArgs),
    /// Train a breakwater set on collected EP samples.
    TrainBreakwater(BreakwaterArgs),
    /// Monte Carlo BLER/FER sweep.
    Simulate(SimArgs),
    /// Monte Carlo EP probability sweep.
    EpEval(SimArgs),
    /// Print a weight file as a table.
    DumpWeights(DumpArgs),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    stages: Option<usize>,
    /// Weight file to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScheduleArgs {
    /// CN updates to switch off beyond the unreachable ones.
    #[arg(long)]
    k: Option<usize>,
    /// Write the fixed pragmatic schedule instead.
    #[arg(long, conflicts_with = "k")]
    pragmatic: bool,
    /// Damped weight file (default: weights.damped).
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CollectArgs {
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long)]
    max_frames: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BreakwaterArgs {
    #[arg(long)]
    epochs: Option<usize>,
    /// EP sample file (default: the collect-ep output).
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    /// Eb/N0 points in dB (repeatable).
    #[arg(long, num_args = 1..)]
    snr: Vec<f64>,
    #[arg(long)]
    min_errors: Option<u64>,
    #[arg(long)]
    max_frames: Option<u64>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<SimMode>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DumpArgs {
    /// Weight file (default: weights.plain).
    #[arg(long)]
    file: Option<PathBuf>,
}

fn parse_mode(s: &str) -> std::result::Result<SimMode, String> {
    match s {
        "chain" => Ok(SimMode::Chain),
        "window" => Ok(SimMode::Window),
        "independent" => Ok(SimMode::Independent),
        _ => Err(format!("unknown mode {s:?} (chain, window, independent)")),
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli.config.as_deref().context("--config is required")?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.training.seed = seed;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(dir) = &cli.out_dir {
        cfg.output.dir = dir.clone();
    }
    Ok(cfg)
}

fn out_path(cfg: &ExperimentConfig, flag: &Option<PathBuf>, default: &Path) -> Result<PathBuf> {
    let path = flag.clone().unwrap_or_else(|| cfg.output.resolve(default));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(path)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn apply_sim_args(cfg: &mut ExperimentConfig, args: &SimArgs) -> Result<()> {
    if !args.snr.is_empty() {
        cfg.snr = args.snr.clone();
    }
    if let Some(n) = args.min_errors {
        cfg.stop.min_errors = n;
    }
    if let Some(n) = args.max_frames {
        cfg.stop.max_frames = n;
    }
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    cfg.validate()?;
    Ok(())
}

fn print_weights(ws: &WeightSet) {
    println!(
        "# role {}  code {:?}  {} iterations x {} slots",
        ws.role,
        ws.code_id,
        ws.iterations(),
        ws.slots()
    );
    if !ws.provenance.is_empty() {
        println!("# {}", ws.provenance);
    }
    let table = |name: &str, values: &[f64]| {
        println!("{name}");
        for (l, row) in values.chunks(ws.slots()).enumerate() {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:>7.3}")).collect();
            println!("{:>3} {}", l + 1, cells.join(""));
        }
    };
    table("cn weights", ws.weights());
    if let Some(d) = ws.damping() {
        table("damping", d);
    }
}

fn report(res: &SimResult, ep: bool) {
    for p in &res.points {
        if ep {
            match p.q1() {
                Some(q) => eprintln!(
                    "{:>5} dB  q1 {:.4} +- {:.4}  ({} events, {} frames)",
                    p.ebno_db,
                    q,
                    p.q1_ci(),
                    p.q1_events,
                    p.frames
                ),
                None => eprintln!("{:>5} dB  insufficient events ({} frames)", p.ebno_db, p.frames),
            }
        } else {
            eprintln!(
                "{:>5} dB  BLER {:.3e} +- {:.1e}  FER {:.3e}  ({} block errors, {} frames)",
                p.ebno_db,
                p.bler(),
                p.bler_ci(),
                p.fer(),
                p.block_err,
                p.frames
            );
        }
    }
}

fn train(cli: &Cli, args: &TrainArgs, damped: bool) -> Result<()> {
    let mut cfg = load_config(cli)?;
    if let Some(s) = args.stages {
        cfg.training.stages = s;
    }
    let snr = cfg.training.snr_points.clone();
    let outcome = run_training(&cfg, damped, |r| {
        eprintln!(
            "stage {:>4}  losses {:?}  normalized {:.4}{}",
            r.stage,
            r.losses,
            r.normalized,
            if r.is_best { "  best" } else { "" }
        );
    })?;
    let default = if damped {
        &cfg.output.damped_weights
    } else {
        &cfg.output.plain_weights
    };
    let path = out_path(&cfg, &args.out, default)?;
    save_weights(&path, &outcome.weights)?;
    let log = out_path(&cfg, &None, &cfg.output.training_log)?;
    write_text(&log, &records_to_csv(&outcome.records, &snr))?;
    eprintln!("best stage {}; wrote {}", outcome.best_stage, path.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::BuildCode => {
            let cfg = load_config(cli)?;
            let base = cfg.code.base()?;
            let g = cfg.code.build()?;
            println!("code {}", cfg.code.code_id());
            println!("base {} x {} (n_c {}, n_v {}, w {}, L {})", base.rows(), base.cols(), base.n_c(), base.n_v(), base.w(), base.length());
            println!("lifted z {}: {} VNs, {} CNs, {} edges", g.z(), g.num_vns(), g.num_cns(), g.edges().len());
            println!("design rate {:.6}", base.design_rate());
            let path = out_path(&cfg, &None, &cfg.output.code_dump)?;
            write_text(&path, &base.dump())?;
            eprintln!("wrote {}", path.display());
        }
        Command::Train(args) => train(cli, args, false)?,
        Command::TrainDamped(args) => train(cli, args, true)?,
        Command::DeriveSchedule(args) => {
            let cfg = load_config(cli)?;
            let n_c = cfg.code.components()?.n_c();
            let mask = if args.pragmatic {
                pragmatic_schedule(cfg.decoder.window, cfg.decoder.max_iters, n_c)
            } else {
                let Some(k) = args.k else {
                    bail!("give --k or --pragmatic");
                };
                let damped = match &args.weights {
                    Some(p) => load_weights(p)?,
                    None => cfg.damped_weights()?,
                };
                let d = derive_schedule(&cfg, &damped, k)?;
                eprint!("insignificance\n{}", d.table.dump());
                d.mask
            };
            let omitted = mask.inactive_count();
            let total = mask.cells().len();
            print!("{}", mask.grid());
            println!(
                "inactive {omitted} of {total} CN updates: omission {:.0}%",
                100.0 * omitted as f64 / total as f64
            );
            let path = out_path(&cfg, &args.out, &cfg.output.schedule)?;
            save_schedule(&path, &mask)?;
            eprintln!("wrote {}", path.display());
        }
        Command::CollectEp(args) => {
            let mut cfg = load_config(cli)?;
            if let Some(n) = args.samples {
                cfg.training.ep_samples = n;
            }
            if let Some(s) = args.snr {
                cfg.training.ep_snr = s;
            }
            if let Some(n) = args.max_frames {
                cfg.stop.max_frames = n;
            }
            let col = collect_ep(&cfg)?;
            let path = out_path(&cfg, &args.out, &cfg.output.ep_samples)?;
            write_ep_samples(&path, &col.samples)?;
            eprintln!(
                "{} samples from {} frames at {} dB; wrote {}",
                col.samples.len(),
                col.frames,
                cfg.training.ep_snr,
                path.display()
            );
        }
        Command::TrainBreakwater(args) => {
            let mut cfg = load_config(cli)?;
            if let Some(e) = args.epochs {
                cfg.training.epochs = e;
            }
            let src = args
                .samples
                .clone()
                .unwrap_or_else(|| cfg.output.resolve(&cfg.output.ep_samples));
            let samples = read_ep_samples(&src)?;
            let ws = train_breakwater_set(&cfg, &samples, |epoch, loss| {
                eprintln!("epoch {epoch:>4}  loss {loss:.5}");
            })?;
            let path = out_path(&cfg, &args.out, &cfg.output.breakwater_weights)?;
            save_weights(&path, &ws)?;
            eprintln!("wrote {}", path.display());
        }
        Command::Simulate(args) | Command::EpEval(args) => {
            let ep = matches!(cli.command, Command::EpEval(_));
            let mut cfg = load_config(cli)?;
            apply_sim_args(&mut cfg, args)?;
            let res = if ep { estimate_ep(&cfg)? } else { simulate(&cfg)? };
            report(&res, ep);
            print!("{}", res.to_csv());
            let default = if ep {
                &cfg.output.ep_csv
            } else {
                &cfg.output.simulation_csv
            };
            let path = out_path(&cfg, &args.out, default)?;
            res.write_csv(&path)?;
        }
        Command::DumpWeights(args) => {
            let ws = match &args.file {
                Some(p) => load_weights(p)?,
                None => load_config(cli)?.plain_weights()?,
            };
            print_weights(&ws);
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
