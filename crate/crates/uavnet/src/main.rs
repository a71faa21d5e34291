//! Command-line entry point: train agents, evaluate and compare policies,
//! render plots, and sweep the channel model. All artifacts land under
//! `--out`; reruns with the same config and seed are byte-identical except
//! for the timing files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use uavnet::channel::{a2g_mean_pl_db, los_probability, rate_bps, sinr_linear, LinkBudget};
use uavnet::config::{self, Scale};
use uavnet::dqn::{load_checkpoint, save_checkpoint, QNetwork};
use uavnet::error::{Error, Result};
use uavnet::harness::{evaluate, prepare_world, train, RunConfig};
use uavnet::plot;
use uavnet::policies::PolicyKind;
use uavnet::record::{
    fmt_sig9, write_episodes_csv, write_snapshot_csv, write_steps_csv, write_trajectory_csv,
    CsvStepSink, NullSink, COMPARISON_HEADER,
};

#[derive(Parser)]
#[command(name = "uavnet", version, about = "UAV-assisted network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train per-UAV DQN agents and write records plus checkpoints.
    Train(TrainArgs),
    /// Run one frozen episode of a single policy.
    Evaluate(EvaluateArgs),
    /// Evaluate all four policies on shared seeded trajectories.
    Compare(CompareArgs),
    /// Render an SVG from a record CSV.
    Plot(PlotArgs),
    /// Tabulate the channel model over a radius sweep.
    InspectChannel(InspectChannelArgs),
}

#[derive(Args)]
struct CommonConfig {
    /// Built-in preset to start from.
    #[arg(long, default_value = "desk")]
    scale: String,
    /// Flat-key JSON config file applied over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonConfig {
    fn resolve(&self) -> Result<RunConfig> {
        config::resolve(
            Scale::from_name(&self.scale)?,
            self.config.as_deref(),
            self.seed,
        )
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonConfig,
    /// Output directory for all artifacts.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonConfig,
    /// Policy to evaluate: dqn, fixed, kmeans, or exhaustive.
    #[arg(long)]
    policy: String,
    /// Checkpoint directory holding qnet_agent<j>.txt (required for dqn).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonConfig,
    /// Seeds to evaluate, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    seeds: Vec<u64>,
    /// Checkpoint directory for the dqn policy (shared across seeds).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Train fresh agents per seed instead of loading a checkpoint.
    #[arg(long)]
    train_first: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Plot kind: snapshot, training, or timeseries.
    #[arg(long)]
    kind: String,
    /// Input record CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InspectChannelArgs {
    #[command(flatten)]
    common: CommonConfig,
    /// Platform height in meters.
    #[arg(long, default_value_t = 100.0)]
    height: f64,
    #[arg(long, default_value_t = 0.0)]
    r_min: f64,
    #[arg(long, default_value_t = 1000.0)]
    r_max: f64,
    /// Number of sweep points.
    #[arg(long, default_value_t = 101)]
    steps: usize,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => run_train(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Compare(args) => run_compare(args),
        Command::Plot(args) => run_plot(args),
        Command::InspectChannel(args) => run_inspect_channel(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn create_out_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes)?;
    Ok(())
}

fn run_train(args: TrainArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    create_out_dir(&args.out)?;

    let setup = prepare_world(&cfg)?;
    let mut snapshot = Vec::new();
    write_snapshot_csv(&mut snapshot, &setup.state0)?;
    write_file(&args.out.join("snapshot_initial.csv"), &snapshot)?;

    let steps_file = fs::File::create(args.out.join("steps.csv"))?;
    let mut sink = CsvStepSink::new(BufWriter::new(steps_file));
    let outcome = train(&cfg, &mut sink, Some(&args.out))?;
    sink.into_inner().flush()?;

    let mut episodes = Vec::new();
    write_episodes_csv(&mut episodes, &outcome.episodes)?;
    write_file(&args.out.join("episodes.csv"), &episodes)?;

    let ckpt_dir = args.out.join("checkpoints");
    for (j, net) in outcome.nets.iter().enumerate() {
        save_checkpoint(net, &ckpt_dir.join(format!("qnet_agent{j}.txt")))?;
    }

    let meta = config::metadata_json(
        &cfg,
        &[
            ("command", json!("train")),
            ("gradient_steps", json!(outcome.gradient_steps)),
            ("transitions_stored", json!(outcome.transitions_stored)),
            ("clamp_count", json!(outcome.clamp_count)),
            (
                "initial_uav_positions",
                json!(outcome
                    .initial_uav_positions
                    .iter()
                    .map(|&(x, y)| vec![x, y])
                    .collect::<Vec<_>>()),
            ),
        ],
    );
    write_file(
        &args.out.join("metadata.json"),
        format!("{}\n", serde_json::to_string_pretty(&meta)?).as_bytes(),
    )?;

    let last = outcome.episodes.last().expect("episodes >= 1");
    println!(
        "trained {} agents for {} episodes; final mean sum rate {} Mbit/s",
        cfg.n_uavs,
        cfg.episodes,
        fmt_sig9(last.mean_sum_rate_bps / 1e6)
    );
    println!("artifacts in {}", args.out.display());
    Ok(())
}

fn load_nets(cfg: &RunConfig, checkpoint: &Path) -> Result<Vec<QNetwork>> {
    (0..cfg.n_uavs)
        .map(|j| {
            let path = checkpoint.join(format!("qnet_agent{j}.txt"));
            if !path.exists() {
                return Err(Error::Config(format!(
                    "missing checkpoint {}",
                    path.display()
                )));
            }
            load_checkpoint(&path)
        })
        .collect()
}

fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    let kind = PolicyKind::from_name(&args.policy)?;
    let nets = match kind {
        PolicyKind::Dqn => {
            let dir = args.checkpoint.as_deref().ok_or_else(|| {
                Error::Config("--checkpoint is required for the dqn policy".into())
            })?;
            Some(load_nets(&cfg, dir)?)
        }
        _ => None,
    };
    create_out_dir(&args.out)?;

    let outcome = evaluate(&cfg, kind, nets.as_deref())?;

    let mut steps = Vec::new();
    write_steps_csv(&mut steps, &outcome.rows)?;
    write_file(
        &args.out.join(format!("record_{}.csv", kind.name())),
        &steps,
    )?;

    let mut trajectory = Vec::new();
    write_trajectory_csv(&mut trajectory, &outcome.trajectory)?;
    write_file(&args.out.join("trajectory.csv"), &trajectory)?;

    for (name, state) in [
        ("snapshot_initial.csv", &outcome.initial_state),
        ("snapshot_final.csv", &outcome.final_state),
    ] {
        let mut snapshot = Vec::new();
        write_snapshot_csv(&mut snapshot, state)?;
        write_file(&args.out.join(name), &snapshot)?;
    }

    // Wall clock lives in its own file, outside the determinism guarantee.
    let timing = format!(
        "policy,mean_decision_ms\n{},{}\n",
        kind.name(),
        fmt_sig9(outcome.mean_decision_seconds * 1e3)
    );
    write_file(&args.out.join("timing.csv"), timing.as_bytes())?;

    let meta = config::metadata_json(
        &cfg,
        &[
            ("command", json!("evaluate")),
            ("policy", json!(kind.name())),
            ("clamp_count", json!(outcome.clamp_count)),
            (
                "mean_sum_rate_bps",
                json!(outcome.episode.mean_sum_rate_bps),
            ),
        ],
    );
    write_file(
        &args.out.join("metadata.json"),
        format!("{}\n", serde_json::to_string_pretty(&meta)?).as_bytes(),
    )?;

    println!(
        "{}: mean sum rate {} Mbit/s, mean decision {} ms",
        kind.name(),
        fmt_sig9(outcome.episode.mean_sum_rate_bps / 1e6),
        fmt_sig9(outcome.mean_decision_seconds * 1e3)
    );
    Ok(())
}

fn run_compare(args: CompareArgs) -> Result<()> {
    if args.seeds.is_empty() {
        return Err(Error::Config("--seeds must name at least one seed".into()));
    }
    let base = args.common.resolve()?;
    if !args.train_first && args.checkpoint.is_none() {
        return Err(Error::Config(
            "compare needs --checkpoint DIR or --train-first".into(),
        ));
    }
    create_out_dir(&args.out)?;
    let records_dir = args.out.join("records");
    create_out_dir(&records_dir)?;

    let shared_nets = match &args.checkpoint {
        Some(dir) if !args.train_first => Some(load_nets(&base, dir)?),
        _ => None,
    };

    // results[policy][seed] = (per-step end-of-instant rates, mean rate, mean decision s)
    let mut results: Vec<Vec<(Vec<f64>, f64, f64)>> = vec![Vec::new(); PolicyKind::ALL.len()];
    for &seed in &args.seeds {
        let mut cfg = base.clone();
        cfg.seed = seed;
        let trained;
        let nets: Option<&[QNetwork]> = if args.train_first {
            let mut sink = NullSink;
            trained = train(&cfg, &mut sink, Some(&args.out))?;
            Some(&trained.nets)
        } else {
            shared_nets.as_deref()
        };
        for (pi, &kind) in PolicyKind::ALL.iter().enumerate() {
            let nets_arg = (kind == PolicyKind::Dqn).then_some(nets.unwrap());
            let outcome = evaluate(&cfg, kind, nets_arg)?;

            let mut steps = Vec::new();
            write_steps_csv(&mut steps, &outcome.rows)?;
            write_file(
                &records_dir.join(format!("record_{}_seed{}.csv", kind.name(), seed)),
                &steps,
            )?;

            // End-of-instant sum rate: the last agent's row at each t.
            let per_step: Vec<f64> = outcome
                .rows
                .iter()
                .filter(|r| r.agent == cfg.n_uavs - 1)
                .map(|r| r.sum_rate_bps)
                .collect();
            results[pi].push((
                per_step,
                outcome.episode.mean_sum_rate_bps,
                outcome.mean_decision_seconds,
            ));
        }
    }

    let mut comparison = String::from(COMPARISON_HEADER);
    comparison.push('\n');
    for (pi, &kind) in PolicyKind::ALL.iter().enumerate() {
        for (si, &seed) in args.seeds.iter().enumerate() {
            for (t, &rate) in results[pi][si].0.iter().enumerate() {
                comparison.push_str(&format!(
                    "{seed},{},{t},{}\n",
                    kind.name(),
                    fmt_sig9(rate)
                ));
            }
        }
    }
    write_file(
        &args.out.join("compare_timeseries.csv"),
        comparison.as_bytes(),
    )?;

    let svg = plot::render_timeseries_svg(&comparison)?;
    write_file(&args.out.join("compare_sumrate.svg"), svg.as_bytes())?;

    let mut summary = String::from("policy,mean_sum_rate_bps\n");
    let mut timing = String::from("policy,mean_decision_ms\n");
    println!("policy      mean sum rate (Mbit/s)   mean decision (ms)");
    for (pi, &kind) in PolicyKind::ALL.iter().enumerate() {
        let n = results[pi].len() as f64;
        let mean_rate = results[pi].iter().map(|r| r.1).sum::<f64>() / n;
        let mean_ms = results[pi].iter().map(|r| r.2).sum::<f64>() / n * 1e3;
        summary.push_str(&format!("{},{}\n", kind.name(), fmt_sig9(mean_rate)));
        timing.push_str(&format!("{},{}\n", kind.name(), fmt_sig9(mean_ms)));
        println!(
            "{:<11} {:>22} {:>20}",
            kind.name(),
            fmt_sig9(mean_rate / 1e6),
            fmt_sig9(mean_ms)
        );
    }
    write_file(&args.out.join("summary.csv"), summary.as_bytes())?;
    write_file(&args.out.join("timing.csv"), timing.as_bytes())?;

    let meta = config::metadata_json(
        &base,
        &[
            ("command", json!("compare")),
            ("seeds", json!(args.seeds)),
            ("train_first", json!(args.train_first)),
        ],
    );
    write_file(
        &args.out.join("metadata.json"),
        format!("{}\n", serde_json::to_string_pretty(&meta)?).as_bytes(),
    )?;
    Ok(())
}

fn run_plot(args: PlotArgs) -> Result<()> {
    let text = fs::read_to_string(&args.input)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.input.display())))?;
    let (svg, name) = match args.kind.as_str() {
        "snapshot" => (plot::render_snapshot_svg(&text)?, "snapshot.svg"),
        "training" => (plot::render_training_svg(&text)?, "training.svg"),
        "timeseries" => (plot::render_timeseries_svg(&text)?, "timeseries.svg"),
        other => {
            return Err(Error::Config(format!(
                "unknown plot kind {other:?} (expected snapshot, training, or timeseries)"
            )))
        }
    };
    create_out_dir(&args.out)?;
    write_file(&args.out.join(name), svg.as_bytes())?;
    println!("wrote {}", args.out.join(name).display());
    Ok(())
}

fn run_inspect_channel(args: InspectChannelArgs) -> Result<()> {
    let cfg = args.common.resolve()?;
    if args.r_min < 0.0 || args.r_min > args.r_max {
        return Err(Error::Config(format!(
            "sweep range must satisfy 0 <= r_min <= r_max, got {}..{}",
            args.r_min, args.r_max
        )));
    }
    if args.steps == 0 {
        return Err(Error::Config("sweep needs at least one step".into()));
    }
    if !(args.height > 0.0) {
        return Err(Error::Config(format!(
            "height must be positive, got {}",
            args.height
        )));
    }
    create_out_dir(&args.out)?;

    let n = if args.r_min == args.r_max { 1 } else { args.steps };
    let mut csv = String::from("r_m,elevation_deg,los_probability,a2g_pl_db,rate_bps\n");
    for i in 0..n {
        let r = if n == 1 {
            args.r_min
        } else {
            args.r_min + (args.r_max - args.r_min) * i as f64 / (n - 1) as f64
        };
        let elevation = if r == 0.0 {
            90.0
        } else {
            (args.height / r).atan().to_degrees()
        };
        let p_los = los_probability(r, args.height, &cfg.env)?;
        let pl = a2g_mean_pl_db(r, args.height, &cfg.env)?;
        let gated = cfg.env.pl_max_db.is_some_and(|pl_max| pl > pl_max);
        let rate = if gated {
            0.0
        } else {
            let signal = LinkBudget {
                tx_power_dbm: cfg.powers.uav_dbm,
                path_loss_db: pl,
                fading_linear: 1.0,
            };
            rate_bps(sinr_linear(&signal, &[], cfg.env.noise_dbm), cfg.env.bandwidth_hz)?
        };
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_sig9(r),
            fmt_sig9(elevation),
            fmt_sig9(p_los),
            fmt_sig9(pl),
            fmt_sig9(rate)
        ));
    }
    write_file(&args.out.join("channel_sweep.csv"), csv.as_bytes())?;
    println!("wrote {}", args.out.join("channel_sweep.csv").display());
    Ok(())
}
