use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use cowork_core::petri::{check_rule4, CoWorker, Marking};
use cowork_core::scenario::{
    bundled_config, emit_trace, plan_once, read_config, run, run_with_dumps, EmitOptions, ScenarioConfig,
};

#[derive(Parser)]
#[command(name = "cowork", version, about = "UAS planning among human co-workers on a gridded workplace")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Scenario TOML file, or `bundled` (alias `sectionV`) for the built-in scenario.
    config: String,
    /// Override the human-penalty weight.
    #[arg(long)]
    c0: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop simulation and write its trace.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the full per-tick trace as JSON.
        #[arg(long)]
        json: bool,
        /// Write cost and value layers for every tick.
        #[arg(long)]
        dump_matrices: bool,
    },
    /// Run seeds 0..N and report aggregate statistics.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 100)]
        seeds: u64,
    },
    /// Print construct classes, next stations and the head-count truth table.
    VerifyNet {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Solve once from the initial state.
    Plan {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Directory for per-layer cost and value CSV files.
        #[arg(long)]
        tick_dump: Option<PathBuf>,
    },
}

fn load(args: &ConfigArgs) -> Result<ScenarioConfig> {
    let mut cfg = if matches!(args.config.as_str(), "bundled" | "sectionV") {
        bundled_config()
    } else {
        read_config(&args.config).with_context(|| format!("loading {}", args.config))?
    };
    if let Some(c0) = args.c0 {
        cfg.planner.c0 = c0;
    }
    Ok(cfg)
}

enum Outcome {
    Reached,
    Exhausted,
}

fn execute(command: Command) -> Result<Outcome> {
    match command {
        Command::Run { cfg, seed, out, json, dump_matrices } => {
            let mut config = load(&cfg)?;
            config.planner.seed = seed;
            let scn = config.validate()?;
            let trace = if dump_matrices { run_with_dumps(&scn, &out)? } else { run(&scn)? };
            let manifest = emit_trace(&trace, &out, &EmitOptions { json_trace: json })?;
            let s = &trace.summary;
            println!(
                "seed {} reached_goal={} steps={} min_distance={} collisions={} files={}",
                s.seed,
                s.reached_goal,
                s.steps,
                s.min_distance.map_or("-".into(), |d| format!("{d:.3}")),
                s.collisions,
                manifest.mandatory.len() + manifest.optional.len()
            );
            Ok(if s.reached_goal { Outcome::Reached } else { Outcome::Exhausted })
        }
        Command::Sweep { cfg, seeds } => {
            let config = load(&cfg)?;
            let mut reached = 0;
            let mut with_collisions = 0;
            let mut obstacle_runs = 0;
            let mut dist_sum = 0.0;
            let mut dist_n = 0;
            for seed in 0..seeds {
                let mut c = config.clone();
                c.planner.seed = seed;
                let t = run(&c.validate()?)?;
                let s = &t.summary;
                reached += u64::from(s.reached_goal);
                with_collisions += u64::from(s.collisions > 0);
                obstacle_runs += u64::from(s.obstacle_entries > 0);
                if let Some(d) = s.min_distance {
                    dist_sum += d;
                    dist_n += 1;
                }
                println!(
                    "seed {seed:>4} reached={} steps={:>3} min_distance={} collisions={}",
                    s.reached_goal,
                    s.steps,
                    s.min_distance.map_or("-".into(), |d| format!("{d:.3}")),
                    s.collisions
                );
            }
            let mean = if dist_n > 0 { dist_sum / dist_n as f64 } else { f64::NAN };
            println!(
                "c0={} runs={seeds} reached={reached} collision_runs={with_collisions} obstacle_runs={obstacle_runs} mean_min_distance={mean:.4}",
                config.planner.c0
            );
            Ok(if reached == seeds { Outcome::Reached } else { Outcome::Exhausted })
        }
        Command::VerifyNet { cfg } => {
            let scn = load(&cfg)?.validate()?;
            let net = &scn.net;
            println!("place  human_next          uas_next    constructs");
            for &p in net.places() {
                let h = net.next_stations(p, CoWorker::Human)?;
                let u = net.next_stations(p, CoWorker::Uas)?;
                let kinds = net.classify_place(p, CoWorker::Human)?;
                println!("{p:>5}  {:<18}  {:<10}  {kinds:?}", format!("{h:?}"), format!("{u:?}"));
            }
            println!("\nhead-count rule (M_U, M_H) -> violation");
            for mu in 0..=3u32 {
                for mh in 0..=3u32 {
                    let mut m = Marking::default();
                    m.set(1, CoWorker::Uas, mu);
                    m.set(1, CoWorker::Human, mh);
                    println!("  ({mu}, {mh}) -> {}", !check_rule4(&m).is_empty());
                }
            }
            let initial = check_rule4(&scn.initial_marking);
            println!("\ninitial marking violations: {initial:?}");
            Ok(Outcome::Reached)
        }
        Command::Plan { cfg, tick_dump } => {
            let scn = load(&cfg)?.validate()?;
            let snap = plan_once(&scn)?;
            println!(
                "first action at {}: {} (index {})",
                scn.uas.origin_cell,
                snap.first_action,
                snap.first_action.index()
            );
            if let Some(dir) = tick_dump {
                let files = snap.dump(&dir)?;
                println!("wrote {} layer files to {}", files.len(), dir.display());
            }
            Ok(Outcome::Reached)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(Outcome::Reached) => ExitCode::SUCCESS,
        Ok(Outcome::Exhausted) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
