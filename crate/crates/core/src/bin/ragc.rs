use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ragc::experiment::{
    cmd_anchors, cmd_detect, cmd_eval, cmd_generate, cmd_train, DetectSource, EvalOptions, ExperimentConfig,
    TrainOptions,
};
use ragc::{Error, Result};

#[derive(Parser)]
#[command(name = "ragc", version, about = "Radar transmit-gain control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment TOML file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experiment seed; must match the dataset's seed for train and eval
    #[arg(long)]
    seed: Option<u64>,
    /// Overwrite existing outputs.
    #[arg(long)]
    force: bool,
    /// Use the full 100/100/20 split sizes.
    #[arg(long)]
    paper_scale: bool,
    /// Output directory; overrides `experiment.out_dir`
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate scene and label CSVs for all splits.
    Generate(Common),
    /// Train the agent; resumes from the last checkpoint if present.
    Train(Common),
    /// Evaluate a checkpoint on the test split.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Replace the actor by uniform random actions.
        #[arg(long)]
        random_policy: bool,
    },
    /// Render one scene at fixed power and dump detections and cubes.
    Detect {
        #[command(flatten)]
        common: Common,
        /// Scene name from the manifest, e.g. `test_000`.
        #[arg(long, required_unless_present = "cubes")]
        scene: Option<String>,
        #[arg(long, default_value_t = 30.0)]
        power: f64,
        /// Directory of external `.cube` files to run instead of a scene.
        #[arg(long, conflicts_with = "scene")]
        cubes: Option<PathBuf>,
    },
    /// Cluster training box shapes into anchor priors.
    Anchors {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: Option<usize>,
    },
}

fn load(c: &Common) -> Result<ExperimentConfig> {
    let cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.with_overrides(c.seed, c.paper_scale, c.out.as_deref())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(c) => {
            let cfg = load(&c)?;
            let m = cmd_generate(&cfg, c.force)?;
            println!("generated {} scenes, config hash {}", m.scenes.len(), m.config_hash);
        }
        Command::Train(c) => {
            let cfg = load(&c)?;
            let opts = TrainOptions {
                fresh: c.force,
                ..TrainOptions::default()
            };
            let o = cmd_train(&cfg, &opts)?;
            if let Some(e) = o.resumed_from {
                println!("resumed after episode {e}");
            }
            for s in &o.summaries {
                println!(
                    "episode {:4}  reward {:8.3}  mean f1 {:.3}  mean a' {:.3}",
                    s.episode, s.total_reward, s.mean_f1, s.mean_action_norm
                );
            }
            match &o.final_checkpoint {
                Some(p) => println!("finished {} episodes, final checkpoint {}", o.episodes_done, p.display()),
                None => println!("stopped after {} episodes", o.episodes_done),
            }
        }
        Command::Eval {
            common,
            checkpoint,
            random_policy,
        } => {
            let cfg = load(&common)?;
            let o = cmd_eval(
                &cfg,
                &EvalOptions {
                    checkpoint,
                    random_policy,
                },
            )?;
            let r = &o.report;
            println!("policy            {}", r.policy);
            println!("frames            {}", r.num_frames);
            println!("adaptive mAP      {:.4}", r.adaptive_map);
            println!("fixed-power mAP   {:.4}", r.fixed_map);
            println!("mAP delta         {:+.4}", r.map_delta);
            println!("mean power        {:.2} dBm", r.mean_power_db);
            match r.zero_target_mean_power_db {
                Some(p) => println!("zero-target power {p:.2} dBm"),
                None => println!("zero-target power n/a"),
            }
            println!("spearman rho      {:.4}", r.spearman_rho);
            println!("report written to {}", o.out_dir.display());
        }
        Command::Detect {
            common,
            scene,
            power,
            cubes,
        } => {
            let cfg = load(&common)?;
            let source = match (cubes, scene) {
                (Some(dir), _) => DetectSource::Cubes(dir),
                (None, Some(name)) => DetectSource::Scene { name, power_db: power },
                (None, None) => return Err(Error::Config("pass --scene or --cubes".into())),
            };
            let o = cmd_detect(&cfg, &source)?;
            let n: usize = o.detections.iter().map(Vec::len).sum();
            println!("{} frames, {n} detections, written to {}", o.frames, o.out_dir.display());
            if !o.f1.is_empty() {
                println!("mean f1 {:.4}", o.f1.iter().sum::<f64>() / o.f1.len() as f64);
            }
        }
        Command::Anchors { common, k } => {
            let cfg = load(&common)?;
            let (path, anchors) = cmd_anchors(&cfg, k)?;
            for (w, h) in &anchors {
                println!("{w:.3} {h:.3}");
            }
            println!("written to {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ragc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
