//! Command-line entry point for the search planning pipeline.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or config errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use easp_cli::service::{app, ServeState};
use easp_core::diagnosis::{diagnose, DiagnosisConfig};
use easp_core::eval::{evaluate, EvalReport, ParamsBundle, System};
use easp_core::pipeline::align_policy;
use easp_core::planning::{
    extract_context, student_sample, teacher_plan, PolicyParams, FEATURE_DIM,
};
use easp_core::retrieval::{build_index, probe, Index};
use easp_core::routing::{fit_router, router_accuracy, RouterParams};
use easp_core::training::{
    load_dataset, save_dataset, select_grpo_subset, sft_fit, synthesize_dataset,
};
use easp_core::world::{
    generate_world, load_world, save_world, Complexity, World, WorldConfig,
};
use easp_core::PipelineConfig;

#[derive(Parser)]
#[command(name = "easp", version, about = "Probe-then-plan search planning pipeline")]
struct Cli {
    /// Seed for every stochastic stage.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Pipeline config JSON; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct WorldArg {
    /// World directory holding catalog.jsonl, queries.jsonl, kb.json.
    #[arg(long)]
    world: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic world.
    GenWorld {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3000)]
        items: usize,
        #[arg(long, default_value_t = 3000)]
        queries: usize,
        #[arg(long, default_value_t = 0.8)]
        simple_fraction: f64,
        #[arg(long, default_value_t = 12)]
        targets_per_query: usize,
    },
    /// Build the inverted index and print its statistics.
    Index {
        #[command(flatten)]
        world: WorldArg,
    },
    /// Probe a query and print the retrieval snapshot.
    Probe {
        #[command(flatten)]
        world: WorldArg,
        #[arg(long)]
        query: String,
    },
    /// Diagnose a query and print the resulting plan.
    Plan {
        #[command(flatten)]
        world: WorldArg,
        #[arg(long)]
        query: String,
        /// Student policy weights; the teacher plans when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Synthesize the validated teacher dataset.
    Synthesize {
        #[command(flatten)]
        world: WorldArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the student and the query-only baseline on a dataset.
    TrainSft {
        #[command(flatten)]
        world: WorldArg,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        out_blind: PathBuf,
    },
    /// Align both policies with group-relative updates.
    TrainGrpo {
        #[command(flatten)]
        world: WorldArg,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        blind_params: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        out_blind: PathBuf,
        /// Per-step stats log, one JSON line per update.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Fit the complexity router on the world's labeled queries.
    FitRouter {
        #[command(flatten)]
        world: WorldArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate systems and write a report.
    Eval {
        #[command(flatten)]
        world: WorldArg,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        sft_params: PathBuf,
        #[arg(long)]
        blind_params: PathBuf,
        #[arg(long)]
        router: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Restrict evaluation to complex queries.
        #[arg(long)]
        complex_only: bool,
        /// Comma-separated subset of EASP,Blind,NoRL,Identity.
        #[arg(long, default_value = "EASP,Blind,NoRL,Identity")]
        systems: String,
    },
    /// Serve plans over HTTP.
    Serve {
        #[command(flatten)]
        world: WorldArg,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        router: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

fn load_config(path: &Option<PathBuf>) -> anyhow::Result<PipelineConfig> {
    match path {
        Some(p) => Ok(PipelineConfig::from_file(p)?),
        None => Ok(PipelineConfig::default()),
    }
}

fn open_world(dir: &Path) -> anyhow::Result<(World, Index)> {
    let world = load_world(dir).with_context(|| format!("loading world {}", dir.display()))?;
    let index = build_index(world.catalog.clone())?;
    Ok((world, index))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = load_config(&cli.config)?;
    let seed = cli.seed;
    match cli.command {
        Command::GenWorld {
            out,
            items,
            queries,
            simple_fraction,
            targets_per_query,
        } => {
            let world_cfg = WorldConfig {
                n_items: items,
                n_queries: queries,
                simple_fraction,
                targets_per_query,
            };
            let world = generate_world(seed, &world_cfg)?;
            save_world(&world, &out)?;
            let cfg_json = serde_json::to_string_pretty(&world_cfg)?;
            std::fs::write(out.join("world_config.json"), cfg_json)?;
            println!(
                "{}",
                serde_json::json!({
                    "items": world.catalog.len(),
                    "queries": world.queries.len(),
                    "out": out.display().to_string(),
                    "seed": seed,
                })
            );
        }
        Command::Index { world } => {
            let (world, index) = open_world(&world.world)?;
            println!(
                "{}",
                serde_json::json!({
                    "items": world.catalog.len(),
                    "vocab": index.vocab().count(),
                    "avg_doc_len": index.avg_doc_len(),
                })
            );
        }
        Command::Probe { world, query } => {
            let (_, index) = open_world(&world.world)?;
            let snapshot = probe(&index, &query, cfg.k_probe);
            println!("{}", serde_json::to_string_pretty(&snapshot)?);
        }
        Command::Plan {
            world,
            query,
            params,
        } => {
            let (world, index) = open_world(&world.world)?;
            let snapshot = probe(&index, &query, cfg.k_probe);
            let d = diagnose(&query, &snapshot, &world.kb, &DiagnosisConfig::from(&cfg));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let plan = match params {
                Some(path) => {
                    let policy = PolicyParams::load(&path)?;
                    let ctx = extract_context(&query, &snapshot, &d, &world.kb, &index);
                    student_sample(&policy, &ctx, &world.kb, 0.0, cfg.n_max, &mut rng)?.0
                }
                None => teacher_plan(
                    &query, &snapshot, &d, &world.kb, &index, 0.0, cfg.n_max, &mut rng,
                ),
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({
                    "query": query,
                    "diagnosis": d,
                    "plan": plan,
                }))?
            );
        }
        Command::Synthesize { world, out } => {
            let (world, index) = open_world(&world.world)?;
            let dataset =
                synthesize_dataset(&world.queries, &index, &world.kb, &cfg, cfg.temperature, seed)?;
            save_dataset(&dataset, &out)?;
            println!(
                "{}",
                serde_json::json!({ "examples": dataset.len(), "out": out.display().to_string() })
            );
        }
        Command::TrainSft {
            world,
            dataset,
            out,
            out_blind,
        } => {
            let (world, index) = open_world(&world.world)?;
            let dataset = load_dataset(&dataset)?;
            let init = PolicyParams::new(FEATURE_DIM, world.kb.candidate_count());
            let fit = sft_fit(
                &init,
                &dataset,
                &world.kb,
                &index,
                cfg.sft_epochs,
                cfg.sft_learning_rate,
                seed.wrapping_add(2),
                false,
                cfg.n_max,
            )?;
            fit.params.save(&out)?;
            let blind = sft_fit(
                &init,
                &dataset,
                &world.kb,
                &index,
                cfg.sft_epochs,
                cfg.sft_learning_rate,
                seed.wrapping_add(3),
                true,
                cfg.n_max,
            )?;
            blind.params.save(&out_blind)?;
            println!(
                "{}",
                serde_json::json!({
                    "examples": dataset.len(),
                    "epochs": cfg.sft_epochs,
                    "log_likelihood": fit.epoch_log_likelihood,
                    "skipped": fit.skipped,
                })
            );
        }
        Command::TrainGrpo {
            world,
            params,
            blind_params,
            out,
            out_blind,
            log,
        } => {
            let (world, index) = open_world(&world.world)?;
            let complex: Vec<_> = world
                .queries
                .iter()
                .filter(|q| q.complexity == Complexity::Complex)
                .cloned()
                .collect();
            if complex.is_empty() {
                bail!("world has no complex queries to align on");
            }
            let top_n = cfg.grpo_subset.min(complex.len()).max(1);

            let sft = PolicyParams::load(&params)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(4));
            let subset =
                select_grpo_subset(&sft, &complex, &index, &world.kb, &cfg, false, top_n, &mut rng)?;
            let (aligned, stats) = align_policy(
                &sft,
                &subset,
                &index,
                &world.kb,
                &cfg,
                false,
                seed.wrapping_add(5),
            )?;
            aligned.save(&out)?;

            let blind_sft = PolicyParams::load(&blind_params)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(6));
            let blind_subset = select_grpo_subset(
                &blind_sft, &complex, &index, &world.kb, &cfg, true, top_n, &mut rng,
            )?;
            let (blind_aligned, _) = align_policy(
                &blind_sft,
                &blind_subset,
                &index,
                &world.kb,
                &cfg,
                true,
                seed.wrapping_add(7),
            )?;
            blind_aligned.save(&out_blind)?;

            if let Some(log_path) = log {
                let mut lines = String::new();
                for s in &stats {
                    lines.push_str(&serde_json::to_string(s)?);
                    lines.push('\n');
                }
                std::fs::write(&log_path, lines)?;
            }
            let mean_reward: f64 =
                stats.iter().map(|s| s.mean_reward).sum::<f64>() / stats.len().max(1) as f64;
            println!(
                "{}",
                serde_json::json!({
                    "steps": stats.len(),
                    "group_size": cfg.group_size,
                    "mean_reward": mean_reward,
                })
            );
        }
        Command::FitRouter { world, out } => {
            let (world, index) = open_world(&world.world)?;
            let labeled: Vec<(String, Complexity)> = world
                .queries
                .iter()
                .map(|q| (q.text.clone(), q.complexity))
                .collect();
            let router = fit_router(
                &labeled,
                &world.kb,
                &index,
                cfg.router_learning_rate,
                cfg.router_epochs,
            )?;
            let accuracy = router_accuracy(&labeled, &router, &world.kb, &index);
            router.save(&out)?;
            println!(
                "{}",
                serde_json::json!({ "accuracy": accuracy, "threshold": router.threshold })
            );
        }
        Command::Eval {
            world,
            params,
            sft_params,
            blind_params,
            router,
            out,
            complex_only,
            systems,
        } => {
            let (world, index) = open_world(&world.world)?;
            let policy = PolicyParams::load(&params)?;
            let policy_sft = PolicyParams::load(&sft_params)?;
            let policy_blind = PolicyParams::load(&blind_params)?;
            let router = RouterParams::load(&router)?;
            let bundle = ParamsBundle {
                policy: &policy,
                policy_sft: &policy_sft,
                policy_blind: &policy_blind,
                router: &router,
            };
            let queries: Vec<_> = world
                .queries
                .iter()
                .filter(|q| !complex_only || q.complexity == Complexity::Complex)
                .cloned()
                .collect();
            let mut reports: Vec<EvalReport> = Vec::new();
            for name in systems.split(',') {
                let system = match name.trim() {
                    "EASP" => System::Easp,
                    "Blind" => System::Blind,
                    "NoRL" => System::NoRl,
                    "Identity" => System::Identity,
                    other => bail!("unknown system {other:?}"),
                };
                reports.push(evaluate(
                    system, &queries, &index, &world.kb, &bundle, &cfg, seed,
                )?);
            }
            std::fs::write(&out, serde_json::to_string_pretty(&reports)?)?;
            println!(
                "{:<10} {:>8} {:>8} {:>8} {:>6} {:>9} {:>9} {:>9}",
                "system", "REL@30", "HR@30", "reward", "fast", "p75 ms", "p99 ms", "cost p99"
            );
            for r in &reports {
                println!(
                    "{:<10} {:>8.2} {:>8.3} {:>8.4} {:>6.2} {:>9.3} {:>9.3} {:>9}",
                    r.system,
                    r.rel_at_30,
                    r.hr_at_30,
                    r.mean_reward,
                    r.fast_path_fraction,
                    r.latency_p75_ms,
                    r.latency_p99_ms,
                    r.cost_p99
                );
            }
        }
        Command::Serve {
            world,
            params,
            router,
            addr,
        } => {
            let (world, index) = open_world(&world.world)?;
            let state = Arc::new(ServeState {
                index,
                kb: world.kb,
                policy: PolicyParams::load(&params)?,
                router: RouterParams::load(&router)?,
                cfg,
            });
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(&addr).await?;
                println!("listening on http://{}", listener.local_addr()?);
                axum::serve(listener, app(state)).await?;
                Ok::<(), anyhow::Error>(())
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
