use std::path::Path;

use actmask::env::inventory::{self, InvConfig, InventoryEnv, LeadMode};
use actmask::env::lms::{self, LmsEnv};
use actmask::env::paintshop::{self, PaintShopEnv};
use actmask::experiment;
use actmask::mdp::{derive_seed, Environment};
use actmask::oracle::{self, InventoryDp};
use actmask::ppo::{self, PolicyBundle, TrainOutcome, TrainProgress};
use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use crate::config::{ConfigError, EnvKind, LoadedConfig, MaskChoice};
use crate::output::{Checkpoint, Layout, Table, CHECKPOINT_FORMAT, VERSION};

const EVAL_COLUMNS: [&str; 5] = ["env", "mask", "episode", "metric", "value"];

fn layout(config: &LoadedConfig) -> Layout {
    Layout {
        dir: config.output_dir(),
        hash: config.hash.clone(),
    }
}

fn log_progress(label: String) -> impl FnMut(&TrainProgress) {
    move |p: &TrainProgress| {
        if p.iteration.is_multiple_of(50) {
            if let Some(point) = p.point {
                eprintln!("[{label}] t={} mean episode reward {:.4}", p.timestep, point.mean_episode_reward);
            }
        }
    }
}

fn train_one(config: &LoadedConfig, seed: u64) -> Result<TrainOutcome> {
    let ppo_config = config.config.ppo.clone();
    let total = config.config.experiment.total_timesteps;
    let label = format!("{} seed {seed}", config.hash);
    let outcome = match config.mask()? {
        MaskChoice::PaintShop(level) => ppo::train(
            PaintShopEnv::new(config.paintshop()),
            paintshop::mask_stack(level),
            ppo_config,
            total,
            seed,
            log_progress(label),
        ),
        MaskChoice::Lms(theta) => ppo::train(
            LmsEnv::new(config.lms()?),
            lms::mask_stack(theta),
            ppo_config,
            total,
            seed,
            log_progress(label),
        ),
        MaskChoice::Inventory(kind) => {
            let inv = config.inventory()?;
            ppo::train(
                InventoryEnv::new(inv.clone()),
                inventory::mask_stack(kind, &inv),
                ppo_config,
                total,
                seed,
                log_progress(label),
            )
        }
    };
    outcome.with_context(|| format!("training seed {seed}"))
}

/// Trains one policy per seed in parallel; writes a checkpoint and a learning
/// curve for each.
pub fn train(config: &LoadedConfig) -> Result<()> {
    let layout = layout(config);
    let mask = config.mask()?.label();
    config
        .config
        .experiment
        .seeds
        .par_iter()
        .map(|&seed| -> Result<()> {
            let outcome = train_one(config, seed)?;
            let mut curve = Table::new(&config.hash, &["timestep", "mean_episode_reward", "episodes"]);
            for point in &outcome.curve {
                curve.push(
                    seed,
                    vec![
                        point.timestep.to_string(),
                        point.mean_episode_reward.to_string(),
                        point.episodes.to_string(),
                    ],
                );
            }
            curve.write(&layout.curve(seed))?;
            Checkpoint {
                format_version: CHECKPOINT_FORMAT,
                version: VERSION.to_string(),
                config_hash: config.hash.clone(),
                seed,
                env: config.config.experiment.env,
                mask: mask.clone(),
                timesteps: outcome.timesteps,
                policy: outcome.policy,
            }
            .save(&layout.checkpoint(seed))?;
            eprintln!("[{} seed {seed}] wrote {}", config.hash, layout.checkpoint(seed).display());
            Ok(())
        })
        .collect()
}

fn check_dimensions(policy: &PolicyBundle, observation_dim: usize, actions: usize) -> Result<()> {
    if policy.observation_dim() != observation_dim || policy.action_count() != actions {
        bail!(
            "checkpoint expects {} observations and {} actions, the configured environment has {observation_dim} and {actions}",
            policy.observation_dim(),
            policy.action_count()
        );
    }
    Ok(())
}

/// Per-episode metric values and the metric's name.
fn evaluate_policy(config: &LoadedConfig, policy: &PolicyBundle, seed: u64) -> Result<(&'static str, Vec<f64>)> {
    let episodes = config.config.experiment.eval_episodes;
    let eval_seed = config.config.experiment.eval_seed;
    Ok(match config.mask()? {
        MaskChoice::PaintShop(level) => {
            let ps = config.paintshop();
            check_dimensions(policy, ps.observation_dim(), ps.action_count())?;
            let instances = experiment::paintshop_instances(&ps, episodes, eval_seed);
            let changes = experiment::evaluate_paintshop(policy, &ps, level, &instances, derive_seed(seed, 99));
            ("color_changes", changes.into_iter().map(|c| c as f64).collect())
        }
        MaskChoice::Lms(theta) => {
            let lms_config = config.lms()?;
            let env = LmsEnv::new(lms_config.clone());
            check_dimensions(policy, env.observation_dim(), env.action_count())?;
            let solved = experiment::evaluate_lms(policy, &lms_config, theta, episodes, eval_seed);
            ("solved", solved.into_iter().map(|s| if s { 1.0 } else { 0.0 }).collect())
        }
        MaskChoice::Inventory(kind) => {
            let inv = config.inventory()?;
            let env = InventoryEnv::new(inv.clone());
            check_dimensions(policy, env.observation_dim(), env.action_count())?;
            let costs = experiment::evaluate_inventory(policy, &inv, kind, episodes, eval_seed);
            ("cost_per_step", costs)
        }
    })
}

fn metric_table(config: &LoadedConfig, seed: u64, metric: &str, values: &[f64]) -> Result<Table> {
    let env = config.config.experiment.env.as_str();
    let mask = config.mask()?.label();
    let mut table = Table::new(&config.hash, &EVAL_COLUMNS);
    for (k, v) in values.iter().enumerate() {
        table.push(seed, vec![env.into(), mask.clone(), k.to_string(), metric.into(), v.to_string()]);
    }
    let (mean, _) = experiment::mean_and_std_error(values);
    table.push(seed, vec![env.into(), mask, "mean".into(), metric.into(), mean.to_string()]);
    Ok(table)
}

/// Evaluates every seed's checkpoint on the shared evaluation episodes.
pub fn eval(config: &LoadedConfig) -> Result<()> {
    let layout = layout(config);
    config
        .config
        .experiment
        .seeds
        .par_iter()
        .map(|&seed| -> Result<()> {
            let checkpoint = Checkpoint::load(&layout.checkpoint(seed))?;
            if checkpoint.env != config.config.experiment.env {
                bail!(
                    "checkpoint was trained on {} but the config selects {}",
                    checkpoint.env.as_str(),
                    config.config.experiment.env.as_str()
                );
            }
            let (metric, values) = evaluate_policy(config, &checkpoint.policy, seed)?;
            let (mean, se) = experiment::mean_and_std_error(&values);
            println!("seed {seed}: mean {metric} {mean:.4} (se {se:.4}, {} episodes)", values.len());
            metric_table(config, seed, metric, &values)?.write(&layout.eval(seed))
        })
        .collect()
}

/// Runs the environment's non-learning baseline on the evaluation episodes.
pub fn baseline(config: &LoadedConfig) -> Result<()> {
    let episodes = config.config.experiment.eval_episodes;
    let eval_seed = config.config.experiment.eval_seed;
    let (name, metric, values) = match config.config.experiment.env {
        EnvKind::Paintshop => {
            let ps = config.paintshop();
            let instances = experiment::paintshop_instances(&ps, episodes, eval_seed);
            let changes = experiment::greedy_paintshop(&ps, &instances, derive_seed(eval_seed, 99));
            ("greedy", "color_changes", changes.into_iter().map(|c| c as f64).collect())
        }
        EnvKind::Lms => {
            let solved = experiment::lms_threshold_rule(&config.lms()?, episodes, eval_seed);
            ("threshold_rule", "solved", solved.into_iter().map(|s| if s { 1.0 } else { 0.0 }).collect())
        }
        EnvKind::Inventory => {
            let inv = config.inventory()?;
            ("base_stock", "cost_per_step", experiment::base_stock_inventory(&inv, episodes, eval_seed))
        }
    };
    let values: Vec<f64> = values;
    let (mean, se) = experiment::mean_and_std_error(&values);
    println!("{name}: mean {metric} {mean:.4} (se {se:.4}, {} episodes)", values.len());
    let env = config.config.experiment.env.as_str();
    let mut table = Table::new(&config.hash, &["env", "baseline", "episode", "metric", "value"]);
    for (k, v) in values.iter().enumerate() {
        table.push(eval_seed, vec![env.into(), name.into(), k.to_string(), metric.into(), v.to_string()]);
    }
    table.push(eval_seed, vec![env.into(), name.into(), "mean".into(), metric.into(), mean.to_string()]);
    table.write(&layout(config).baseline())
}

/// Exact optimum of a small instance described by the `[oracle]` table.
pub fn oracle(config: &LoadedConfig) -> Result<()> {
    let section = &config.config.oracle;
    let mut table = Table::new(&config.hash, &["env", "quantity", "value"]);
    let env = config.config.experiment.env.as_str();
    let seed = section.instance_seed;
    match config.config.experiment.env {
        EnvKind::Paintshop => {
            let sequence = if section.sequence.is_empty() {
                let ps = config.paintshop().with_sequence_length(section.cars);
                paintshop::generate_instance(derive_seed(seed, 0), &ps)
            } else {
                section.sequence.clone()
            };
            let ps = config.paintshop().with_sequence_length(sequence.len());
            let result = oracle::paintshop_optimum(&ps, &sequence).map_err(oracle_refusal)?;
            println!(
                "sequence {sequence:?}: minimum colour changes {} (actions {:?})",
                result.color_changes, result.actions
            );
            table.push(seed, vec![env.into(), "min_color_changes".into(), result.color_changes.to_string()]);
        }
        EnvKind::Inventory => {
            let base = config.inventory()?;
            let small = InvConfig {
                lead_mode: LeadMode::Deterministic,
                max_lead: section.max_lead,
                demand_mean: section.demand_mean,
                grid_points: section.grid_points,
                horizon: section.horizon,
                ..base
            };
            small.validate().map_err(|m| field(config, "oracle", m))?;
            let mut dp = InventoryDp::new(&small, section.max_demand).map_err(oracle_refusal)?;
            let (value, _) = dp.optimal(0, 0, &vec![0; small.max_lead]);
            let cost = -value;
            println!(
                "optimal expected cost over {} periods: {cost:.6} ({:.6} per period)",
                small.horizon,
                cost / small.horizon as f64
            );
            table.push(seed, vec![env.into(), "optimal_total_cost".into(), cost.to_string()]);
            table.push(seed, vec![env.into(), "optimal_cost_per_step".into(), (cost / small.horizon as f64).to_string()]);
        }
        EnvKind::Lms => {
            return Err(field(config, "experiment.env", "no oracle is defined for lms; use `baseline`").into());
        }
    }
    table.write(&layout(config).oracle())
}

fn field(config: &LoadedConfig, name: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        path: config.source.clone(),
        field: name.into(),
        message: message.into(),
    }
}

fn oracle_refusal(err: oracle::OracleError) -> anyhow::Error {
    anyhow::Error::new(err).context("refusing the oracle request")
}

/// Concatenates the per-seed learning curves of a config into one CSV.
pub fn curves(config: &LoadedConfig) -> Result<()> {
    let layout = layout(config);
    let mut header: Option<csv::StringRecord> = None;
    let mut writer = csv::Writer::from_writer(Vec::new());
    for &seed in &config.config.experiment.seeds {
        let path = layout.curve(seed);
        let mut reader = csv::Reader::from_path(&path).with_context(|| format!("reading {}", path.display()))?;
        let h = reader.headers()?.clone();
        match &header {
            None => {
                writer.write_record(&h)?;
                header = Some(h);
            }
            Some(existing) if *existing != h => bail!("{} has a different header", path.display()),
            Some(_) => {}
        }
        for record in reader.records() {
            writer.write_record(&record?)?;
        }
    }
    let bytes = writer.into_inner().map_err(|e| e.into_error())?;
    let out = layout.curves();
    crate::output::write_atomic(&out, &bytes)?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn require_file(path: &Path) -> Result<(), ConfigError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(ConfigError::Read {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        })
    }
}
