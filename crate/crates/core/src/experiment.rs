//! Evaluation protocols and non-learning baselines shared by the CLI and the
//! acceptance suite.
//!
//! Evaluation episode `k` always uses `derive_seed(eval_seed, k)`, so every mask
//! level and policy is scored on the same instances, forecast noise and demand.

use crate::env::inventory::{self, InvConfig, InvMaskKind, InventoryEnv};
use crate::env::lms::{self, LmsConfig, LmsEnv};
use crate::env::paintshop::{self, Color, MaskLevel, PaintShopConfig, PaintShopEnv};
use crate::masking::MaskStack;
use crate::mdp::{derive_seed, play_episode, stream_rng, EpisodeRecord, Environment};
use crate::ppo::{ActionMode, PolicyBundle};

/// Plays one episode per seed with a trained policy.
pub fn evaluate_policy<E: Environment>(
    env: &mut E,
    policy: &PolicyBundle,
    masks: &MaskStack<E::State>,
    seeds: &[u64],
    mode: ActionMode,
    sampling_seed: u64,
) -> Vec<EpisodeRecord<E::State>> {
    seeds
        .iter()
        .enumerate()
        .map(|(k, &seed)| {
            let mut rng = stream_rng(sampling_seed, k as u64);
            play_episode(env, seed, masks, |_, obs, admissible| {
                policy.act(obs, admissible, mode, &mut rng)
            })
        })
        .collect()
}

pub fn episode_seeds(eval_seed: u64, episodes: usize) -> Vec<u64> {
    (0..episodes as u64).map(|k| derive_seed(eval_seed, k)).collect()
}

/// The evaluation instances: sequence `k` is generated from `derive_seed(eval_seed, k)`.
pub fn paintshop_instances(config: &PaintShopConfig, count: usize, eval_seed: u64) -> Vec<Vec<Color>> {
    episode_seeds(eval_seed, count)
        .into_iter()
        .map(|s| paintshop::generate_instance(s, config))
        .collect()
}

/// Colour changes per instance for a trained policy. Actions are sampled from
/// the masked policy; truncated episodes are charged by
/// [`paintshop::evaluation_color_changes`].
pub fn evaluate_paintshop(
    policy: &PolicyBundle,
    config: &PaintShopConfig,
    level: MaskLevel,
    instances: &[Vec<Color>],
    sampling_seed: u64,
) -> Vec<usize> {
    let masks = paintshop::mask_stack(level);
    instances
        .iter()
        .enumerate()
        .map(|(k, instance)| {
            let mut env = PaintShopEnv::with_instance(config.clone(), instance.clone());
            let mut rng = stream_rng(sampling_seed, k as u64);
            let record = play_episode(&mut env, 0, &masks, |_, obs, admissible| {
                policy.act(obs, admissible, ActionMode::Sample, &mut rng)
            });
            paintshop::evaluation_color_changes(&record.final_state)
        })
        .collect()
}

/// Colour changes per instance for the greedy heuristic.
pub fn greedy_paintshop(config: &PaintShopConfig, instances: &[Vec<Color>], sampling_seed: u64) -> Vec<usize> {
    instances
        .iter()
        .enumerate()
        .map(|(k, instance)| {
            let mut env = PaintShopEnv::with_instance(config.clone(), instance.clone());
            let mut rng = stream_rng(sampling_seed, k as u64);
            let record = play_episode(&mut env, 0, &MaskStack::unmasked(), |s, _, _| {
                paintshop::greedy_heuristic(s, &mut rng)
            });
            paintshop::evaluation_color_changes(&record.final_state)
        })
        .collect()
}

/// Whether each evaluation day ended with the peak below the threshold, acting
/// greedily with respect to the masked policy.
pub fn evaluate_lms(
    policy: &PolicyBundle,
    config: &LmsConfig,
    theta: Option<f64>,
    episodes: usize,
    eval_seed: u64,
) -> Vec<bool> {
    let mut env = LmsEnv::new(config.clone());
    let masks = lms::mask_stack(theta);
    let seeds = episode_seeds(eval_seed, episodes);
    evaluate_policy(&mut env, policy, &masks, &seeds, ActionMode::Greedy, eval_seed)
        .into_iter()
        .map(|r| r.total_reward > 0.0)
        .collect()
}

/// The rule "turn off iff the forecast reaches ζ" on the evaluation days.
pub fn lms_threshold_rule(config: &LmsConfig, episodes: usize, eval_seed: u64) -> Vec<bool> {
    let mut env = LmsEnv::new(config.clone());
    let zeta = config.zeta;
    episode_seeds(eval_seed, episodes)
        .into_iter()
        .map(|seed| {
            play_episode(&mut env, seed, &MaskStack::unmasked(), |s, _, _| lms::threshold_rule(s, zeta))
                .total_reward
                > 0.0
        })
        .collect()
}

/// Mean cost per period of each evaluation episode, acting greedily with respect
/// to the masked policy.
pub fn evaluate_inventory(
    policy: &PolicyBundle,
    config: &InvConfig,
    kind: InvMaskKind,
    episodes: usize,
    eval_seed: u64,
) -> Vec<f64> {
    let mut env = InventoryEnv::new(config.clone());
    let masks = inventory::mask_stack(kind, config);
    let seeds = episode_seeds(eval_seed, episodes);
    evaluate_policy(&mut env, policy, &masks, &seeds, ActionMode::Greedy, eval_seed)
        .into_iter()
        .map(|r| -r.total_reward / config.horizon as f64)
        .collect()
}

/// Base-stock costs on the same evaluation episodes as [`evaluate_inventory`].
pub fn base_stock_inventory(config: &InvConfig, episodes: usize, eval_seed: u64) -> Vec<f64> {
    let mut env = InventoryEnv::new(config.clone());
    episode_seeds(eval_seed, episodes)
        .into_iter()
        .map(|seed| {
            let r = play_episode(&mut env, seed, &MaskStack::unmasked(), |s, _, _| {
                inventory::base_stock_policy(s, config)
            });
            -r.total_reward / config.horizon as f64
        })
        .collect()
}

/// Mean and standard error of the mean.
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
