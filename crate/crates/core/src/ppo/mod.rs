//! Proximal policy optimisation with masked categorical policies.
//!
//! Separate actor and critic networks (two tanh layers of 64 units each), GAE
//! advantages, the clipped surrogate objective and Adam. Masks enter only through
//! the admissible-action bitvectors recorded during rollouts.

pub mod nn;

use std::collections::VecDeque;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::masking::{ActionSet, MaskStack, MaskedDistribution};
use crate::mdp::{derive_seed, stream_rng, Environment, RolloutPolicy, RolloutRunner, Trajectory};
use nn::Mlp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub horizon: usize,
    pub clip: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub adam_eps: f64,
    pub minibatch: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub hidden: Vec<usize>,
    pub max_grad_norm: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            horizon: 2048,
            clip: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.0,
            epochs: 10,
            learning_rate: 3e-4,
            adam_eps: 1e-5,
            minibatch: 64,
            gamma: 0.99,
            gae_lambda: 0.95,
            hidden: vec![64, 64],
            max_grad_norm: 0.5,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.horizon == 0 || self.minibatch == 0 || self.epochs == 0 {
            return Err("horizon, minibatch and epochs must be positive".into());
        }
        if self.hidden.contains(&0) {
            return Err("hidden layer sizes must be positive".into());
        }
        for (name, v) in [
            ("clip", self.clip),
            ("learning_rate", self.learning_rate),
            ("adam_eps", self.adam_eps),
            ("max_grad_norm", self.max_grad_norm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [("gamma", self.gamma), ("gae_lambda", self.gae_lambda)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !(self.value_coef >= 0.0 && self.entropy_coef >= 0.0) {
            return Err("loss coefficients must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PpoError {
    #[error(
        "non-finite loss in epoch {epoch}, minibatch {minibatch}: \
         policy {policy_loss}, value {value_loss}, entropy {entropy}"
    )]
    NonFiniteLoss {
        epoch: usize,
        minibatch: usize,
        policy_loss: f64,
        value_loss: f64,
        entropy: f64,
    },
    #[error("trajectory does not fit the policy: {0}")]
    Shape(String),
}

/// Adam with bias correction; moments have the same layout as the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl Adam {
    pub fn new(parameters: usize, eps: f64) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps,
            step: 0,
            first: vec![0.0; parameters],
            second: vec![0.0; parameters],
        }
    }

    pub fn update<'a>(
        &mut self,
        params: impl Iterator<Item = &'a mut f64>,
        grads: &[f64],
        learning_rate: f64,
    ) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        let mut count = 0;
        for (((p, &g), m), v) in params
            .zip(grads)
            .zip(self.first.iter_mut())
            .zip(self.second.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= learning_rate * (*m / c1) / ((*v / c2).sqrt() + self.eps);
            count += 1;
        }
        assert_eq!(count, grads.len(), "gradient length must match parameters");
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMode {
    /// Sample from the masked distribution.
    Sample,
    /// Most probable admissible action.
    Greedy,
}

/// Actor, critic and optimizer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyBundle {
    pub config: PpoConfig,
    pub actor: Mlp,
    pub critic: Mlp,
    pub optimizer: Adam,
    pub updates: u64,
}

impl PolicyBundle {
    pub fn new<R: Rng + ?Sized>(
        observation_dim: usize,
        action_count: usize,
        config: PpoConfig,
        rng: &mut R,
    ) -> Self {
        let mut actor_sizes = vec![observation_dim];
        actor_sizes.extend(&config.hidden);
        let mut critic_sizes = actor_sizes.clone();
        actor_sizes.push(action_count);
        critic_sizes.push(1);
        let actor = Mlp::new(&actor_sizes, 0.01, rng);
        let critic = Mlp::new(&critic_sizes, 1.0, rng);
        let optimizer = Adam::new(
            actor.parameter_count() + critic.parameter_count(),
            config.adam_eps,
        );
        Self {
            config,
            actor,
            critic,
            optimizer,
            updates: 0,
        }
    }

    pub fn observation_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn action_count(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn logits(&self, observation: &[f64]) -> Vec<f64> {
        self.actor.forward(observation)
    }

    pub fn value(&self, observation: &[f64]) -> f64 {
        self.critic.forward(observation)[0]
    }

    pub fn distribution(&self, observation: &[f64], admissible: &ActionSet) -> MaskedDistribution {
        MaskedDistribution::new(&self.logits(observation), admissible.clone())
            .expect("admissible set must be non-empty")
    }

    pub fn act<R: Rng + ?Sized>(
        &self,
        observation: &[f64],
        admissible: &ActionSet,
        mode: ActionMode,
        rng: &mut R,
    ) -> usize {
        let dist = self.distribution(observation, admissible);
        match mode {
            ActionMode::Sample => dist.sample(rng),
            ActionMode::Greedy => dist.mode(),
        }
    }

    fn parameters_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.actor.params_mut().chain(self.critic.params_mut())
    }
}

impl RolloutPolicy for PolicyBundle {
    fn logits_and_value(&self, observation: &[f64]) -> (Vec<f64>, f64) {
        (self.logits(observation), self.value(observation))
    }
}

/// Advantages and return targets for a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Advantages {
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

/// Generalised advantage estimation, computed backwards and reset at episode
/// boundaries. Returns are `advantage + value`; advantages are not normalised.
pub fn gae(trajectory: &Trajectory, gamma: f64, lambda: f64) -> Advantages {
    let n = trajectory.len();
    let mut advantages = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 == n {
            trajectory.bootstrap_value
        } else {
            trajectory.values[t + 1]
        };
        let live = if trajectory.dones[t] { 0.0 } else { 1.0 };
        let delta = trajectory.rewards[t] + gamma * next_value * live - trajectory.values[t];
        running = delta + gamma * lambda * live * running;
        advantages[t] = running;
    }
    let returns = advantages
        .iter()
        .zip(&trajectory.values)
        .map(|(a, v)| a + v)
        .collect();
    Advantages { advantages, returns }
}

/// Shifts and scales to zero mean and unit (population) standard deviation.
pub fn normalize(values: &mut [f64]) {
    let n = values.len();
    if n == 0 {
        return;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt() + 1e-8;
    for v in values.iter_mut() {
        *v = (*v - mean) / std;
    }
}

/// Averages over one update call.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct UpdateDiagnostics {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
    /// Probability ratio of every sample in the very first minibatch, before any
    /// optimizer step.
    pub initial_ratios: Vec<f64>,
    /// Mean value loss per epoch.
    pub epoch_value_losses: Vec<f64>,
}

struct MinibatchLoss {
    policy_loss: f64,
    value_loss: f64,
    entropy: f64,
    approx_kl: f64,
    clipped: usize,
    ratios: Vec<f64>,
    actor_grad: Array2<f64>,
    critic_grad: Array2<f64>,
}

fn minibatch_loss(
    bundle: &PolicyBundle,
    logits: &Array2<f64>,
    values: &Array2<f64>,
    trajectory: &Trajectory,
    indices: &[usize],
    advantages: &[f64],
    returns: &[f64],
) -> MinibatchLoss {
    let config = &bundle.config;
    let b = indices.len() as f64;
    let mut out = MinibatchLoss {
        policy_loss: 0.0,
        value_loss: 0.0,
        entropy: 0.0,
        approx_kl: 0.0,
        clipped: 0,
        ratios: Vec::with_capacity(indices.len()),
        actor_grad: Array2::zeros(logits.dim()),
        critic_grad: Array2::zeros(values.dim()),
    };
    for (row, &i) in indices.iter().enumerate() {
        let row_logits: Vec<f64> = logits.row(row).to_vec();
        let dist = MaskedDistribution::new(&row_logits, trajectory.admissible[i].clone())
            .expect("recorded bitvectors are non-empty");
        let action = trajectory.actions[i];
        let log_ratio = dist.log_prob(action) - trajectory.log_probs[i];
        let ratio = log_ratio.exp();
        let adv = advantages[i];
        let unclipped = ratio * adv;
        let clipped = ratio.clamp(1.0 - config.clip, 1.0 + config.clip) * adv;
        out.policy_loss -= unclipped.min(clipped) / b;
        if (ratio - 1.0).abs() > config.clip {
            out.clipped += 1;
        }
        out.approx_kl += ((ratio - 1.0) - log_ratio) / b;
        out.ratios.push(ratio);

        // d(loss)/d(log π(a)) for the clipped surrogate.
        let d_log_prob = if unclipped <= clipped { -ratio * adv / b } else { 0.0 };
        let entropy = dist.entropy();
        out.entropy += entropy / b;
        let mut grad_row = out.actor_grad.row_mut(row);
        if d_log_prob != 0.0 {
            for (g, dl) in grad_row.iter_mut().zip(dist.grad_log_prob(action)) {
                *g += d_log_prob * dl;
            }
        }
        if config.entropy_coef != 0.0 {
            for (g, de) in grad_row.iter_mut().zip(dist.grad_entropy()) {
                *g -= config.entropy_coef * de / b;
            }
        }

        let err = values[[row, 0]] - returns[i];
        out.value_loss += err * err / b;
        out.critic_grad[[row, 0]] = config.value_coef * 2.0 * err / b;
    }
    out
}

/// One PPO update over a trajectory: `epochs` passes of shuffled minibatches,
/// one Adam step per minibatch, global gradient-norm clipping.
pub fn ppo_update<R: Rng + ?Sized>(
    bundle: &mut PolicyBundle,
    trajectory: &Trajectory,
    rng: &mut R,
) -> Result<UpdateDiagnostics, PpoError> {
    if trajectory.observation_dim != bundle.observation_dim() {
        return Err(PpoError::Shape(format!(
            "observation width {} vs network input {}",
            trajectory.observation_dim,
            bundle.observation_dim()
        )));
    }
    if let Some(set) = trajectory.admissible.iter().find(|s| s.len() != bundle.action_count()) {
        return Err(PpoError::Shape(format!(
            "bitvector width {} vs {} actions",
            set.len(),
            bundle.action_count()
        )));
    }
    trajectory.validate().map_err(PpoError::Shape)?;
    let config = bundle.config.clone();
    let Advantages {
        mut advantages,
        returns,
    } = gae(trajectory, config.gamma, config.gae_lambda);
    normalize(&mut advantages);

    let n = trajectory.len();
    let dim = trajectory.observation_dim;
    let mut order: Vec<usize> = (0..n).collect();
    let mut diag = UpdateDiagnostics::default();
    let mut minibatches = 0usize;
    let mut samples = 0usize;
    let mut clipped = 0usize;
    for epoch in 0..config.epochs {
        order.shuffle(rng);
        let mut epoch_value = 0.0;
        let mut epoch_batches = 0;
        for (mb, indices) in order.chunks(config.minibatch).enumerate() {
            let obs = Array2::from_shape_fn((indices.len(), dim), |(r, c)| {
                trajectory.observation(indices[r])[c]
            });
            let actor_cache = bundle.actor.forward_batch(obs.view());
            let critic_cache = bundle.critic.forward_batch(obs.view());
            let loss = minibatch_loss(
                bundle,
                actor_cache.output(),
                critic_cache.output(),
                trajectory,
                indices,
                &advantages,
                &returns,
            );
            let total = loss.policy_loss + config.value_coef * loss.value_loss
                - config.entropy_coef * loss.entropy;
            if !total.is_finite() {
                return Err(PpoError::NonFiniteLoss {
                    epoch,
                    minibatch: mb,
                    policy_loss: loss.policy_loss,
                    value_loss: loss.value_loss,
                    entropy: loss.entropy,
                });
            }
            if epoch == 0 && mb == 0 {
                diag.initial_ratios = loss.ratios.clone();
            }
            let actor_grads = bundle.actor.backward(&actor_cache, &loss.actor_grad);
            let critic_grads = bundle.critic.backward(&critic_cache, &loss.critic_grad);
            let mut grads: Vec<f64> = actor_grads.params().chain(critic_grads.params()).copied().collect();
            let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
            let scale = config.max_grad_norm / (norm + 1e-6);
            if scale < 1.0 {
                grads.iter_mut().for_each(|g| *g *= scale);
            }
            let lr = config.learning_rate;
            let mut optimizer = std::mem::replace(&mut bundle.optimizer, Adam::new(0, 0.0));
            optimizer.update(bundle.parameters_mut(), &grads, lr);
            bundle.optimizer = optimizer;

            diag.policy_loss += loss.policy_loss;
            diag.value_loss += loss.value_loss;
            diag.entropy += loss.entropy;
            diag.approx_kl += loss.approx_kl;
            diag.grad_norm += norm;
            clipped += loss.clipped;
            samples += indices.len();
            minibatches += 1;
            epoch_value += loss.value_loss;
            epoch_batches += 1;
        }
        diag.epoch_value_losses.push(epoch_value / epoch_batches.max(1) as f64);
    }
    let m = minibatches.max(1) as f64;
    diag.policy_loss /= m;
    diag.value_loss /= m;
    diag.entropy /= m;
    diag.approx_kl /= m;
    diag.grad_norm /= m;
    diag.clip_fraction = clipped as f64 / samples.max(1) as f64;
    bundle.updates += 1;
    Ok(diag)
}

/// One learning-curve point: mean return of the last (up to) 100 completed
/// episodes after the rollout ending at `timestep`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub timestep: usize,
    pub mean_episode_reward: f64,
    pub episodes: usize,
}

#[derive(Debug, Clone)]
pub struct TrainProgress<'a> {
    pub iteration: usize,
    pub timestep: usize,
    pub point: Option<CurvePoint>,
    pub diagnostics: &'a UpdateDiagnostics,
    pub fallbacks: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: PolicyBundle,
    pub curve: Vec<CurvePoint>,
    pub timesteps: usize,
    pub fallbacks: usize,
}

/// Number of rollout/update cycles for a timestep budget.
pub fn iterations_for(total_timesteps: usize, horizon: usize) -> usize {
    total_timesteps.div_ceil(horizon)
}

/// Trains a fresh policy. Network initialisation, episode seeds, action sampling
/// and minibatch shuffling draw from separate streams of `seed`.
pub fn train<E, F>(
    env: E,
    masks: MaskStack<E::State>,
    config: PpoConfig,
    total_timesteps: usize,
    seed: u64,
    mut callback: F,
) -> Result<TrainOutcome, PpoError>
where
    E: Environment,
    F: FnMut(&TrainProgress),
{
    config.validate().map_err(PpoError::Shape)?;
    let mut init_rng = stream_rng(seed, 0);
    let mut policy = PolicyBundle::new(env.observation_dim(), env.action_count(), config, &mut init_rng);
    let mut runner = RolloutRunner::new(env, masks, derive_seed(seed, 1));
    let mut sample_rng = stream_rng(seed, 2);
    let mut shuffle_rng = stream_rng(seed, 3);
    let horizon = policy.config.horizon;
    let mut recent: VecDeque<f64> = VecDeque::with_capacity(100);
    let mut curve = Vec::new();
    let mut timesteps = 0;
    let mut fallbacks = 0;
    for iteration in 0..iterations_for(total_timesteps, horizon) {
        let trajectory = runner.collect(&policy, horizon, &mut sample_rng);
        timesteps += trajectory.len();
        fallbacks += trajectory.fallbacks;
        for &r in &trajectory.episode_returns {
            if recent.len() == 100 {
                recent.pop_front();
            }
            recent.push_back(r);
        }
        let point = (!recent.is_empty()).then(|| CurvePoint {
            timestep: timesteps,
            mean_episode_reward: recent.iter().sum::<f64>() / recent.len() as f64,
            episodes: recent.len(),
        });
        curve.extend(point);
        let diagnostics = ppo_update(&mut policy, &trajectory, &mut shuffle_rng)?;
        callback(&TrainProgress {
            iteration,
            timestep: timesteps,
            point,
            diagnostics: &diagnostics,
            fallbacks: trajectory.fallbacks,
        });
    }
    Ok(TrainOutcome {
        policy,
        curve,
        timesteps,
        fallbacks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn trajectory(rewards: &[f64], values: &[f64], dones: &[bool], bootstrap: f64) -> Trajectory {
        let mut t = Trajectory::new(1);
        for i in 0..rewards.len() {
            t.push(&[0.0], 0, ActionSet::all(2), rewards[i], values[i], 0.0, dones[i]);
        }
        t.bootstrap_value = bootstrap;
        t
    }

    #[test]
    fn single_step_episode_advantage() {
        let t = trajectory(&[1.0], &[0.0], &[true], 5.0);
        assert_eq!(gae(&t, 0.99, 0.95).advantages, vec![1.0]);
    }

    #[test]
    fn undiscounted_gae_is_return_to_go() {
        let t = trajectory(&[1.0, 2.0, 3.0, 4.0], &[0.0; 4], &[false, true, false, false], 0.0);
        let adv = gae(&t, 1.0, 1.0);
        assert_eq!(adv.advantages, vec![3.0, 2.0, 7.0, 4.0]);
        assert_eq!(adv.returns, adv.advantages);
    }

    #[test]
    fn normalization_moments() {
        let mut v: Vec<f64> = (0..50).map(|i| (i as f64).sqrt() * 3.0 - 7.0).collect();
        normalize(&mut v);
        let mean = v.iter().sum::<f64>() / 50.0;
        let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 50.0).sqrt();
        assert!(mean.abs() < 1e-6);
        assert!((std - 1.0).abs() < 1e-6);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut adam = Adam::new(2, 1e-8);
        let mut params = [1.0, -1.0];
        adam.update(params.iter_mut(), &[0.5, -3.0], 0.1);
        assert!((params[0] - 0.9).abs() < 1e-6);
        assert!((params[1] + 0.9).abs() < 1e-6);
    }

    #[test]
    fn bundle_shapes_and_initial_policy_is_near_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bundle = PolicyBundle::new(7, 5, PpoConfig::default(), &mut rng);
        assert_eq!(bundle.observation_dim(), 7);
        assert_eq!(bundle.action_count(), 5);
        let dist = bundle.distribution(&[0.5; 7], &ActionSet::all(5));
        assert!(dist.probs().iter().all(|p| (p - 0.2).abs() < 0.02));
    }

    fn random_batch(seed: u64, n: usize, dim: usize, actions: usize) -> Trajectory {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Trajectory::new(dim);
        for i in 0..n {
            let obs: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut allowed = ActionSet::from_fn(actions, |_| rng.random_bool(0.6));
            allowed.insert(i % actions);
            let action = allowed.iter().nth(rng.random_range(0..allowed.count())).unwrap();
            let old = -rng.random_range(0.1..2.0);
            t.push(&obs, action, allowed, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), old, i % 5 == 4);
        }
        t
    }

    #[test]
    fn minibatch_gradient_matches_finite_differences() {
        let config = PpoConfig {
            hidden: vec![5, 4],
            entropy_coef: 0.05,
            ..PpoConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut bundle = PolicyBundle::new(3, 4, config, &mut rng);
        // Larger output weights so the clipped region is exercised.
        bundle.actor.layers[2].weight.mapv_inplace(|w| w * 150.0);
        let traj = random_batch(8, 12, 3, 4);
        let indices: Vec<usize> = (0..12).collect();
        let advantages: Vec<f64> = (0..12).map(|i| (i as f64 - 5.5) / 3.0).collect();
        let returns: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin()).collect();
        let obs = Array2::from_shape_fn((12, 3), |(r, c)| traj.observation(r)[c]);
        let total = |b: &PolicyBundle| {
            let a = b.actor.forward_batch(obs.view());
            let c = b.critic.forward_batch(obs.view());
            let l = minibatch_loss(b, a.output(), c.output(), &traj, &indices, &advantages, &returns);
            l.policy_loss + b.config.value_coef * l.value_loss - b.config.entropy_coef * l.entropy
        };
        let a = bundle.actor.forward_batch(obs.view());
        let c = bundle.critic.forward_batch(obs.view());
        let l = minibatch_loss(&bundle, a.output(), c.output(), &traj, &indices, &advantages, &returns);
        assert!(l.clipped > 0 && l.clipped < 12, "clipped {}", l.clipped);
        let grads: Vec<f64> = bundle
            .actor
            .backward(&a, &l.actor_grad)
            .params()
            .chain(bundle.critic.backward(&c, &l.critic_grad).params())
            .copied()
            .collect();
        let h = 1e-6;
        for (k, g) in grads.iter().enumerate() {
            let mut plus = bundle.clone();
            *plus.parameters_mut().nth(k).unwrap() += h;
            let mut minus = bundle.clone();
            *minus.parameters_mut().nth(k).unwrap() -= h;
            let numeric = (total(&plus) - total(&minus)) / (2.0 * h);
            assert!((numeric - g).abs() < 1e-5 * (1.0 + g.abs()), "param {k}: {numeric} vs {g}");
        }
    }

    #[test]
    fn iteration_count() {
        assert_eq!(iterations_for(4096, 2048), 2);
        assert_eq!(iterations_for(4097, 2048), 3);
        assert_eq!(iterations_for(1, 2048), 1);
    }
}
