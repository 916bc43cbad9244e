//! Environment contract and seeded rollout collection.
//!
//! Every environment exposes a fixed number of discrete actions `0..action_count`
//! and a fixed-width observation vector. Masks are evaluated on the structured
//! environment state rather than on the encoded observation, so the contract also
//! hands out a borrow of the current state.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::masking::{ActionSet, MaskStack, MaskedDistribution};

pub type Observation = Vec<f64>;

/// Anything that knows the size of its action space. Mask evaluation needs this to
/// decide whether a mask forbids at least one action.
pub trait ActionSpace {
    fn action_count(&self) -> usize;
}

/// Diagnostics attached to a step, e.g. `color_change` or `lost_sales`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Info {
    entries: Vec<(&'static str, f64)>,
}

impl Info {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &'static str, value: f64) -> Self {
        self.insert(key, value);
        self
    }

    pub fn insert(&mut self, key: &'static str, value: f64) {
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.entries.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    /// `true` when the key is present and non-zero.
    pub fn flag(&self, key: &str) -> bool {
        self.get(key).is_some_and(|v| v != 0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        self.entries.iter().copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: Info,
}

/// The environment contract.
///
/// `action_count` and `observation_dim` must not change over the lifetime of an
/// instance. Calling [`Environment::step`] on a finished episode or with an
/// out-of-range action is a programming error and panics; in-band invalid actions
/// (an empty lane, a full lane) are handled by the environment itself.
pub trait Environment {
    type State: ActionSpace + Clone;

    fn action_count(&self) -> usize;
    fn observation_dim(&self) -> usize;
    /// Maximum episode length, if the environment has one.
    fn horizon_limit(&self) -> Option<usize>;
    fn reset(&mut self, seed: u64) -> Observation;
    fn step(&mut self, action: usize) -> StepOutcome;
    fn state(&self) -> &Self::State;
    fn observe(&self) -> Observation;
    fn is_done(&self) -> bool;
}

/// Derives the seed of sub-stream `index` from a root seed.
///
/// The root seeds a ChaCha generator and the index selects its stream, so stream
/// `k` can be regenerated without replaying streams `0..k`.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(index);
    rng.next_u64()
}

/// A generator positioned on sub-stream `index` of `root`.
pub fn stream_rng(root: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, index))
}

/// A policy that can drive rollouts: unnormalised action logits plus a state-value
/// estimate for one observation.
pub trait RolloutPolicy {
    fn logits_and_value(&self, observation: &[f64]) -> (Vec<f64>, f64);
}

/// Per-timestep records of one rollout horizon.
///
/// `dones[t]` is set when the step taken at `t` ended an episode; the environment
/// was reset before `t + 1`. `bootstrap_value` is the critic's estimate for the
/// observation following the last record (zero when that step ended an episode).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub observation_dim: usize,
    observations: Vec<f64>,
    pub actions: Vec<usize>,
    pub admissible: Vec<ActionSet>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub dones: Vec<bool>,
    pub bootstrap_value: f64,
    /// Returns of the episodes that finished inside this rollout.
    pub episode_returns: Vec<f64>,
    /// Timesteps where the composed mask was empty and the validity mask was used.
    pub fallbacks: usize,
}

impl Trajectory {
    pub fn new(observation_dim: usize) -> Self {
        Self {
            observation_dim,
            observations: Vec::new(),
            actions: Vec::new(),
            admissible: Vec::new(),
            rewards: Vec::new(),
            values: Vec::new(),
            log_probs: Vec::new(),
            dones: Vec::new(),
            bootstrap_value: 0.0,
            episode_returns: Vec::new(),
            fallbacks: 0,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        observation: &[f64],
        action: usize,
        admissible: ActionSet,
        reward: f64,
        value: f64,
        log_prob: f64,
        done: bool,
    ) {
        assert_eq!(observation.len(), self.observation_dim, "observation width");
        self.observations.extend_from_slice(observation);
        self.actions.push(action);
        self.admissible.push(admissible);
        self.rewards.push(reward);
        self.values.push(value);
        self.log_probs.push(log_prob);
        self.dones.push(done);
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn observation(&self, t: usize) -> &[f64] {
        &self.observations[t * self.observation_dim..(t + 1) * self.observation_dim]
    }

    pub fn observations_flat(&self) -> &[f64] {
        &self.observations
    }

    /// Checks the structural invariants: equal lengths everywhere and every recorded
    /// action admissible under its own bitvector.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.actions.len();
        let lengths = [
            self.admissible.len(),
            self.rewards.len(),
            self.values.len(),
            self.log_probs.len(),
            self.dones.len(),
            self.observations.len() / self.observation_dim.max(1),
        ];
        if lengths.iter().any(|&l| l != n) {
            return Err(format!("ragged trajectory: {n} actions vs {lengths:?}"));
        }
        for (t, (a, set)) in self.actions.iter().zip(&self.admissible).enumerate() {
            if !set.contains(*a) {
                return Err(format!("step {t}: action {a} not admissible"));
            }
        }
        Ok(())
    }
}

/// Keeps an environment alive across rollout horizons, resetting it with
/// counter-split seeds whenever an episode ends.
pub struct RolloutRunner<E: Environment> {
    env: E,
    masks: MaskStack<E::State>,
    root_seed: u64,
    episode: u64,
    observation: Observation,
    episode_return: f64,
}

impl<E: Environment> RolloutRunner<E> {
    pub fn new(mut env: E, masks: MaskStack<E::State>, root_seed: u64) -> Self {
        let observation = env.reset(derive_seed(root_seed, 0));
        Self {
            env,
            masks,
            root_seed,
            episode: 0,
            observation,
            episode_return: 0.0,
        }
    }

    pub fn env(&self) -> &E {
        &self.env
    }

    pub fn masks(&self) -> &MaskStack<E::State> {
        &self.masks
    }

    /// Episodes started so far (including the one in progress).
    pub fn episodes_started(&self) -> u64 {
        self.episode + 1
    }

    pub fn collect<P, R>(&mut self, policy: &P, n_steps: usize, rng: &mut R) -> Trajectory
    where
        P: RolloutPolicy + ?Sized,
        R: Rng + ?Sized,
    {
        let mut trajectory = Trajectory::new(self.env.observation_dim());
        let mut last_done = false;
        for _ in 0..n_steps {
            let (logits, value) = policy.logits_and_value(&self.observation);
            assert_eq!(
                logits.len(),
                self.env.action_count(),
                "policy output width must equal the action count"
            );
            let admissible = self.masks.evaluate(self.env.state());
            if admissible.fell_back {
                trajectory.fallbacks += 1;
            }
            let dist = MaskedDistribution::new(&logits, admissible.set.clone())
                .expect("mask stack never yields an empty set");
            let action = dist.sample(rng);
            let log_prob = dist.log_prob(action);
            let outcome = self.env.step(action);
            self.episode_return += outcome.reward;
            trajectory.push(
                &self.observation,
                action,
                admissible.set,
                outcome.reward,
                value,
                log_prob,
                outcome.done,
            );
            last_done = outcome.done;
            if outcome.done {
                trajectory.episode_returns.push(self.episode_return);
                self.episode_return = 0.0;
                self.episode += 1;
                self.observation = self.env.reset(derive_seed(self.root_seed, self.episode));
            } else {
                self.observation = outcome.observation;
            }
        }
        trajectory.bootstrap_value = if last_done || n_steps == 0 {
            0.0
        } else {
            policy.logits_and_value(&self.observation).1
        };
        trajectory
    }
}

/// Collects exactly `n_steps` records from a fresh runner whose episode seeds are
/// derived from a root drawn from `rng`.
pub fn run_rollout<E, P, R>(
    env: E,
    policy: &P,
    masks: MaskStack<E::State>,
    n_steps: usize,
    rng: &mut R,
) -> Trajectory
where
    E: Environment,
    P: RolloutPolicy + ?Sized,
    R: Rng + ?Sized,
{
    let root = rng.next_u64();
    RolloutRunner::new(env, masks, root).collect(policy, n_steps, rng)
}

/// Summary of one complete episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord<S> {
    pub total_reward: f64,
    pub steps: usize,
    pub final_state: S,
    pub last_info: Info,
}

/// Plays one episode from `reset(seed)` to `done`, choosing actions with `choose`
/// among the admissible set produced by `masks`.
pub fn play_episode<E, F>(
    env: &mut E,
    seed: u64,
    masks: &MaskStack<E::State>,
    mut choose: F,
) -> EpisodeRecord<E::State>
where
    E: Environment,
    F: FnMut(&E::State, &[f64], &ActionSet) -> usize,
{
    let mut observation = env.reset(seed);
    let mut total_reward = 0.0;
    let mut steps = 0;
    loop {
        let admissible = masks.evaluate(env.state()).set;
        let action = choose(env.state(), &observation, &admissible);
        let outcome = env.step(action);
        total_reward += outcome.reward;
        steps += 1;
        if outcome.done {
            return EpisodeRecord {
                total_reward,
                steps,
                final_state: env.state().clone(),
                last_info: outcome.info,
            };
        }
        observation = outcome.observation;
    }
}
