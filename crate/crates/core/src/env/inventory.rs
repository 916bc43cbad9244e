//! Lost-sales inventory control with Poisson demand.
//!
//! Each period: the order at the head of the pipeline arrives, demand is served
//! from stock (unmet demand is lost), and a new order from the grid
//! `{0, Δ, …, 10Δ}` is placed with a deterministic or uniformly random lead time.
//! Holding costs `c` per unit left over and lost-sales costs `p` per unit short.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::masking::{
    heuristic_distance_mask, heuristic_threshold_mask, ActionSet, Mask, MaskStack,
    ThresholdDirection,
};
use crate::mdp::{derive_seed, ActionSpace, Environment, Info, Observation, StepOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeadMode {
    /// Every order arrives after exactly `N` periods.
    Deterministic,
    /// Lead times are uniform on `1..=N`.
    Stochastic,
}

impl LeadMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Deterministic => "det",
            Self::Stochastic => "stoch",
        }
    }
}

impl FromStr for LeadMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "det" | "deterministic" => Ok(Self::Deterministic),
            "stoch" | "stochastic" => Ok(Self::Stochastic),
            other => Err(format!("unknown lead mode `{other}` (expected det or stoch)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvConfig {
    pub holding_cost: f64,
    pub lost_sales_cost: f64,
    pub lead_mode: LeadMode,
    pub max_lead: usize,
    pub demand_mean: f64,
    pub horizon: usize,
    pub quantum: u32,
    pub grid_points: usize,
    pub base_stock: f64,
}

impl InvConfig {
    /// The published setting for a lost-sales cost and lead-time mode: `N = 4`
    /// deterministic or `N = 8` stochastic, `S = 18` for `p = 1` and `S = 25` for
    /// `p = 4`.
    pub fn standard(lost_sales_cost: f64, lead_mode: LeadMode) -> Self {
        let base_stock = if lost_sales_cost >= 4.0 { 25.0 } else { 18.0 };
        Self {
            holding_cost: 1.0,
            lost_sales_cost,
            lead_mode,
            max_lead: match lead_mode {
                LeadMode::Deterministic => 4,
                LeadMode::Stochastic => 8,
            },
            demand_mean: 5.0,
            horizon: 5000,
            quantum: 10,
            grid_points: 11,
            base_stock,
        }
    }

    pub fn action_count(&self) -> usize {
        self.grid_points
    }

    pub fn order_quantity(&self, action: usize) -> u32 {
        assert!(action < self.grid_points, "action {action} out of range");
        action as u32 * self.quantum
    }

    pub fn max_order(&self) -> u32 {
        self.order_quantity(self.grid_points - 1)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_lead == 0 {
            return Err("max_lead must be at least 1".into());
        }
        if self.quantum == 0 || self.grid_points == 0 {
            return Err("order grid must be non-empty".into());
        }
        if self.horizon == 0 {
            return Err("horizon must be at least 1".into());
        }
        for (name, v) in [
            ("holding_cost", self.holding_cost),
            ("lost_sales_cost", self.lost_sales_cost),
            ("demand_mean", self.demand_mean),
            ("base_stock", self.base_stock),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InvState {
    pub inventory: u32,
    /// `pipeline[i]` arrives in `i + 1` periods.
    pub pipeline: Vec<u32>,
    pub t: usize,
    pub ordered_total: u64,
    pub arrived_total: u64,
    grid_points: usize,
}

impl ActionSpace for InvState {
    fn action_count(&self) -> usize {
        self.grid_points
    }
}

impl fmt::Display for InvState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={} I={} Q={:?}", self.t, self.inventory, self.pipeline)
    }
}

impl InvState {
    pub fn new(config: &InvConfig, inventory: u32, pipeline: Vec<u32>) -> Self {
        assert_eq!(pipeline.len(), config.max_lead, "pipeline length must be N");
        Self {
            inventory,
            pipeline,
            t: 0,
            ordered_total: 0,
            arrived_total: 0,
            grid_points: config.grid_points,
        }
    }

    pub fn inventory_position(&self) -> u64 {
        self.inventory as u64 + self.pipeline.iter().map(|&q| q as u64).sum::<u64>()
    }

    pub fn in_transit(&self) -> u64 {
        self.pipeline.iter().map(|&q| q as u64).sum()
    }
}

/// Base-stock prescription `h(s) = S − I − ΣQ` (may be negative or off-grid).
pub fn base_stock_action(state: &InvState, base_stock: f64) -> f64 {
    base_stock - state.inventory_position() as f64
}

/// Grid action nearest to `max(0, h)`, rounding halves up and capping at the
/// largest order.
pub fn nearest_grid_action(config: &InvConfig, prescription: f64) -> usize {
    let h = prescription.max(0.0);
    let index = (h / config.quantum as f64 + 0.5).floor() as usize;
    index.min(config.grid_points - 1)
}

/// Poisson sample by inverse transform on one uniform draw.
pub fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    let u: f64 = rng.random();
    let mut k = 0u32;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u > cdf && p > 0.0 {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
    }
    k
}

pub fn encode(state: &InvState, config: &InvConfig) -> Observation {
    let scale = config.max_order().max(1) as f64;
    std::iter::once(state.inventory)
        .chain(state.pipeline.iter().copied())
        .map(|q| q as f64 / scale)
        .collect()
}

#[derive(Debug, Clone)]
pub struct InventoryEnv {
    config: InvConfig,
    demand_rng: ChaCha8Rng,
    lead_rng: ChaCha8Rng,
    state: InvState,
    done: bool,
}

impl InventoryEnv {
    pub fn new(config: InvConfig) -> Self {
        config.validate().expect("invalid inventory configuration");
        let state = InvState::new(&config, 0, vec![0; config.max_lead]);
        Self {
            config,
            demand_rng: ChaCha8Rng::seed_from_u64(0),
            lead_rng: ChaCha8Rng::seed_from_u64(1),
            state,
            done: true,
        }
    }

    pub fn config(&self) -> &InvConfig {
        &self.config
    }

    /// Resets to a given on-hand inventory and pipeline instead of the empty start.
    pub fn reset_to(&mut self, seed: u64, inventory: u32, pipeline: Vec<u32>) -> Observation {
        self.demand_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
        self.lead_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
        self.state = InvState::new(&self.config, inventory, pipeline);
        self.done = false;
        encode(&self.state, &self.config)
    }

    /// One period with an externally supplied demand and lead time.
    pub fn step_with(&mut self, action: usize, demand: u32, lead: usize) -> StepOutcome {
        assert!(!self.done, "step called on a finished episode");
        assert!(action < self.config.grid_points, "action {action} out of range");
        assert!((1..=self.config.max_lead).contains(&lead), "lead time {lead} out of range");
        let state = &mut self.state;
        let arrival = state.pipeline[0];
        state.arrived_total += arrival as u64;
        let on_hand = state.inventory as i64 + arrival as i64;
        state.pipeline.rotate_left(1);
        *state.pipeline.last_mut().expect("pipeline is non-empty") = 0;
        let net = on_hand - demand as i64;
        let reward = if net >= 0 {
            -self.config.holding_cost * net as f64
        } else {
            self.config.lost_sales_cost * net as f64
        };
        let lost = (-net).max(0);
        state.inventory = net.max(0) as u32;
        let quantity = self.config.order_quantity(action);
        state.pipeline[lead - 1] += quantity;
        state.ordered_total += quantity as u64;
        state.t += 1;
        self.done = state.t >= self.config.horizon;
        StepOutcome {
            observation: encode(state, &self.config),
            reward,
            done: self.done,
            info: Info::new()
                .with("demand", demand as f64)
                .with("lost_sales", lost as f64)
                .with("order", quantity as f64),
        }
    }
}

impl Environment for InventoryEnv {
    type State = InvState;

    fn action_count(&self) -> usize {
        self.config.grid_points
    }

    fn observation_dim(&self) -> usize {
        self.config.max_lead + 1
    }

    fn horizon_limit(&self) -> Option<usize> {
        Some(self.config.horizon)
    }

    fn reset(&mut self, seed: u64) -> Observation {
        self.reset_to(seed, 0, vec![0; self.config.max_lead])
    }

    fn step(&mut self, action: usize) -> StepOutcome {
        let demand = sample_poisson(&mut self.demand_rng, self.config.demand_mean);
        let lead = match self.config.lead_mode {
            LeadMode::Deterministic => self.config.max_lead,
            LeadMode::Stochastic => self.lead_rng.random_range(1..=self.config.max_lead),
        };
        self.step_with(action, demand, lead)
    }

    fn state(&self) -> &InvState {
        &self.state
    }

    fn observe(&self) -> Observation {
        encode(&self.state, &self.config)
    }

    fn is_done(&self) -> bool {
        self.done
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InvMaskKind {
    None,
    Interval,
    Threshold,
}

impl InvMaskKind {
    pub const ALL: [InvMaskKind; 3] = [Self::None, Self::Interval, Self::Threshold];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Interval => "int",
            Self::Threshold => "thr",
        }
    }
}

impl FromStr for InvMaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown inventory mask `{s}` (expected none, int or thr)"))
    }
}

impl fmt::Display for InvMaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Wraps a grid mask so that an empty admissible set becomes the single grid
/// action nearest to the clamped base-stock prescription.
fn with_nearest_fallback(inner: Mask<InvState>, config: &InvConfig) -> Mask<InvState> {
    let config = config.clone();
    let name = inner.name().to_string();
    Mask::from_set_fn(name, move |s: &InvState| {
        let set = inner.admissible(s);
        if !set.is_empty() {
            return set;
        }
        let h = base_stock_action(s, config.base_stock);
        ActionSet::from_indices(config.grid_points, &[nearest_grid_action(&config, h)])
    })
}

/// `m^INT`: orders within `Δ` of the base-stock prescription.
pub fn mask_int(config: &InvConfig) -> Mask<InvState> {
    let s = config.base_stock;
    let q = config.quantum as f64;
    let inner = heuristic_distance_mask(
        "int",
        move |state: &InvState| base_stock_action(state, s),
        q,
        move |a| a as f64 * q,
    );
    with_nearest_fallback(inner, config)
}

/// `m^THR`: orders that bring the inventory position up to at least `S`.
pub fn mask_thr(config: &InvConfig) -> Mask<InvState> {
    let s = config.base_stock;
    let q = config.quantum as f64;
    let inner = heuristic_threshold_mask(
        "thr",
        move |state: &InvState| base_stock_action(state, s),
        ThresholdDirection::AtLeast,
        move |a| a as f64 * q,
    );
    with_nearest_fallback(inner, config)
}

pub fn mask_stack(kind: InvMaskKind, config: &InvConfig) -> MaskStack<InvState> {
    match kind {
        InvMaskKind::None => MaskStack::unmasked(),
        InvMaskKind::Interval => MaskStack::new(mask_int(config), Mask::all_allow()),
        InvMaskKind::Threshold => MaskStack::new(mask_thr(config), Mask::all_allow()),
    }
}

/// The base-stock policy restricted to the order grid.
pub fn base_stock_policy(state: &InvState, config: &InvConfig) -> usize {
    nearest_grid_action(config, base_stock_action(state, config.base_stock))
}

/// Mean per-period cost of each of `episodes` base-stock episodes; episode `k`
/// uses `derive_seed(seed, k)`.
pub fn base_stock_episode_costs(config: &InvConfig, episodes: usize, seed: u64) -> Vec<f64> {
    let mut env = InventoryEnv::new(config.clone());
    (0..episodes as u64)
        .map(|k| {
            env.reset(derive_seed(seed, k));
            let mut total = 0.0;
            while !env.is_done() {
                let a = base_stock_policy(env.state(), config);
                total += env.step(a).reward;
            }
            -total / config.horizon as f64
        })
        .collect()
}

/// Mean per-period cost of the base-stock policy over `episodes` episodes.
pub fn base_stock_simulate(config: &InvConfig, episodes: usize, seed: u64) -> f64 {
    let costs = base_stock_episode_costs(config, episodes, seed);
    costs.iter().sum::<f64>() / costs.len().max(1) as f64
}
