//! Exact solvers for tiny instances, used to cross-check environments and masks.
//!
//! The unmasked paint-shop search and the inventory dynamic program carry their
//! own transition logic rather than calling into [`crate::env`], so they act as
//! independent references. The masked paint-shop search deliberately drives the
//! real environment through a mask, since that pairing is what it checks.

use std::collections::HashMap;

use crate::env::inventory::InvConfig;
use crate::env::paintshop::{combined_mask, Color, MaskLevel, PaintShopConfig, PaintShopEnv};
use crate::mdp::Environment;

/// Largest paint-shop instance the exhaustive searches accept.
pub const MAX_SEARCH_CARS: usize = 12;
pub const MAX_SEARCH_CELLS: usize = 9;
/// Largest number of `(inventory, pipeline)` states per period the DP accepts.
pub const MAX_DP_STATES: usize = 2_000_000;

/// (buffer cells, cars still incoming, current colour) -> (changes to go, best action).
type MaskedMemo = HashMap<(Vec<Color>, usize, Color), (usize, Option<usize>)>;
/// (period, inventory, pipeline).
type DpKey = (usize, u32, Vec<u32>);

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("instance too large for exhaustive search: {cars} cars (max {MAX_SEARCH_CARS}), {cells} buffer cells (max {MAX_SEARCH_CELLS})")]
    PaintShopTooLarge { cars: usize, cells: usize },
    #[error("dynamic program too large: about {states} states per period (max {MAX_DP_STATES})")]
    InventoryTooLarge { states: usize },
    #[error("the dynamic program only supports deterministic lead times")]
    StochasticLead,
}

fn check_size(config: &PaintShopConfig, cars: usize) -> Result<(), OracleError> {
    let cells = config.lanes * config.width;
    if cars > MAX_SEARCH_CARS || cells > MAX_SEARCH_CELLS {
        return Err(OracleError::PaintShopTooLarge { cars, cells });
    }
    Ok(())
}

/// Minimal colour changes and one action sequence achieving it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchResult {
    pub color_changes: usize,
    pub actions: Vec<usize>,
}

/// Buffer state for the reference search: each lane lists its cars from exit
/// (front) to entry (back).
#[derive(Clone, PartialEq, Eq, Hash)]
struct Node {
    lanes: Vec<Vec<Color>>,
    next: usize,
    color: Color,
}

struct ReferenceSearch<'a> {
    sequence: &'a [Color],
    width: usize,
    memo: HashMap<Node, (usize, Option<usize>)>,
}

impl ReferenceSearch<'_> {
    fn children(&self, node: &Node) -> Vec<(usize, usize, Node)> {
        let lanes = node.lanes.len();
        let mut out = Vec::new();
        for (i, lane) in node.lanes.iter().enumerate() {
            if let Some(&car) = lane.first() {
                let mut child = node.clone();
                child.lanes[i].remove(0);
                child.color = car;
                let cost = usize::from(node.color != 0 && node.color != car);
                out.push((i, cost, child));
            }
        }
        if node.next < self.sequence.len() {
            for (i, lane) in node.lanes.iter().enumerate() {
                if lane.len() < self.width {
                    let mut child = node.clone();
                    child.lanes[i].push(self.sequence[node.next]);
                    child.next += 1;
                    out.push((lanes + i, 0, child));
                }
            }
        }
        out
    }

    fn solve(&mut self, node: &Node) -> usize {
        if let Some(&(v, _)) = self.memo.get(node) {
            return v;
        }
        let mut best = (usize::MAX, None);
        let children = self.children(node);
        if children.is_empty() {
            // Complete only when every car has been retrieved; a blocked state
            // cannot occur because some lane is non-empty or non-full.
            best = (0, None);
        }
        for (action, cost, child) in children {
            let v = cost + self.solve(&child);
            if v < best.0 {
                best = (v, Some(action));
            }
        }
        self.memo.insert(node.clone(), best);
        best.0
    }
}

/// Fewest colour changes over all complete action sequences, without masks.
pub fn paintshop_optimum(config: &PaintShopConfig, sequence: &[Color]) -> Result<SearchResult, OracleError> {
    check_size(config, sequence.len())?;
    let mut search = ReferenceSearch {
        sequence,
        width: config.width,
        memo: HashMap::new(),
    };
    let root = Node {
        lanes: vec![Vec::new(); config.lanes],
        next: 0,
        color: 0,
    };
    let color_changes = search.solve(&root);
    let mut actions = Vec::new();
    let mut node = root;
    while let Some(&(_, Some(action))) = search.memo.get(&node) {
        let (_, _, child) = search
            .children(&node)
            .into_iter()
            .find(|(a, _, _)| *a == action)
            .expect("memoised action is available");
        actions.push(action);
        node = child;
    }
    Ok(SearchResult {
        color_changes,
        actions,
    })
}

/// Fewest colour changes over all complete action sequences in which every
/// action is admissible under the given mask level. Actions that leave the state
/// unchanged (invalid moves) are skipped since they can never help.
pub fn paintshop_masked_optimum(
    config: &PaintShopConfig,
    sequence: &[Color],
    level: MaskLevel,
) -> Result<SearchResult, OracleError> {
    check_size(config, sequence.len())?;
    let mask = combined_mask(level);
    let mut env = PaintShopEnv::with_instance(config.clone().with_sequence_length(sequence.len()), sequence.to_vec());
    env.reset(0);
    let mut memo: MaskedMemo = HashMap::new();

    fn key(env: &PaintShopEnv) -> (Vec<Color>, usize, Color) {
        let s = env.state();
        (s.buffer().to_vec(), s.remaining_incoming().len(), s.current_color())
    }

    fn solve(
        env: &PaintShopEnv,
        mask: &crate::masking::Mask<crate::env::paintshop::PaintShopState>,
        memo: &mut MaskedMemo,
    ) -> usize {
        let k = key(env);
        if let Some(&(v, _)) = memo.get(&k) {
            return v;
        }
        let state = env.state();
        let mut best = (usize::MAX, None);
        if state.is_complete() {
            best = (0, None);
        } else {
            for action in mask.admissible(state).iter() {
                if !state.is_valid(action) {
                    continue;
                }
                let mut child = env.clone();
                let before = child.state().color_changes();
                child.step(action);
                let cost = child.state().color_changes() - before;
                let rest = solve(&child, mask, memo);
                if rest != usize::MAX && cost + rest < best.0 {
                    best = (cost + rest, Some(action));
                }
            }
        }
        memo.insert(k, best);
        best.0
    }

    let color_changes = solve(&env, &mask, &mut memo);
    let mut actions = Vec::new();
    while let Some(&(_, Some(action))) = memo.get(&key(&env)) {
        actions.push(action);
        env.step(action);
    }
    Ok(SearchResult {
        color_changes,
        actions,
    })
}

/// Poisson probabilities for `0..max_demand`, with the tail mass lumped into
/// `max_demand`.
pub fn truncated_poisson(mean: f64, max_demand: u32) -> Vec<f64> {
    let mut probs = Vec::with_capacity(max_demand as usize + 1);
    let mut p = (-mean).exp();
    let mut cdf = 0.0;
    for k in 0..max_demand {
        probs.push(p);
        cdf += p;
        p *= mean / (k + 1) as f64;
    }
    probs.push((1.0 - cdf).max(0.0));
    probs
}

/// A decision rule for the dynamic program: `(inventory, pipeline) -> action`.
pub type InvRule<'a> = &'a dyn Fn(u32, &[u32]) -> usize;

/// Exact finite-horizon dynamic program for the lost-sales system with
/// deterministic lead time and (truncated) Poisson demand.
pub struct InventoryDp<'a> {
    config: &'a InvConfig,
    demand: Vec<f64>,
    memo: HashMap<DpKey, (f64, Vec<f64>)>,
}

impl<'a> InventoryDp<'a> {
    pub fn new(config: &'a InvConfig, max_demand: u32) -> Result<Self, OracleError> {
        if config.lead_mode != crate::env::inventory::LeadMode::Deterministic {
            return Err(OracleError::StochasticLead);
        }
        let levels = config.horizon * config.max_order() as usize + 1;
        let states = levels.saturating_mul(config.grid_points.saturating_pow(config.max_lead as u32));
        if states > MAX_DP_STATES {
            return Err(OracleError::InventoryTooLarge { states });
        }
        Ok(Self {
            config,
            demand: truncated_poisson(config.demand_mean, max_demand),
            memo: HashMap::new(),
        })
    }

    /// Expected one-period reward and successor distribution, written out
    /// directly from the dynamics: arrival, demand, lost sales, then the new
    /// order joins the back of the pipeline.
    fn transitions(&self, inventory: u32, pipeline: &[u32], action: usize) -> Vec<(f64, f64, u32, Vec<u32>)> {
        let on_hand = inventory as i64 + pipeline[0] as i64;
        let mut next_pipeline: Vec<u32> = pipeline[1..].to_vec();
        next_pipeline.push(action as u32 * self.config.quantum);
        self.demand
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(d, &p)| {
                let left = on_hand - d as i64;
                let reward = if left >= 0 {
                    -self.config.holding_cost * left as f64
                } else {
                    self.config.lost_sales_cost * left as f64
                };
                (p, reward, left.max(0) as u32, next_pipeline.clone())
            })
            .collect()
    }

    /// Optimal expected total reward from period `t` and the value of every action.
    pub fn optimal(&mut self, t: usize, inventory: u32, pipeline: &[u32]) -> (f64, Vec<f64>) {
        if t >= self.config.horizon {
            return (0.0, Vec::new());
        }
        let key = (t, inventory, pipeline.to_vec());
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let q: Vec<f64> = (0..self.config.grid_points)
            .map(|a| {
                self.transitions(inventory, pipeline, a)
                    .into_iter()
                    .map(|(p, r, i, pipe)| p * (r + self.optimal(t + 1, i, &pipe).0))
                    .sum()
            })
            .collect();
        let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.memo.insert(key, (best, q.clone()));
        (best, q)
    }

    /// Expected total reward of a fixed rule from period `t`.
    pub fn evaluate(&self, rule: InvRule, t: usize, inventory: u32, pipeline: &[u32]) -> f64 {
        let mut cache = HashMap::new();
        self.evaluate_cached(rule, t, inventory, pipeline, &mut cache)
    }

    fn evaluate_cached(
        &self,
        rule: InvRule,
        t: usize,
        inventory: u32,
        pipeline: &[u32],
        cache: &mut HashMap<(usize, u32, Vec<u32>), f64>,
    ) -> f64 {
        if t >= self.config.horizon {
            return 0.0;
        }
        let key = (t, inventory, pipeline.to_vec());
        if let Some(&v) = cache.get(&key) {
            return v;
        }
        let a = rule(inventory, pipeline);
        let v = self
            .transitions(inventory, pipeline, a)
            .into_iter()
            .map(|(p, r, i, pipe)| p * (r + self.evaluate_cached(rule, t + 1, i, &pipe, cache)))
            .sum();
        cache.insert(key, v);
        v
    }

    /// Whether `rule` picks an optimal action (within `tol`) in every state it
    /// reaches with positive probability from the given start.
    pub fn rule_is_optimal(&mut self, rule: InvRule, inventory: u32, pipeline: &[u32], tol: f64) -> bool {
        let mut frontier = vec![(0usize, inventory, pipeline.to_vec())];
        let mut seen = std::collections::HashSet::new();
        while let Some((t, i, pipe)) = frontier.pop() {
            if t >= self.config.horizon || !seen.insert((t, i, pipe.clone())) {
                continue;
            }
            let (best, q) = self.optimal(t, i, &pipe);
            let a = rule(i, &pipe);
            if q[a] < best - tol {
                return false;
            }
            for (_, _, ni, np) in self.transitions(i, &pipe, a) {
                frontier.push((t + 1, ni, np));
            }
        }
        true
    }
}
