//! Mask algebra and the masked categorical distribution.
//!
//! A [`Mask`] maps `(state, action)` to allowed/forbidden. Masks compose with two
//! combinators:
//!
//! - [`conjoin`] allows an action only if both operands allow it;
//! - [`prioritize`] applies the first operand wherever it is *active* (forbids at
//!   least one action) and falls through to the second operand otherwise.
//!
//! [`MaskedDistribution`] turns raw logits plus an admissible set into a categorical
//! distribution whose forbidden entries have probability exactly zero.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;

use crate::mdp::ActionSpace;

/// Logit assigned to forbidden actions. Any finite logit minus this value is far
/// below the exp underflow threshold, so forbidden probabilities are exactly zero
/// while every intermediate stays finite.
pub const MASKED_LOGIT: f64 = -1.0e30;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MaskError {
    #[error("admissible set is empty")]
    EmptyAdmissibleSet,
    #[error("logit vector has width {logits}, admissible set has width {mask}")]
    WidthMismatch { logits: usize, mask: usize },
}

/// Admissible-action bitvector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ActionSet {
    bits: Vec<bool>,
}

impl ActionSet {
    pub fn all(n: usize) -> Self {
        Self { bits: vec![true; n] }
    }

    pub fn none(n: usize) -> Self {
        Self { bits: vec![false; n] }
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> bool) -> Self {
        Self {
            bits: (0..n).map(f).collect(),
        }
    }

    pub fn from_indices(n: usize, allowed: &[usize]) -> Self {
        let mut set = Self::none(n);
        for &a in allowed {
            set.bits[a] = true;
        }
        set
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Width of the action space, not the number of allowed actions.
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn contains(&self, action: usize) -> bool {
        self.bits.get(action).copied().unwrap_or(false)
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// No action allowed.
    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn is_full(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn as_bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn intersect(&self, other: &ActionSet) -> ActionSet {
        debug_assert_eq!(self.len(), other.len());
        Self {
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| a && b).collect(),
        }
    }

    pub fn insert(&mut self, action: usize) {
        self.bits[action] = true;
    }
}

impl fmt::Debug for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

type Predicate<S> = dyn Fn(&S, usize) -> bool + Send + Sync;
type SetFn<S> = dyn Fn(&S) -> ActionSet + Send + Sync;

enum Node<S> {
    AllowAll,
    Predicate(Box<Predicate<S>>),
    Set(Box<SetFn<S>>),
    Conjoin(Mask<S>, Mask<S>),
    Prioritize(Mask<S>, Mask<S>),
}

/// A named, immutable, shareable predicate over `(state, action)`.
pub struct Mask<S> {
    name: Arc<str>,
    node: Arc<Node<S>>,
}

impl<S> Clone for Mask<S> {
    fn clone(&self) -> Self {
        Self {
            name: Arc::clone(&self.name),
            node: Arc::clone(&self.node),
        }
    }
}

impl<S> fmt::Debug for Mask<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Mask").field(&self.name).finish()
    }
}

impl<S: ActionSpace> Mask<S> {
    /// Allows every action in every state. Identity of [`conjoin`], and never active
    /// as the first operand of [`prioritize`].
    pub fn all_allow() -> Self {
        Self {
            name: "all_allow".into(),
            node: Arc::new(Node::AllowAll),
        }
    }

    pub fn from_predicate(
        name: impl Into<String>,
        predicate: impl Fn(&S, usize) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into().into(),
            node: Arc::new(Node::Predicate(Box::new(predicate))),
        }
    }

    /// A mask computed for all actions at once. Useful when the per-action answer
    /// depends on the other actions (e.g. a nearest-action fallback).
    pub fn from_set_fn(
        name: impl Into<String>,
        f: impl Fn(&S) -> ActionSet + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into().into(),
            node: Arc::new(Node::Set(Box::new(f))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(self, name: impl Into<String>) -> Self {
        Self {
            name: name.into().into(),
            node: self.node,
        }
    }

    pub fn allows(&self, state: &S, action: usize) -> bool {
        match &*self.node {
            Node::AllowAll => true,
            Node::Predicate(p) => p(state, action),
            Node::Set(f) => f(state).contains(action),
            Node::Conjoin(a, b) => a.allows(state, action) && b.allows(state, action),
            Node::Prioritize(a, b) => {
                if a.is_active(state) {
                    a.allows(state, action)
                } else {
                    b.allows(state, action)
                }
            }
        }
    }

    pub fn admissible(&self, state: &S) -> ActionSet {
        let n = state.action_count();
        match &*self.node {
            Node::AllowAll => ActionSet::all(n),
            Node::Predicate(p) => ActionSet::from_fn(n, |a| p(state, a)),
            Node::Set(f) => {
                let set = f(state);
                debug_assert_eq!(set.len(), n, "mask {} returned wrong width", self.name);
                set
            }
            Node::Conjoin(a, b) => a.admissible(state).intersect(&b.admissible(state)),
            Node::Prioritize(a, b) => {
                let first = a.admissible(state);
                if first.is_full() {
                    b.admissible(state)
                } else {
                    first
                }
            }
        }
    }

    /// Whether the mask forbids at least one action in `state`.
    pub fn is_active(&self, state: &S) -> bool {
        match &*self.node {
            Node::AllowAll => false,
            _ => !self.admissible(state).is_full(),
        }
    }

    pub fn conjoin(&self, other: &Mask<S>) -> Mask<S> {
        conjoin(self, other)
    }

    pub fn prioritize(&self, other: &Mask<S>) -> Mask<S> {
        prioritize(self, other)
    }
}

/// `m1 ⊕ m2`: allows `a` iff both masks allow it.
pub fn conjoin<S: ActionSpace>(m1: &Mask<S>, m2: &Mask<S>) -> Mask<S> {
    Mask {
        name: format!("({} + {})", m1.name, m2.name).into(),
        node: Arc::new(Node::Conjoin(m1.clone(), m2.clone())),
    }
}

/// `m1 ≻ m2`: equals `m1` in states where `m1` forbids at least one action, `m2`
/// everywhere else.
pub fn prioritize<S: ActionSpace>(m1: &Mask<S>, m2: &Mask<S>) -> Mask<S> {
    Mask {
        name: format!("({} > {})", m1.name, m2.name).into(),
        node: Arc::new(Node::Prioritize(m1.clone(), m2.clone())),
    }
}

pub fn mask_all_allow<S: ActionSpace>() -> Mask<S> {
    Mask::all_allow()
}

/// Allows actions whose scalar value lies within `max_distance` of the heuristic's
/// prescription: `|value(a) - h(s)| <= M`.
pub fn heuristic_distance_mask<S: ActionSpace>(
    name: impl Into<String>,
    heuristic: impl Fn(&S) -> f64 + Send + Sync + 'static,
    max_distance: f64,
    action_value: impl Fn(usize) -> f64 + Send + Sync + 'static,
) -> Mask<S> {
    Mask::from_predicate(name, move |s, a| {
        (action_value(a) - heuristic(s)).abs() <= max_distance
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdDirection {
    /// Allow `value(a) >= h(s)`.
    AtLeast,
    /// Allow `value(a) <= h(s)`.
    AtMost,
}

pub fn heuristic_threshold_mask<S: ActionSpace>(
    name: impl Into<String>,
    heuristic: impl Fn(&S) -> f64 + Send + Sync + 'static,
    direction: ThresholdDirection,
    action_value: impl Fn(usize) -> f64 + Send + Sync + 'static,
) -> Mask<S> {
    Mask::from_predicate(name, move |s, a| {
        let v = action_value(a);
        let h = heuristic(s);
        match direction {
            ThresholdDirection::AtLeast => v >= h,
            ThresholdDirection::AtMost => v <= h,
        }
    })
}

/// Enforces known-optimal actions: on states recognised by `known_state`, only
/// actions with `optimal(s, a)` are allowed; elsewhere everything is allowed.
pub fn optimal_enforcement_mask<S: ActionSpace>(
    name: impl Into<String>,
    known_state: impl Fn(&S) -> bool + Send + Sync + 'static,
    optimal: impl Fn(&S, usize) -> bool + Send + Sync + 'static,
) -> Mask<S> {
    Mask::from_predicate(name, move |s, a| !known_state(s) || optimal(s, a))
}

/// Result of evaluating a [`MaskStack`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Admissible {
    pub set: ActionSet,
    pub fell_back: bool,
}

/// A composed mask together with the validity mask used when the composition
/// forbids everything.
#[derive(Clone)]
pub struct MaskStack<S> {
    mask: Mask<S>,
    validity: Mask<S>,
    fallbacks: Arc<AtomicU64>,
}

impl<S> fmt::Debug for MaskStack<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MaskStack")
            .field("mask", &self.mask)
            .field("validity", &self.validity)
            .field("fallbacks", &self.fallbacks.load(Ordering::Relaxed))
            .finish()
    }
}

impl<S: ActionSpace> MaskStack<S> {
    pub fn new(mask: Mask<S>, validity: Mask<S>) -> Self {
        Self {
            mask,
            validity,
            fallbacks: Arc::new(AtomicU64::new(0)),
        }
    }

    /// No masking at all.
    pub fn unmasked() -> Self {
        Self::new(Mask::all_allow(), Mask::all_allow())
    }

    pub fn mask(&self) -> &Mask<S> {
        &self.mask
    }

    pub fn validity(&self) -> &Mask<S> {
        &self.validity
    }

    pub fn name(&self) -> &str {
        self.mask.name()
    }

    /// Evaluates the composed mask; an empty result falls back to the validity mask
    /// (and to all actions if even that is empty) and bumps the fallback counter.
    pub fn evaluate(&self, state: &S) -> Admissible {
        let set = self.mask.admissible(state);
        if !set.is_empty() {
            return Admissible {
                set,
                fell_back: false,
            };
        }
        self.fallbacks.fetch_add(1, Ordering::Relaxed);
        let valid = self.validity.admissible(state);
        let set = if valid.is_empty() {
            ActionSet::all(state.action_count())
        } else {
            valid
        };
        Admissible {
            set,
            fell_back: true,
        }
    }

    pub fn fallback_count(&self) -> u64 {
        self.fallbacks.load(Ordering::Relaxed)
    }
}

/// Plain softmax, used as the unmasked reference.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Categorical distribution over the admissible actions only.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedDistribution {
    logits: Vec<f64>,
    allowed: ActionSet,
    probs: Vec<f64>,
    log_probs: Vec<f64>,
}

impl MaskedDistribution {
    pub fn new(logits: &[f64], allowed: ActionSet) -> Result<Self, MaskError> {
        if logits.len() != allowed.len() {
            return Err(MaskError::WidthMismatch {
                logits: logits.len(),
                mask: allowed.len(),
            });
        }
        if allowed.is_empty() {
            return Err(MaskError::EmptyAdmissibleSet);
        }
        let masked: Vec<f64> = logits
            .iter()
            .zip(allowed.as_bits())
            .map(|(&l, &ok)| if ok { l } else { MASKED_LOGIT })
            .collect();
        let max = masked.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = masked.iter().map(|&l| (l - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        let log_norm = max + sum.ln();
        let log_probs: Vec<f64> = masked.iter().map(|&l| l - log_norm).collect();
        let probs = exps.iter().map(|&e| e / sum).collect();
        Ok(Self {
            logits: logits.to_vec(),
            allowed,
            probs,
            log_probs,
        })
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn allowed(&self) -> &ActionSet {
        &self.allowed
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_prob(&self, action: usize) -> f64 {
        self.log_probs[action]
    }

    /// Entropy of the renormalised admissible distribution (`0 log 0 = 0`).
    pub fn entropy(&self) -> f64 {
        self.allowed
            .iter()
            .map(|a| {
                let p = self.probs[a];
                if p > 0.0 {
                    -p * self.log_probs[a]
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Inverse-CDF sample over the admissible actions.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = 0;
        for a in self.allowed.iter() {
            acc += self.probs[a];
            last = a;
            if u < acc {
                return a;
            }
        }
        last
    }

    /// Most probable admissible action, lowest index on ties.
    pub fn mode(&self) -> usize {
        let mut best = None;
        for a in self.allowed.iter() {
            match best {
                Some(b) if self.probs[a] <= self.probs[b] => {}
                _ => best = Some(a),
            }
        }
        best.expect("admissible set is non-empty")
    }

    /// Gradient of `log π^m(action)` with respect to the raw logits:
    /// `onehot(action) - π^m`, which is zero on every forbidden entry.
    pub fn grad_log_prob(&self, action: usize) -> Vec<f64> {
        let mut g: Vec<f64> = self.probs.iter().map(|&p| -p).collect();
        g[action] += 1.0;
        for (gi, &ok) in g.iter_mut().zip(self.allowed.as_bits()) {
            if !ok {
                *gi = 0.0;
            }
        }
        g
    }

    /// Gradient of the masked entropy with respect to the raw logits.
    pub fn grad_entropy(&self) -> Vec<f64> {
        let h = self.entropy();
        self.probs
            .iter()
            .zip(&self.log_probs)
            .zip(self.allowed.as_bits())
            .map(|((&p, &lp), &ok)| if ok && p > 0.0 { -p * (lp + h) } else { 0.0 })
            .collect()
    }
}

/// Builds the masked distribution for `state`, applying the stack's fallback when
/// the composed mask is empty.
pub fn masked_distribution<S: ActionSpace>(
    logits: &[f64],
    state: &S,
    masks: &MaskStack<S>,
) -> Result<MaskedDistribution, MaskError> {
    MaskedDistribution::new(logits, masks.evaluate(state).set)
}
