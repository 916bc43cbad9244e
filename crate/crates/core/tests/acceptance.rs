//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `cargo test -p actmask --test acceptance` runs the property, oracle and
//! baseline criteria (1-5, 9a). The desk-scale training experiments (6, 7, 8, 9b)
//! take hours and run only when `--desk` (or `--ignored` / `--include-ignored`)
//! is passed:
//!
//! ```text
//! cargo test --release -p actmask --test acceptance -- --desk
//! ```
//!
//! Training criteria use three fixed seeds (0, 1, 2) per configuration and report
//! the mean over seeds alongside the per-seed values.

use std::time::Instant;

use actmask::env::inventory::{self, InvConfig, InvMaskKind, InventoryEnv, LeadMode};
use actmask::env::lms::{self, LmsConfig, LmsEnv};
use actmask::env::paintshop::{self, MaskLevel, PaintShopConfig, PaintShopEnv};
use actmask::experiment::{self, mean_and_std_error};
use actmask::masking::{conjoin, prioritize, ActionSet, Mask, MaskedDistribution};
use actmask::mdp::{derive_seed, ActionSpace, Environment, Trajectory};
use actmask::oracle::{self, InventoryDp};
use actmask::ppo::{self, CurvePoint, PpoConfig, TrainProgress};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TRAIN_SEEDS: [u64; 3] = [0, 1, 2];

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn report(id: &str, name: &str, run: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = run();
    println!(
        "criterion {id} ({name}): {} | {} [{:.1}s]",
        if outcome.pass { "PASS" } else { "FAIL" },
        outcome.detail,
        start.elapsed().as_secs_f64()
    );
    outcome.pass
}

// ---------------------------------------------------------------------------
// 1. Mask algebra laws

const TOY_ACTIONS: usize = 6;
const TOY_STATES: usize = 8;

#[derive(Clone, Copy)]
struct Toy(usize);

impl ActionSpace for Toy {
    fn action_count(&self) -> usize {
        TOY_ACTIONS
    }
}

/// A mask given by a truth table over all toy states; some rows allow everything
/// so that inactive cases occur.
fn table_mask() -> impl Strategy<Value = Vec<Vec<bool>>> {
    prop::collection::vec(
        prop_oneof![
            1 => Just(vec![true; TOY_ACTIONS]),
            3 => prop::collection::vec(any::<bool>(), TOY_ACTIONS),
        ],
        TOY_STATES,
    )
}

fn to_mask(table: Vec<Vec<bool>>) -> Mask<Toy> {
    Mask::from_set_fn("table", move |s: &Toy| ActionSet::from_bits(table[s.0].clone()))
}

fn same(a: &Mask<Toy>, b: &Mask<Toy>) -> bool {
    (0..TOY_STATES).all(|s| a.admissible(&Toy(s)) == b.admissible(&Toy(s)))
}

fn run_law(
    name: &str,
    cases: u32,
    law: impl Fn(&Mask<Toy>, &Mask<Toy>, &Mask<Toy>) -> bool,
) -> Result<(), String> {
    let mut runner = TestRunner::new_with_rng(
        PropConfig {
            cases,
            failure_persistence: None,
            ..PropConfig::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    runner
        .run(&(table_mask(), table_mask(), table_mask()), |(a, b, c)| {
            let (a, b, c) = (to_mask(a), to_mask(b), to_mask(c));
            prop_assert!(law(&a, &b, &c));
            Ok(())
        })
        .map_err(|e| format!("{name}: {e}"))
}

type Law = Box<dyn Fn(&Mask<Toy>, &Mask<Toy>, &Mask<Toy>) -> bool>;

fn criterion_1() -> Outcome {
    let all = Mask::<Toy>::all_allow;
    let laws: Vec<(&str, Law)> = vec![
        ("conjoin commutative", Box::new(|a, b, _| same(&conjoin(a, b), &conjoin(b, a)))),
        (
            "conjoin associative",
            Box::new(|a, b, c| same(&conjoin(&conjoin(a, b), c), &conjoin(a, &conjoin(b, c)))),
        ),
        ("conjoin idempotent", Box::new(|a, _, _| same(&conjoin(a, a), a))),
        ("conjoin identity", Box::new(move |a, _, _| same(&conjoin(a, &all()), a) && same(&conjoin(&all(), a), a))),
        (
            "prioritize associative",
            Box::new(|a, b, c| same(&prioritize(&prioritize(a, b), c), &prioritize(a, &prioritize(b, c)))),
        ),
        (
            "prioritize identity",
            Box::new(move |a, _, _| same(&prioritize(a, &all()), a) && same(&prioritize(&all(), a), a)),
        ),
    ];
    let mut failures = Vec::new();
    for (name, law) in &laws {
        if let Err(e) = run_law(name, 1000, law) {
            failures.push(e);
        }
    }
    // Non-commutativity witness: both masks active and disjoint.
    let m1 = Mask::from_set_fn("m1", |_: &Toy| ActionSet::from_indices(TOY_ACTIONS, &[0]));
    let m2 = Mask::from_set_fn("m2", |_: &Toy| ActionSet::from_indices(TOY_ACTIONS, &[1]));
    let witness = !same(&prioritize(&m1, &m2), &prioritize(&m2, &m1));
    if !witness {
        failures.push("prioritize commuted on the witness".into());
    }
    Outcome::new(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} laws x 1000 cases, non-commutativity witness found", laws.len())
        } else {
            failures.join("; ")
        },
    )
}

// ---------------------------------------------------------------------------
// 2. Masked distribution

fn fd_grad_log_prob(logits: &[f64], allowed: &ActionSet, action: usize, h: f64) -> Vec<f64> {
    (0..logits.len())
        .map(|j| {
            let mut plus = logits.to_vec();
            plus[j] += h;
            let mut minus = logits.to_vec();
            minus[j] -= h;
            let lp = |l: &[f64]| MaskedDistribution::new(l, allowed.clone()).unwrap().log_prob(action);
            (lp(&plus) - lp(&minus)) / (2.0 * h)
        })
        .collect()
}

fn check_gradient(logits: &[f64], allowed: &ActionSet, action: usize) -> Result<(), String> {
    let dist = MaskedDistribution::new(logits, allowed.clone()).unwrap();
    let analytic = dist.grad_log_prob(action);
    let numeric = fd_grad_log_prob(logits, allowed, action, 1e-5);
    for j in 0..logits.len() {
        if !allowed.contains(j) {
            if numeric[j] != 0.0 || analytic[j] != 0.0 {
                return Err(format!("forbidden logit {j}: fd {} analytic {}", numeric[j], analytic[j]));
            }
        } else {
            let scale = analytic[j].abs().max(1e-3);
            if (numeric[j] - analytic[j]).abs() / scale > 1e-4 {
                return Err(format!("logit {j}: fd {} analytic {}", numeric[j], analytic[j]));
            }
        }
    }
    Ok(())
}

fn criterion_2() -> Outcome {
    let mut problems = Vec::new();
    let worked = MaskedDistribution::new(&[1.0, 1.0, 1.0], ActionSet::from_indices(3, &[0, 1])).unwrap();
    if worked.probs() != [0.5, 0.5, 0.0] {
        problems.push(format!("worked example gave {:?}", worked.probs()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(2..12);
        let logits: Vec<f64> = (0..n).map(|_| rng.random_range(-20.0..20.0)).collect();
        let mut allowed = ActionSet::from_fn(n, |_| rng.random_bool(0.5));
        if allowed.is_empty() {
            allowed.insert(rng.random_range(0..n));
        }
        let full = actmask::masking::softmax(&logits);
        let mass: f64 = allowed.iter().map(|a| full[a]).sum();
        let dist = MaskedDistribution::new(&logits, allowed.clone()).unwrap();
        for a in 0..n {
            let expected = if allowed.contains(a) { full[a] / mass } else { 0.0 };
            if mass > 1e-200 {
                worst = worst.max((dist.probs()[a] - expected).abs());
            }
        }
        let action = allowed.iter().next().unwrap();
        if let Err(e) = check_gradient(&logits.iter().map(|l| l / 5.0).collect::<Vec<_>>(), &allowed, action) {
            problems.push(e);
            break;
        }
    }
    if worst > 1e-9 {
        problems.push(format!("restriction law error {worst:e}"));
    }

    // Forbidden-logit gradients on masks produced by each environment.
    let mut env_checks = 0;
    let mut check_env = |logits: Vec<f64>, allowed: ActionSet| {
        if allowed.count() < allowed.len() {
            let action = allowed.iter().next().unwrap();
            if let Err(e) = check_gradient(&logits, &allowed, action) {
                problems.push(e);
            }
            env_checks += 1;
        }
    };
    let ps_state = paintshop::PaintShopState::from_parts(
        &PaintShopConfig::new(3, 3, 4),
        &[vec![0, 1, 2], vec![0, 3, 1], vec![0, 0, 0]],
        vec![1, 2],
        1,
    );
    check_env(
        (0..6).map(|i| (i as f64 * 0.37).sin()).collect(),
        paintshop::combined_mask(MaskLevel::All).admissible(&ps_state),
    );
    let mut lms_env = LmsEnv::new(LmsConfig::default());
    lms_env.reset(0);
    check_env(vec![0.3, -0.2], lms::threshold_mask(0.8).admissible(lms_env.state()));
    let inv_config = InvConfig::standard(1.0, LeadMode::Deterministic);
    let mut inv_env = InventoryEnv::new(inv_config.clone());
    inv_env.reset(0);
    check_env(
        (0..11).map(|i| (i as f64 * 0.71).cos()).collect(),
        inventory::mask_int(&inv_config).admissible(inv_env.state()),
    );

    Outcome::new(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "worked example exact, restriction law max error {worst:.1e} over 1000 pairs, \
                 finite-difference gradients agree (1000 random + {env_checks} environment masks)"
            )
        } else {
            problems.join("; ")
        },
    )
}

// ---------------------------------------------------------------------------
// 3. Environment invariants

fn criterion_3() -> Outcome {
    let mut problems = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let config = PaintShopConfig::new(3, 4, 5);
    let mut env = PaintShopEnv::new(config.clone());
    env.reset(0);
    let mut episodes = 0;
    for step in 0..10_000 {
        let a = rng.random_range(0..config.action_count());
        let out = env.step(a);
        let s = env.state();
        if s.retrieved() + s.in_buffer() + s.remaining_incoming().len() != s.total_cars() {
            problems.push(format!("paint shop: cars not conserved at step {step}"));
            break;
        }
        if !s.lanes_contiguous() {
            problems.push(format!("paint shop: lane gap at step {step}"));
            break;
        }
        if out.done {
            episodes += 1;
            env.reset(step as u64);
        }
    }

    let mut env = LmsEnv::new(LmsConfig::with_sigma(0.3));
    env.reset(0);
    let mut nonzero = 0;
    let mut lms_episodes = 0;
    for step in 0..10_000 {
        let out = env.step(rng.random_range(0..2));
        if env.state().remaining_offs > 3 {
            problems.push(format!("LMS: budget {} at step {step}", env.state().remaining_offs));
            break;
        }
        if out.reward != 0.0 {
            nonzero += 1;
            if !out.done || out.reward.abs() != 1.0 {
                problems.push(format!("LMS: reward {} before the last period", out.reward));
                break;
            }
        }
        if out.done {
            lms_episodes += 1;
            env.reset(step as u64);
        }
    }
    if nonzero != lms_episodes {
        problems.push(format!("LMS: {nonzero} terminal rewards for {lms_episodes} episodes"));
    }

    for mode in [LeadMode::Deterministic, LeadMode::Stochastic] {
        let mut config = InvConfig::standard(4.0, mode);
        config.horizon = 1000;
        let mut env = InventoryEnv::new(config);
        env.reset(1);
        for step in 0..10_000 {
            let out = env.step(rng.random_range(0..11));
            let s = env.state();
            if s.ordered_total != s.arrived_total + s.in_transit() {
                problems.push(format!("inventory {mode:?}: orders not conserved at step {step}"));
                break;
            }
            if out.reward > 0.0 || s.pipeline.len() != env.config().max_lead {
                problems.push(format!("inventory {mode:?}: bad reward or pipeline at step {step}"));
                break;
            }
            if out.done {
                env.reset(step as u64);
            }
        }
    }

    Outcome::new(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "10,000 random steps each: paint shop ({episodes} episodes), LMS ({lms_episodes} episodes), \
                 inventory (det and stoch)"
            )
        } else {
            problems.join("; ")
        },
    )
}

// ---------------------------------------------------------------------------
// 4. Oracle equivalence

fn criterion_4() -> Outcome {
    let config = PaintShopConfig::new(2, 2, 2).with_sequence_length(8);
    let mut violations = 0;
    let mut mismatches_without_gs = 0;
    let mut problems = Vec::new();
    let mut totals = (0, 0);
    for k in 0..20 {
        let instance = paintshop::generate_instance(derive_seed(4, k), &config);
        let unmasked = oracle::paintshop_optimum(&config, &instance).unwrap();
        let masked = oracle::paintshop_masked_optimum(&config, &instance, MaskLevel::All).unwrap();
        totals.0 += unmasked.color_changes;
        totals.1 += masked.color_changes;
        if masked.color_changes > unmasked.color_changes {
            violations += 1;
            let without_gs = oracle::paintshop_masked_optimum(&config, &instance, MaskLevel::InvGrFt).unwrap();
            if without_gs.color_changes != unmasked.color_changes {
                mismatches_without_gs += 1;
            }
        }
    }
    let paint_ok = violations == 0 || mismatches_without_gs == 0;
    if !paint_ok {
        problems.push(format!(
            "{violations} instances where the all-mask search is worse, {mismatches_without_gs} still worse without greedy storage"
        ));
    }

    // Inventory: exact DP against simulation on a tiny system.
    // Prefer a cost ratio at which the optimal policy actually orders; S = 0
    // (never order) is optimal for small p and makes the comparison trivial.
    let mut matched = None;
    'search: for p in [19.0, 9.0, 4.0] {
        for s in (1..=30).chain([0]) {
            let tiny = InvConfig {
                holding_cost: 1.0,
                lost_sales_cost: p,
                lead_mode: LeadMode::Deterministic,
                max_lead: 1,
                demand_mean: 1.0,
                horizon: 20,
                quantum: 10,
                grid_points: 2,
                base_stock: s as f64,
            };
            let mut dp = InventoryDp::new(&tiny, 25).unwrap();
            let rule_config = tiny.clone();
            let rule = move |i: u32, q: &[u32]| {
                let position = i as f64 + q.iter().map(|&x| x as f64).sum::<f64>();
                inventory::nearest_grid_action(&rule_config, rule_config.base_stock - position)
            };
            if dp.rule_is_optimal(&rule, 0, &[0], 1e-9) {
                let optimum = dp.optimal(0, 0, &[0]).0;
                let costs = inventory::base_stock_episode_costs(&tiny, 40_000, 44);
                let (mean, se) = mean_and_std_error(&costs);
                let exact = -optimum / tiny.horizon as f64;
                matched = Some((p, s, exact, mean, se));
                break 'search;
            }
        }
    }
    // Exact evaluation of an ordering base-stock rule against the simulator.
    let ordering = InvConfig {
        holding_cost: 1.0,
        lost_sales_cost: 19.0,
        lead_mode: LeadMode::Deterministic,
        max_lead: 1,
        demand_mean: 1.0,
        horizon: 20,
        quantum: 10,
        grid_points: 2,
        base_stock: 10.0,
    };
    let dp = InventoryDp::new(&ordering, 25).unwrap();
    let rule = |i: u32, q: &[u32]| {
        let position = i as f64 + q.iter().map(|&x| x as f64).sum::<f64>();
        inventory::nearest_grid_action(&ordering, ordering.base_stock - position)
    };
    let exact_s10 = -dp.evaluate(&rule, 0, 0, &[0]) / ordering.horizon as f64;
    let (sim_s10, se_s10) = mean_and_std_error(&inventory::base_stock_episode_costs(&ordering, 40_000, 45));
    if (sim_s10 - exact_s10).abs() > 3.0 * se_s10 {
        problems.push(format!("inventory p=19 S=10 evaluation: DP {exact_s10:.5} vs simulation {sim_s10:.5} +- {se_s10:.5}"));
    }

    let inventory_detail = match matched {
        Some((p, s, exact, mean, se)) => {
            if (mean - exact).abs() > 3.0 * se {
                problems.push(format!("inventory p={p} S={s}: DP {exact:.5} vs simulation {mean:.5} +- {se:.5}"));
            }
            format!(
                "inventory p={p} S={s}: DP-optimal cost {exact:.5}, simulated {mean:.5} (3 se = {:.5}); \
                 p=19 S=10 rule: DP {exact_s10:.5}, simulated {sim_s10:.5} (3 se = {:.5})",
                3.0 * se,
                3.0 * se_s10
            )
        }
        None => {
            problems.push("no base-stock level coincides with the DP-optimal policy".into());
            String::new()
        }
    };

    Outcome::new(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "paint shop: 20 instances, all-mask optimum {} = unmasked optimum {} in total, {violations} violations; {inventory_detail}",
                totals.1, totals.0
            )
        } else {
            problems.join("; ")
        },
    )
}

// ---------------------------------------------------------------------------
// 5. GAE

/// Advantages by summing discounted TD residuals forward until the episode ends.
fn gae_direct(t: &Trajectory, gamma: f64, lambda: f64) -> Vec<f64> {
    let n = t.len();
    let value_after = |k: usize| if k + 1 == n { t.bootstrap_value } else { t.values[k + 1] };
    (0..n)
        .map(|start| {
            let mut total = 0.0;
            let mut weight = 1.0;
            for k in start..n {
                let next = if t.dones[k] { 0.0 } else { value_after(k) };
                total += weight * (t.rewards[k] + gamma * next - t.values[k]);
                if t.dones[k] {
                    break;
                }
                weight *= gamma * lambda;
            }
            total
        })
        .collect()
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..60);
        let mut t = Trajectory::new(1);
        for _ in 0..n {
            t.push(
                &[0.0],
                0,
                ActionSet::all(1),
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                0.0,
                rng.random_bool(0.15),
            );
        }
        t.bootstrap_value = rng.random_range(-5.0..5.0);
        let gamma = rng.random_range(0.5..1.0);
        let lambda = rng.random_range(0.0..1.0);
        let fast = ppo::gae(&t, gamma, lambda);
        let slow = gae_direct(&t, gamma, lambda);
        for (a, b) in fast.advantages.iter().zip(&slow) {
            worst = worst.max((a - b).abs());
        }
    }
    Outcome::new(worst <= 1e-10, format!("200 random trajectories, max deviation {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// 9a. LMS baseline

fn criterion_9a() -> Outcome {
    let solved = experiment::lms_threshold_rule(&LmsConfig::with_sigma(0.0), 100, 9);
    let count = solved.iter().filter(|&&s| s).count();
    Outcome::new(count == 100, format!("rule 'off iff forecast >= zeta' solved {count}/100 at sigma = 0"))
}

// ---------------------------------------------------------------------------
// Desk-scale experiments

fn progress(label: &str) -> impl FnMut(&TrainProgress) + '_ {
    move |p: &TrainProgress| {
        if p.iteration.is_multiple_of(50) {
            eprintln!(
                "  [{label}] t={} mean reward {}",
                p.timestep,
                p.point.map_or("n/a".into(), |c| format!("{:.3}", c.mean_episode_reward))
            );
        }
    }
}

fn criterion_6() -> Outcome {
    let config = PaintShopConfig::new(4, 4, 10);
    let instances = experiment::paintshop_instances(&config, 10, 6_000);
    let mut means = Vec::new();
    let mut curves: Vec<(MaskLevel, Vec<Vec<CurvePoint>>)> = Vec::new();
    for level in MaskLevel::ALL_LEVELS {
        let mut per_seed = Vec::new();
        let mut level_curves = Vec::new();
        for seed in TRAIN_SEEDS {
            let label = format!("paint shop {level} seed {seed}");
            let out = ppo::train(
                PaintShopEnv::new(config.clone()),
                paintshop::mask_stack(level),
                PpoConfig::default(),
                1_000_000,
                seed,
                progress(&label),
            )
            .expect("training succeeds");
            let changes = experiment::evaluate_paintshop(&out.policy, &config, level, &instances, derive_seed(seed, 99));
            per_seed.push(changes.iter().sum::<usize>() as f64 / changes.len() as f64);
            level_curves.push(out.curve);
        }
        let mean = per_seed.iter().sum::<f64>() / per_seed.len() as f64;
        eprintln!("  paint shop {level}: per-seed mean colour changes {per_seed:?}");
        means.push((level, mean, per_seed));
        curves.push((level, level_curves));
    }
    let m: Vec<f64> = means.iter().map(|(_, m, _)| *m).collect();
    // ALL_LEVELS is ordered none, inv, inv+gr, inv+gr+ft, all.
    let ordered = m[4] <= m[3] && m[3] <= m[2] && m[2] <= m[1] && m[1] <= m[0];
    let ratio = m[4] / m[0];

    let none_negative = curves[0]
        .1
        .iter()
        .all(|c| c.iter().filter(|p| p.timestep <= 100_000).all(|p| p.mean_episode_reward < 0.0));
    let masked_positive = curves[1..]
        .iter()
        .all(|(_, runs)| runs.iter().all(|c| c.iter().all(|p| p.mean_episode_reward > 0.0)));
    let first_positive_none: Vec<String> = curves[0]
        .1
        .iter()
        .map(|c| {
            c.iter()
                .find(|p| p.mean_episode_reward >= 0.0)
                .map_or("never".into(), |p| p.timestep.to_string())
        })
        .collect();

    let greedy = experiment::greedy_paintshop(&config, &instances, 6);
    let greedy_mean = greedy.iter().sum::<usize>() as f64 / greedy.len() as f64;
    let summary = means
        .iter()
        .map(|(l, m, _)| format!("{l}={m:.1}"))
        .collect::<Vec<_>>()
        .join(", ");
    Outcome::new(
        ordered && ratio <= 0.6 && none_negative && masked_positive,
        format!(
            "mean colour changes {summary} (greedy {greedy_mean:.1}); ordering {}; all/none = {ratio:.2} (need <= 0.60); \
             no-mask negative through 100k: {none_negative} (first non-negative point per seed: {}); \
             masked runs positive at every point: {masked_positive}",
            if ordered { "holds" } else { "violated" },
            first_positive_none.join("/")
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut table = Vec::new();
    for sigma in [0.0, 0.2] {
        let config = LmsConfig::with_sigma(sigma);
        for theta in [0.0, 0.4, 0.8, 1.2] {
            let mask = (theta > 0.0).then_some(theta);
            let mut per_seed = Vec::new();
            for seed in TRAIN_SEEDS {
                let label = format!("lms sigma {sigma} theta {theta} seed {seed}");
                let out = ppo::train(
                    LmsEnv::new(config.clone()),
                    lms::mask_stack(mask),
                    PpoConfig::default(),
                    1_000_000,
                    seed,
                    progress(&label),
                )
                .expect("training succeeds");
                let solved = experiment::evaluate_lms(&out.policy, &config, mask, 100, 7_000);
                per_seed.push(solved.iter().filter(|&&s| s).count() as f64 / 100.0);
            }
            let mean = per_seed.iter().sum::<f64>() / per_seed.len() as f64;
            eprintln!("  lms sigma {sigma} theta {theta}: solved {per_seed:?}");
            table.push((sigma, theta, mean, per_seed));
        }
    }
    let get = |s: f64, t: f64| table.iter().find(|r| r.0 == s && r.1 == t).unwrap().2;
    let zeros = [0.0, 0.2]
        .iter()
        .all(|&s| get(s, 0.0) == 0.0 && get(s, 0.4) == 0.0);
    let noise_free = get(0.0, 1.2) >= 0.9;
    let noisy = get(0.2, 1.2) > get(0.2, 0.8) && get(0.2, 1.2) >= 0.4;
    let cells = table
        .iter()
        .map(|(s, t, m, p)| {
            format!(
                "s{s}/t{t}={:.0}% ({})",
                m * 100.0,
                p.iter().map(|x| format!("{:.0}", x * 100.0)).collect::<Vec<_>>().join("/")
            )
        })
        .collect::<Vec<_>>()
        .join(", ");
    Outcome::new(
        zeros && noise_free && noisy,
        format!(
            "solved (mean over seeds, per-seed in parentheses): {cells}; zeros at theta<=0.4: {zeros}; \
             sigma=0 theta=1.2 >= 90%: {noise_free}; sigma=0.2 increasing and >= 40%: {noisy}"
        ),
    )
}

struct InventoryRun {
    mean: f64,
    per_seed: Vec<f64>,
}

fn train_inventory(p: f64, mode: LeadMode, kind: InvMaskKind) -> InventoryRun {
    let config = InvConfig::standard(p, mode);
    let mut per_seed = Vec::new();
    for seed in TRAIN_SEEDS {
        let label = format!("inventory p={p} {} {kind} seed {seed}", mode.as_str());
        let result = ppo::train(
            InventoryEnv::new(config.clone()),
            inventory::mask_stack(kind, &config),
            PpoConfig::default(),
            1_000_000,
            seed,
            progress(&label),
        );
        match result {
            Ok(out) => {
                let costs = experiment::evaluate_inventory(&out.policy, &config, kind, 100, 8_000);
                per_seed.push(mean_and_std_error(&costs).0);
            }
            Err(e) => {
                eprintln!("  [{label}] training failed: {e}");
                per_seed.push(f64::INFINITY);
            }
        }
    }
    let mean = per_seed.iter().sum::<f64>() / per_seed.len() as f64;
    eprintln!("  inventory p={p} {} {kind}: cost per seed {per_seed:?}", mode.as_str());
    InventoryRun { mean, per_seed }
}

fn criterion_8_and_9b() -> (Outcome, Outcome) {
    let det_none = train_inventory(1.0, LeadMode::Deterministic, InvMaskKind::None);
    let det_int = train_inventory(1.0, LeadMode::Deterministic, InvMaskKind::Interval);
    let det_thr = train_inventory(1.0, LeadMode::Deterministic, InvMaskKind::Threshold);
    let st_none = train_inventory(4.0, LeadMode::Stochastic, InvMaskKind::None);
    let st_int = train_inventory(4.0, LeadMode::Stochastic, InvMaskKind::Interval);
    let st_thr = train_inventory(4.0, LeadMode::Stochastic, InvMaskKind::Threshold);

    let within = |x: f64, target: f64| (x - target).abs() <= 0.15 * target;
    let anchor_none = within(det_none.mean, 2.112);
    let ordering = st_int.mean < st_thr.mean && st_thr.mean < st_none.mean;
    let anchor_int = within(st_int.mean, 7.933);
    let sign_flip = det_none.mean < det_int.mean && det_none.mean < det_thr.mean;
    let fmt = |r: &InventoryRun| {
        format!(
            "{:.3} ({})",
            r.mean,
            r.per_seed.iter().map(|c| format!("{c:.3}")).collect::<Vec<_>>().join("/")
        )
    };
    let c8 = Outcome::new(
        anchor_none && ordering && anchor_int && sign_flip,
        format!(
            "p=1 det: none {}, int {}, thr {}; p=4 stoch: none {}, int {}, thr {}; \
             none within 15% of 2.112: {anchor_none}; int < thr < none: {ordering}; \
             int within 15% of 7.933: {anchor_int}; p=1 no-mask cheapest: {sign_flip}",
            fmt(&det_none),
            fmt(&det_int),
            fmt(&det_thr),
            fmt(&st_none),
            fmt(&st_int),
            fmt(&st_thr)
        ),
    );

    let config = InvConfig::standard(4.0, LeadMode::Stochastic);
    let base = mean_and_std_error(&experiment::base_stock_inventory(&config, 100, 8_000)).0;
    let best_rl = st_int.mean.min(st_thr.mean).min(st_none.mean);
    let ok = base.is_finite() && base <= 2.0 * best_rl && best_rl <= 2.0 * base;
    let c9b = Outcome::new(
        ok,
        format!("p=4 stoch base-stock (S=25) cost {base:.3} vs best RL {best_rl:.3}; ratio {:.2}", base / best_rl),
    );
    (c8, c9b)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let desk = args
        .iter()
        .any(|a| a == "--desk" || a == "--ignored" || a == "--include-ignored");
    let desk_only = args.iter().any(|a| a == "--ignored");
    // libtest-style listing so `cargo test -- --list` keeps working.
    if args.iter().any(|a| a == "--list") {
        return;
    }
    let mut all_pass = true;
    if !desk_only {
        all_pass &= report("1", "mask algebra laws", criterion_1);
        all_pass &= report("2", "masked distribution", criterion_2);
        all_pass &= report("3", "environment invariants", criterion_3);
        all_pass &= report("4", "oracle equivalence", criterion_4);
        all_pass &= report("5", "GAE recursion", criterion_5);
        all_pass &= report("9a", "LMS threshold rule", criterion_9a);
    }
    if desk {
        all_pass &= report("6", "paint-shop mask ordering", criterion_6);
        all_pass &= report("7", "LMS threshold pattern", criterion_7);
        let (c8, c9b) = criterion_8_and_9b();
        all_pass &= report("8", "inventory costs", || c8);
        all_pass &= report("9b", "base-stock sanity", || c9b);
    } else {
        println!("criteria 6, 7, 8, 9b (desk-scale training): skipped, pass --desk to run");
    }
    if !all_pass {
        std::process::exit(1);
    }
}
