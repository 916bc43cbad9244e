//! Action masking for reinforcement learning on operations-research problems.
//!
//! The crate is organised bottom-up:
//!
//! - [`mdp`]: the environment contract, trajectories and the seeded rollout runner.
//! - [`masking`]: the mask algebra (elementary masks, conjunction, priority) and the
//!   masked categorical distribution used for sampling and for gradients.
//! - [`env`]: paint-shop buffer scheduling, peak-load management and lost-sales inventory.
//! - [`ppo`]: a small actor/critic trainer with masked action distributions.
//! - [`experiment`]: paired-seed evaluation protocols and non-learning baselines.
//! - [`oracle`]: exhaustive search and dynamic programming used to cross-check the above.

pub mod env;
pub mod experiment;
pub mod masking;
pub mod mdp;
pub mod oracle;
pub mod ppo;

pub use masking::{ActionSet, Mask, MaskStack, MaskedDistribution};
pub use mdp::{ActionSpace, Environment, Info, StepOutcome, Trajectory};
