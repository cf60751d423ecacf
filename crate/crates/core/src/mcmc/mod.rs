//! Metropolis-Hastings mutations of reservoir samples.

mod di;
mod mh;
mod pss;
mod reconnection;

pub use di::DiDirectionMutator;
pub use mh::{
    acceptance, chain, mutate_sample, MutationConfig, MutationProposal, MutationStats, MutationStrategy, Mutator,
};
pub use pss::{perturb, step_scale, PssVector};
pub use reconnection::{KernelRatioMode, ReconnectionMutator};
