//! Analysis and optimization of latent thinking trajectories.
//!
//! - [`trajectory`] and [`container`]: data types and the `.lttk` file format
//! - [`spectral`] and [`geometry`]: per-step representation metrics and PCA
//! - [`reward`]: the latent reward model (transformer classifier, manual gradients)
//! - [`sampler`]: reward-guided rejection sampling, votes, bound checks
//! - [`selection`]: per-problem comparison of sampling against votes
//! - [`synth`]: synthetic labeled trajectories

pub mod container;
pub mod geometry;
pub mod reward;
pub mod sampler;
pub mod selection;
pub mod spectral;
pub mod synth;
pub mod trajectory;

pub use container::{read_container, write_container, ContainerError};
pub use trajectory::{
    mean_pool_tokens, validate_set, Label, LabeledSample, LatentThought, Trajectory, TrajectorySet,
    ValidationReport,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
