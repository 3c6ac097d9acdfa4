//! Curvature-adaptive point set upsampling network.
//!
//! The generator lifts input points to features with densely connected
//! EdgeConv blocks, expands them to `r * N` rows following an
//! [`ExpansionPlan`] that mixes round-robin duplication with
//! curvature-weighted draws, and regresses one point per row. A PointNet
//! discriminator supplies the least-squares adversarial term.

mod config;
mod error;
mod loss;
pub mod network;
mod params;
mod plan;
mod train;
mod upsample;

pub use config::{Regression, TrainConfig, CONFIG_KEYS};
pub use error::{Error, Result};
pub use loss::{discriminator_loss, generator_loss, LossParts};
pub use params::{DiscriminatorParams, GenArch, GeneratorParams, ParamSet};
pub use plan::{grid_corners, plan_expansion, ExpansionPlan};
pub use train::{split_validation, train, train_with_validation, EpochLog, TrainLog, TrainState};
pub use upsample::{duplicate_jitter_baseline, upsample, upsample_cloud, upsample_patch};

/// Mixes seed components into one stream seed (splitmix64 finalizer).
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x243f_6a88_85a3_08d3;
    for &p in parts {
        h ^= p;
        h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    h
}
