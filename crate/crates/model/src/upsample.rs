use cadpu_core::curvature::surface_variation_of;
use cadpu_core::geometry::cluster_into_patches;
use cadpu_core::{Point3, PointCloud};
use cadpu_data::Normalization;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::{derive_seed, plan_expansion, Error, GeneratorParams, Result, TrainConfig};

/// Upsamples a patch of any size above the neighborhood sizes: normalize,
/// estimate curvature, plan, generate, map back.
pub fn upsample_patch(input: &PointCloud, gen: &GeneratorParams, config: &TrainConfig, seed: u64) -> Result<PointCloud> {
    let norm = Normalization::fit(input)?;
    let local = norm.apply_cloud(input)?.without_normals();
    let field = surface_variation_of(&local, config.k)?;
    let plan = plan_expansion(&field, config.alpha, config.r, config.epsilon, seed)?;
    let out = gen.generate(&local, &plan)?;
    Ok(norm.invert_cloud(&out)?)
}

/// Upsamples an input of exactly `config.n_in` points to `r * n_in`.
pub fn upsample(input: &PointCloud, gen: &GeneratorParams, config: &TrainConfig, seed: u64) -> Result<PointCloud> {
    if input.len() != config.n_in {
        return Err(Error::InvalidInput(format!(
            "model expects {} input points, got {}",
            config.n_in,
            input.len()
        )));
    }
    upsample_patch(input, gen, config, seed)
}

/// Splits `cloud` into `patches` equal clusters, upsamples each and
/// concatenates the results in patch order.
pub fn upsample_cloud(
    cloud: &PointCloud,
    gen: &GeneratorParams,
    config: &TrainConfig,
    patches: usize,
    seed: u64,
) -> Result<PointCloud> {
    let groups = cluster_into_patches(cloud, patches, seed)?;
    let mut out = PointCloud::default();
    for (p, idx) in groups.iter().enumerate() {
        let patch = cloud.select(idx).without_normals();
        out.extend(&upsample_patch(&patch, gen, config, derive_seed(&[seed, p as u64]))?);
    }
    Ok(out)
}

/// Untrained reference: every input point repeated `r` times, each copy
/// moved by Gaussian noise of `jitter` times the patch radius.
pub fn duplicate_jitter_baseline(input: &PointCloud, r: usize, jitter: f64, seed: u64) -> Result<PointCloud> {
    let norm = Normalization::fit(input)?;
    let normal = Normal::new(0.0, jitter * norm.scale)
        .map_err(|e| Error::InvalidInput(format!("jitter {jitter}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(input.len() * r);
    for &p in input.points() {
        for _ in 0..r {
            let d = Point3::new(normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng));
            pts.push(p + d);
        }
    }
    Ok(PointCloud::new(pts)?)
}
