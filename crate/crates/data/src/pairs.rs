use std::fs;
use std::path::Path;

use cadpu_core::geometry::farthest_point_sampling;
use cadpu_core::{KnnIndex, PointCloud};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::{read_xyz, write_xyz};
use crate::{curvature_adaptive_select, sample_mesh_uniform, Error, Normalization, Result, TriMesh};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Sizes used when cutting a mesh into training pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairConfig {
    pub num_patches: usize,
    pub n_in: usize,
    pub r: usize,
    /// Neighborhood size for the curvature estimate.
    pub k: usize,
    pub epsilon: f64,
    /// Dense points per patch, as a multiple of the target size `r * n_in`.
    pub patch_factor: usize,
    /// Dense points over the whole mesh, as a multiple of the patch size.
    pub coverage: usize,
}

impl Default for PairConfig {
    fn default() -> Self {
        Self {
            num_patches: 8,
            n_in: 256,
            r: 4,
            k: 12,
            epsilon: 0.01,
            patch_factor: 10,
            coverage: 4,
        }
    }
}

/// Sparse input and dense, curvature-adaptive target cut from one surface
/// patch, both expressed in the input's unit-sphere frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainPair {
    pub id: String,
    pub input: PointCloud,
    pub target: PointCloud,
    /// Maps the original mesh frame to the stored frame.
    pub normalization: Normalization,
    pub seed: u64,
}

/// Cuts `cfg.num_patches` pairs from `mesh`. Patch `p` uses seed
/// `seed + 1 + p`; `source` prefixes the pair ids.
pub fn make_train_pairs(mesh: &TriMesh, source: &str, cfg: &PairConfig, seed: u64) -> Result<Vec<TrainPair>> {
    if cfg.n_in == 0 || cfg.r < 1 || cfg.num_patches == 0 {
        return Err(cadpu_core::Error::InvalidParameter(format!(
            "need n_in > 0, r >= 1 and at least one patch, got {cfg:?}"
        ))
        .into());
    }
    let target_len = cfg.r * cfg.n_in;
    let patch_len = cfg.patch_factor.max(1) * target_len;
    let dense = sample_mesh_uniform(mesh, patch_len * cfg.coverage.max(1), seed)?;
    let seeds = farthest_point_sampling(&dense, cfg.num_patches.min(dense.len()), seed)?;
    let index = KnnIndex::build(&dense)?;
    let pairs: Vec<Option<TrainPair>> = seeds
        .par_iter()
        .enumerate()
        .map(|(p, &s)| -> Result<Option<TrainPair>> {
            let pseed = seed.wrapping_add(1 + p as u64);
            let id = format!("{source}_{p:03}");
            let mut members = index.query(dense.points()[s], patch_len);
            if members.len() < patch_len.max(target_len) {
                log::warn!("{id}: patch holds {} points, skipped", members.len());
                return Ok(None);
            }
            members.sort_unstable();
            let patch = dense.select(&members);
            let mut rng = ChaCha8Rng::seed_from_u64(pseed);
            let mut picks = rand::seq::index::sample(&mut rng, patch.len(), cfg.n_in).into_vec();
            picks.sort_unstable();
            let input = patch.select(&picks).without_normals();
            let target = curvature_adaptive_select(&patch, target_len, cfg.k, cfg.epsilon, rng.random())?;
            let normalization = Normalization::fit(&input)?;
            Ok(Some(TrainPair {
                id,
                input: normalization.apply_cloud(&input)?,
                target: normalization.apply_cloud(&target)?,
                normalization,
                seed: pseed,
            }))
        })
        .collect::<Result<_>>()?;
    Ok(pairs.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub input: String,
    pub target: String,
    pub seed: u64,
    pub center: [f64; 3],
    pub scale: f64,
}

/// Index of a dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub n_in: usize,
    pub r: usize,
    pub seed: u64,
    pub sources: Vec<String>,
    pub pairs: Vec<ManifestEntry>,
}

/// Writes `<id>.input.xyz`, `<id>.target.xyz` (with normals) and the
/// manifest into `dir`.
pub fn write_dataset(dir: &Path, pairs: &[TrainPair], mut manifest: Manifest) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    manifest.pairs.clear();
    for p in pairs {
        let input = format!("{}.input.xyz", p.id);
        let target = format!("{}.target.xyz", p.id);
        write_xyz(&dir.join(&input), &p.input)?;
        write_xyz(&dir.join(&target), &p.target)?;
        manifest.pairs.push(ManifestEntry {
            id: p.id.clone(),
            input,
            target,
            seed: p.seed,
            center: p.normalization.center.to_array(),
            scale: p.normalization.scale,
        });
    }
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Manifest(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn read_dataset(dir: &Path) -> Result<(Manifest, Vec<TrainPair>)> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    let mut pairs = Vec::with_capacity(manifest.pairs.len());
    for e in &manifest.pairs {
        let input = read_xyz(&dir.join(&e.input))?;
        let target = read_xyz(&dir.join(&e.target))?;
        if input.len() != manifest.n_in || target.len() != manifest.r * manifest.n_in {
            return Err(Error::Manifest(format!(
                "pair {} has {} input and {} target points, expected {} and {}",
                e.id,
                input.len(),
                target.len(),
                manifest.n_in,
                manifest.r * manifest.n_in
            )));
        }
        pairs.push(TrainPair {
            id: e.id.clone(),
            input,
            target,
            normalization: Normalization {
                center: cadpu_core::Point3::from_array(e.center),
                scale: e.scale,
                degenerate: false,
            },
            seed: e.seed,
        });
    }
    Ok((manifest, pairs))
}
