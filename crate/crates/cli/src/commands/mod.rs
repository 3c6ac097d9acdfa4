mod dataset;
mod eval;
mod sweep;
mod train;
mod upsample;

use std::path::{Path, PathBuf};

use cadpu_core::metrics::chamfer_hausdorff;
use cadpu_core::PointCloud;
use cadpu_data::fixtures::{fixture, FIXTURE_NAMES};
use cadpu_data::io::read_ply;
use cadpu_data::TriMesh;
use cadpu_model::{GenArch, TrainConfig, TrainState};

use crate::{Cli, CliError, Result};

pub use dataset::make_dataset;
pub use eval::eval;
pub use sweep::{noise_sweep, scale_sweep};
pub use train::train;
pub use upsample::upsample;

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Defaults, then the `--config` file, then `--seed`.
pub fn load_config(cli: &Cli) -> Result<TrainConfig> {
    let mut c = TrainConfig::default();
    apply_overrides(cli, &mut c)?;
    Ok(c)
}

fn apply_overrides(cli: &Cli, c: &mut TrainConfig) -> Result<()> {
    if let Some(path) = &cli.config {
        c.apply_text(&read_text(path)?)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    }
    if let Some(seed) = cli.seed {
        c.seed = seed;
    }
    c.validate()?;
    Ok(())
}

/// A checkpoint plus the config it runs under: the stored config with
/// `--config` and `--seed` applied. Overrides may not change the architecture.
pub fn load_model(cli: &Cli, path: &Path) -> Result<(TrainState, TrainConfig)> {
    let state = TrainState::load(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut config = state.config.clone();
    apply_overrides(cli, &mut config)?;
    if GenArch::from_config(&config) != GenArch::from_config(&state.config) {
        return Err(CliError::Usage(
            "--config changes the network architecture of the checkpoint".into(),
        ));
    }
    Ok((state, config))
}

/// Builtin fixture or PLY mesh, with the name used for pair ids.
pub fn load_mesh(source: &str) -> Result<(String, TriMesh)> {
    if FIXTURE_NAMES.contains(&source) {
        return Ok((source.to_string(), fixture(source)?));
    }
    let path = Path::new(source);
    if !path.exists() {
        return Err(CliError::Data(format!(
            "{source}: no such file and not a fixture ({})",
            FIXTURE_NAMES.join(", ")
        )));
    }
    let mesh = read_ply(path)
        .and_then(|p| p.into_mesh())
        .map_err(|e| CliError::Data(format!("{source}: {e}")))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| source.to_string());
    Ok((name, mesh))
}

pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    cadpu_data::io::read_cloud(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn out_path(cli: &Cli, default: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

/// Chamfer and Hausdorff in report units.
pub fn scaled_distances(pred: &PointCloud, reference: &PointCloud) -> Result<(f64, f64)> {
    let (cd, hd) = chamfer_hausdorff(pred, reference)?;
    Ok((cd * 1e3, hd * 1e3))
}

/// Patch counts that split `len` points into patches of at least `min_size`.
pub fn valid_patch_counts(len: usize, min_size: usize) -> Vec<usize> {
    (1..=len).filter(|p| len % p == 0 && len / p >= min_size).collect()
}

pub fn check_patches(len: usize, patches: usize, config: &TrainConfig) -> Result<()> {
    let min_size = config.k.max(config.edge_k_for(1)) + 1;
    if patches == 0 || len % patches != 0 || len / patches < min_size {
        let valid: Vec<String> = valid_patch_counts(len, min_size).iter().map(|p| p.to_string()).collect();
        return Err(CliError::Usage(format!(
            "{len} points cannot be split into {patches} patches of at least {min_size} points; valid --patches: {}",
            if valid.is_empty() { "none".to_string() } else { valid.join(", ") }
        )));
    }
    Ok(())
}
