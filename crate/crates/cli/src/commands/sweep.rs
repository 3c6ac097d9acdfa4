use std::time::Instant;

use cadpu_data::{add_gaussian_noise, sample_mesh_uniform};
use cadpu_model::{derive_seed, upsample_cloud};

use super::{check_patches, load_mesh, load_model, out_path, read_cloud, scaled_distances};
use crate::args::{NoiseSweepArgs, ScaleSweepArgs};
use crate::report::{config_echo, write_json, SweepReport, SweepRow, EVAL_MODE, UNITS};
use crate::{Cli, CliError, Result};

const STREAM_NOISE: u64 = 11;
const STREAM_SIZE: u64 = 12;
const STREAM_REFERENCE: u64 = 13;

fn finish(cli: &Cli, report: SweepReport, default: &str) -> Result<()> {
    write_json(&out_path(cli, default), &report)?;
    print!("{}", report.table());
    Ok(())
}

pub fn noise_sweep(cli: &Cli, args: &NoiseSweepArgs) -> Result<()> {
    let start = Instant::now();
    let (state, config) = load_model(cli, &args.checkpoint)?;
    let input = read_cloud(&args.input)?;
    let reference = match &args.reference {
        Some(p) => read_cloud(p)?,
        None => input.clone(),
    };
    check_patches(input.len(), args.patches, &config)?;
    let mut rows = Vec::new();
    for (i, &std) in args.stds.iter().enumerate() {
        if !(std >= 0.0 && std.is_finite()) {
            return Err(CliError::Usage(format!("noise std must be finite and >= 0, got {std}")));
        }
        let noisy = add_gaussian_noise(&input, std, derive_seed(&[config.seed, STREAM_NOISE, i as u64]))?;
        let out = upsample_cloud(&noisy, &state.gen, &config, args.patches, config.seed)?;
        let (cd, hd) = scaled_distances(&out, &reference)?;
        rows.push(SweepRow {
            value: std,
            patches: args.patches,
            cd,
            hd,
        });
    }
    let report = SweepReport {
        mode: EVAL_MODE,
        units: UNITS,
        seed: config.seed,
        config: config_echo(&config),
        parameter: "std",
        rows,
        wall_time_s: args.timing.then(|| start.elapsed().as_secs_f64()),
    };
    finish(cli, report, "noise_sweep.json")
}

pub fn scale_sweep(cli: &Cli, args: &ScaleSweepArgs) -> Result<()> {
    let start = Instant::now();
    let (state, config) = load_model(cli, &args.checkpoint)?;
    let (_, mesh) = load_mesh(&args.object)?;
    let Some(&largest) = args.sizes.iter().max() else {
        return Err(CliError::Usage("--sizes is empty".into()));
    };
    for &size in &args.sizes {
        if size == 0 || size % config.n_in != 0 {
            return Err(CliError::Usage(format!(
                "size {size} is not a positive multiple of the model's patch size {}",
                config.n_in
            )));
        }
    }
    let reference = sample_mesh_uniform(&mesh, config.r * largest, derive_seed(&[config.seed, STREAM_REFERENCE]))?;
    let mut rows = Vec::new();
    for &size in &args.sizes {
        let input = sample_mesh_uniform(&mesh, size, derive_seed(&[config.seed, STREAM_SIZE, size as u64]))?
            .without_normals();
        let patches = size / config.n_in;
        let out = upsample_cloud(&input, &state.gen, &config, patches, config.seed)?;
        let (cd, hd) = scaled_distances(&out, &reference)?;
        rows.push(SweepRow {
            value: size as f64,
            patches,
            cd,
            hd,
        });
    }
    let report = SweepReport {
        mode: EVAL_MODE,
        units: UNITS,
        seed: config.seed,
        config: config_echo(&config),
        parameter: "size",
        rows,
        wall_time_s: args.timing.then(|| start.elapsed().as_secs_f64()),
    };
    finish(cli, report, "scale_sweep.json")
}
