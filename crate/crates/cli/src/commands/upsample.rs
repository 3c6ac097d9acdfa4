use cadpu_data::io::write_cloud;
use cadpu_model::upsample_cloud;

use super::{check_patches, load_model, out_path, read_cloud};
use crate::args::UpsampleArgs;
use crate::{Cli, CliError, Result};

pub fn upsample(cli: &Cli, args: &UpsampleArgs) -> Result<()> {
    let (state, config) = load_model(cli, &args.checkpoint)?;
    let input = read_cloud(&args.input)?;
    check_patches(input.len(), args.patches, &config)?;
    let out = upsample_cloud(&input, &state.gen, &config, args.patches, config.seed)?;
    let path = out_path(cli, "upsampled.xyz");
    write_cloud(&path, &out).map_err(|e| CliError::Data(e.to_string()))?;
    println!("wrote {} points to {}", out.len(), path.display());
    Ok(())
}
