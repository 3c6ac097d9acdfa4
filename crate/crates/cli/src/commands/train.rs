use cadpu_data::read_dataset;
use cadpu_model::{split_validation, train_with_validation, TrainState};

use super::{load_config, out_path};
use crate::args::TrainArgs;
use crate::report::write_json;
use crate::{Cli, CliError, Result};

pub fn train(cli: &Cli, args: &TrainArgs) -> Result<()> {
    let config = load_config(cli)?;
    let (manifest, pairs) = read_dataset(&args.dataset)?;
    if manifest.n_in != config.n_in || manifest.r != config.r {
        return Err(CliError::Data(format!(
            "dataset has n_in={} r={}, config has n_in={} r={}",
            manifest.n_in, manifest.r, config.n_in, config.r
        )));
    }
    let resume = match &args.resume {
        Some(path) => Some(TrainState::load(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?),
        None => None,
    };
    let (train_set, val_set) = split_validation(&pairs, config.val_fraction, config.seed);
    let (state, log) = train_with_validation(&train_set, &val_set, &config, resume)?;
    let out = out_path(cli, "model.ckpt");
    state.save(&out).map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    write_json(&out.with_extension("log.json"), &log)?;
    println!("{:>6} {:>8} {:>12} {:>10} {:>10} {:>10} {:>12}", "epoch", "step", "emd", "reg", "adv", "d_loss", "val_cd");
    for e in &log.epochs {
        println!(
            "{:>6} {:>8} {:>12.5} {:>10.5} {:>10.6} {:>10.5} {:>12}",
            e.epoch,
            e.step,
            e.emd,
            e.regularizer,
            e.adversarial,
            e.d_loss,
            e.val_cd.map_or("-".to_string(), |v| format!("{v:.6}"))
        );
    }
    println!("wrote {} ({} train, {} val pairs)", out.display(), train_set.len(), val_set.len());
    Ok(())
}
