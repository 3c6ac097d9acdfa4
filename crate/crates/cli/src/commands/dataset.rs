use cadpu_data::{make_train_pairs, write_dataset, Manifest, PairConfig};
use cadpu_model::derive_seed;

use super::{load_config, load_mesh, out_path};
use crate::args::MakeDatasetArgs;
use crate::{Cli, CliError, Result};

pub fn make_dataset(cli: &Cli, args: &MakeDatasetArgs) -> Result<()> {
    let sources: Vec<&str> = args.sources.iter().map(|s| s.trim()).filter(|s| !s.is_empty()).collect();
    if sources.is_empty() {
        return Err(CliError::Usage("make-dataset needs at least one mesh or fixture".into()));
    }
    if args.patches == 0 {
        return Err(CliError::Usage("--patches must be at least 1".into()));
    }
    let config = load_config(cli)?;
    let dir = out_path(cli, "dataset");
    let pc = PairConfig {
        num_patches: args.patches,
        n_in: config.n_in,
        r: config.r,
        k: config.k,
        epsilon: config.epsilon,
        ..PairConfig::default()
    };
    let mut pairs = Vec::new();
    let mut names = Vec::new();
    let mut failed = 0;
    for (i, source) in sources.iter().enumerate() {
        let made = load_mesh(source).and_then(|(name, mesh)| {
            if names.contains(&name) {
                return Err(CliError::Usage(format!("{source}: source name {name:?} listed twice")));
            }
            let p = make_train_pairs(&mesh, &name, &pc, derive_seed(&[config.seed, i as u64]))?;
            Ok((name, p))
        });
        match made {
            Ok((name, p)) => {
                println!("{name}: {} pairs", p.len());
                names.push(name);
                pairs.extend(p);
            }
            Err(e) => {
                eprintln!("error: {e}");
                failed += 1;
            }
        }
    }
    if pairs.is_empty() {
        return Err(CliError::Data("no source produced any pairs".into()));
    }
    let manifest = Manifest {
        n_in: config.n_in,
        r: config.r,
        seed: config.seed,
        sources: names,
        pairs: Vec::new(),
    };
    let manifest = write_dataset(&dir, &pairs, manifest)?;
    println!("wrote {} pairs to {}", manifest.pairs.len(), dir.display());
    if failed > 0 {
        return Err(CliError::Data(format!("{failed} of {} sources failed", sources.len())));
    }
    Ok(())
}
