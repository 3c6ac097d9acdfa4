use std::time::Instant;

use super::{load_config, out_path, read_cloud, scaled_distances};
use crate::args::EvalArgs;
use crate::report::{write_json, EvalReport, EvalRow};
use crate::{Cli, CliError, Result};

pub fn eval(cli: &Cli, args: &EvalArgs) -> Result<()> {
    if args.files.len() % 2 != 0 {
        return Err(CliError::Usage("eval takes PRED REF pairs; got an odd number of files".into()));
    }
    let start = Instant::now();
    let config = load_config(cli)?;
    let mut rows = Vec::new();
    for pair in args.files.chunks(2) {
        let pred = read_cloud(&pair[0])?;
        let reference = read_cloud(&pair[1])?;
        let (cd, hd) = scaled_distances(&pred, &reference)?;
        let name = pair[0]
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| pair[0].display().to_string());
        rows.push(EvalRow { name, cd, hd });
    }
    let wall = args.timing.then(|| start.elapsed().as_secs_f64());
    let report = EvalReport::new(config.seed, &config, rows, wall);
    let path = out_path(cli, "eval.json");
    write_json(&path, &report)?;
    print!("{}", report.table());
    Ok(())
}
