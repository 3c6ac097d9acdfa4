use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "cadpu", version, about = "Curvature-adaptive point cloud upsampling")]
pub struct Cli {
    /// Seed for every random choice; defaults to the config's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// key=value config file applied over the defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file or directory of the command.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cut training pairs from meshes or builtin fixtures.
    MakeDataset(MakeDatasetArgs),
    /// Train a model on a dataset directory.
    Train(TrainArgs),
    /// Upsample a point cloud with a trained checkpoint.
    Upsample(UpsampleArgs),
    /// Chamfer and Hausdorff distances between predictions and references.
    Eval(EvalArgs),
    /// Upsample under increasing input noise and evaluate each level.
    NoiseSweep(NoiseSweepArgs),
    /// Upsample an object sampled at several input sizes.
    ScaleSweep(ScaleSweepArgs),
}

#[derive(Debug, Args)]
pub struct MakeDatasetArgs {
    /// Fixture names or PLY mesh paths, space or comma separated.
    #[arg(required = true, value_delimiter = ',')]
    pub sources: Vec<String>,
    /// Patches cut from each source.
    #[arg(long, default_value_t = 8)]
    pub patches: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory written by make-dataset.
    pub dataset: PathBuf,
    /// Continue from this checkpoint for another `epochs` epochs.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UpsampleArgs {
    /// Input cloud (.xyz or .ply).
    pub input: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Number of equal patches the input is split into.
    #[arg(long, default_value_t = 1)]
    pub patches: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Prediction and reference files, alternating: PRED REF [PRED REF ...].
    #[arg(required = true, num_args = 2..)]
    pub files: Vec<PathBuf>,
    /// Record wall time in the report.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct NoiseSweepArgs {
    /// Clean input cloud.
    pub input: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Noise standard deviations, in input units.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.001, 0.005, 0.01, 0.02])]
    pub stds: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub patches: usize,
    /// Reference cloud; defaults to the clean input.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct ScaleSweepArgs {
    /// Fixture name or PLY mesh path.
    pub object: String,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Input sizes; each must be a multiple of the model's patch size.
    #[arg(long, value_delimiter = ',', default_values_t = [256, 512, 1024, 2048, 4096])]
    pub sizes: Vec<usize>,
    #[arg(long)]
    pub timing: bool,
}
