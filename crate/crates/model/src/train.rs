use cadpu_autodiff::{AdamState, Checkpoint, Tape, Tensor, Var};
use cadpu_core::curvature::{surface_variation_of, CurvatureField};
use cadpu_core::metrics::chamfer;
use cadpu_core::PointCloud;
use cadpu_data::TrainPair;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::loss::{discriminator_loss, reconstruction_on_tape};
use crate::network::{cloud_tensor, discriminate_on_tape, generate_on_tape, tensor_points, Bound};
use crate::{derive_seed, plan_expansion, DiscriminatorParams, Error, GenArch, GeneratorParams, Result, TrainConfig};

const STREAM_INIT_G: u64 = 1;
const STREAM_INIT_D: u64 = 2;
const STREAM_SHUFFLE: u64 = 3;
const STREAM_PLAN: u64 = 4;
const STREAM_VAL: u64 = 5;
const STREAM_SPLIT: u64 = 6;

/// Everything needed to continue training: config, both networks and both
/// optimizers.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub config: TrainConfig,
    pub gen: GeneratorParams,
    pub disc: DiscriminatorParams,
    pub adam_g: AdamState,
    pub adam_d: AdamState,
    pub epochs_done: usize,
}

/// Per-epoch means over training samples, plus validation Chamfer distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub step: u64,
    pub emd: f64,
    pub regularizer: f64,
    pub adversarial: f64,
    pub d_loss: f64,
    pub val_cd: Option<f64>,
    pub lr_g: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
}

impl TrainState {
    pub fn new(config: TrainConfig) -> Self {
        let gen = GeneratorParams::init(&config, derive_seed(&[config.seed, STREAM_INIT_G]));
        let disc = DiscriminatorParams::init(&config, derive_seed(&[config.seed, STREAM_INIT_D]));
        let adam_g = AdamState::new(&gen.params.shapes(), config.lr_g, config.decay, 1);
        let adam_d = AdamState::new(&disc.params.shapes(), config.lr_d, config.decay, 1);
        Self {
            config,
            gen,
            disc,
            adam_g,
            adam_d,
            epochs_done: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.adam_g.step
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut records = Vec::new();
        self.gen.params.export("g.", &mut records);
        self.disc.params.export("d.", &mut records);
        for (prefix, adam, names) in [
            ("adam_g", &self.adam_g, self.gen.params.names()),
            ("adam_d", &self.adam_d, self.disc.params.names()),
        ] {
            for (n, (m, v)) in names.iter().zip(adam.m.iter().zip(&adam.v)) {
                records.push((format!("{prefix}.m.{n}"), m.clone()));
                records.push((format!("{prefix}.v.{n}"), v.clone()));
            }
            records.push((format!("{prefix}.step"), Tensor::scalar(adam.step as f64)));
            records.push((format!("{prefix}.decay_interval"), Tensor::scalar(adam.decay_interval as f64)));
        }
        records.push(("state.epochs_done".into(), Tensor::scalar(self.epochs_done as f64)));
        Checkpoint {
            step: self.step(),
            meta: self.config.to_text(),
            records,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let config = TrainConfig::parse(&ck.meta)?;
        let mut state = Self::new(config);
        state.gen.params.import("g.", ck)?;
        state.disc.params.import("d.", ck)?;
        let scalar = |key: &str| -> Result<u64> {
            ck.get(key)
                .and_then(Tensor::item)
                .map(|v| v as u64)
                .ok_or_else(|| Error::Checkpoint(format!("missing record {key}")))
        };
        for (prefix, adam, names) in [
            ("adam_g", &mut state.adam_g, state.gen.params.names()),
            ("adam_d", &mut state.adam_d, state.disc.params.names()),
        ] {
            for (i, n) in names.iter().enumerate() {
                for (kind, slot) in [("m", &mut adam.m[i]), ("v", &mut adam.v[i])] {
                    let key = format!("{prefix}.{kind}.{n}");
                    let t = ck.get(&key).ok_or_else(|| Error::Checkpoint(format!("missing record {key}")))?;
                    if t.shape() != slot.shape() {
                        return Err(Error::Checkpoint(format!("record {key} has the wrong shape")));
                    }
                    *slot = t.clone();
                }
            }
            adam.step = scalar(&format!("{prefix}.step"))?;
            adam.decay_interval = scalar(&format!("{prefix}.decay_interval"))?.max(1);
        }
        state.epochs_done = scalar("state.epochs_done")? as usize;
        if state.step() != ck.step {
            return Err(Error::Checkpoint("step counter disagrees with optimizer state".into()));
        }
        Ok(state)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        Ok(self.to_checkpoint().save(path)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}

/// Deterministically holds out `floor(val_fraction * len)` pairs (at least
/// one pair always stays in training). Returns `(train, validation)`.
pub fn split_validation(pairs: &[TrainPair], val_fraction: f64, seed: u64) -> (Vec<TrainPair>, Vec<TrainPair>) {
    let n_val = ((val_fraction * pairs.len() as f64).floor() as usize).min(pairs.len().saturating_sub(1));
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(&[seed, STREAM_SPLIT])));
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut val_idx = val_idx.to_vec();
    let mut train_idx = train_idx.to_vec();
    val_idx.sort_unstable();
    train_idx.sort_unstable();
    (
        train_idx.iter().map(|&i| pairs[i].clone()).collect(),
        val_idx.iter().map(|&i| pairs[i].clone()).collect(),
    )
}

/// Splits `pairs` by `config.val_fraction` and trains from scratch.
pub fn train(pairs: &[TrainPair], config: &TrainConfig) -> Result<(TrainState, TrainLog)> {
    let (train_set, val_set) = split_validation(pairs, config.val_fraction, config.seed);
    train_with_validation(&train_set, &val_set, config, None)
}

struct Sample<'a> {
    pair: &'a TrainPair,
    curvature: CurvatureField,
}

struct Forward {
    tape: Tape,
    g: Bound,
    pred: Var,
    pred_cloud: PointCloud,
}

fn check_pairs(pairs: &[TrainPair], config: &TrainConfig) -> Result<()> {
    for p in pairs {
        if p.input.len() != config.n_in || p.target.len() != config.r * p.input.len() {
            return Err(Error::InvalidInput(format!(
                "pair {} has {} input and {} target points; config wants n_in={} and r={}",
                p.id,
                p.input.len(),
                p.target.len(),
                config.n_in,
                config.r
            )));
        }
    }
    Ok(())
}

fn prepare<'a>(pairs: &'a [TrainPair], config: &TrainConfig) -> Result<Vec<Sample<'a>>> {
    pairs
        .par_iter()
        .map(|pair| {
            Ok(Sample {
                pair,
                curvature: surface_variation_of(&pair.input, config.k)?,
            })
        })
        .collect()
}

/// Mean validation Chamfer distance with fixed per-pair plan seeds.
fn validation_cd(state: &TrainState, val: &[Sample]) -> Result<Option<f64>> {
    if val.is_empty() {
        return Ok(None);
    }
    let c = &state.config;
    let cds = val
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let seed = derive_seed(&[c.seed, STREAM_VAL, i as u64]);
            let plan = plan_expansion(&s.curvature, c.alpha, c.r, c.epsilon, seed)?;
            let pred = state.gen.generate(&s.pair.input, &plan)?;
            Ok(chamfer(&pred, &s.pair.target)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Some(cds.iter().sum::<f64>() / cds.len() as f64))
}

fn sum_grads(per_sample: Vec<Vec<Tensor>>, scale: f64) -> Vec<Tensor> {
    let mut it = per_sample.into_iter();
    let mut total = it.next().expect("nonempty batch");
    for g in it {
        for (t, s) in total.iter_mut().zip(g) {
            for (a, b) in t.data_mut().iter_mut().zip(s.data()) {
                *a += b;
            }
        }
    }
    for t in &mut total {
        for v in t.data_mut() {
            *v *= scale;
        }
    }
    total
}

fn non_finite(e: Error, epoch: usize, batch: usize) -> Error {
    match e {
        Error::Autodiff(cadpu_autodiff::Error::NonFinite { .. }) | Error::Core(cadpu_core::Error::NonFinite(_)) => {
            Error::NonFiniteLoss { epoch, batch }
        }
        other => other,
    }
}

#[derive(Default)]
struct BatchStats {
    emd: f64,
    reg: f64,
    adv: f64,
    d_loss: f64,
}

fn run_batch(state: &mut TrainState, samples: &[&Sample], plan_seeds: &[u64]) -> Result<BatchStats> {
    let c = state.config.clone();
    let b = samples.len() as f64;
    // Generator forward, kept on per-sample tapes for the generator step.
    let mut fwd: Vec<Forward> = samples
        .par_iter()
        .zip(plan_seeds)
        .map(|(s, &seed)| {
            let plan = plan_expansion(&s.curvature, c.alpha, c.r, c.epsilon, seed)?;
            let mut tape = Tape::new();
            let g = Bound::new(&mut tape, &state.gen.params, true)?;
            let pred = generate_on_tape(&mut tape, &g, &state.gen, &s.pair.input, &plan)?;
            let pred_cloud = PointCloud::new(tensor_points(tape.value(pred)))?;
            Ok(Forward {
                tape,
                g,
                pred,
                pred_cloud,
            })
        })
        .collect::<Result<_>>()?;

    // Discriminator step on the current predictions.
    let disc = &state.disc;
    let d_results: Vec<(f64, f64, Vec<Tensor>)> = samples
        .par_iter()
        .zip(&fwd)
        .map(|(s, f)| {
            let mut tape = Tape::new();
            let d = Bound::new(&mut tape, &disc.params, true)?;
            let xp = tape.constant(cloud_tensor(f.pred_cloud.points()))?;
            let xg = tape.constant(cloud_tensor(s.pair.target.points()))?;
            let dp = discriminate_on_tape(&mut tape, &d, disc, xp)?;
            let dg = discriminate_on_tape(&mut tape, &d, disc, xg)?;
            let sp = tape.square(dp)?;
            let dg1 = tape.add_scalar(dg, -1.0)?;
            let sg = tape.square(dg1)?;
            let both = tape.add(sp, sg)?;
            let loss = tape.scale(both, 0.5)?;
            let (vp, vg) = (tape.value(dp).data()[0], tape.value(dg).data()[0]);
            let grads = tape.backward(loss)?;
            let gs = d.vars.iter().map(|&v| grads.wrt(v)).collect::<cadpu_autodiff::Result<Vec<_>>>()?;
            Ok((vp, vg, gs))
        })
        .collect::<Result<_>>()?;
    let (dp, dg): (Vec<f64>, Vec<f64>) = d_results.iter().map(|r| (r.0, r.1)).unzip();
    let d_loss = discriminator_loss(&dp, &dg);
    if !d_loss.is_finite() {
        return Err(cadpu_autodiff::Error::NonFinite { op: "discriminator loss" }.into());
    }
    let d_grads = sum_grads(d_results.into_iter().map(|r| r.2).collect(), 1.0 / b);
    state.adam_d.update(state.disc.params.tensors_mut(), &d_grads)?;

    // Generator step against the updated discriminator.
    let disc = &state.disc;
    let g_results: Vec<(f64, f64, f64, Vec<Tensor>)> = samples
        .par_iter()
        .zip(fwd.par_iter_mut())
        .map(|(s, f)| {
            let tape = &mut f.tape;
            let (recon, emd, reg) = reconstruction_on_tape(tape, f.pred, &s.pair.target, c.beta, c.k, c.emd_eps)?;
            let d = Bound::new(tape, &disc.params, false)?;
            let score = discriminate_on_tape(tape, &d, disc, f.pred)?;
            let shifted = tape.add_scalar(score, -1.0)?;
            let sq = tape.square(shifted)?;
            let adv = tape.scale(sq, 0.5 * c.gamma)?;
            let total = tape.add(recon, adv)?;
            let adv_value = tape.value(adv).data()[0];
            let grads = tape.backward(total)?;
            let gs = f.g.vars.iter().map(|&v| grads.wrt(v)).collect::<cadpu_autodiff::Result<Vec<_>>>()?;
            Ok((emd, reg, adv_value, gs))
        })
        .collect::<Result<_>>()?;
    let mut stats = BatchStats {
        d_loss,
        ..Default::default()
    };
    for r in &g_results {
        stats.emd += r.0 / b;
        stats.reg += r.1 / b;
        stats.adv += r.2 / b;
    }
    if !(stats.emd + stats.reg + stats.adv).is_finite() {
        return Err(cadpu_autodiff::Error::NonFinite { op: "generator loss" }.into());
    }
    let g_grads = sum_grads(g_results.into_iter().map(|r| r.3).collect(), 1.0 / b);
    state.adam_g.update(state.gen.params.tensors_mut(), &g_grads)?;
    Ok(stats)
}

/// Trains for `config.epochs` epochs on `train_set`, logging validation CD
/// on `val_set` after each epoch. With `resume`, continues from that state
/// (its architecture must match `config`).
pub fn train_with_validation(
    train_set: &[TrainPair],
    val_set: &[TrainPair],
    config: &TrainConfig,
    resume: Option<TrainState>,
) -> Result<(TrainState, TrainLog)> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::InvalidInput("no training pairs".into()));
    }
    check_pairs(train_set, config)?;
    check_pairs(val_set, config)?;
    let batches_per_epoch = train_set.len().div_ceil(config.batch);
    let mut state = match resume {
        Some(mut s) => {
            if GenArch::from_config(&s.config) != GenArch::from_config(config) || s.config.d_widths != config.d_widths {
                return Err(Error::InvalidInput("resumed checkpoint has a different architecture".into()));
            }
            s.config = config.clone();
            s.adam_g.base_lr = config.lr_g;
            s.adam_d.base_lr = config.lr_d;
            s
        }
        None => {
            let mut s = TrainState::new(config.clone());
            let interval = if config.decay_interval > 0 {
                config.decay_interval
            } else {
                ((config.epochs * batches_per_epoch) as u64 / 3).max(1)
            };
            s.adam_g.decay_interval = interval;
            s.adam_d.decay_interval = interval;
            s
        }
    };
    let samples = prepare(train_set, config)?;
    let val = prepare(val_set, config)?;
    let mut log = TrainLog::default();
    let first = state.epochs_done;
    for epoch in first..first + config.epochs {
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(&[
            config.seed,
            STREAM_SHUFFLE,
            epoch as u64,
        ])));
        let mut totals = BatchStats::default();
        for (bi, chunk) in order.chunks(config.batch).enumerate() {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &samples[i]).collect();
            let seeds: Vec<u64> = chunk
                .iter()
                .map(|&i| derive_seed(&[config.seed, STREAM_PLAN, epoch as u64, i as u64]))
                .collect();
            let stats = run_batch(&mut state, &batch, &seeds).map_err(|e| non_finite(e, epoch + 1, bi))?;
            let w = chunk.len() as f64 / samples.len() as f64;
            totals.emd += stats.emd * w;
            totals.reg += stats.reg * w;
            totals.adv += stats.adv * w;
            totals.d_loss += stats.d_loss * w;
        }
        state.epochs_done = epoch + 1;
        let val_cd = validation_cd(&state, &val)?;
        let entry = EpochLog {
            epoch: epoch + 1,
            step: state.step(),
            emd: totals.emd,
            regularizer: totals.reg,
            adversarial: totals.adv,
            d_loss: totals.d_loss,
            val_cd,
            lr_g: state.adam_g.current_lr(),
        };
        log::info!(
            "epoch {} step {} emd {:.5} reg {:.5} adv {:.6} d {:.5} val_cd {:?}",
            entry.epoch,
            entry.step,
            entry.emd,
            entry.regularizer,
            entry.adversarial,
            entry.d_loss,
            entry.val_cd
        );
        log.epochs.push(entry);
    }
    Ok((state, log))
}
