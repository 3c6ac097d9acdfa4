use cadpu_autodiff::{Checkpoint, Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Regression, Result, TrainConfig};

/// Ordered, named parameter tensors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamSet {
    fn from_layout(layout: &[(String, Vec<usize>)], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut set = ParamSet::default();
        for (name, shape) in layout {
            let t = if shape.len() == 2 {
                let a = (6.0 / (shape[0] + shape[1]) as f64).sqrt();
                let n = shape[0] * shape[1];
                Tensor::new(shape, (0..n).map(|_| rng.random_range(-a..a)).collect()).unwrap()
            } else {
                Tensor::zeros(shape)
            };
            set.names.push(name.clone());
            set.tensors.push(t);
        }
        set
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &mut self.tensors[i])
    }

    pub fn shapes(&self) -> Vec<&[usize]> {
        self.tensors.iter().map(Tensor::shape).collect()
    }

    /// Total number of scalars.
    pub fn count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub(crate) fn bind(&self, tape: &mut Tape, trainable: bool) -> Result<Vec<Var>> {
        self.tensors
            .iter()
            .map(|t| {
                Ok(if trainable {
                    tape.param(t.clone())?
                } else {
                    tape.constant(t.clone())?
                })
            })
            .collect()
    }

    /// Appends every tensor to `records` under `prefix`.
    pub(crate) fn export(&self, prefix: &str, records: &mut Vec<(String, Tensor)>) {
        for (n, t) in self.names.iter().zip(&self.tensors) {
            records.push((format!("{prefix}{n}"), t.clone()));
        }
    }

    /// Replaces every tensor by the checkpoint record `prefix + name`.
    pub(crate) fn import(&mut self, prefix: &str, ck: &Checkpoint) -> Result<()> {
        for (n, t) in self.names.iter().zip(self.tensors.iter_mut()) {
            let key = format!("{prefix}{n}");
            let src = ck
                .get(&key)
                .ok_or_else(|| Error::Checkpoint(format!("missing record {key}")))?;
            if src.shape() != t.shape() {
                return Err(Error::Checkpoint(format!(
                    "record {key} has shape {:?}, expected {:?}",
                    src.shape(),
                    t.shape()
                )));
            }
            *t = src.clone();
        }
        Ok(())
    }
}

fn dense(layout: &mut Vec<(String, Vec<usize>)>, name: &str, fan_in: usize, fan_out: usize) {
    layout.push((format!("{name}.w"), vec![fan_in, fan_out]));
    layout.push((format!("{name}.b"), vec![fan_out]));
}

/// Generator shape parameters taken from a [`TrainConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct GenArch {
    pub lift: usize,
    pub widths: Vec<usize>,
    pub fusion: usize,
    pub blocks: usize,
    pub edge_k: usize,
    pub expand: usize,
    pub regress: Vec<usize>,
    pub regression: Regression,
}

impl GenArch {
    pub fn from_config(c: &TrainConfig) -> Self {
        Self {
            lift: c.lift,
            widths: c.widths.clone(),
            fusion: c.fusion,
            blocks: c.blocks,
            edge_k: c.edge_k,
            expand: c.expand,
            regress: c.regress.clone(),
            regression: c.regression,
        }
    }

    fn block_input(&self, b: usize) -> usize {
        if b == 0 {
            self.lift
        } else {
            self.fusion
        }
    }

    /// Width of the concatenated per-point feature.
    pub fn feature_width(&self) -> usize {
        self.blocks * self.fusion
    }

    fn layout(&self) -> Vec<(String, Vec<usize>)> {
        let mut l = Vec::new();
        dense(&mut l, "lift", 3, self.lift);
        let block_out: usize = self.widths.iter().sum();
        for b in 0..self.blocks {
            let c = self.block_input(b);
            let mut fan_in = 2 * c;
            for (j, &w) in self.widths.iter().enumerate() {
                dense(&mut l, &format!("block{b}.dense{j}"), fan_in, w);
                fan_in += w;
            }
            dense(&mut l, &format!("fuse{b}"), c + block_out, self.fusion);
        }
        dense(&mut l, "expand0", self.feature_width() + 2, self.expand);
        dense(&mut l, "expand1", self.expand, self.expand);
        let mut fan_in = self.expand;
        for (j, &w) in self.regress.iter().enumerate() {
            dense(&mut l, &format!("regress{j}"), fan_in, w);
            fan_in = w;
        }
        dense(&mut l, &format!("regress{}", self.regress.len()), fan_in, 3);
        l
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub arch: GenArch,
    pub params: ParamSet,
}

impl GeneratorParams {
    pub fn init(config: &TrainConfig, seed: u64) -> Self {
        let arch = GenArch::from_config(config);
        let params = ParamSet::from_layout(&arch.layout(), seed);
        log::debug!("generator: {} parameters", params.count());
        Self { arch, params }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorParams {
    pub widths: Vec<usize>,
    pub head: usize,
    pub params: ParamSet,
}

impl DiscriminatorParams {
    pub fn init(config: &TrainConfig, seed: u64) -> Self {
        let mut l = Vec::new();
        let mut fan_in = 3;
        for (j, &w) in config.d_widths.iter().enumerate() {
            dense(&mut l, &format!("point{j}"), fan_in, w);
            fan_in = w;
        }
        dense(&mut l, "head0", fan_in, config.d_head);
        dense(&mut l, "head1", config.d_head, 1);
        let params = ParamSet::from_layout(&l, seed);
        log::debug!("discriminator: {} parameters", params.count());
        Self {
            widths: config.d_widths.clone(),
            head: config.d_head,
            params,
        }
    }
}
