use std::fmt::Write as _;

use crate::{Error, Result};

/// Where regressed coordinates are measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regression {
    /// Network output is the point itself.
    Absolute,
    /// Network output is added to the slot's source input point.
    Offset,
}

/// Hyperparameters for the network, the expansion and the training loop.
///
/// Serialized as `key=value` lines; `#` starts a comment.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub r: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Neighborhood size for curvature and the regularizer.
    pub k: usize,
    pub epsilon: f64,
    pub lr_g: f64,
    pub lr_d: f64,
    pub decay: f64,
    /// Steps between learning-rate decays; 0 means a third of all steps.
    pub decay_interval: u64,
    pub batch: usize,
    pub epochs: usize,
    pub seed: u64,
    pub n_in: usize,
    pub lift: usize,
    /// Dense EdgeConv layer widths.
    pub widths: Vec<usize>,
    pub fusion: usize,
    pub blocks: usize,
    /// Feature-space neighbors; 0 picks 16, or 8 below 64 points.
    pub edge_k: usize,
    pub expand: usize,
    pub regress: Vec<usize>,
    pub d_widths: Vec<usize>,
    pub d_head: usize,
    pub val_fraction: f64,
    /// Relative accuracy of the auction EMD used in the loss.
    pub emd_eps: f64,
    pub regression: Regression,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            r: 4,
            alpha: 0.5,
            beta: 0.15,
            gamma: 0.005,
            k: 12,
            epsilon: 0.01,
            lr_g: 1e-3,
            lr_d: 1e-4,
            decay: 0.7,
            decay_interval: 0,
            batch: 8,
            epochs: 120,
            seed: 0,
            n_in: 256,
            lift: 24,
            widths: vec![24, 48, 48],
            fusion: 30,
            blocks: 4,
            edge_k: 0,
            expand: 128,
            regress: vec![128, 64],
            d_widths: vec![64, 128, 256],
            d_head: 64,
            val_fraction: 0.125,
            emd_eps: 0.01,
            regression: Regression::Offset,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "r",
    "alpha",
    "beta",
    "gamma",
    "k",
    "epsilon",
    "lr_g",
    "lr_d",
    "decay",
    "decay_interval",
    "batch",
    "epochs",
    "seed",
    "n_in",
    "lift",
    "widths",
    "fusion",
    "blocks",
    "edge_k",
    "expand",
    "regress",
    "d_widths",
    "d_head",
    "val_fraction",
    "emd_eps",
    "regression",
];

fn invalid(key: &str, value: &str, reason: impl Into<String>) -> Error {
    Error::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.into(),
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| invalid(key, value, "not a number"))
}

fn list(key: &str, value: &str) -> Result<Vec<usize>> {
    value.split(',').map(|v| num(key, v.trim())).collect()
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl TrainConfig {
    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "r" => self.r = num(key, v)?,
            "alpha" => self.alpha = num(key, v)?,
            "beta" => self.beta = num(key, v)?,
            "gamma" => self.gamma = num(key, v)?,
            "k" => self.k = num(key, v)?,
            "epsilon" => self.epsilon = num(key, v)?,
            "lr_g" => self.lr_g = num(key, v)?,
            "lr_d" => self.lr_d = num(key, v)?,
            "decay" => self.decay = num(key, v)?,
            "decay_interval" => self.decay_interval = num(key, v)?,
            "batch" => self.batch = num(key, v)?,
            "epochs" => self.epochs = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "n_in" => self.n_in = num(key, v)?,
            "lift" => self.lift = num(key, v)?,
            "widths" => self.widths = list(key, v)?,
            "fusion" => self.fusion = num(key, v)?,
            "blocks" => self.blocks = num(key, v)?,
            "edge_k" => self.edge_k = num(key, v)?,
            "expand" => self.expand = num(key, v)?,
            "regress" => self.regress = list(key, v)?,
            "d_widths" => self.d_widths = list(key, v)?,
            "d_head" => self.d_head = num(key, v)?,
            "val_fraction" => self.val_fraction = num(key, v)?,
            "emd_eps" => self.emd_eps = num(key, v)?,
            "regression" => {
                self.regression = match v {
                    "absolute" => Regression::Absolute,
                    "offset" => Regression::Offset,
                    _ => return Err(invalid(key, v, "expected absolute or offset")),
                }
            }
            other => return Err(Error::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Applies every setting in `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Syntax {
                line: i + 1,
                text: raw.to_string(),
            })?;
            self.set(key, value)?;
        }
        self.validate()
    }

    /// Defaults overridden by `text`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| writeln!(s, "{k}={v}").unwrap();
        put("r", self.r.to_string());
        put("alpha", self.alpha.to_string());
        put("beta", self.beta.to_string());
        put("gamma", self.gamma.to_string());
        put("k", self.k.to_string());
        put("epsilon", self.epsilon.to_string());
        put("lr_g", self.lr_g.to_string());
        put("lr_d", self.lr_d.to_string());
        put("decay", self.decay.to_string());
        put("decay_interval", self.decay_interval.to_string());
        put("batch", self.batch.to_string());
        put("epochs", self.epochs.to_string());
        put("seed", self.seed.to_string());
        put("n_in", self.n_in.to_string());
        put("lift", self.lift.to_string());
        put("widths", join(&self.widths));
        put("fusion", self.fusion.to_string());
        put("blocks", self.blocks.to_string());
        put("edge_k", self.edge_k.to_string());
        put("expand", self.expand.to_string());
        put("regress", join(&self.regress));
        put("d_widths", join(&self.d_widths));
        put("d_head", self.d_head.to_string());
        put("val_fraction", self.val_fraction.to_string());
        put("emd_eps", self.emd_eps.to_string());
        let reg = match self.regression {
            Regression::Absolute => "absolute",
            Regression::Offset => "offset",
        };
        put("regression", reg.to_string());
        s
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, value: String, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(invalid(key, &value, reason))
            }
        };
        check(self.r >= 2, "r", self.r.to_string(), "must be at least 2")?;
        check((0.0..=1.0).contains(&self.alpha), "alpha", self.alpha.to_string(), "must lie in [0, 1]")?;
        check(self.beta >= 0.0, "beta", self.beta.to_string(), "must be >= 0")?;
        check(self.gamma >= 0.0, "gamma", self.gamma.to_string(), "must be >= 0")?;
        check(self.k >= 3, "k", self.k.to_string(), "must be at least 3")?;
        check(self.epsilon > 0.0, "epsilon", self.epsilon.to_string(), "must be > 0")?;
        check(self.lr_g > 0.0, "lr_g", self.lr_g.to_string(), "must be > 0")?;
        check(self.lr_d > 0.0, "lr_d", self.lr_d.to_string(), "must be > 0")?;
        check(self.decay > 0.0 && self.decay <= 1.0, "decay", self.decay.to_string(), "must lie in (0, 1]")?;
        check(self.batch >= 1, "batch", self.batch.to_string(), "must be at least 1")?;
        check(self.n_in > self.k, "n_in", self.n_in.to_string(), "must exceed k")?;
        for (key, v) in [
            ("lift", self.lift),
            ("fusion", self.fusion),
            ("blocks", self.blocks),
            ("expand", self.expand),
            ("d_head", self.d_head),
        ] {
            check(v >= 1, key, v.to_string(), "must be at least 1")?;
        }
        for (key, v) in [("widths", &self.widths), ("regress", &self.regress), ("d_widths", &self.d_widths)] {
            check(!v.is_empty() && v.iter().all(|&w| w >= 1), key, join(v), "needs positive widths")?;
        }
        check(
            (0.0..1.0).contains(&self.val_fraction),
            "val_fraction",
            self.val_fraction.to_string(),
            "must lie in [0, 1)",
        )?;
        check(self.emd_eps > 0.0, "emd_eps", self.emd_eps.to_string(), "must be > 0")?;
        Ok(())
    }

    /// Feature-space neighbor count for an `n`-point input.
    pub fn edge_k_for(&self, n: usize) -> usize {
        match self.edge_k {
            0 if n >= 64 => 16,
            0 => 8,
            k => k,
        }
    }
}
