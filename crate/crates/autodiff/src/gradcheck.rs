//! Central finite-difference checks of tape gradients.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Result, Tape, Tensor, Var};

/// Coordinates whose analytic and numeric gradients are both below this
/// magnitude are not compared.
pub const GRAD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GradCheck {
    pub checked: usize,
    pub max_rel_error: f64,
}

impl GradCheck {
    pub fn merge(&mut self, other: GradCheck) {
        self.checked += other.checked;
        self.max_rel_error = self.max_rel_error.max(other.max_rel_error);
    }
}

/// Compares the tape gradient of `f` with central differences of step `h`
/// on every input coordinate.
pub fn check_gradients<F>(inputs: &[Tensor], h: f64, f: F) -> Result<GradCheck>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let eval = |xs: &[Tensor]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars = xs
            .iter()
            .map(|x| tape.constant(x.clone()))
            .collect::<Result<Vec<_>>>()?;
        let out = f(&mut tape, &vars)?;
        Ok(tape.value(out).data()[0])
    };
    let mut tape = Tape::new();
    let vars = inputs
        .iter()
        .map(|x| tape.param(x.clone()))
        .collect::<Result<Vec<_>>>()?;
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;
    let mut report = GradCheck::default();
    let mut work = inputs.to_vec();
    for (k, &v) in vars.iter().enumerate() {
        let analytic = grads.wrt(v)?;
        for j in 0..work[k].len() {
            let orig = work[k].data()[j];
            work[k].data_mut()[j] = orig + h;
            let up = eval(&work)?;
            work[k].data_mut()[j] = orig - h;
            let down = eval(&work)?;
            work[k].data_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic.data()[j];
            let scale = a.abs().max(numeric.abs());
            if scale > GRAD_FLOOR {
                report.checked += 1;
                report.max_rel_error = report.max_rel_error.max((a - numeric).abs() / scale);
            }
        }
    }
    Ok(report)
}

/// Names of the ops covered by [`op_suite`].
pub const SUITE_OPS: &[&str] = &[
    "matmul",
    "add",
    "add_broadcast",
    "sub",
    "mul",
    "scale",
    "add_scalar",
    "relu",
    "leaky_relu",
    "square",
    "concat",
    "max_over_axis",
    "gather",
    "sum",
    "mean",
    "l2norm_rows",
    "reshape",
    "external_scalar",
];

fn uniform(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

// Values at least 0.01 away from zero, so kinks stay outside the stencil.
fn off_zero(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let m = rng.random_range(0.01..1.0);
            if rng.random_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    Tensor::new(shape, data).unwrap()
}

// Distinct values at least 0.09 apart.
fn spread(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n: usize = shape.iter().product();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let data = order
        .iter()
        .map(|&o| o as f64 * 0.1 - 0.05 * n as f64 + rng.random_range(0.0..0.01))
        .collect();
    Tensor::new(shape, data).unwrap()
}

fn dims(rng: &mut ChaCha8Rng, rank: usize) -> Vec<usize> {
    (0..rank).map(|_| rng.random_range(1..=5)).collect()
}

// Reduces `out` to a scalar with fixed random weights.
fn readout(tape: &mut Tape, out: Var, weights: &Tensor) -> Result<Var> {
    let w = tape.constant(weights.clone())?;
    let p = tape.mul(out, w)?;
    tape.sum(p)
}

fn output_shape(op: &str, inputs: &[Tensor], extra: &[usize]) -> Vec<usize> {
    let s0 = inputs[0].shape();
    match op {
        "matmul" => vec![s0[0], inputs[1].shape()[1]],
        "concat" => {
            let mut s = s0.to_vec();
            s[extra[0]] = inputs.iter().map(|t| t.shape()[extra[0]]).sum();
            s
        }
        "max_over_axis" => {
            let mut s = s0.to_vec();
            s.remove(extra[0]);
            s
        }
        "gather" => {
            let mut s = s0.to_vec();
            s[0] = extra.len();
            s
        }
        "sum" | "mean" | "external_scalar" => Vec::new(),
        "l2norm_rows" => vec![s0[0]],
        "reshape" => vec![s0.iter().product()],
        _ => s0.to_vec(),
    }
}

/// Runs `instances` randomly shaped checks of one op.
pub fn check_op(op: &str, instances: usize, seed: u64, h: f64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = GradCheck::default();
    for _ in 0..instances {
        let rank = rng.random_range(1..=3);
        let (inputs, extra): (Vec<Tensor>, Vec<usize>) = match op {
            "matmul" => {
                let d = dims(&mut rng, 3);
                (vec![uniform(&mut rng, &[d[0], d[1]]), uniform(&mut rng, &[d[1], d[2]])], vec![])
            }
            "add" | "sub" | "mul" => {
                let s = dims(&mut rng, rank);
                (vec![uniform(&mut rng, &s), uniform(&mut rng, &s)], vec![])
            }
            "add_broadcast" => {
                let s = dims(&mut rng, 3);
                let cut = rng.random_range(1..=3);
                (vec![uniform(&mut rng, &s), uniform(&mut rng, &s[3 - cut..])], vec![])
            }
            "relu" | "leaky_relu" => {
                let s = dims(&mut rng, rank);
                (vec![off_zero(&mut rng, &s)], vec![])
            }
            "concat" => {
                let s = dims(&mut rng, rank);
                let axis = rng.random_range(0..rank);
                let parts = rng.random_range(2..=3);
                let xs = (0..parts)
                    .map(|_| {
                        let mut si = s.clone();
                        si[axis] = rng.random_range(1..=4);
                        uniform(&mut rng, &si)
                    })
                    .collect();
                (xs, vec![axis])
            }
            "max_over_axis" => {
                let s = dims(&mut rng, rank);
                let axis = rng.random_range(0..rank);
                (vec![spread(&mut rng, &s)], vec![axis])
            }
            "gather" => {
                let s = dims(&mut rng, rank);
                let count = rng.random_range(1..=7);
                let idx = (0..count).map(|_| rng.random_range(0..s[0])).collect();
                (vec![uniform(&mut rng, &s)], idx)
            }
            "l2norm_rows" => {
                let s = dims(&mut rng, 2);
                (vec![uniform(&mut rng, &s)], vec![])
            }
            _ => {
                let s = dims(&mut rng, rank);
                (vec![uniform(&mut rng, &s)], vec![])
            }
        };
        let weights = uniform(&mut rng, &output_shape(op, &inputs, &extra));
        let c = rng.random_range(-2.0..2.0);
        let report = check_gradients(&inputs, h, |tape, v| {
            let out = match op {
                "matmul" => tape.matmul(v[0], v[1])?,
                "add" | "add_broadcast" => tape.add(v[0], v[1])?,
                "sub" => tape.sub(v[0], v[1])?,
                "mul" => tape.mul(v[0], v[1])?,
                "scale" => tape.scale(v[0], c)?,
                "add_scalar" => tape.add_scalar(v[0], c)?,
                "relu" => tape.relu(v[0])?,
                "leaky_relu" => tape.leaky_relu(v[0], 0.2)?,
                "square" => tape.square(v[0])?,
                "concat" => tape.concat(v, extra[0])?,
                "max_over_axis" => tape.max_over_axis(v[0], extra[0])?.0,
                "gather" => tape.gather(v[0], &extra)?,
                "sum" => tape.sum(v[0])?,
                "mean" => tape.mean(v[0])?,
                "l2norm_rows" => tape.l2norm_rows(v[0])?,
                "reshape" => {
                    let n = tape.value(v[0]).len();
                    tape.reshape(v[0], &[n])?
                }
                "external_scalar" => {
                    // c * sum(x^3), evaluated off-tape
                    let x = tape.value(v[0]).clone();
                    let value = c * x.data().iter().map(|t| t * t * t).sum::<f64>();
                    let grad = Tensor::new(
                        x.shape(),
                        x.data().iter().map(|t| 3.0 * c * t * t).collect(),
                    )?;
                    tape.external_scalar(v[0], value, grad)?
                }
                other => panic!("unknown op {other}"),
            };
            readout(tape, out, &weights)
        })?;
        total.merge(report);
    }
    Ok(total)
}

/// Runs [`check_op`] for every op in [`SUITE_OPS`].
pub fn op_suite(instances: usize, seed: u64, h: f64) -> Result<Vec<(&'static str, GradCheck)>> {
    SUITE_OPS
        .iter()
        .enumerate()
        .map(|(k, &op)| Ok((op, check_op(op, instances, seed.wrapping_add(k as u64), h)?)))
        .collect()
}
