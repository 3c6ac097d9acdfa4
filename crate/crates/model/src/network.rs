use cadpu_autodiff::{Tape, Tensor, Var};
use cadpu_core::{Point3, PointCloud};

use crate::params::{DiscriminatorParams, GeneratorParams, ParamSet};
use crate::plan::ExpansionPlan;
use crate::{Error, Regression, Result};

pub const LEAKY_SLOPE: f64 = 0.2;
/// Lattice spacing of the grid coordinates appended during expansion.
pub const GRID_SPACING: f64 = 0.2;

#[derive(Debug, Clone, Copy)]
struct Dense {
    w: Var,
    b: Var,
}

impl Dense {
    fn apply(self, tape: &mut Tape, x: Var) -> Result<Var> {
        let y = tape.matmul(x, self.w)?;
        Ok(tape.add(y, self.b)?)
    }
}

/// Parameters of one network recorded on a tape.
#[derive(Debug, Clone)]
pub struct Bound {
    names: Vec<String>,
    pub vars: Vec<Var>,
}

impl Bound {
    pub fn new(tape: &mut Tape, params: &ParamSet, trainable: bool) -> Result<Self> {
        Ok(Self {
            names: params.names().to_vec(),
            vars: params.bind(tape, trainable)?,
        })
    }

    /// Wraps variables already on a tape, in `params` order.
    pub fn from_vars(params: &ParamSet, vars: Vec<Var>) -> Self {
        assert_eq!(params.names().len(), vars.len(), "one variable per parameter");
        Self {
            names: params.names().to_vec(),
            vars,
        }
    }

    fn var(&self, name: &str) -> Var {
        let i = self
            .names
            .iter()
            .position(|n| n == name)
            .unwrap_or_else(|| panic!("no parameter {name}"));
        self.vars[i]
    }

    fn dense(&self, name: &str) -> Dense {
        Dense {
            w: self.var(&format!("{name}.w")),
            b: self.var(&format!("{name}.b")),
        }
    }
}

pub fn cloud_tensor(points: &[Point3]) -> Tensor {
    Tensor::new(&[points.len(), 3], points.iter().flat_map(|p| p.to_array()).collect()).unwrap()
}

pub fn tensor_points(t: &Tensor) -> Vec<Point3> {
    t.data()
        .chunks(3)
        .map(|c| Point3::new(c[0], c[1], c[2]))
        .collect()
}

/// `k` nearest rows of each row of a 2-D tensor (itself excluded), by
/// Euclidean distance with ties to the lower index; flattened row-major.
pub fn feature_knn(features: &Tensor, k: usize) -> Vec<usize> {
    let n = features.shape()[0];
    let mut out = Vec::with_capacity(n * k);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        let fi = features.row(i);
        cand.clear();
        for j in (0..n).filter(|&j| j != i) {
            let d: f64 = fi.iter().zip(features.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            cand.push((d, j));
        }
        let by = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < cand.len() {
            cand.select_nth_unstable_by(k, by);
            cand.truncate(k);
        }
        cand.sort_unstable_by(by);
        out.extend(cand.iter().map(|c| c.1));
    }
    out
}

/// Per-point features `[N, blocks * fusion]` of the point tensor `x`.
pub fn extract_on_tape(tape: &mut Tape, g: &Bound, gp: &GeneratorParams, x: Var) -> Result<Var> {
    let arch = &gp.arch;
    let n = tape.value(x).shape()[0];
    let k = match arch.edge_k {
        0 if n >= 64 => 16,
        0 => 8,
        k => k,
    };
    if n <= k {
        return Err(Error::InvalidInput(format!(
            "feature extraction needs more than {k} points, got {n}"
        )));
    }
    let centers: Vec<usize> = (0..n).flat_map(|i| std::iter::repeat_n(i, k)).collect();
    let lifted = g.dense("lift").apply(tape, x)?;
    let mut f = tape.leaky_relu(lifted, LEAKY_SLOPE)?;
    let mut fused_all = Vec::with_capacity(arch.blocks);
    let block_out: usize = arch.widths.iter().sum();
    for b in 0..arch.blocks {
        let nbrs = feature_knn(tape.value(f), k);
        let fc = tape.gather(f, &centers)?;
        let fn_ = tape.gather(f, &nbrs)?;
        let diff = tape.sub(fn_, fc)?;
        let edge = tape.concat(&[fc, diff], 1)?;
        let mut parts = vec![edge];
        for j in 0..arch.widths.len() {
            let input = if parts.len() == 1 {
                edge
            } else {
                tape.concat(&parts, 1)?
            };
            let h = g.dense(&format!("block{b}.dense{j}")).apply(tape, input)?;
            parts.push(tape.leaky_relu(h, LEAKY_SLOPE)?);
        }
        let dense_out = tape.concat(&parts[1..], 1)?;
        let grouped = tape.reshape(dense_out, &[n, k, block_out])?;
        let (pooled, _) = tape.max_over_axis(grouped, 1)?;
        let skip = tape.concat(&[f, pooled], 1)?;
        let fused = g.dense(&format!("fuse{b}")).apply(tape, skip)?;
        f = tape.leaky_relu(fused, LEAKY_SLOPE)?;
        fused_all.push(f);
    }
    Ok(tape.concat(&fused_all, 1)?)
}

fn grid_tensor(plan: &ExpansionPlan) -> Tensor {
    let data = plan
        .grid
        .iter()
        .flat_map(|c| [c[0] as f64 * GRID_SPACING, c[1] as f64 * GRID_SPACING])
        .collect();
    Tensor::new(&[plan.len(), 2], data).unwrap()
}

/// Gathers feature rows by plan, appends grid coordinates and applies the
/// two expansion layers.
pub fn expand_on_tape(tape: &mut Tape, g: &Bound, features: Var, plan: &ExpansionPlan) -> Result<Var> {
    let rows = tape.value(features).shape()[0];
    if rows != plan.n {
        return Err(Error::InvalidInput(format!(
            "plan expects {} feature rows, got {rows}",
            plan.n
        )));
    }
    let gathered = tape.gather(features, &plan.sources)?;
    let grid = tape.constant(grid_tensor(plan))?;
    let cat = tape.concat(&[gathered, grid], 1)?;
    let h = g.dense("expand0").apply(tape, cat)?;
    let h = tape.leaky_relu(h, LEAKY_SLOPE)?;
    g.dense("expand1").apply(tape, h)
}

/// Per-row regression MLP to 3 coordinates.
pub fn regress_on_tape(tape: &mut Tape, g: &Bound, gp: &GeneratorParams, features: Var) -> Result<Var> {
    let mut h = features;
    for j in 0..gp.arch.regress.len() {
        let z = g.dense(&format!("regress{j}")).apply(tape, h)?;
        h = tape.leaky_relu(z, LEAKY_SLOPE)?;
    }
    g.dense(&format!("regress{}", gp.arch.regress.len())).apply(tape, h)
}

/// Full generator pass from input points and a plan to `[rN, 3]`.
pub fn generate_on_tape(
    tape: &mut Tape,
    g: &Bound,
    gp: &GeneratorParams,
    input: &PointCloud,
    plan: &ExpansionPlan,
) -> Result<Var> {
    let x = tape.constant(cloud_tensor(input.points()))?;
    let feats = extract_on_tape(tape, g, gp, x)?;
    let expanded = expand_on_tape(tape, g, feats, plan)?;
    let out = regress_on_tape(tape, g, gp, expanded)?;
    Ok(match gp.arch.regression {
        Regression::Absolute => out,
        Regression::Offset => {
            let src: Vec<Point3> = plan.sources.iter().map(|&s| input.points()[s]).collect();
            let base = tape.constant(cloud_tensor(&src))?;
            tape.add(out, base)?
        }
    })
}

/// Scalar score of the point tensor `x` (`[M, 3]`).
pub fn discriminate_on_tape(tape: &mut Tape, d: &Bound, dp: &DiscriminatorParams, x: Var) -> Result<Var> {
    let mut h = x;
    for j in 0..dp.widths.len() {
        let z = d.dense(&format!("point{j}")).apply(tape, h)?;
        h = tape.relu(z)?;
    }
    let (pooled, _) = tape.max_over_axis(h, 0)?;
    let width = tape.value(pooled).len();
    let row = tape.reshape(pooled, &[1, width])?;
    let z = d.dense("head0").apply(tape, row)?;
    let z = tape.relu(z)?;
    let score = d.dense("head1").apply(tape, z)?;
    Ok(tape.reshape(score, &[])?)
}

impl GeneratorParams {
    /// Per-point features `[N, C1]` of `input`.
    pub fn extract_features(&self, input: &PointCloud) -> Result<Tensor> {
        let mut tape = Tape::new();
        let g = Bound::new(&mut tape, &self.params, false)?;
        let x = tape.constant(cloud_tensor(input.points()))?;
        let f = extract_on_tape(&mut tape, &g, self, x)?;
        Ok(tape.value(f).clone())
    }

    /// Expanded features `[rN, C2]`.
    pub fn expand_features(&self, features: &Tensor, plan: &ExpansionPlan) -> Result<Tensor> {
        let mut tape = Tape::new();
        let g = Bound::new(&mut tape, &self.params, false)?;
        let f = tape.constant(features.clone())?;
        let e = expand_on_tape(&mut tape, &g, f, plan)?;
        Ok(tape.value(e).clone())
    }

    /// Raw regression output, one point per feature row.
    pub fn regress_points(&self, features: &Tensor) -> Result<PointCloud> {
        let mut tape = Tape::new();
        let g = Bound::new(&mut tape, &self.params, false)?;
        let f = tape.constant(features.clone())?;
        let p = regress_on_tape(&mut tape, &g, self, f)?;
        Ok(PointCloud::new(tensor_points(tape.value(p)))?)
    }

    /// Generator output for `input` under `plan`, in the input's frame.
    pub fn generate(&self, input: &PointCloud, plan: &ExpansionPlan) -> Result<PointCloud> {
        let mut tape = Tape::new();
        let g = Bound::new(&mut tape, &self.params, false)?;
        let p = generate_on_tape(&mut tape, &g, self, input, plan)?;
        Ok(PointCloud::new(tensor_points(tape.value(p)))?)
    }
}

impl DiscriminatorParams {
    pub fn score(&self, cloud: &PointCloud) -> Result<f64> {
        if cloud.is_empty() {
            return Err(cadpu_core::Error::EmptyInput.into());
        }
        let mut tape = Tape::new();
        let d = Bound::new(&mut tape, &self.params, false)?;
        let x = tape.constant(cloud_tensor(cloud.points()))?;
        let s = discriminate_on_tape(&mut tape, &d, self, x)?;
        Ok(tape.value(s).data()[0])
    }
}
