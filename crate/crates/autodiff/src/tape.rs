use std::sync::atomic::{AtomicU64, Ordering};

use crate::{Error, Result, Tensor};

static NEXT_TAPE_ID: AtomicU64 = AtomicU64::new(1);

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var {
    tape: u64,
    index: usize,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    AddScalar(usize),
    Relu(usize),
    LeakyRelu(usize, f64),
    Square(usize),
    Concat { inputs: Vec<usize>, axis: usize },
    // argmax holds flat input offsets, one per output element
    MaxOverAxis { input: usize, argmax: Vec<usize> },
    Gather { input: usize, indices: Vec<usize> },
    Sum(usize),
    Mean(usize),
    L2NormRows(usize),
    Reshape(usize),
    External { input: usize, grad: Tensor },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Operation record for one forward/backward pass.
#[derive(Debug)]
pub struct Tape {
    id: u64,
    nodes: Vec<Node>,
    sealed: bool,
}

/// Result of [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients {
    tape: u64,
    grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient of the loss with respect to `var`; zeros when the loss does
    /// not depend on it.
    pub fn wrt(&self, var: Var) -> Result<Tensor> {
        if var.tape != self.tape {
            return Err(Error::ForeignVar);
        }
        Ok(match &self.grads[var.index] {
            Some(g) => g.clone(),
            None => Tensor::zeros(&self.shapes[var.index]),
        })
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

fn gemm(
    (m, k, n): (usize, usize, usize),
    a: &[f64],
    (rsa, csa): (isize, isize),
    b: &[f64],
    (rsb, csb): (isize, isize),
    c: &mut [f64],
) {
    debug_assert!(c.len() >= m * n);
    // SAFETY: the callers size `a`, `b` and `c` for the given dimensions and
    // strides, and `c` does not alias either input.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

impl Tape {
    pub fn new() -> Self {
        Self {
            id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
            sealed: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records a trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Result<Var> {
        self.leaf(value, true)
    }

    /// Records a leaf that receives no gradient.
    pub fn constant(&mut self, value: Tensor) -> Result<Var> {
        self.leaf(value, false)
    }

    fn leaf(&mut self, value: Tensor, needs_grad: bool) -> Result<Var> {
        if self.sealed {
            return Err(Error::TapeConsumed);
        }
        if !value.is_finite() {
            return Err(Error::NonFinite { op: "leaf" });
        }
        Ok(self.push_node(value, Op::Leaf, needs_grad))
    }

    fn push_node(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var {
            tape: self.id,
            index: self.nodes.len() - 1,
        }
    }

    fn push(&mut self, name: &'static str, value: Tensor, op: Op, inputs: &[usize]) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite { op: name });
        }
        let needs_grad = inputs.iter().any(|&i| self.nodes[i].needs_grad);
        Ok(self.push_node(value, op, needs_grad))
    }

    fn check(&self, v: Var) -> Result<usize> {
        if self.sealed {
            return Err(Error::TapeConsumed);
        }
        if v.tape != self.id {
            return Err(Error::ForeignVar);
        }
        Ok(v.index)
    }

    /// Current value of `v`.
    ///
    /// # Panics
    /// If `v` was recorded on another tape.
    pub fn value(&self, v: Var) -> &Tensor {
        assert_eq!(v.tape, self.id, "variable belongs to a different tape");
        &self.nodes[v.index].value
    }

    fn val(&self, i: usize) -> &Tensor {
        &self.nodes[i].value
    }

    /// Matrix product of `[m, k]` and `[k, n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, ib) = (self.check(a)?, self.check(b)?);
        let (sa, sb) = (self.val(ia).shape(), self.val(ib).shape());
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                left: sa.to_vec(),
                right: sb.to_vec(),
            });
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut out = vec![0.0; m * n];
        gemm(
            (m, k, n),
            self.val(ia).data(),
            (k as isize, 1),
            self.val(ib).data(),
            (n as isize, 1),
            &mut out,
        );
        let value = Tensor::new(&[m, n], out)?;
        self.push("matmul", value, Op::MatMul(ia, ib), &[ia, ib])
    }

    fn broadcast_shapes(&self, op: &'static str, ia: usize, ib: usize) -> Result<()> {
        let (sa, sb) = (self.val(ia).shape(), self.val(ib).shape());
        if sb.len() > sa.len() || sa[sa.len() - sb.len()..] != *sb {
            return Err(Error::ShapeMismatch {
                op,
                left: sa.to_vec(),
                right: sb.to_vec(),
            });
        }
        Ok(())
    }

    fn zip_broadcast(&self, ia: usize, ib: usize, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (a, b) = (self.val(ia), self.val(ib));
        let bd = b.data();
        let data = if bd.is_empty() {
            Vec::new()
        } else {
            a.data()
                .chunks(bd.len())
                .flat_map(|chunk| chunk.iter().zip(bd).map(|(&x, &y)| f(x, y)))
                .collect()
        };
        Tensor::new(a.shape(), data).expect("shape preserved")
    }

    /// `a + b`, where `b`'s shape is a suffix of `a`'s and is repeated over
    /// the leading axes.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, ib) = (self.check(a)?, self.check(b)?);
        self.broadcast_shapes("add", ia, ib)?;
        let value = self.zip_broadcast(ia, ib, |x, y| x + y);
        self.push("add", value, Op::Add(ia, ib), &[ia, ib])
    }

    /// `a - b` with the same broadcasting rule as [`Tape::add`].
    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, ib) = (self.check(a)?, self.check(b)?);
        self.broadcast_shapes("sub", ia, ib)?;
        let value = self.zip_broadcast(ia, ib, |x, y| x - y);
        self.push("sub", value, Op::Sub(ia, ib), &[ia, ib])
    }

    /// Elementwise product of equal shapes.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, ib) = (self.check(a)?, self.check(b)?);
        let (sa, sb) = (self.val(ia).shape(), self.val(ib).shape());
        if sa != sb {
            return Err(Error::ShapeMismatch {
                op: "mul",
                left: sa.to_vec(),
                right: sb.to_vec(),
            });
        }
        let value = self.zip_broadcast(ia, ib, |x, y| x * y);
        self.push("mul", value, Op::Mul(ia, ib), &[ia, ib])
    }

    fn map(&self, i: usize, f: impl Fn(f64) -> f64) -> Tensor {
        let x = self.val(i);
        Tensor::new(x.shape(), x.data().iter().map(|&v| f(v)).collect()).expect("shape preserved")
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Result<Var> {
        let i = self.check(x)?;
        let value = self.map(i, |v| v * s);
        self.push("scale", value, Op::Scale(i, s), &[i])
    }

    pub fn add_scalar(&mut self, x: Var, c: f64) -> Result<Var> {
        let i = self.check(x)?;
        let value = self.map(i, |v| v + c);
        self.push("add_scalar", value, Op::AddScalar(i), &[i])
    }

    /// `max(x, 0)`; the derivative at exactly zero is taken as zero.
    pub fn relu(&mut self, x: Var) -> Result<Var> {
        let i = self.check(x)?;
        let value = self.map(i, |v| v.max(0.0));
        self.push("relu", value, Op::Relu(i), &[i])
    }

    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Result<Var> {
        let i = self.check(x)?;
        let value = self.map(i, |v| if v > 0.0 { v } else { slope * v });
        self.push("leaky_relu", value, Op::LeakyRelu(i, slope), &[i])
    }

    pub fn square(&mut self, x: Var) -> Result<Var> {
        let i = self.check(x)?;
        let value = self.map(i, |v| v * v);
        self.push("square", value, Op::Square(i), &[i])
    }

    /// Joins tensors along `axis`; all other extents must agree.
    pub fn concat(&mut self, xs: &[Var], axis: usize) -> Result<Var> {
        let idx: Vec<usize> = xs.iter().map(|&v| self.check(v)).collect::<Result<_>>()?;
        let Some(&first) = idx.first() else {
            return Err(Error::InvalidArgument {
                op: "concat",
                detail: "no inputs".into(),
            });
        };
        let base = self.val(first).shape().to_vec();
        if axis >= base.len() {
            return Err(Error::InvalidArgument {
                op: "concat",
                detail: format!("axis {axis} out of range for shape {base:?}"),
            });
        }
        let mut total = 0;
        for &i in &idx {
            let s = self.val(i).shape();
            let compatible = s.len() == base.len()
                && s.iter()
                    .zip(&base)
                    .enumerate()
                    .all(|(d, (x, y))| d == axis || x == y);
            if !compatible {
                return Err(Error::ShapeMismatch {
                    op: "concat",
                    left: base,
                    right: s.to_vec(),
                });
            }
            total += s[axis];
        }
        let outer = numel(&base[..axis]);
        let inner = numel(&base[axis + 1..]);
        let mut data = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for &i in &idx {
                let x = self.val(i);
                let chunk = x.shape()[axis] * inner;
                data.extend_from_slice(&x.data()[o * chunk..(o + 1) * chunk]);
            }
        }
        let mut shape = base;
        shape[axis] = total;
        let value = Tensor::new(&shape, data)?;
        let inputs = idx.clone();
        self.push("concat", value, Op::Concat { inputs, axis }, &idx)
    }

    /// Maximum along `axis`, which is removed from the shape. Also returns
    /// the position along `axis` of each maximum; ties go to the lowest.
    pub fn max_over_axis(&mut self, x: Var, axis: usize) -> Result<(Var, Vec<usize>)> {
        let i = self.check(x)?;
        let shape = self.val(i).shape().to_vec();
        if axis >= shape.len() || shape[axis] == 0 {
            return Err(Error::InvalidArgument {
                op: "max_over_axis",
                detail: format!("cannot reduce axis {axis} of shape {shape:?}"),
            });
        }
        let outer = numel(&shape[..axis]);
        let len = shape[axis];
        let inner = numel(&shape[axis + 1..]);
        let data = self.val(i).data();
        let mut out = Vec::with_capacity(outer * inner);
        let mut flat = Vec::with_capacity(outer * inner);
        let mut pos = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            for j in 0..inner {
                let base = o * len * inner + j;
                let mut best = 0;
                for l in 1..len {
                    if data[base + l * inner] > data[base + best * inner] {
                        best = l;
                    }
                }
                out.push(data[base + best * inner]);
                flat.push(base + best * inner);
                pos.push(best);
            }
        }
        let mut out_shape = shape;
        out_shape.remove(axis);
        let value = Tensor::new(&out_shape, out)?;
        let v = self.push("max_over_axis", value, Op::MaxOverAxis { input: i, argmax: flat }, &[i])?;
        Ok((v, pos))
    }

    /// Selects slices along the first axis; indices may repeat.
    pub fn gather(&mut self, x: Var, indices: &[usize]) -> Result<Var> {
        let i = self.check(x)?;
        let shape = self.val(i).shape().to_vec();
        if shape.is_empty() {
            return Err(Error::InvalidArgument {
                op: "gather",
                detail: "cannot gather from a scalar".into(),
            });
        }
        if let Some(&bad) = indices.iter().find(|&&r| r >= shape[0]) {
            return Err(Error::InvalidArgument {
                op: "gather",
                detail: format!("index {bad} out of range for shape {shape:?}"),
            });
        }
        let row = numel(&shape[1..]);
        let data = self.val(i).data();
        let mut out = Vec::with_capacity(indices.len() * row);
        for &r in indices {
            out.extend_from_slice(&data[r * row..(r + 1) * row]);
        }
        let mut out_shape = shape;
        out_shape[0] = indices.len();
        let value = Tensor::new(&out_shape, out)?;
        let op = Op::Gather {
            input: i,
            indices: indices.to_vec(),
        };
        self.push("gather", value, op, &[i])
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let i = self.check(x)?;
        let value = Tensor::scalar(self.val(i).data().iter().sum());
        self.push("sum", value, Op::Sum(i), &[i])
    }

    pub fn mean(&mut self, x: Var) -> Result<Var> {
        let i = self.check(x)?;
        let t = self.val(i);
        if t.is_empty() {
            return Err(Error::InvalidArgument {
                op: "mean",
                detail: "empty tensor".into(),
            });
        }
        let value = Tensor::scalar(t.data().iter().sum::<f64>() / t.len() as f64);
        self.push("mean", value, Op::Mean(i), &[i])
    }

    /// Euclidean norm of each row of a `[m, n]` tensor, giving `[m]`.
    /// The gradient of a zero row is zero.
    pub fn l2norm_rows(&mut self, x: Var) -> Result<Var> {
        let i = self.check(x)?;
        let t = self.val(i);
        if t.rank() != 2 {
            return Err(Error::InvalidArgument {
                op: "l2norm_rows",
                detail: format!("expected a 2-D tensor, got {:?}", t.shape()),
            });
        }
        let m = t.shape()[0];
        let norms = (0..m)
            .map(|r| t.row(r).iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        let value = Tensor::new(&[m], norms)?;
        self.push("l2norm_rows", value, Op::L2NormRows(i), &[i])
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let i = self.check(x)?;
        let value = self.val(i).clone().reshaped(shape)?;
        self.push("reshape", value, Op::Reshape(i), &[i])
    }

    /// Scalar node whose value and gradient with respect to `x` were
    /// computed outside the tape.
    pub fn external_scalar(&mut self, x: Var, value: f64, grad: Tensor) -> Result<Var> {
        let i = self.check(x)?;
        if grad.shape() != self.val(i).shape() {
            return Err(Error::ShapeMismatch {
                op: "external_scalar",
                left: self.val(i).shape().to_vec(),
                right: grad.shape().to_vec(),
            });
        }
        if !grad.is_finite() {
            return Err(Error::NonFinite {
                op: "external_scalar",
            });
        }
        self.push(
            "external_scalar",
            Tensor::scalar(value),
            Op::External { input: i, grad },
            &[i],
        )
    }

    /// Reverse pass from a single-element `loss`. Seals the tape.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        let root = self.check(loss)?;
        let shape = self.val(root).shape().to_vec();
        if numel(&shape) != 1 {
            return Err(Error::NonScalarLoss(shape));
        }
        self.sealed = true;
        let n = self.nodes.len();
        let mut grads: Vec<Option<Tensor>> = vec![None; n];
        grads[root] = Some(Tensor::full(&shape, 1.0));
        for at in (0..=root).rev() {
            if !self.nodes[at].needs_grad {
                continue;
            }
            let Some(g) = grads[at].take() else {
                continue;
            };
            self.propagate(at, &g, &mut grads)?;
            grads[at] = Some(g);
        }
        let shapes = self.nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        Ok(Gradients {
            tape: self.id,
            grads,
            shapes,
        })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], i: usize, g: Tensor) {
        if !self.nodes[i].needs_grad {
            return;
        }
        match &mut grads[i] {
            Some(existing) => existing.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }

    fn elementwise(&self, i: usize, g: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let x = self.val(i);
        let data = x.data().iter().zip(g.data()).map(|(&x, &g)| f(x, g)).collect();
        Tensor::new(x.shape(), data).expect("shape preserved")
    }

    fn reduce_broadcast(&self, ib: usize, g: &Tensor, sign: f64) -> Tensor {
        let shape = self.val(ib).shape();
        let mut out = vec![0.0; numel(shape)];
        if !out.is_empty() {
            for chunk in g.data().chunks(out.len()) {
                for (o, v) in out.iter_mut().zip(chunk) {
                    *o += sign * v;
                }
            }
        }
        Tensor::new(shape, out).expect("shape preserved")
    }

    fn propagate(&self, at: usize, g: &Tensor, grads: &mut [Option<Tensor>]) -> Result<()> {
        match &self.nodes[at].op {
            Op::Leaf => {}
            &Op::MatMul(ia, ib) => {
                let (a, b) = (self.val(ia), self.val(ib));
                let (m, k, n) = (a.shape()[0], a.shape()[1], b.shape()[1]);
                if self.nodes[ia].needs_grad {
                    let mut da = vec![0.0; m * k];
                    gemm((m, n, k), g.data(), (n as isize, 1), b.data(), (1, n as isize), &mut da);
                    self.accumulate(grads, ia, Tensor::new(&[m, k], da)?);
                }
                if self.nodes[ib].needs_grad {
                    let mut db = vec![0.0; k * n];
                    gemm((k, m, n), a.data(), (1, k as isize), g.data(), (n as isize, 1), &mut db);
                    self.accumulate(grads, ib, Tensor::new(&[k, n], db)?);
                }
            }
            &Op::Add(ia, ib) => {
                self.accumulate(grads, ia, g.clone());
                if self.nodes[ib].needs_grad {
                    let db = self.reduce_broadcast(ib, g, 1.0);
                    self.accumulate(grads, ib, db);
                }
            }
            &Op::Sub(ia, ib) => {
                self.accumulate(grads, ia, g.clone());
                if self.nodes[ib].needs_grad {
                    let db = self.reduce_broadcast(ib, g, -1.0);
                    self.accumulate(grads, ib, db);
                }
            }
            &Op::Mul(ia, ib) => {
                let da = self.elementwise(ib, g, |y, g| y * g);
                let db = self.elementwise(ia, g, |x, g| x * g);
                self.accumulate(grads, ia, da);
                self.accumulate(grads, ib, db);
            }
            &Op::Scale(i, s) => {
                let d = self.elementwise(i, g, |_, g| s * g);
                self.accumulate(grads, i, d);
            }
            &Op::AddScalar(i) | &Op::Reshape(i) => {
                let d = g.clone().reshaped(self.val(i).shape())?;
                self.accumulate(grads, i, d);
            }
            &Op::Relu(i) => {
                let d = self.elementwise(i, g, |x, g| if x > 0.0 { g } else { 0.0 });
                self.accumulate(grads, i, d);
            }
            &Op::LeakyRelu(i, slope) => {
                let d = self.elementwise(i, g, |x, g| if x > 0.0 { g } else { slope * g });
                self.accumulate(grads, i, d);
            }
            &Op::Square(i) => {
                let d = self.elementwise(i, g, |x, g| 2.0 * x * g);
                self.accumulate(grads, i, d);
            }
            Op::Concat { inputs, axis } => {
                let shape = self.val(at).shape();
                let outer = numel(&shape[..*axis]);
                let inner = numel(&shape[axis + 1..]);
                let mut parts: Vec<Vec<f64>> = inputs
                    .iter()
                    .map(|&i| Vec::with_capacity(self.val(i).len()))
                    .collect();
                let mut offset = 0;
                for _ in 0..outer {
                    for (p, &i) in parts.iter_mut().zip(inputs) {
                        let chunk = self.val(i).shape()[*axis] * inner;
                        p.extend_from_slice(&g.data()[offset..offset + chunk]);
                        offset += chunk;
                    }
                }
                for (p, &i) in parts.into_iter().zip(inputs) {
                    let d = Tensor::new(self.val(i).shape(), p)?;
                    self.accumulate(grads, i, d);
                }
            }
            Op::MaxOverAxis { input, argmax } => {
                let mut d = Tensor::zeros(self.val(*input).shape());
                for (&src, &gv) in argmax.iter().zip(g.data()) {
                    d.data_mut()[src] += gv;
                }
                self.accumulate(grads, *input, d);
            }
            Op::Gather { input, indices } => {
                let mut d = Tensor::zeros(self.val(*input).shape());
                let row = numel(&d.shape()[1..]);
                for (k, &r) in indices.iter().enumerate() {
                    let src = &g.data()[k * row..(k + 1) * row];
                    for (o, v) in d.data_mut()[r * row..(r + 1) * row].iter_mut().zip(src) {
                        *o += v;
                    }
                }
                self.accumulate(grads, *input, d);
            }
            &Op::Sum(i) => {
                let d = Tensor::full(self.val(i).shape(), g.data()[0]);
                self.accumulate(grads, i, d);
            }
            &Op::Mean(i) => {
                let x = self.val(i);
                let d = Tensor::full(x.shape(), g.data()[0] / x.len() as f64);
                self.accumulate(grads, i, d);
            }
            &Op::L2NormRows(i) => {
                let x = self.val(i);
                let norms = self.val(at).data();
                let cols = x.shape()[1];
                let mut d = Tensor::zeros(x.shape());
                for (r, (&nr, &gr)) in norms.iter().zip(g.data()).enumerate() {
                    if nr > 0.0 {
                        for c in 0..cols {
                            d.data_mut()[r * cols + c] = gr * x.data()[r * cols + c] / nr;
                        }
                    }
                }
                self.accumulate(grads, i, d);
            }
            Op::External { input, grad } => {
                let s = g.data()[0];
                let d = self.elementwise(*input, grad, |_, v| s * v);
                self.accumulate(grads, *input, d);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor {
        Tensor::new(shape, data.to_vec()).unwrap()
    }

    #[test]
    fn matmul_values_and_grads() {
        let mut tape = Tape::new();
        let a = tape.param(t(&[2, 2], &[1.0, 2.0, 3.0, 4.0])).unwrap();
        let b = tape.param(t(&[2, 1], &[5.0, 6.0])).unwrap();
        let c = tape.matmul(a, b).unwrap();
        assert_eq!(tape.value(c).data(), &[17.0, 39.0]);
        let loss = tape.sum(c).unwrap();
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.wrt(a).unwrap().data(), &[5.0, 6.0, 5.0, 6.0]);
        assert_eq!(g.wrt(b).unwrap().data(), &[4.0, 6.0]);
    }

    #[test]
    fn shape_error_names_both_shapes() {
        let mut tape = Tape::new();
        let a = tape.param(Tensor::zeros(&[3, 4])).unwrap();
        let b = tape.param(Tensor::zeros(&[5, 2])).unwrap();
        let err = tape.matmul(a, b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[3, 4]") && msg.contains("[5, 2]"), "{msg}");
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut tape = Tape::new();
        let a = tape.param(Tensor::zeros(&[2])).unwrap();
        assert!(matches!(tape.backward(a), Err(Error::NonScalarLoss(_))));
    }

    #[test]
    fn second_backward_and_reuse_rejected() {
        let mut tape = Tape::new();
        let a = tape.param(Tensor::scalar(2.0)).unwrap();
        let l = tape.square(a).unwrap();
        let g = tape.backward(l).unwrap();
        assert_eq!(g.wrt(a).unwrap().data(), &[4.0]);
        assert!(matches!(tape.backward(l), Err(Error::TapeConsumed)));
        assert!(matches!(tape.square(a), Err(Error::TapeConsumed)));
    }

    #[test]
    fn foreign_var_rejected() {
        let mut t1 = Tape::new();
        let mut t2 = Tape::new();
        let a = t1.param(Tensor::scalar(1.0)).unwrap();
        assert!(matches!(t2.relu(a), Err(Error::ForeignVar)));
    }

    #[test]
    fn disconnected_param_gets_zero_grad() {
        let mut tape = Tape::new();
        let a = tape.param(Tensor::full(&[2, 3], 1.0)).unwrap();
        let b = tape.param(Tensor::scalar(3.0)).unwrap();
        let l = tape.square(b).unwrap();
        let g = tape.backward(l).unwrap();
        assert_eq!(g.wrt(a).unwrap(), Tensor::zeros(&[2, 3]));
    }

    #[test]
    fn relu_gradient_at_zero_is_zero() {
        let mut tape = Tape::new();
        let a = tape.param(t(&[3], &[-1.0, 0.0, 2.0])).unwrap();
        let r = tape.relu(a).unwrap();
        let l = tape.sum(r).unwrap();
        let g = tape.backward(l).unwrap();
        assert_eq!(g.wrt(a).unwrap().data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn max_ties_choose_lowest_index() {
        let mut tape = Tape::new();
        let a = tape.param(t(&[3, 2], &[1.0, 5.0, 1.0, 5.0, 0.0, 5.0])).unwrap();
        let (m, pos) = tape.max_over_axis(a, 0).unwrap();
        assert_eq!(pos, vec![0, 0]);
        let l = tape.sum(m).unwrap();
        let g = tape.backward(l).unwrap();
        assert_eq!(g.wrt(a).unwrap().data(), &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn non_finite_output_rejected() {
        let mut tape = Tape::new();
        let a = tape.param(Tensor::scalar(1e200)).unwrap();
        assert!(matches!(tape.square(a), Err(Error::NonFinite { op: "square" })));
    }

    #[test]
    fn broadcast_add_sums_bias_gradient() {
        let mut tape = Tape::new();
        let a = tape.param(Tensor::zeros(&[4, 3])).unwrap();
        let b = tape.param(t(&[3], &[1.0, 2.0, 3.0])).unwrap();
        let c = tape.add(a, b).unwrap();
        assert_eq!(tape.value(c).row(2), &[1.0, 2.0, 3.0]);
        let l = tape.sum(c).unwrap();
        let g = tape.backward(l).unwrap();
        assert_eq!(g.wrt(b).unwrap().data(), &[4.0, 4.0, 4.0]);
    }
}
