use crate::{Error, Result, Tensor};

/// Adam optimizer state with bias correction and stepwise learning-rate
/// decay: the rate is `base_lr * decay^floor(step / decay_interval)`, where
/// `step` counts completed updates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub base_lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub decay: f64,
    pub decay_interval: u64,
    pub step: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(shapes: &[&[usize]], base_lr: f64, decay: f64, decay_interval: u64) -> Self {
        Self {
            base_lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            decay,
            decay_interval: decay_interval.max(1),
            step: 0,
            m: shapes.iter().map(|s| Tensor::zeros(s)).collect(),
            v: shapes.iter().map(|s| Tensor::zeros(s)).collect(),
        }
    }

    /// Rate used by the next update.
    pub fn current_lr(&self) -> f64 {
        let crossings = self.step / self.decay_interval;
        self.base_lr * self.decay.powf(crossings as f64)
    }

    pub fn update(&mut self, params: &mut [Tensor], grads: &[Tensor]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::InvalidArgument {
                op: "adam",
                detail: format!(
                    "state tracks {} tensors, got {} params and {} grads",
                    self.m.len(),
                    params.len(),
                    grads.len()
                ),
            });
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return Err(Error::ShapeMismatch {
                    op: "adam",
                    left: p.shape().to_vec(),
                    right: g.shape().to_vec(),
                });
            }
            if !g.is_finite() {
                return Err(Error::NonFinite { op: "adam" });
            }
        }
        let lr = self.current_lr();
        self.step += 1;
        let t = self.step as f64;
        let c1 = 1.0 - self.beta1.powf(t);
        let c2 = 1.0 - self.beta2.powf(t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let pd = p.data_mut();
            let md = m.data_mut();
            let vd = v.data_mut();
            for (i, &gi) in g.data().iter().enumerate() {
                md[i] = self.beta1 * md[i] + (1.0 - self.beta1) * gi;
                vd[i] = self.beta2 * vd[i] + (1.0 - self.beta2) * gi * gi;
                let mh = md[i] / c1;
                let vh = vd[i] / c2;
                pd[i] -= lr * mh / (vh.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_trace_matches_hand_computation() {
        let mut st = AdamState::new(&[&[]], 0.1, 0.7, 2);
        let mut p = vec![Tensor::scalar(1.0)];
        let grads = [0.5, -0.25, 1.0];
        let (mut m, mut v, mut x) = (0.0f64, 0.0f64, 1.0f64);
        for (k, &g) in grads.iter().enumerate() {
            st.update(&mut p, &[Tensor::scalar(g)]).unwrap();
            let t = (k + 1) as f64;
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let lr = if k < 2 { 0.1 } else { 0.07 };
            x -= lr * (m / (1.0 - 0.9f64.powf(t))) / ((v / (1.0 - 0.999f64.powf(t))).sqrt() + 1e-8);
            assert!((p[0].item().unwrap() - x).abs() < 1e-12);
        }
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut st = AdamState::new(&[&[2]], 0.01, 0.7, 100);
        let mut p = vec![Tensor::new(&[2], vec![0.0, 0.0]).unwrap()];
        st.update(&mut p, &[Tensor::new(&[2], vec![3.0, -2.0]).unwrap()]).unwrap();
        assert!((p[0].data()[0] + 0.01).abs() < 1e-9);
        assert!((p[0].data()[1] - 0.01).abs() < 1e-9);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut st = AdamState::new(&[&[3]], 0.01, 0.7, 100);
        let mut p = vec![Tensor::full(&[3], 2.5)];
        st.update(&mut p, &[Tensor::zeros(&[3])]).unwrap();
        assert_eq!(p[0], Tensor::full(&[3], 2.5));
    }

    #[test]
    fn decay_boundary() {
        let mut st = AdamState::new(&[&[]], 1.0, 0.7, 10);
        let mut p = vec![Tensor::scalar(0.0)];
        for _ in 0..10 {
            assert_eq!(st.current_lr(), 1.0);
            st.update(&mut p, &[Tensor::scalar(1.0)]).unwrap();
        }
        assert!((st.current_lr() - 0.7).abs() < 1e-15);
    }
}
