use cadpu_autodiff::{Tape, Tensor, Var};
use cadpu_core::curvature::RegularizerStencil;
use cadpu_core::metrics::emd_loss_and_grad;
use cadpu_core::{Point3, PointCloud};

use crate::Result;

/// Components of the generator objective for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    /// Earth mover's distance, summed over points.
    pub emd: f64,
    /// Curvature regularizer, averaged over points (unweighted).
    pub regularizer: f64,
    /// `(gamma / 2) * (d - 1)^2`.
    pub adversarial: f64,
    pub total: f64,
}

/// `emd + beta * regularizer + (gamma / 2) * (d_score - 1)^2`.
pub fn generator_loss(
    pred: &PointCloud,
    gt: &PointCloud,
    d_score: f64,
    beta: f64,
    gamma: f64,
    k: usize,
    emd_eps: f64,
) -> Result<LossParts> {
    let (emd, _, _) = emd_loss_and_grad(pred, gt, emd_eps)?;
    let regularizer = if beta > 0.0 {
        RegularizerStencil::build(pred, gt, k)?.value(pred.points())?
    } else {
        0.0
    };
    let adversarial = 0.5 * gamma * (d_score - 1.0).powi(2);
    Ok(LossParts {
        emd,
        regularizer,
        adversarial,
        total: emd + beta * regularizer + adversarial,
    })
}

/// Least-squares discriminator objective `0.5 * (d_pred^2 + (d_gt - 1)^2)`,
/// averaged over the batch.
pub fn discriminator_loss(d_pred: &[f64], d_gt: &[f64]) -> f64 {
    assert_eq!(d_pred.len(), d_gt.len(), "one score pair per sample");
    let n = d_pred.len().max(1) as f64;
    d_pred
        .iter()
        .zip(d_gt)
        .map(|(p, g)| 0.5 * (p * p + (g - 1.0) * (g - 1.0)))
        .sum::<f64>()
        / n
}

fn points_grad(grad: &[Point3], scale: f64) -> Tensor {
    Tensor::new(
        &[grad.len(), 3],
        grad.iter().flat_map(|g| (*g * scale).to_array()).collect(),
    )
    .unwrap()
}

/// Records the EMD and weighted regularizer terms for `pred` on the tape,
/// returning their sum and the unweighted values.
pub(crate) fn reconstruction_on_tape(
    tape: &mut Tape,
    pred: Var,
    gt: &PointCloud,
    beta: f64,
    k: usize,
    emd_eps: f64,
) -> Result<(Var, f64, f64)> {
    let pts = crate::network::tensor_points(tape.value(pred));
    let cloud = PointCloud::new(pts)?;
    let (emd, emd_grad, _) = emd_loss_and_grad(&cloud, gt, emd_eps)?;
    let emd_var = tape.external_scalar(pred, emd, points_grad(&emd_grad, 1.0))?;
    if beta == 0.0 {
        return Ok((emd_var, emd, 0.0));
    }
    let stencil = RegularizerStencil::build(&cloud, gt, k)?;
    let reg = stencil.value(cloud.points())?;
    let reg_grad = stencil.gradient(cloud.points())?;
    let reg_var = tape.external_scalar(pred, beta * reg, points_grad(&reg_grad, beta))?;
    Ok((tape.add(emd_var, reg_var)?, emd, reg))
}
