use cadpu_autodiff::gradcheck::check_gradients;
use cadpu_autodiff::{Tape, Tensor};
use cadpu_core::{Point3, PointCloud};
use cadpu_model::network::{
    cloud_tensor, discriminate_on_tape, expand_on_tape, extract_on_tape, regress_on_tape, Bound,
};
use cadpu_model::{plan_expansion, DiscriminatorParams, GeneratorParams, TrainConfig};
use cadpu_core::curvature::CurvatureField;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny() -> TrainConfig {
    TrainConfig::parse("lift=4\nwidths=3,4,4\nfusion=5\nexpand=6\nregress=5,4\nd_widths=4,6\nd_head=3\nedge_k=4\nn_in=20\nk=6")
        .unwrap()
}

fn cloud(n: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PointCloud::new(
        (0..n)
            .map(|_| Point3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-0.3..0.3)))
            .collect(),
    )
    .unwrap()
}

fn weights(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn plan_for(n: usize, seed: u64) -> cadpu_model::ExpansionPlan {
    let field = CurvatureField {
        values: (0..n).map(|i| (i % 5) as f64 * 0.05).collect(),
        k_used: 6,
    };
    plan_expansion(&field, 0.5, 4, 0.01, seed).unwrap()
}

#[test]
fn extractor_is_permutation_equivariant() {
    let g = GeneratorParams::init(&tiny(), 3);
    let c = cloud(20, 1);
    let mut perm: Vec<usize> = (0..20).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(2));
    let f = g.extract_features(&c).unwrap();
    let fp = g.extract_features(&c.select(&perm)).unwrap();
    assert_eq!(f.shape(), &[20, 20]);
    for (row, &src) in perm.iter().enumerate() {
        for (a, b) in fp.row(row).iter().zip(f.row(src)) {
            assert!((a - b).abs() < 1e-12);
        }
    }
    assert_eq!(g.extract_features(&c).unwrap(), f);
}

#[test]
fn extractor_rejects_too_few_points() {
    let g = GeneratorParams::init(&tiny(), 3);
    assert!(g.extract_features(&cloud(4, 1)).is_err());
}

/// Central differences against the tape gradient. Entries whose one-sided
/// differences disagree sit on a neighbor switch or pooling tie and are
/// counted separately.
fn smooth_check<F>(inputs: &[Tensor], h: f64, f: F) -> (usize, usize, f64)
where
    F: Fn(&mut Tape, &[cadpu_autodiff::Var]) -> cadpu_autodiff::Result<cadpu_autodiff::Var>,
{
    let eval = |xs: &[Tensor]| {
        let mut tape = Tape::new();
        let vars: Vec<_> = xs.iter().map(|x| tape.constant(x.clone()).unwrap()).collect();
        let out = f(&mut tape, &vars).unwrap();
        tape.value(out).item().unwrap()
    };
    let mut tape = Tape::new();
    let vars: Vec<_> = inputs.iter().map(|x| tape.param(x.clone()).unwrap()).collect();
    let out = f(&mut tape, &vars).unwrap();
    let grads = tape.backward(out).unwrap();
    let base = eval(inputs);
    let (mut checked, mut kinks, mut worst) = (0, 0, 0.0f64);
    let mut work = inputs.to_vec();
    for (k, &v) in vars.iter().enumerate() {
        let analytic = grads.wrt(v).unwrap();
        for j in 0..work[k].len() {
            let orig = work[k].data()[j];
            work[k].data_mut()[j] = orig + h;
            let up = eval(&work);
            work[k].data_mut()[j] = orig - h;
            let down = eval(&work);
            work[k].data_mut()[j] = orig;
            let (fwd, bwd) = ((up - base) / h, (base - down) / h);
            let numeric = (up - down) / (2.0 * h);
            let a = analytic.data()[j];
            let scale = a.abs().max(numeric.abs());
            if scale <= 1e-6 {
                continue;
            }
            if (fwd - bwd).abs() > 1e-3 * scale.max(1.0) {
                kinks += 1;
                continue;
            }
            checked += 1;
            worst = worst.max((a - numeric).abs() / scale);
        }
    }
    (checked, kinks, worst)
}

#[test]
fn extractor_gradient_matches_differences() {
    let gp = GeneratorParams::init(&tiny(), 5);
    let x = cloud_tensor(cloud(12, 4).points());
    let w = weights(&[12, 20], 6);
    let mut inputs = vec![x];
    inputs.extend(gp.params.tensors().iter().cloned());
    let (checked, kinks, worst) = smooth_check(&inputs, 1e-6, |tape, v| {
        let g = Bound::from_vars(&gp.params, v[1..].to_vec());
        let f = extract_on_tape(tape, &g, &gp, v[0]).map_err(unwrap_ad)?;
        let wv = tape.constant(w.clone())?;
        let p = tape.mul(f, wv)?;
        tape.sum(p)
    });
    eprintln!("checked {checked}, nonsmooth {kinks}, worst {worst:.2e}");
    assert!(checked > 200, "{checked}");
    assert!(kinks * 50 < checked, "{kinks} nonsmooth of {checked}");
    assert!(worst <= 1e-4, "{worst}");
}

fn unwrap_ad(e: cadpu_model::Error) -> cadpu_autodiff::Error {
    match e {
        cadpu_model::Error::Autodiff(a) => a,
        other => panic!("{other}"),
    }
}

#[test]
fn expansion_gradient_through_gather_and_concat() {
    let gp = GeneratorParams::init(&tiny(), 7);
    let plan = plan_for(10, 3);
    let mut inputs = vec![weights(&[10, 20], 8)];
    inputs.extend(gp.params.tensors().iter().cloned());
    let w = weights(&[40, 6], 9);
    let r = check_gradients(&inputs, 1e-5, |tape, v| {
        let g = Bound::from_vars(&gp.params, v[1..].to_vec());
        let e = expand_on_tape(tape, &g, v[0], &plan).map_err(unwrap_ad)?;
        let wv = tape.constant(w.clone())?;
        let p = tape.mul(e, wv)?;
        tape.sum(p)
    })
    .unwrap();
    assert!(r.checked > 100);
    assert!(r.max_rel_error <= 1e-4, "{}", r.max_rel_error);
}

#[test]
fn slots_sharing_a_source_differ_only_through_grid() {
    let gp = GeneratorParams::init(&tiny(), 7);
    let feats = weights(&[10, 20], 1);
    let plan = plan_for(10, 5);
    let e = gp.expand_features(&feats, &plan).unwrap();
    for &(_, start, len) in &plan.groups {
        for a in start..start + len {
            for b in a + 1..start + len {
                assert_ne!(e.row(a), e.row(b));
            }
        }
    }
    let mut same = plan.clone();
    for g in &mut same.grid {
        *g = [0, 0];
    }
    let e = gp.expand_features(&feats, &same).unwrap();
    let (_, start, len) = same.groups.iter().copied().find(|g| g.2 > 1).unwrap();
    for a in start + 1..start + len {
        assert_eq!(e.row(a), e.row(start));
    }
}

#[test]
fn zero_weight_expansion_gives_constant_rows() {
    let mut gp = GeneratorParams::init(&tiny(), 7);
    for name in ["expand0.w", "expand1.w"] {
        for v in gp.params.get_mut(name).unwrap().data_mut() {
            *v = 0.0;
        }
    }
    gp.params.get_mut("expand1.b").unwrap().data_mut()[2] = 0.5;
    let e = gp.expand_features(&weights(&[10, 20], 1), &plan_for(10, 1)).unwrap();
    for i in 0..e.shape()[0] {
        assert_eq!(e.row(i), e.row(0));
    }
}

#[test]
fn regression_zero_weights_land_on_bias() {
    let mut gp = GeneratorParams::init(&tiny(), 2);
    for name in ["regress0.w", "regress1.w", "regress2.w"] {
        for v in gp.params.get_mut(name).unwrap().data_mut() {
            *v = 0.0;
        }
    }
    gp.params.get_mut("regress2.b").unwrap().data_mut().copy_from_slice(&[0.1, -0.2, 0.3]);
    let out = gp.regress_points(&weights(&[7, 6], 3)).unwrap();
    assert!(out.points().iter().all(|p| *p == Point3::new(0.1, -0.2, 0.3)));
}

#[test]
fn regression_is_row_equivariant_and_differentiable() {
    let gp = GeneratorParams::init(&tiny(), 2);
    let feats = weights(&[7, 6], 3);
    let out = gp.regress_points(&feats).unwrap();
    let rows: Vec<Vec<f64>> = (0..7).rev().map(|i| feats.row(i).to_vec()).collect();
    let rev = gp.regress_points(&Tensor::from_rows(&rows).unwrap()).unwrap();
    for i in 0..7 {
        assert!(out.points()[i].distance(rev.points()[6 - i]) < 1e-12);
    }
    let mut inputs = vec![feats];
    inputs.extend(gp.params.tensors().iter().cloned());
    let w = weights(&[7, 3], 4);
    let r = check_gradients(&inputs, 1e-5, |tape, v| {
        let g = Bound::from_vars(&gp.params, v[1..].to_vec());
        let p = regress_on_tape(tape, &g, &gp, v[0]).map_err(unwrap_ad)?;
        let wv = tape.constant(w.clone())?;
        let m = tape.mul(p, wv)?;
        tape.sum(m)
    })
    .unwrap();
    assert!(r.checked > 50);
    assert!(r.max_rel_error <= 1e-4, "{}", r.max_rel_error);
}

#[test]
fn discriminator_invariances_and_gradient() {
    let dp = DiscriminatorParams::init(&tiny(), 9);
    let c = cloud(30, 8);
    let s = dp.score(&c).unwrap();
    let mut perm: Vec<usize> = (0..30).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
    assert_eq!(dp.score(&c.select(&perm)).unwrap(), s);
    let mut dup = c.clone();
    dup.extend(&c.select(&[3]));
    assert_eq!(dp.score(&dup).unwrap(), s);
    assert!(dp.score(&PointCloud::default()).is_err());

    let mut inputs = vec![cloud_tensor(c.points())];
    inputs.extend(dp.params.tensors().iter().cloned());
    let r = check_gradients(&inputs, 1e-5, |tape, v| {
        let d = Bound::from_vars(&dp.params, v[1..].to_vec());
        discriminate_on_tape(tape, &d, &dp, v[0]).map_err(unwrap_ad)
    })
    .unwrap();
    assert!(r.checked > 20);
    assert!(r.max_rel_error <= 1e-4, "{}", r.max_rel_error);
}

#[test]
fn forward_is_bit_deterministic() {
    let gp = GeneratorParams::init(&tiny(), 2);
    let c = cloud(20, 3);
    let plan = plan_for(20, 4);
    let run = || {
        let mut tape = Tape::new();
        let g = Bound::new(&mut tape, &gp.params, true).unwrap();
        let p = cadpu_model::network::generate_on_tape(&mut tape, &g, &gp, &c, &plan).unwrap();
        let l = tape.sum(p).unwrap();
        let grads = tape.backward(l).unwrap();
        g.vars.iter().map(|&v| grads.wrt(v).unwrap()).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}
