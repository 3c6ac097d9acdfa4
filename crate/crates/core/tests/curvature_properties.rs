use cadpu_core::curvature::{
    regularizer, regularizer_grad, sampling_weights, surface_variation, surface_variation_of,
    RegularizerStencil,
};
use cadpu_core::geometry::{estimate_normals, KnnIndex, Point3, PointCloud};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fibonacci_sphere(n: usize) -> Vec<Point3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - y * y).sqrt();
            let t = golden * i as f64;
            Point3::new(r * t.cos(), y, r * t.sin())
        })
        .collect()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s[s.len() / 2]
}

#[test]
fn sphere_variation_near_constant() {
    let cloud = PointCloud::new(fibonacci_sphere(2000)).unwrap();
    let field = surface_variation_of(&cloud, 12).unwrap();
    let med = median(&field.values);
    assert!(med > 0.0);
    let max = field.values.iter().copied().fold(0.0, f64::max);
    assert!(max / med <= 1.5);
    // the spiral's polar caps are lattice defects with irregular neighborhoods
    for (v, p) in field.values.iter().zip(cloud.points()) {
        if p.y.abs() <= 0.95 {
            assert!((v - med).abs() <= 0.2 * med, "{v} vs median {med} at {p:?}");
        }
    }
}

#[test]
fn variation_bounded_on_random_clouds() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let pts: Vec<Point3> = (0..200)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let cloud = PointCloud::new(pts).unwrap();
        let idx = KnnIndex::build(&cloud).unwrap();
        let field = surface_variation(&cloud, &idx, 12).unwrap();
        assert_eq!(field.k_used, 12);
        assert!(field.values.iter().all(|&v| (0.0..=1.0 / 3.0 + 1e-9).contains(&v)));
    }
}

fn random_instance(rng: &mut ChaCha8Rng, n_pred: usize, n_gt: usize) -> (PointCloud, PointCloud) {
    // gt on a wavy sheet with estimated normals, pred scattered around it
    let gt_pts: Vec<Point3> = (0..n_gt)
        .map(|_| {
            let (x, y): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            Point3::new(x, y, 0.3 * (2.0 * x).sin() * y)
        })
        .collect();
    let gt = estimate_normals(&PointCloud::new(gt_pts.clone()).unwrap(), 8)
        .unwrap()
        .cloud;
    // keep pred points apart from each other and from gt so the 1/r terms stay
    // well conditioned for finite differences
    let mut pred_pts: Vec<Point3> = Vec::with_capacity(n_pred);
    while pred_pts.len() < n_pred {
        let g = gt_pts[rng.random_range(0..n_gt)];
        let q = g + Point3::new(
            rng.random_range(-0.1..0.1),
            rng.random_range(-0.1..0.1),
            rng.random_range(-0.1..0.1),
        );
        let clear = pred_pts.iter().chain(&gt_pts).all(|p| p.distance(q) > 0.01);
        if clear {
            pred_pts.push(q);
        }
    }
    (PointCloud::new(pred_pts).unwrap(), gt)
}

#[test]
fn regularizer_grad_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = 1e-5;
    let mut checked = 0usize;
    let mut kinks = 0usize;
    for inst in 0..50 {
        let n = rng.random_range(16..=64);
        let k = if inst % 2 == 0 { 4 } else { 12 };
        let (pred, gt) = random_instance(&mut rng, n, 2 * n);
        let stencil = RegularizerStencil::build(&pred, &gt, k).unwrap();
        let grad = stencil.gradient(pred.points()).unwrap();
        assert_eq!(grad, regularizer_grad(&pred, &gt, k).unwrap());
        let mut pts = pred.points().to_vec();
        for i in 0..n {
            for axis in 0..3 {
                let an = grad[i][axis];
                if an.abs() <= 1e-6 {
                    continue;
                }
                checked += 1;
                let fd = central_difference(&stencil, &mut pts, i, axis, h);
                if (fd - an).abs() <= 1e-4 * an.abs() {
                    continue;
                }
                // an |.| kink inside the +-h window; smaller steps must converge
                kinks += 1;
                let ok = [1e-6, 1e-7].iter().any(|&h2| {
                    (central_difference(&stencil, &mut pts, i, axis, h2) - an).abs() <= 1e-4 * an.abs()
                });
                assert!(ok, "inst {inst} point {i} axis {axis}: fd {fd} vs analytic {an}");
            }
        }
    }
    assert!(checked > 1000);
    assert!((kinks as f64) < 0.005 * checked as f64, "{kinks} kink crossings of {checked}");
}

fn central_difference(stencil: &RegularizerStencil, pts: &mut [Point3], i: usize, axis: usize, h: f64) -> f64 {
    let orig = pts[i].to_array();
    let mut p = orig;
    p[axis] = orig[axis] + h;
    pts[i] = p.into();
    let fp = stencil.value(pts).unwrap();
    p[axis] = orig[axis] - h;
    pts[i] = p.into();
    let fm = stencil.value(pts).unwrap();
    pts[i] = orig.into();
    (fp - fm) / (2.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weights_monotone_and_normalized(curv in prop::collection::vec(0.0f64..(1.0 / 3.0), 1..200), eps in 1e-4f64..0.1) {
        let w = sampling_weights(&curv, eps).unwrap();
        prop_assert!((w.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for i in 0..curv.len() {
            prop_assert!(w.weights[i] > 0.0);
            for j in 0..curv.len() {
                if curv[i] > curv[j] {
                    prop_assert!(w.weights[i] > w.weights[j]);
                }
            }
        }
    }

    #[test]
    fn weights_appending_equal_curvature_only_renormalizes(curv in prop::collection::vec(0.0f64..0.3, 2..50), extra in 0usize..50) {
        let extra = extra % curv.len();
        let w = sampling_weights(&curv, 0.01).unwrap();
        let mut grown = curv.clone();
        grown.push(curv[extra]);
        let g = sampling_weights(&grown, 0.01).unwrap();
        let ratio = g.weights[0] / w.weights[0];
        for i in 0..curv.len() {
            prop_assert!((g.weights[i] / w.weights[i] - ratio).abs() < 1e-12);
        }
        prop_assert!((g.weights[curv.len()] - g.weights[extra]).abs() < 1e-15);
    }

    #[test]
    fn regularizer_rigid_invariant(seed in any::<u64>(), angle in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (pred, gt) = random_instance(&mut rng, 30, 60);
        let base = regularizer(&pred, &gt, 6).unwrap();
        prop_assert!(base >= 0.0);
        let (s, c) = angle.sin_cos();
        let rot = |p: Point3| Point3::new(c * p.x - s * p.z, p.y, s * p.x + c * p.z);
        let shift = Point3::new(0.3, -1.0, 2.0);
        let pred_m = pred.map_points(|p| rot(p) + shift).unwrap();
        let gt_m = PointCloud::with_normals(
            gt.points().iter().map(|&p| rot(p) + shift).collect(),
            gt.normals().unwrap().iter().map(|&n| rot(n)).collect(),
        ).unwrap();
        prop_assert!((regularizer(&pred_m, &gt_m, 6).unwrap() - base).abs() < 1e-9);
    }
}
