use super::Point3;
use crate::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-9;

/// Dense 3x3 matrix, row-major. Used for symmetric matrices in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymMat3(pub [[f64; 3]; 3]);

impl SymMat3 {
    pub const ZERO: SymMat3 = SymMat3([[0.0; 3]; 3]);

    pub fn identity() -> Self {
        Self::diag(1.0, 1.0, 1.0)
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        SymMat3([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    pub fn outer(v: Point3) -> Self {
        let a = v.to_array();
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = a[i] * a[j];
            }
        }
        SymMat3(m)
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn mul_vec(&self, v: Point3) -> Point3 {
        let m = &self.0;
        Point3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    fn asymmetry(&self) -> f64 {
        let m = &self.0;
        (m[0][1] - m[1][0])
            .abs()
            .max((m[0][2] - m[2][0]).abs())
            .max((m[1][2] - m[2][1]).abs())
    }

    fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0f64, |a, &b| a.max(b.abs()))
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEig3 {
    pub eigenvalues: [f64; 3],
    pub eigenvectors: [Point3; 3],
}

/// `(1/k) * sum (p' - p)(p' - p)^T`, centered at the query point `center`.
pub fn neighborhood_covariance(center: Point3, neighbors: &[Point3]) -> Result<SymMat3> {
    if neighbors.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut m = [[0.0; 3]; 3];
    for &q in neighbors {
        let d = (q - center).to_array();
        for i in 0..3 {
            for j in i..3 {
                m[i][j] += d[i] * d[j];
            }
        }
    }
    let k = neighbors.len() as f64;
    for i in 0..3 {
        for j in i..3 {
            m[i][j] /= k;
            m[j][i] = m[i][j];
        }
    }
    Ok(SymMat3(m))
}

/// Symmetric 3x3 eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eigen3(m: &SymMat3) -> Result<SymEig3> {
    let asym = m.asymmetry();
    if asym > SYMMETRY_TOL * (1.0 + m.max_abs()) || asym.is_nan() {
        return Err(Error::NotSymmetric(asym));
    }
    let mut a = m.0;
    // symmetrize from the upper triangle
    for i in 0..3 {
        for j in 0..i {
            a[i][j] = a[j][i];
        }
    }
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _sweep in 0..64 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
        if off <= f64::EPSILON * f64::EPSILON * diag || off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for row in a.iter_mut() {
                let (akp, akq) = (row[p], row[q]);
                row[p] = c * akp - s * akq;
                row[q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let (apk, aqk) = (a[p][k], a[q][k]);
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let (vkp, vkq) = (row[p], row[q]);
                row[p] = c * vkp - s * vkq;
                row[q] = s * vkp + c * vkq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]).then(i.cmp(&j)));
    let eigenvalues = order.map(|i| a[i][i]);
    let eigenvectors = order.map(|i| Point3::new(v[0][i], v[1][i], v[2][i]));
    Ok(SymEig3 {
        eigenvalues,
        eigenvectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Real roots of the characteristic cubic via the trigonometric method.
    fn cubic_roots(m: &SymMat3) -> [f64; 3] {
        let a = &m.0;
        let c2 = -m.trace();
        let c1 = a[0][0] * a[1][1] + a[0][0] * a[2][2] + a[1][1] * a[2][2]
            - a[0][1] * a[1][0]
            - a[0][2] * a[2][0]
            - a[1][2] * a[2][1];
        let c0 = -(a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]));
        // depressed cubic t^3 + pt + q with x = t - c2/3
        let p = c1 - c2 * c2 / 3.0;
        let q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
        let r = (-p / 3.0).max(0.0).sqrt();
        let arg = if r == 0.0 {
            0.0
        } else {
            (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0)
        };
        let phi = arg.acos() / 3.0;
        let mut roots = [0, 1, 2].map(|k| {
            2.0 * r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - c2 / 3.0
        });
        roots.sort_by(f64::total_cmp);
        roots
    }

    #[test]
    fn identity() {
        let e = sym_eigen3(&SymMat3::identity()).unwrap();
        assert_eq!(e.eigenvalues, [1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_sorted_with_axis_vectors() {
        let e = sym_eigen3(&SymMat3::diag(3.0, 1.0, 2.0)).unwrap();
        assert_eq!(e.eigenvalues, [1.0, 2.0, 3.0]);
        assert_eq!(e.eigenvectors[0].to_array().map(f64::abs), [0.0, 1.0, 0.0]);
        assert_eq!(e.eigenvectors[1].to_array().map(f64::abs), [0.0, 0.0, 1.0]);
        assert_eq!(e.eigenvectors[2].to_array().map(f64::abs), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_asymmetric() {
        let mut m = SymMat3::identity();
        m.0[0][1] = 0.5;
        assert!(matches!(sym_eigen3(&m), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn random_psd_matches_cubic_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let pts: Vec<Point3> = (0..rng.random_range(1..20))
                .map(|_| {
                    Point3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-0.1..0.1),
                    )
                })
                .collect();
            let m = neighborhood_covariance(Point3::ZERO, &pts).unwrap();
            let e = sym_eigen3(&m).unwrap();
            let roots = cubic_roots(&m);
            let scale = 1.0 + m.max_abs();
            for i in 0..3 {
                assert!((e.eigenvalues[i] - roots[i]).abs() < 1e-7 * scale);
                let v = e.eigenvectors[i];
                let lam = e.eigenvalues[i];
                assert!((m.mul_vec(v) - v * lam).norm() <= 1e-6 * (1.0 + lam.abs()));
                for j in 0..i {
                    assert!(v.dot(e.eigenvectors[j]).abs() < 1e-6);
                }
                assert!((v.norm() - 1.0).abs() < 1e-9);
            }
            assert!(e.eigenvalues[0] >= -1e-9);
            let tr = m.trace();
            assert!((e.eigenvalues.iter().sum::<f64>() - tr).abs() <= 1e-9 * tr.abs().max(1e-300));
        }
    }

    #[test]
    fn covariance_hand_cases() {
        let c = neighborhood_covariance(Point3::ZERO, &[Point3::ZERO; 4]).unwrap();
        assert_eq!(c, SymMat3::ZERO);
        let c = neighborhood_covariance(
            Point3::ZERO,
            &[Point3::new(1.0, 0.0, 0.0), Point3::new(-1.0, 0.0, 0.0)],
        )
        .unwrap();
        assert_eq!(c, SymMat3::diag(1.0, 0.0, 0.0));
        assert_eq!(neighborhood_covariance(Point3::ZERO, &[]).unwrap_err(), Error::EmptyInput);
    }

    #[test]
    fn covariance_matches_resummation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let center = Point3::new(0.3, -0.2, 0.1);
        let nb: Vec<Point3> = (0..12)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let c = neighborhood_covariance(center, &nb).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for q in &nb {
                    s += (q[i] - center[i]) * (q[j] - center[j]);
                }
                assert!((c.0[i][j] - s / 12.0).abs() < 1e-14);
            }
        }
    }
}
