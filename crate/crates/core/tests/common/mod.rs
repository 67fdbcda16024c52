//! Independent reference implementations used only by tests.
#![allow(dead_code)]

use awdpd_core::{Coefficients, Dataset};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standardized random dataset with labels from a logistic model with the given slopes.
pub fn random_dataset(n: usize, slopes: &[f64], intercept: f64, rng: &mut ChaCha8Rng) -> Dataset {
    let k = slopes.len();
    loop {
        let cov = DMatrix::<f64>::from_fn(n, k, |_, _| StandardNormal.sample(&mut *rng));
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let eta = intercept + (0..k).map(|j| cov[(i, j)] * slopes[j]).sum::<f64>();
                (rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp())) as i32 as f64
            })
            .collect();
        let ones = y.iter().sum::<f64>();
        if ones >= 2.0 && ones <= n as f64 - 2.0 {
            return Dataset::new(y, cov).unwrap();
        }
    }
}

pub fn random_beta(k: usize, scale: f64, rng: &mut ChaCha8Rng) -> Coefficients {
    Coefficients::from_vec((0..=k).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect())
}

/// DPD loss written directly from its exponential form, no shared helpers.
pub fn dpd_reference(x: &DMatrix<f64>, y: &DVector<f64>, beta: &[f64], alpha: f64) -> f64 {
    let n = y.len() as f64;
    let mut total = 0.0;
    for i in 0..y.len() {
        let eta: f64 = (0..beta.len()).map(|j| x[(i, j)] * beta[j]).sum();
        let e = eta.exp();
        let p = e / (1.0 + e);
        let q = 1.0 / (1.0 + e);
        if alpha == 0.0 {
            total += -(y[i] * p.ln() + (1.0 - y[i]) * q.ln());
        } else {
            total += p.powf(1.0 + alpha) + q.powf(1.0 + alpha)
                - (1.0 + 1.0 / alpha) * (y[i] * p.powf(alpha) + (1.0 - y[i]) * q.powf(alpha))
                + 1.0 / alpha;
        }
    }
    if alpha == 0.0 {
        total / n
    } else {
        total / n.powf(1.0 + alpha)
    }
}

/// Central differences of `f` at `x`.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[j] += h;
            b[j] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}

/// Second-order central differences of `f` at `x`.
pub fn fd_hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> DMatrix<f64> {
    let d = x.len();
    let at = |di: &[(usize, f64)]| {
        let mut v = x.to_vec();
        for &(j, s) in di {
            v[j] += s;
        }
        f(&v)
    };
    let f0 = f(x);
    DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            (at(&[(i, h)]) - 2.0 * f0 + at(&[(i, -h)])) / (h * h)
        } else {
            (at(&[(i, h), (j, h)]) - at(&[(i, h), (j, -h)]) - at(&[(i, -h), (j, h)]) + at(&[(i, -h), (j, -h)]))
                / (4.0 * h * h)
        }
    })
}

/// Unpenalized logistic MLE by Newton–Raphson.
pub fn newton_mle(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let (n, p) = x.shape();
    let mut b = DVector::zeros(p);
    for _ in 0..100 {
        let eta = x * &b;
        let pi = eta.map(|e| 1.0 / (1.0 + (-e).exp()));
        let g = x.tr_mul(&(&pi - y));
        let mut h = DMatrix::zeros(p, p);
        for i in 0..n {
            let xi = x.row(i).transpose();
            h += &xi * xi.transpose() * (pi[i] * (1.0 - pi[i]));
        }
        let step = h.lu().solve(&g).expect("well-conditioned design");
        b -= &step;
        if step.amax() < 1e-14 {
            break;
        }
    }
    b
}

/// `nll/n + λ Σ_{j≥1} |β_j|` minimized by FISTA with a fixed step.
pub fn fista_logistic_lasso(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, iters: usize) -> DVector<f64> {
    let (n, p) = x.shape();
    let lip = x.clone().svd(false, false).singular_values.max().powi(2) / (4.0 * n as f64);
    let step = 1.0 / lip;
    let grad = |b: &DVector<f64>| {
        let pi = (x * b).map(|e| 1.0 / (1.0 + (-e).exp()));
        x.tr_mul(&(pi - y)) / n as f64
    };
    let prox = |v: DVector<f64>| {
        DVector::from_fn(p, |j, _| {
            if j == 0 {
                v[0]
            } else {
                v[j].signum() * (v[j].abs() - step * lambda).max(0.0)
            }
        })
    };
    let mut b = DVector::zeros(p);
    let mut z = b.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let next = prox(&z - grad(&z) * step);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        z = &next + (&next - &b) * ((t - 1.0) / t_next);
        b = next;
        t = t_next;
    }
    b
}

/// `‖y - Xγ‖² + λ Σ_{j≥1} w_j |γ_j|` with the intercept `γ_0` at its closed-form optimum.
pub fn profiled_objective(xm: &DMatrix<f64>, ym: &DVector<f64>, lambda: f64, w: &[f64], slopes: &[f64]) -> f64 {
    let n = ym.len();
    let mut r = ym.clone();
    for (j, s) in slopes.iter().enumerate() {
        r -= xm.column(j + 1) * *s;
    }
    let col0 = xm.column(0);
    let g0 = col0.dot(&r) / col0.norm_squared();
    let rr: f64 = (0..n).map(|i| (r[i] - col0[i] * g0).powi(2)).sum();
    rr + lambda * slopes.iter().zip(w).map(|(s, wj)| wj * s.abs()).sum::<f64>()
}

/// Exhaustive search over a 3-d grid of slopes, zooming in around the best point.
pub fn grid_lasso_3d(xm: &DMatrix<f64>, ym: &DVector<f64>, lambda: f64, w: &[f64], radius: f64) -> ([f64; 3], f64) {
    const SIDE: i32 = 10;
    let mut centre = [0.0; 3];
    let mut half = radius;
    let mut best = profiled_objective(xm, ym, lambda, w, &centre);
    for _ in 0..40 {
        let h = half / SIDE as f64;
        let mut arg = centre;
        for a in -SIDE..=SIDE {
            for b in -SIDE..=SIDE {
                for c in -SIDE..=SIDE {
                    let s = [centre[0] + a as f64 * h, centre[1] + b as f64 * h, centre[2] + c as f64 * h];
                    let v = profiled_objective(xm, ym, lambda, w, &s);
                    if v < best {
                        best = v;
                        arg = s;
                    }
                }
            }
        }
        centre = arg;
        half /= 3.0;
    }
    (centre, best)
}

/// Largest KKT violation of the weighted-lasso objective at `gamma`, relative to `λ`.
pub fn kkt_violation(xm: &DMatrix<f64>, ym: &DVector<f64>, lambda: f64, w: &[f64], gamma: &[f64]) -> f64 {
    let r = ym - xm * DVector::from_column_slice(gamma);
    let mut worst = (2.0 * xm.column(0).dot(&r)).abs();
    for j in 1..gamma.len() {
        let g = 2.0 * xm.column(j).dot(&r);
        let thr = lambda * w[j - 1];
        let v = if gamma[j] != 0.0 {
            (g - thr * gamma[j].signum()).abs()
        } else {
            (g.abs() - thr).max(0.0)
        };
        worst = worst.max(v);
    }
    worst / lambda.max(1.0)
}
