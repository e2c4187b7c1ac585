#![allow(dead_code)]

use ocx::{KernelSpec, Matrix, OneClassModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn random_spec(rng: &mut ChaCha8Rng, exponential: bool, q: f64) -> KernelSpec {
    if exponential {
        KernelSpec::Exponential {
            q,
            sigma: rng.random_range(0.5..3.0),
        }
    } else {
        KernelSpec::TStudent {
            q,
            a: rng.random_range(0.2..2.0),
        }
    }
}

/// Random model with Gaussian support vectors and positive normalised coefficients.
pub fn random_model(rng: &mut ChaCha8Rng, spec: KernelSpec, m: usize, d: usize) -> OneClassModel {
    let rows: Vec<Vec<f64>> = (0..m).map(|_| normal_vec(rng, d)).collect();
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let alphas = raw.iter().map(|a| a / total).collect();
    OneClassModel::from_parts(Matrix::from_rows(&rows).unwrap(), alphas, spec, 0.5, 0.1).unwrap()
}

/// Random model of either family and q in {1, 2, 4}, with a query point.
pub fn random_case(rng: &mut ChaCha8Rng, max_m: usize, max_d: usize) -> (OneClassModel, Vec<f64>) {
    let exponential = rng.random_bool(0.5);
    let q = [1.0, 2.0, 4.0][rng.random_range(0..3)];
    let spec = random_spec(rng, exponential, q);
    let m = rng.random_range(1..=max_m);
    let d = rng.random_range(1..=max_d);
    let model = random_model(rng, spec, m, d);
    let scale = rng.random_range(0.5..3.0);
    let x = normal_vec(rng, d).into_iter().map(|v| v * scale).collect();
    (model, x)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Euclidean norm by direct summation.
pub fn norm(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `g(x)` by direct summation.
pub fn g_direct(model: &OneClassModel, x: &[f64]) -> f64 {
    model
        .support_vectors
        .iter_rows()
        .zip(&model.alphas)
        .map(|(u, a)| {
            let z: Vec<f64> = x.iter().zip(u).map(|(p, q)| p - q).collect();
            a * kernel_direct(&model.kernel, norm(&z))
        })
        .sum()
}

pub fn kernel_direct(spec: &KernelSpec, dist: f64) -> f64 {
    match *spec {
        KernelSpec::Exponential { q, sigma } => (-dist.powf(q) / (q * sigma.powf(q))).exp(),
        KernelSpec::TStudent { q, a } => 1.0 / (a + dist.powf(q)),
    }
}

/// Outlierness from first principles.
pub fn o_direct(model: &OneClassModel, x: &[f64]) -> f64 {
    let g = g_direct(model, x).max(1e-300);
    match model.kernel {
        KernelSpec::Exponential { .. } => -g.ln(),
        KernelSpec::TStudent { .. } => model.m() as f64 / g,
    }
}

/// Per support vector `(C_j, D_j)` of the local linear-in-distance model
/// `R_j = C_j ‖x − u_j‖^q + D_j`, built from the network quantities.
pub fn affine_constants(model: &OneClassModel, x: &[f64]) -> Vec<(f64, f64)> {
    let m = model.m();
    let d: Vec<f64> = model
        .support_vectors
        .iter_rows()
        .map(|u| {
            let z: Vec<f64> = x.iter().zip(u).map(|(p, q)| p - q).collect();
            norm(&z).powf(model.kernel.q())
        })
        .collect();
    match model.kernel {
        KernelSpec::TStudent { a, .. } => {
            let h: Vec<f64> = d
                .iter()
                .zip(&model.alphas)
                .map(|(dj, al)| (a + dj) / al)
                .collect();
            let s: f64 = h.iter().map(|v| 1.0 / v).sum();
            h.iter()
                .zip(&model.alphas)
                .map(|(hj, al)| {
                    // ∂o/∂h_j of o = m / Σ 1/h
                    let c = m as f64 / (hj * hj * s * s);
                    (c / al, c * a / al)
                })
                .collect()
        }
        KernelSpec::Exponential { q, sigma } => {
            let scale = q * sigma.powf(q);
            let h: Vec<f64> = d
                .iter()
                .zip(&model.alphas)
                .map(|(dj, al)| -al.ln() + dj / scale)
                .collect();
            let o = -h.iter().map(|v| (-v).exp()).sum::<f64>().ln();
            h.iter()
                .zip(&model.alphas)
                .map(|(hj, al)| {
                    let p = (-hj).exp() / h.iter().map(|v| (-v).exp()).sum::<f64>();
                    // ε_j = o − h_j
                    let eps = o - hj;
                    (p / scale, p * (-al.ln() + eps))
                })
                .collect()
        }
    }
}

/// Integrated gradients of `f(x') = C‖x' − u‖^q + D` from its root on the
/// segment `[u, x]` (or from `u` when there is none) to `x`, by the
/// trapezoid rule.
pub fn trapezoid_ig(x: &[f64], u: &[f64], q: f64, c: f64, dconst: f64, steps: usize) -> Vec<f64> {
    let z: Vec<f64> = x.iter().zip(u).map(|(a, b)| a - b).collect();
    let nz = norm(&z);
    if nz == 0.0 {
        return vec![0.0; x.len()];
    }
    let t0 = if dconst < 0.0 {
        (-dconst / (c * nz.powf(q))).powf(1.0 / q).min(1.0)
    } else {
        0.0
    };
    let start: Vec<f64> = u.iter().zip(&z).map(|(ui, zi)| ui + t0 * zi).collect();
    let path: Vec<f64> = x.iter().zip(&start).map(|(a, b)| a - b).collect();
    let mut acc = vec![0.0; x.len()];
    let mut zz = vec![0.0; x.len()];
    let h = 1.0 / steps as f64;
    for k in 0..=steps {
        let t = k as f64 * h;
        let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
        for i in 0..x.len() {
            zz[i] = start[i] + t * path[i] - u[i];
        }
        let n = norm(&zz);
        if n == 0.0 {
            // limit along the ray: c ẑ for q = 1, zero for q > 1
            if q == 1.0 {
                for (a, zi) in acc.iter_mut().zip(&z) {
                    *a += w * c * zi / nz;
                }
            }
            continue;
        }
        let f = w * c * q * n.powf(q - 2.0);
        for (a, zi) in acc.iter_mut().zip(&zz) {
            *a += f * zi;
        }
    }
    acc.iter().zip(&path).map(|(a, p)| a * h * p).collect()
}

/// Central finite-difference gradient of `f`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut grad = Vec::with_capacity(x.len());
    let mut p = x.to_vec();
    for i in 0..x.len() {
        p[i] = x[i] + step;
        let up = f(&p);
        p[i] = x[i] - step;
        let down = f(&p);
        p[i] = x[i];
        grad.push((up - down) / (2.0 * step));
    }
    grad
}
