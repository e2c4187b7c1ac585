//! Inlierness and outlierness of a trained model, and the two-layer network
//! (detection, then soft min-pooling) that computes the same outlierness.

use crate::error::{OcxError, Result};
use crate::kernels::{pow_from_sq, KernelFamily, KernelSpec};
use crate::svm::OneClassModel;

/// Floor applied to `g` before taking a log or a reciprocal.
pub const G_FLOOR: f64 = 1e-300;

/// Layer-1 effective distances and the pooled output.
#[derive(Clone, Debug, PartialEq)]
pub struct Activations {
    pub h: Vec<f64>,
    pub o: f64,
    pub family: KernelFamily,
}

/// `i(x) = g(x)`.
pub fn inlierness(model: &OneClassModel, x: &[f64]) -> Result<f64> {
    model.discriminant(x)
}

/// `−log g(x)` for exponential kernels, `m / g(x)` for t-Student kernels.
pub fn outlierness(model: &OneClassModel, x: &[f64]) -> Result<f64> {
    let g = model.discriminant(x)?;
    Ok(outlierness_from_g(&model.kernel, model.m(), g))
}

pub(crate) fn outlierness_from_g(kernel: &KernelSpec, m: usize, g: f64) -> f64 {
    let g = g.max(G_FLOOR);
    match kernel {
        KernelSpec::Exponential { .. } => -g.ln(),
        KernelSpec::TStudent { .. } => m as f64 / g,
    }
}

/// Effective distances `h_j` for powered distances `d_j = ‖x − u_j‖^q`.
pub(crate) fn effective_distances(
    kernel: &KernelSpec,
    alphas: &[f64],
    pow_dists: &[f64],
) -> Vec<f64> {
    match *kernel {
        KernelSpec::Exponential { q, sigma } => {
            let scale = q * sigma.powf(q);
            alphas
                .iter()
                .zip(pow_dists)
                .map(|(a, d)| -a.ln() + d / scale)
                .collect()
        }
        KernelSpec::TStudent { a, .. } => alphas
            .iter()
            .zip(pow_dists)
            .map(|(al, d)| (a + d) / al)
            .collect(),
    }
}

pub(crate) fn pow_dists(model: &OneClassModel, x: &[f64]) -> Vec<f64> {
    let q = model.kernel.q();
    model
        .sq_dists(x)
        .into_iter()
        .map(|s| pow_from_sq(s, q))
        .collect()
}

/// Layer-1 activations and pooled output for `x`.
pub fn detection_activations(model: &OneClassModel, x: &[f64]) -> Result<Activations> {
    model.check_dim(x)?;
    if let Some(a) = model.alphas.iter().find(|a| a.is_nan() || **a <= 0.0) {
        return Err(OcxError::Domain(format!(
            "effective distance needs alpha > 0, got {a}"
        )));
    }
    let d = pow_dists(model, x);
    let h = effective_distances(&model.kernel, &model.alphas, &d);
    let o = match model.kernel.family() {
        KernelFamily::TStudent => harmonic_mean(&h)?,
        KernelFamily::Exponential => neg_lse_pool(&h),
    };
    Ok(Activations {
        h,
        o,
        family: model.kernel.family(),
    })
}

/// `m / Σ 1/v_j`.
pub fn harmonic_mean(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(OcxError::Domain("harmonic mean of an empty vector".into()));
    }
    if let Some(x) = v.iter().find(|x| x.is_nan() || **x <= 0.0) {
        return Err(OcxError::Domain(format!(
            "harmonic mean needs positive entries, got {x}"
        )));
    }
    Ok(v.len() as f64 / v.iter().map(|x| 1.0 / x).sum::<f64>())
}

/// `−log Σ exp(−h_j)`, shifted around `min(h)`.
pub fn neg_lse_pool(h: &[f64]) -> f64 {
    let min = h.iter().copied().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return min;
    }
    min - h.iter().map(|v| (min - v).exp()).sum::<f64>().ln()
}

/// Outlierness computed through the two-layer network.
pub fn outlierness_via_network(model: &OneClassModel, x: &[f64]) -> Result<f64> {
    Ok(detection_activations(model, x)?.o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn single(kernel: KernelSpec, u: &[f64]) -> OneClassModel {
        OneClassModel::from_parts(
            Matrix::from_rows(&[u]).unwrap(),
            vec![1.0],
            kernel,
            0.5,
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn inlierness_examples() {
        let m = single(KernelSpec::gaussian(1.0), &[1.0, -1.0]);
        assert_eq!(inlierness(&m, &[1.0, -1.0]).unwrap(), 1.0);
        assert!(inlierness(&m, &[1e4, 1e4]).unwrap() < 1e-6);
    }

    #[test]
    fn outlierness_examples() {
        let m = single(KernelSpec::gaussian(1.0), &[0.0, 0.0]);
        assert_eq!(outlierness(&m, &[0.0, 0.0]).unwrap(), 0.0);
        // −log exp(−4/2) = 2
        assert!((outlierness(&m, &[2.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
        let t = single(KernelSpec::t_student(2.0, 1.0), &[3.0]);
        assert_eq!(outlierness(&t, &[3.0]).unwrap(), 1.0);
    }

    #[test]
    fn outlierness_is_floored() {
        let m = single(KernelSpec::gaussian(0.01), &[0.0]);
        let o = outlierness(&m, &[1e6]).unwrap();
        assert!(o.is_finite());
        assert!((o + G_FLOOR.ln()).abs() < 1e-9);
    }

    #[test]
    fn activation_examples() {
        let t = single(KernelSpec::t_student(2.0, 0.7), &[1.0]);
        assert_eq!(detection_activations(&t, &[1.0]).unwrap().h, vec![0.7]);
        let e = single(KernelSpec::gaussian(2.0), &[1.0]);
        assert_eq!(detection_activations(&e, &[1.0]).unwrap().h, vec![0.0]);
    }

    #[test]
    fn harmonic_mean_examples() {
        assert_eq!(harmonic_mean(&[2.0, 2.0]).unwrap(), 2.0);
        assert!((harmonic_mean(&[1.0, 1.0, 4.0]).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            harmonic_mean(&[1.0, 0.0]),
            Err(OcxError::Domain(_))
        ));
        assert!(matches!(
            harmonic_mean(&[1.0, -2.0]),
            Err(OcxError::Domain(_))
        ));
    }

    #[test]
    fn lse_pool_examples() {
        assert_eq!(neg_lse_pool(&[3.25]), 3.25);
        assert!((neg_lse_pool(&[0.0, 0.0]) + std::f64::consts::LN_2).abs() < 1e-15);
        // no overflow for large activations
        let v = neg_lse_pool(&[800.0, 801.0]);
        assert!((v - (800.0 - (1.0 + (-1.0f64).exp()).ln())).abs() < 1e-12);
    }

    #[test]
    fn single_sv_network_is_exact() {
        let e = single(KernelSpec::Exponential { q: 1.0, sigma: 0.5 }, &[0.2, 0.4]);
        let x = [1.0, -3.0];
        assert_eq!(
            outlierness_via_network(&e, &x).unwrap(),
            outlierness(&e, &x).unwrap()
        );
    }

    #[test]
    fn split_coefficients_match_merged_model() {
        let u = [0.5, 1.0];
        let v = [-1.0, 2.0];
        for kernel in [KernelSpec::gaussian(1.3), KernelSpec::t_student(2.0, 1.0)] {
            let merged = OneClassModel::from_parts(
                Matrix::from_rows(&[u, v]).unwrap(),
                vec![0.6, 0.4],
                kernel,
                0.5,
                0.1,
            )
            .unwrap();
            let split = OneClassModel::from_parts(
                Matrix::from_rows(&[u, u, v]).unwrap(),
                vec![0.25, 0.35, 0.4],
                kernel,
                0.5,
                0.1,
            )
            .unwrap();
            let x = [2.0, -0.5];
            // g is identical; outlierness differs only through m for t-Student
            let g_m = merged.discriminant(&x).unwrap();
            let g_s = split.discriminant(&x).unwrap();
            assert!((g_m - g_s).abs() < 1e-15);
            let net = outlierness_via_network(&split, &x).unwrap();
            let direct = outlierness_from_g(&kernel, 3, g_m);
            assert!((net - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        }
    }
}
