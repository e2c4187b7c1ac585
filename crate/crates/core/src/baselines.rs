//! Comparison attributions: sensitivity analysis, nearest-neighbour and
//! expected-value differences, Sobel magnitude, random ordering, and the
//! diagonal Gaussian log-likelihood decomposition.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{OcxError, Result};
use crate::explain::{sa_gradient, Heatmap};
use crate::image::Image;
use crate::kernels::sq_dist;
use crate::matrix::Matrix;
use crate::svm::OneClassModel;

/// Squared partial derivatives of the outlierness.
pub fn sensitivity(model: &OneClassModel, x: &[f64]) -> Result<Heatmap> {
    let g = sa_gradient(model, x)?;
    Ok(Heatmap::new(g.into_iter().map(|v| v * v).collect()))
}

/// Index of the nearest support vector; lowest index wins ties.
pub fn nearest_support_vector(model: &OneClassModel, x: &[f64]) -> Result<usize> {
    model.check_dim(x)?;
    let mut best = (f64::INFINITY, 0);
    for (j, u) in model.support_vectors.iter_rows().enumerate() {
        let d = sq_dist(x, u);
        if d < best.0 {
            best = (d, j);
        }
    }
    Ok(best.1)
}

fn squared_difference(x: &[f64], u: &[f64]) -> Heatmap {
    Heatmap::new(x.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).collect())
}

/// `(x − u_NN)²`.
pub fn nn_map(model: &OneClassModel, x: &[f64]) -> Result<Heatmap> {
    let j = nearest_support_vector(model, x)?;
    Ok(squared_difference(x, model.support_vectors.row(j)))
}

/// `Σ_j α_j u_j`.
pub fn expected_support_vector(model: &OneClassModel) -> Vec<f64> {
    let mut mean = vec![0.0; model.dim()];
    for (u, a) in model.support_vectors.iter_rows().zip(&model.alphas) {
        for (m, v) in mean.iter_mut().zip(u) {
            *m += a * v;
        }
    }
    mean
}

/// `(x − ū)²` with `ū = Σ_j α_j u_j`.
pub fn ev_map(model: &OneClassModel, x: &[f64]) -> Result<Heatmap> {
    model.check_dim(x)?;
    Ok(squared_difference(x, &expected_support_vector(model)))
}

/// Sobel gradient magnitude of the channel-mean image, replicate padding.
pub fn sobel_map(image: &Image) -> Heatmap {
    let gray = image.to_gray();
    let (h, w) = (gray.height as isize, gray.width as isize);
    let px =
        |r: isize, c: isize| gray.get(r.clamp(0, h - 1) as usize, c.clamp(0, w - 1) as usize, 0);
    let mut out = Vec::with_capacity(gray.data.len());
    for r in 0..h {
        for c in 0..w {
            let gx = (px(r - 1, c + 1) + 2.0 * px(r, c + 1) + px(r + 1, c + 1))
                - (px(r - 1, c - 1) + 2.0 * px(r, c - 1) + px(r + 1, c - 1));
            let gy = (px(r + 1, c - 1) + 2.0 * px(r + 1, c) + px(r + 1, c + 1))
                - (px(r - 1, c - 1) + 2.0 * px(r - 1, c) + px(r - 1, c + 1));
            out.push((gx * gx + gy * gy).sqrt());
        }
    }
    let hm = Heatmap::new(out);
    Heatmap {
        shape: Some((gray.height, gray.width, 1)),
        ..hm
    }
}

/// Uniformly random permutation of `0..d` from a seeded generator.
pub fn random_order(d: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(&mut rng);
    order
}

/// Default variance regulariser on the 0–255 pixel scale.
pub const DEFAULT_MVN_LAMBDA: f64 = 1e-2;

/// Axis-aligned Gaussian fitted by maximum likelihood.
#[derive(Clone, Debug, PartialEq)]
pub struct MvnModel {
    pub mu: Vec<f64>,
    /// Per-feature variance plus `lambda`.
    pub var: Vec<f64>,
    pub lambda: f64,
}

pub fn mvn_fit(data: &Matrix, lambda: f64) -> Result<MvnModel> {
    if data.rows() == 0 {
        return Err(OcxError::Parameter("MVN fit needs at least one row".into()));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(OcxError::Parameter(format!(
            "lambda must be > 0, got {lambda}"
        )));
    }
    let n = data.rows() as f64;
    let mut mu = vec![0.0; data.cols()];
    for row in data.iter_rows() {
        for (m, v) in mu.iter_mut().zip(row) {
            *m += v;
        }
    }
    mu.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; data.cols()];
    for row in data.iter_rows() {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mu) {
            *s += (v - m) * (v - m);
        }
    }
    var.iter_mut().for_each(|s| *s = *s / n + lambda);
    Ok(MvnModel { mu, var, lambda })
}

impl MvnModel {
    /// Negative log-likelihood of `x`.
    pub fn nll(&self, x: &[f64]) -> Result<f64> {
        Ok(self.nll_at_mean() + mvn_decompose(self, x)?.total)
    }

    /// The zero-order term `NLL(μ)`, which is not decomposed.
    pub fn nll_at_mean(&self) -> f64 {
        self.var
            .iter()
            .map(|v| 0.5 * (2.0 * std::f64::consts::PI * v).ln())
            .sum()
    }
}

/// `R_i = (x_i − μ_i)² / (2σ_i)`.
pub fn mvn_decompose(mvn: &MvnModel, x: &[f64]) -> Result<Heatmap> {
    if x.len() != mvn.mu.len() {
        return Err(OcxError::Shape(format!(
            "input has {} features, MVN has {}",
            x.len(),
            mvn.mu.len()
        )));
    }
    Ok(Heatmap::new(
        x.iter()
            .zip(&mvn.mu)
            .zip(&mvn.var)
            .map(|((x, m), v)| (x - m) * (x - m) / (2.0 * v))
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;

    fn model(svs: &[&[f64]], alphas: &[f64]) -> OneClassModel {
        OneClassModel::from_parts(
            Matrix::from_rows(svs).unwrap(),
            alphas.to_vec(),
            KernelSpec::gaussian(1.3),
            0.5,
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn sensitivity_single_gaussian() {
        let sigma: f64 = 1.3;
        let m = model(&[&[0.5, 1.0]], &[1.0]);
        let x = [2.0, -1.0];
        let hm = sensitivity(&m, &x).unwrap();
        assert!((hm.r[0] - 1.5f64.powi(2) / sigma.powi(4)).abs() < 1e-14);
        assert!((hm.r[1] - 4.0 / sigma.powi(4)).abs() < 1e-14);
    }

    #[test]
    fn nn_map_ties_and_zero() {
        let m = model(&[&[-1.0, 0.0], &[1.0, 0.0]], &[0.5, 0.5]);
        assert_eq!(nearest_support_vector(&m, &[0.0, 5.0]).unwrap(), 0);
        assert_eq!(nn_map(&m, &[1.0, 0.0]).unwrap().r, vec![0.0, 0.0]);
        assert_eq!(nn_map(&m, &[0.0, 5.0]).unwrap().r, vec![1.0, 25.0]);
    }

    #[test]
    fn ev_map_examples() {
        let m = model(&[&[0.0, 0.0], &[2.0, 4.0]], &[0.25, 0.75]);
        assert_eq!(expected_support_vector(&m), vec![1.5, 3.0]);
        assert_eq!(ev_map(&m, &[1.5, 3.0]).unwrap().r, vec![0.0, 0.0]);
        let single = model(&[&[1.0, 2.0]], &[1.0]);
        let x = [0.0, 7.0];
        assert_eq!(ev_map(&single, &x).unwrap(), nn_map(&single, &x).unwrap());
    }

    #[test]
    fn sobel_constant_and_step() {
        let flat = Image::filled(5, 5, 3, 9.0);
        assert!(sobel_map(&flat).r.iter().all(|&v| v == 0.0));

        // vertical step between columns 2 and 3 of a 6-wide image
        let data: Vec<f64> = (0..5 * 6)
            .map(|i| if i % 6 >= 3 { 10.0 } else { 0.0 })
            .collect();
        let img = Image::new(5, 6, 1, data).unwrap();
        let hm = sobel_map(&img);
        for r in 0..5 {
            let row = &hm.r[r * 6..(r + 1) * 6];
            assert_eq!(row[0], 0.0);
            assert_eq!(row[5], 0.0);
            assert_eq!(row[2], row[3]);
            assert_eq!(row[2], 40.0);
        }
    }

    #[test]
    fn random_order_basics() {
        assert_eq!(random_order(1, 3), vec![0]);
        assert_eq!(random_order(50, 9), random_order(50, 9));
        let mut o = random_order(50, 9);
        o.sort_unstable();
        assert_eq!(o, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn mvn_examples() {
        let data = Matrix::from_rows(&[[0.0, 5.0], [2.0, 5.0]]).unwrap();
        let mvn = mvn_fit(&data, 1e-12).unwrap();
        assert_eq!(mvn.mu, vec![1.0, 5.0]);
        assert!((mvn.var[0] - 1.0).abs() < 1e-11);
        let hm = mvn_decompose(&mvn, &[3.0, 5.0]).unwrap();
        assert!((hm.r[0] - 2.0).abs() < 1e-10);
        assert_eq!(hm.r[1], 0.0);
        assert_eq!(mvn_decompose(&mvn, &[1.0, 5.0]).unwrap().r, vec![0.0, 0.0]);

        let reg = mvn_fit(&data, 0.1).unwrap();
        assert_eq!(reg.var[1], 0.1);
        assert!(mvn_fit(&data, 0.0).is_err());
    }

    #[test]
    fn mvn_decomposition_sums_to_nll_difference() {
        let data =
            Matrix::from_rows(&[[0.0, 1.0, 3.0], [2.0, -1.0, 4.0], [1.0, 0.5, 9.0]]).unwrap();
        let mvn = mvn_fit(&data, 0.01).unwrap();
        let x = [4.0, -3.0, 0.0];
        // direct log-density of the diagonal Gaussian
        let direct: f64 = (0..3)
            .map(|i| {
                let v = mvn.var[i];
                0.5 * (2.0 * std::f64::consts::PI * v).ln() + (x[i] - mvn.mu[i]).powi(2) / (2.0 * v)
            })
            .sum();
        let total = mvn_decompose(&mvn, &x).unwrap().total;
        assert!((direct - mvn.nll_at_mean() - total).abs() < 1e-12);
    }
}
