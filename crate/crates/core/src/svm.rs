//! ν-one-class SVM: dual solver and the trained model.
//!
//! The dual solved here is
//!
//! ```text
//! min_α ½ αᵀKα   s.t.  Σα = 1,  0 ≤ α_i ≤ 1/(νn)
//! ```
//!
//! by two-variable (SMO) updates on the maximal violating pair. The trained
//! discriminant is `g(x) = Σ_j α_j k(‖x − u_j‖)` and points with `g(x) < ρ`
//! are outliers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::RowCache;
use crate::error::{OcxError, Result};
use crate::kernels::{sq_dist, KernelSpec};
use crate::matrix::Matrix;

/// Coefficients below this are dropped before the model is stored.
pub const ALPHA_PRUNE: f64 = 1e-12;

/// Trained one-class model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneClassModel {
    pub kernel: KernelSpec,
    pub nu: f64,
    pub rho: f64,
    pub alphas: Vec<f64>,
    pub support_vectors: Matrix,
    #[serde(default)]
    pub n_train: usize,
    /// KKT tolerance the model was trained to; free support vectors lie within
    /// it of `rho`.
    #[serde(default)]
    pub tol: f64,
}

/// Inlier/outlier decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Inlier,
    Outlier,
}

impl OneClassModel {
    /// Assembles a model from explicit parts and checks its invariants.
    pub fn from_parts(
        support_vectors: Matrix,
        alphas: Vec<f64>,
        kernel: KernelSpec,
        nu: f64,
        rho: f64,
    ) -> Result<Self> {
        let model = OneClassModel {
            kernel,
            nu,
            rho,
            n_train: support_vectors.rows(),
            alphas,
            support_vectors,
            tol: 0.0,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        let m = self.support_vectors.rows();
        if m == 0 || self.support_vectors.cols() == 0 {
            return Err(OcxError::Shape(
                "model needs at least one support vector of dimension >= 1".into(),
            ));
        }
        if self.alphas.len() != m {
            return Err(OcxError::Shape(format!(
                "{} coefficients for {m} support vectors",
                self.alphas.len()
            )));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(OcxError::Parameter(format!(
                "coefficients must be positive, found {a}"
            )));
        }
        let total: f64 = self.alphas.iter().sum();
        if (total - 1.0).abs() > 1e-8 {
            return Err(OcxError::Parameter(format!(
                "coefficients must sum to 1, sum is {total}"
            )));
        }
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(OcxError::Parameter(format!(
                "nu must lie in (0, 1], got {}",
                self.nu
            )));
        }
        if !self.rho.is_finite() {
            return Err(OcxError::Parameter("rho must be finite".into()));
        }
        Ok(())
    }

    /// Number of support vectors.
    pub fn m(&self) -> usize {
        self.alphas.len()
    }

    /// Input dimension.
    pub fn dim(&self) -> usize {
        self.support_vectors.cols()
    }

    pub(crate) fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(OcxError::Shape(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Squared distances from `x` to each support vector.
    pub(crate) fn sq_dists(&self, x: &[f64]) -> Vec<f64> {
        self.support_vectors
            .iter_rows()
            .map(|u| sq_dist(x, u))
            .collect()
    }

    pub(crate) fn g_unchecked(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter_rows()
            .zip(&self.alphas)
            .map(|(u, a)| a * self.kernel.eval_sq(sq_dist(x, u)))
            .sum()
    }

    /// `g(x) = Σ_j α_j k(‖x − u_j‖)`.
    pub fn discriminant(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.g_unchecked(x))
    }

    /// Inlier iff `g(x) ≥ ρ − tol`.
    pub fn decide(&self, x: &[f64]) -> Result<Decision> {
        let g = self.discriminant(x)?;
        Ok(if g >= self.rho - self.tol {
            Decision::Inlier
        } else {
            Decision::Outlier
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: OneClassModel = serde_json::from_str(s)?;
        model.validate()?;
        Ok(model)
    }
}

/// Solver knobs.
#[derive(Clone, Debug)]
pub struct TrainOptions {
    /// Stop once the maximal KKT violation drops to this value.
    pub tol: f64,
    /// Maximum number of pair updates.
    pub max_iter: u64,
    /// Memory budget of the kernel row cache, in MiB.
    pub cache_mb: usize,
    /// Record the dual objective after every update.
    pub record_objective: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            tol: 1e-6,
            max_iter: 10_000_000,
            cache_mb: 256,
            record_objective: false,
        }
    }
}

/// Solver diagnostics.
#[derive(Clone, Debug, Default)]
pub struct TrainReport {
    pub iterations: u64,
    pub kkt_residual: f64,
    pub objective: f64,
    pub objective_trace: Vec<f64>,
    pub n_free: usize,
    pub n_at_bound: usize,
    pub cache_hits: u64,
    pub cache_misses: u64,
}

/// Trains a ν-one-class SVM with default options apart from `tol` and `max_iter`.
pub fn train(
    data: &Matrix,
    kernel: KernelSpec,
    nu: f64,
    tol: f64,
    max_iter: u64,
) -> Result<OneClassModel> {
    let opts = TrainOptions {
        tol,
        max_iter,
        ..TrainOptions::default()
    };
    train_with_options(data, kernel, nu, &opts).map(|(m, _)| m)
}

struct Smo<'a> {
    data: &'a Matrix,
    kernel: KernelSpec,
    cache: RowCache,
}

impl Smo<'_> {
    fn row(&mut self, i: usize) -> std::rc::Rc<[f64]> {
        let data = self.data;
        let kernel = self.kernel;
        self.cache
            .get_or_insert_with(i, || kernel_row(data, kernel, i))
    }
}

fn kernel_row(data: &Matrix, kernel: KernelSpec, i: usize) -> Vec<f64> {
    let xi = data.row(i);
    let eval = |t: usize| kernel.eval_sq(sq_dist(xi, data.row(t)));
    if data.rows() >= 4096 {
        (0..data.rows()).into_par_iter().map(eval).collect()
    } else {
        (0..data.rows()).map(eval).collect()
    }
}

/// Trains and returns the model together with solver diagnostics.
pub fn train_with_options(
    data: &Matrix,
    kernel: KernelSpec,
    nu: f64,
    opts: &TrainOptions,
) -> Result<(OneClassModel, TrainReport)> {
    kernel.validate()?;
    let n = data.rows();
    if n < 2 {
        return Err(OcxError::Parameter(format!(
            "need at least 2 training rows, got {n}"
        )));
    }
    if data.cols() == 0 {
        return Err(OcxError::Shape("training rows have no features".into()));
    }
    if data.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(OcxError::Parameter(
            "training data contains non-finite values".into(),
        ));
    }
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(OcxError::Parameter(format!(
            "nu must lie in (0, 1], got {nu}"
        )));
    }
    if nu * (n as f64) < 1.0 {
        return Err(OcxError::Parameter(format!(
            "nu * n = {} < 1: the coefficient bound 1/(nu n) exceeds 1",
            nu * n as f64
        )));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(OcxError::Parameter(format!(
            "tol must be > 0, got {}",
            opts.tol
        )));
    }

    let upper = 1.0 / (nu * n as f64);
    let diag = kernel.at_zero();
    let cache_rows = (opts.cache_mb * (1 << 20) / (8 * n)).clamp(2, n);
    let mut smo = Smo {
        data,
        kernel,
        cache: RowCache::new(cache_rows),
    };

    // Uniform start: feasible for every ν and symmetric in the data.
    let mut alpha = vec![1.0 / n as f64; n];
    let mut grad: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = data.row(i);
            (0..n)
                .map(|t| kernel.eval_sq(sq_dist(xi, data.row(t))))
                .sum::<f64>()
                / n as f64
        })
        .collect();
    let mut objective = 0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * g).sum::<f64>();

    let mut report = TrainReport::default();
    if opts.record_objective {
        report.objective_trace.push(objective);
    }

    let mut iterations = 0u64;
    let residual = loop {
        // Maximal violating pair; strict comparisons keep the lowest index on ties.
        let mut up = usize::MAX;
        let mut low = usize::MAX;
        for t in 0..n {
            if alpha[t] < upper && (up == usize::MAX || grad[t] < grad[up]) {
                up = t;
            }
            if alpha[t] > 0.0 && (low == usize::MAX || grad[t] > grad[low]) {
                low = t;
            }
        }
        if up == usize::MAX || low == usize::MAX {
            // every coefficient pinned at a bound: nothing can move
            break 0.0;
        }
        let violation = grad[low] - grad[up];
        if violation <= opts.tol {
            break violation.max(0.0);
        }
        if iterations >= opts.max_iter {
            let best = finish_model(data, &alpha, &grad, kernel, nu, upper, opts.tol);
            return Err(OcxError::Convergence {
                iterations,
                residual: violation,
                best: Box::new(best),
            });
        }
        iterations += 1;

        let row_up = smo.row(up);
        let row_low = smo.row(low);
        let curvature = 2.0 * diag - 2.0 * row_up[low];
        let step_raw = violation / curvature.max(1e-12);
        let room_up = upper - alpha[up];
        let room_low = alpha[low];
        let step = step_raw.min(room_up).min(room_low);

        if step == room_up {
            alpha[up] = upper;
        } else {
            alpha[up] += step;
        }
        if step == room_low {
            alpha[low] = 0.0;
        } else {
            alpha[low] -= step;
        }
        for t in 0..n {
            grad[t] += step * (row_up[t] - row_low[t]);
        }
        objective += -step * violation + 0.5 * step * step * curvature;
        if opts.record_objective {
            report.objective_trace.push(objective);
        }
    };

    let model = finish_model(data, &alpha, &grad, kernel, nu, upper, opts.tol);
    report.iterations = iterations;
    report.kkt_residual = residual;
    report.objective = objective;
    report.n_at_bound = alpha.iter().filter(|&&a| a >= upper).count();
    report.n_free = alpha
        .iter()
        .filter(|&&a| a > ALPHA_PRUNE && a < upper)
        .count();
    (report.cache_hits, report.cache_misses) = smo.cache.stats();
    Ok((model, report))
}

/// Offset from the current iterate: mean gradient over free coefficients,
/// or the midpoint of the feasible interval when none is free.
fn offset(alpha: &[f64], grad: &[f64], upper: f64) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (&a, &g) in alpha.iter().zip(grad) {
        if a > 0.0 && a < upper {
            sum += g;
            count += 1;
        } else if a >= upper {
            lo = lo.max(g);
        } else {
            hi = hi.min(g);
        }
    }
    if count > 0 {
        sum / count as f64
    } else if lo.is_finite() && hi.is_finite() {
        0.5 * (lo + hi)
    } else if lo.is_finite() {
        lo
    } else {
        hi
    }
}

fn finish_model(
    data: &Matrix,
    alpha: &[f64],
    grad: &[f64],
    kernel: KernelSpec,
    nu: f64,
    upper: f64,
    tol: f64,
) -> OneClassModel {
    let rho = offset(alpha, grad, upper);
    let keep: Vec<usize> = (0..alpha.len())
        .filter(|&i| alpha[i] > ALPHA_PRUNE)
        .collect();
    let total: f64 = keep.iter().map(|&i| alpha[i]).sum();
    OneClassModel {
        kernel,
        nu,
        rho,
        alphas: keep.iter().map(|&i| alpha[i] / total).collect(),
        support_vectors: data.select_rows(&keep),
        n_train: data.rows(),
        tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn blob(n: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..2 * n)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        Matrix::new(n, 2, data).unwrap()
    }

    /// Brute-force minimiser of ½αᵀKα over a grid on the 1-simplex.
    fn grid_min_two(k: [[f64; 2]; 2], upper: f64) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for s in 0..=100_000 {
            let a0 = s as f64 / 100_000.0;
            let a1 = 1.0 - a0;
            if a0 > upper || a1 > upper {
                continue;
            }
            let obj = 0.5 * (a0 * a0 * k[0][0] + 2.0 * a0 * a1 * k[0][1] + a1 * a1 * k[1][1]);
            if obj < best.0 {
                best = (obj, a0);
            }
        }
        best.1
    }

    #[test]
    fn symmetric_pair() {
        let data = Matrix::from_rows(&[[-1.0, 0.0], [1.0, 0.0]]).unwrap();
        let kernel = KernelSpec::gaussian(1.0);
        let k01 = kernel.eval(2.0);
        let oracle = grid_min_two([[1.0, k01], [k01, 1.0]], 0.5);
        assert!((oracle - 0.5).abs() < 1e-9);
        let model = train(&data, kernel, 1.0, 1e-10, 1000).unwrap();
        assert_eq!(model.m(), 2);
        for a in &model.alphas {
            assert!((a - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn unconstrained_pair_matches_grid() {
        // Bound 1/(νn) = 1 leaves the box inactive.
        let data = Matrix::from_rows(&[[0.0], [0.3]]).unwrap();
        let kernel = KernelSpec::t_student(2.0, 1.0);
        let k01 = kernel.eval(0.3);
        let oracle = grid_min_two([[1.0, k01], [k01, 1.0]], 1.0);
        let model = train(&data, kernel, 0.5, 1e-10, 1000).unwrap();
        assert!((model.alphas[0] - oracle).abs() < 1e-5);
    }

    #[test]
    fn duplicated_point_gives_uniform_alphas() {
        let data = Matrix::from_rows(&[[0.5, -2.0]; 6]).unwrap();
        let model = train(&data, KernelSpec::gaussian(1.0), 1.0 / 6.0, 1e-8, 1000).unwrap();
        assert_eq!(model.m(), 6);
        for a in &model.alphas {
            assert!((a - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn parameter_errors() {
        let data = blob(10, 1);
        let k = KernelSpec::gaussian(1.0);
        assert!(matches!(
            train(&data, k, 0.05, 1e-6, 100),
            Err(OcxError::Parameter(_))
        ));
        assert!(matches!(
            train(&data, k, 0.0, 1e-6, 100),
            Err(OcxError::Parameter(_))
        ));
        assert!(matches!(
            train(&data, k, 1.5, 1e-6, 100),
            Err(OcxError::Parameter(_))
        ));
        assert!(matches!(
            train(&data, k, 0.5, 0.0, 100),
            Err(OcxError::Parameter(_))
        ));
        let one = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(matches!(
            train(&one, k, 1.0, 1e-6, 100),
            Err(OcxError::Parameter(_))
        ));
    }

    #[test]
    fn convergence_error_carries_iterate() {
        let data = blob(200, 3);
        let err = train(&data, KernelSpec::gaussian(1.0), 0.1, 1e-12, 3).unwrap_err();
        match err {
            OcxError::Convergence {
                iterations, best, ..
            } => {
                assert_eq!(iterations, 3);
                let s: f64 = best.alphas.iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn feasibility_and_monotone_objective() {
        let data = blob(300, 7);
        let nu = 0.2;
        let opts = TrainOptions {
            record_objective: true,
            ..TrainOptions::default()
        };
        let (model, report) =
            train_with_options(&data, KernelSpec::gaussian(1.0), nu, &opts).unwrap();
        let s: f64 = model.alphas.iter().sum();
        assert!((s - 1.0).abs() <= 1e-10);
        let upper = 1.0 / (nu * 300.0);
        assert!(model.alphas.iter().all(|&a| a > 0.0 && a <= upper + 1e-12));
        assert!(report.kkt_residual <= opts.tol);
        for w in report.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn kkt_conditions_hold_on_recomputed_gradient() {
        let data = blob(150, 11);
        let nu = 0.1;
        let tol = 1e-8;
        let kernel = KernelSpec::Exponential { q: 1.0, sigma: 1.5 };
        let model = train(&data, kernel, nu, tol, 10_000_000).unwrap();
        let upper = 1.0 / (nu * 150.0);
        // g at every training row, recomputed from the stored model
        let g: Vec<f64> = data
            .iter_rows()
            .map(|x| model.discriminant(x).unwrap())
            .collect();
        let sv_rows: Vec<usize> = (0..150)
            .filter(|&i| model.support_vectors.iter_rows().any(|u| u == data.row(i)))
            .collect();
        for (i, gi) in g.iter().enumerate() {
            if !sv_rows.contains(&i) {
                assert!(*gi >= model.rho - 2.0 * tol, "non-SV below rho");
            }
        }
        for (j, &a) in model.alphas.iter().enumerate() {
            let gj = model.discriminant(model.support_vectors.row(j)).unwrap();
            if a < upper * (1.0 - 1e-9) {
                assert!(
                    (gj - model.rho).abs() <= 2.0 * tol,
                    "free SV off rho by {}",
                    gj - model.rho
                );
            } else {
                assert!(gj <= model.rho + 2.0 * tol);
            }
        }
    }

    #[test]
    fn free_support_vectors_are_inliers() {
        let data = blob(200, 5);
        let nu = 0.1;
        let model = train(&data, KernelSpec::gaussian(1.0), nu, 1e-6, 10_000_000).unwrap();
        let upper = 1.0 / (nu * 200.0);
        let mut free = 0;
        for (j, &a) in model.alphas.iter().enumerate() {
            if a < upper * (1.0 - 1e-9) {
                free += 1;
                assert_eq!(
                    model.decide(model.support_vectors.row(j)).unwrap(),
                    Decision::Inlier
                );
            }
        }
        assert!(free > 0);
        let far = [1e3, -1e3];
        assert_eq!(model.decide(&far).unwrap(), Decision::Outlier);
    }

    #[test]
    fn discriminant_simple_cases() {
        let m = OneClassModel::from_parts(
            Matrix::from_rows(&[[1.0, 2.0]]).unwrap(),
            vec![1.0],
            KernelSpec::gaussian(0.7),
            0.5,
            0.3,
        )
        .unwrap();
        assert_eq!(m.discriminant(&[1.0, 2.0]).unwrap(), 1.0);
        assert!(matches!(m.discriminant(&[1.0]), Err(OcxError::Shape(_))));

        let k = KernelSpec::t_student(2.0, 0.5);
        let m2 = OneClassModel::from_parts(
            Matrix::from_rows(&[[0.0], [0.0]]).unwrap(),
            vec![0.5, 0.5],
            k,
            0.5,
            0.3,
        )
        .unwrap();
        assert!((m2.discriminant(&[0.0]).unwrap() - k.at_zero()).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let data = blob(60, 9);
        let model = train(&data, KernelSpec::t_student(1.0, 1.0), 0.3, 1e-6, 1_000_000).unwrap();
        let json = model.to_json().unwrap();
        let back = OneClassModel::from_json(&json).unwrap();
        assert_eq!(model, back);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["kernel"]["family"], "tstudent");
        assert!(v["support_vectors"][0].is_array());
    }
}
