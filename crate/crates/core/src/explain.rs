//! Deep Taylor decomposition of one-class SVM scores.
//!
//! Inlierness is decomposed onto support vectors (`R_j = α_j k(‖x − u_j‖)`).
//! Outlierness is decomposed onto support vectors from the min-pooling
//! network, then the decomposable part `Δ_j` of each support vector's
//! relevance is spread over input variables along the segment towards
//! `u_j`; integrated gradients of `C_j‖x − u_j‖^q + D_j` on that segment
//! have the closed form `[(x − u_j)/‖x − u_j‖]² Δ_j`.

use crate::error::{OcxError, Result};
use crate::kernels::{sq_dist, KernelSpec};
use crate::measures::{detection_activations, pow_dists, G_FLOOR};
use crate::svm::OneClassModel;

/// Per-family factors of the support vector relevance.
#[derive(Clone, Debug, PartialEq)]
pub enum SvFactors {
    /// Inlier explanation: no factors.
    Inlier,
    /// `c_j`, with `R_j = h_j c_j`.
    TStudent { c: Vec<f64> },
    /// Soft-min weights `p_j` and offsets `ε_j`, with `R_j = (h_j + ε_j) p_j`.
    Exponential { p: Vec<f64>, eps: Vec<f64> },
}

/// Relevance of each support vector for one input.
#[derive(Clone, Debug, PartialEq)]
pub struct SvRelevance {
    pub r: Vec<f64>,
    /// Decomposable part `Δ_j` of `r_j`; zeros for inlier explanations.
    pub delta: Vec<f64>,
    pub o: f64,
    pub aux: SvFactors,
}

/// Relevance per input variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub r: Vec<f64>,
    pub total: f64,
    /// `(height, width, channels)` when the vector is an image.
    pub shape: Option<(usize, usize, usize)>,
}

impl Heatmap {
    pub fn new(r: Vec<f64>) -> Self {
        let total = r.iter().sum();
        Heatmap {
            r,
            total,
            shape: None,
        }
    }

    pub fn with_shape(mut self, shape: (usize, usize, usize)) -> Result<Self> {
        if shape.0 * shape.1 * shape.2 != self.r.len() {
            return Err(OcxError::Shape(format!(
                "{}x{}x{} grid does not hold {} values",
                shape.0,
                shape.1,
                shape.2,
                self.r.len()
            )));
        }
        self.shape = Some(shape);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

/// `R_j = α_j k(‖x − u_j‖)`; sums to `g(x)`.
pub fn explain_inlier(model: &OneClassModel, x: &[f64]) -> Result<SvRelevance> {
    model.check_dim(x)?;
    let r: Vec<f64> = model
        .sq_dists(x)
        .into_iter()
        .zip(&model.alphas)
        .map(|(s, a)| a * model.kernel.eval_sq(s))
        .collect();
    let o = r.iter().sum();
    Ok(SvRelevance {
        delta: vec![0.0; r.len()],
        r,
        o,
        aux: SvFactors::Inlier,
    })
}

/// `c_j = (1/m)·H((h_j'/h_j)_j')²`, evaluated as `m / (h_j Σ_j' 1/h_j')²`.
pub fn student_factors(h: &[f64]) -> Vec<f64> {
    let m = h.len() as f64;
    let inv_sum: f64 = h.iter().map(|v| 1.0 / v).sum();
    h.iter()
        .map(|v| {
            let s = v * inv_sum;
            m / (s * s)
        })
        .collect()
}

/// Soft-min weights `p_j` and offsets `ε_j = −LSE(−(h_j' − h_j)_j')`.
pub fn exponential_factors(h: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let min = h.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = h.iter().map(|v| (min - v).exp()).collect();
    let total: f64 = w.iter().sum();
    let log_total = total.ln();
    let p = w.iter().map(|v| v / total).collect();
    // ε_j ≤ 0 always; for the minimising j it lies in [−log m, 0].
    let eps = h.iter().map(|v| ((min - v) - log_total).min(0.0)).collect();
    (p, eps)
}

fn floored_output(kernel: &KernelSpec, m: usize, o: f64) -> f64 {
    match kernel {
        KernelSpec::Exponential { .. } => o.min(-G_FLOOR.ln()),
        KernelSpec::TStudent { .. } => o.min(m as f64 / G_FLOOR),
    }
}

/// Support vector relevance of the outlierness, with the decomposable parts.
pub fn sv_relevance(model: &OneClassModel, x: &[f64]) -> Result<SvRelevance> {
    let act = detection_activations(model, x)?;
    let d = pow_dists(model, x);
    let o = act.o;
    let o_floor = floored_output(&model.kernel, model.m(), o);
    let (r, delta, aux) = match model.kernel {
        KernelSpec::TStudent { a, .. } => {
            let c = student_factors(&act.h);
            let r: Vec<f64> = act.h.iter().zip(&c).map(|(h, c)| h * c).collect();
            let inv_sum: f64 = act.h.iter().map(|v| 1.0 / v).sum();
            let delta = act
                .h
                .iter()
                .zip(&d)
                .map(|(h, dj)| (1.0 / h) / inv_sum * (dj / (a + dj)) * o_floor)
                .collect();
            (r, delta, SvFactors::TStudent { c })
        }
        KernelSpec::Exponential { q, sigma } => {
            let (p, eps) = exponential_factors(&act.h);
            let r = act
                .h
                .iter()
                .zip(&eps)
                .zip(&p)
                .map(|((h, e), p)| (h + e) * p)
                .collect();
            let scale = q * sigma.powf(q);
            let delta = p
                .iter()
                .zip(&d)
                .map(|(p, dj)| p * o_floor.min(dj / scale))
                .collect();
            (r, delta, SvFactors::Exponential { p, eps })
        }
    };
    Ok(SvRelevance { r, delta, o, aux })
}

/// The decomposable parts `Δ_j = R_j − max(0, D_j)`.
pub fn decomposable_relevance(model: &OneClassModel, x: &[f64]) -> Result<Vec<f64>> {
    Ok(sv_relevance(model, x)?.delta)
}

/// Spreads `Δ` over input variables by the squared unit difference vectors.
pub(crate) fn redistribute(model: &OneClassModel, x: &[f64], delta: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; x.len()];
    for (u, &dj) in model.support_vectors.iter_rows().zip(delta) {
        let norm = sq_dist(x, u);
        if norm == 0.0 || dj == 0.0 {
            continue;
        }
        let w = dj / norm;
        for ((ri, xi), ui) in r.iter_mut().zip(x).zip(u) {
            let z = xi - ui;
            *ri += z * z * w;
        }
    }
    r
}

/// Input-variable relevance of the outlierness.
pub fn input_relevance(model: &OneClassModel, x: &[f64]) -> Result<Heatmap> {
    let sv = sv_relevance(model, x)?;
    Ok(Heatmap::new(redistribute(model, x, &sv.delta)))
}

/// Distance to a support vector below which the gradient counts as singular
/// for `q < 2`.
pub const SINGULAR_RADIUS: f64 = 1e-12;

/// Analytic gradient of the outlierness with respect to `x`.
pub fn sa_gradient(model: &OneClassModel, x: &[f64]) -> Result<Vec<f64>> {
    let act = detection_activations(model, x)?;
    let q = model.kernel.q();
    let sq = model.sq_dists(x);
    if q < 2.0 {
        if let Some((index, s)) = sq
            .iter()
            .enumerate()
            .find(|(_, s)| s.sqrt() < SINGULAR_RADIUS)
        {
            return Err(OcxError::SingularPoint {
                index,
                distance: s.sqrt(),
            });
        }
    }
    // ∂o/∂h_j times the radial factor of ∂h_j/∂x = factor_j · (x − u_j)
    let weights: Vec<f64> = match model.kernel {
        KernelSpec::TStudent { .. } => {
            let c = student_factors(&act.h);
            c.iter()
                .zip(&model.alphas)
                .zip(&sq)
                .map(|((c, a), s)| c * q * radial(*s, q) / a)
                .collect()
        }
        KernelSpec::Exponential { sigma, .. } => {
            let (p, _) = exponential_factors(&act.h);
            let scale = sigma.powf(q);
            p.iter()
                .zip(&sq)
                .map(|(p, s)| p * radial(*s, q) / scale)
                .collect()
        }
    };
    let mut grad = vec![0.0; x.len()];
    for (u, w) in model.support_vectors.iter_rows().zip(&weights) {
        for ((gi, xi), ui) in grad.iter_mut().zip(x).zip(u) {
            *gi += w * (xi - ui);
        }
    }
    Ok(grad)
}

/// `‖z‖^(q−2)` from `‖z‖²`.
fn radial(sq: f64, q: f64) -> f64 {
    if q == 2.0 {
        1.0
    } else if q == 4.0 {
        sq
    } else if sq == 0.0 {
        0.0
    } else {
        sq.powf(0.5 * (q - 2.0))
    }
}
