//! Pixel flipping in the feature space of component-wise differences to
//! the support vectors, and the two-panel validation helpers.
//!
//! For an input `x` the feature matrix is `Ψ[i, j] = x_i − u_j[i]`
//! (`d × m`), and the model is re-evaluated as `g(Ψ) = Σ_j α_j k(‖Ψ[:, j]‖)`.
//! Flipping variable `i` zeroes row `i` of `Ψ`; once every row is zeroed the
//! pattern is a perfect inlier.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{OcxError, Result};
use crate::matrix::Matrix;
use crate::measures::outlierness_from_g;
use crate::svm::OneClassModel;
use crate::synth::PanelGenerator;

/// Outlierness after `0..=d` flips.
#[derive(Clone, Debug, PartialEq)]
pub struct FlipCurve {
    pub scores: Vec<f64>,
    pub order: Vec<usize>,
    pub method: String,
}

fn check_permutation(order: &[usize], d: usize) -> Result<()> {
    if order.len() != d {
        return Err(OcxError::Shape(format!(
            "order has {} entries for {d} variables",
            order.len()
        )));
    }
    let mut seen = vec![false; d];
    for &i in order {
        if i >= d || std::mem::replace(&mut seen[i], true) {
            return Err(OcxError::Parameter(format!(
                "order is not a permutation of 0..{d}"
            )));
        }
    }
    Ok(())
}

fn score(model: &OneClassModel, col_sq: &[f64]) -> f64 {
    let g = col_sq
        .iter()
        .zip(&model.alphas)
        .map(|(s, a)| a * model.kernel.eval_sq(*s))
        .sum();
    outlierness_from_g(&model.kernel, model.m(), g)
}

/// Flips variables in `order`, recording the outlierness after each step.
pub fn flip_curve(model: &OneClassModel, x: &[f64], order: &[usize]) -> Result<FlipCurve> {
    model.check_dim(x)?;
    let d = x.len();
    check_permutation(order, d)?;
    let m = model.m();
    let mut col_sq = vec![0.0; m];
    for (j, u) in model.support_vectors.iter_rows().enumerate() {
        col_sq[j] = x.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum();
    }
    let mut scores = Vec::with_capacity(d + 1);
    scores.push(score(model, &col_sq));
    for (k, &i) in order.iter().enumerate() {
        if k + 1 == d {
            col_sq.iter_mut().for_each(|s| *s = 0.0);
        } else {
            for (j, u) in model.support_vectors.iter_rows().enumerate() {
                let z = x[i] - u[i];
                col_sq[j] = (col_sq[j] - z * z).max(0.0);
            }
        }
        scores.push(score(model, &col_sq));
    }
    Ok(FlipCurve {
        scores,
        order: order.to_vec(),
        method: String::new(),
    })
}

impl FlipCurve {
    pub fn with_method(mut self, method: impl Into<String>) -> Self {
        self.method = method.into();
        self
    }

    /// `(k, fraction flipped, score)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let d = (self.scores.len() - 1).max(1) as f64;
        self.scores
            .iter()
            .enumerate()
            .map(move |(k, &s)| (k, k as f64 / d, s))
    }
}

/// Trapezoidal area under score versus fraction flipped, divided by the
/// initial score.
pub fn flip_auc(curve: &FlipCurve) -> Result<f64> {
    let s = &curve.scores;
    if s.len() < 2 {
        return Err(OcxError::Shape(
            "flip curve needs at least two points".into(),
        ));
    }
    if s[0] == 0.0 {
        return Err(OcxError::UndefinedAuc);
    }
    let d = (s.len() - 1) as f64;
    let area: f64 = s.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum::<f64>() / d;
    Ok(area / s[0])
}

/// Indices by decreasing relevance; equal values keep index order.
pub fn order_from_heatmap(relevance: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..relevance.len()).collect();
    idx.sort_by(|&a, &b| relevance[b].total_cmp(&relevance[a]));
    idx
}

/// Kind of a two-panel sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PanelLabel {
    /// Inlier class on the left, blank right panel.
    Inlier,
    /// Inlier class on the left, another class on the right.
    TypeI,
    /// Other classes on both sides.
    TypeII,
}

impl PanelLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PanelLabel::Inlier => "inlier",
            PanelLabel::TypeI => "type1",
            PanelLabel::TypeII => "type2",
        }
    }
}

/// Horizontally concatenated two-panel samples.
#[derive(Clone, Debug)]
pub struct TwoPanelData {
    pub samples: Matrix,
    pub labels: Vec<PanelLabel>,
    /// Index of the first right-panel variable.
    pub split: usize,
}

impl TwoPanelData {
    pub fn of_label(&self, label: PanelLabel) -> Matrix {
        let idx: Vec<usize> = (0..self.labels.len())
            .filter(|&i| self.labels[i] == label)
            .collect();
        self.samples.select_rows(&idx)
    }
}

/// `n` samples of each kind: inliers `(A, blank)`, type I `(A, B)` and
/// type II `(B, B′)`, in that order.
pub fn gen_two_panel(
    n: usize,
    class_a: &dyn PanelGenerator,
    class_b: &dyn PanelGenerator,
    seed: u64,
) -> Result<TwoPanelData> {
    let w = class_a.width();
    if class_b.width() != w {
        return Err(OcxError::Shape(format!(
            "panel widths differ: {} vs {}",
            w,
            class_b.width()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(3 * n * 2 * w);
    let mut labels = Vec::with_capacity(3 * n);
    for label in [PanelLabel::Inlier, PanelLabel::TypeI, PanelLabel::TypeII] {
        for _ in 0..n {
            let (left, right) = match label {
                PanelLabel::Inlier => (class_a.sample(&mut rng), vec![0.0; w]),
                PanelLabel::TypeI => (class_a.sample(&mut rng), class_b.sample(&mut rng)),
                PanelLabel::TypeII => (class_b.sample(&mut rng), class_b.sample(&mut rng)),
            };
            data.extend(left);
            data.extend(right);
            labels.push(label);
        }
    }
    Ok(TwoPanelData {
        samples: Matrix::new(3 * n, 2 * w, data)?,
        labels,
        split: w,
    })
}

/// `(Σ_{i < split} R_i, Σ_{i ≥ split} R_i)`.
pub fn panel_shares(relevance: &[f64], split: usize) -> Result<(f64, f64)> {
    if split > relevance.len() {
        return Err(OcxError::Parameter(format!(
            "split {split} beyond heatmap of length {}",
            relevance.len()
        )));
    }
    let (l, r) = relevance.split_at(split);
    Ok((l.iter().sum(), r.iter().sum()))
}
