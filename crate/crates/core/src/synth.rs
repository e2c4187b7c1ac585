//! Synthetic data generators for tests and benchmarks.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::matrix::Matrix;

/// Source of one panel of a two-panel sample.
pub trait PanelGenerator {
    fn width(&self) -> usize;
    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64>;
}

/// All-zero panel.
#[derive(Clone, Debug)]
pub struct Blank {
    pub width: usize,
}

impl PanelGenerator for Blank {
    fn width(&self) -> usize {
        self.width
    }

    fn sample(&self, _rng: &mut ChaCha8Rng) -> Vec<f64> {
        vec![0.0; self.width]
    }
}

/// Isotropic Gaussian around `center`.
#[derive(Clone, Debug)]
pub struct GaussianBlob {
    pub center: Vec<f64>,
    pub std: f64,
}

impl GaussianBlob {
    pub fn new(center: Vec<f64>, std: f64) -> Self {
        GaussianBlob { center, std }
    }
}

impl PanelGenerator for GaussianBlob {
    fn width(&self) -> usize {
        self.center.len()
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.center
            .iter()
            .map(|c| {
                let e: f64 = StandardNormal.sample(rng);
                c + self.std * e
            })
            .collect::<Vec<f64>>()
    }
}

/// Picks one of several blobs uniformly, then samples it.
#[derive(Clone, Debug)]
pub struct BlobMixture {
    pub blobs: Vec<GaussianBlob>,
}

impl PanelGenerator for BlobMixture {
    fn width(&self) -> usize {
        self.blobs[0].width()
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let k = rng.random_range(0..self.blobs.len());
        self.blobs[k].sample(rng)
    }
}

/// Axis-aligned classes for two-panel experiments: class `c` has mean
/// `scale` on its own block of coordinates and zero elsewhere.
pub fn block_classes(n_classes: usize, width: usize, scale: f64, std: f64) -> Vec<GaussianBlob> {
    let block = (width / n_classes).max(1);
    (0..n_classes)
        .map(|c| {
            let center = (0..width)
                .map(|i| if i / block == c { scale } else { 0.0 })
                .collect();
            GaussianBlob::new(center, std)
        })
        .collect()
}

/// `n × d` standard normal sample.
pub fn gaussian_blob(n: usize, d: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * d)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    Matrix::new(n, d, data).expect("n*d values")
}

/// Multi-modal data on a 2-D latent space linearly embedded in `dim`
/// dimensions, plus outliers placed between modes and optionally displaced
/// on a few coordinates.
#[derive(Clone, Debug)]
pub struct PlantedOutliers {
    pub train: Matrix,
    pub outliers: Matrix,
    /// Displaced coordinates of each outlier.
    pub planted: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct PlantedConfig {
    pub n_train: usize,
    pub n_outliers: usize,
    pub dim: usize,
    pub modes: usize,
    /// Isotropic noise added after the embedding.
    pub noise: f64,
    /// Number of displaced coordinates per outlier.
    pub displaced: usize,
    /// Displacement magnitude.
    pub shift: f64,
    /// Fraction of outliers placed halfway between inliers of two
    /// different modes before displacement.
    pub between_modes: f64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            n_train: 300,
            n_outliers: 20,
            dim: 20,
            modes: 4,
            noise: 0.1,
            displaced: 0,
            shift: 0.0,
            between_modes: 1.0,
        }
    }
}

pub fn planted_outliers(cfg: &PlantedConfig, seed: u64) -> PlantedOutliers {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    let embed: Vec<[f64; 2]> = (0..cfg.dim)
        .map(|_| {
            [
                normal(&mut rng) / 2f64.sqrt(),
                normal(&mut rng) / 2f64.sqrt(),
            ]
        })
        .collect();
    let centers: Vec<[f64; 2]> = (0..cfg.modes)
        .map(|_| [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
        .collect();
    let draw_mode = |rng: &mut ChaCha8Rng, mode: usize| -> Vec<f64> {
        let c = centers[mode];
        let z = [c[0] + 0.3 * normal(rng), c[1] + 0.3 * normal(rng)];
        embed
            .iter()
            .map(|w| w[0] * z[0] + w[1] * z[1] + cfg.noise * normal(rng))
            .collect()
    };
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mode = rng.random_range(0..cfg.modes);
        draw_mode(rng, mode)
    };
    let mut train = Vec::with_capacity(cfg.n_train * cfg.dim);
    for _ in 0..cfg.n_train {
        train.extend(draw(&mut rng));
    }
    let mut outliers = Vec::with_capacity(cfg.n_outliers * cfg.dim);
    let mut planted = Vec::with_capacity(cfg.n_outliers);
    for _ in 0..cfg.n_outliers {
        let mut x = if cfg.modes > 1 && rng.random_bool(cfg.between_modes) {
            let a = rng.random_range(0..cfg.modes);
            let b = (a + rng.random_range(1..cfg.modes)) % cfg.modes;
            let (xa, xb) = (draw_mode(&mut rng, a), draw_mode(&mut rng, b));
            xa.iter().zip(&xb).map(|(u, v)| 0.5 * (u + v)).collect()
        } else {
            draw(&mut rng)
        };
        let mut idx = sample(&mut rng, cfg.dim, cfg.displaced.min(cfg.dim)).into_vec();
        idx.sort_unstable();
        for &i in &idx {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            x[i] += sign * cfg.shift;
        }
        outliers.extend(x);
        planted.push(idx);
    }
    PlantedOutliers {
        train: Matrix::new(cfg.n_train, cfg.dim, train).expect("train shape"),
        outliers: Matrix::new(cfg.n_outliers, cfg.dim, outliers).expect("outlier shape"),
        planted,
    }
}
