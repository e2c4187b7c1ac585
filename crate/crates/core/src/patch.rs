//! Patch-based models for images: one one-class SVM shared by all patches,
//! image outlierness as the sum of patch outlierness, and pixel relevance
//! accumulated from per-patch explanations.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{OcxError, Result};
use crate::explain::input_relevance;
use crate::image::Image;
use crate::kernels::KernelChoice;
use crate::matrix::Matrix;
use crate::measures::outlierness;
use crate::svm::{train_with_options, OneClassModel, TrainOptions};

/// Patch tiling and sampling settings.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchConfig {
    /// Side length in pixels.
    pub patch: usize,
    pub stride: usize,
    /// Maximum number of training patches.
    pub subsample: usize,
    pub seed: u64,
}

impl Default for PatchConfig {
    fn default() -> Self {
        PatchConfig {
            patch: 7,
            stride: 1,
            subsample: 30_000,
            seed: 0,
        }
    }
}

impl PatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch == 0 || self.stride == 0 || self.subsample == 0 {
            return Err(OcxError::Parameter(
                "patch size, stride and subsample must all be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Flattened patches with their top-left positions.
#[derive(Clone, Debug)]
pub struct Patches {
    pub positions: Vec<(usize, usize)>,
    pub vectors: Matrix,
}

/// All stride-spaced `p × p` windows in row-major order, flattened
/// channel-last.
pub fn extract_patches(image: &Image, cfg: &PatchConfig) -> Result<Patches> {
    cfg.validate()?;
    let p = cfg.patch;
    if image.height < p || image.width < p {
        return Err(OcxError::Shape(format!(
            "{}x{} image is smaller than a {p}x{p} patch",
            image.height, image.width
        )));
    }
    let c = image.channels;
    let mut positions = Vec::new();
    let mut data = Vec::new();
    for top in (0..=image.height - p).step_by(cfg.stride) {
        for left in (0..=image.width - p).step_by(cfg.stride) {
            positions.push((top, left));
            for r in top..top + p {
                let start = image.index(r, left, 0);
                data.extend_from_slice(&image.data[start..start + p * c]);
            }
        }
    }
    let vectors = Matrix::new(positions.len(), p * p * c, data)?;
    Ok(Patches { positions, vectors })
}

/// Trains a one-class SVM on (a seeded subsample of) the patches of `images`.
pub fn fit_image_model(
    images: &[Image],
    cfg: &PatchConfig,
    kernel: KernelChoice,
    nu: f64,
    opts: &TrainOptions,
) -> Result<OneClassModel> {
    cfg.validate()?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for img in images {
        let patches = extract_patches(img, cfg)?;
        rows.extend(patches.vectors.iter_rows().map(<[f64]>::to_vec));
    }
    if rows.len() < 2 {
        return Err(OcxError::Parameter(format!(
            "need at least 2 patches, got {}",
            rows.len()
        )));
    }
    let all = Matrix::from_rows(&rows)?;
    let data = if all.rows() > cfg.subsample {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut idx = sample(&mut rng, all.rows(), cfg.subsample).into_vec();
        idx.sort_unstable();
        all.select_rows(&idx)
    } else {
        all
    };
    let spec = kernel.resolve(&data)?;
    train_with_options(&data, spec, nu, opts).map(|(m, _)| m)
}

/// `O = Σ_t o(patch_t)`.
pub fn image_outlierness(model: &OneClassModel, image: &Image, cfg: &PatchConfig) -> Result<f64> {
    let patches = extract_patches(image, cfg)?;
    model.check_dim(patches.vectors.row(0))?;
    let scores: Vec<f64> = (0..patches.vectors.rows())
        .into_par_iter()
        .map(|t| outlierness(model, patches.vectors.row(t)))
        .collect::<Result<_>>()?;
    Ok(scores.iter().sum())
}

/// Pixel-level relevance grid of an image.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageHeatmap {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// `height × width × channels`, channel-last.
    pub grid: Vec<f64>,
    /// Sum of the grid.
    pub total: f64,
    /// Image outlierness `O`.
    pub outlierness: f64,
}

/// Explains `O` on pixels: each patch's outlierness is explained on its
/// own pixels and the patch maps are summed where patches overlap.
pub fn image_relevance(
    model: &OneClassModel,
    image: &Image,
    cfg: &PatchConfig,
) -> Result<ImageHeatmap> {
    let patches = extract_patches(image, cfg)?;
    model.check_dim(patches.vectors.row(0))?;
    let per_patch: Vec<(f64, Vec<f64>)> = (0..patches.vectors.rows())
        .into_par_iter()
        .map(|t| {
            let x = patches.vectors.row(t);
            Ok((outlierness(model, x)?, input_relevance(model, x)?.r))
        })
        .collect::<Result<_>>()?;

    let (p, c) = (cfg.patch, image.channels);
    let mut grid = vec![0.0; image.data.len()];
    let mut total_o = 0.0;
    // patch order, so the reduction is deterministic
    for (&(top, left), (o, rel)) in patches.positions.iter().zip(&per_patch) {
        total_o += o;
        for r in 0..p {
            let dst = image.index(top + r, left, 0);
            for (g, v) in grid[dst..dst + p * c]
                .iter_mut()
                .zip(&rel[r * p * c..(r + 1) * p * c])
            {
                *g += v;
            }
        }
    }
    Ok(ImageHeatmap {
        height: image.height,
        width: image.width,
        channels: c,
        total: grid.iter().sum(),
        grid,
        outlierness: total_o,
    })
}
