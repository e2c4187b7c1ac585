//! One-class SVM outlier detection with explanations.
//!
//! A ν-one-class SVM with an exponential or t-Student kernel is rewritten as
//! a two-layer network (distances to support vectors, then soft
//! min-pooling). Outlier scores are explained by deep Taylor decomposition:
//! first onto support vectors, then onto input variables with a closed-form
//! integrated-gradients rule. Baseline attributions and a feature-space
//! pixel-flipping benchmark are included for comparison.
//!
//! ```
//! use ocx::{input_relevance, train, KernelSpec, Matrix};
//!
//! let data = Matrix::from_rows(&[[0.0, 0.0], [0.1, 0.0], [0.0, 0.2], [0.2, 0.1]]).unwrap();
//! let model = train(&data, KernelSpec::gaussian(0.5), 0.5, 1e-8, 100_000).unwrap();
//! let heatmap = input_relevance(&model, &[3.0, 0.0]).unwrap();
//! assert!(heatmap.r[0] > heatmap.r[1]);
//! ```

pub mod baselines;
mod cache;
pub mod cli;
pub mod error;
pub mod explain;
pub mod flip;
pub mod image;
pub mod io;
pub mod kernels;
pub mod matrix;
pub mod measures;
pub mod patch;
pub mod svm;
pub mod synth;

pub use baselines::{
    ev_map, mvn_decompose, mvn_fit, nn_map, random_order, sensitivity, sobel_map, MvnModel,
};
pub use error::{OcxError, Result};
pub use explain::{
    decomposable_relevance, explain_inlier, input_relevance, sa_gradient, sv_relevance, Heatmap,
    SvFactors, SvRelevance,
};
pub use flip::{flip_auc, flip_curve, gen_two_panel, order_from_heatmap, panel_shares, FlipCurve};
pub use image::Image;
pub use kernels::{
    bandwidth_heuristic, eval_kernel, pow_distance, KernelChoice, KernelFamily, KernelSpec,
};
pub use matrix::Matrix;
pub use measures::{
    detection_activations, harmonic_mean, inlierness, neg_lse_pool, outlierness,
    outlierness_via_network, Activations,
};
pub use patch::{
    extract_patches, fit_image_model, image_outlierness, image_relevance, ImageHeatmap, PatchConfig,
};
pub use svm::{train, train_with_options, Decision, OneClassModel, TrainOptions, TrainReport};
