//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for usage, validation, parse and I/O
//! errors, 3 for numerical failures (non-convergence, singular points).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baselines::{
    ev_map, mvn_decompose, mvn_fit, nn_map, random_order, sensitivity, sobel_map,
};
use crate::error::OcxError;
use crate::explain::{decomposable_relevance, explain_inlier, input_relevance};
use crate::flip::{
    flip_auc, flip_curve, gen_two_panel, order_from_heatmap, panel_shares, PanelLabel,
};
use crate::image::Image;
use crate::io::{
    atomic_write, fmt_f64, load_model, read_csv_matrix, save_model, summary_csv_string,
    write_csv_matrix, write_heatmap_csv,
};
use crate::kernels::{KernelChoice, KernelSpec};
use crate::matrix::Matrix;
use crate::measures::{inlierness, outlierness};
use crate::patch::{fit_image_model, image_relevance, PatchConfig};
use crate::svm::{train_with_options, OneClassModel, TrainOptions};
use crate::synth::{block_classes, BlobMixture};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<OcxError> for CliError {
    fn from(e: OcxError) -> Self {
        CliError {
            code: if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::usage(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "ocx", version, about = "Explainable one-class SVMs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a model on CSV rows.
    Fit(FitArgs),
    /// Explain one CSV row.
    Explain(ExplainArgs),
    /// Train a model on image patches.
    ImageFit(ImageFitArgs),
    /// Explain an image's outlierness on its pixels.
    ImageExplain(ImageExplainArgs),
    /// Pixel-flipping evaluation of one or more explanation methods.
    Flip(FlipArgs),
    /// Two-panel synthetic validation of DTD against the MVN baseline.
    BenchTwoPanel(BenchArgs),
    /// Render a heatmap CSV as an 8-bit PGM.
    Render(RenderArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelName {
    Gaussian,
    Laplacian,
    Exponential,
    Tstudent,
}

#[derive(Args, Debug, Clone)]
pub struct KernelArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    pub kernel: KernelName,
    /// Distance power; fixed to 2 for gaussian and 1 for laplacian.
    #[arg(long)]
    pub q: Option<f64>,
    /// Bandwidth of the exponential family, or `auto`.
    #[arg(long)]
    pub sigma: Option<String>,
    /// Quantile of the nearest-neighbour distances used by `--sigma auto`.
    #[arg(long)]
    pub sigma_quantile: Option<f64>,
    /// Offset of the t-Student kernel.
    #[arg(long)]
    pub a: Option<f64>,
}

pub const DEFAULT_SIGMA_QUANTILE: f64 = 0.1;

impl KernelArgs {
    pub fn choice(&self) -> CliResult<KernelChoice> {
        let q = match self.kernel {
            KernelName::Gaussian | KernelName::Laplacian if self.q.is_some() => {
                return Err(CliError::usage(
                    "--q is implied by --kernel gaussian/laplacian; use --kernel exponential",
                ))
            }
            KernelName::Gaussian => 2.0,
            KernelName::Laplacian => 1.0,
            KernelName::Exponential | KernelName::Tstudent => self.q.unwrap_or(2.0),
        };
        if self.kernel == KernelName::Tstudent {
            if self.sigma.is_some() || self.sigma_quantile.is_some() {
                return Err(CliError::usage(
                    "--sigma does not apply to --kernel tstudent",
                ));
            }
            let spec = KernelSpec::t_student(q, self.a.unwrap_or(1.0));
            spec.validate()?;
            return Ok(KernelChoice::Fixed(spec));
        }
        if self.a.is_some() {
            return Err(CliError::usage("--a only applies to --kernel tstudent"));
        }
        match self.sigma.as_deref() {
            None | Some("auto") => {
                let quantile = self.sigma_quantile.unwrap_or(DEFAULT_SIGMA_QUANTILE);
                if !(0.0..=1.0).contains(&quantile) {
                    return Err(CliError::usage(format!(
                        "--sigma-quantile must lie in [0, 1], got {quantile}"
                    )));
                }
                Ok(KernelChoice::AutoBandwidth { q, quantile })
            }
            Some(s) => {
                if self.sigma_quantile.is_some() {
                    return Err(CliError::usage("--sigma-quantile requires --sigma auto"));
                }
                let sigma: f64 = s.parse().map_err(|_| {
                    CliError::usage(format!("--sigma expects a number or `auto`, got `{s}`"))
                })?;
                let spec = KernelSpec::Exponential { q, sigma };
                spec.validate()?;
                Ok(KernelChoice::Fixed(spec))
            }
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 0.1)]
    pub nu: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_iter: u64,
    /// Kernel row cache budget in MiB.
    #[arg(long, default_value_t = 256)]
    pub cache_mb: usize,
}

impl SolverArgs {
    fn options(&self) -> TrainOptions {
        TrainOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            cache_mb: self.cache_mb,
            record_objective: false,
        }
    }

    fn check_nu(&self) -> CliResult<()> {
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(CliError::usage(format!(
                "--nu must lie in (0, 1], got {}",
                self.nu
            )));
        }
        Ok(())
    }
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// CSV file, one sample per row.
    #[arg(long)]
    pub input: PathBuf,
    /// Skip the first line of the CSV.
    #[arg(long)]
    pub header: bool,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Model JSON output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExplainMode {
    /// Relevance of the input variables for the outlierness.
    Outlier,
    /// Relevance of the support vectors for the inlierness.
    Inlier,
}

#[derive(Args, Debug)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub header: bool,
    /// Row of the CSV to explain.
    #[arg(long, default_value_t = 0)]
    pub row: usize,
    #[arg(long, value_enum, default_value = "outlier")]
    pub mode: ExplainMode,
    /// Heatmap CSV output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct PatchArgs {
    #[arg(long, default_value_t = 7)]
    pub patch: usize,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
}

#[derive(Args, Debug)]
pub struct ImageFitArgs {
    /// PGM/PPM training images.
    #[arg(long = "image", required = true)]
    pub images: Vec<PathBuf>,
    #[command(flatten)]
    pub patch: PatchArgs,
    /// Maximum number of training patches.
    #[arg(long, default_value_t = 30_000)]
    pub subsample: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ImageExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    #[command(flatten)]
    pub patch: PatchArgs,
    /// Heatmap CSV output, one row per pixel and channel.
    #[arg(long)]
    pub out: PathBuf,
    /// Also render the heatmap as a PGM.
    #[arg(long)]
    pub render: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlipMethod {
    Dtd,
    Sa,
    Nn,
    Ev,
    Sobel,
    Random,
}

impl FlipMethod {
    fn name(self) -> &'static str {
        match self {
            FlipMethod::Dtd => "dtd",
            FlipMethod::Sa => "sa",
            FlipMethod::Nn => "nn",
            FlipMethod::Ev => "ev",
            FlipMethod::Sobel => "sobel",
            FlipMethod::Random => "random",
        }
    }
}

#[derive(Args, Debug)]
pub struct FlipArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub header: bool,
    /// Rows to evaluate; all rows when omitted.
    #[arg(long, value_delimiter = ',')]
    pub rows: Vec<usize>,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "dtd,sa,nn,random"
    )]
    pub methods: Vec<FlipMethod>,
    /// Seed of the random baseline; row `r` uses `seed + r`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Image shape of each row, required by `sobel`.
    #[arg(long)]
    pub shape: Option<String>,
    /// Mean curves as `method,k,fraction_flipped,score`.
    #[arg(long)]
    pub curve: PathBuf,
    /// Mean AUC per method as `method,seed,auc`.
    #[arg(long)]
    pub summary: PathBuf,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Test samples per label.
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Training inliers.
    #[arg(long, default_value_t = 300)]
    pub train: usize,
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    #[arg(long, default_value_t = 20)]
    pub width: usize,
    #[arg(long, default_value_t = 5.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 0.3)]
    pub std: f64,
    #[arg(long, default_value_t = 0.01)]
    pub nu: f64,
    #[arg(long, default_value_t = 0.5)]
    pub sigma_quantile: f64,
    /// MVN variance regulariser.
    #[arg(long, default_value_t = 1e-2)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Directory for data, model and per-sample shares.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[arg(long)]
    pub heatmap: PathBuf,
    /// `HxW` or `HxWxC`; channels are summed.
    #[arg(long)]
    pub shape: String,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `HxW` or `HxWxC`.
pub fn parse_shape(s: &str) -> CliResult<(usize, usize, usize)> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    let nums: Option<Vec<usize>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
    match nums.as_deref() {
        Some(&[h, w]) if h > 0 && w > 0 => Ok((h, w, 1)),
        Some(&[h, w, c]) if h > 0 && w > 0 && c > 0 => Ok((h, w, c)),
        _ => Err(CliError::usage(format!(
            "bad shape `{s}`, expected HxW or HxWxC"
        ))),
    }
}

/// Sums channels and scales to 0–255 per image. A constant heatmap is black.
pub fn render_heatmap(relevance: &[f64], shape: (usize, usize, usize)) -> crate::Result<Image> {
    let (h, w, c) = shape;
    if relevance.len() != h * w * c {
        return Err(OcxError::Shape(format!(
            "heatmap has {} values, shape {h}x{w}x{c} needs {}",
            relevance.len(),
            h * w * c
        )));
    }
    let px: Vec<f64> = relevance.chunks(c).map(|ch| ch.iter().sum()).collect();
    let lo = px.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = px.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled = if hi > lo {
        px.iter().map(|v| 255.0 * (v - lo) / (hi - lo)).collect()
    } else {
        vec![0.0; px.len()]
    };
    Image::new(h, w, 1, scaled)
}

fn write_rendered(path: &Path, relevance: &[f64], shape: (usize, usize, usize)) -> CliResult<()> {
    let img = render_heatmap(relevance, shape)?;
    atomic_write(path, &img.encode_pnm()?)?;
    Ok(())
}

fn kernel_summary(k: &KernelSpec) -> String {
    match *k {
        KernelSpec::Exponential { q, sigma } => {
            format!("exponential q={} sigma={}", fmt_f64(q), fmt_f64(sigma))
        }
        KernelSpec::TStudent { q, a } => format!("tstudent q={} a={}", fmt_f64(q), fmt_f64(a)),
    }
}

fn fit(args: &FitArgs, out: &mut dyn Write) -> CliResult<()> {
    let choice = args.kernel.choice()?;
    args.solver.check_nu()?;
    let data = read_csv_matrix(&args.input, args.header)?;
    let spec = choice.resolve(&data)?;
    let (model, report) = train_with_options(&data, spec, args.solver.nu, &args.solver.options())?;
    save_model(&args.out, &model)?;
    writeln!(out, "kernel: {}", kernel_summary(&model.kernel))?;
    writeln!(out, "n: {}", data.rows())?;
    writeln!(out, "m: {}", model.m())?;
    writeln!(out, "rho: {}", fmt_f64(model.rho))?;
    writeln!(out, "sum_alpha: {}", fmt_f64(model.alphas.iter().sum()))?;
    writeln!(out, "free_sv: {}", report.n_free)?;
    writeln!(out, "bound_sv: {}", report.n_at_bound)?;
    writeln!(out, "iterations: {}", report.iterations)?;
    writeln!(out, "kkt_residual: {}", fmt_f64(report.kkt_residual))?;
    writeln!(out, "objective: {}", fmt_f64(report.objective))?;
    Ok(())
}

fn pick_row(data: &Matrix, row: usize) -> CliResult<&[f64]> {
    if row >= data.rows() {
        return Err(CliError::usage(format!(
            "row {row} out of range, input has {} rows",
            data.rows()
        )));
    }
    Ok(data.row(row))
}

fn explain(args: &ExplainArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = load_model(&args.model)?;
    let data = read_csv_matrix(&args.input, args.header)?;
    let x = pick_row(&data, args.row)?;
    match args.mode {
        ExplainMode::Outlier => {
            let hm = input_relevance(&model, x)?;
            let delta: f64 = decomposable_relevance(&model, x)?.iter().sum();
            write_heatmap_csv(&args.out, &hm.r)?;
            writeln!(out, "outlierness: {}", fmt_f64(outlierness(&model, x)?))?;
            writeln!(out, "sum_delta: {}", fmt_f64(delta))?;
            writeln!(out, "heatmap_total: {}", fmt_f64(hm.total))?;
        }
        ExplainMode::Inlier => {
            let rel = explain_inlier(&model, x)?;
            write_heatmap_csv(&args.out, &rel.r)?;
            writeln!(out, "inlierness: {}", fmt_f64(inlierness(&model, x)?))?;
            writeln!(out, "sum_relevance: {}", fmt_f64(rel.r.iter().sum()))?;
        }
    }
    Ok(())
}

fn image_fit(args: &ImageFitArgs, out: &mut dyn Write) -> CliResult<()> {
    let choice = args.kernel.choice()?;
    args.solver.check_nu()?;
    let cfg = PatchConfig {
        patch: args.patch.patch,
        stride: args.patch.stride,
        subsample: args.subsample,
        seed: args.seed,
    };
    let images = args
        .images
        .iter()
        .map(Image::read_pnm)
        .collect::<crate::Result<Vec<_>>>()?;
    let model = fit_image_model(
        &images,
        &cfg,
        choice,
        args.solver.nu,
        &args.solver.options(),
    )?;
    save_model(&args.out, &model)?;
    writeln!(out, "kernel: {}", kernel_summary(&model.kernel))?;
    writeln!(out, "images: {}", images.len())?;
    writeln!(out, "n: {}", model.n_train)?;
    writeln!(out, "m: {}", model.m())?;
    writeln!(out, "rho: {}", fmt_f64(model.rho))?;
    Ok(())
}

fn image_explain(args: &ImageExplainArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = load_model(&args.model)?;
    let image = Image::read_pnm(&args.image)?;
    let cfg = PatchConfig {
        patch: args.patch.patch,
        stride: args.patch.stride,
        ..PatchConfig::default()
    };
    let hm = image_relevance(&model, &image, &cfg)?;
    write_heatmap_csv(&args.out, &hm.grid)?;
    if let Some(path) = &args.render {
        write_rendered(path, &hm.grid, (hm.height, hm.width, hm.channels))?;
    }
    writeln!(out, "shape: {}x{}x{}", hm.height, hm.width, hm.channels)?;
    writeln!(out, "outlierness: {}", fmt_f64(hm.outlierness))?;
    writeln!(out, "heatmap_total: {}", fmt_f64(hm.total))?;
    Ok(())
}

fn method_order(
    method: FlipMethod,
    model: &OneClassModel,
    x: &[f64],
    seed: u64,
    shape: Option<(usize, usize, usize)>,
) -> CliResult<Vec<usize>> {
    let rel = match method {
        FlipMethod::Dtd => input_relevance(model, x)?.r,
        FlipMethod::Sa => sensitivity(model, x)?.r,
        FlipMethod::Nn => nn_map(model, x)?.r,
        FlipMethod::Ev => ev_map(model, x)?.r,
        FlipMethod::Random => return Ok(random_order(x.len(), seed)),
        FlipMethod::Sobel => {
            let (h, w, c) = shape.ok_or_else(|| CliError::usage("method sobel needs --shape"))?;
            let img = Image::new(h, w, c, x.to_vec())?;
            // one gradient value per pixel, shared by its channels
            sobel_map(&img)
                .r
                .iter()
                .flat_map(|&v| std::iter::repeat_n(v, c))
                .collect()
        }
    };
    Ok(order_from_heatmap(&rel))
}

fn flip(args: &FlipArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = load_model(&args.model)?;
    let data = read_csv_matrix(&args.input, args.header)?;
    let shape = args.shape.as_deref().map(parse_shape).transpose()?;
    if let Some((h, w, c)) = shape {
        if h * w * c != data.cols() {
            return Err(CliError::usage(format!(
                "shape {h}x{w}x{c} does not match {} columns",
                data.cols()
            )));
        }
    }
    let rows: Vec<usize> = if args.rows.is_empty() {
        (0..data.rows()).collect()
    } else {
        args.rows.clone()
    };
    if rows.is_empty() {
        return Err(CliError::usage("no rows to evaluate"));
    }
    for &r in &rows {
        pick_row(&data, r)?;
    }
    let d = data.cols();
    let mut curves = String::from("method,k,fraction_flipped,score\n");
    let mut summary = Vec::new();
    for &method in &args.methods {
        let mut mean = vec![0.0; d + 1];
        let mut auc = 0.0;
        for &r in &rows {
            let x = data.row(r);
            let order = method_order(method, &model, x, args.seed.wrapping_add(r as u64), shape)?;
            let curve = flip_curve(&model, x, &order)?;
            auc += flip_auc(&curve)?;
            for (acc, s) in mean.iter_mut().zip(&curve.scores) {
                *acc += s;
            }
        }
        let n = rows.len() as f64;
        for (k, s) in mean.iter().enumerate() {
            curves.push_str(&format!(
                "{},{k},{},{}\n",
                method.name(),
                fmt_f64(k as f64 / d as f64),
                fmt_f64(s / n)
            ));
        }
        summary.push((method.name().to_string(), args.seed, auc / n));
    }
    atomic_write(&args.curve, curves.as_bytes())?;
    let text = format!("method,seed,auc\n{}", summary_csv_string(&summary));
    atomic_write(&args.summary, text.as_bytes())?;
    for (name, _, auc) in &summary {
        writeln!(out, "{name}: {}", fmt_f64(*auc))?;
    }
    Ok(())
}

/// Outcome of the two-panel benchmark.
#[derive(Clone, Debug)]
pub struct BenchOutcome {
    pub model: OneClassModel,
    pub train: Matrix,
    pub test: Matrix,
    pub labels: Vec<PanelLabel>,
    /// Per test sample: `(dtd_left, dtd_right, mvn_left, mvn_right)`.
    pub shares: Vec<(f64, f64, f64, f64)>,
    /// Per test sample: DTD heatmap total.
    pub totals: Vec<f64>,
}

impl BenchOutcome {
    /// Number of type-I samples with more right than left relevance, and their count.
    pub fn type1_right_heavier(&self) -> (usize, usize) {
        let idx = self.indices(PanelLabel::TypeI);
        let hits = idx
            .iter()
            .filter(|&&i| self.shares[i].1 > self.shares[i].0)
            .count();
        (hits, idx.len())
    }

    /// Median left share `H_left / (H_left + H_right)` on type-II samples, DTD then MVN.
    pub fn type2_median_left_share(&self) -> (f64, f64) {
        let idx = self.indices(PanelLabel::TypeII);
        let share = |l: f64, r: f64| if l + r != 0.0 { l / (l + r) } else { 0.5 };
        let mut dtd: Vec<f64> = idx
            .iter()
            .map(|&i| share(self.shares[i].0, self.shares[i].1))
            .collect();
        let mut mvn: Vec<f64> = idx
            .iter()
            .map(|&i| share(self.shares[i].2, self.shares[i].3))
            .collect();
        (median(&mut dtd), median(&mut mvn))
    }

    /// Mean DTD total of inliers over that of type-I outliers.
    pub fn inlier_to_type1_ratio(&self) -> f64 {
        let mean = |l| {
            let idx = self.indices(l);
            idx.iter().map(|&i| self.totals[i]).sum::<f64>() / idx.len() as f64
        };
        mean(PanelLabel::Inlier) / mean(PanelLabel::TypeI)
    }

    fn indices(&self, label: PanelLabel) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == label)
            .collect()
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs the two-panel benchmark: class 0 is the inlier class, the rest form
/// the outlier mixture. Training uses the inliers of one draw, testing a
/// second draw with the next seed.
pub fn two_panel_bench(args: &BenchArgs) -> crate::Result<BenchOutcome> {
    if args.classes < 2 {
        return Err(OcxError::Parameter("need at least 2 classes".into()));
    }
    let mut classes = block_classes(args.classes, args.width, args.scale, args.std);
    let others = BlobMixture {
        blobs: classes.split_off(1),
    };
    let inlier = &classes[0];
    let train = gen_two_panel(args.train, inlier, &others, args.seed)?.of_label(PanelLabel::Inlier);
    let test = gen_two_panel(args.n, inlier, &others, args.seed.wrapping_add(1))?;
    let spec = KernelChoice::AutoBandwidth {
        q: 2.0,
        quantile: args.sigma_quantile,
    }
    .resolve(&train)?;
    let (model, _) = train_with_options(&train, spec, args.nu, &TrainOptions::default())?;
    let mvn = mvn_fit(&train, args.lambda)?;
    let split = test.split;
    let mut shares = Vec::with_capacity(test.labels.len());
    let mut totals = Vec::with_capacity(test.labels.len());
    for x in test.samples.iter_rows() {
        let hm = input_relevance(&model, x)?;
        let (dl, dr) = panel_shares(&hm.r, split)?;
        let (ml, mr) = panel_shares(&mvn_decompose(&mvn, x)?.r, split)?;
        shares.push((dl, dr, ml, mr));
        totals.push(hm.total);
    }
    Ok(BenchOutcome {
        model,
        train,
        test: test.samples,
        labels: test.labels,
        shares,
        totals,
    })
}

fn bench(args: &BenchArgs, out: &mut dyn Write) -> CliResult<()> {
    if !(args.nu > 0.0 && args.nu <= 1.0) {
        return Err(CliError::usage(format!(
            "--nu must lie in (0, 1], got {}",
            args.nu
        )));
    }
    let res = two_panel_bench(args)?;
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir)?;
        write_csv_matrix(dir.join("train.csv"), &res.train)?;
        write_csv_matrix(dir.join("test.csv"), &res.test)?;
        save_model(dir.join("model.json"), &res.model)?;
        let mut text = String::from("index,label,dtd_left,dtd_right,mvn_left,mvn_right\n");
        for (i, (label, s)) in res.labels.iter().zip(&res.shares).enumerate() {
            text.push_str(&format!(
                "{i},{},{},{},{},{}\n",
                label.as_str(),
                fmt_f64(s.0),
                fmt_f64(s.1),
                fmt_f64(s.2),
                fmt_f64(s.3)
            ));
        }
        atomic_write(dir.join("shares.csv"), text.as_bytes())?;
    }
    let (hits, n1) = res.type1_right_heavier();
    let (dtd, mvn) = res.type2_median_left_share();
    writeln!(out, "m: {}", res.model.m())?;
    writeln!(out, "type1_right_heavier: {hits}/{n1}")?;
    writeln!(
        out,
        "inlier_to_type1_total: {}",
        fmt_f64(res.inlier_to_type1_ratio())
    )?;
    writeln!(out, "type2_median_left_share_dtd: {}", fmt_f64(dtd))?;
    writeln!(out, "type2_median_left_share_mvn: {}", fmt_f64(mvn))?;
    Ok(())
}

fn render(args: &RenderArgs, out: &mut dyn Write) -> CliResult<()> {
    let shape = parse_shape(&args.shape)?;
    let rel = crate::io::read_heatmap_csv(&args.heatmap)?;
    write_rendered(&args.out, &rel, shape)?;
    writeln!(out, "wrote {}x{} image", shape.0, shape.1)?;
    Ok(())
}

/// Caps the global thread pool from `OCX_THREADS`.
pub fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("OCX_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| {
            CliError::usage(format!("OCX_THREADS must be a positive integer, got `{v}`"))
        })?;
        if n == 0 {
            return Err(CliError::usage("OCX_THREADS must be at least 1"));
        }
        // fails only if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Fit(a) => fit(a, out),
        Command::Explain(a) => explain(a, out),
        Command::ImageFit(a) => image_fit(a, out),
        Command::ImageExplain(a) => image_explain(a, out),
        Command::Flip(a) => flip(a, out),
        Command::BenchTwoPanel(a) => bench(a, out),
        Command::Render(a) => render(a, out),
    }
}

/// Parses `argv`, runs the command and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match configure_threads().and_then(|_| execute(&cli, out)) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel(args: &[&str]) -> CliResult<KernelChoice> {
        #[derive(Parser)]
        struct K {
            #[command(flatten)]
            k: KernelArgs,
        }
        let mut argv = vec!["k"];
        argv.extend(args);
        K::try_parse_from(argv).unwrap().k.choice()
    }

    #[test]
    fn kernel_flags() {
        assert_eq!(
            kernel(&[]).unwrap(),
            KernelChoice::AutoBandwidth {
                q: 2.0,
                quantile: 0.1
            }
        );
        assert_eq!(
            kernel(&["--kernel", "laplacian", "--sigma", "2"]).unwrap(),
            KernelChoice::Fixed(KernelSpec::laplacian(2.0))
        );
        assert_eq!(
            kernel(&["--kernel", "tstudent", "--q", "4"]).unwrap(),
            KernelChoice::Fixed(KernelSpec::t_student(4.0, 1.0))
        );
        for bad in [
            &["--kernel", "tstudent", "--sigma", "1"][..],
            &["--kernel", "gaussian", "--a", "1"],
            &["--kernel", "gaussian", "--q", "3"],
            &["--sigma", "1", "--sigma-quantile", "0.5"],
            &["--sigma", "x"],
            &["--sigma=-1"],
        ] {
            assert_eq!(kernel(bad).unwrap_err().code, EXIT_USAGE, "{bad:?}");
        }
    }

    #[test]
    fn shapes() {
        assert_eq!(parse_shape("4x5").unwrap(), (4, 5, 1));
        assert_eq!(parse_shape("4x5x3").unwrap(), (4, 5, 3));
        assert!(parse_shape("4x").is_err());
        assert!(parse_shape("0x3").is_err());
    }

    #[test]
    fn render_scaling() {
        let img = render_heatmap(&[0.0, 0.0, 5.0, 0.0], (2, 2, 1)).unwrap();
        assert_eq!(img.data, vec![0.0, 0.0, 255.0, 0.0]);
        let flat = render_heatmap(&[3.0; 6], (1, 2, 3)).unwrap();
        assert_eq!(flat.data, vec![0.0, 0.0]);
        assert!(render_heatmap(&[1.0; 5], (2, 2, 1)).is_err());
    }

    #[test]
    fn numerical_errors_map_to_3() {
        let e: CliError = OcxError::UndefinedAuc.into();
        assert_eq!(e.code, EXIT_NUMERICAL);
        let e: CliError = OcxError::Parse("x".into()).into();
        assert_eq!(e.code, EXIT_USAGE);
    }
}
