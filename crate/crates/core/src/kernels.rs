//! Radial kernel families acting on Euclidean distances.
//!
//! Both families are functions of `‖x − u‖^q` only:
//!
//! * exponential: `k(d) = exp(−d^q / (q σ^q))` (Laplacian for `q = 1`,
//!   Gaussian for `q = 2`)
//! * t-Student: `k(d) = 1 / (a + d^q)`

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{OcxError, Result};
use crate::matrix::Matrix;

/// Kernel family with its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelSpec {
    Exponential {
        q: f64,
        sigma: f64,
    },
    #[serde(rename = "tstudent")]
    TStudent {
        q: f64,
        a: f64,
    },
}

/// Discriminant tag for a [`KernelSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelFamily {
    Exponential,
    TStudent,
}

impl KernelSpec {
    /// Gaussian kernel, `q = 2`.
    pub fn gaussian(sigma: f64) -> Self {
        KernelSpec::Exponential { q: 2.0, sigma }
    }

    /// Laplacian kernel, `q = 1`.
    pub fn laplacian(sigma: f64) -> Self {
        KernelSpec::Exponential { q: 1.0, sigma }
    }

    pub fn t_student(q: f64, a: f64) -> Self {
        KernelSpec::TStudent { q, a }
    }

    pub fn family(&self) -> KernelFamily {
        match self {
            KernelSpec::Exponential { .. } => KernelFamily::Exponential,
            KernelSpec::TStudent { .. } => KernelFamily::TStudent,
        }
    }

    pub fn q(&self) -> f64 {
        match *self {
            KernelSpec::Exponential { q, .. } | KernelSpec::TStudent { q, .. } => q,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.q();
        if !(q.is_finite() && q >= 1.0) {
            return Err(OcxError::Parameter(format!(
                "kernel exponent q must be >= 1, got {q}"
            )));
        }
        match *self {
            KernelSpec::Exponential { sigma, .. } if !(sigma.is_finite() && sigma > 0.0) => Err(
                OcxError::Parameter(format!("bandwidth sigma must be > 0, got {sigma}")),
            ),
            KernelSpec::TStudent { a, .. } if !(a.is_finite() && a > 0.0) => Err(
                OcxError::Parameter(format!("t-Student offset a must be > 0, got {a}")),
            ),
            _ => Ok(()),
        }
    }

    /// Kernel value at zero distance: 1 for exponential, `1/a` for t-Student.
    pub fn at_zero(&self) -> f64 {
        match *self {
            KernelSpec::Exponential { .. } => 1.0,
            KernelSpec::TStudent { a, .. } => 1.0 / a,
        }
    }

    /// Evaluates the kernel from a precomputed powered distance `d^q`.
    #[inline]
    pub fn eval_pow(&self, pow_dist: f64) -> f64 {
        match *self {
            KernelSpec::Exponential { q, sigma } => (-pow_dist / (q * sigma.powf(q))).exp(),
            KernelSpec::TStudent { a, .. } => 1.0 / (a + pow_dist),
        }
    }

    /// Evaluates the kernel at Euclidean distance `dist`.
    #[inline]
    pub fn eval(&self, dist: f64) -> f64 {
        self.eval_pow(dist.powf(self.q()))
    }

    /// Evaluates the kernel from a squared Euclidean distance.
    #[inline]
    pub(crate) fn eval_sq(&self, sq_dist: f64) -> f64 {
        self.eval_pow(pow_from_sq(sq_dist, self.q()))
    }
}

/// Kernel with the bandwidth either fixed or chosen from the data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelChoice {
    Fixed(KernelSpec),
    /// Exponential kernel whose σ is the given quantile of the
    /// one-nearest-neighbour distances of the training set.
    AutoBandwidth {
        q: f64,
        quantile: f64,
    },
}

impl KernelChoice {
    pub fn resolve(&self, data: &Matrix) -> Result<KernelSpec> {
        let spec = match *self {
            KernelChoice::Fixed(spec) => spec,
            KernelChoice::AutoBandwidth { q, quantile } => KernelSpec::Exponential {
                q,
                sigma: bandwidth_heuristic(data, quantile)?,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<KernelSpec> for KernelChoice {
    fn from(spec: KernelSpec) -> Self {
        KernelChoice::Fixed(spec)
    }
}

/// `k(dist)` with parameter validation.
pub fn eval_kernel(spec: &KernelSpec, dist: f64) -> Result<f64> {
    spec.validate()?;
    if dist.is_nan() || dist < 0.0 {
        return Err(OcxError::Domain(format!(
            "distance must be >= 0, got {dist}"
        )));
    }
    Ok(spec.eval(dist))
}

/// `‖x − u‖₂^q`.
pub fn pow_distance(x: &[f64], u: &[f64], q: f64) -> Result<f64> {
    if x.len() != u.len() {
        return Err(OcxError::Shape(format!(
            "vectors of length {} and {}",
            x.len(),
            u.len()
        )));
    }
    if x.is_empty() {
        return Err(OcxError::Shape(
            "vectors must have at least one entry".into(),
        ));
    }
    Ok(pow_from_sq(sq_dist(x, u), q))
}

#[inline]
pub(crate) fn sq_dist(x: &[f64], u: &[f64]) -> f64 {
    x.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `(√s)^q` with the common exponents special-cased.
#[inline]
pub(crate) fn pow_from_sq(sq: f64, q: f64) -> f64 {
    if q == 2.0 {
        sq
    } else if q == 4.0 {
        sq * sq
    } else if q == 1.0 {
        sq.sqrt()
    } else {
        sq.sqrt().powf(q)
    }
}

/// Linear-interpolation empirical quantile of `values` (which is sorted in place).
pub fn quantile(values: &mut [f64], level: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let pos = level * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    values[lo] + frac * (values[hi] - values[lo])
}

/// Distance from every row to its nearest other row.
pub fn nearest_neighbor_distances(data: &Matrix) -> Vec<f64> {
    let n = data.rows();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = data.row(i);
            (0..n)
                .filter(|&j| j != i)
                .map(|j| sq_dist(xi, data.row(j)))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect()
}

/// Bandwidth set to a quantile of the one-nearest-neighbour distances.
pub fn bandwidth_heuristic(data: &Matrix, level: f64) -> Result<f64> {
    if data.rows() < 2 {
        return Err(OcxError::Parameter(format!(
            "bandwidth heuristic needs at least 2 rows, got {}",
            data.rows()
        )));
    }
    if !(level > 0.0 && level <= 1.0) {
        return Err(OcxError::Parameter(format!(
            "quantile must lie in (0, 1], got {level}"
        )));
    }
    let mut nn = nearest_neighbor_distances(data);
    let sigma = quantile(&mut nn, level);
    if sigma > 0.0 {
        Ok(sigma)
    } else {
        Err(OcxError::DegenerateBandwidth)
    }
}
