//! Measurement battery: gradient-variance regimes, Hessian spectra, tail
//! statistics of initialization errors, disorder success scans, landscape
//! grids and the shot-cost model.
//!
//! Every scan is deterministic given its inputs and seed. Per-sample streams
//! are derived as `seed ^ index`, samples run in parallel and are reduced in
//! index order.

mod benchmark;
mod disorder;
mod haar;
mod landscape;
mod shots;
mod spectrum;
mod tails;
mod variance;

use std::fmt::Write as _;

use thiserror::Error;

use crate::circuit::{CircuitError, ParameterVector};
use crate::geometry::GeometryError;
use crate::hamiltonian::HamiltonianError;
use crate::optim::OptimError;
use crate::precond::PrecondError;

pub use benchmark::{benchmark_table, BenchmarkEntry, BenchmarkRow};
pub use disorder::{
    disorder_success_scan, DisorderScanConfig, DisorderScanResult, SigmaPoint, Strategy,
    StrategySuccess,
};
pub use haar::{haar_variance_prediction, GeneratorSpec, HAAR_MAX_QUBITS};
pub use landscape::{landscape_grid, LandscapeGrid};
pub use shots::{pes_amortization, shot_cost, PesAmortization, ShotCostEstimate};
pub use spectrum::{hessian_eigenpairs, hessian_spectrum, HessianSpectrum, HESSIAN_MAX_PARAMS};
pub use tails::{
    init_error_tail, tail_histogram, InitStrategy, TailReport, TailStats, TAIL_MIN_SAMPLES,
};
pub use variance::{
    central_parameter, curvature_bounds_check, gradient_variance_scan, log2_slope,
    CurvatureBoundsReport, Ensemble, GradientVarianceRow,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("{what} exceeds the cap: {value} > {cap}")]
    Cap {
        what: &'static str,
        value: usize,
        cap: usize,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("reference point is not stationary: gradient norm {0:e}")]
    NotStationary(f64),
    #[error("every Hessian eigenvalue lies within the redundancy tolerance")]
    AllRedundant,
    #[error("{failed} of {total} samples failed (first: {first})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: String,
    },
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("commutator trace {0:e} is not zero")]
    TraceNotZero(f64),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Precond(#[from] PrecondError),
}

/// Parameter covariance of a basin ensemble, rad².
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Isotropic(f64),
    Diagonal(Vec<f64>),
}

/// Gaussian ensemble `theta* + N(0, Sigma)` around a reference minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct BasinEnsemble {
    pub center: ParameterVector,
    pub covariance: Covariance,
}

impl BasinEnsemble {
    pub fn isotropic(center: ParameterVector, variance: f64) -> Self {
        Self {
            center,
            covariance: Covariance::Isotropic(variance),
        }
    }

    /// Per-parameter variances.
    pub fn variances(&self) -> Result<Vec<f64>, DiagnosticsError> {
        let v = match &self.covariance {
            Covariance::Isotropic(s) => vec![*s; self.center.len()],
            Covariance::Diagonal(d) => {
                if d.len() != self.center.len() {
                    return Err(DiagnosticsError::InvalidInput(format!(
                        "covariance has {} entries for {} parameters",
                        d.len(),
                        self.center.len()
                    )));
                }
                d.clone()
            }
        };
        if v.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(DiagnosticsError::InvalidInput(
                "variances must be finite and >= 0".into(),
            ));
        }
        Ok(v)
    }
}

/// Column-named rows of pre-formatted cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Header row and data rows only.
    pub fn body(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    /// `# key = value` comment lines followed by [`CsvTable::body`].
    pub fn to_csv(&self, comments: &[(String, String)]) -> String {
        let mut out = String::new();
        for (k, v) in comments {
            for (i, line) in v.lines().enumerate() {
                if i == 0 {
                    let _ = writeln!(out, "# {k} = {line}");
                } else {
                    let _ = writeln!(out, "#   {line}");
                }
            }
        }
        out + &self.body()
    }

    /// Space-aligned text rendering.
    pub fn to_text(&self) -> String {
        let mut widths: Vec<usize> = self.columns.iter().map(String::len).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let line = |cells: &[String]| {
            let mut s = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ");
            s.push('\n');
            s
        };
        let mut out = line(&self.columns);
        out.push_str(&line(
            &widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>(),
        ));
        for r in &self.rows {
            out.push_str(&line(r));
        }
        out
    }
}

pub(crate) fn num(v: f64) -> String {
    format!("{v}")
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

/// Linear-interpolation quantile of sorted data, `q` in `[0, 1]`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

/// Sample variance and the standard error of that variance estimate.
pub(crate) fn variance_with_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = dev.iter().sum::<f64>() / (n - 1.0);
    let m = dev.iter().sum::<f64>() / n;
    let spread = dev.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (n - 1.0);
    (var, (spread / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_interval_reference_values() {
        let (lo, hi) = wilson_interval(0, 20);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.161_125).abs() < 1e-5);
        let (lo, hi) = wilson_interval(20, 20);
        assert!((lo - 0.838_875).abs() < 1e-5);
        assert_eq!(hi, 1.0);
        let (lo, hi) = wilson_interval(5, 10);
        assert!((lo - 0.236_590).abs() < 1e-5 && (hi - 0.763_410).abs() < 1e-5);
    }

    #[test]
    fn quantiles_interpolate_and_are_monotone() {
        let xs: Vec<f64> = (0..=10).map(f64::from).collect();
        assert_eq!(quantile_sorted(&xs, 0.5), 5.0);
        assert!((quantile_sorted(&xs, 0.99) - 9.9).abs() < 1e-12);
        let qs: Vec<f64> = [0.5, 0.9, 0.99, 0.999]
            .iter()
            .map(|&q| quantile_sorted(&xs, q))
            .collect();
        assert!(qs.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn csv_comment_block_and_alignment() {
        let mut t = CsvTable::new(&["a", "bb"]);
        t.push(vec!["1".into(), "22222".into()]);
        let csv = t.to_csv(&[("seed".into(), "7".into())]);
        assert_eq!(csv, "# seed = 7\na,bb\n1,22222\n");
        let text = t.to_text();
        assert_eq!(text.lines().next().unwrap(), "a     bb");
    }

    #[test]
    fn variance_estimate_of_known_sample() {
        let (v, se) = variance_with_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert!((v - 5.0 / 3.0).abs() < 1e-12);
        assert!(se > 0.0);
    }
}
