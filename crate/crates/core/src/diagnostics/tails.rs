use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{num, quantile_sorted, CsvTable, DiagnosticsError};
use crate::circuit::{self, AnsatzSpec};
use crate::geometry::{perturb_positions, MolecularGeometry};
use crate::hamiltonian::{HamiltonianError, QubitHamiltonian};
use crate::precond::{hf_theta, qubit_map_of, PreconditionerModel};

/// Smallest accepted sample count.
pub const TAIL_MIN_SAMPLES: usize = 100;

/// How `theta0` is chosen for each disordered instance.
#[derive(Debug, Clone, Copy)]
pub enum InitStrategy<'a> {
    /// Uniform angles on `(-pi, pi]`.
    Random,
    /// The same angles for every instance.
    Fixed(&'a [f64]),
    Equivariant(&'a PreconditionerModel),
    /// Basis state from the Hamiltonian's `hf_bitstring`.
    HartreeFock,
}

impl InitStrategy<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            InitStrategy::Random => "random",
            InitStrategy::Fixed(_) => "fixed",
            InitStrategy::Equivariant(_) => "equivariant",
            InitStrategy::HartreeFock => "hartree_fock",
        }
    }

    pub(crate) fn theta0(
        &self,
        spec: &AnsatzSpec,
        geom: &MolecularGeometry,
        h: &QubitHamiltonian,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<f64>, DiagnosticsError> {
        Ok(match self {
            InitStrategy::Random => (0..spec.param_count())
                .map(|_| PI - rng.random_range(0.0..2.0 * PI))
                .collect(),
            InitStrategy::Fixed(t) => {
                spec.check_params(t)?;
                t.to_vec()
            }
            InitStrategy::Equivariant(m) => {
                crate::precond::predict(m, geom, spec, &qubit_map_of(h)?)?.into_vec()
            }
            InitStrategy::HartreeFock => {
                let bits = h.metadata().hf_bitstring.as_ref().ok_or_else(|| {
                    DiagnosticsError::InvalidInput(format!(
                        "`{}` has no hf_bitstring",
                        h.metadata().source
                    ))
                })?;
                hf_theta(spec, bits)?.into_vec()
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailStats {
    pub n: usize,
    /// Quantiles at 50, 90, 99 and 99.9 %.
    pub quantiles: [f64; 4],
    /// `(threshold, count of samples above it)`.
    pub exceedances: Vec<(f64, usize)>,
    pub mean: f64,
    pub max: f64,
}

impl TailStats {
    pub const LEVELS: [f64; 4] = [0.5, 0.9, 0.99, 0.999];

    pub fn from_samples(samples: &[f64], thresholds: &[f64]) -> Self {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let quantiles = Self::LEVELS.map(|q| quantile_sorted(&sorted, q));
        Self {
            n: samples.len(),
            quantiles,
            exceedances: thresholds
                .iter()
                .map(|&t| (t, samples.iter().filter(|&&x| x > t).count()))
                .collect(),
            mean: samples.iter().sum::<f64>() / samples.len().max(1) as f64,
            max: sorted.last().copied().unwrap_or(f64::NAN),
        }
    }

    pub fn to_table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["statistic", "value"]);
        t.push(vec!["n".into(), self.n.to_string()]);
        for (q, v) in Self::LEVELS.iter().zip(self.quantiles) {
            t.push(vec![format!("q{}", q * 100.0), num(v)]);
        }
        t.push(vec!["mean".into(), num(self.mean)]);
        t.push(vec!["max".into(), num(self.max)]);
        for &(th, c) in &self.exceedances {
            t.push(vec![format!("above_{th}"), c.to_string()]);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub stats: TailStats,
    /// `Delta E` per successful sample, in sample order.
    pub samples: Vec<f64>,
    /// `(sample index, message)`.
    pub failures: Vec<(usize, String)>,
}

/// `Delta E = E(theta0) - E_exact` over `n_samples` disordered copies of `base`.
///
/// Sample `i` perturbs positions with seed `seed ^ i`; random angles use a
/// separate stream of the same seed. Failing samples are dropped and listed
/// as long as they stay below 1 % of the total.
#[allow(clippy::too_many_arguments)]
pub fn init_error_tail<B>(
    strategy: &InitStrategy,
    base: &MolecularGeometry,
    builder: B,
    spec: &AnsatzSpec,
    n_samples: usize,
    sigma_pos: f64,
    seed: u64,
    thresholds: &[f64],
) -> Result<TailReport, DiagnosticsError>
where
    B: Fn(&MolecularGeometry) -> Result<QubitHamiltonian, HamiltonianError> + Sync,
{
    if n_samples < TAIL_MIN_SAMPLES {
        return Err(DiagnosticsError::InvalidInput(format!(
            "tail statistics need at least {TAIL_MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    let results: Vec<Result<f64, DiagnosticsError>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let s = seed ^ i as u64;
            let geom = perturb_positions(base, sigma_pos, s)?;
            let h = builder(&geom)?;
            spec.check_hamiltonian(&h)?;
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            rng.set_stream(1);
            let theta = strategy.theta0(spec, &geom, &h, &mut rng)?;
            let e0 = h.ground_state(&Default::default())?.ground_energy;
            Ok(circuit::energy(spec, &theta, &h)? - e0)
        })
        .collect();
    let mut samples = Vec::with_capacity(n_samples);
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => samples.push(v),
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    if failures.len() * 100 >= n_samples {
        return Err(DiagnosticsError::TooManyFailures {
            failed: failures.len(),
            total: n_samples,
            first: failures[0].1.clone(),
        });
    }
    Ok(TailReport {
        stats: TailStats::from_samples(&samples, thresholds),
        samples,
        failures,
    })
}

/// Counts of `samples` in `n_bins` logarithmic bins spanning
/// `[floor, max]`; values below `floor` land in the first bin.
/// Rows are `(lower edge, upper edge, count)`.
pub fn tail_histogram(
    samples: &[f64],
    n_bins: usize,
    floor: f64,
) -> Result<CsvTable, DiagnosticsError> {
    if n_bins == 0 || !(floor > 0.0) {
        return Err(DiagnosticsError::InvalidInput(
            "need n_bins >= 1 and floor > 0".into(),
        ));
    }
    let top = samples.iter().copied().fold(floor, f64::max) * (1.0 + 1e-12);
    let (lo, hi) = (floor.log10(), top.log10().max(floor.log10() + 1e-12));
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &x in samples {
        let b = if x <= floor {
            0
        } else {
            (((x.log10() - lo) / width) as usize).min(n_bins - 1)
        };
        counts[b] += 1;
    }
    let mut t = CsvTable::new(&["lower", "upper", "count"]);
    for (b, c) in counts.iter().enumerate() {
        let edge = |k: usize| 10f64.powf(lo + width * k as f64);
        t.push(vec![num(edge(b)), num(edge(b + 1)), c.to_string()]);
    }
    Ok(t)
}
