use rayon::prelude::*;

use super::{num, CsvTable, DiagnosticsError};
use crate::circuit::{self, AnsatzSpec};
use crate::hamiltonian::QubitHamiltonian;

/// Energies on `center + a * dir1 + b * dir2`, rows ordered by `a` then `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeGrid {
    pub resolution: usize,
    pub rows: Vec<(f64, f64, f64)>,
}

impl LandscapeGrid {
    pub fn minimum(&self) -> (f64, f64, f64) {
        *self
            .rows
            .iter()
            .min_by(|x, y| x.2.total_cmp(&y.2))
            .expect("grid is never empty")
    }

    pub fn to_table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["a", "b", "energy"]);
        for &(a, b, e) in &self.rows {
            t.push(vec![num(a), num(b), num(e)]);
        }
        t
    }
}

fn axis(half: f64, resolution: usize) -> Vec<f64> {
    if resolution == 1 {
        return vec![0.0];
    }
    (0..resolution)
        .map(|i| -half + 2.0 * half * i as f64 / (resolution - 1) as f64)
        .collect()
}

/// Two-dimensional energy slice with `resolution` points per axis spanning
/// `[-half, half]`; resolution 1 evaluates the center only.
pub fn landscape_grid(
    spec: &AnsatzSpec,
    center: &[f64],
    dir1: &[f64],
    dir2: &[f64],
    half_ranges: (f64, f64),
    resolution: usize,
    h: &QubitHamiltonian,
) -> Result<LandscapeGrid, DiagnosticsError> {
    spec.check_params(center)?;
    spec.check_params(dir1)?;
    spec.check_params(dir2)?;
    spec.check_hamiltonian(h)?;
    if resolution == 0 {
        return Err(DiagnosticsError::InvalidInput(
            "resolution must be >= 1".into(),
        ));
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    if (dot(dir1, dir1) - 1.0).abs() > 1e-8 || (dot(dir2, dir2) - 1.0).abs() > 1e-8 {
        return Err(DiagnosticsError::InvalidInput(
            "directions must have unit norm".into(),
        ));
    }
    if dot(dir1, dir2).abs() > 1e-8 {
        return Err(DiagnosticsError::InvalidInput(format!(
            "directions are not orthogonal: overlap {:e}",
            dot(dir1, dir2)
        )));
    }
    let (xs, ys) = (
        axis(half_ranges.0, resolution),
        axis(half_ranges.1, resolution),
    );
    let points: Vec<(f64, f64)> = xs
        .iter()
        .flat_map(|&a| ys.iter().map(move |&b| (a, b)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(a, b)| {
            let theta: Vec<f64> = center
                .iter()
                .zip(dir1.iter().zip(dir2))
                .map(|(c, (u, v))| c + a * u + b * v)
                .collect();
            Ok((a, b, circuit::energy(spec, &theta, h)?))
        })
        .collect::<Result<Vec<_>, DiagnosticsError>>()?;
    Ok(LandscapeGrid { resolution, rows })
}
