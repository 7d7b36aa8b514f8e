use super::DiagnosticsError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotCostEstimate {
    pub n_shots: u64,
    /// Ha.
    pub epsilon: f64,
    /// Ha².
    pub hamiltonian_variance: f64,
    pub n_steps_discovery: u64,
    pub n_steps_local: u64,
    /// `n_shots * (n_steps_discovery + n_steps_local)`.
    pub total_cost: u128,
}

/// Shots per energy evaluation at precision `epsilon`, `ceil(variance / epsilon^2)`.
pub fn shot_cost(
    variance: f64,
    epsilon: f64,
    n_steps_discovery: u64,
    n_steps_local: u64,
) -> Result<ShotCostEstimate, DiagnosticsError> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(DiagnosticsError::InvalidInput(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(DiagnosticsError::InvalidInput(format!(
            "variance must be finite and >= 0, got {variance}"
        )));
    }
    let ratio = variance / (epsilon * epsilon);
    // Ratios that are integers up to rounding in epsilon^2 must not round up.
    let nearest = ratio.round();
    let n_shots = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        ratio.ceil()
    } as u64;
    Ok(ShotCostEstimate {
        n_shots,
        epsilon,
        hamiltonian_variance: variance,
        n_steps_discovery,
        n_steps_local,
        total_cost: n_shots as u128 * (n_steps_discovery as u128 + n_steps_local as u128),
    })
}

/// Scan-level cost comparison for `K` geometries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PesAmortization {
    pub n_points: usize,
    /// `sum_i n_shots * t_shot * (disc_i + local_i)`.
    pub c_std: f64,
    /// `c_train + K * t_inf + sum_i n_shots * t_shot * local_i`.
    pub c_eq: f64,
}

impl PesAmortization {
    pub fn ratio(&self) -> f64 {
        self.c_std / self.c_eq
    }
}

/// `points` holds `(discovery_steps, local_steps)` per geometry; costs are in
/// the unit of `t_shot`, `t_inf` and `c_train`.
pub fn pes_amortization(
    n_shots: u64,
    t_shot: f64,
    points: &[(u64, u64)],
    c_train: f64,
    t_inf: f64,
) -> Result<PesAmortization, DiagnosticsError> {
    if [t_shot, c_train, t_inf]
        .iter()
        .any(|v| !(*v >= 0.0) || !v.is_finite())
    {
        return Err(DiagnosticsError::InvalidInput(
            "costs must be finite and >= 0".into(),
        ));
    }
    let per_step = n_shots as f64 * t_shot;
    let c_std = points.iter().map(|&(d, l)| per_step * (d + l) as f64).sum();
    let c_eq = c_train
        + points.len() as f64 * t_inf
        + points
            .iter()
            .map(|&(_, l)| per_step * l as f64)
            .sum::<f64>();
    Ok(PesAmortization {
        n_points: points.len(),
        c_std,
        c_eq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_variance_at_chemical_accuracy() {
        let s = shot_cost(1.0, 1.6e-3, 0, 1).unwrap();
        assert_eq!(s.n_shots, 390_625);
        let s = shot_cost(25.0, 1.6e-3, 0, 1).unwrap();
        assert_eq!(s.n_shots, 9_765_625);
    }

    #[test]
    fn doubling_epsilon_quarters_shots() {
        for var in [0.37, 2.5, 11.0, 25.0] {
            let a = shot_cost(var, 1e-3, 0, 0).unwrap().n_shots;
            let b = shot_cost(var, 2e-3, 0, 0).unwrap().n_shots;
            assert_eq!(b, a.div_ceil(4), "variance {var}");
        }
    }

    #[test]
    fn preidentified_basin_total() {
        let s = shot_cost(4.0, 0.01, 0, 30).unwrap();
        assert_eq!(s.total_cost, 40_000 * 30);
        let s = shot_cost(4.0, 0.01, 100, 30).unwrap();
        assert_eq!(s.total_cost, 40_000 * 130);
    }

    #[test]
    fn invalid_inputs() {
        assert!(shot_cost(1.0, 0.0, 0, 0).is_err());
        assert!(shot_cost(-1.0, 1e-3, 0, 0).is_err());
    }

    #[test]
    fn amortization_sums() {
        let a = pes_amortization(1000, 1e-3, &[(100, 10), (50, 20)], 500.0, 0.05).unwrap();
        assert!((a.c_std - 180.0).abs() < 1e-9);
        assert!((a.c_eq - (500.0 + 0.1 + 30.0)).abs() < 1e-9);
        assert!(a.ratio() < 1.0);
    }
}
