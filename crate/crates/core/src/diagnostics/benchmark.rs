use super::{num, CsvTable, DiagnosticsError};
use crate::circuit::{self, AnsatzSpec, ParameterVector};
use crate::hamiltonian::QubitHamiltonian;
use crate::precond::{qubit_map_of, PreconditionerModel};

#[derive(Debug, Clone)]
pub struct BenchmarkEntry {
    pub name: String,
    pub hamiltonian: QubitHamiltonian,
    pub spec: AnsatzSpec,
    /// Explicit initial angles; otherwise the model prediction is used.
    pub parameters: Option<ParameterVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub name: String,
    pub n_qubits: usize,
    pub e_ref: Option<f64>,
    pub delta_hf: Option<f64>,
    pub delta_peq: Option<f64>,
    /// `delta_hf / delta_peq`.
    pub improvement: Option<f64>,
    /// Reasons the row is incomplete; empty for complete rows.
    pub missing: Vec<String>,
}

impl BenchmarkRow {
    pub fn complete(&self) -> bool {
        self.missing.is_empty()
    }

    pub fn table(rows: &[Self]) -> CsvTable {
        let mut t = CsvTable::new(&[
            "system",
            "n_qubits",
            "e_ref",
            "delta_e_hf",
            "delta_e_peq",
            "improvement",
            "status",
        ]);
        let opt = |v: Option<f64>| v.map(num).unwrap_or_else(|| "-".into());
        for r in rows {
            t.push(vec![
                r.name.clone(),
                r.n_qubits.to_string(),
                opt(r.e_ref),
                opt(r.delta_hf),
                opt(r.delta_peq),
                opt(r.improvement),
                if r.complete() {
                    "ok".into()
                } else {
                    format!("incomplete: {}", r.missing.join("; "))
                },
            ]);
        }
        t
    }
}

fn row(
    entry: &BenchmarkEntry,
    model: Option<&PreconditionerModel>,
) -> Result<BenchmarkRow, DiagnosticsError> {
    let h = &entry.hamiltonian;
    let meta = h.metadata();
    entry.spec.check_hamiltonian(h)?;
    let mut missing = Vec::new();
    let e_ref = match meta.energies.fci {
        Some(e) => Some(e),
        None => match h.ground_state(&Default::default()) {
            Ok(r) => Some(r.ground_energy),
            Err(e) => {
                missing.push(format!("reference energy ({e})"));
                None
            }
        },
    };
    let e_hf = match &meta.hf_bitstring {
        Some(bits) => Some(h.basis_state_energy(bits)?),
        None => {
            missing.push("hf_bitstring".into());
            None
        }
    };
    let theta = match (&entry.parameters, model, &meta.geometry) {
        (Some(p), _, _) => Some(p.clone()),
        (None, Some(m), Some(g)) => {
            match qubit_map_of(h).and_then(|map| crate::precond::predict(m, g, &entry.spec, &map)) {
                Ok(p) => Some(p),
                Err(e) => {
                    missing.push(format!("prediction ({e})"));
                    None
                }
            }
        }
        (None, None, _) => {
            missing.push("model or parameters".into());
            None
        }
        (None, Some(_), None) => {
            missing.push("geometry".into());
            None
        }
    };
    let e_peq = theta
        .map(|t| circuit::energy(&entry.spec, t.as_slice(), h))
        .transpose()?;
    let delta_hf = e_hf.zip(e_ref).map(|(a, b)| a - b);
    let delta_peq = e_peq.zip(e_ref).map(|(a, b)| a - b);
    Ok(BenchmarkRow {
        name: entry.name.clone(),
        n_qubits: h.n_qubits(),
        e_ref,
        delta_hf,
        delta_peq,
        improvement: delta_hf.zip(delta_peq).map(|(a, b)| a / b),
        missing,
    })
}

/// Initialization errors of the Hartree-Fock state and of the predicted
/// angles against the reference energy (recorded FCI, else exact
/// diagonalization). Rows with missing metadata are kept and flagged.
pub fn benchmark_table(
    entries: &[BenchmarkEntry],
    model: Option<&PreconditionerModel>,
) -> Result<Vec<BenchmarkRow>, DiagnosticsError> {
    entries.iter().map(|e| row(e, model)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{HamiltonianMetadata, ReferenceEnergies};
    use crate::optim::{circuit_lbfgs, LbfgsConfig};

    fn with_meta(h: QubitHamiltonian, hf: Option<Vec<u8>>, fci: Option<f64>) -> QubitHamiltonian {
        let meta = HamiltonianMetadata {
            source: "synthetic".into(),
            hf_bitstring: hf,
            energies: ReferenceEnergies { hf: None, fci },
            ..HamiltonianMetadata::default()
        };
        h.with_metadata(meta).unwrap()
    }

    #[test]
    fn oracle_row_and_degenerate_row() {
        let spec = AnsatzSpec::new(2, 1).unwrap();
        let h = QubitHamiltonian::from_terms(2, vec![(0.5, "X0 X1"), (-0.4, "Z0"), (0.3, "Z1")])
            .unwrap();
        let cfg = LbfgsConfig {
            tol: 1e-14,
            ..LbfgsConfig::default()
        };
        let label =
            circuit_lbfgs(&spec, &h, &[0.2, 0.1, -0.3, 0.4, 0.5, -0.2, 0.1, 0.3], &cfg).unwrap();
        let h = with_meta(h, Some(vec![0, 1]), None);
        let entries = vec![
            BenchmarkEntry {
                name: "oracle".into(),
                hamiltonian: h,
                spec,
                parameters: Some(label.final_parameters),
            },
            BenchmarkEntry {
                name: "flat".into(),
                hamiltonian: with_meta(
                    QubitHamiltonian::from_terms(2, vec![(1.0, "Z0")]).unwrap(),
                    Some(vec![1, 0]),
                    Some(-1.0),
                ),
                spec,
                parameters: None,
            },
        ];
        let rows = benchmark_table(&entries, None).unwrap();
        let r = &rows[0];
        assert!(r.complete());
        assert!(r.delta_peq.unwrap() < 1e-6 && r.delta_peq.unwrap() > -1e-9);
        assert!(r.delta_hf.unwrap() > 0.1);
        assert!(r.improvement.unwrap().abs() > 1e4, "{r:?}");
        let flat = &rows[1];
        assert_eq!(flat.delta_hf, Some(0.0));
        assert!(!flat.complete() && flat.delta_peq.is_none());
        let text = BenchmarkRow::table(&rows).to_text();
        assert!(text.contains("incomplete: model or parameters"));
    }

    #[test]
    fn missing_bitstring_is_flagged() {
        let spec = AnsatzSpec::new(1, 0).unwrap();
        let h = with_meta(
            QubitHamiltonian::from_terms(1, vec![(1.0, "Z0")]).unwrap(),
            None,
            None,
        );
        let rows = benchmark_table(
            &[BenchmarkEntry {
                name: "z".into(),
                hamiltonian: h,
                spec,
                parameters: Some(ParameterVector::zeros(2)),
            }],
            None,
        )
        .unwrap();
        assert_eq!(rows[0].missing, vec!["hf_bitstring".to_string()]);
        assert_eq!(rows[0].e_ref, Some(-1.0));
        assert_eq!(rows[0].delta_peq, Some(2.0));
    }
}
