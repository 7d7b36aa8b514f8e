use nalgebra::DMatrix;
use num_complex::Complex64;

use super::DiagnosticsError;
use crate::circuit::{AngleSlot, AnsatzSpec};
use crate::hamiltonian::{Pauli, QubitHamiltonian};

/// Largest register for the dense commutator.
pub const HAAR_MAX_QUBITS: usize = 6;

/// Half-Pauli generator `A = P / 2` on one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub qubit: usize,
    pub pauli: Pauli,
}

impl GeneratorSpec {
    /// Generator of parameter `k` under the ansatz layout.
    pub fn for_parameter(spec: &AnsatzSpec, k: usize) -> Self {
        let (qubit, _, slot) = spec.locate(k);
        let pauli = match slot {
            AngleSlot::Y => Pauli::Y,
            AngleSlot::Z => Pauli::Z,
        };
        Self { qubit, pauli }
    }

    fn dense(&self, n_qubits: usize) -> DMatrix<Complex64> {
        let d = 1usize << n_qubits;
        let m = self.pauli.matrix();
        let bit = 1usize << self.qubit;
        DMatrix::from_fn(d, d, |i, j| {
            if i & !bit != j & !bit {
                return Complex64::new(0.0, 0.0);
            }
            let (bi, bj) = (usize::from(i & bit != 0), usize::from(j & bit != 0));
            0.5 * m[bi][bj]
        })
    }
}

/// Haar-average variance of the gradient component driven by `generator`:
/// `(tr(G^2)/d - (tr(G)/d)^2) / (d + 1)` with `G = i[A, H]`.
pub fn haar_variance_prediction(
    h: &QubitHamiltonian,
    generator: &GeneratorSpec,
    d: usize,
) -> Result<f64, DiagnosticsError> {
    let n = h.n_qubits();
    if n > HAAR_MAX_QUBITS {
        return Err(DiagnosticsError::Cap {
            what: "qubit count",
            value: n,
            cap: HAAR_MAX_QUBITS,
        });
    }
    if d != h.dim() {
        return Err(DiagnosticsError::InvalidInput(format!(
            "d = {d} but the Hamiltonian has dimension {}",
            h.dim()
        )));
    }
    if generator.qubit >= n {
        return Err(DiagnosticsError::InvalidInput(format!(
            "generator qubit {} out of range",
            generator.qubit
        )));
    }
    let rows = h.to_dense();
    let hm = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
    let a = generator.dense(n);
    let g = (&a * &hm - &hm * &a) * Complex64::new(0.0, 1.0);
    let tr = g.trace();
    if tr.norm() > 1e-10 {
        return Err(DiagnosticsError::TraceNotZero(tr.norm()));
    }
    let df = d as f64;
    let tr_g2 = g.iter().map(|z| z.norm_sqr()).sum::<f64>() / df;
    let tr_g = tr.re / df;
    Ok((tr_g2 - tr_g * tr_g) / (df + 1.0))
}
