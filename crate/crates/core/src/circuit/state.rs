use num_complex::Complex64;

use super::CircuitError;

/// Dense `2^n` amplitude vector. Qubit 0 is the least significant bit of the
/// basis-state index.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero_state(n_qubits: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self {
            n_qubits,
            amplitudes,
        }
    }

    /// Computational basis state; `bits[q]` is the value of qubit `q`.
    pub fn basis_state(bits: &[u8]) -> Self {
        let n = bits.len();
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
        amplitudes[bits_to_index(bits)] = Complex64::new(1.0, 0.0);
        Self {
            n_qubits: n,
            amplitudes,
        }
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self, CircuitError> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(CircuitError::InvalidStateLength(len));
        }
        Ok(Self {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Statevector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.amplitudes.iter_mut().for_each(|a| *a *= inv);
        }
    }

    /// Multiplies by a global phase so the first amplitude with modulus above
    /// `1e-12` is real and positive.
    pub fn fix_global_phase(&mut self) {
        if let Some(lead) = self.amplitudes.iter().find(|a| a.norm() > 1e-12).copied() {
            let phase = lead.conj() / lead.norm();
            self.amplitudes.iter_mut().for_each(|a| *a *= phase);
        }
    }

    /// Applies the 2x2 unitary `[[u00, u01], [u10, u11]]` to `qubit`.
    pub fn apply_single(&mut self, qubit: usize, u: &[[Complex64; 2]; 2]) {
        let stride = 1usize << qubit;
        let dim = self.amplitudes.len();
        let amps = &mut self.amplitudes;
        let mut block = 0;
        while block < dim {
            for lo in block..block + stride {
                let hi = lo + stride;
                let a0 = amps[lo];
                let a1 = amps[hi];
                amps[lo] = u[0][0] * a0 + u[0][1] * a1;
                amps[hi] = u[1][0] * a0 + u[1][1] * a1;
            }
            block += 2 * stride;
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let cmask = 1usize << control;
        let tmask = 1usize << target;
        for idx in 0..self.amplitudes.len() {
            if idx & cmask != 0 && idx & tmask == 0 {
                self.amplitudes.swap(idx, idx | tmask);
            }
        }
    }
}

pub(crate) fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter()
        .enumerate()
        .filter(|(_, &b)| b != 0)
        .fold(0usize, |acc, (q, _)| acc | (1 << q))
}

/// `Ry(theta) * Rz(phi)` with `R_P(a) = exp(-i a P / 2)`: Rz acts on the state first.
pub fn ry_rz(theta: f64, phi: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (0.5 * theta).sin_cos();
    let em = Complex64::from_polar(1.0, -0.5 * phi);
    let ep = Complex64::from_polar(1.0, 0.5 * phi);
    [[em * c, -ep * s], [em * s, ep * c]]
}
