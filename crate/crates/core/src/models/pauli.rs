//! Multi-qubit Pauli algebra in a sparse "signed permutation" form.
//!
//! Every tensor product of single-qubit Paulis has exactly one nonzero entry
//! per row, with value in `{±1, ±i}`. Storing the column index and phase per
//! row lets traces against a density matrix and density-matrix reconstruction
//! run in `O(2^q)` per Pauli instead of dense `O(4^q)` matrix arithmetic.
//!
//! Indexing: a Pauli label `k ∈ [0, 4^q)` decomposes in base 4 as
//! `k = k₁ + 4 k₂ + … + 4^{q−1} k_q`, with digit `k_t` naming the Pauli
//! (0 = I, 1 = X, 2 = Y, 3 = Z) on qubit `t`. Qubit 1 is the most significant
//! bit of the computational-basis row index.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// One Pauli tensor product on `q` qubits: row `i` of the matrix has its only
/// nonzero at column `cols[i]` with value `phases[i]`.
#[derive(Debug, Clone)]
pub(crate) struct PauliMonomial {
    cols: Vec<usize>,
    phases: Vec<Complex64>,
}

/// Column index and phase of row `b` (0 or 1) for the single-qubit Pauli with
/// digit `digit`.
fn single_qubit_entry(digit: usize, b: usize) -> (usize, Complex64) {
    match (digit, b) {
        (0, b) => (b, Complex64::new(1.0, 0.0)),
        (1, b) => (1 - b, Complex64::new(1.0, 0.0)),
        (2, 0) => (1, Complex64::new(0.0, -1.0)),
        (2, 1) => (0, Complex64::new(0.0, 1.0)),
        (3, 0) => (0, Complex64::new(1.0, 0.0)),
        (3, 1) => (1, Complex64::new(-1.0, 0.0)),
        _ => unreachable!("Pauli digit out of range"),
    }
}

impl PauliMonomial {
    /// Builds the monomial for Pauli label `k` on `qubits` qubits.
    pub(crate) fn build(k: usize, qubits: usize) -> Self {
        let dim = 1usize << qubits;
        let mut cols = vec![0usize; dim];
        let mut phases = vec![Complex64::new(1.0, 0.0); dim];
        // Digit for qubit t (1-based) is (k / 4^{t−1}) mod 4; qubit t sits at
        // bit position q − t of the row index.
        for (row, (col_slot, phase_slot)) in cols.iter_mut().zip(phases.iter_mut()).enumerate() {
            let mut col = 0usize;
            let mut phase = Complex64::new(1.0, 0.0);
            for t in 0..qubits {
                let digit = (k >> (2 * t)) & 3;
                let bit_pos = qubits - 1 - t;
                let b = (row >> bit_pos) & 1;
                let (c, p) = single_qubit_entry(digit, b);
                col |= c << bit_pos;
                phase *= p;
            }
            *col_slot = col;
            *phase_slot = phase;
        }
        Self { cols, phases }
    }

    /// `Tr(ρ σ) = Σ_j phases[j] · ρ[cols[j], j]`.
    pub(crate) fn trace_with(&self, rho: &DMatrix<Complex64>) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, (&col, &phase)) in self.cols.iter().zip(self.phases.iter()).enumerate() {
            acc += phase * rho[(col, j)];
        }
        acc
    }

    /// Adds `coeff · σ` into `acc`.
    pub(crate) fn accumulate(&self, acc: &mut DMatrix<Complex64>, coeff: f64) {
        for (i, (&col, &phase)) in self.cols.iter().zip(self.phases.iter()).enumerate() {
            acc[(i, col)] += phase * coeff;
        }
    }
}

/// The full Pauli basis on `q` qubits, monomials cached for labels
/// `0 .. 4^q`.
#[derive(Debug, Clone)]
pub(crate) struct PauliBasis {
    qubits: usize,
    monomials: Vec<PauliMonomial>,
}

impl PauliBasis {
    pub(crate) fn new(qubits: usize) -> Self {
        let count = 1usize << (2 * qubits);
        let monomials = (0..count).map(|k| PauliMonomial::build(k, qubits)).collect();
        Self { qubits, monomials }
    }

    pub(crate) fn matrix_dim(&self) -> usize {
        1usize << self.qubits
    }

    #[cfg(test)]
    pub(crate) fn monomial(&self, k: usize) -> &PauliMonomial {
        &self.monomials[k]
    }

    /// Pauli expectation values `x_k = Tr(ρ σ_k)` for `k = 1 .. 4^q − 1`.
    /// The imaginary parts vanish for Hermitian `ρ` and are discarded.
    pub(crate) fn expectations(&self, rho: &DMatrix<Complex64>) -> Vec<f64> {
        (1..self.monomials.len())
            .map(|k| self.monomials[k].trace_with(rho).re)
            .collect()
    }

    /// Reconstructs `ρ = 2^{−q} (I + Σ_k x_k σ_k)` from expectation values.
    pub(crate) fn density(&self, x: &[f64]) -> DMatrix<Complex64> {
        let dim = self.matrix_dim();
        let norm = 1.0 / dim as f64;
        let mut rho = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        self.monomials[0].accumulate(&mut rho, norm);
        for (k, &xk) in x.iter().enumerate() {
            self.monomials[k + 1].accumulate(&mut rho, xk * norm);
        }
        rho
    }

    /// Draws a state from the Hilbert–Schmidt measure: `ρ = G G† / Tr(G G†)`
    /// with `G` a square Ginibre matrix (complex entries; real entries when
    /// `real_entries` is set, for rebit models). Returns the Pauli
    /// expectation vector.
    pub(crate) fn sample_hilbert_schmidt<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        real_entries: bool,
    ) -> Vec<f64> {
        let dim = self.matrix_dim();
        let g = DMatrix::from_fn(dim, dim, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = if real_entries {
                0.0
            } else {
                rng.sample(StandardNormal)
            };
            Complex64::new(re, im)
        });
        let mut rho = &g * g.adjoint();
        let trace: f64 = (0..dim).map(|i| rho[(i, i)].re).sum();
        rho /= Complex64::new(trace, 0.0);
        self.expectations(&rho)
    }
}
