//! Measurement models for qubit state tomography under randomly chosen Pauli
//! measurements, with optional estimation of the measurement visibility.
//!
//! A model maps a parameter vector to outcome probabilities. The state part
//! of the parameter vector is a Pauli expectation vector (or, for the
//! diagonal model, a single population `p`); when the visibility η is
//! estimated rather than known, it is appended as the last parameter.
//!
//! Two-outcome likelihood with visibility η for Pauli `σ_k`:
//! `Pr(±1 | x, η) = η (1 ± x_k)/2 + (1 − η)/2`, i.e. the ideal projective
//! probability mixed with a coin flip.

pub(crate) mod pauli;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::inference::{Datum, Outcome};
use pauli::PauliBasis;

/// Largest supported qubit count (the cached Pauli basis grows as `8^q`).
pub const MAX_QUBITS: usize = 7;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model needs at least one qubit")]
    ZeroQubits,
    #[error("{qubits} qubits exceed the supported maximum of {max}")]
    TooManyQubits { qubits: usize, max: usize },
    #[error("visibility must lie in [0, 1], got {value}")]
    InvalidVisibility { value: f64 },
    #[error("visibility interval [{lo}, {hi}] is not a nonempty subinterval of [0, 1]")]
    InvalidVisibilityInterval { lo: f64, hi: f64 },
    #[error("Pauli control index 0 is the identity and cannot be measured")]
    IdentityControl,
    #[error("Pauli control {control} out of range (model supports 1..={max})")]
    ControlOutOfRange { control: usize, max: usize },
    #[error("parameter vector has length {got}, model expects {expected}")]
    ParameterLength { expected: usize, got: usize },
    #[error("state vector has length {got}, expected 4^q − 1 = {expected}")]
    StateLength { expected: usize, got: usize },
}

/// Which Pauli product a measurement probes: an index `k ∈ [1, 4^q − 1]`
/// decomposed in base 4 as `k = k₁ + 4 k₂ + … + 4^{q−1} k_q`. The global
/// identity `k = 0` is excluded — it carries no information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliControl(usize);

impl PauliControl {
    pub fn new(index: usize) -> Result<Self, ModelError> {
        if index == 0 {
            return Err(ModelError::IdentityControl);
        }
        Ok(Self(index))
    }

    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for PauliControl {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "k={}", self.0)
    }
}

/// A Pauli expectation vector `x_k = Tr(ρ σ_k)` for `k = 1 .. 4^q − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    x: Vec<f64>,
}

impl StateVector {
    /// Validates that the length is `4^q − 1` for some `q ≥ 1`.
    pub fn new(x: Vec<f64>) -> Result<Self, ModelError> {
        let mut dim = 3usize;
        for _ in 1..=MAX_QUBITS {
            if x.len() == dim {
                return Ok(Self { x });
            }
            dim = 4 * dim + 3;
        }
        Err(ModelError::StateLength {
            expected: 3,
            got: x.len(),
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Whether the measurement visibility is known exactly or estimated along
/// with the state under a uniform prior on an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Visibility {
    Known(f64),
    Estimated { lo: f64, hi: f64 },
}

/// Parameter family of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Full `q`-qubit state: all `4^q − 1` Pauli expectations, under the
    /// Hilbert–Schmidt prior.
    Qubits { qubits: usize },
    /// Single-qubit state constrained to the real (x₁, x₃) disk: x₂ ≡ 0,
    /// measured with controls {X, Y} only, Hilbert–Schmidt prior with a real
    /// Ginibre matrix.
    Rebit,
    /// Diagonal qubit `ρ = p |0⟩⟨0| + (1−p) |1⟩⟨1|` with a uniform prior on
    /// `p`, measured along Z only. With estimated visibility this model's
    /// posterior develops the (p, η) degeneracy `η(2p−1) = const`.
    Diagonal,
}

/// A measurement model: parameter space, prior, likelihood, and the validity
/// predicate the resampler must respect.
#[derive(Debug, Clone)]
pub struct Model {
    kind: ModelKind,
    visibility: Visibility,
    basis: PauliBasis,
}

fn validate_visibility(visibility: Visibility) -> Result<(), ModelError> {
    match visibility {
        Visibility::Known(eta) => {
            if !(0.0..=1.0).contains(&eta) || !eta.is_finite() {
                return Err(ModelError::InvalidVisibility { value: eta });
            }
        }
        Visibility::Estimated { lo, hi } => {
            if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi > 1.0 || lo >= hi {
                return Err(ModelError::InvalidVisibilityInterval { lo, hi });
            }
        }
    }
    Ok(())
}

impl Model {
    /// Full `q`-qubit tomography model.
    pub fn qubits(qubits: usize, visibility: Visibility) -> Result<Self, ModelError> {
        if qubits == 0 {
            return Err(ModelError::ZeroQubits);
        }
        if qubits > MAX_QUBITS {
            return Err(ModelError::TooManyQubits {
                qubits,
                max: MAX_QUBITS,
            });
        }
        validate_visibility(visibility)?;
        Ok(Self {
            kind: ModelKind::Qubits { qubits },
            visibility,
            basis: PauliBasis::new(qubits),
        })
    }

    /// Rebit model (real single-qubit states).
    pub fn rebit(visibility: Visibility) -> Result<Self, ModelError> {
        validate_visibility(visibility)?;
        Ok(Self {
            kind: ModelKind::Rebit,
            visibility,
            basis: PauliBasis::new(1),
        })
    }

    /// Diagonal qubit model.
    pub fn diagonal(visibility: Visibility) -> Result<Self, ModelError> {
        validate_visibility(visibility)?;
        Ok(Self {
            kind: ModelKind::Diagonal,
            visibility,
            basis: PauliBasis::new(1),
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn visibility(&self) -> Visibility {
        self.visibility
    }

    /// Number of qubits of the underlying Hilbert space.
    pub fn qubit_count(&self) -> usize {
        match self.kind {
            ModelKind::Qubits { qubits } => qubits,
            ModelKind::Rebit | ModelKind::Diagonal => 1,
        }
    }

    /// Dimension of the state part of the parameter vector.
    pub fn state_dim(&self) -> usize {
        match self.kind {
            ModelKind::Qubits { qubits } => (1usize << (2 * qubits)) - 1,
            ModelKind::Rebit => 3,
            ModelKind::Diagonal => 1,
        }
    }

    /// Full parameter dimension (state plus η when estimated).
    pub fn param_dim(&self) -> usize {
        self.state_dim() + usize::from(self.estimates_visibility())
    }

    pub fn estimates_visibility(&self) -> bool {
        matches!(self.visibility, Visibility::Estimated { .. })
    }

    /// Largest admissible Pauli control index.
    pub fn max_control(&self) -> usize {
        match self.kind {
            ModelKind::Qubits { qubits } => (1usize << (2 * qubits)) - 1,
            ModelKind::Rebit | ModelKind::Diagonal => 3,
        }
    }

    /// Human-readable names for the parameter coordinates.
    pub fn parameter_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = match self.kind {
            ModelKind::Qubits { .. } | ModelKind::Rebit => {
                (1..=self.state_dim()).map(|k| format!("x{k}")).collect()
            }
            ModelKind::Diagonal => vec!["p".to_string()],
        };
        if self.estimates_visibility() {
            labels.push("eta".to_string());
        }
        labels
    }

    /// The two parameter coordinates worth plotting when the model is
    /// effectively planar: the rebit's (x₁, x₃) disk, or (p, η) for the
    /// diagonal model with estimated visibility.
    pub fn plot_coords(&self) -> Option<[usize; 2]> {
        match (self.kind, self.estimates_visibility()) {
            (ModelKind::Rebit, false) => Some([0, 2]),
            (ModelKind::Diagonal, true) => Some([0, 1]),
            _ => None,
        }
    }

    fn check_params(&self, params: &[f64]) -> Result<(), ModelError> {
        if params.len() != self.param_dim() {
            return Err(ModelError::ParameterLength {
                expected: self.param_dim(),
                got: params.len(),
            });
        }
        Ok(())
    }

    /// Visibility at the given parameter point.
    pub fn visibility_of(&self, params: &[f64]) -> f64 {
        match self.visibility {
            Visibility::Known(eta) => eta,
            Visibility::Estimated { .. } => params[params.len() - 1],
        }
    }

    /// The Bloch/Pauli expectation probed by control `k`, at `params`.
    fn bloch_component(&self, params: &[f64], k: usize) -> Result<f64, ModelError> {
        let max = self.max_control();
        if k == 0 || k > max {
            return Err(ModelError::ControlOutOfRange { control: k, max });
        }
        Ok(match self.kind {
            ModelKind::Qubits { .. } | ModelKind::Rebit => params[k - 1],
            ModelKind::Diagonal => {
                if k == 3 {
                    2.0 * params[0] - 1.0
                } else {
                    0.0
                }
            }
        })
    }

    /// Outcome probability `Pr(datum.outcome | params)` in [0, 1].
    ///
    /// The two outcomes' probabilities sum to exactly 1: the minus branch is
    /// computed as `1 − Pr(+1)`.
    pub fn likelihood(&self, params: &[f64], datum: &Datum) -> Result<f64, ModelError> {
        self.check_params(params)?;
        let x = self.bloch_component(params, datum.control.index())?;
        let m = self.visibility_of(params) * x;
        let p_plus = 0.5 * (1.0 + m);
        Ok(match datum.outcome {
            Outcome::Plus => p_plus,
            Outcome::Minus => 1.0 - p_plus,
        })
    }

    /// Validity predicate: the state part must describe a density matrix
    /// (eigenvalues ≥ −1e-9) and an estimated η must stay inside its prior
    /// interval. Resampled particles are rejected until they satisfy this.
    pub fn is_valid(&self, params: &[f64]) -> bool {
        if params.len() != self.param_dim() {
            return false;
        }
        if let Visibility::Estimated { lo, hi } = self.visibility {
            let eta = params[params.len() - 1];
            if !(lo..=hi).contains(&eta) {
                return false;
            }
        }
        match self.kind {
            ModelKind::Rebit => {
                if params[1] != 0.0 {
                    return false;
                }
                bloch_norm_valid(&params[0..3])
            }
            ModelKind::Qubits { qubits: 1 } => bloch_norm_valid(&params[0..3]),
            ModelKind::Qubits { .. } => {
                let rho = self.basis.density(&params[0..self.state_dim()]);
                density_psd(&rho)
            }
            ModelKind::Diagonal => (-1e-9..=1.0 + 1e-9).contains(&params[0]),
        }
    }

    /// Projects a parameter vector back onto constraints that hold exactly
    /// (the rebit freezes x₂ at zero). Other models leave it untouched.
    pub(crate) fn project_constraints(&self, params: &mut [f64]) {
        if self.kind == ModelKind::Rebit {
            params[1] = 0.0;
        }
    }

    /// Draws a parameter vector from the prior: Hilbert–Schmidt for states
    /// (real Ginibre for the rebit), uniform for the diagonal `p` and for an
    /// estimated η.
    pub fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut params = match self.kind {
            ModelKind::Qubits { .. } => self.basis.sample_hilbert_schmidt(rng, false),
            ModelKind::Rebit => {
                let mut x = self.basis.sample_hilbert_schmidt(rng, true);
                x[1] = 0.0;
                x
            }
            ModelKind::Diagonal => vec![rng.random::<f64>()],
        };
        if let Visibility::Estimated { lo, hi } = self.visibility {
            params.push(lo + (hi - lo) * rng.random::<f64>());
        }
        params
    }

    /// Draws a measurement control uniformly from the model's control set.
    pub fn random_control<R: Rng + ?Sized>(&self, rng: &mut R) -> PauliControl {
        let index = match self.kind {
            ModelKind::Qubits { .. } => 1 + rng.random_range(0..self.max_control()),
            ModelKind::Rebit => 1 + rng.random_range(0..2usize),
            ModelKind::Diagonal => 3,
        };
        PauliControl(index)
    }

    /// Simulates one measurement of `truth` under `control`.
    pub fn simulate_outcome<R: Rng + ?Sized>(
        &self,
        truth: &[f64],
        control: PauliControl,
        rng: &mut R,
    ) -> Result<Datum, ModelError> {
        let p_plus = self.likelihood(
            truth,
            &Datum {
                outcome: Outcome::Plus,
                control,
            },
        )?;
        let outcome = if rng.random::<f64>() < p_plus {
            Outcome::Plus
        } else {
            Outcome::Minus
        };
        Ok(Datum { outcome, control })
    }

    /// The state part of `params` as a full Pauli expectation vector
    /// (the diagonal model's `p` expands to `(0, 0, 2p−1)`).
    pub fn state_vector(&self, params: &[f64]) -> Result<StateVector, ModelError> {
        self.check_params(params)?;
        let x = match self.kind {
            ModelKind::Qubits { .. } | ModelKind::Rebit => params[0..self.state_dim()].to_vec(),
            ModelKind::Diagonal => vec![0.0, 0.0, 2.0 * params[0] - 1.0],
        };
        Ok(StateVector { x })
    }

    /// Reconstructs the density matrix `ρ = 2^{−q} (I + Σ_k x_k σ_k)`.
    pub fn reconstruct_density(&self, state: &StateVector) -> Result<DMatrix<Complex64>, ModelError> {
        let expected = (1usize << (2 * self.qubit_count())) - 1;
        if state.len() != expected {
            return Err(ModelError::StateLength {
                expected,
                got: state.len(),
            });
        }
        Ok(self.basis.density(state.as_slice()))
    }
}

/// Single-qubit validity: Bloch norm at most 1 (density-matrix eigenvalues
/// `(1 ± |x|)/2 ≥ −1e-9` means `|x| ≤ 1 + 2e-9`).
fn bloch_norm_valid(x: &[f64]) -> bool {
    let norm = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    norm <= 1.0 + 2e-9
}

/// Multi-qubit validity: ρ + 1e-9·I admits a Cholesky factorization, with an
/// eigenvalue check as the authoritative fallback when the factorization
/// stalls on a boundary state.
fn density_psd(rho: &DMatrix<Complex64>) -> bool {
    let dim = rho.nrows();
    let shifted = rho + DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(1e-9, 0.0);
    if hermitian_cholesky_ok(shifted) {
        return true;
    }
    let eigen = rho.clone().symmetric_eigen();
    eigen.eigenvalues.iter().all(|&l| l >= -1e-9)
}

/// Pivot-checked Hermitian Cholesky. The library factorization cannot serve
/// as a positive-definiteness test over ℂ — every complex number has a
/// square root, so it happily "factors" indefinite matrices — hence this
/// explicit variant that rejects on a nonpositive pivot.
fn hermitian_cholesky_ok(mut m: DMatrix<Complex64>) -> bool {
    let n = m.nrows();
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= m[(j, k)].norm_sqr();
        }
        if d <= 0.0 {
            return false;
        }
        let pivot = d.sqrt();
        m[(j, j)] = Complex64::new(pivot, 0.0);
        for i in (j + 1)..n {
            let mut v = m[(i, j)];
            for k in 0..j {
                v -= m[(i, k)] * m[(j, k)].conj();
            }
            m[(i, j)] = v / pivot;
        }
    }
    true
}
