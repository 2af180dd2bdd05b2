//! Dense complex linear algebra over multi-qubit spaces.
//!
//! Provides the two carrier types [`StateVector`] and [`ComplexOperator`],
//! Kronecker products, Hermitian matrix exponentials via eigendecomposition,
//! inner products and the phase-insensitive fidelity. Qubit 1 is the leftmost
//! tensor factor (most significant bit of the basis index).

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Hard cap on the register size; dense storage only.
pub const MAX_QUBITS: usize = 12;

/// Default tolerance for Hermiticity checks.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Default tolerance for unitarity checks.
pub const UNITARITY_TOL: f64 = 1e-10;
/// Default tolerance for norm checks.
pub const NORM_TOL: f64 = 1e-9;

fn check_qubits(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 {
        return Err(Error::ConfigInvalid("need at least one qubit".into()));
    }
    if n_qubits > MAX_QUBITS {
        return Err(Error::TooManyQubits(n_qubits));
    }
    Ok(())
}

/// A pure state of `n_qubits` qubits as a dense amplitude vector of length
/// `2^n_qubits`. Sub-normalized vectors are permitted inside measurement
/// branching where the squared norm carries the branch probability.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Array1<C64>,
    n_qubits: usize,
}

impl StateVector {
    pub fn new(n_qubits: usize, amps: Array1<C64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        if amps.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch {
                left: amps.len(),
                right: 1 << n_qubits,
            });
        }
        Ok(Self { amps, n_qubits })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1 << n_qubits;
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, len: dim });
        }
        let mut amps = Array1::zeros(dim);
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { amps, n_qubits })
    }

    /// The all-ones product state `|1…1⟩`.
    pub fn all_ones(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, (1 << n_qubits) - 1)
    }

    pub fn zeros(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        Ok(Self {
            amps: Array1::zeros(1 << n_qubits),
            n_qubits,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &Array1<C64> {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut Array1<C64> {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::NotNormalized { norm: 0.0 });
        }
        let mut out = self.clone();
        out.amps.mapv_inplace(|a| a / n);
        Ok(out)
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.clone();
        out.amps.mapv_inplace(|a| a * factor);
        out
    }

    /// Kronecker product `self ⊗ other` (self occupies the leading qubits).
    pub fn kron(&self, other: &StateVector) -> Result<Self> {
        let n = self.n_qubits + other.n_qubits;
        check_qubits(n)?;
        let mut amps = Array1::zeros(self.dim() * other.dim());
        for (i, a) in self.amps.iter().enumerate() {
            for (j, b) in other.amps.iter().enumerate() {
                amps[i * other.dim() + j] = a * b;
            }
        }
        Ok(Self { amps, n_qubits: n })
    }
}

/// A dense operator on `n_qubits` qubits, stored as a `2^n × 2^n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexOperator {
    mat: Array2<C64>,
    n_qubits: usize,
}

impl ComplexOperator {
    pub fn new(n_qubits: usize, mat: Array2<C64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1 << n_qubits;
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::DimensionMismatch {
                left: mat.nrows(),
                right: dim,
            });
        }
        Ok(Self { mat, n_qubits })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        Ok(Self {
            mat: Array2::eye(1 << n_qubits),
            n_qubits,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn dagger(&self) -> Self {
        let mut mat = Array2::zeros((self.dim(), self.dim()));
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                mat[[i, j]] = self.mat[[j, i]].conj();
            }
        }
        Self {
            mat,
            n_qubits: self.n_qubits,
        }
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &ComplexOperator) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(Self {
            mat: self.mat.dot(&other.mat),
            n_qubits: self.n_qubits,
        })
    }

    /// Apply to a state: `self · |v⟩`.
    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if self.dim() != v.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: v.dim(),
            });
        }
        Ok(StateVector {
            amps: self.mat.dot(v.amps()),
            n_qubits: v.n_qubits,
        })
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.clone();
        out.mat.mapv_inplace(|a| a * factor);
        out
    }

    pub fn add(&self, other: &ComplexOperator) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(Self {
            mat: &self.mat + &other.mat,
            n_qubits: self.n_qubits,
        })
    }

    /// Max-norm of `self − self†`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in i..self.dim() {
                let d = (self.mat[[i, j]] - self.mat[[j, i]].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Max-norm of `U†U − I`.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.dagger().mat.dot(&self.mat);
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let expect = if i == j {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                };
                worst = worst.max((prod[[i, j]] - expect).norm());
            }
        }
        worst
    }

    /// Elementwise max-norm distance to another operator.
    pub fn max_distance(&self, other: &ComplexOperator) -> f64 {
        let mut worst = 0.0f64;
        for (a, b) in self.mat.iter().zip(other.mat.iter()) {
            worst = worst.max((a - b).norm());
        }
        worst
    }
}

/// Kronecker product of two operators; dimensions multiply.
pub fn kron(a: &ComplexOperator, b: &ComplexOperator) -> Result<ComplexOperator> {
    let n = a.n_qubits + b.n_qubits;
    check_qubits(n)?;
    let (da, db) = (a.dim(), b.dim());
    let mut mat = Array2::zeros((da * db, da * db));
    for i in 0..da {
        for j in 0..da {
            let aij = a.mat[[i, j]];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..db {
                for l in 0..db {
                    mat[[i * db + k, j * db + l]] = aij * b.mat[[k, l]];
                }
            }
        }
    }
    ComplexOperator::new(n, mat)
}

/// Inner product of two states, `⟨a|b⟩`, conjugate-linear in the first argument.
pub fn inner_states(a: &StateVector, b: &StateVector) -> Result<C64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(a.amps
        .iter()
        .zip(b.amps.iter())
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// Hilbert–Schmidt inner product of two operators, `tr(a† · b)`.
pub fn inner_operators(a: &ComplexOperator, b: &ComplexOperator) -> Result<C64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(a.mat
        .iter()
        .zip(b.mat.iter())
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// `|⟨a|b⟩|²` for unit-norm states; invariant under global phases.
pub fn fidelity_up_to_phase(a: &StateVector, b: &StateVector) -> Result<f64> {
    for s in [a, b] {
        let n = s.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm: n });
        }
    }
    Ok(inner_states(a, b)?.norm_sqr())
}

/// Eigendecomposition of a Hermitian operator: ascending eigenvalues and a
/// unitary matrix whose columns are the eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: Array2<C64>,
}

/// Cyclic Jacobi eigensolver for complex Hermitian matrices. Dimensions in
/// this crate stay at or below 2^12, where the quadratic-per-sweep cost is
/// acceptable and the result is accurate to near machine precision.
pub fn eigh(h: &ComplexOperator, tol: f64) -> Result<HermitianEig> {
    let defect = h.hermiticity_defect();
    if defect > tol {
        return Err(Error::NonHermitian { defect, tol });
    }
    let d = h.dim();
    let mut a = h.mat.clone();
    // Symmetrize to kill roundoff-level asymmetry before rotating.
    for i in 0..d {
        for j in (i + 1)..d {
            let m = (a[[i, j]] + a[[j, i]].conj()) * 0.5;
            a[[i, j]] = m;
            a[[j, i]] = m.conj();
        }
        a[[i, i]] = C64::new(a[[i, i]].re, 0.0);
    }
    let mut v: Array2<C64> = Array2::eye(d);
    let scale: f64 = a
        .iter()
        .map(|x| x.norm_sqr())
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let off_tol = 1e-15 * scale;

    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for i in 0..d {
            for j in (i + 1)..d {
                off += a[[i, j]].norm_sqr();
            }
        }
        if off.sqrt() <= off_tol {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[[p, q]];
                let r = apq.norm();
                if r <= off_tol / (d as f64) {
                    continue;
                }
                let phase = apq / r;
                let app = a[[p, p]].re;
                let aqq = a[[q, q]].re;
                let tau = (aqq - app) / (2.0 * r);
                // Small-magnitude root of t² − 2τt − 1 = 0.
                let t = if tau >= 0.0 {
                    -1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Column rotation: A ← A·J with J[p,p]=c, J[p,q]=−s·phase,
                // J[q,p]=s·conj(phase), J[q,q]=c.
                for i in 0..d {
                    let aip = a[[i, p]];
                    let aiq = a[[i, q]];
                    a[[i, p]] = aip * c + aiq * s * phase.conj();
                    a[[i, q]] = -aip * s * phase + aiq * c;
                }
                // Row rotation: A ← J†·A.
                for i in 0..d {
                    let api = a[[p, i]];
                    let aqi = a[[q, i]];
                    a[[p, i]] = api * c + aqi * s * phase;
                    a[[q, i]] = -api * s * phase.conj() + aqi * c;
                }
                a[[p, q]] = C64::new(0.0, 0.0);
                a[[q, p]] = C64::new(0.0, 0.0);
                a[[p, p]] = C64::new(a[[p, p]].re, 0.0);
                a[[q, q]] = C64::new(a[[q, q]].re, 0.0);
                for i in 0..d {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = vip * c + viq * s * phase.conj();
                    v[[i, q]] = -vip * s * phase + viq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[[i, i]].re.partial_cmp(&a[[j, j]].re).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[[i, i]].re).collect();
    let mut vectors = Array2::zeros((d, d));
    for (col, &src) in order.iter().enumerate() {
        for row in 0..d {
            vectors[[row, col]] = v[[row, src]];
        }
    }
    Ok(HermitianEig { values, vectors })
}

/// `exp(−i·theta·h)` for Hermitian `h`, computed from the eigendecomposition.
/// The result is unitary to well below [`UNITARITY_TOL`].
pub fn expm_hermitian(h: &ComplexOperator, theta: f64) -> Result<ComplexOperator> {
    expm_hermitian_with_tol(h, theta, HERMITICITY_TOL)
}

/// Same as [`expm_hermitian`] with an explicit Hermiticity tolerance.
pub fn expm_hermitian_with_tol(
    h: &ComplexOperator,
    theta: f64,
    tol: f64,
) -> Result<ComplexOperator> {
    let eig = eigh(h, tol)?;
    Ok(reconstruct_exp(&eig, theta, h.n_qubits))
}

/// Rebuild `exp(−i·theta·H) = V·diag(e^{−iθλ})·V†` from cached eigenpairs.
pub fn reconstruct_exp(eig: &HermitianEig, theta: f64, n_qubits: usize) -> ComplexOperator {
    let d = eig.vectors.nrows();
    let mut scaled = eig.vectors.clone();
    for (col, &lambda) in eig.values.iter().enumerate() {
        let ph = C64::from_polar(1.0, -theta * lambda);
        for row in 0..d {
            scaled[[row, col]] *= ph;
        }
    }
    let mut vdag: Array2<C64> = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            vdag[[i, j]] = eig.vectors[[j, i]].conj();
        }
    }
    ComplexOperator {
        mat: scaled.dot(&vdag),
        n_qubits,
    }
}

/// Single-qubit Pauli X.
pub fn sigma_x() -> ComplexOperator {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    ComplexOperator::new(1, ndarray::array![[z, o], [o, z]]).unwrap()
}

/// Single-qubit Pauli Y.
pub fn sigma_y() -> ComplexOperator {
    let z = C64::new(0.0, 0.0);
    let i = C64::new(0.0, 1.0);
    ComplexOperator::new(1, ndarray::array![[z, -i], [i, z]]).unwrap()
}

/// Single-qubit Pauli Z.
pub fn sigma_z() -> ComplexOperator {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    ComplexOperator::new(1, ndarray::array![[o, z], [z, -o]]).unwrap()
}
