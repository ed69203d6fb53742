//! Composite Hilbert space of the reference qubit, the two transfer qubits
//! and the d-level interconnect.
//!
//! Factors are ordered `(R, Q1, IC, Q2)` and the basis index is row-major over
//! that list, so `q2` varies fastest:
//!
//! ```text
//! n = ((r * 2 + q1) * d + m) * 2 + q2
//! ```
//!
//! The reference factor has dimension 1 when it is absent, which lets the same
//! operator-building code serve plain dynamics and channel runs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense complex operator on some Hilbert space.
pub type Operator = DMatrix<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// One tensor factor of the composite system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Factor {
    Reference,
    Qubit1,
    Interconnect,
    Qubit2,
}

impl Factor {
    pub const ALL: [Factor; 4] = [
        Factor::Reference,
        Factor::Qubit1,
        Factor::Interconnect,
        Factor::Qubit2,
    ];

    pub fn slot(self) -> usize {
        match self {
            Factor::Reference => 0,
            Factor::Qubit1 => 1,
            Factor::Interconnect => 2,
            Factor::Qubit2 => 3,
        }
    }
}

/// Local dimensions `[dim_R, dim_Q1, dim_IC, dim_Q2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HilbertLayout {
    dims: [usize; 4],
}

impl HilbertLayout {
    pub fn new(d: usize, with_reference: bool) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(format!(
                "interconnect needs at least 2 levels, got {d}"
            )));
        }
        let r = if with_reference { 2 } else { 1 };
        Ok(Self { dims: [r, 2, d, 2] })
    }

    /// Layout of `Q1 ⊗ IC ⊗ Q2` alone.
    pub fn system(d: usize) -> Result<Self> {
        Self::new(d, false)
    }

    /// Layout of `R ⊗ Q1 ⊗ IC ⊗ Q2`.
    pub fn with_reference(d: usize) -> Result<Self> {
        Self::new(d, true)
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn factor_dim(&self, factor: Factor) -> usize {
        self.dims[factor.slot()]
    }

    pub fn interconnect_levels(&self) -> usize {
        self.dims[2]
    }

    pub fn has_reference(&self) -> bool {
        self.dims[0] == 2
    }

    pub fn reference_dim(&self) -> usize {
        self.dims[0]
    }

    /// The same layout with the reference factor dropped.
    pub fn without_reference(&self) -> Self {
        Self {
            dims: [1, 2, self.dims[2], 2],
        }
    }

    /// Dimension of `Q1 ⊗ IC ⊗ Q2`.
    pub fn system_dim(&self) -> usize {
        4 * self.dims[2]
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Basis index of `|r, q1, m, q2⟩`.
    pub fn index(&self, r: usize, q1: usize, m: usize, q2: usize) -> usize {
        debug_assert!(r < self.dims[0] && q1 < 2 && m < self.dims[2] && q2 < 2);
        ((r * 2 + q1) * self.dims[2] + m) * 2 + q2
    }

    /// Inverse of [`HilbertLayout::index`]: returns `[r, q1, m, q2]`.
    pub fn decompose(&self, mut n: usize) -> [usize; 4] {
        let q2 = n % 2;
        n /= 2;
        let m = n % self.dims[2];
        n /= self.dims[2];
        let q1 = n % 2;
        let r = n / 2;
        [r, q1, m, q2]
    }

    /// Excitation number `m + q1 + q2` of a basis state (reference excluded).
    pub fn excitations(&self, n: usize) -> usize {
        let [_, q1, m, q2] = self.decompose(n);
        m + q1 + q2
    }
}

/// Pure state over a [`HilbertLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub layout: HilbertLayout,
    pub amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn new(layout: HilbertLayout, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                found: amplitudes.len(),
            });
        }
        Ok(Self { layout, amplitudes })
    }

    pub fn basis(layout: HilbertLayout, index: usize) -> Self {
        let mut amplitudes = DVector::zeros(layout.dim());
        amplitudes[index] = ONE;
        Self { layout, amplitudes }
    }

    /// Product basis state `|r, q1, m, q2⟩`.
    pub fn product(layout: HilbertLayout, r: usize, q1: usize, m: usize, q2: usize) -> Self {
        Self::basis(layout, layout.index(r, q1, m, q2))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    /// `⟨ψ|op|ψ⟩`.
    pub fn expectation(&self, op: &Operator) -> C64 {
        self.amplitudes.dotc(&(op * &self.amplitudes))
    }
}

/// Density matrix over an ordered list of factor dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    pub matrix: Operator,
}

impl DensityMatrix {
    /// Wraps `matrix` without checking positivity; see [`DensityMatrix::validate`].
    pub fn new(dims: Vec<usize>, matrix: Operator) -> Result<Self> {
        let dim: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidDimension(format!("bad factor list {dims:?}")));
        }
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { dims, matrix })
    }

    /// Single-factor density matrix.
    pub fn plain(matrix: Operator) -> Result<Self> {
        let n = matrix.nrows();
        Self::new(vec![n], matrix)
    }

    pub fn from_pure(state: &StateVector) -> Self {
        let psi = &state.amplitudes;
        Self {
            dims: state.layout.dims().to_vec(),
            matrix: psi * psi.adjoint(),
        }
    }

    /// `½·1` on a qubit.
    pub fn maximally_mixed_qubit() -> Self {
        Self {
            dims: vec![2],
            matrix: Operator::identity(2, 2) * C64::new(0.5, 0.0),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Checks Hermiticity (1e-12), unit trace (1e-10) and positivity (−1e-10).
    pub fn validate(&self) -> Result<()> {
        let herm = max_abs(&(&self.matrix - self.matrix.adjoint()));
        if herm > 1e-12 {
            return Err(Error::NotDensityMatrix(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > 1e-10 {
            return Err(Error::NotDensityMatrix(format!("trace {tr} != 1")));
        }
        let min = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(Error::NotDensityMatrix(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(())
    }
}

/// Truncated annihilation operator `P_d a P_d`.
pub fn ladder_operator(d: usize) -> Result<Operator> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!(
            "ladder operator needs d >= 2, got {d}"
        )));
    }
    let mut a = Operator::zeros(d, d);
    for m in 0..d - 1 {
        a[(m, m + 1)] = C64::new(((m + 1) as f64).sqrt(), 0.0);
    }
    Ok(a)
}

/// Qubit lowering operator `|0⟩⟨1|`.
pub fn sigma_minus() -> Operator {
    let mut s = Operator::zeros(2, 2);
    s[(0, 1)] = ONE;
    s
}

/// Qubit raising operator `|1⟩⟨0|`.
pub fn sigma_plus() -> Operator {
    sigma_minus().adjoint()
}

/// `1 ⊗ … ⊗ op ⊗ … ⊗ 1`, with `op` in the slot of `factor`.
pub fn embed(op: &Operator, factor: Factor, layout: &HilbertLayout) -> Result<Operator> {
    let local = layout.factor_dim(factor);
    if op.nrows() != local || op.ncols() != local {
        return Err(Error::DimensionMismatch {
            expected: local,
            found: op.nrows().max(op.ncols()),
        });
    }
    let dims = layout.dims();
    let slot = factor.slot();
    let left: usize = dims[..slot].iter().product();
    let right: usize = dims[slot + 1..].iter().product();
    let id_left = Operator::identity(left, left);
    let id_right = Operator::identity(right, right);
    Ok(id_left.kronecker(op).kronecker(&id_right))
}

/// Excitation number `N = a†a + σ₁⁺σ₁⁻ + σ₂⁺σ₂⁻`, diagonal in the product basis.
pub fn number_operator(layout: &HilbertLayout) -> Operator {
    let diag = DVector::from_fn(layout.dim(), |n, _| {
        C64::new(layout.excitations(n) as f64, 0.0)
    });
    Operator::from_diagonal(&diag)
}

/// Parity `Π = exp(iπN)`.
pub fn parity_operator(layout: &HilbertLayout) -> Operator {
    let diag = DVector::from_fn(layout.dim(), |n, _| {
        if layout.excitations(n).is_multiple_of(2) {
            ONE
        } else {
            -ONE
        }
    });
    Operator::from_diagonal(&diag)
}

fn diagonal_projector(layout: &HilbertLayout, keep: impl Fn([usize; 4]) -> bool) -> Operator {
    let diag = DVector::from_fn(layout.dim(), |n, _| {
        if keep(layout.decompose(n)) {
            ONE
        } else {
            ZERO
        }
    });
    Operator::from_diagonal(&diag)
}

/// Projector onto the sector with at most one excitation.
pub fn projector_low_excitation(layout: &HilbertLayout) -> Operator {
    diagonal_projector(layout, |[_, q1, m, q2]| q1 + m + q2 <= 1)
}

/// Projector onto `|0⟩_Q1 ⊗ |0⟩_IC ⊗ (any Q2)`, reference unconstrained.
pub fn projector_target(layout: &HilbertLayout) -> Operator {
    diagonal_projector(layout, |[_, q1, m, _]| q1 == 0 && m == 0)
}

/// Traces out every factor not listed in `keep` (indices into `rho.dims()`).
///
/// The kept factors stay in their original relative order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let dims = rho.dims();
    if keep.is_empty() {
        return Err(Error::InvalidConfig(
            "partial trace needs a non-empty keep set".into(),
        ));
    }
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::InvalidDimension(format!(
            "factor index {bad} out of range for {} factors",
            dims.len()
        )));
    }

    // Row-major strides of the full index.
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !kept.contains(i)).collect();

    let offsets = |factors: &[usize]| -> Vec<usize> {
        let mut offs = vec![0usize];
        for &f in factors {
            let mut next = Vec::with_capacity(offs.len() * dims[f]);
            for &o in &offs {
                for v in 0..dims[f] {
                    next.push(o + v * strides[f]);
                }
            }
            offs = next;
        }
        offs
    };
    let keep_offsets = offsets(&kept);
    let trace_offsets = offsets(&traced);

    let n = keep_offsets.len();
    let mut out = Operator::zeros(n, n);
    for (a, &oa) in keep_offsets.iter().enumerate() {
        for (b, &ob) in keep_offsets.iter().enumerate() {
            let mut acc = ZERO;
            for &ot in &trace_offsets {
                acc += rho.matrix[(oa + ot, ob + ot)];
            }
            out[(a, b)] = acc;
        }
    }
    DensityMatrix::new(kept.iter().map(|&k| dims[k]).collect(), out)
}

/// Largest entry modulus.
pub fn max_abs(m: &Operator) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    a * b - b * a
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &Operator) -> Vec<f64> {
    let mut vals: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}
