//! Truncated Fock-space linear algebra: operators, states, tensor products,
//! coherent/cat-state constructors, fidelity and partial trace.
//!
//! Everything is dense. At the working dimensions (single mode N = 15, two
//! modes 225) dense storage beats sparse bookkeeping, and superoperators are
//! never materialized. All types are immutable after construction and safe to
//! share across threads.

use crate::error::{Error, Result};
use crate::numerics;
use crate::C64;
use ndarray::{Array1, Array2};

/// Per-mode Fock cutoffs. A cutoff N keeps the levels 0..N-1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeSpace {
    mode_dims: Vec<usize>,
}

impl ModeSpace {
    /// Build a multi-mode space; every cutoff must be at least 2.
    pub fn new(mode_dims: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = mode_dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidCutoff(bad));
        }
        if mode_dims.is_empty() {
            return Err(Error::InvalidCutoff(0));
        }
        Ok(Self { mode_dims })
    }

    /// Single mode with cutoff `n`.
    pub fn single(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    /// Two modes with a common cutoff `n`.
    pub fn two(n: usize) -> Result<Self> {
        Self::new(vec![n, n])
    }

    pub fn mode_dims(&self) -> &[usize] {
        &self.mode_dims
    }

    pub fn n_modes(&self) -> usize {
        self.mode_dims.len()
    }

    /// Total Hilbert-space dimension (product of cutoffs).
    pub fn dim(&self) -> usize {
        self.mode_dims.iter().product()
    }

    /// Concatenation of two spaces, as produced by tensor products.
    pub fn join(&self, other: &ModeSpace) -> ModeSpace {
        let mut dims = self.mode_dims.clone();
        dims.extend_from_slice(&other.mode_dims);
        ModeSpace { mode_dims: dims }
    }
}

/// Dense operator over a truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: ModeSpace,
    matrix: Array2<C64>,
}

impl Operator {
    /// Wrap a matrix; it must be square with the space's total dimension.
    pub fn new(space: ModeSpace, matrix: Array2<C64>) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: matrix.nrows(),
            });
        }
        Ok(Self { space, matrix })
    }

    pub fn zeros(space: ModeSpace) -> Self {
        let d = space.dim();
        Self {
            space,
            matrix: Array2::zeros((d, d)),
        }
    }

    pub fn identity(space: ModeSpace) -> Self {
        let d = space.dim();
        Self {
            space,
            matrix: Array2::eye(d),
        }
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Hermitian adjoint.
    pub fn dagger(&self) -> Operator {
        Operator {
            space: self.space.clone(),
            matrix: self.matrix.t().mapv(|z| z.conj()),
        }
    }

    pub fn scale(&self, s: C64) -> Operator {
        Operator {
            space: self.space.clone(),
            matrix: self.matrix.mapv(|z| z * s),
        }
    }

    /// Apply to a state vector. Panics on space mismatch.
    pub fn apply(&self, psi: &StateVector) -> StateVector {
        assert_eq!(
            self.space, psi.space,
            "operator and state live on different spaces"
        );
        StateVector {
            space: psi.space.clone(),
            amplitudes: self.matrix.dot(&psi.amplitudes),
        }
    }

    /// Maximum elementwise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                let dev = (self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm();
                worst = worst.max(dev);
            }
        }
        worst
    }
}

macro_rules! op_binop {
    ($trait:ident, $meth:ident, $op:tt) => {
        impl std::ops::$trait<&Operator> for &Operator {
            type Output = Operator;
            fn $meth(self, rhs: &Operator) -> Operator {
                assert_eq!(self.space, rhs.space, "operator spaces differ");
                Operator {
                    space: self.space.clone(),
                    matrix: &self.matrix $op &rhs.matrix,
                }
            }
        }
    };
}
op_binop!(Add, add, +);
op_binop!(Sub, sub, -);

impl std::ops::Mul<&Operator> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        Operator {
            space: self.space.clone(),
            matrix: self.matrix.dot(&rhs.matrix),
        }
    }
}

/// Pure state on a truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: ModeSpace,
    amplitudes: Array1<C64>,
}

impl StateVector {
    /// Wrap an amplitude vector without normalizing.
    pub fn new(space: ModeSpace, amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: amplitudes.len(),
            });
        }
        Ok(Self { space, amplitudes })
    }

    /// Fock basis state |n⟩ of a single mode (or |n1 n2⟩ etc. via index).
    pub fn basis_state(space: ModeSpace, index: usize) -> Result<Self> {
        let d = space.dim();
        if index >= d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: index,
            });
        }
        let mut amp = Array1::zeros(d);
        amp[index] = C64::new(1.0, 0.0);
        Ok(Self {
            space,
            amplitudes: amp,
        })
    }

    /// Multi-mode vacuum |0...0⟩.
    pub fn vacuum(space: ModeSpace) -> Self {
        Self::basis_state(space, 0).expect("vacuum index always valid")
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// ⟨self|other⟩. Panics on space mismatch.
    pub fn inner(&self, other: &StateVector) -> C64 {
        assert_eq!(self.space, other.space, "state spaces differ");
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Normalized copy.
    pub fn normalized(&self) -> StateVector {
        let n = self.norm();
        StateVector {
            space: self.space.clone(),
            amplitudes: self.amplitudes.mapv(|z| z / n),
        }
    }

    /// Tensor product |self⟩ ⊗ |other⟩.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let (da, db) = (self.dim(), other.dim());
        let mut amp = Array1::zeros(da * db);
        for i in 0..da {
            for j in 0..db {
                amp[i * db + j] = self.amplitudes[i] * other.amplitudes[j];
            }
        }
        StateVector {
            space: self.space.join(&other.space),
            amplitudes: amp,
        }
    }

    /// Density matrix |ψ⟩⟨ψ|.
    pub fn to_density(&self) -> DensityMatrix {
        let d = self.dim();
        let mut m = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                m[[i, j]] = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        DensityMatrix {
            space: self.space.clone(),
            matrix: m,
        }
    }
}

/// Hermitian, unit-trace system state.
///
/// Invariants: Hermitian within 1e-9 (max elementwise deviation), trace
/// within 1e-7 of 1, smallest eigenvalue >= -1e-7. [`DensityMatrix::new`]
/// enforces all three (including an eigenvalue check); internal constructors
/// that preserve them by construction skip the eigensolve.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: ModeSpace,
    matrix: Array2<C64>,
}

impl DensityMatrix {
    /// Validating constructor for externally supplied matrices.
    pub fn new(space: ModeSpace, matrix: Array2<C64>) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: matrix.nrows(),
            });
        }
        let rho = Self { space, matrix };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_parts_unchecked(space: ModeSpace, matrix: Array2<C64>) -> Self {
        Self { space, matrix }
    }

    /// Vacuum state |0...0⟩⟨0...0|.
    pub fn vacuum(space: ModeSpace) -> Self {
        StateVector::vacuum(space).to_density()
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diag().iter().sum()
    }

    /// tr ρ².
    pub fn purity(&self) -> f64 {
        let d = self.dim();
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += (self.matrix[[i, j]] * self.matrix[[j, i]]).re;
            }
        }
        s
    }

    /// tr(ρ A). Panics on space mismatch.
    pub fn expect(&self, op: &Operator) -> C64 {
        assert_eq!(self.space, op.space, "operator space differs");
        let d = self.dim();
        let mut s = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                s += self.matrix[[i, j]] * op.matrix[[j, i]];
            }
        }
        s
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                let dev = (self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm();
                worst = worst.max(dev);
            }
        }
        worst
    }

    /// Smallest eigenvalue (cyclic Jacobi; use for diagnostics and tests).
    pub fn min_eigenvalue(&self) -> f64 {
        numerics::eigvalsh(&self.matrix)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// Check all type invariants, including the eigenvalue bound.
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > 1e-9 {
            return Err(Error::InvalidDensity(format!(
                "hermiticity deviation {herm:.3e} > 1e-9"
            )));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-7 || tr.im.abs() > 1e-7 {
            return Err(Error::InvalidDensity(format!("trace {tr} not within 1e-7 of 1")));
        }
        let lam = self.min_eigenvalue();
        if lam < -1e-7 {
            return Err(Error::InvalidDensity(format!(
                "smallest eigenvalue {lam:.3e} < -1e-7"
            )));
        }
        Ok(())
    }
}

/// Annihilation operator on `mode_index`, embedded in the full space.
///
/// The single-mode matrix has entries a[n-1, n] = sqrt(n); other modes carry
/// identities via the tensor product.
pub fn annihilation(space: &ModeSpace, mode_index: usize) -> Result<Operator> {
    if mode_index >= space.n_modes() {
        return Err(Error::ModeIndex {
            index: mode_index,
            modes: space.n_modes(),
        });
    }
    let d = space.dim();
    let dims = space.mode_dims();
    let n_target = dims[mode_index];
    // stride of the target mode in the row-major composite index
    let stride: usize = dims[mode_index + 1..].iter().product();
    let mut m = Array2::zeros((d, d));
    for col in 0..d {
        let level = (col / stride) % n_target;
        if level > 0 {
            let row = col - stride;
            m[[row, col]] = C64::new((level as f64).sqrt(), 0.0);
        }
    }
    Ok(Operator {
        space: space.clone(),
        matrix: m,
    })
}

/// Number operator b†b on `mode_index`.
pub fn number_op(space: &ModeSpace, mode_index: usize) -> Result<Operator> {
    let a = annihilation(space, mode_index)?;
    Ok(&a.dagger() * &a)
}

/// Kronecker product; the resulting space concatenates the mode lists.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    let (da, db) = (a.dim(), b.dim());
    let mut m = Array2::zeros((da * db, da * db));
    for i in 0..da {
        for k in 0..da {
            let aik = a.matrix[[i, k]];
            if aik == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..db {
                for l in 0..db {
                    m[[i * db + j, k * db + l]] = aik * b.matrix[[j, l]];
                }
            }
        }
    }
    Operator {
        space: a.space.join(&b.space),
        matrix: m,
    }
}

/// Poisson weight of the truncated tail: the |α⟩ population above the cutoff.
pub fn coherent_tail_mass(alpha: C64, n: usize) -> f64 {
    let amps = coherent_amplitudes(alpha, n);
    let captured: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    (1.0 - captured).max(0.0)
}

fn coherent_amplitudes(alpha: C64, n: usize) -> Array1<C64> {
    // c_{k+1} = c_k * alpha / sqrt(k+1), seeded by the e^{-|a|^2/2} prefactor,
    // avoids factorial overflow.
    let mut c = Array1::zeros(n);
    c[0] = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for k in 1..n {
        c[k] = c[k - 1] * alpha / C64::new((k as f64).sqrt(), 0.0);
    }
    c
}

/// Truncated coherent state |α⟩, renormalized after the cutoff.
///
/// The truncation tail is available from [`coherent_tail_mass`]; callers with
/// |α|² approaching N should treat a tail above 1e-4 as a warning diagnostic.
pub fn coherent_state(alpha: C64, n: usize) -> Result<StateVector> {
    let space = ModeSpace::single(n)?;
    let amps = coherent_amplitudes(alpha, n);
    let sv = StateVector {
        space,
        amplitudes: amps,
    };
    Ok(sv.normalized())
}

/// Even cat state (|α⟩ + |-α⟩)/sqrt(2 + ε_s), normalized in the truncated space.
pub fn cat_state(alpha: C64, n: usize) -> Result<StateVector> {
    let plus = coherent_state(alpha, n)?;
    let minus = coherent_state(-alpha, n)?;
    let amps = &plus.amplitudes + &minus.amplitudes;
    let sv = StateVector {
        space: plus.space,
        amplitudes: amps,
    };
    Ok(sv.normalized())
}

/// Entangled two-mode cat (|α⟩⊗|-α⟩ + |-α⟩⊗|α⟩)/sqrt(2 + ε_ent).
pub fn entangled_cat(alpha: C64, n: usize) -> Result<StateVector> {
    let plus = coherent_state(alpha, n)?;
    let minus = coherent_state(-alpha, n)?;
    let pm = plus.tensor(&minus);
    let mp = minus.tensor(&plus);
    let sv = StateVector {
        space: pm.space,
        amplitudes: &pm.amplitudes + &mp.amplitudes,
    };
    Ok(sv.normalized())
}

/// Separable two-mode cat: cat(α) ⊗ cat(α).
pub fn separable_cat(alpha: C64, n: usize) -> Result<StateVector> {
    let c = cat_state(alpha, n)?;
    Ok(c.tensor(&c))
}

/// Normalization correction of the single-mode cat: ε_s = 2 e^{-2|α|²}.
pub fn eps_s(alpha: C64) -> f64 {
    2.0 * (-2.0 * alpha.norm_sqr()).exp()
}

/// Normalization correction of the separable cat: ε_sep = 2 e^{-2|α|²}.
pub fn eps_sep(alpha: C64) -> f64 {
    eps_s(alpha)
}

/// Normalization correction of the entangled cat: ε_ent = 2 e^{-4|α|²}.
pub fn eps_ent(alpha: C64) -> f64 {
    2.0 * (-4.0 * alpha.norm_sqr()).exp()
}

/// Closed-form coherent overlap ⟨β|α⟩ = exp[-(|α|²+|β|²)/2 + β*α].
pub fn coherent_overlap(beta: C64, alpha: C64) -> C64 {
    let ex = -(alpha.norm_sqr() + beta.norm_sqr()) / 2.0;
    (C64::new(ex, 0.0) + beta.conj() * alpha).exp()
}

/// ⟨ψ|ρ|ψ⟩, clamped to [0, 1] against rounding.
pub fn fidelity(rho: &DensityMatrix, psi: &StateVector) -> Result<f64> {
    if rho.dim() != psi.dim() || rho.space != *psi.space() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: psi.dim(),
        });
    }
    let d = rho.dim();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..d {
        let mut row = C64::new(0.0, 0.0);
        for j in 0..d {
            row += rho.matrix[[i, j]] * psi.amplitudes[j];
        }
        s += psi.amplitudes[i].conj() * row;
    }
    debug_assert!(s.im.abs() <= 1e-10, "fidelity imaginary residue {}", s.im);
    Ok(s.re.clamp(0.0, 1.0))
}

/// Trace out one mode of a two-mode state, keeping `keep_mode`.
pub fn partial_trace(rho: &DensityMatrix, keep_mode: usize) -> Result<DensityMatrix> {
    let dims = rho.space.mode_dims();
    if dims.len() != 2 {
        return Err(Error::NotTwoMode(dims.len()));
    }
    if keep_mode >= 2 {
        return Err(Error::ModeIndex {
            index: keep_mode,
            modes: 2,
        });
    }
    let (d1, d2) = (dims[0], dims[1]);
    let m = &rho.matrix;
    let (dk, reduced) = if keep_mode == 0 {
        let mut r = Array2::zeros((d1, d1));
        for i in 0..d1 {
            for k in 0..d1 {
                let mut s = C64::new(0.0, 0.0);
                for j in 0..d2 {
                    s += m[[i * d2 + j, k * d2 + j]];
                }
                r[[i, k]] = s;
            }
        }
        (d1, r)
    } else {
        let mut r = Array2::zeros((d2, d2));
        for j in 0..d2 {
            for l in 0..d2 {
                let mut s = C64::new(0.0, 0.0);
                for i in 0..d1 {
                    s += m[[i * d2 + j, i * d2 + l]];
                }
                r[[j, l]] = s;
            }
        }
        (d2, r)
    };
    Ok(DensityMatrix {
        space: ModeSpace::single(dk)?,
        matrix: reduced,
    })
}
