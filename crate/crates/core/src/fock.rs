//! Truncated number-basis linear algebra.
//!
//! A state with truncation `nmax` has `nmax + 1` amplitudes for |0⟩..|nmax⟩.
//! Storage is dense; dimensions stay below a few hundred.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::phase;
use crate::C64;

/// Largest Poisson tail mass tolerated when building a coherent state.
pub const TAIL_TOL: f64 = 1e-10;

/// Hermiticity tolerance relative to the operator's largest entry.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Default truncation for a coherent amplitude |α|:
/// ceil(|α|² + 8√(|α|² + 1) + 10).
pub fn auto_nmax(alpha_abs: f64) -> usize {
    let n = alpha_abs * alpha_abs;
    (n + 8.0 * (n + 1.0).sqrt() + 10.0).ceil() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    amps: DVector<C64>,
}

impl FockState {
    pub fn from_amplitudes(amps: DVector<C64>) -> Self {
        assert!(!amps.is_empty(), "a Fock state needs at least one level");
        Self { amps }
    }

    pub fn zeros(nmax: usize) -> Self {
        Self::from_amplitudes(DVector::zeros(nmax + 1))
    }

    pub fn vacuum(nmax: usize) -> Self {
        Self::number(0, nmax)
    }

    pub fn number(n: usize, nmax: usize) -> Self {
        assert!(n <= nmax);
        let mut s = Self::zeros(nmax);
        s.amps[n] = C64::new(1.0, 0.0);
        s
    }

    /// Coherent state without the tail check; returns the discarded mass too.
    pub fn coherent_with_tail(alpha: C64, nmax: usize) -> (Self, f64) {
        let mut amps = DVector::zeros(nmax + 1);
        let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        amps[0] = c;
        for n in 1..=nmax {
            c = c * alpha / (n as f64).sqrt();
            amps[n] = c;
        }
        let kept: f64 = amps.iter().map(|a: &C64| a.norm_sqr()).sum();
        let tail = (1.0 - kept).max(0.0);
        let mut s = Self { amps };
        s.normalize();
        (s, tail)
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amps
    }

    pub fn nmax(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amps /= C64::new(n, 0.0);
        }
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &FockState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// |⟨self|other⟩|², insensitive to global phase.
    pub fn fidelity(&self, other: &FockState) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.amps.iter().enumerate().map(|(n, a)| n as f64 * a.norm_sqr()).sum::<f64>() / self.norm_sqr()
    }

    /// ⟨ψ|A|ψ⟩ / ⟨ψ|ψ⟩.
    pub fn expect(&self, op: &FockOperator) -> C64 {
        self.inner(&op.apply(self)) / self.norm_sqr()
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self::from_amplitudes(&self.amps * c)
    }

    pub fn add(&self, other: &FockState) -> Self {
        Self::from_amplitudes(&self.amps + &other.amps)
    }

    /// Rotates the state so its largest amplitude is real and positive.
    pub fn strip_global_phase(&self) -> Self {
        let (imax, _) = self
            .amps
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, a)| if a.norm() > acc.1 { (i, a.norm()) } else { acc });
        let a = self.amps[imax];
        if a.norm() == 0.0 {
            return self.clone();
        }
        self.scaled(a.conj() / a.norm())
    }

    /// |ψ⟩⟨ψ|.
    pub fn projector(&self) -> FockOperator {
        FockOperator::from_matrix(&self.amps * self.amps.adjoint())
    }

    /// Zero-pads or truncates to a new `nmax`.
    pub fn resized(&self, nmax: usize) -> Self {
        let mut amps = DVector::zeros(nmax + 1);
        let k = self.dim().min(nmax + 1);
        amps.rows_mut(0, k).copy_from(&self.amps.rows(0, k));
        Self::from_amplitudes(amps)
    }
}

/// Normalized coherent state |α⟩ truncated at `nmax`; errors if the discarded
/// Poisson tail exceeds [`TAIL_TOL`].
pub fn coherent_state(alpha: C64, nmax: usize) -> Result<FockState> {
    let (s, tail) = FockState::coherent_with_tail(alpha, nmax);
    if tail > TAIL_TOL {
        return Err(Error::Truncation { nmax, tail, tol: TAIL_TOL });
    }
    Ok(s)
}

/// Dense square complex matrix on a truncated Fock space (or any finite space).
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    m: DMatrix<C64>,
}

impl FockOperator {
    pub fn from_matrix(m: DMatrix<C64>) -> Self {
        assert!(m.is_square(), "operators are square");
        Self { m }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_matrix(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(d: &[C64]) -> Self {
        Self::from_matrix(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    /// Annihilation operator: ⟨n−1|a|n⟩ = √n.
    pub fn annihilation(nmax: usize) -> Self {
        let mut m = DMatrix::zeros(nmax + 1, nmax + 1);
        for n in 1..=nmax {
            m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
        }
        Self::from_matrix(m)
    }

    pub fn creation(nmax: usize) -> Self {
        Self::annihilation(nmax).dagger()
    }

    pub fn number(nmax: usize) -> Self {
        let d: Vec<C64> = (0..=nmax).map(|n| C64::new(n as f64, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn dagger(&self) -> Self {
        Self::from_matrix(self.m.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn apply(&self, s: &FockState) -> FockState {
        FockState::from_amplitudes(&self.m * s.amplitudes())
    }

    pub fn mul(&self, other: &FockOperator) -> Self {
        Self::from_matrix(&self.m * &other.m)
    }

    pub fn add(&self, other: &FockOperator) -> Self {
        Self::from_matrix(&self.m + &other.m)
    }

    pub fn sub(&self, other: &FockOperator) -> Self {
        Self::from_matrix(&self.m - &other.m)
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self::from_matrix(&self.m * c)
    }

    /// U ρ U†.
    pub fn conjugate_by(&self, u: &FockOperator) -> Self {
        Self::from_matrix(&u.m * &self.m * u.m.adjoint())
    }

    pub fn commutator(&self, other: &FockOperator) -> Self {
        Self::from_matrix(&self.m * &other.m - &other.m * &self.m)
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// max |A − A†|.
    pub fn hermiticity_error(&self) -> f64 {
        let d = &self.m - self.m.adjoint();
        d.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermiticity_error() <= rel_tol * self.max_abs().max(f64::MIN_POSITIVE)
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.m[(i, j)] == C64::new(0.0, 0.0)))
    }

    /// ‖U†U − I‖_max, optionally ignoring the top `skip_top` levels.
    pub fn unitarity_error(&self, skip_top: usize) -> f64 {
        let p = self.m.adjoint() * &self.m;
        let k = self.dim().saturating_sub(skip_top);
        let mut err: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((p[(i, j)] - C64::new(target, 0.0)).norm());
            }
        }
        err
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let h = (&self.m + self.m.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Tr ρ² for a density matrix.
    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    /// Hermitian eigendecomposition, ascending eigenvalues.
    pub fn eigh(&self) -> Result<(Vec<f64>, DMatrix<C64>)> {
        self.require_hermitian()?;
        let eig = self.m.clone().symmetric_eigen();
        Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
    }

    pub fn require_hermitian(&self) -> Result<()> {
        if self.is_hermitian(HERMITIAN_TOL) {
            Ok(())
        } else {
            Err(Error::NotHermitian(self.hermiticity_error()))
        }
    }

    /// f(A) for Hermitian A through its eigendecomposition.
    pub fn hermitian_function(&self, f: impl Fn(f64) -> C64) -> Result<FockOperator> {
        let (vals, vecs) = self.eigh()?;
        let d = DMatrix::from_diagonal(&DVector::from_iterator(vals.len(), vals.iter().map(|&v| f(v))));
        Ok(Self::from_matrix(&vecs * d * vecs.adjoint()))
    }
}

/// Two-branch qubit–field state: coefficients of |g⟩ and |e⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitFieldState {
    pub g: FockState,
    pub e: FockState,
}

impl QubitFieldState {
    pub fn new(g: FockState, e: FockState) -> Self {
        assert_eq!(g.dim(), e.dim(), "branches must share a truncation");
        Self { g, e }
    }

    pub fn nmax(&self) -> usize {
        self.g.nmax()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.g.norm_sqr() + self.e.norm_sqr()
    }

    pub fn inner(&self, other: &QubitFieldState) -> C64 {
        self.g.inner(&other.g) + self.e.inner(&other.e)
    }

    pub fn fidelity(&self, other: &QubitFieldState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Flattened vector with |g⟩ block first: index = q·(nmax+1) + n.
    pub fn to_joint(&self) -> DVector<C64> {
        let d = self.g.dim();
        let mut v = DVector::zeros(2 * d);
        v.rows_mut(0, d).copy_from(self.g.amplitudes());
        v.rows_mut(d, d).copy_from(self.e.amplitudes());
        v
    }

    pub fn from_joint(v: &DVector<C64>) -> Self {
        let d = v.len() / 2;
        Self::new(
            FockState::from_amplitudes(v.rows(0, d).into_owned()),
            FockState::from_amplitudes(v.rows(d, d).into_owned()),
        )
    }

    /// Applies a 2×2 qubit matrix in the (g, e) basis, identity on the field.
    pub fn apply_qubit(&self, q: &[[C64; 2]; 2]) -> Self {
        let g = self.g.scaled(q[0][0]).add(&self.e.scaled(q[0][1]));
        let e = self.g.scaled(q[1][0]).add(&self.e.scaled(q[1][1]));
        Self::new(g, e)
    }

    pub fn apply_field(&self, u: &FockOperator) -> Self {
        Self::new(u.apply(&self.g), u.apply(&self.e))
    }
}

/// Diagonal exp(−i·rate·n·t). The angle rate·t is reduced mod 2π in
/// extended precision before it is multiplied by n.
pub fn number_phase_propagator(rate: f64, t: f64, nmax: usize) -> FockOperator {
    let step = phase::reduce_product(rate, t);
    let d: Vec<C64> = (0..=nmax).map(|n| C64::from_polar(1.0, -phase::reduce(step * n as f64))).collect();
    FockOperator::from_diagonal(&d)
}

/// exp(−i·op·t) for Hermitian `op` via eigendecomposition.
pub fn expm(op: &FockOperator, t: f64) -> Result<FockOperator> {
    op.hermitian_function(|lambda| C64::from_polar(1.0, -phase::reduce_product(lambda, t)))
}

/// ½ Σ|λᵢ| over the eigenvalues of a − b.
pub fn trace_distance(a: &FockOperator, b: &FockOperator) -> f64 {
    0.5 * a.sub(b).hermitian_eigenvalues().iter().map(|v| v.abs()).sum::<f64>()
}
