//! Operator algebra on the truncated product space of two three-level atoms
//! and one cavity mode.
//!
//! The composite space is `atom1 ⊗ atom2 ⊗ cavity` with the atomic levels
//! ordered `g, m, e` and cavity photon numbers `0..=N_c`. Basis states are
//! indexed row-major over that factor order:
//!
//! ```text
//! index(s1, s2, n) = (s1 * 3 + s2) * (N_c + 1) + n
//! ```
//!
//! so the cavity index varies fastest and the first atom slowest. Every
//! operator in the crate is built on this one convention; nothing else in the
//! codebase is allowed to assume a different ordering.
//!
//! Operators are stored as exact sparse complex matrices: arithmetic never
//! prunes by tolerance, only entries that cancel to exactly zero are dropped.
//! This keeps constructed matrices deterministic down to the bit.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Number of levels per atom (`g`, `m`, `e`).
pub const ATOM_LEVELS: usize = 3;

/// Number of atoms in the cavity.
pub const N_ATOMS: usize = 2;

/// Single-atom level, ordered `g < m < e`.
///
/// `g` is the ground state, `m` the intermediate state addressed by the pump
/// and the cavity, and `e` the upper state addressed by the control field.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    G = 0,
    M = 1,
    E = 2,
}

impl Level {
    /// All levels in basis order.
    pub const ALL: [Level; ATOM_LEVELS] = [Level::G, Level::M, Level::E];

    /// Position of the level in the basis ordering.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Inverse of [`Level::index`].
    pub fn from_index(i: usize) -> Option<Level> {
        Level::ALL.get(i).copied()
    }

    /// Excitation grading: `g` carries 0, `m` and `e` each carry 1.
    ///
    /// This is the unique grading conserved by both the cavity coupling
    /// (`a S_mg† + h.c.`) and the control coupling (`S_em + h.c.`) when the
    /// pump is off, so it defines the excitation manifolds used for
    /// dressed-state analysis.
    pub fn excitation(self) -> usize {
        match self {
            Level::G => 0,
            Level::M | Level::E => 1,
        }
    }

    /// Lowercase letter used in state labels.
    pub fn letter(self) -> char {
        match self {
            Level::G => 'g',
            Level::M => 'm',
            Level::E => 'e',
        }
    }
}

/// One of the two atoms.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Atom {
    One = 0,
    Two = 1,
}

impl Atom {
    /// Both atoms in factor order.
    pub const ALL: [Atom; N_ATOMS] = [Atom::One, Atom::Two];

    /// Position of the atom in the factor ordering.
    pub fn index(self) -> usize {
        self as usize
    }

    /// The tensor factor this atom lives on.
    pub fn factor(self) -> Factor {
        match self {
            Atom::One => Factor::Atom1,
            Atom::Two => Factor::Atom2,
        }
    }
}

/// Tensor factor of the composite space.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Factor {
    Atom1,
    Atom2,
    Cavity,
}

/// The truncated composite Hilbert space.
///
/// Only the Fock cutoff is variable; the atomic structure is fixed at two
/// three-level atoms. A cutoff of `N_c` keeps photon numbers `0..=N_c`, so
/// the total dimension is `9 * (N_c + 1)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct HilbertSpace {
    fock_cutoff: usize,
}

impl HilbertSpace {
    /// Space with photon numbers `0..=fock_cutoff`.
    ///
    /// A cutoff of 0 (vacuum-only cavity) is a valid space; operations that
    /// need photon dynamics reject it themselves.
    pub fn new(fock_cutoff: usize) -> HilbertSpace {
        HilbertSpace { fock_cutoff }
    }

    /// Largest retained photon number.
    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    /// Number of cavity basis states, `N_c + 1`.
    pub fn photon_states(&self) -> usize {
        self.fock_cutoff + 1
    }

    /// Total dimension `9 * (N_c + 1)`.
    pub fn dim(&self) -> usize {
        ATOM_LEVELS * ATOM_LEVELS * self.photon_states()
    }

    /// Basis index of `|s1, s2, n⟩`.
    ///
    /// Panics if `n` exceeds the cutoff; photon numbers are data, not types,
    /// so the bound is checked here.
    pub fn index_of(&self, s1: Level, s2: Level, n: usize) -> usize {
        assert!(
            n <= self.fock_cutoff,
            "photon number {n} exceeds Fock cutoff {}",
            self.fock_cutoff
        );
        (s1.index() * ATOM_LEVELS + s2.index()) * self.photon_states() + n
    }

    /// Inverse of [`HilbertSpace::index_of`].
    pub fn basis_state(&self, index: usize) -> (Level, Level, usize) {
        assert!(index < self.dim(), "basis index {index} out of range");
        let p = self.photon_states();
        let n = index % p;
        let atoms = index / p;
        let s2 = Level::from_index(atoms % ATOM_LEVELS).unwrap();
        let s1 = Level::from_index(atoms / ATOM_LEVELS).unwrap();
        (s1, s2, n)
    }

    /// Iterate over all basis states as `(index, s1, s2, n)`.
    pub fn basis_iter(&self) -> impl Iterator<Item = (usize, Level, Level, usize)> + '_ {
        (0..self.dim()).map(move |i| {
            let (s1, s2, n) = self.basis_state(i);
            (i, s1, s2, n)
        })
    }

    /// Total excitation number of a basis state under the `g:0, m:1, e:1`
    /// grading: `exc(s1) + exc(s2) + n`.
    pub fn excitation_of(&self, index: usize) -> usize {
        let (s1, s2, n) = self.basis_state(index);
        s1.excitation() + s2.excitation() + n
    }

    /// Largest representable excitation number, `2 + N_c`.
    pub fn max_excitation(&self) -> usize {
        N_ATOMS + self.fock_cutoff
    }

    /// Local dimension of one tensor factor.
    pub fn factor_dim(&self, factor: Factor) -> usize {
        match factor {
            Factor::Atom1 | Factor::Atom2 => ATOM_LEVELS,
            Factor::Cavity => self.photon_states(),
        }
    }

    /// Embed an operator acting on a single tensor factor into the full
    /// space (identity on the other factors).
    ///
    /// `local` must have the factor's local dimension (3 for an atom,
    /// `N_c + 1` for the cavity). Embedding is an algebra homomorphism:
    /// `embed(A·B) = embed(A)·embed(B)`, which the test suite checks against
    /// a dense oracle.
    pub fn embed(&self, factor: Factor, local: &Operator) -> Result<Operator> {
        let want = self.factor_dim(factor);
        if local.dim() != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                got: local.dim(),
            });
        }
        let p = self.photon_states();
        let mut full = Operator::zero(self.dim());
        for (r, c, v) in local.entries() {
            match factor {
                Factor::Atom1 => {
                    for s2 in 0..ATOM_LEVELS {
                        for n in 0..p {
                            full.insert_add((r * ATOM_LEVELS + s2) * p + n, (c * ATOM_LEVELS + s2) * p + n, v);
                        }
                    }
                }
                Factor::Atom2 => {
                    for s1 in 0..ATOM_LEVELS {
                        for n in 0..p {
                            full.insert_add((s1 * ATOM_LEVELS + r) * p + n, (s1 * ATOM_LEVELS + c) * p + n, v);
                        }
                    }
                }
                Factor::Cavity => {
                    for atoms in 0..ATOM_LEVELS * ATOM_LEVELS {
                        full.insert_add(atoms * p + r, atoms * p + c, v);
                    }
                }
            }
        }
        Ok(full)
    }
}

/// Cavity annihilation operator `a` embedded on the composite space.
///
/// Matrix elements `⟨n−1|a|n⟩ = √n` for `1 ≤ n ≤ N_c`; the truncation keeps
/// the exact top-left block of the infinite ladder operator (no smoothing),
/// so convergence is handled by raising the cutoff, never by reshaping `a`.
pub fn annihilation(space: &HilbertSpace) -> Result<Operator> {
    if space.fock_cutoff() < 1 {
        return Err(Error::FockCutoff {
            need: 1,
            got: space.fock_cutoff(),
        });
    }
    let p = space.photon_states();
    let mut local = Operator::zero(p);
    for n in 1..p {
        local.insert_add(n - 1, n, Complex64::new((n as f64).sqrt(), 0.0));
    }
    space.embed(Factor::Cavity, &local)
}

/// Atomic transition operator `S^j_{αβ} = |α⟩_j⟨β|` embedded on the
/// composite space (identity on the other atom and the cavity).
pub fn atomic_operator(space: &HilbertSpace, atom: Atom, alpha: Level, beta: Level) -> Operator {
    let mut local = Operator::zero(ATOM_LEVELS);
    local.insert_add(alpha.index(), beta.index(), Complex64::new(1.0, 0.0));
    space
        .embed(atom.factor(), &local)
        .expect("3x3 atomic operator always embeds")
}

/// Photon number operator `a†a` on the composite space.
pub fn number_operator(space: &HilbertSpace) -> Operator {
    let p = space.photon_states();
    let mut local = Operator::zero(p);
    for n in 1..p {
        local.insert_add(n, n, Complex64::new(n as f64, 0.0));
    }
    space
        .embed(Factor::Cavity, &local)
        .expect("diagonal cavity operator always embeds")
}

/// Total excitation number operator `N_exc = a†a + Σ_j (S^j_mm + S^j_ee)`.
///
/// Commutes with the drive-free Hamiltonian (pump off); its eigenspaces are
/// the excitation manifolds of the dressed-state analysis.
pub fn excitation_number_operator(space: &HilbertSpace) -> Operator {
    let mut op = Operator::zero(space.dim());
    for (i, s1, s2, n) in space.basis_iter() {
        let exc = s1.excitation() + s2.excitation() + n;
        if exc > 0 {
            op.insert_add(i, i, Complex64::new(exc as f64, 0.0));
        }
    }
    op
}

/// Sparse complex matrix with exact (non-truncating) arithmetic.
///
/// Entries are kept in a sorted map keyed by `(row, col)`; arithmetic removes
/// values that cancel to exactly zero but never prunes small ones, so two
/// equal construction sequences give bitwise-identical operators.
#[derive(Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    entries: BTreeMap<(usize, usize), Complex64>,
}

impl Operator {
    /// Zero operator of the given dimension.
    pub fn zero(dim: usize) -> Operator {
        Operator {
            dim,
            entries: BTreeMap::new(),
        }
    }

    /// Identity operator of the given dimension.
    pub fn identity(dim: usize) -> Operator {
        let mut op = Operator::zero(dim);
        for i in 0..dim {
            op.entries.insert((i, i), Complex64::new(1.0, 0.0));
        }
        op
    }

    /// Build from explicit entries; duplicates are summed, exact zeros dropped.
    pub fn from_entries<I>(dim: usize, entries: I) -> Result<Operator>
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let mut op = Operator::zero(dim);
        for (r, c, v) in entries {
            if r >= dim || c >= dim {
                return Err(Error::EntryOutOfBounds { row: r, col: c, dim });
            }
            op.insert_add(r, c, v);
        }
        Ok(op)
    }

    /// Dimension of the space the operator acts on.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored (nonzero) entries.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Iterate stored entries in `(row, col)` order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.entries.iter().map(|(&(r, c), &v)| (r, c, v))
    }

    /// Value at `(row, col)` (zero if not stored).
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries
            .get(&(row, col))
            .copied()
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    /// Add `v` into `(row, col)`, dropping the entry if it cancels exactly.
    pub(crate) fn insert_add(&mut self, row: usize, col: usize, v: Complex64) {
        debug_assert!(row < self.dim && col < self.dim);
        if v.re == 0.0 && v.im == 0.0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.entries.entry((row, col)) {
            Entry::Vacant(slot) => {
                slot.insert(v);
            }
            Entry::Occupied(mut slot) => {
                let sum = *slot.get() + v;
                if sum.re == 0.0 && sum.im == 0.0 {
                    slot.remove();
                } else {
                    *slot.get_mut() = sum;
                }
            }
        }
    }

    /// Scalar multiple `s·A`. Scaling by exactly zero yields the zero operator.
    pub fn scaled(&self, s: Complex64) -> Operator {
        if s.re == 0.0 && s.im == 0.0 {
            return Operator::zero(self.dim);
        }
        let mut out = Operator::zero(self.dim);
        for (&(r, c), &v) in &self.entries {
            let w = s * v;
            if w.re != 0.0 || w.im != 0.0 {
                out.entries.insert((r, c), w);
            }
        }
        out
    }

    /// Conjugate transpose `A†`.
    pub fn adjoint(&self) -> Operator {
        let mut out = Operator::zero(self.dim);
        for (&(r, c), &v) in &self.entries {
            out.entries.insert((c, r), v.conj());
        }
        out
    }

    /// Transpose without conjugation (used by superoperator assembly).
    pub fn transpose(&self) -> Operator {
        let mut out = Operator::zero(self.dim);
        for (&(r, c), &v) in &self.entries {
            out.entries.insert((c, r), v);
        }
        out
    }

    /// Entrywise complex conjugate (used by superoperator assembly).
    pub fn conjugated(&self) -> Operator {
        let mut out = Operator::zero(self.dim);
        for (&(r, c), &v) in &self.entries {
            out.entries.insert((r, c), v.conj());
        }
        out
    }

    /// Sum, checking dimensions.
    pub fn checked_add(&self, rhs: &Operator) -> Result<Operator> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: rhs.dim,
            });
        }
        let mut out = self.clone();
        for (&(r, c), &v) in &rhs.entries {
            out.insert_add(r, c, v);
        }
        Ok(out)
    }

    /// Difference, checking dimensions.
    pub fn checked_sub(&self, rhs: &Operator) -> Result<Operator> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: rhs.dim,
            });
        }
        let mut out = self.clone();
        for (&(r, c), &v) in &rhs.entries {
            out.insert_add(r, c, -v);
        }
        Ok(out)
    }

    /// Matrix product `A·B`, checking dimensions.
    ///
    /// Accumulation order is fixed by the sorted entry maps, so the product
    /// is deterministic.
    pub fn checked_mul(&self, rhs: &Operator) -> Result<Operator> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: rhs.dim,
            });
        }
        let mut out = Operator::zero(self.dim);
        for (&(r, k), &va) in &self.entries {
            // All entries of rhs in row k, in column order.
            for (&(_, c), &vb) in rhs.entries.range((k, 0)..=(k, usize::MAX)) {
                out.insert_add(r, c, va * vb);
            }
        }
        Ok(out)
    }

    /// Kronecker product `A ⊗ B`; the result has dimension `dim(A)·dim(B)`
    /// with `(A⊗B)[r_a·d_b + r_b, c_a·d_b + c_b] = A[r_a,c_a]·B[r_b,c_b]`.
    pub fn kron(&self, rhs: &Operator) -> Operator {
        let db = rhs.dim;
        let mut out = Operator::zero(self.dim * db);
        for (&(ra, ca), &va) in &self.entries {
            for (&(rb, cb), &vb) in &rhs.entries {
                let v = va * vb;
                if v.re != 0.0 || v.im != 0.0 {
                    out.entries.insert((ra * db + rb, ca * db + cb), v);
                }
            }
        }
        out
    }

    /// Apply to a ket, checking dimensions.
    pub fn checked_apply(&self, ket: &Ket) -> Result<Ket> {
        if self.dim != ket.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: ket.dim(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        for (&(r, c), &v) in &self.entries {
            out[r] += v * ket.amplitudes()[c];
        }
        Ok(Ket::from_amplitudes(out))
    }

    /// Apply to a ket; panics on dimension mismatch.
    pub fn apply(&self, ket: &Ket) -> Ket {
        self.checked_apply(ket).expect("operator/ket dimension mismatch")
    }

    /// Trace of the operator.
    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Largest entry magnitude (0 for the zero operator).
    pub fn max_abs(&self) -> f64 {
        self.entries.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |A − A†|` over entries; exactly 0 for Hermitian constructions.
    pub fn hermiticity_defect(&self) -> f64 {
        self.checked_sub(&self.adjoint())
            .expect("same dimension")
            .max_abs()
    }

    /// Dense copy, for oracles and small-block eigensolves.
    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let mut m = nalgebra::DMatrix::from_element(self.dim, self.dim, Complex64::new(0.0, 0.0));
        for (&(r, c), &v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator {{ dim: {}, nnz: {} }}", self.dim, self.entries.len())
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.checked_add(rhs).expect("operator dimension mismatch in +")
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.checked_sub(rhs).expect("operator dimension mismatch in -")
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.checked_mul(rhs).expect("operator dimension mismatch in *")
    }
}

impl Mul<Complex64> for &Operator {
    type Output = Operator;
    fn mul(self, s: Complex64) -> Operator {
        self.scaled(s)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, s: f64) -> Operator {
        self.scaled(Complex64::new(s, 0.0))
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scaled(Complex64::new(-1.0, 0.0))
    }
}

/// Dense complex state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    amplitudes: Vec<Complex64>,
}

impl Ket {
    /// Zero vector of the given dimension.
    pub fn zero(dim: usize) -> Ket {
        Ket {
            amplitudes: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    /// Basis state `|s1, s2, n⟩`.
    pub fn basis(space: &HilbertSpace, s1: Level, s2: Level, n: usize) -> Ket {
        let mut k = Ket::zero(space.dim());
        k.amplitudes[space.index_of(s1, s2, n)] = Complex64::new(1.0, 0.0);
        k
    }

    /// Wrap an amplitude vector.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Ket {
        Ket { amplitudes }
    }

    /// Dimension of the vector.
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// Amplitudes in basis order.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Inner product `⟨self|other⟩` (conjugate-linear in `self`).
    pub fn inner(&self, other: &Ket) -> Complex64 {
        assert_eq!(self.dim(), other.dim(), "ket dimension mismatch");
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Scalar multiple.
    pub fn scaled(&self, s: Complex64) -> Ket {
        Ket {
            amplitudes: self.amplitudes.iter().map(|z| s * z).collect(),
        }
    }

    /// Sum, checking dimensions.
    pub fn checked_add(&self, rhs: &Ket) -> Result<Ket> {
        if self.dim() != rhs.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: rhs.dim(),
            });
        }
        Ok(Ket {
            amplitudes: self
                .amplitudes
                .iter()
                .zip(&rhs.amplitudes)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Unit-norm copy; errors on the zero vector.
    pub fn normalized(&self) -> Result<Ket> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::StateInvariant("cannot normalize zero ket".into()));
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Random sparse operator with about `fill` of its entries populated.
    fn random_operator(rng: &mut ChaCha8Rng, dim: usize, fill: f64) -> Operator {
        let mut op = Operator::zero(dim);
        for r in 0..dim {
            for col in 0..dim {
                if rng.random::<f64>() < fill {
                    op.insert_add(r, col, c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
                }
            }
        }
        op
    }

    fn dense_close(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>, tol: f64) -> bool {
        a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn basis_index_is_row_major_over_atom1_atom2_cavity() {
        let space = HilbertSpace::new(2);
        assert_eq!(space.dim(), 27);
        assert_eq!(space.index_of(Level::G, Level::G, 0), 0);
        assert_eq!(space.index_of(Level::G, Level::G, 2), 2);
        assert_eq!(space.index_of(Level::G, Level::M, 0), 3);
        assert_eq!(space.index_of(Level::M, Level::G, 1), 10);
        assert_eq!(space.index_of(Level::E, Level::E, 2), 26);
    }

    #[test]
    fn basis_bijection_round_trips_every_index() {
        for cutoff in [0, 1, 5] {
            let space = HilbertSpace::new(cutoff);
            let mut seen = vec![false; space.dim()];
            for i in 0..space.dim() {
                let (s1, s2, n) = space.basis_state(i);
                assert_eq!(space.index_of(s1, s2, n), i);
                assert!(!seen[i]);
                seen[i] = true;
            }
            assert!(seen.iter().all(|&v| v));
        }
    }

    #[test]
    fn annihilation_minimal_cutoff_single_matrix_element() {
        let space = HilbertSpace::new(1);
        let a = annihilation(&space).unwrap();
        // One cavity element ⟨0|a|1⟩ = 1, replicated over the 9 atomic
        // configurations; everything else zero.
        assert_eq!(a.nnz(), 9);
        for (r, col, v) in a.entries() {
            let (s1, s2, n) = space.basis_state(col);
            assert_eq!(n, 1);
            assert_eq!(r, space.index_of(s1, s2, 0));
            assert_eq!(v, c(1.0, 0.0));
        }
    }

    #[test]
    fn annihilation_matrix_element_is_sqrt_n() {
        let space = HilbertSpace::new(4);
        let a = annihilation(&space).unwrap();
        let from = Ket::basis(&space, Level::G, Level::G, 4);
        let to = Ket::basis(&space, Level::G, Level::G, 3);
        // ⟨3|a|4⟩ = √4 = 2.
        assert_eq!(to.inner(&a.apply(&from)), c(2.0, 0.0));
    }

    #[test]
    fn annihilation_rejects_vacuum_only_space() {
        let space = HilbertSpace::new(0);
        assert!(matches!(
            annihilation(&space),
            Err(Error::FockCutoff { need: 1, got: 0 })
        ));
    }

    #[test]
    fn number_operator_action_on_every_basis_ket() {
        // Brute force: a†a |s1, s2, n⟩ = n |s1, s2, n⟩ for all basis kets.
        let space = HilbertSpace::new(6);
        let a = annihilation(&space).unwrap();
        let n_op = &a.adjoint() * &a;
        // √n·√n reproduces n only to rounding, so compare with a 1-ulp-scale
        // tolerance rather than bitwise.
        let diff = n_op.checked_sub(&number_operator(&space)).unwrap();
        assert!(diff.max_abs() <= 1e-14 * space.fock_cutoff() as f64);
        for (i, s1, s2, n) in space.basis_iter() {
            let ket = Ket::basis(&space, s1, s2, n);
            let result = n_op.apply(&ket);
            for (j, amp) in result.amplitudes().iter().enumerate() {
                let want = if j == i { c(n as f64, 0.0) } else { c(0.0, 0.0) };
                assert!((amp - want).norm() <= 1e-13, "a†a wrong at basis index {i}");
            }
        }
    }

    #[test]
    fn atomic_operator_moves_the_addressed_atom_only() {
        let space = HilbertSpace::new(2);
        let s1_mg = atomic_operator(&space, Atom::One, Level::M, Level::G);
        let from = Ket::basis(&space, Level::G, Level::G, 0);
        assert_eq!(s1_mg.apply(&from), Ket::basis(&space, Level::M, Level::G, 0));

        let s2_em = atomic_operator(&space, Atom::Two, Level::E, Level::M);
        let from = Ket::basis(&space, Level::G, Level::M, 2);
        assert_eq!(s2_em.apply(&from), Ket::basis(&space, Level::G, Level::E, 2));

        // And it annihilates states where the addressed atom is elsewhere.
        let from = Ket::basis(&space, Level::G, Level::E, 1);
        assert_eq!(s2_em.apply(&from), Ket::zero(space.dim()));
    }

    #[test]
    fn atomic_operator_adjoints_exhaustive() {
        // (S^j_{αβ})† = S^j_{βα} for all 18 (j, α, β) combinations.
        let space = HilbertSpace::new(3);
        for atom in Atom::ALL {
            for alpha in Level::ALL {
                for beta in Level::ALL {
                    let op = atomic_operator(&space, atom, alpha, beta);
                    let daggered = atomic_operator(&space, atom, beta, alpha);
                    assert_eq!(op.adjoint(), daggered, "adjoint mismatch for {atom:?} {alpha:?}{beta:?}");
                }
            }
        }
    }

    #[test]
    fn add_zero_scaled_operator_is_identity_operation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_operator(&mut rng, 20, 0.15);
        let b = random_operator(&mut rng, 20, 0.15);
        let sum = a.checked_add(&b.scaled(c(0.0, 0.0))).unwrap();
        assert_eq!(sum, a);
    }

    #[test]
    fn product_adjoint_matches_dense_oracle() {
        // (A·B)† = B†·A† checked against dense arithmetic at dim 54 ≤ 63.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dim = HilbertSpace::new(5).dim();
        let a = random_operator(&mut rng, dim, 0.05);
        let b = random_operator(&mut rng, dim, 0.05);
        let lhs = (&a * &b).adjoint();
        let rhs = &b.adjoint() * &a.adjoint();
        let dense = (a.to_dense() * b.to_dense()).adjoint();
        assert!(dense_close(&lhs.to_dense(), &dense, 1e-12));
        assert!(dense_close(&rhs.to_dense(), &dense, 1e-12));
    }

    #[test]
    fn commutator_of_ladder_operators_is_identity_below_cutoff() {
        // [a, a†] = I except on the n = N_c block, where truncation gives
        // a a†|N_c⟩ = 0 and the commutator picks up −N_c instead of +1.
        let space = HilbertSpace::new(5);
        let nc = space.fock_cutoff();
        let a = annihilation(&space).unwrap();
        let adag = a.adjoint();
        let comm = &(&a * &adag) - &(&adag * &a);
        let dense = comm.to_dense();
        for (i, _, _, n) in space.basis_iter() {
            for j in 0..space.dim() {
                let want = if i == j {
                    if n < nc {
                        c(1.0, 0.0)
                    } else {
                        c(-(nc as f64), 0.0)
                    }
                } else {
                    c(0.0, 0.0)
                };
                // (√(n+1))² − (√n)² carries rounding of order n·ε.
                assert!(
                    (dense[(i, j)] - want).norm() <= 1e-14 * (nc as f64),
                    "commutator wrong at ({i}, {j})"
                );
            }
        }
    }

    #[test]
    fn embedding_commutes_with_composition() {
        // embed(A·B) = embed(A)·embed(B) on every factor, dense oracle at N_c = 4.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let space = HilbertSpace::new(4);
        for factor in [Factor::Atom1, Factor::Atom2, Factor::Cavity] {
            let d = space.factor_dim(factor);
            for _ in 0..5 {
                let a = random_operator(&mut rng, d, 0.6);
                let b = random_operator(&mut rng, d, 0.6);
                let embedded_product = space.embed(factor, &a.checked_mul(&b).unwrap()).unwrap();
                let product_of_embedded = space
                    .embed(factor, &a)
                    .unwrap()
                    .checked_mul(&space.embed(factor, &b).unwrap())
                    .unwrap();
                assert!(dense_close(
                    &embedded_product.to_dense(),
                    &product_of_embedded.to_dense(),
                    1e-12
                ));
            }
        }
    }

    #[test]
    fn exact_cancellation_leaves_no_explicit_zeros() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = random_operator(&mut rng, 15, 0.3);
        let diff = a.checked_sub(&a).unwrap();
        assert_eq!(diff.nnz(), 0);
        // Partial cancellation: knock out one entry of a.
        let (r, col, v) = a.entries().next().unwrap();
        let single = Operator::from_entries(15, [(r, col, -v)]).unwrap();
        let partial = a.checked_add(&single).unwrap();
        assert_eq!(partial.nnz(), a.nnz() - 1);
        assert_eq!(partial.get(r, col), c(0.0, 0.0));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = Operator::identity(4);
        let b = Operator::identity(5);
        assert!(matches!(a.checked_add(&b), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(a.checked_mul(&b), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(
            a.checked_apply(&Ket::zero(5)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn excitation_operator_counts_m_and_e_once() {
        let space = HilbertSpace::new(3);
        let n_exc = excitation_number_operator(&space);
        for (i, s1, s2, n) in space.basis_iter() {
            let ket = Ket::basis(&space, s1, s2, n);
            let want = (s1.excitation() + s2.excitation() + n) as f64;
            let got = ket.inner(&n_exc.apply(&ket));
            assert_eq!(got, c(want, 0.0));
            assert_eq!(space.excitation_of(i), want as usize);
        }
    }

    #[test]
    fn kron_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let a = random_operator(&mut rng, 4, 0.5);
        let b = random_operator(&mut rng, 3, 0.5);
        let dense = a.to_dense().kronecker(&b.to_dense());
        assert!(dense_close(&a.kron(&b).to_dense(), &dense, 1e-14));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_operator(dim: usize) -> impl Strategy<Value = Operator> {
            proptest::collection::vec(
                ((0..dim, 0..dim), (-1.0f64..1.0, -1.0f64..1.0)),
                0..40,
            )
            .prop_map(move |items| {
                Operator::from_entries(
                    dim,
                    items
                        .into_iter()
                        .map(|((r, c), (re, im))| (r, c, Complex64::new(re, im))),
                )
                .unwrap()
            })
        }

        proptest! {
            #[test]
            fn adjoint_is_an_involution(a in arb_operator(12)) {
                prop_assert_eq!(a.adjoint().adjoint(), a);
            }

            #[test]
            fn sparse_product_matches_dense(a in arb_operator(12), b in arb_operator(12)) {
                let sparse = a.checked_mul(&b).unwrap().to_dense();
                let dense = a.to_dense() * b.to_dense();
                for (x, y) in sparse.iter().zip(dense.iter()) {
                    prop_assert!((x - y).norm() <= 1e-12);
                }
            }

            #[test]
            fn no_stored_zeros_survive_arithmetic(a in arb_operator(10), b in arb_operator(10)) {
                let sum = a.checked_add(&b).unwrap();
                let diff = sum.checked_sub(&b).unwrap();
                for (_, _, v) in sum.entries().chain(diff.entries()) {
                    prop_assert!(v.re != 0.0 || v.im != 0.0);
                }
            }
        }
    }
}
