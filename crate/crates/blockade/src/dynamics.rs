//! Liouvillian construction, steady states, and transient evolution.
//!
//! The master equation is
//!
//! ```text
//! dρ/dt = L[ρ] = −i[H, ρ] + Σ_k ( C_k ρ C_k† − ½{C_k†C_k, ρ} )
//! ```
//!
//! For the steady-state solve the equation is vectorized by **column
//! stacking**: `vec(ρ)[r + D·c] = ρ[r, c]`, under which
//! `vec(AρB) = (Bᵀ ⊗ A)·vec(ρ)` and the Liouvillian becomes the `D²×D²`
//! sparse matrix
//!
//! ```text
//! L = −i(I⊗H − Hᵀ⊗I) + Σ_k [ C̄_k⊗C_k − ½ I⊗(C_k†C_k) − ½ (C_k†C_k)ᵀ⊗I ]
//! ```
//!
//! (`C̄` is the entrywise conjugate). This convention is fixed here, once;
//! every kernel in this module and every consumer must agree with it.
//!
//! `ρ_ss` comes from a direct sparse LU solve of `L v = 0` with one row —
//! the equation for a chosen diagonal element — replaced by the trace
//! constraint `Σ_n v_(n,n) = 1`. Dropping that row loses nothing: `vec(I)`
//! is a left null vector of any Lindblad generator, so the replaced equation
//! is implied by the others. If the direct solve fails or misses its
//! residual, a shift-and-invert iteration targets the null space directly
//! and doubles as a degeneracy probe.
//!
//! [`time_evolve`] deliberately does *not* reuse the vectorized matrix: it
//! integrates the master equation with the Hamiltonian and jump operators
//! applied directly to the dense density matrix. The two paths share no
//! linear-algebra kernel, which is what makes their agreement a meaningful
//! cross-check.

use std::sync::Once;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{Ket, Operator};
use crate::model::{build_hamiltonian, collapse_operators, ModelParams};

/// Tolerances of the [`DensityMatrix`] invariants, asserted on every solve.
const TRACE_TOL: f64 = 1e-10;
const HERMITICITY_TOL: f64 = 1e-10;
const MIN_EIGENVALUE_FLOOR: f64 = -1e-8;

/// Pin the sparse backend to sequential execution, once.
///
/// Per-point solves must produce identical bits no matter how many sweep
/// workers run around them, so internal solver parallelism stays off.
fn ensure_deterministic_backend() {
    static INIT: Once = Once::new();
    INIT.call_once(|| {
        faer::set_global_parallelism(faer::Par::Seq);
    });
}

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

/// Dense complex density matrix (column-major storage).
///
/// Valid states are Hermitian, unit-trace, and positive semidefinite within
/// the tolerances above; [`DensityMatrix::validate`] checks all three.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    data: DMatrix<Complex64>,
}

/// Invariant measurements of a state, reported alongside solves.
#[derive(Clone, Copy, Debug)]
pub struct StateDiagnostics {
    /// `|tr ρ − 1|`.
    pub trace_error: f64,
    /// `max |ρ − ρ†|` over entries.
    pub hermiticity: f64,
    /// Smallest eigenvalue of the Hermitian part.
    pub min_eigenvalue: f64,
}

impl DensityMatrix {
    /// Wrap a dense matrix; only squareness is checked here.
    pub fn from_matrix(data: DMatrix<Complex64>) -> Result<DensityMatrix> {
        if data.nrows() != data.ncols() {
            return Err(Error::DimensionMismatch {
                expected: data.nrows(),
                got: data.ncols(),
            });
        }
        Ok(DensityMatrix { data })
    }

    /// Pure state `|ψ⟩⟨ψ| / ⟨ψ|ψ⟩`; errors on the zero vector.
    pub fn pure(ket: &Ket) -> Result<DensityMatrix> {
        let n = ket.norm();
        if n == 0.0 {
            return Err(Error::StateInvariant(
                "cannot form a state from the zero ket".into(),
            ));
        }
        let d = ket.dim();
        let amps = ket.amplitudes();
        let data = DMatrix::from_fn(d, d, |r, c| amps[r] * amps[c].conj() / (n * n));
        Ok(DensityMatrix { data })
    }

    /// Maximally mixed state `I/D`.
    pub fn maximally_mixed(dim: usize) -> DensityMatrix {
        let w = Complex64::new(1.0 / dim as f64, 0.0);
        DensityMatrix {
            data: DMatrix::from_fn(dim, dim, |r, c| if r == c { w } else { Complex64::ZERO }),
        }
    }

    /// Dimension `D`.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Backing matrix.
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    /// Element `ρ[r, c]`.
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[(r, c)]
    }

    /// `tr ρ`.
    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.data[(i, i)]).sum()
    }

    /// `tr(Op·ρ)` for a sparse operator.
    pub fn expectation(&self, op: &Operator) -> Complex64 {
        debug_assert_eq!(op.dim(), self.dim());
        op.entries().map(|(r, c, v)| v * self.data[(c, r)]).sum()
    }

    /// `max |ρ − ρ†|` over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.data[(r, c)] - self.data[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part `(ρ + ρ†)/2`.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let herm = (&self.data + self.data.adjoint()).scale(0.5);
        let eig = herm.symmetric_eigen();
        eig.eigenvalues
            .iter()
            .copied()
            .min_by(f64::total_cmp)
            .ok_or(Error::EigenFailure)
    }

    /// Frobenius norm `‖ρ‖_F`.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius distance to another state.
    pub fn frobenius_distance(&self, other: &DensityMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "state dimension mismatch");
        (&self.data - &other.data)
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Purity `tr ρ²` (via the Frobenius norm; exact for Hermitian ρ).
    pub fn purity(&self) -> f64 {
        let f = self.frobenius_norm();
        f * f
    }

    /// Measure the state invariants.
    pub fn diagnostics(&self) -> Result<StateDiagnostics> {
        Ok(StateDiagnostics {
            trace_error: (self.trace() - Complex64::new(1.0, 0.0)).norm(),
            hermiticity: self.hermiticity_defect(),
            min_eigenvalue: self.min_eigenvalue()?,
        })
    }

    /// Assert unit trace, Hermiticity, and positivity within the module
    /// tolerances. Small negative eigenvalues above the floor pass and are
    /// *not* clipped: observables are computed from the state as solved.
    pub fn validate(&self) -> Result<()> {
        let diag = self.diagnostics()?;
        if diag.trace_error > TRACE_TOL {
            return Err(Error::StateInvariant(format!(
                "trace error {:.3e} exceeds {TRACE_TOL:.1e}",
                diag.trace_error
            )));
        }
        if diag.hermiticity > HERMITICITY_TOL {
            return Err(Error::StateInvariant(format!(
                "Hermiticity defect {:.3e} exceeds {HERMITICITY_TOL:.1e}",
                diag.hermiticity
            )));
        }
        if diag.min_eigenvalue < MIN_EIGENVALUE_FLOOR {
            return Err(Error::StateInvariant(format!(
                "minimum eigenvalue {:.3e} below {MIN_EIGENVALUE_FLOOR:.1e}",
                diag.min_eigenvalue
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Sparse superoperator storage
// ---------------------------------------------------------------------------

/// Minimal compressed-sparse-column matrix used for the vectorized
/// Liouvillian and its trace-modified variants.
#[derive(Clone, Debug)]
struct Csc {
    n: usize,
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<Complex64>,
}

impl Csc {
    /// Build from triplets; duplicates are summed, exact zeros dropped.
    fn from_triplets(n: usize, mut trips: Vec<(usize, usize, Complex64)>) -> Csc {
        // Sort column-major, merge duplicates.
        trips.sort_unstable_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut col_ptr = vec![0usize; n + 1];
        let mut rows = Vec::with_capacity(trips.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trips {
            if last == Some((r, c)) {
                let tail = vals.last_mut().unwrap();
                *tail += v;
            } else {
                rows.push(r);
                vals.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        // Drop exact zeros produced by cancellation.
        let mut k_out = 0;
        let mut col = 0;
        let mut kept_per_col = vec![0usize; n];
        let mut idx = 0;
        for c in 0..n {
            let count = col_ptr[c + 1];
            for _ in 0..count {
                let (r, v) = (rows[idx], vals[idx]);
                idx += 1;
                if v.re != 0.0 || v.im != 0.0 {
                    rows[k_out] = r;
                    vals[k_out] = v;
                    k_out += 1;
                    kept_per_col[c] += 1;
                }
            }
            col += 1;
        }
        let _ = col;
        rows.truncate(k_out);
        vals.truncate(k_out);
        let mut ptr = vec![0usize; n + 1];
        for c in 0..n {
            ptr[c + 1] = ptr[c] + kept_per_col[c];
        }
        Csc {
            n,
            col_ptr: ptr,
            rows,
            vals,
        }
    }

    fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `y = A·x`.
    fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![Complex64::ZERO; self.n];
        for c in 0..self.n {
            let xc = x[c];
            if xc.re == 0.0 && xc.im == 0.0 {
                continue;
            }
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.rows[k]] += self.vals[k] * xc;
            }
        }
        y
    }

    /// Largest absolute row sum (induced ∞-norm).
    fn inf_norm(&self) -> f64 {
        let mut sums = vec![0.0f64; self.n];
        for k in 0..self.vals.len() {
            sums[self.rows[k]] += self.vals[k].norm();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    fn triplets(&self) -> Vec<(usize, usize, Complex64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for c in 0..self.n {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                out.push((self.rows[k], c, self.vals[k]));
            }
        }
        out
    }

    fn to_faer(&self) -> Result<faer::sparse::SparseColMat<usize, faer::c64>> {
        let trips: Vec<faer::sparse::Triplet<usize, usize, faer::c64>> = self
            .triplets()
            .into_iter()
            .map(|(r, c, v)| faer::sparse::Triplet::new(r, c, v))
            .collect();
        faer::sparse::SparseColMat::try_new_from_triplets(self.n, self.n, &trips)
            .map_err(|e| Error::LinearSolve(format!("sparse assembly failed: {e:?}")))
    }
}

// ---------------------------------------------------------------------------
// Liouvillian
// ---------------------------------------------------------------------------

/// Vectorized Lindblad generator: a `D²×D²` sparse matrix acting on
/// column-stacked density matrices.
pub struct Liouvillian {
    dim: usize,
    matrix: Csc,
    scale: f64,
}

impl Liouvillian {
    /// Hilbert-space dimension `D`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension `D²` of the vectorized space.
    pub fn super_dim(&self) -> usize {
        self.dim * self.dim
    }

    /// Stored nonzeros.
    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    /// Magnitude scale of the generator (induced ∞-norm); residual
    /// tolerances are quoted relative to this.
    pub fn norm_scale(&self) -> f64 {
        self.scale
    }

    /// Apply to a dense matrix: unvec(L·vec(X)).
    pub fn apply_to_matrix(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        assert_eq!(x.nrows(), self.dim, "Liouvillian/state dimension mismatch");
        assert_eq!(x.ncols(), self.dim, "Liouvillian/state dimension mismatch");
        // Column-major dense storage *is* the column-stacked vector.
        let y = self.matrix.matvec(x.as_slice());
        DMatrix::from_vec(self.dim, self.dim, y)
    }

    /// `‖L·vec(ρ)‖_F` for a state.
    pub fn residual_of(&self, rho: &DensityMatrix) -> f64 {
        let y = self.matrix.matvec(rho.matrix().as_slice());
        y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Build directly from superoperator triplets (row, col, value) on the
    /// `D²` space.
    ///
    /// This is an advanced entry point for diagnostics and tests — e.g.
    /// constructing deliberately broken generators to exercise the checker
    /// machinery. Normal use goes through [`build_liouvillian`].
    pub fn from_superoperator_triplets(
        dim: usize,
        triplets: Vec<(usize, usize, Complex64)>,
    ) -> Result<Liouvillian> {
        let n = dim * dim;
        for &(r, c, _) in &triplets {
            if r >= n || c >= n {
                return Err(Error::EntryOutOfBounds { row: r, col: c, dim: n });
            }
        }
        let matrix = Csc::from_triplets(n, triplets);
        let scale = matrix.inf_norm().max(1.0);
        Ok(Liouvillian { dim, matrix, scale })
    }
}

/// Push triplets of `scale · (X ⊗ Y)` where `X` acts on the column index of
/// the stacked state and `Y` on the row index.
fn push_kron(
    out: &mut Vec<(usize, usize, Complex64)>,
    dim: usize,
    col_side: &Operator,
    row_side: &Operator,
    scale: Complex64,
) {
    for (pr, pc, pv) in col_side.entries() {
        let s = scale * pv;
        for (qr, qc, qv) in row_side.entries() {
            out.push((pr * dim + qr, pc * dim + qc, s * qv));
        }
    }
}

/// Assemble the vectorized Lindblad generator from a Hamiltonian and a list
/// of (rate-scaled) jump operators.
pub fn build_liouvillian(h: &Operator, jumps: &[Operator]) -> Result<Liouvillian> {
    ensure_deterministic_backend();
    let d = h.dim();
    for j in jumps {
        if j.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: j.dim(),
            });
        }
    }
    let identity = Operator::identity(d);
    let mut trips: Vec<(usize, usize, Complex64)> = Vec::new();

    // Unitary part: −i(I⊗H − Hᵀ⊗I).
    push_kron(&mut trips, d, &identity, h, Complex64::new(0.0, -1.0));
    push_kron(&mut trips, d, &h.transpose(), &identity, Complex64::new(0.0, 1.0));

    // Dissipators: C̄⊗C − ½ I⊗(C†C) − ½ (C†C)ᵀ⊗I.
    for c_op in jumps {
        let cdc = c_op.adjoint().checked_mul(c_op)?;
        push_kron(&mut trips, d, &c_op.conjugated(), c_op, Complex64::ONE);
        push_kron(&mut trips, d, &identity, &cdc, Complex64::new(-0.5, 0.0));
        push_kron(&mut trips, d, &cdc.transpose(), &identity, Complex64::new(-0.5, 0.0));
    }

    let matrix = Csc::from_triplets(d * d, trips);
    let scale = matrix.inf_norm().max(1.0);
    Ok(Liouvillian {
        dim: d,
        matrix,
        scale,
    })
}

/// Convenience: build the Liouvillian for a parameter set in one call.
pub fn liouvillian_for(params: &ModelParams) -> Result<Liouvillian> {
    let space = params.space();
    let h = build_hamiltonian(params, &space)?;
    let jumps = collapse_operators(params, &space)?;
    build_liouvillian(&h, &jumps)
}

// ---------------------------------------------------------------------------
// Steady state
// ---------------------------------------------------------------------------

/// Options of the steady-state solve.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Residual bound relative to the generator's norm scale.
    pub residual_tol: f64,
    /// Run a second, differently-anchored solve and require agreement;
    /// catches quietly rank-deficient systems at the cost of a second
    /// factorization.
    pub check_uniqueness: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            residual_tol: 1e-10,
            check_uniqueness: false,
        }
    }
}

/// Result of a steady-state solve.
#[derive(Clone, Debug)]
pub struct SteadySolution {
    /// The steady state, validated against all invariants.
    pub rho: DensityMatrix,
    /// Measured `‖L·vec(ρ)‖_F`.
    pub residual: f64,
    /// Whether the direct solve sufficed or the eigen fallback ran.
    pub method: SolveMethod,
}

/// Which solve path produced the state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    /// Trace-replaced sparse LU.
    DirectLu,
    /// Shift-and-invert null-space iteration.
    ShiftInvert,
}

/// Solve `L[ρ] = 0`, `tr ρ = 1` with default options.
pub fn steady_state(l: &Liouvillian) -> Result<SteadySolution> {
    steady_state_with(l, &SolveOptions::default())
}

/// Solve `L[ρ] = 0`, `tr ρ = 1`.
///
/// Direct path: replace the equation for diagonal element `(a, a)` with the
/// trace constraint, factorize, solve, and apply one step of iterative
/// refinement. Fallback: shift-and-invert iteration toward the null space,
/// which also diagnoses degenerate (non-unique) generators.
pub fn steady_state_with(l: &Liouvillian, opts: &SolveOptions) -> Result<SteadySolution> {
    ensure_deterministic_backend();
    let tol_abs = opts.residual_tol * l.norm_scale();

    let direct = solve_trace_replaced(l, 0).and_then(|v| finish_state(l, v, tol_abs));
    let solution = match direct {
        Ok(sol) => {
            if opts.check_uniqueness {
                let second = solve_trace_replaced(l, l.dim() - 1)
                    .and_then(|v| finish_state(l, v, tol_abs))?;
                let dist = sol.rho.frobenius_distance(&second.rho);
                if dist > 1e-8 {
                    return Err(Error::NonUniqueSteadyState(format!(
                        "two trace anchors disagree by {dist:.3e} in Frobenius norm"
                    )));
                }
            }
            sol
        }
        Err(first_err) => match shift_invert_fallback(l, tol_abs) {
            Ok(sol) => sol,
            Err(Error::NonUniqueSteadyState(msg)) => {
                return Err(Error::NonUniqueSteadyState(msg));
            }
            Err(_) => return Err(first_err),
        },
    };
    Ok(solution)
}

/// Direct solve with the trace row anchored at diagonal element `(a, a)`.
fn solve_trace_replaced(l: &Liouvillian, anchor: usize) -> Result<Vec<Complex64>> {
    let d = l.dim;
    let n = l.super_dim();
    let anchor_row = anchor * d + anchor;

    // Replace the row: drop the generator's equation, insert the trace form.
    let mut trips: Vec<(usize, usize, Complex64)> = l
        .matrix
        .triplets()
        .into_iter()
        .filter(|&(r, _, _)| r != anchor_row)
        .collect();
    for j in 0..d {
        trips.push((anchor_row, j * d + j, Complex64::ONE));
    }
    let modified = Csc::from_triplets(n, trips);
    let faer_mat = modified.to_faer()?;
    let lu = faer_mat
        .sp_lu()
        .map_err(|e| Error::LinearSolve(format!("sparse LU failed: {e:?}")))?;

    use faer::prelude::Solve;
    let rhs = faer::Mat::<faer::c64>::from_fn(n, 1, |i, _| {
        if i == anchor_row {
            faer::c64::new(1.0, 0.0)
        } else {
            faer::c64::new(0.0, 0.0)
        }
    });
    let x = lu.solve(&rhs);
    let mut v: Vec<Complex64> = (0..n).map(|i| x[(i, 0)]).collect();

    // One step of iterative refinement against the modified system.
    let mv = modified.matvec(&v);
    let r = faer::Mat::<faer::c64>::from_fn(n, 1, |i, _| {
        let b = if i == anchor_row { Complex64::ONE } else { Complex64::ZERO };
        b - mv[i]
    });
    let dx = lu.solve(&r);
    for i in 0..n {
        v[i] += dx[(i, 0)];
    }

    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::LinearSolve(
            "direct solve produced non-finite entries".into(),
        ));
    }
    Ok(v)
}

/// Validate a candidate vectorized state and package the solution.
fn finish_state(l: &Liouvillian, v: Vec<Complex64>, tol_abs: f64) -> Result<SteadySolution> {
    let d = l.dim;
    let rho = DensityMatrix::from_matrix(DMatrix::from_vec(d, d, v))?;
    let residual = l.residual_of(&rho);
    if residual > tol_abs {
        return Err(Error::ResidualNotMet {
            residual,
            tol: tol_abs,
        });
    }
    rho.validate()?;
    Ok(SteadySolution {
        rho,
        residual,
        method: SolveMethod::DirectLu,
    })
}

/// Shift-and-invert iteration toward the null space of `L`.
///
/// Runs from two independent starting vectors; disagreement of the limits,
/// or a traceless null vector, signals a degenerate generator.
fn shift_invert_fallback(l: &Liouvillian, tol_abs: f64) -> Result<SteadySolution> {
    let d = l.dim;
    let n = l.super_dim();
    let sigma = 1e-12 * l.norm_scale();

    let mut trips = l.matrix.triplets();
    for i in 0..n {
        trips.push((i, i, Complex64::new(-sigma, 0.0)));
    }
    let shifted = Csc::from_triplets(n, trips);
    let faer_mat = shifted.to_faer()?;
    let lu = faer_mat
        .sp_lu()
        .map_err(|e| Error::LinearSolve(format!("shifted LU failed: {e:?}")))?;

    use faer::prelude::Solve;
    let iterate = |start: Vec<Complex64>| -> Result<Vec<Complex64>> {
        let mut v = start;
        for _ in 0..64 {
            let rhs = faer::Mat::<faer::c64>::from_fn(n, 1, |i, _| v[i]);
            let x = lu.solve(&rhs);
            let mut w: Vec<Complex64> = (0..n).map(|i| x[(i, 0)]).collect();
            let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                return Err(Error::LinearSolve(
                    "shift-invert iteration degenerated".into(),
                ));
            }
            let inv = Complex64::new(1.0 / norm, 0.0);
            for z in &mut w {
                *z *= inv;
            }
            let lw = l.matrix.matvec(&w);
            let res = lw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v = w;
            if res <= 0.1 * tol_abs {
                break;
            }
        }
        Ok(v)
    };

    // Start 1: the maximally mixed state. Start 2: a corner projector.
    let mut start1 = vec![Complex64::ZERO; n];
    for j in 0..d {
        start1[j * d + j] = Complex64::new(1.0 / d as f64, 0.0);
    }
    let mut start2 = vec![Complex64::ZERO; n];
    start2[0] = Complex64::ONE;

    let v1 = iterate(start1)?;
    let v2 = iterate(start2)?;

    let trace_of = |v: &[Complex64]| -> Complex64 { (0..d).map(|j| v[j * d + j]).sum() };
    let t1 = trace_of(&v1);
    if t1.norm() < 1e-8 {
        return Err(Error::NonUniqueSteadyState(
            "null vector has vanishing trace; a traceless steady direction exists".into(),
        ));
    }
    let normalize = |v: &[Complex64], t: Complex64| -> Vec<Complex64> {
        let inv = Complex64::ONE / t;
        v.iter().map(|z| z * inv).collect()
    };
    let r1 = normalize(&v1, t1);
    let t2 = trace_of(&v2);
    if t2.norm() >= 1e-8 {
        let r2 = normalize(&v2, t2);
        let dist = r1
            .iter()
            .zip(&r2)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if dist > 1e-6 {
            return Err(Error::NonUniqueSteadyState(format!(
                "independent null-space starts disagree by {dist:.3e}"
            )));
        }
    } else {
        return Err(Error::NonUniqueSteadyState(
            "second null-space start converged to a traceless direction".into(),
        ));
    }

    let mut sol = finish_state(l, r1, tol_abs)?;
    sol.method = SolveMethod::ShiftInvert;
    Ok(sol)
}

// ---------------------------------------------------------------------------
// Time evolution (independent oracle)
// ---------------------------------------------------------------------------

/// Step-control options of the adaptive integrator.
#[derive(Clone, Debug)]
pub struct EvolveOptions {
    /// Relative tolerance per step.
    pub rtol: f64,
    /// Absolute tolerance per step.
    pub atol: f64,
    /// Abort after this many accepted steps.
    pub max_steps: usize,
    /// Initial step size; `None` picks a conservative default.
    pub initial_dt: Option<f64>,
    /// Budget for trace / Hermiticity drift over the whole interval.
    pub drift_tol: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            rtol: 1e-8,
            atol: 1e-12,
            max_steps: 20_000_000,
            initial_dt: None,
            drift_tol: 1e-9,
        }
    }
}

/// Dense master-equation right-hand side built straight from `H` and the
/// jump operators (no vectorized matrix involved).
struct MasterRhs {
    dim: usize,
    h: Vec<(usize, usize, Complex64)>,
    jumps: Vec<Vec<(usize, usize, Complex64)>>,
    /// `G = Σ_k C_k†C_k`, applied symmetrically as `−½{G, ρ}`.
    gain: Vec<(usize, usize, Complex64)>,
    scratch: Vec<Complex64>,
}

impl MasterRhs {
    fn new(h: &Operator, jumps: &[Operator]) -> Result<MasterRhs> {
        let dim = h.dim();
        let mut gain = Operator::zero(dim);
        for c in jumps {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.dim(),
                });
            }
            gain = gain.checked_add(&c.adjoint().checked_mul(c)?)?;
        }
        Ok(MasterRhs {
            dim,
            h: h.entries().collect(),
            jumps: jumps.iter().map(|c| c.entries().collect()).collect(),
            gain: gain.entries().collect(),
            scratch: vec![Complex64::ZERO; dim * dim],
        })
    }

    /// `out += s·(Op·ρ)`, column by column.
    fn add_left_mul(
        op: &[(usize, usize, Complex64)],
        s: Complex64,
        rho: &[Complex64],
        out: &mut [Complex64],
        dim: usize,
    ) {
        for j in 0..dim {
            let col_in = &rho[j * dim..(j + 1) * dim];
            let col_out = &mut out[j * dim..(j + 1) * dim];
            for &(r, k, v) in op {
                col_out[r] += s * v * col_in[k];
            }
        }
    }

    /// `out += s·(ρ·Op)`, one sparse column of `Op` at a time.
    fn add_right_mul(
        op: &[(usize, usize, Complex64)],
        s: Complex64,
        rho: &[Complex64],
        out: &mut [Complex64],
        dim: usize,
    ) {
        for &(k, j, v) in op {
            let col_in = &rho[k * dim..(k + 1) * dim];
            let col_out = &mut out[j * dim..(j + 1) * dim];
            let sv = s * v;
            for r in 0..dim {
                col_out[r] += sv * col_in[r];
            }
        }
    }

    /// `out = L[ρ]` computed term by term on the dense matrix.
    fn eval(&mut self, rho: &[Complex64], out: &mut [Complex64]) {
        let d = self.dim;
        out.fill(Complex64::ZERO);
        let minus_i = Complex64::new(0.0, -1.0);
        let plus_i = Complex64::new(0.0, 1.0);
        Self::add_left_mul(&self.h, minus_i, rho, out, d);
        Self::add_right_mul(&self.h, plus_i, rho, out, d);
        let minus_half = Complex64::new(-0.5, 0.0);
        Self::add_left_mul(&self.gain, minus_half, rho, out, d);
        Self::add_right_mul(&self.gain, minus_half, rho, out, d);
        for c in &self.jumps {
            // C ρ C†: T = C·ρ, then out += T·C† — the right factor C† has
            // entries (c, r, v̄) for each (r, c, v) of C.
            self.scratch.fill(Complex64::ZERO);
            Self::add_left_mul(c, Complex64::ONE, rho, &mut self.scratch, d);
            for &(r, k, v) in c {
                // column r of out += v̄ · column k of scratch
                let col_in_ptr = k * d;
                let col_out_ptr = r * d;
                let vc = v.conj();
                for i in 0..d {
                    // safety: disjoint ranges are not guaranteed, use indexing
                    let t = self.scratch[col_in_ptr + i] * vc;
                    out[col_out_ptr + i] += t;
                }
            }
        }
    }
}

/// Integrate `dρ/dt = L[ρ]` from `rho0` to `t_final` with an embedded
/// Dormand–Prince 5(4) pair and PI-free standard step control.
///
/// Trace and Hermiticity are monitored (never repaired); drifting past
/// `opts.drift_tol` is an error, as is step-size underflow.
pub fn time_evolve(
    h: &Operator,
    jumps: &[Operator],
    rho0: &DensityMatrix,
    t_final: f64,
    opts: &EvolveOptions,
) -> Result<DensityMatrix> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::Params(format!(
            "t_final must be positive and finite, got {t_final}"
        )));
    }
    if rho0.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: rho0.dim(),
        });
    }
    rho0.validate()?;

    let mut rhs = MasterRhs::new(h, jumps)?;
    let d = h.dim();
    let n = d * d;

    // Dormand–Prince 5(4) coefficients.
    const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    /// Fifth-order weights (identical to the last A row; FSAL pair).
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    /// Embedded fourth-order weights.
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let mut y: Vec<Complex64> = rho0.matrix().as_slice().to_vec();
    let mut k: Vec<Vec<Complex64>> = (0..7).map(|_| vec![Complex64::ZERO; n]).collect();
    let mut y_stage = vec![Complex64::ZERO; n];
    let mut y_new = vec![Complex64::ZERO; n];

    let initial_trace = trace_of_flat(&y, d);

    let mut t = 0.0f64;
    let mut dt = opts
        .initial_dt
        .unwrap_or_else(|| (t_final / 10.0).min(1e-3))
        .min(t_final);
    let dt_floor = t_final * 1e-14;

    rhs.eval(&y, &mut k[0]);
    let mut steps = 0usize;
    while t < t_final {
        if steps >= opts.max_steps {
            return Err(Error::StepUnderflow { t, dt });
        }
        if dt < dt_floor {
            return Err(Error::StepUnderflow { t, dt });
        }
        if t + dt > t_final {
            dt = t_final - t;
        }

        // Stages 2..7 (k[0] is fresh from FSAL or the initial evaluation).
        for s in 1..7 {
            y_stage.copy_from_slice(&y);
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s - 1][j];
                if a != 0.0 {
                    let adt = Complex64::new(a * dt, 0.0);
                    for i in 0..n {
                        y_stage[i] += adt * kj[i];
                    }
                }
            }
            let _ = C; // stage times are implicit: the generator is autonomous
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            rhs.eval(&y_stage, &mut tail[0]);
        }

        // Fifth-order candidate and embedded error estimate.
        y_new.copy_from_slice(&y);
        for (j, kj) in k.iter().enumerate() {
            if B5[j] != 0.0 {
                let w = Complex64::new(B5[j] * dt, 0.0);
                for i in 0..n {
                    y_new[i] += w * kj[i];
                }
            }
        }
        let mut err_sq = 0.0f64;
        for i in 0..n {
            let mut e = Complex64::ZERO;
            for (j, kj) in k.iter().enumerate() {
                let w = B5[j] - B4[j];
                if w != 0.0 {
                    e += Complex64::new(w * dt, 0.0) * kj[i];
                }
            }
            let tol = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            let ratio = e.norm() / tol;
            err_sq += ratio * ratio;
        }
        let err = (err_sq / n as f64).sqrt();

        if err <= 1.0 {
            t += dt;
            std::mem::swap(&mut y, &mut y_new);
            // FSAL: k7 of the accepted step is k1 of the next.
            let last = k.pop().unwrap();
            k.insert(0, last);
            steps += 1;
        } else {
            rhs.eval(&y, &mut k[0]);
        }
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        dt = (dt * factor).min(t_final);
    }

    // Drift checks over the full interval.
    let final_trace = trace_of_flat(&y, d);
    let trace_drift = (final_trace - initial_trace).norm();
    if trace_drift > opts.drift_tol {
        return Err(Error::IntegrationDrift {
            what: "trace",
            value: trace_drift,
            tol: opts.drift_tol,
        });
    }
    let rho = DensityMatrix::from_matrix(DMatrix::from_vec(d, d, y))?;
    let herm = rho.hermiticity_defect();
    if herm > opts.drift_tol.max(rho0.hermiticity_defect()) {
        return Err(Error::IntegrationDrift {
            what: "hermiticity",
            value: herm,
            tol: opts.drift_tol,
        });
    }
    Ok(rho)
}

fn trace_of_flat(y: &[Complex64], d: usize) -> Complex64 {
    (0..d).map(|j| y[j * d + j]).sum()
}
