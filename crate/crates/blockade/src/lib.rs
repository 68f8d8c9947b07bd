//! Driven-dissipative cavity QED simulator for two three-level ladder atoms
//! coupled to a single cavity mode.
//!
//! The physical system: two identical atoms with levels `g`, `m`, `e` sit in
//! a lossy cavity. A pump field drives `g ↔ m`, a control field dresses
//! `m ↔ e`, and the cavity couples to `g ↔ m` with per-atom strengths that
//! may differ in sign. Dissipation enters through cavity decay `κ` and
//! spontaneous emission `γ_m`, `γ_e`. All rates and frequencies are quoted in
//! units of `κ` with `ħ = 1`.
//!
//! Layer map, bottom to top:
//!
//! * [`hilbert`] — truncated-Fock tensor algebra (sparse operators, kets).
//! * [`model`] — parameter set, rotating-frame Hamiltonian, jump operators.
//! * [`dynamics`] — Liouvillian assembly, steady-state solve, and an
//!   independent adaptive time integrator used as a cross-check oracle.
//! * [`observables`] — photon statistics (`⟨a†a⟩`, `g⁽²⁾`, `g⁽³⁾`),
//!   dressed-state manifold spectra, and peak finding on scans.
//! * [`sweep`] — deterministic one-parameter scans with per-point fault
//!   isolation and a Fock-cutoff convergence ladder.
//! * [`cli`] — config ingestion, figure presets, CSV/SVG emission, and a
//!   self-check suite; the `blockade` binary is a thin wrapper around it.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod model;
pub mod observables;
pub mod sweep;

pub use error::{Error, Result};
