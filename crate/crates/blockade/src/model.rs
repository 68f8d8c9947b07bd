//! Physical parameters, rotating-frame Hamiltonian, and dissipation channels
//! for the two-atom ladder system.
//!
//! In the frame rotating with the pump and control fields the Hamiltonian is
//! (`ħ = 1`, all rates in units of the cavity decay `κ`):
//!
//! ```text
//! H = Σ_j (Δ_m S^j_mm + Δ_e S^j_ee) + Δ_cav a†a
//!   + Σ_j (g_j a S^j_mg + Ω_P S^j_mg + Ω_C S^j_em + h.c.)
//! ```
//!
//! with `S^j_αβ = |α⟩_j⟨β|`. The detunings are not independent: the cavity is
//! tuned to the `g ↔ m` transition, so `Δ_cav = Δ_p`, `Δ_m = Δ_p`, and
//! `Δ_e = Δ_p + Δ_c`. An optional `cavity_offset` shifts `Δ_cav` away from
//! `Δ_p` for diagnostics only; every figure preset keeps it at zero.
//!
//! Dissipation is photon loss at `κ` plus *downward* spontaneous emission,
//! `e → m` at `γ_e` and `m → g` at `γ_m`. Upward jump operators would make
//! the vacuum unstable, contradicting the undriven fixed point, so the jump
//! set is `{√κ a, √γ_e S^j_me, √γ_m S^j_gm}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    annihilation, atomic_operator, number_operator, Atom, HilbertSpace, Level, Operator,
};

/// Complete physical parameter set, in units of `κ`.
///
/// `g1`, `g2` may differ in sign: opposite signs place the atoms half a
/// cavity wavelength apart and forbid one-photon excitation of the symmetric
/// atomic mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Cavity coupling of atom 1 [κ].
    pub g1: f64,
    /// Cavity coupling of atom 2 [κ].
    pub g2: f64,
    /// Pump Rabi frequency Ω_P on `g ↔ m` [κ].
    pub omega_p: f64,
    /// Control Rabi frequency Ω_C on `m ↔ e` [κ].
    pub omega_c: f64,
    /// Pump detuning Δ_p [κ].
    pub delta_p: f64,
    /// Control detuning Δ_c [κ].
    pub delta_c: f64,
    /// Cavity decay rate κ; sets the unit and must be positive.
    pub kappa: f64,
    /// Spontaneous decay rate of `|m⟩` [κ].
    pub gamma_m: f64,
    /// Spontaneous decay rate of `|e⟩` [κ].
    pub gamma_e: f64,
    /// Fock cutoff N_c (photon numbers `0..=N_c`).
    pub fock_cutoff: usize,
    /// Diagnostic offset added to Δ_cav on top of Δ_p; 0 in all presets.
    #[serde(default)]
    pub cavity_offset: f64,
}

impl ModelParams {
    /// Validate physical and numerical requirements.
    ///
    /// `κ > 0` (it sets the unit), decay rates nonnegative, every value
    /// finite, and `N_c ≥ 2` so that `g⁽²⁾` has support. `g⁽³⁾` is only
    /// meaningful for `N_c ≥ 3`; the sweep layer never reports it below that.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("g1", self.g1),
            ("g2", self.g2),
            ("omega_p", self.omega_p),
            ("omega_c", self.omega_c),
            ("delta_p", self.delta_p),
            ("delta_c", self.delta_c),
            ("kappa", self.kappa),
            ("gamma_m", self.gamma_m),
            ("gamma_e", self.gamma_e),
            ("cavity_offset", self.cavity_offset),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::Params(format!("{name} must be finite, got {v}")));
            }
        }
        if self.kappa <= 0.0 {
            return Err(Error::Params(format!(
                "kappa must be positive (it sets the unit), got {}",
                self.kappa
            )));
        }
        if self.gamma_m < 0.0 || self.gamma_e < 0.0 {
            return Err(Error::Params(format!(
                "decay rates must be nonnegative, got gamma_m = {}, gamma_e = {}",
                self.gamma_m, self.gamma_e
            )));
        }
        if self.fock_cutoff < 2 {
            return Err(Error::Params(format!(
                "fock_cutoff must be at least 2, got {}",
                self.fock_cutoff
            )));
        }
        Ok(())
    }

    /// Cavity detuning `Δ_cav = Δ_p + cavity_offset`.
    pub fn delta_cav(&self) -> f64 {
        self.delta_p + self.cavity_offset
    }

    /// Detuning of `|m⟩`: `Δ_m = Δ_p`.
    pub fn delta_m(&self) -> f64 {
        self.delta_p
    }

    /// Detuning of `|e⟩`: `Δ_e = Δ_p + Δ_c`.
    pub fn delta_e(&self) -> f64 {
        self.delta_p + self.delta_c
    }

    /// The truncated Hilbert space for this cutoff.
    pub fn space(&self) -> HilbertSpace {
        HilbertSpace::new(self.fock_cutoff)
    }

    /// Copy with a different Fock cutoff (used by the convergence ladder).
    pub fn with_fock_cutoff(&self, fock_cutoff: usize) -> ModelParams {
        ModelParams {
            fock_cutoff,
            ..self.clone()
        }
    }

    /// Copy with every frequency and rate multiplied by `s > 0`.
    ///
    /// The steady state depends only on rate ratios, so this leaves all
    /// normalized observables unchanged; the property suite relies on it.
    pub fn scaled_by(&self, s: f64) -> ModelParams {
        ModelParams {
            g1: self.g1 * s,
            g2: self.g2 * s,
            omega_p: self.omega_p * s,
            omega_c: self.omega_c * s,
            delta_p: self.delta_p * s,
            delta_c: self.delta_c * s,
            kappa: self.kappa * s,
            gamma_m: self.gamma_m * s,
            gamma_e: self.gamma_e * s,
            fock_cutoff: self.fock_cutoff,
            cavity_offset: self.cavity_offset * s,
        }
    }

    /// Copy with both cavity couplings negated (photon-parity gauge).
    pub fn gauge_flipped(&self) -> ModelParams {
        ModelParams {
            g1: -self.g1,
            g2: -self.g2,
            ..self.clone()
        }
    }

    /// Copy with the two atoms exchanged.
    pub fn atom_swapped(&self) -> ModelParams {
        ModelParams {
            g1: self.g2,
            g2: self.g1,
            ..self.clone()
        }
    }
}

/// Assemble the rotating-frame Hamiltonian on `space`.
///
/// Couplings and drives enter exactly as written in the module header — the
/// Rabi frequencies carry no factor ½. The result is exactly Hermitian:
/// every off-diagonal term is inserted together with its conjugate.
pub fn build_hamiltonian(params: &ModelParams, space: &HilbertSpace) -> Result<Operator> {
    params.validate()?;
    let a = annihilation(space)?;
    let re = |x: f64| num_complex::Complex64::new(x, 0.0);

    let mut h = Operator::zero(space.dim());

    // Detuning terms (diagonal, real). The dedicated number operator carries
    // exact integer diagonals, unlike the product a†·a which rounds √n·√n.
    h = h.checked_add(&number_operator(space).scaled(re(params.delta_cav())))?;
    for atom in Atom::ALL {
        let s_mm = atomic_operator(space, atom, Level::M, Level::M);
        let s_ee = atomic_operator(space, atom, Level::E, Level::E);
        h = h.checked_add(&s_mm.scaled(re(params.delta_m())))?;
        h = h.checked_add(&s_ee.scaled(re(params.delta_e())))?;
    }

    // Coupling and drive terms, inserted with their adjoints.
    for (atom, g) in [(Atom::One, params.g1), (Atom::Two, params.g2)] {
        let s_mg = atomic_operator(space, atom, Level::M, Level::G);
        let s_em = atomic_operator(space, atom, Level::E, Level::M);
        let mut lowering_part = Operator::zero(space.dim());
        lowering_part = lowering_part.checked_add(&(&a * &s_mg).scaled(re(g)))?;
        lowering_part = lowering_part.checked_add(&s_mg.scaled(re(params.omega_p)))?;
        lowering_part = lowering_part.checked_add(&s_em.scaled(re(params.omega_c)))?;
        h = h.checked_add(&lowering_part)?;
        h = h.checked_add(&lowering_part.adjoint())?;
    }
    Ok(h)
}

/// Jump operators of the master equation, scaled by the square roots of
/// their rates: `{√κ a, √γ_e S¹_me, √γ_e S²_me, √γ_m S¹_gm, √γ_m S²_gm}`.
///
/// Channels with exactly zero rate are omitted; the order of the remaining
/// operators is stable (cavity first, then `e → m`, then `m → g`).
pub fn collapse_operators(params: &ModelParams, space: &HilbertSpace) -> Result<Vec<Operator>> {
    params.validate()?;
    let re = |x: f64| num_complex::Complex64::new(x, 0.0);
    let mut jumps = Vec::new();

    jumps.push(annihilation(space)?.scaled(re(params.kappa.sqrt())));
    if params.gamma_e > 0.0 {
        for atom in Atom::ALL {
            jumps.push(
                atomic_operator(space, atom, Level::M, Level::E).scaled(re(params.gamma_e.sqrt())),
            );
        }
    }
    if params.gamma_m > 0.0 {
        for atom in Atom::ALL {
            jumps.push(
                atomic_operator(space, atom, Level::G, Level::M).scaled(re(params.gamma_m.sqrt())),
            );
        }
    }
    Ok(jumps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{number_operator, Ket};
    use num_complex::Complex64;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn base_params() -> ModelParams {
        ModelParams {
            g1: 20.0,
            g2: 20.0,
            omega_p: 0.2,
            omega_c: 0.0,
            delta_p: 0.0,
            delta_c: 0.0,
            kappa: 1.0,
            gamma_m: 1.0,
            gamma_e: 0.01,
            fock_cutoff: 3,
            cavity_offset: 0.0,
        }
    }

    fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
        ModelParams {
            g1: 40.0 * (rng.random::<f64>() - 0.5),
            g2: 40.0 * (rng.random::<f64>() - 0.5),
            omega_p: 4.0 * rng.random::<f64>(),
            omega_c: 20.0 * rng.random::<f64>(),
            delta_p: 80.0 * (rng.random::<f64>() - 0.5),
            delta_c: 80.0 * (rng.random::<f64>() - 0.5),
            kappa: 0.5 + rng.random::<f64>(),
            gamma_m: 2.0 * rng.random::<f64>(),
            gamma_e: 0.1 * rng.random::<f64>(),
            fock_cutoff: 2 + (rng.random::<u32>() % 3) as usize,
            cavity_offset: 0.0,
        }
    }

    /// Photon-parity unitary (−1)^{a†a}.
    fn parity(space: &HilbertSpace) -> Operator {
        Operator::from_entries(
            space.dim(),
            space.basis_iter().map(|(i, _, _, n)| {
                (i, i, Complex64::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
            }),
        )
        .unwrap()
    }

    /// Atom-exchange unitary |s1, s2, n⟩ → |s2, s1, n⟩.
    fn swap(space: &HilbertSpace) -> Operator {
        Operator::from_entries(
            space.dim(),
            space
                .basis_iter()
                .map(|(i, s1, s2, n)| (space.index_of(s2, s1, n), i, Complex64::new(1.0, 0.0))),
        )
        .unwrap()
    }

    #[test]
    fn derived_detunings_follow_pump_and_control() {
        let mut p = base_params();
        p.delta_p = -3.0;
        p.delta_c = 7.5;
        assert_eq!(p.delta_cav(), -3.0);
        assert_eq!(p.delta_m(), -3.0);
        assert_eq!(p.delta_e(), 4.5);
        p.cavity_offset = 0.25;
        assert_eq!(p.delta_cav(), -2.75);
        assert_eq!(p.delta_m(), -3.0);
    }

    #[test]
    fn validation_rejects_unphysical_parameters() {
        let mut p = base_params();
        p.kappa = 0.0;
        assert!(p.validate().is_err());
        let mut p = base_params();
        p.gamma_m = -1.0;
        assert!(p.validate().is_err());
        let mut p = base_params();
        p.delta_p = f64::NAN;
        assert!(p.validate().is_err());
        let mut p = base_params();
        p.fock_cutoff = 1;
        assert!(p.validate().is_err());
        assert!(base_params().validate().is_ok());
    }

    #[test]
    fn all_couplings_zero_gives_zero_hamiltonian() {
        let p = ModelParams {
            g1: 0.0,
            g2: 0.0,
            omega_p: 0.0,
            omega_c: 0.0,
            delta_p: 0.0,
            delta_c: 0.0,
            ..base_params()
        };
        let h = build_hamiltonian(&p, &p.space()).unwrap();
        assert_eq!(h.nnz(), 0);
    }

    #[test]
    fn one_excitation_block_splits_by_sqrt2_g() {
        // With equal couplings and no drives/detunings the one-excitation
        // block contains the cavity-coupled pair at ±√2 g plus three
        // uncoupled zero modes (the antisymmetric atomic state and the two
        // e-states).
        let g = 20.0;
        let p = ModelParams {
            omega_p: 0.0,
            ..base_params()
        };
        let space = p.space();
        let h = build_hamiltonian(&p, &space).unwrap();
        let block: Vec<usize> = (0..space.dim())
            .filter(|&i| space.excitation_of(i) == 1)
            .collect();
        assert_eq!(block.len(), 5);
        let mut dense = nalgebra::DMatrix::from_element(5, 5, Complex64::new(0.0, 0.0));
        for (r, &i) in block.iter().enumerate() {
            for (c, &j) in block.iter().enumerate() {
                dense[(r, c)] = h.get(i, j);
            }
        }
        let mut eigs: Vec<f64> = dense.symmetric_eigen().eigenvalues.iter().copied().collect();
        eigs.sort_by(f64::total_cmp);
        let root2g = 2.0_f64.sqrt() * g;
        let want = [-root2g, 0.0, 0.0, 0.0, root2g];
        for (got, want) in eigs.iter().zip(want) {
            assert!((got - want).abs() <= 1e-12 * g, "eigenvalue {got} vs {want}");
        }
    }

    #[test]
    fn hamiltonian_is_exactly_hermitian_for_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for _ in 0..100 {
            let p = random_params(&mut rng);
            let h = build_hamiltonian(&p, &p.space()).unwrap();
            assert_eq!(h.hermiticity_defect(), 0.0);
        }
    }

    #[test]
    fn hamiltonian_is_linear_in_each_coupling() {
        // H(c) = H(0) + c·(H(1) − H(0)) entrywise for each single coupling c.
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        let set = |field: fn(&mut ModelParams, f64), value: f64| {
            let mut p = ModelParams {
                g1: 3.0,
                g2: -2.0,
                omega_p: 1.0,
                omega_c: 4.0,
                delta_p: -5.0,
                delta_c: 2.0,
                ..base_params()
            };
            field(&mut p, value);
            build_hamiltonian(&p, &p.space()).unwrap()
        };
        let fields: [fn(&mut ModelParams, f64); 4] = [
            |p, v| p.omega_p = v,
            |p, v| p.omega_c = v,
            |p, v| p.g1 = v,
            |p, v| p.g2 = v,
        ];
        for field in fields {
            let h0 = set(field, 0.0);
            let h1 = set(field, 1.0);
            let slope = h1.checked_sub(&h0).unwrap();
            for _ in 0..3 {
                let v = 10.0 * (rng.random::<f64>() - 0.5);
                let hv = set(field, v);
                let reconstructed = h0
                    .checked_add(&slope.scaled(Complex64::new(v, 0.0)))
                    .unwrap();
                let diff = hv.checked_sub(&reconstructed).unwrap();
                assert!(diff.max_abs() <= 1e-12 * hv.max_abs().max(1.0));
            }
        }
    }

    #[test]
    fn negating_couplings_is_photon_parity_conjugation() {
        // P H(−g1, −g2) P = H(g1, g2) exactly, with P = (−1)^{a†a}.
        let p = ModelParams {
            g1: 20.0,
            g2: -20.0,
            omega_c: 5.0,
            delta_p: -7.0,
            delta_c: 28.0,
            ..base_params()
        };
        let space = p.space();
        let h = build_hamiltonian(&p, &space).unwrap();
        let flipped = build_hamiltonian(&p.gauge_flipped(), &space).unwrap();
        let par = parity(&space);
        let conjugated = &(&par * &flipped) * &par;
        assert_eq!(conjugated, h);
    }

    #[test]
    fn exchanging_atoms_is_swap_conjugation() {
        // W H(g1, g2) W = H(g2, g1) exactly, and the jump set maps onto
        // itself with the two atoms' operators exchanged.
        let p = ModelParams {
            g1: 13.0,
            g2: -4.0,
            omega_c: 3.0,
            delta_p: 2.0,
            delta_c: -1.0,
            ..base_params()
        };
        let space = p.space();
        let w = swap(&space);
        let h = build_hamiltonian(&p, &space).unwrap();
        let h_swapped = build_hamiltonian(&p.atom_swapped(), &space).unwrap();
        assert_eq!(&(&w * &h) * &w, h_swapped);

        let jumps = collapse_operators(&p, &space).unwrap();
        let jumps_swapped = collapse_operators(&p.atom_swapped(), &space).unwrap();
        // Order within each rate pair is (atom1, atom2), so conjugating by W
        // exchanges positions 1↔2 and 3↔4 while fixing the cavity operator.
        let perm = [0, 2, 1, 4, 3];
        for (k, &pk) in perm.iter().enumerate() {
            assert_eq!(&(&w * &jumps[k]) * &w, jumps_swapped[pk]);
        }
    }

    #[test]
    fn collapse_operator_list_prefactors_and_omissions() {
        // Reference parameters: five operators with prefactors
        // √κ, √(κ/100), √(κ/100), √κ, √κ.
        let p = base_params();
        let space = p.space();
        let jumps = collapse_operators(&p, &space).unwrap();
        assert_eq!(jumps.len(), 5);
        let a = annihilation(&space).unwrap();
        assert_eq!(jumps[0], a.scaled(Complex64::new(1.0, 0.0)));
        let s1_me = atomic_operator(&space, Atom::One, Level::M, Level::E);
        assert_eq!(jumps[1], s1_me.scaled(Complex64::new(0.1, 0.0)));
        let s2_gm = atomic_operator(&space, Atom::Two, Level::G, Level::M);
        assert_eq!(jumps[4], s2_gm.scaled(Complex64::new(1.0, 0.0)));

        // Zero rates drop their channels entirely.
        let p = ModelParams {
            gamma_m: 0.0,
            gamma_e: 0.0,
            ..base_params()
        };
        let jumps = collapse_operators(&p, &p.space()).unwrap();
        assert_eq!(jumps.len(), 1);
        assert_eq!(jumps[0], a);
    }

    #[test]
    fn jump_operators_annihilate_the_ground_state() {
        // Every jump operator maps |g,g,0⟩ to zero: the vacuum is a fixed
        // point of pure dissipation.
        let p = base_params();
        let space = p.space();
        let ground = Ket::basis(&space, Level::G, Level::G, 0);
        for jump in collapse_operators(&p, &space).unwrap() {
            assert_eq!(jump.apply(&ground), Ket::zero(space.dim()));
        }
    }

    #[test]
    fn number_operator_appears_with_cavity_detuning() {
        let p = ModelParams {
            g1: 0.0,
            g2: 0.0,
            omega_p: 0.0,
            omega_c: 0.0,
            delta_p: 2.5,
            delta_c: 0.0,
            ..base_params()
        };
        let space = p.space();
        let h = build_hamiltonian(&p, &space).unwrap();
        // H = Δ_p (a†a + Σ_j S^j_mm + Σ_j S^j_ee); check the cavity part on
        // a pure photon state.
        let ket = Ket::basis(&space, Level::G, Level::G, 2);
        let n_op = number_operator(&space);
        let expect = ket.inner(&h.apply(&ket));
        let n_val = ket.inner(&n_op.apply(&ket));
        assert_eq!(expect, Complex64::new(2.5, 0.0) * n_val);
    }
}
