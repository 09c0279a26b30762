//! Local symmetries of discrete planar lattices.
//!
//! A lattice here is a set of sites on integer coordinates with complex
//! on-site potentials and complex hoppings between distinct sites. A *site
//! mapping* is a bijection of the site set onto itself. When the Hamiltonian
//! restricted to a connected set of sites is invariant under such a mapping,
//! that set is a *symmetry domain*, and a family of non-local densities and
//! currents obeys a continuity equation and, for stationary states, a
//! Kirchhoff-type law on it. This crate builds lattices and mappings, detects
//! domains, solves the eigenproblem, evaluates the currents, and checks the
//! structural consequences (current constancy along chains, summed currents
//! across regions, open-chain amplitude similarity, closed-loop parity and
//! translation relations).
//!
//! ```
//! use symlat::{build_lattice, SiteSpec, HopSpec, eigenstates, Tolerances};
//! use num_complex::Complex64;
//!
//! let z = |re: f64| Complex64::new(re, 0.0);
//! let lat = build_lattice(
//!     "three-chain",
//!     false,
//!     &[
//!         SiteSpec { id: 1, x: 0, y: 0, v: z(0.0) },
//!         SiteSpec { id: 2, x: 1, y: 0, v: z(0.0) },
//!         SiteSpec { id: 3, x: 2, y: 0, v: z(0.0) },
//!     ],
//!     &[
//!         HopSpec { a: 1, b: 2, h: z(1.0) },
//!         HopSpec { a: 2, b: 3, h: z(1.0) },
//!     ],
//! )
//! .unwrap();
//! let spectrum = eigenstates(&lat, &Tolerances::default()).unwrap();
//! let energies: Vec<f64> = spectrum.states.iter().map(|s| s.energy).collect();
//! assert!((energies[0] + 2f64.sqrt()).abs() < 1e-12);
//! assert!(energies[1].abs() < 1e-12);
//! assert!((energies[2] - 2f64.sqrt()).abs() < 1e-12);
//! ```

pub mod analysis;
pub mod book;
pub mod currents;
pub mod dynamics;
pub mod latfile;
pub mod lattice;
pub mod mapping;
pub mod spectral;
pub mod symmetry;
pub mod theorems;

pub use currents::{
    beta, current_field, kirchhoff_residuals, nonlocal_current, nonlocal_density,
    probability_current, source_term, summed_current, CurrentField, CurrentsError, Direction,
    KirchhoffReport, KirchhoffSite, Region, RegionError, SiteFlags, SumRange,
};
pub use dynamics::{
    continuity_residual, evolve, sigma_time_derivative, DynamicsError, Propagator, WaveState,
};
pub use lattice::{
    build_lattice, hamiltonian_matrix, HopSpec, Lattice, LatticeError, SiteId, SiteSpec,
};
pub use mapping::{
    build_mapping, keeps_connectivity, Axis, MappingError, MappingKind, SiteMapping,
};
pub use spectral::{
    commutator_norm, eigenstates, symmetry_adapt, AdaptOutcome, EigenState, SpectralError,
    Spectrum,
};
pub use symmetry::{
    detect_domains_exhaustive, detect_maximal_domains, verify_domain, DomainError,
    DomainViolation, SymmetryDomain,
};
pub use theorems::{
    check_domainwise_constancy, check_summed_constancy, closed_loop_reflection,
    closed_loop_translation, open_chain_similarity, Hypothesis, SimilarityConstant,
    TheoremError, TheoremReport, Verdict, Witness,
};

/// Environment variable that scales every tolerance below (default `1`).
pub const TOLERANCE_SCALE_VAR: &str = "SYMLAT_TOLERANCE_SCALE";

/// Pinned numeric tolerances. All checks in the crate read from here; the
/// only admitted adjustment is a global scale factor taken from
/// `SYMLAT_TOLERANCE_SCALE`.
#[derive(Debug, Clone)]
pub struct Tolerances {
    /// Entrywise Hamiltonian comparison in the local-symmetry condition.
    pub sym: f64,
    /// Eigenpair residual `max_k ||H a_k - E_k a_k||_inf`.
    pub eig: f64,
    /// Degeneracy grouping threshold, relative to `max|E|`.
    pub deg_rel: f64,
    /// Hermiticity gate: largest admissible `|Im v_n|`.
    pub herm: f64,
    /// Commutator norm `||HP - PH||_F` for symmetry adaptation.
    pub comm: f64,
    /// Kirchhoff-law residual for normalized states, per unit of the largest
    /// Hamiltonian entry magnitude.
    pub kirchhoff: f64,
    /// Residuals inside theorem checkers (current equalities, amplitude
    /// equalities, similarity spread).
    pub theorem: f64,
    /// Threshold below which an amplitude counts as vanishing (isolated
    /// zeros in chains, the attachment amplitude of a loop).
    pub amp_zero: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            sym: 1e-12,
            eig: 1e-10,
            deg_rel: 1e-8,
            herm: 1e-12,
            comm: 1e-10,
            kirchhoff: 1e-9,
            theorem: 1e-9,
            amp_zero: 1e-8,
        }
    }
}

impl Tolerances {
    /// Default tolerances multiplied by `scale`.
    pub fn scaled(scale: f64) -> Self {
        let base = Tolerances::default();
        Tolerances {
            sym: base.sym * scale,
            eig: base.eig * scale,
            deg_rel: base.deg_rel * scale,
            herm: base.herm * scale,
            comm: base.comm * scale,
            kirchhoff: base.kirchhoff * scale,
            theorem: base.theorem * scale,
            amp_zero: base.amp_zero * scale,
        }
    }

    /// Tolerances scaled by `SYMLAT_TOLERANCE_SCALE` when set (default 1).
    pub fn from_env() -> Self {
        match std::env::var(TOLERANCE_SCALE_VAR) {
            Ok(s) => match s.trim().parse::<f64>() {
                Ok(scale) if scale.is_finite() && scale > 0.0 => Tolerances::scaled(scale),
                _ => Tolerances::default(),
            },
            Err(_) => Tolerances::default(),
        }
    }

    /// Kirchhoff residual bound for a given lattice: the base tolerance
    /// grows linearly with the largest Hamiltonian entry magnitude once that
    /// exceeds one.
    pub fn kirchhoff_for(&self, lat: &lattice::Lattice) -> f64 {
        self.kirchhoff * lat.max_entry_magnitude().max(1.0)
    }

    /// Degeneracy grouping threshold for a spectrum with largest absolute
    /// energy `max_abs_energy`.
    pub fn degeneracy(&self, max_abs_energy: f64) -> f64 {
        self.deg_rel * max_abs_energy
    }
}
