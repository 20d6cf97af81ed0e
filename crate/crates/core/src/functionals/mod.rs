//! Critical-curve tracking, auxiliary quantities, energies, dissipations and
//! the comparison inequalities between them.

pub mod auxiliary;
pub mod curve;
pub mod cutoffs;
pub mod energy;
pub mod lemmas;

pub use auxiliary::{
    compute_bar_hat_g, compute_cj, compute_gj, compute_hj, compute_tilde_gj, reconstruct_dxju, FieldSpectra,
};
pub use curve::{evolve_critical_curve, find_critical_curve, CriticalCurve};
pub use cutoffs::{Cutoffs, VorticityFloor};
pub use energy::{energies, EnergyFamilies, EnergyParams, EnergyReport};
pub use lemmas::{appendix_lemma_suite, relations_check, LemmaBounds, RatioReport, RelationsReport};
