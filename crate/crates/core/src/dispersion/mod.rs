//! Maxwell symbol, optical response and mode decompositions of the
//! dispersion matrix `L₀ = K₀⁻¹ M(k)`.

mod medium;
mod modes;
mod response;

pub use medium::{Family, Medium, ModeId};
pub use modes::{
    chiral_branches, eigen_decompose, isotropic_branches, maxwell_symbol, null_mode_basis, Branch, ModeDecomposition,
    DEGENERACY_TOL,
};
pub use response::{LorentzModel, OpticalResponse, Profile, Susceptibility, SusceptibilityTable};
