use crate::linalg::{c, M6, V3};
use crate::{Error, Result};

use super::modes::{chiral_with, eigen_decompose, isotropic_with, Branch, ModeDecomposition, DEGENERACY_TOL};
use super::response::{OpticalResponse, Profile, Susceptibility};

/// Index of a branch in the decomposition order of a [`Medium`].
///
/// Isotropic: `0` null, `1` = `+c₀‖k‖`, `2` = `−c₀‖k‖`.
/// Chiral: `0` null, `1..=4` = `ω₁..ω₄`.
/// General: ascending eigenvalue order.
pub type ModeId = usize;

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Isotropic { permittivity: f64, permeability: f64 },
    Chiral { permittivity: f64, permeability: f64, kappa: f64 },
    General,
}

/// Background medium: reference response, spatial profile and the family
/// that decides between closed-form and numeric mode decompositions.
#[derive(Clone, Debug, PartialEq)]
pub struct Medium {
    pub response: OpticalResponse,
    pub profile: Profile,
    family: Family,
}

impl Medium {
    pub fn isotropic(permittivity: f64, permeability: f64) -> Result<Self> {
        Ok(Self {
            response: OpticalResponse::isotropic(permittivity, permeability)?,
            profile: Profile::Uniform,
            family: Family::Isotropic { permittivity, permeability },
        })
    }

    pub fn chiral(permittivity: f64, permeability: f64, kappa: f64) -> Result<Self> {
        Ok(Self {
            response: OpticalResponse::chiral(permittivity, permeability, kappa)?,
            profile: Profile::Uniform,
            family: Family::Chiral { permittivity, permeability, kappa },
        })
    }

    /// Any positive-definite response, decomposed numerically.
    pub fn general(response: OpticalResponse) -> Self {
        Self { response, profile: Profile::Uniform, family: Family::General }
    }

    pub fn with_profile(mut self, profile: Profile) -> Self {
        self.profile = profile;
        self
    }

    pub fn with_susceptibility(mut self, s: Susceptibility) -> Self {
        self.response.susceptibility = s;
        self
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self.family, Family::General)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.profile.is_uniform()
    }

    /// Reference `c₀ = 1/√(εμ)` of the analytic families.
    pub fn light_speed(&self) -> Option<f64> {
        match self.family {
            Family::Isotropic { permittivity, permeability } | Family::Chiral { permittivity, permeability, .. } => {
                Some(1.0 / (permittivity * permeability).sqrt())
            }
            Family::General => None,
        }
    }

    /// Number of branches (analytic families only; general media may vary
    /// with `k` through accidental degeneracies).
    pub fn branch_count(&self) -> Option<usize> {
        match self.family {
            Family::Isotropic { .. } => Some(3),
            Family::Chiral { .. } => Some(5),
            Family::General => None,
        }
    }

    pub fn speed_factor(&self, x: &V3) -> Result<f64> {
        let f = self.profile.factor(x);
        if !(f > 0.0) || !f.is_finite() {
            return Err(Error::NonPositiveDefinite);
        }
        Ok(f)
    }

    /// `K₀(x) = K₀ / f(x)`.
    pub fn response_at(&self, x: &V3) -> Result<M6> {
        Ok(self.response.matrix() * c(1.0 / self.speed_factor(x)?))
    }

    pub fn decompose(&self, x: &V3, k: &V3) -> Result<ModeDecomposition> {
        let f = self.speed_factor(x)?;
        match self.family {
            Family::General => eigen_decompose(&self.response_at(x)?, k),
            _ => {
                let d = self.reference_decomposition(k)?;
                if f == 1.0 {
                    return Ok(d);
                }
                Ok(ModeDecomposition {
                    wavevector: d.wavevector,
                    response: d.response * c(1.0 / f),
                    branches: d.branches.iter().map(|b| b.scaled(f)).collect(),
                })
            }
        }
    }

    fn reference_decomposition(&self, k: &V3) -> Result<ModeDecomposition> {
        match self.family {
            Family::Isotropic { permittivity, permeability } => {
                isotropic_with(self.response.matrix(), permittivity, permeability, k)
            }
            Family::Chiral { permittivity, permeability, kappa } => {
                chiral_with(self.response.matrix(), permittivity, permeability, kappa, k)
            }
            Family::General => eigen_decompose(&self.response.matrix(), k),
        }
    }

    /// Per-mode phase speed `ω_α(k)/‖k‖` at `f = 1` for analytic families.
    pub fn mode_speed(&self, mode: ModeId) -> Option<f64> {
        let c0 = self.light_speed()?;
        match (&self.family, mode) {
            (Family::Isotropic { .. }, 0) => Some(0.0),
            (Family::Isotropic { .. }, 1) => Some(c0),
            (Family::Isotropic { .. }, 2) => Some(-c0),
            (Family::Chiral { .. }, 0) => Some(0.0),
            (Family::Chiral { kappa, .. }, 1) => Some(c0 / (1.0 + kappa)),
            (Family::Chiral { kappa, .. }, 2) => Some(-c0 / (1.0 + kappa)),
            (Family::Chiral { kappa, .. }, 3) => Some(c0 / (1.0 - kappa)),
            (Family::Chiral { kappa, .. }, 4) => Some(-c0 / (1.0 - kappa)),
            _ => None,
        }
    }

    pub fn frequency(&self, mode: ModeId, x: &V3, k: &V3) -> Result<f64> {
        if let Some(v) = self.mode_speed(mode) {
            if k.norm() == 0.0 {
                return Err(Error::ZeroWaveVector);
            }
            return Ok(self.speed_factor(x)? * v * k.norm());
        }
        if self.is_analytic() {
            return Err(Error::InvalidArgument(format!("mode {mode} does not exist")));
        }
        Ok(self.branch(mode, x, k)?.frequency)
    }

    pub fn branch(&self, mode: ModeId, x: &V3, k: &V3) -> Result<Branch> {
        let d = self.decompose(x, k)?;
        d.branches.into_iter().nth(mode).ok_or_else(|| Error::InvalidArgument(format!("mode {mode} does not exist")))
    }

    /// Branch at `(x, k)` whose eigenvalue continues `reference`; fails when
    /// the nearest eigenvalue is not unique within the degeneracy tolerance.
    pub fn tracked_branch(&self, x: &V3, k: &V3, reference: f64) -> Result<Branch> {
        let d = self.decompose(x, k)?;
        let i = d.nearest(reference);
        let best = (d.branches[i].frequency - reference).abs();
        let scale = 1.0 + d.branches.iter().map(|b| b.frequency.abs()).fold(0.0, f64::max);
        for (j, b) in d.branches.iter().enumerate() {
            if j != i && (b.frequency - reference).abs() - best <= DEGENERACY_TOL * scale {
                return Err(Error::BranchTrackingLost);
            }
        }
        Ok(d.branches[i].clone())
    }
}
