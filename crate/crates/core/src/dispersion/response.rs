use nalgebra::{Matrix3, SymmetricEigen};

use crate::linalg::{block6, c, cholesky_lower, C64, I, M6, V3};
use crate::{Error, Result};

/// Lorentz oscillator: `ε̂_d(ω) = ε ω_p² / (−ω² + iωΓ + ω₀²)` in the
/// electric block.
#[derive(Clone, Debug, PartialEq)]
pub struct LorentzModel {
    pub permittivity: f64,
    pub plasma: f64,
    pub resonance: f64,
    pub damping: f64,
}

impl LorentzModel {
    pub fn new(permittivity: f64, plasma: f64, resonance: f64, damping: f64) -> Result<Self> {
        if !(damping >= 0.0) || !(plasma >= 0.0) || !(resonance >= 0.0) || !(permittivity > 0.0) {
            return Err(Error::InvalidArgument(
                "Lorentz model needs eps > 0 and plasma, resonance, damping >= 0".into(),
            ));
        }
        Ok(Self { permittivity, plasma, resonance, damping })
    }

    pub fn eps_d(&self, omega: f64) -> C64 {
        let den = C64::new(self.resonance.powi(2) - omega * omega, omega * self.damping);
        c(self.permittivity * self.plasma.powi(2)) / den
    }

    /// Relative susceptibility `ε̂₁ = ε̂_d / ε`.
    pub fn relative(&self, omega: f64) -> C64 {
        self.eps_d(omega) / self.permittivity
    }

    /// `Re{iω ε̂₁(ω)} = ω_p² ω² Γ / ((ω₀² − ω²)² + ω² Γ²)`.
    pub fn attenuation(&self, omega: f64) -> f64 {
        let w2 = omega * omega;
        let num = self.plasma.powi(2) * w2 * self.damping;
        let den = (self.resonance.powi(2) - w2).powi(2) + w2 * self.damping.powi(2);
        if num == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}

/// User-supplied `ω ↦ K̂_d(ω)` for `ω ≥ 0`, linearly interpolated and held
/// constant outside the table. Negative frequencies use
/// `K̂_d(−ω) = conj(K̂_d(ω))` (real-valued kernel in time).
#[derive(Clone, Debug, PartialEq)]
pub struct SusceptibilityTable {
    freqs: Vec<f64>,
    values: Vec<M6>,
}

impl SusceptibilityTable {
    pub fn new(freqs: Vec<f64>, values: Vec<M6>) -> Result<Self> {
        if freqs.is_empty() || freqs.len() != values.len() {
            return Err(Error::InvalidArgument("susceptibility table needs matching, nonempty columns".into()));
        }
        if freqs.windows(2).any(|w| !(w[1] > w[0])) || freqs[0] < 0.0 {
            return Err(Error::InvalidArgument("susceptibility table frequencies must be >= 0 and increasing".into()));
        }
        Ok(Self { freqs, values })
    }

    pub fn eval(&self, omega: f64) -> M6 {
        let w = omega.abs();
        let n = self.freqs.len();
        let v = if w <= self.freqs[0] {
            self.values[0]
        } else if w >= self.freqs[n - 1] {
            self.values[n - 1]
        } else {
            let j = self.freqs.partition_point(|f| *f <= w);
            let (f0, f1) = (self.freqs[j - 1], self.freqs[j]);
            let t = (w - f0) / (f1 - f0);
            self.values[j - 1] * c(1.0 - t) + self.values[j] * c(t)
        };
        if omega < 0.0 {
            v.map(|z| z.conj())
        } else {
            v
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub enum Susceptibility {
    #[default]
    None,
    Lorentz(LorentzModel),
    Table(SusceptibilityTable),
}

impl Susceptibility {
    pub fn is_none(&self) -> bool {
        matches!(self, Susceptibility::None)
    }

    /// `K̂_d(ω)`.
    pub fn kernel(&self, omega: f64) -> M6 {
        match self {
            Susceptibility::None => M6::zeros(),
            Susceptibility::Lorentz(l) => {
                let mut m = M6::zeros();
                let e = l.eps_d(omega);
                for i in 0..3 {
                    m[(i, i)] = e;
                }
                m
            }
            Susceptibility::Table(t) => t.eval(omega),
        }
    }

    /// `iω K̂_d(ω)`, taken as zero at `ω = 0`.
    pub fn i_omega_kernel(&self, omega: f64) -> M6 {
        if omega == 0.0 || self.is_none() {
            return M6::zeros();
        }
        self.kernel(omega) * (I * omega)
    }
}

/// Smooth scaling of the background: `K₀(x) = K₀ / f(x)`, so every phase
/// speed is multiplied by `f(x)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum Profile {
    #[default]
    Uniform,
    /// `f(x) = 1 + g·x`.
    Linear { gradient: V3 },
    /// `f(x) = 1 + a exp(−‖x − x₀‖² / 2w²)`.
    Bump { amplitude: f64, center: V3, width: f64 },
}

impl Profile {
    pub fn is_uniform(&self) -> bool {
        match self {
            Profile::Uniform => true,
            Profile::Linear { gradient } => gradient.norm() == 0.0,
            Profile::Bump { amplitude, .. } => *amplitude == 0.0,
        }
    }

    pub fn factor(&self, x: &V3) -> f64 {
        match self {
            Profile::Uniform => 1.0,
            Profile::Linear { gradient } => 1.0 + gradient.dot(x),
            Profile::Bump { amplitude, center, width } => {
                1.0 + amplitude * (-(x - center).norm_squared() / (2.0 * width * width)).exp()
            }
        }
    }

    pub fn gradient(&self, x: &V3) -> V3 {
        match self {
            Profile::Uniform => V3::zeros(),
            Profile::Linear { gradient } => *gradient,
            Profile::Bump { amplitude, center, width } => {
                let d = x - center;
                let g = amplitude * (-d.norm_squared() / (2.0 * width * width)).exp();
                -d * (g / (width * width))
            }
        }
    }
}

/// Instantaneous optical response `K₀ = [[ε, ξ], [ξ*, μ]]` plus the
/// dispersive kernel `K̂_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct OpticalResponse {
    pub permittivity: Matrix3<C64>,
    pub permeability: Matrix3<C64>,
    pub magnetoelectric: Matrix3<C64>,
    pub susceptibility: Susceptibility,
}

impl OpticalResponse {
    pub fn new(permittivity: Matrix3<C64>, permeability: Matrix3<C64>, magnetoelectric: Matrix3<C64>) -> Result<Self> {
        for (name, m) in [("permittivity", &permittivity), ("permeability", &permeability)] {
            let scale = m.norm().max(1.0);
            if (m - m.adjoint()).norm() > 1e-12 * scale {
                return Err(Error::InvalidArgument(format!("{name} must be Hermitian")));
            }
        }
        let r = Self { permittivity, permeability, magnetoelectric, susceptibility: Susceptibility::None };
        r.check_positive()?;
        Ok(r)
    }

    pub fn isotropic(eps: f64, mu: f64) -> Result<Self> {
        Self::new(Matrix3::identity() * c(eps), Matrix3::identity() * c(mu), Matrix3::zeros())
    }

    /// Chiral (bi-isotropic) medium with `ξ = iχ I` and `κ = χ/√(εμ)`.
    pub fn chiral(eps: f64, mu: f64, kappa: f64) -> Result<Self> {
        if !(kappa.abs() < 1.0) {
            return Err(Error::ChiralityOutOfRange(kappa.abs()));
        }
        let chi = kappa * (eps * mu).sqrt();
        Self::new(Matrix3::identity() * c(eps), Matrix3::identity() * c(mu), Matrix3::identity() * (I * chi))
    }

    /// Build from an assembled Hermitian 6×6 matrix.
    pub fn from_matrix(k0: &M6) -> Result<Self> {
        let eps = k0.fixed_view::<3, 3>(0, 0).into_owned();
        let mu = k0.fixed_view::<3, 3>(3, 3).into_owned();
        let xi = k0.fixed_view::<3, 3>(0, 3).into_owned();
        let lower = k0.fixed_view::<3, 3>(3, 0).into_owned();
        if (lower - xi.adjoint()).norm() > 1e-12 * k0.norm().max(1.0) {
            return Err(Error::InvalidArgument("optical response must be Hermitian".into()));
        }
        Self::new(eps, mu, xi)
    }

    pub fn with_susceptibility(mut self, s: Susceptibility) -> Self {
        self.susceptibility = s;
        self
    }

    pub fn matrix(&self) -> M6 {
        block6(&self.permittivity, &self.magnetoelectric, &self.magnetoelectric.adjoint(), &self.permeability)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let k = self.matrix();
        let h = (k + k.adjoint()) * c(0.5);
        SymmetricEigen::new(h).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn check_positive(&self) -> Result<()> {
        let k = self.matrix();
        if !k.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            || cholesky_lower(&k).is_none()
            || self.min_eigenvalue() <= 0.0
        {
            return Err(Error::NonPositiveDefinite);
        }
        Ok(())
    }
}
