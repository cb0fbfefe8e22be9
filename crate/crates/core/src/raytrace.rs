//! Bicharacteristic rays `ẋ = ∇_k ω`, `k̇ = −∇ₓω` with transport of the
//! coherence matrix through `dR/dt = −(ℓ + n) R`, `w = R w_I R*`.

use crate::dispersion::{maxwell_symbol, Branch, Medium, ModeId};
use crate::linalg::{
    anti_hermitian_part, c, frobenius, hermitian_part, keep_psd, polar_unitary, unit, CMat, Cols6, C64, V3,
};
use crate::{Error, Result};

/// Axis-aligned box rays must stay in.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub min: V3,
    pub max: V3,
}

impl Domain {
    pub fn new(min: V3, max: V3) -> Result<Self> {
        if (0..3).any(|i| !(max[i] > min[i])) {
            return Err(Error::InvalidArgument("domain needs max > min on every axis".into()));
        }
        Ok(Self { min, max })
    }

    pub fn cube(half: f64) -> Self {
        Self { min: V3::repeat(-half), max: V3::repeat(half) }
    }

    pub fn contains(&self, x: &V3) -> bool {
        (0..3).all(|i| x[i] >= self.min[i] && x[i] <= self.max[i])
    }

    /// Largest edge length.
    pub fn size(&self) -> f64 {
        (self.max - self.min).max()
    }
}

/// How eigenvector fields are differentiated when forming `n_α`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gauge {
    /// Differentiate the closed-form eigenvector field of an analytic family.
    AnalyticField,
    /// Align each perturbed basis to the reference one by the polar factor
    /// of `c_ref* b_pert`.
    ParallelTransport,
}

#[derive(Clone, Debug)]
pub struct TraceOptions {
    pub domain: Domain,
    /// Force central differences even where closed-form gradients exist.
    pub finite_difference: bool,
    /// Absolute spatial difference step.
    pub hx: f64,
    /// Wavevector difference step relative to `‖k‖`.
    pub hk_rel: f64,
    /// `None` picks [`Gauge::AnalyticField`] for analytic families and
    /// refuses numeric ones.
    pub gauge: Option<Gauge>,
}

impl TraceOptions {
    pub fn new(domain: Domain) -> Self {
        let hx = 1e-5 * domain.size();
        Self { domain, finite_difference: false, hx, hk_rel: 1e-5, gauge: None }
    }
}

#[derive(Clone, Debug)]
pub struct RayState {
    pub x: V3,
    pub k: V3,
    pub t: f64,
    pub mode: ModeId,
    /// Accumulated `R` since the state was created.
    pub rotation: CMat,
    /// Current coherence matrix `w = R w_I R*`.
    pub coherence: CMat,
    pub weight: f64,
}

impl RayState {
    pub fn new(mode: ModeId, x: V3, k: V3, coherence: CMat) -> Self {
        let a = coherence.nrows();
        Self { x, k, t: 0.0, mode, rotation: CMat::identity(a, a), coherence, weight: 1.0 }
    }
}

/// `ℓ_α` and its Hermitian part `ℓ^s = (ℓ + ℓ*)/2`.
#[derive(Clone, Debug)]
pub struct Coupling {
    pub value: CMat,
    pub symmetric: CMat,
}

/// Anti-Hermitian part of `n_α` plus the residual `‖n + n*‖_F` of the raw
/// finite-difference evaluation.
#[derive(Clone, Debug)]
pub struct Skew {
    pub value: CMat,
    pub residual: f64,
}

pub struct Tracer<'a> {
    pub medium: &'a Medium,
    pub options: TraceOptions,
}

impl<'a> Tracer<'a> {
    pub fn new(medium: &'a Medium, options: TraceOptions) -> Self {
        Self { medium, options }
    }

    pub fn frequency(&self, mode: ModeId, x: &V3, k: &V3) -> Result<f64> {
        self.medium.frequency(mode, x, k)
    }

    /// `(∇ₓω, ∇_kω)`.
    pub fn hamiltonian_gradients(&self, mode: ModeId, x: &V3, k: &V3) -> Result<(V3, V3)> {
        let kh = unit(k)?;
        if !self.options.finite_difference {
            if let Some(v) = self.medium.mode_speed(mode) {
                let f = self.medium.speed_factor(x)?;
                let gx = self.medium.profile.gradient(x) * (v * k.norm());
                return Ok((gx, kh * (f * v)));
            }
        }
        let w0 = self.frequency(mode, x, k)?;
        let eval = |xx: &V3, kk: &V3| -> Result<f64> {
            if self.medium.is_analytic() {
                self.medium.frequency(mode, xx, kk)
            } else {
                Ok(self.medium.tracked_branch(xx, kk, w0)?.frequency)
            }
        };
        let hx = self.options.hx;
        let hk = self.options.hk_rel * k.norm();
        let mut gx = V3::zeros();
        let mut gk = V3::zeros();
        for j in 0..3 {
            let mut e = V3::zeros();
            e[j] = 1.0;
            gx[j] = (eval(&(x + e * hx), k)? - eval(&(x - e * hx), k)?) / (2.0 * hx);
            gk[j] = (eval(x, &(k + e * hk))? - eval(x, &(k - e * hk))?) / (2.0 * hk);
        }
        Ok((gx, gk))
    }

    /// One classical RK4 step of the bicharacteristic equations.
    pub fn advance_ray(&self, state: &RayState, dt: f64) -> Result<RayState> {
        if !(dt != 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument("time step must be finite and nonzero".into()));
        }
        let rhs = |x: &V3, k: &V3| -> Result<(V3, V3)> {
            let (gx, gk) = self.hamiltonian_gradients(state.mode, x, k)?;
            Ok((gk, -gx))
        };
        let (x, k) = (state.x, state.k);
        let (a1, b1) = rhs(&x, &k)?;
        let (a2, b2) = rhs(&(x + a1 * (dt / 2.0)), &(k + b1 * (dt / 2.0)))?;
        let (a3, b3) = rhs(&(x + a2 * (dt / 2.0)), &(k + b2 * (dt / 2.0)))?;
        let (a4, b4) = rhs(&(x + a3 * dt), &(k + b3 * dt))?;
        let mut out = state.clone();
        out.x = x + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (dt / 6.0);
        out.k = k + (b1 + b2 * 2.0 + b3 * 2.0 + b4) * (dt / 6.0);
        out.t += dt;
        if !self.options.domain.contains(&out.x) {
            return Err(Error::LeftDomain(out.x.into()));
        }
        Ok(out)
    }

    /// `ℓ_α = c_α*(iω K₀⁻¹ K̂_d(ω)) b_α` at `ω = −ω_α(x, k)`.
    ///
    /// The dispersive kernel follows the same profile as `K₀`, so
    /// `K₀⁻¹K̂_d` does not depend on `x`.
    pub fn coupling_matrix_l(&self, mode: ModeId, x: &V3, k: &V3) -> Result<Coupling> {
        let br = self.medium.branch(mode, x, k)?;
        let a = br.multiplicity();
        let s = &self.medium.response.susceptibility;
        if s.is_none() {
            let z = CMat::zeros(a, a);
            return Ok(Coupling { value: z.clone(), symmetric: z });
        }
        let k0 = self.medium.response.matrix();
        let inv = k0.try_inverse().ok_or(Error::NonPositiveDefinite)?;
        let op = inv * s.i_omega_kernel(-br.frequency);
        let value: CMat = br.left.adjoint() * (op * &br.right);
        let symmetric = hermitian_part(&value);
        Ok(Coupling { value, symmetric })
    }

    fn gauge(&self) -> Result<Gauge> {
        match (self.options.gauge, self.medium.is_analytic()) {
            (Some(Gauge::ParallelTransport), _) => Ok(Gauge::ParallelTransport),
            (Some(Gauge::AnalyticField), true) | (None, true) => Ok(Gauge::AnalyticField),
            _ => Err(Error::GaugeUnavailable),
        }
    }

    fn field(&self, mode: ModeId, gauge: Gauge, reference: &Branch, x: &V3, k: &V3) -> Result<(Cols6, Cols6)> {
        match gauge {
            Gauge::AnalyticField => {
                let b = self.medium.branch(mode, x, k)?;
                Ok((b.right, b.left))
            }
            Gauge::ParallelTransport => {
                let b = if self.medium.is_analytic() {
                    self.medium.branch(mode, x, k)?
                } else {
                    self.medium.tracked_branch(x, k, reference.frequency)?
                };
                if b.multiplicity() != reference.multiplicity() {
                    return Err(Error::BranchTrackingLost);
                }
                let overlap: CMat = reference.left.adjoint() * &b.right;
                let u = polar_unitary(&overlap).adjoint();
                Ok((&b.right * &u, &b.left * &u))
            }
        }
    }

    /// `n_α = c*(∇_kL₀·∇ₓb − ∇ₓω·∇_kb) − ½(∇ₓ·∇_kω) I` by central
    /// differences of the eigenvector field.
    pub fn skew_matrix_n(&self, mode: ModeId, x: &V3, k: &V3) -> Result<Skew> {
        let gauge = self.gauge()?;
        let reference = if self.medium.is_analytic() {
            self.medium.branch(mode, x, k)?
        } else {
            let d = self.medium.decompose(x, k)?;
            d.branches
                .get(mode)
                .cloned()
                .ok_or_else(|| Error::InvalidArgument(format!("mode {mode} does not exist")))?
        };
        let a = reference.multiplicity();
        let hx = self.options.hx;
        let hk = self.options.hk_rel * k.norm();
        let (gx, _) = self.hamiltonian_gradients(mode, x, k)?;
        let mut n = CMat::zeros(a, a);
        let mut mixed = 0.0;
        for j in 0..3 {
            let mut e = V3::zeros();
            e[j] = 1.0;
            let (bxp, _) = self.field(mode, gauge, &reference, &(x + e * hx), k)?;
            let (bxm, _) = self.field(mode, gauge, &reference, &(x - e * hx), k)?;
            let (bkp, _) = self.field(mode, gauge, &reference, x, &(k + e * hk))?;
            let (bkm, _) = self.field(mode, gauge, &reference, x, &(k - e * hk))?;
            let dbx = (bxp - bxm) * c(1.0 / (2.0 * hx));
            let dbk = (bkp - bkm) * c(1.0 / (2.0 * hk));
            let mj = maxwell_symbol(&e).map(c);
            n += reference.right.adjoint() * (mj * dbx);
            n -= (reference.left.adjoint() * dbk) * c(gx[j]);
            let (_, gkp) = self.hamiltonian_gradients(mode, &(x + e * hx), k)?;
            let (_, gkm) = self.hamiltonian_gradients(mode, &(x - e * hx), k)?;
            mixed += (gkp[j] - gkm[j]) / (2.0 * hx);
        }
        for d in 0..a {
            n[(d, d)] -= c(0.5 * mixed);
        }
        let residual = frobenius(&(&n + n.adjoint()));
        Ok(Skew { value: anti_hermitian_part(&n), residual })
    }

    /// `Ω_α = ℓ_α + n_α`; `n_α` vanishes identically in homogeneous media.
    pub fn generator(&self, mode: ModeId, x: &V3, k: &V3) -> Result<CMat> {
        let mut g = self.coupling_matrix_l(mode, x, k)?.value;
        if !self.medium.is_homogeneous() {
            g += self.skew_matrix_n(mode, x, k)?.value;
        }
        Ok(g)
    }

    /// Joint fixed-step RK4 for `(x, k, R)` over `[t, t + T]`.
    pub fn propagate_coherence(&self, initial: &RayState, horizon: f64, dt: f64) -> Result<RayState> {
        if !(horizon > 0.0) || !(dt > 0.0) {
            return Err(Error::InvalidArgument("horizon and time step must be positive".into()));
        }
        let steps = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
        let h = horizon / steps as f64;
        let a = initial.coherence.nrows();
        let mode = initial.mode;
        let rhs = |x: &V3, k: &V3, r: &CMat| -> Result<(V3, V3, CMat)> {
            let (gx, gk) = self.hamiltonian_gradients(mode, x, k)?;
            let om = self.generator(mode, x, k)?;
            Ok((gk, -gx, -(om * r)))
        };
        let mut x = initial.x;
        let mut k = initial.k;
        let mut r = CMat::identity(a, a);
        for _ in 0..steps {
            let (x1, k1, r1) = rhs(&x, &k, &r)?;
            let (x2, k2, r2) = rhs(&(x + x1 * (h / 2.0)), &(k + k1 * (h / 2.0)), &(&r + &r1 * c(h / 2.0)))?;
            let (x3, k3, r3) = rhs(&(x + x2 * (h / 2.0)), &(k + k2 * (h / 2.0)), &(&r + &r2 * c(h / 2.0)))?;
            let (x4, k4, r4) = rhs(&(x + x3 * h), &(k + k3 * h), &(&r + &r3 * c(h)))?;
            x += (x1 + x2 * 2.0 + x3 * 2.0 + x4) * (h / 6.0);
            k += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            r += (r1 + r2 * c(2.0) + r3 * c(2.0) + r4) * c(h / 6.0);
            if !self.options.domain.contains(&x) {
                return Err(Error::LeftDomain(x.into()));
            }
        }
        Ok(self.finish(initial, x, k, horizon, r))
    }

    /// Free flight of duration `T`: closed form in homogeneous media
    /// (straight ray, `R = exp(−ΩT)`), RK4 with step `dt` otherwise.
    pub fn free_flight(&self, initial: &RayState, horizon: f64, dt: f64) -> Result<RayState> {
        if !self.medium.is_homogeneous() || self.options.finite_difference {
            return self.propagate_coherence(initial, horizon, dt);
        }
        let (_, gk) = self.hamiltonian_gradients(initial.mode, &initial.x, &initial.k)?;
        let x = initial.x + gk * horizon;
        if !self.options.domain.contains(&x) {
            return Err(Error::LeftDomain(x.into()));
        }
        let om = self.generator(initial.mode, &initial.x, &initial.k)?;
        let r = if om.iter().all(|z| *z == C64::new(0.0, 0.0)) {
            CMat::identity(om.nrows(), om.ncols())
        } else {
            (om * c(-horizon)).exp()
        };
        Ok(self.finish(initial, x, initial.k, horizon, r))
    }

    fn finish(&self, initial: &RayState, x: V3, k: V3, horizon: f64, r: CMat) -> RayState {
        let w = &r * &initial.coherence * r.adjoint();
        RayState {
            x,
            k,
            t: initial.t + horizon,
            mode: initial.mode,
            rotation: &r * &initial.rotation,
            coherence: keep_psd(&w, 1e-12),
            weight: initial.weight,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{LorentzModel, OpticalResponse, Profile, Susceptibility};

    fn linear() -> Medium {
        Medium::isotropic(1.0, 1.0).unwrap().with_profile(Profile::Linear { gradient: V3::new(0.0, 0.0, 0.1) })
    }

    #[test]
    fn homogeneous_gradients() {
        let m = Medium::isotropic(1.0, 4.0).unwrap();
        let t = Tracer::new(&m, TraceOptions::new(Domain::cube(10.0)));
        let k = V3::new(0.0, 3.0, 4.0);
        let (gx, gk) = t.hamiltonian_gradients(1, &V3::zeros(), &k).unwrap();
        assert_eq!(gx, V3::zeros());
        assert!((gk - k / 5.0 * 0.5).norm() < 1e-15);
    }

    #[test]
    fn linear_profile_gradient() {
        let m = linear();
        let t = Tracer::new(&m, TraceOptions::new(Domain::cube(10.0)));
        let (gx, _) = t.hamiltonian_gradients(1, &V3::zeros(), &V3::z()).unwrap();
        assert!((gx - V3::new(0.0, 0.0, 0.1)).norm() < 1e-15);
    }

    #[test]
    fn straight_rays_in_homogeneous_media() {
        let m = Medium::isotropic(1.0, 1.0).unwrap();
        let t = Tracer::new(&m, TraceOptions::new(Domain::cube(100.0)));
        let k0 = V3::new(1.0, -2.0, 2.0);
        let mut s = RayState::new(1, V3::new(0.5, 0.0, 0.0), k0, CMat::identity(2, 2));
        for _ in 0..50 {
            s = t.advance_ray(&s, 0.1).unwrap();
        }
        let expect = V3::new(0.5, 0.0, 0.0) + k0 / 3.0 * 5.0;
        assert!((s.x - expect).norm() < 1e-13);
        assert_eq!(s.k, k0);
    }

    #[test]
    fn leaving_the_domain_is_an_error() {
        let m = Medium::isotropic(1.0, 1.0).unwrap();
        let t = Tracer::new(&m, TraceOptions::new(Domain::cube(1.0)));
        let s = RayState::new(1, V3::zeros(), V3::x(), CMat::identity(2, 2));
        assert!(matches!(t.advance_ray(&s, 2.0), Err(Error::LeftDomain(_))));
    }

    #[test]
    fn lorentz_coupling_is_scalar() {
        let l = LorentzModel::new(1.0, 1.0, 0.0, 1.0).unwrap();
        let m = Medium::isotropic(1.0, 1.0).unwrap().with_susceptibility(Susceptibility::Lorentz(l.clone()));
        let t = Tracer::new(&m, TraceOptions::new(Domain::cube(10.0)));
        let k = V3::new(0.6, 0.0, 0.8);
        for mode in [1, 2] {
            let cpl = t.coupling_matrix_l(mode, &V3::zeros(), &k).unwrap();
            let w = -m.frequency(mode, &V3::zeros(), &k).unwrap();
            let expect = crate::linalg::I * w * l.relative(w) * 0.5;
            assert!((cpl.value[(0, 0)] - expect).norm() < 1e-14);
            assert!((cpl.value[(1, 1)] - expect).norm() < 1e-14);
            assert!(cpl.value[(0, 1)].norm() < 1e-14);
            assert!((cpl.symmetric[(0, 0)].re * 2.0 - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn numeric_branch_needs_gauge() {
        let m = Medium::general(OpticalResponse::isotropic(1.0, 1.0).unwrap());
        let t = Tracer::new(&m, TraceOptions::new(Domain::cube(1.0)));
        assert!(matches!(t.skew_matrix_n(4, &V3::zeros(), &V3::x()), Err(Error::GaugeUnavailable)));
    }

    #[test]
    fn skew_term_in_linear_profile() {
        let m = linear();
        let t = Tracer::new(&m, TraceOptions::new(Domain::cube(1.0)));
        let k = V3::new(0.3, 0.4, 1.0);
        for mode in [0, 1, 2] {
            let n = t.skew_matrix_n(mode, &V3::new(0.1, 0.2, 0.3), &k).unwrap();
            assert!(n.residual < 1e-6, "mode {mode}: {}", n.residual);
        }
        let n0 = t.skew_matrix_n(0, &V3::zeros(), &k).unwrap();
        assert!(frobenius(&n0.value) < 1e-6);
    }

    #[test]
    fn exact_flight_matches_rk4() {
        let l = LorentzModel::new(1.0, 1.2, 0.5, 0.3).unwrap();
        let m = Medium::isotropic(1.0, 1.0).unwrap().with_susceptibility(Susceptibility::Lorentz(l));
        let t = Tracer::new(&m, TraceOptions::new(Domain::cube(10.0)));
        let w = CMat::from_row_slice(2, 2, &[c(0.7), C64::new(0.1, 0.2), C64::new(0.1, -0.2), c(0.3)]);
        let s = RayState::new(1, V3::zeros(), V3::new(0.0, 0.8, 0.6), w);
        let a = t.free_flight(&s, 1.5, 1e-2).unwrap();
        let b = t.propagate_coherence(&s, 1.5, 1e-2).unwrap();
        assert!(frobenius(&(&a.coherence - &b.coherence)) < 1e-10);
        assert!((a.x - b.x).norm() < 1e-13);
    }
}
