//! Mode-resolved scattering kernels.
//!
//! `σ_{αβ}(k, p) = 2π ω_α(k) ω_β(p) R̂_{αβ}(k, p)` with
//! `[R̂_{αβ}]_{aa′bb′} = Σ_{cc′} R̂_{cc′}(k−p) (c_αᵃ(k)* S_c b_βᵇ(p)) (c_βᵇ′(p)* S_{c′} b_αᵃ′(k))`.

use std::f64::consts::PI;

use crate::dispersion::{Family, Medium, ModeDecomposition, ModeId, DEGENERACY_TOL};
use crate::linalg::{c, transverse_frame, unit, CMat, Cols6, C64, M6, V3};
use crate::media::{SpectralModel, Structure};
use crate::quadrature::{gauss_legendre, integrate, SphereRule};
use crate::{Error, Result};

/// `A×A×B×B` tensor stored as `[a][a′][b][b′]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeTensor {
    pub a: usize,
    pub b: usize,
    data: Vec<C64>,
}

impl ModeTensor {
    pub fn zeros(a: usize, b: usize) -> Self {
        Self { a, b, data: vec![C64::new(0.0, 0.0); a * a * b * b] }
    }

    fn idx(&self, a: usize, ap: usize, b: usize, bp: usize) -> usize {
        ((a * self.a + ap) * self.b + b) * self.b + bp
    }

    pub fn get(&self, a: usize, ap: usize, b: usize, bp: usize) -> C64 {
        self.data[self.idx(a, ap, b, bp)]
    }

    pub fn set(&mut self, a: usize, ap: usize, b: usize, bp: usize, v: C64) {
        let i = self.idx(a, ap, b, bp);
        self.data[i] = v;
    }

    /// `[T:w]_{aa′} = Σ_{bb′} T_{aa′bb′} w_{bb′}`.
    pub fn apply(&self, w: &CMat) -> CMat {
        CMat::from_fn(self.a, self.a, |a, ap| {
            let mut s = C64::new(0.0, 0.0);
            for b in 0..self.b {
                for bp in 0..self.b {
                    s += self.get(a, ap, b, bp) * w[(b, bp)];
                }
            }
            s
        })
    }

    pub fn scaled(mut self, f: f64) -> Self {
        self.data.iter_mut().for_each(|z| *z *= f);
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// `P_c = c_α(k)* S_c b_β(p)` (A×B) for every channel.
fn channel_factors(left_k: &Cols6, right_p: &Cols6, model: &SpectralModel) -> Vec<CMat> {
    model.channels.iter().map(|ch| left_k.adjoint() * (ch.structure * right_p)).collect()
}

fn assemble(p: &[CMat], q: &[CMat], rmat: &CMat, a: usize, b: usize) -> ModeTensor {
    let mut t = ModeTensor::zeros(a, b);
    for (ci, pc) in p.iter().enumerate() {
        for (cj, qc) in q.iter().enumerate() {
            let r = rmat[(ci, cj)];
            if r == C64::new(0.0, 0.0) {
                continue;
            }
            for ia in 0..a {
                for iap in 0..a {
                    for ib in 0..b {
                        for ibp in 0..b {
                            let i = t.idx(ia, iap, ib, ibp);
                            t.data[i] += r * pc[(ia, ib)] * qc[(ibp, iap)];
                        }
                    }
                }
            }
        }
    }
    t
}

fn same_medium(x: &ModeDecomposition, y: &ModeDecomposition) -> Result<()> {
    if (x.response - y.response).norm() > 1e-12 * x.response.norm().max(1.0) {
        return Err(Error::MixedMedia);
    }
    Ok(())
}

fn branch(d: &ModeDecomposition, mode: ModeId) -> Result<&crate::dispersion::Branch> {
    d.branches.get(mode).ok_or_else(|| Error::InvalidArgument(format!("mode {mode} does not exist")))
}

/// `R̂_{αβ}(k, p)` evaluated at `q = k − p`, including `σ²`.
pub fn mode_psd_contraction(
    at_k: (&ModeDecomposition, ModeId),
    at_p: (&ModeDecomposition, ModeId),
    model: &SpectralModel,
) -> Result<ModeTensor> {
    same_medium(at_k.0, at_p.0)?;
    let bk = branch(at_k.0, at_k.1)?;
    let bp = branch(at_p.0, at_p.1)?;
    let (a, b) = (bk.multiplicity(), bp.multiplicity());
    if model.is_zero() {
        return Ok(ModeTensor::zeros(a, b));
    }
    let q = at_k.0.wavevector - at_p.0.wavevector;
    let p = channel_factors(&bk.left, &bp.right, model);
    let qf = channel_factors(&bp.left, &bk.right, model);
    Ok(assemble(&p, &qf, &model.scaled_matrix(&q), a, b))
}

/// Differential cross-section `σ_{αβ}(k, p)` as a tensor acting on `w_β`.
#[derive(Clone, Debug)]
pub struct ScatteringKernel {
    pub target: ModeId,
    pub source: ModeId,
    pub target_frequency: f64,
    pub source_frequency: f64,
    pub tensor: ModeTensor,
}

impl ScatteringKernel {
    pub fn apply(&self, w: &CMat) -> CMat {
        self.tensor.apply(w)
    }
}

pub fn differential_xsection(
    at_k: (&ModeDecomposition, ModeId),
    at_p: (&ModeDecomposition, ModeId),
    model: &SpectralModel,
) -> Result<ScatteringKernel> {
    let r = mode_psd_contraction(at_k, at_p, model)?;
    let wk = branch(at_k.0, at_k.1)?.frequency;
    let wp = branch(at_p.0, at_p.1)?.frequency;
    Ok(ScatteringKernel {
        target: at_k.1,
        source: at_p.1,
        target_frequency: wk,
        source_frequency: wp,
        tensor: r.scaled(2.0 * PI * wk * wp),
    })
}

/// Values of `R̂_ε, R̂_μ, R̂_εμ, R̂_με` at `q = k − p`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LorentzSpectra {
    pub eps: f64,
    pub mu: f64,
    pub eps_mu: f64,
    pub mu_eps: f64,
}

/// Closed-form isotropic kernel
/// `σ:w = (π/2)c₀²‖k‖‖p‖[R̂_ε TwT* + R̂_μ XwX* + R̂_εμ TwX* + R̂_με XwT*]`.
#[derive(Clone, Debug)]
pub struct LorentzKernel {
    pub t: CMat,
    pub x: CMat,
    pub prefactor: f64,
    pub spectra: LorentzSpectra,
}

/// `T_ab = ê_a(k̂)·ê_b(p̂)` and `X_ab = (k̂×ê_a)·(p̂×ê_b)`.
pub fn polarization_overlaps(k: &V3, p: &V3) -> Result<(CMat, CMat)> {
    let kh = unit(k)?;
    let ph = unit(p)?;
    let (k1, k2) = transverse_frame(&kh);
    let (p1, p2) = transverse_frame(&ph);
    let ek = [k1, k2];
    let ep = [p1, p2];
    let t = CMat::from_fn(2, 2, |a, b| c(ek[a].dot(&ep[b])));
    let x = CMat::from_fn(2, 2, |a, b| c(kh.cross(&ek[a]).dot(&ph.cross(&ep[b]))));
    Ok((t, x))
}

pub fn lorentz_kernel(c0: f64, k: &V3, p: &V3, spectra: LorentzSpectra) -> Result<LorentzKernel> {
    let (t, x) = polarization_overlaps(k, p)?;
    Ok(LorentzKernel { t, x, prefactor: 0.5 * PI * c0 * c0 * k.norm() * p.norm(), spectra })
}

impl LorentzKernel {
    pub fn apply(&self, w: &CMat) -> CMat {
        let s = self.spectra;
        let (t, x) = (&self.t, &self.x);
        let sum = t * w * t.adjoint() * c(s.eps)
            + x * w * x.adjoint() * c(s.mu)
            + t * w * x.adjoint() * c(s.eps_mu)
            + x * w * t.adjoint() * c(s.mu_eps);
        sum * c(self.prefactor)
    }
}

/// Closed-form chiral self-coupling `σ_jj(k, p)` for `j ∈ 1..=4`, with
/// spectra `R̂_a, R̂_b` and symmetric cross part `R̂_ab^s` at `k − p`.
#[allow(clippy::too_many_arguments)]
pub fn chiral_sigma(mode: ModeId, c0: f64, kappa: f64, k: &V3, p: &V3, ra: f64, rb: f64, rab: f64) -> Result<f64> {
    if !(kappa.abs() < 1.0) {
        return Err(Error::ChiralityOutOfRange(kappa.abs()));
    }
    let circ = |v: &V3, second: bool| -> Result<nalgebra::Vector3<C64>> {
        let (e1, e2) = transverse_frame(&unit(v)?);
        let s = if second { 1.0 } else { -1.0 };
        Ok((e1.map(c) * crate::linalg::I + e2.map(c) * c(s)) * c(std::f64::consts::FRAC_1_SQRT_2))
    };
    let (second, denom, sign) = match mode {
        1 => (false, 1.0 + kappa, 1.0),
        2 => (true, 1.0 + kappa, 1.0),
        3 => (true, 1.0 - kappa, -1.0),
        4 => (false, 1.0 - kappa, -1.0),
        _ => return Err(Error::InvalidArgument(format!("chiral mode {mode} has no closed form"))),
    };
    let overlap = circ(k, second)?.dotc(&circ(p, second)?).norm_sqr();
    Ok(2.0 * PI * c0 * c0 * k.norm() * p.norm() / (denom * denom) * overlap * (ra + rb + 2.0 * sign * rab))
}

/// Imaginary (principal-value) part of `Σ_α`.
#[derive(Clone, Debug, PartialEq)]
pub enum PrincipalValue {
    NotEvaluated,
    /// `Σ_pv = value · I`; a real multiple of `iI`, so it cancels in
    /// `Σw + wΣ*`.
    ScalarIdentity {
        value: C64,
    },
}

#[derive(Clone, Debug)]
pub struct TotalCrossSection {
    /// `½ Σ_β ∮ σ_{αβ}(k,p):I dμ(p)`.
    pub real: CMat,
    /// Gain matrix `g` with `Σ_β ∮ tr(σ_{βα}(p,k):w) dμ(p) = tr(w g)`.
    pub gain: CMat,
    pub principal_value: PrincipalValue,
}

/// Real part of `Σ_α(k)` (and the matching gain matrix) by product
/// quadrature over the energy shells.
///
/// `L₀` is linear in `k`, so on the ray `p = r p̂` every branch satisfies
/// `ω_β(r p̂) = r ω_β(p̂)` with `r`-independent eigenvectors: the shell
/// radius is `ω_α(k)/ω_β(p̂)` and `dμ = r²/|ω_β(p̂)| dΩ`.
pub fn total_xsection(
    medium: &Medium,
    x: &V3,
    mode: ModeId,
    k: &V3,
    model: &SpectralModel,
    rule: &SphereRule,
) -> Result<TotalCrossSection> {
    let dk = medium.decompose(x, k)?;
    let bk = branch(&dk, mode)?.clone();
    let a = bk.multiplicity();
    let wa = bk.frequency;
    let mut real = CMat::zeros(a, a);
    let mut gain = CMat::zeros(a, a);
    let scale = 1.0 + dk.branches.iter().map(|b| b.frequency.abs()).fold(0.0, f64::max);
    let null = wa.abs() <= DEGENERACY_TOL * scale;
    if !model.is_zero() && !null {
        for (ph, weight) in rule.nodes_around(k) {
            let dp = medium.decompose(x, &ph)?;
            let pscale = dp.branches.iter().map(|b| b.frequency.abs()).fold(0.0, f64::max);
            for bp in &dp.branches {
                let wb = bp.frequency;
                if wb.abs() <= DEGENERACY_TOL * (1.0 + pscale) || wb * wa <= 0.0 {
                    continue;
                }
                if wb.abs() < 1e-10 * pscale {
                    return Err(Error::VanishingGroupSpeed);
                }
                let r = wa / wb;
                let p = ph * r;
                let dmu = weight * r * r / wb.abs();
                let pf = channel_factors(&bk.left, &bp.right, model);
                let qf = channel_factors(&bp.left, &bk.right, model);
                let q = k - p;
                let rq = model.scaled_matrix(&q);
                let rmq = model.scaled_matrix(&(-q));
                let amp = 2.0 * PI * wa * wa * dmu;
                for (ci, pc) in pf.iter().enumerate() {
                    for (cj, qc) in qf.iter().enumerate() {
                        let r1 = rq[(ci, cj)];
                        if r1 != C64::new(0.0, 0.0) {
                            real += (pc * qc) * (r1 * (0.5 * amp));
                        }
                        let r2 = rmq[(ci, cj)];
                        if r2 != C64::new(0.0, 0.0) {
                            gain += (&pf[cj] * &qf[ci]) * (r2 * amp);
                        }
                    }
                }
            }
        }
    }
    let principal_value = match (medium.family(), lorentz_channels(model)) {
        (Family::Isotropic { .. }, Some(_)) if medium.is_homogeneous() && !null => {
            let c0 = medium.light_speed().expect("isotropic family has c0") * medium.speed_factor(x)?;
            let s = lorentz_principal_value(c0, k.norm(), model, 64, 256);
            ScalarIdentity(wa.signum() * s)
        }
        _ => PrincipalValue::NotEvaluated,
    };
    Ok(TotalCrossSection { real, gain, principal_value })
}

#[allow(non_snake_case)]
fn ScalarIdentity(s: f64) -> PrincipalValue {
    PrincipalValue::ScalarIdentity { value: C64::new(0.0, -s / (2.0 * PI)) }
}

/// Channel indices `(ε, μ)` when every channel enters through the
/// permittivity or permeability block.
fn lorentz_channels(model: &SpectralModel) -> Option<(Option<usize>, Option<usize>)> {
    let pe = Structure::Permittivity.matrix();
    let pm = Structure::Permeability.matrix();
    let mut eps = None;
    let mut mu = None;
    for (i, ch) in model.channels.iter().enumerate() {
        if ch.structure == pe && eps.is_none() {
            eps = Some(i);
        } else if ch.structure == pm && mu.is_none() {
            mu = Some(i);
        } else {
            return None;
        }
    }
    Some((eps, mu))
}

/// Radial `R̂_ε, R̂_μ, R̂_εμ` of a Lorentz-type model (with `σ²`).
fn lorentz_radial(model: &SpectralModel, r: f64) -> (f64, f64, f64) {
    let Some((eps, mu)) = lorentz_channels(model) else {
        return (0.0, 0.0, 0.0);
    };
    let m = model.scaled_matrix(&V3::new(0.0, 0.0, r));
    let g = |i: Option<usize>, j: Option<usize>| match (i, j) {
        (Some(i), Some(j)) => m[(i, j)].re,
        _ => 0.0,
    };
    (g(eps, eps), g(mu, mu), g(eps, mu))
}

/// `s = Σ_β PV∫ p² [∫_{S²} σ_{+β}:I dΩ] / (ω_β(p) − ω₊(k)) dp` for an
/// isotropic Lorentz-type model; the principal-value part of `Σ₊` is
/// `−(i/2π) s I`.
pub fn lorentz_principal_value(c0: f64, k: f64, model: &SpectralModel, order_theta: usize, order_radial: usize) -> f64 {
    let angular = |p: f64, same: bool| -> f64 {
        let sgn = if same { 1.0 } else { -1.0 };
        let inner = integrate(-1.0, 1.0, order_theta, |th| {
            let q = (k * k + p * p - 2.0 * k * p * th).max(0.0).sqrt();
            let (re, rm, rem) = lorentz_radial(model, q);
            0.5 * (1.0 + th * th) * (re + rm) + 2.0 * sgn * th * rem
        });
        sgn * PI * PI * c0 * c0 * k * p * inner
    };
    let g_plus = |p: f64| p * p * angular(p, true) / c0;
    let gk = g_plus(k);
    let near = integrate(0.0, 2.0 * k, order_radial, |p| (g_plus(p) - gk) / (p - k));
    let tail = |f: &dyn Fn(f64) -> f64, start: f64| {
        integrate(0.0, 1.0, order_radial, |t| {
            let p = start + k * t / (1.0 - t);
            f(p) * k / (1.0 - t).powi(2)
        })
    };
    let far = tail(&|p| g_plus(p) / (p - k), 2.0 * k);
    let minus = tail(&|p| p * p * angular(p, false) / (-c0 * (p + k)), 0.0);
    near + far + minus
}

/// `Σ(‖k‖) = (π²c₀‖k‖⁴/4) ∫₋₁¹ [(1+Θ²)(R̂_ε+R̂_μ) + 4Θ R̂_εμ](‖k‖√(2(1−Θ))) dΘ`.
pub fn lorentz_total(
    c0: f64,
    k: f64,
    r_eps: impl Fn(f64) -> f64,
    r_mu: impl Fn(f64) -> f64,
    r_eps_mu: impl Fn(f64) -> f64,
    order: usize,
) -> f64 {
    let (x, w) = gauss_legendre(order);
    let s: f64 = x
        .iter()
        .zip(&w)
        .map(|(th, wi)| {
            let q = k * (2.0 * (1.0 - th)).max(0.0).sqrt();
            wi * ((1.0 + th * th) * (r_eps(q) + r_mu(q)) + 4.0 * th * r_eps_mu(q))
        })
        .sum();
    PI * PI * c0 * k.powi(4) / 4.0 * s
}

/// Per-mode totals `[Σ₁, Σ₂, Σ₃, Σ₄]` of the chiral medium:
/// `Σ₁ = Σ₂ = (π²c₀‖k‖⁴ / 2(1+κ)) ∫₋₁¹ (1+Θ)² [R̂_a+R̂_b+2R̂_ab] dΘ`,
/// `Σ₃ = Σ₄` with `1−κ` and `−2R̂_ab`.
pub fn chiral_total(
    c0: f64,
    kappa: f64,
    k: f64,
    r_a: impl Fn(f64) -> f64,
    r_b: impl Fn(f64) -> f64,
    r_ab: impl Fn(f64) -> f64,
    order: usize,
) -> Result<[f64; 4]> {
    if !(kappa.abs() < 1.0) {
        return Err(Error::ChiralityOutOfRange(kappa.abs()));
    }
    let (x, w) = gauss_legendre(order);
    let mut plus = 0.0;
    let mut minus = 0.0;
    for (th, wi) in x.iter().zip(&w) {
        let q = k * (2.0 * (1.0 - th)).max(0.0).sqrt();
        let base = r_a(q) + r_b(q);
        let cross = 2.0 * r_ab(q);
        plus += wi * (1.0 + th).powi(2) * (base + cross);
        minus += wi * (1.0 + th).powi(2) * (base - cross);
    }
    let pre = PI * PI * c0 * k.powi(4) / 2.0;
    let s1 = pre / (1.0 + kappa) * plus;
    let s3 = pre / (1.0 - kappa) * minus;
    Ok([s1, s1, s3, s3])
}

/// Full 6⁴ PSD tensor `R̂_{jklm}(q) = Σ_{cc′} R̂_{cc′}(q) S_c[j,k] S_{c′}[l,m]`
/// (including `σ²`), contracted directly; the reference for
/// [`mode_psd_contraction`].
pub fn contract_full_tensor(
    at_k: (&ModeDecomposition, ModeId),
    at_p: (&ModeDecomposition, ModeId),
    model: &SpectralModel,
) -> Result<ModeTensor> {
    let bk = branch(at_k.0, at_k.1)?;
    let bp = branch(at_p.0, at_p.1)?;
    let (a, b) = (bk.multiplicity(), bp.multiplicity());
    let q = at_k.0.wavevector - at_p.0.wavevector;
    let rm = model.scaled_matrix(&q);
    let mut full = vec![C64::new(0.0, 0.0); 1296];
    for (ci, x) in model.channels.iter().enumerate() {
        for (cj, y) in model.channels.iter().enumerate() {
            let r = rm[(ci, cj)];
            let (s, t): (&M6, &M6) = (&x.structure, &y.structure);
            for j in 0..6 {
                for kk in 0..6 {
                    for l in 0..6 {
                        for m in 0..6 {
                            full[((j * 6 + kk) * 6 + l) * 6 + m] += r * s[(j, kk)] * t[(l, m)];
                        }
                    }
                }
            }
        }
    }
    let mut out = ModeTensor::zeros(a, b);
    for ia in 0..a {
        for iap in 0..a {
            for ib in 0..b {
                for ibp in 0..b {
                    let mut s = C64::new(0.0, 0.0);
                    for j in 0..6 {
                        for kk in 0..6 {
                            for l in 0..6 {
                                for m in 0..6 {
                                    s += bk.left[(j, ia)].conj()
                                        * bp.right[(kk, ib)]
                                        * full[((j * 6 + kk) * 6 + l) * 6 + m]
                                        * bp.left[(l, ibp)].conj()
                                        * bk.right[(m, iap)];
                                }
                            }
                        }
                    }
                    out.set(ia, iap, ib, ibp, s);
                }
            }
        }
    }
    Ok(out)
}
