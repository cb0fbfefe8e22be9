//! One-dimensional Wigner-transform checks and the Kirchhoff spherical mean.
//!
//! `W_ε[u, v](x, k) = (2π)⁻¹ Σ_y e^{iky} u(x − εy) v̄(x) Δy` on a periodic
//! lattice. With `y_m = mΔx/ε` the sample `u(x − εy_m)` is the lattice value
//! `m` steps to the left, and the sum over `m` is one inverse DFT per `x`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rustfft::FftPlanner;

use crate::io::{sidecar_path, write_f64_le, write_json};
use crate::linalg::{C64, V3};
use crate::quadrature::lebedev;
use crate::{Error, Result};

/// Samples on the periodic lattice `x_j = origin + jΔx`, `j < n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    pub origin: f64,
    pub dx: f64,
    pub eps: f64,
    pub values: Vec<C64>,
}

impl SampledField {
    pub fn new(origin: f64, dx: f64, eps: f64, values: Vec<C64>) -> Result<Self> {
        if !(eps > 0.0) || !(dx > 0.0) || values.is_empty() {
            return Err(Error::InvalidArgument("need ε > 0, Δx > 0 and at least one sample".into()));
        }
        if dx > eps / 4.0 {
            return Err(Error::UnderResolved { dx, eps });
        }
        Ok(Self { origin, dx, eps, values })
    }

    /// Samples `f` on `n` points.
    pub fn from_fn(origin: f64, dx: f64, n: usize, eps: f64, f: impl Fn(f64) -> C64) -> Result<Self> {
        let values = (0..n).map(|j| f(origin + j as f64 * dx)).collect();
        Self::new(origin, dx, eps, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn position(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.dx
    }

    pub fn period(&self) -> f64 {
        self.dx * self.len() as f64
    }

    /// `Σ|u|² Δx`.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx
    }

    pub fn scaled(&self, a: C64) -> Self {
        Self { values: self.values.iter().map(|z| z * a).collect(), ..self.clone() }
    }

    /// Exact translation by `shift` of the trigonometric interpolant.
    pub fn shifted(&self, shift: f64) -> Self {
        Self { values: spectral_shift(&self.values, shift / self.dx), ..self.clone() }
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.len() == other.len() && self.dx == other.dx && self.origin == other.origin && self.eps == other.eps
    }
}

/// `u(x) = Re{a(x) e^{iS(x)/ε}}` on `n` points.
pub fn wkb_field(
    amplitude: impl Fn(f64) -> f64,
    phase: impl Fn(f64) -> f64,
    eps: f64,
    origin: f64,
    dx: f64,
    n: usize,
) -> Result<SampledField> {
    SampledField::from_fn(origin, dx, n, eps, |x| C64::new(amplitude(x) * (phase(x) / eps).cos(), 0.0))
}

/// Translates periodic samples by `shift` grid steps.
fn spectral_shift(values: &[C64], shift: f64) -> Vec<C64> {
    if shift == 0.0 {
        return values.to_vec();
    }
    let n = values.len();
    let mut planner = FftPlanner::new();
    let mut buf = values.to_vec();
    planner.plan_fft_forward(n).process(&mut buf);
    for (j, z) in buf.iter_mut().enumerate() {
        let mut m = j as f64;
        if 2 * j > n {
            m -= n as f64;
        } else if 2 * j == n {
            // Nyquist mode: keep the real interpolant.
            *z *= (2.0 * PI * m * shift / n as f64).cos();
            continue;
        }
        *z *= C64::from_polar(1.0, -2.0 * PI * m * shift / n as f64);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|z| z / n as f64).collect()
}

/// `W(x_j, k_l)` stored row-major in `j`, with `k` ascending (fft-shifted).
#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    pub x: Vec<f64>,
    pub k: Vec<f64>,
    pub dk: f64,
    pub values: Vec<C64>,
}

impl WignerGrid {
    pub fn at(&self, j: usize, l: usize) -> C64 {
        self.values[j * self.k.len() + l]
    }

    /// `Σ_k W(x_j, k) Δk` per `x_j`.
    pub fn k_marginal(&self) -> Vec<C64> {
        let nk = self.k.len();
        self.values.chunks(nk).map(|row| row.iter().sum::<C64>() * self.dk).collect()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).sum()
    }

    /// Fraction of `Σ|W|` with `|k − k*(x)| ≤ halfwidth` for any of the
    /// supplied centers `k*`.
    pub fn mass_fraction(&self, centers: impl Fn(f64) -> Vec<f64>, halfwidth: f64) -> f64 {
        let nk = self.k.len();
        let mut inside = 0.0;
        for (j, x) in self.x.iter().enumerate() {
            let cs = centers(*x);
            for l in 0..nk {
                if cs.iter().any(|c| (self.k[l] - c).abs() <= halfwidth) {
                    inside += self.values[j * nk + l].norm();
                }
            }
        }
        inside / self.l1_norm()
    }

    /// Fraction of `Σ Re W` (the energy, by the marginal identity) inside
    /// the windows of [`Self::mass_fraction`].
    pub fn signed_fraction(&self, centers: impl Fn(f64) -> Vec<f64>, halfwidth: f64) -> f64 {
        let nk = self.k.len();
        let mut inside = 0.0;
        let mut total = 0.0;
        for (j, x) in self.x.iter().enumerate() {
            let cs = centers(*x);
            for l in 0..nk {
                let v = self.values[j * nk + l].re;
                total += v;
                if cs.iter().any(|c| (self.k[l] - c).abs() <= halfwidth) {
                    inside += v;
                }
            }
        }
        inside / total
    }

    /// Index of the `k` node nearest to `k`.
    pub fn nearest_k(&self, k: f64) -> usize {
        ((k - self.k[0]) / self.dk).round().clamp(0.0, (self.k.len() - 1) as f64) as usize
    }

    /// `W(x − a, k)` by spectral translation of every `k` column.
    pub fn shifted_in_x(&self, a: f64) -> Self {
        let nx = self.x.len();
        let nk = self.k.len();
        let dx = if nx > 1 { self.x[1] - self.x[0] } else { 1.0 };
        let mut out = self.values.clone();
        for l in 0..nk {
            let col: Vec<C64> = (0..nx).map(|j| self.values[j * nk + l]).collect();
            for (j, v) in spectral_shift(&col, a / dx).into_iter().enumerate() {
                out[j * nk + l] = v;
            }
        }
        Self { values: out, ..self.clone() }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,k,re,im\n");
        for (j, x) in self.x.iter().enumerate() {
            for (l, k) in self.k.iter().enumerate() {
                let z = self.at(j, l);
                let _ = writeln!(s, "{x},{k},{:e},{:e}", z.re, z.im);
            }
        }
        s
    }

    /// Raw interleaved `(re, im)` in row-major `[x][k]` plus a JSON sidecar.
    pub fn export_raw(&self, path: &Path) -> Result<Vec<PathBuf>> {
        let data: Vec<f64> = self.values.iter().flat_map(|z| [z.re, z.im]).collect();
        write_f64_le(path, &data)?;
        let side = sidecar_path(path);
        write_json(
            &side,
            &serde_json::json!({
                "layout": "complex W[x][k] as interleaved (re, im) f64 little-endian",
                "x": self.x,
                "k": self.k,
                "dk": self.dk,
            }),
        )?;
        Ok(vec![path.to_path_buf(), side])
    }
}

/// θ = 0 Wigner transform of `u` and `v` on their common periodic lattice.
pub fn discrete_wigner(u: &SampledField, v: &SampledField) -> Result<WignerGrid> {
    if !u.same_grid(v) {
        return Err(Error::GridMismatch);
    }
    let n = u.len();
    let dy = u.dx / u.eps;
    let dk = 2.0 * PI / (n as f64 * dy);
    let half = n / 2;
    let k: Vec<f64> = (0..n).map(|l| (l as f64 - half as f64) * dk).collect();
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(n);
    let mut values = vec![C64::new(0.0, 0.0); n * n];
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        let vj = v.values[j].conj();
        for (m, b) in buf.iter_mut().enumerate() {
            *b = u.values[(j + n - m) % n] * vj;
        }
        // Σ_m e^{+2πi l m/N} b_m, l in natural order.
        ifft.process(&mut buf);
        let row = &mut values[j * n..(j + 1) * n];
        for (l, r) in row.iter_mut().enumerate() {
            let natural = (l + n - half) % n;
            *r = buf[natural] * (dy / (2.0 * PI));
        }
    }
    Ok(WignerGrid { x: (0..n).map(|j| u.position(j)).collect(), k, dk, values })
}

/// Normalized `L¹` distance between `W[u₀(· − ct)]` and `W[u₀](x − ct, k)`,
/// where the propagated field is the exact spectral translate.
pub fn free_transport_check(u0: &SampledField, speed: f64, t: f64) -> Result<f64> {
    let shift = speed * t;
    let ut = u0.shifted(shift);
    let w_t = discrete_wigner(&ut, &ut)?;
    let w_ref = discrete_wigner(u0, u0)?.shifted_in_x(shift);
    let num: f64 = w_t.values.iter().zip(&w_ref.values).map(|(a, b)| (a - b).norm()).sum();
    let den = w_ref.l1_norm();
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}

/// `u(x, t) = t (4π)⁻¹ ∮ g(x − ct p̂) dΩ` with a Lebedev rule of
/// `points` nodes (6, 14, 26 or 50).
pub fn kirchhoff_spherical_mean(g: impl Fn(&V3) -> f64, x: &V3, speed: f64, t: f64, points: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument("time must be positive".into()));
    }
    let rule =
        lebedev(points).ok_or_else(|| Error::InvalidArgument(format!("no Lebedev rule with {points} points")))?;
    let r = speed * t;
    Ok(t * rule.iter().map(|(p, w)| w * g(&(x - p * r))).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice(n: usize) -> (f64, f64) {
        (-1.0, 2.0 / n as f64)
    }

    fn packet(eps: f64, n: usize, k0: f64) -> SampledField {
        let (o, dx) = lattice(n);
        SampledField::from_fn(o, dx, n, eps, |x| C64::from_polar((-(x * x) / 0.02).exp(), k0 * x / eps)).unwrap()
    }

    #[test]
    fn constant_wkb_field() {
        let u = wkb_field(|_| 1.0, |_| 0.0, 0.1, 0.0, 0.01, 16).unwrap();
        assert!(u.values.iter().all(|z| *z == C64::new(1.0, 0.0)));
        assert!(matches!(wkb_field(|_| 1.0, |_| 0.0, 0.01, 0.0, 0.01, 16), Err(Error::UnderResolved { .. })));
    }

    #[test]
    fn modulated_plane_wave_peak() {
        let u =
            wkb_field(|x| 0.7 * (-(x * x) * 20.0).exp(), |x| 3.0 * x, 1.0 / 64.0, -1.0, 1.0 / 1024.0, 2048).unwrap();
        let max = u.values.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        assert!(max <= 0.7 && max > 0.7 * 0.999);
    }

    #[test]
    fn wkb_energy_is_half_the_amplitude_mass() {
        let eps = 1.0 / 64.0;
        let a = |x: f64| (-(x * x) * 8.0).exp();
        let u = wkb_field(a, |x| x + 0.3 * x * x, eps, -2.0, eps / 16.0, 4096).unwrap();
        let half_mass = 0.5 * (PI / 16.0).sqrt();
        assert!((u.energy() - half_mass).abs() < 0.02 * half_mass);
    }

    #[test]
    fn marginal_identity_and_zero_field() {
        let n = 256;
        let eps = 0.05;
        let (o, dx) = lattice(n);
        let u = SampledField::from_fn(o, dx, n, eps, |x| C64::new((3.0 * x).sin(), x * x)).unwrap();
        let w = discrete_wigner(&u, &u).unwrap();
        for (j, m) in w.k_marginal().iter().enumerate() {
            assert!((m - C64::new(u.values[j].norm_sqr(), 0.0)).norm() < 1e-13);
        }
        let z = SampledField::from_fn(o, dx, n, eps, |_| C64::new(0.0, 0.0)).unwrap();
        assert_eq!(discrete_wigner(&z, &z).unwrap().l1_norm(), 0.0);
    }

    #[test]
    fn pure_phase_concentrates() {
        let n = 256;
        let eps = 0.05;
        let (o, dx) = lattice(n);
        let period_y = n as f64 * dx / eps;
        let k0 = 2.0 * PI * 7.0 / period_y;
        let u = SampledField::from_fn(o, dx, n, eps, |x| C64::from_polar(1.0, k0 * x / eps)).unwrap();
        let w = discrete_wigner(&u, &u).unwrap();
        let l0 = w.nearest_k(k0);
        let mut inside = 0.0;
        for j in 0..n {
            for l in l0 - 1..=l0 + 1 {
                inside += w.at(j, l).norm();
            }
        }
        assert!(inside / w.l1_norm() >= 0.99);
    }

    #[test]
    fn sesquilinear() {
        let u = packet(0.05, 256, 1.0);
        let v = packet(0.05, 256, -0.5);
        let (a, b) = (C64::new(0.3, -1.2), C64::new(-0.7, 0.4));
        let w1 = discrete_wigner(&u.scaled(a), &v.scaled(b)).unwrap();
        let w0 = discrete_wigner(&u, &v).unwrap();
        for (x, y) in w1.values.iter().zip(&w0.values) {
            assert!((x - y * a * b.conj()).norm() < 1e-13);
        }
        let other = packet(0.04, 256, 1.0);
        assert!(matches!(discrete_wigner(&u, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn free_transport_is_shift_covariant() {
        let u = packet(1.0 / 32.0, 512, 2.0);
        assert_eq!(free_transport_check(&u, 1.0, 0.0).unwrap(), 0.0);
        let d = free_transport_check(&u, 1.0, 0.3).unwrap();
        assert!(d < 1e-3, "{d}");
    }

    #[test]
    fn counter_propagating_halves() {
        let u0 = packet(1.0 / 32.0, 512, 2.0);
        let (l, r) = (u0.shifted(-0.4), u0.shifted(0.4));
        let vals = l.values.iter().zip(&r.values).map(|(a, b)| (a + b) * 0.5).collect();
        let u = SampledField { values: vals, ..u0.clone() };
        let w = discrete_wigner(&u, &u).unwrap();
        let marg = w.k_marginal();
        let total: f64 = marg.iter().map(|z| z.re).sum();
        let right: f64 = marg.iter().zip(&w.x).filter(|(_, x)| **x > 0.0).map(|(z, _)| z.re).sum();
        assert!((right / total - 0.5).abs() < 1e-6);
    }

    #[test]
    fn wkb_concentration_sharpens() {
        let mut last = 0.0;
        for inv in [16.0, 32.0, 64.0] {
            let eps = 1.0 / inv;
            let n = 1024;
            let dx = 2.0 / n as f64;
            let u = wkb_field(|x| (-(x * x) / 0.04).exp(), |x| x + 0.25 * x * x, eps, -1.0, dx, n).unwrap();
            let w = discrete_wigner(&u, &u).unwrap();
            // Fixed window: three k-cells of the finest lattice.
            let window = 3.0 * PI / 64.0;
            let centers = |x: f64| vec![1.0 + 0.5 * x, -(1.0 + 0.5 * x)];
            let frac = w.signed_fraction(centers, window);
            assert!(w.mass_fraction(centers, window) > 0.2);
            assert!(frac >= last, "{frac} < {last}");
            last = frac;
        }
    }

    #[test]
    fn kirchhoff_means() {
        let t = 0.7;
        let u = kirchhoff_spherical_mean(|_| 2.5, &V3::new(0.1, 0.2, 0.3), 1.3, t, 26).unwrap();
        assert!((u - t * 2.5).abs() < 1e-12);
        let far = |y: &V3| if (y - V3::new(5.0, 0.0, 0.0)).norm() < 1.0 { 1.0 } else { 0.0 };
        assert_eq!(kirchhoff_spherical_mean(far, &V3::zeros(), 1.0, 1.0, 50).unwrap(), 0.0);
        assert!(kirchhoff_spherical_mean(|_| 1.0, &V3::zeros(), 1.0, 0.0, 26).is_err());
    }

    #[test]
    fn kirchhoff_gaussian_converges() {
        let y0 = V3::new(0.3, -0.2, 0.5);
        let s2 = 0.8;
        let g = |y: &V3| (-(y - y0).norm_squared() / (2.0 * s2)).exp();
        let (x, c, t) = (V3::zeros(), 1.0, 1.2);
        let (d, r) = ((x - y0).norm(), c * t);
        let z = d * r / s2;
        let exact = t * (-(d * d + r * r) / (2.0 * s2)).exp() * z.sinh() / z;
        let e26 = (kirchhoff_spherical_mean(g, &x, c, t, 26).unwrap() - exact).abs();
        let e50 = (kirchhoff_spherical_mean(g, &x, c, t, 50).unwrap() - exact).abs();
        assert!(e26 >= 4.0 * e50, "{e26} {e50}");
    }
}
