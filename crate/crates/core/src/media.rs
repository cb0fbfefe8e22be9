//! Power spectral densities of the random fluctuation field `V`.
//!
//! Convention: `R̂(q) = (2π)⁻³ ∫ e^{−iq·y} R(y) dy`, with `R(0) = 1` per
//! channel; the amplitude `σ` scales every spectrum by `σ²`.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::SymmetricEigen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::Serialize;

use crate::linalg::{c, CMat, C64, I, M6, V3};
use crate::{io, Error, Result};

pub const CONVENTION: &str = "Rhat(q) = (2 pi)^-3 * integral exp(-i q.y) R(y) dy";

/// Radial table `|q| ↦ value`, linear in between, zero past the last node.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialTable {
    q: Vec<f64>,
    values: Vec<f64>,
}

impl RadialTable {
    pub fn new(q: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if q.len() < 2 || q.len() != values.len() {
            return Err(Error::InvalidArgument("radial table needs >= 2 matching rows".into()));
        }
        if q[0] < 0.0 || q.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("radial table |q| must start >= 0 and increase".into()));
        }
        Ok(Self { q, values })
    }

    /// Two-column CSV `|q|, value`; lines starting with `#` and a
    /// non-numeric header are skipped.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut q = Vec::new();
        let mut v = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed = (cols.len() == 2).then(|| (cols[0].parse::<f64>(), cols[1].parse::<f64>()));
            match parsed {
                Some((Ok(a), Ok(b))) => {
                    q.push(a);
                    v.push(b);
                }
                _ if i == 0 => continue,
                _ => {
                    return Err(Error::InvalidArgument(format!("{}: line {} is not `q, value`", path.display(), i + 1)))
                }
            }
        }
        Self::new(q, v)
    }

    pub fn eval(&self, r: f64) -> f64 {
        let n = self.q.len();
        if r < self.q[0] {
            return self.values[0];
        }
        if r > self.q[n - 1] {
            return 0.0;
        }
        let j = self.q.partition_point(|x| *x <= r).min(n - 1).max(1);
        let t = (r - self.q[j - 1]) / (self.q[j] - self.q[j - 1]);
        self.values[j - 1] * (1.0 - t) + self.values[j] * t
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Radial auto-spectrum of one channel.
#[derive(Clone, Debug, PartialEq)]
pub enum Spectrum {
    /// `R(y) = exp(−‖y‖²/2ℓ²)`.
    Gaussian {
        length: f64,
    },
    /// `R(y) = exp(−‖y‖/ℓ)`.
    Exponential {
        length: f64,
    },
    /// Constant `level` for `‖q‖ ≤ cutoff`, zero beyond.
    Flat {
        level: f64,
        cutoff: f64,
    },
    Table(RadialTable),
}

/// `R̂(q) = ℓ³(2π)^{−3/2} exp(−ℓ²‖q‖²/2)`.
pub fn gaussian_isotropic_psd(length: f64, q: &V3) -> f64 {
    Spectrum::Gaussian { length }.eval(q)
}

impl Spectrum {
    pub fn radial(&self, r: f64) -> f64 {
        match self {
            Spectrum::Gaussian { length } => {
                length.powi(3) * (2.0 * PI).powf(-1.5) * (-0.5 * (length * r).powi(2)).exp()
            }
            Spectrum::Exponential { length } => length.powi(3) / (PI * PI) / (1.0 + (length * r).powi(2)).powi(2),
            Spectrum::Flat { level, cutoff } => {
                if r <= *cutoff {
                    *level
                } else {
                    0.0
                }
            }
            Spectrum::Table(t) => t.eval(r),
        }
    }

    pub fn eval(&self, q: &V3) -> f64 {
        self.radial(q.norm())
    }

    /// Upper bound of `R̂` over all `q`.
    pub fn peak(&self) -> f64 {
        match self {
            Spectrum::Gaussian { .. } | Spectrum::Exponential { .. } => self.radial(0.0),
            Spectrum::Flat { level, .. } => level.abs(),
            Spectrum::Table(t) => t.max_abs(),
        }
    }

    pub fn length(&self) -> Option<f64> {
        match self {
            Spectrum::Gaussian { length } | Spectrum::Exponential { length } => Some(*length),
            Spectrum::Flat { cutoff, .. } => Some(1.0 / cutoff),
            Spectrum::Table(_) => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Spectrum::Gaussian { length } | Spectrum::Exponential { length } => *length > 0.0,
            Spectrum::Flat { level, cutoff } => *level >= 0.0 && *cutoff > 0.0,
            Spectrum::Table(t) => t.values.iter().all(|v| *v >= 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("spectrum parameters must be positive".into()))
        }
    }
}

/// Constant 6×6 pattern through which a scalar channel enters `V`.
#[derive(Clone, Debug, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Structure {
    /// `diag(I, 0)`.
    Permittivity,
    /// `diag(0, I)`.
    Permeability,
    /// Chiral `a`: identity.
    ChiralA,
    /// Chiral `b`: `[[0, iZ₀ I], [I/(iZ₀), 0]]` with `Z₀ = √(μ/ε)`.
    ChiralB {
        impedance: f64,
    },
    Custom(M6),
}

impl Structure {
    pub fn matrix(&self) -> M6 {
        let mut m = M6::zeros();
        match self {
            Structure::Permittivity => (0..3).for_each(|i| m[(i, i)] = c(1.0)),
            Structure::Permeability => (3..6).for_each(|i| m[(i, i)] = c(1.0)),
            Structure::ChiralA => m = M6::identity(),
            Structure::ChiralB { impedance } => {
                for i in 0..3 {
                    m[(i, i + 3)] = I * *impedance;
                    m[(i + 3, i)] = -I / *impedance;
                }
            }
            Structure::Custom(s) => m = *s,
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    pub name: String,
    pub spectrum: Spectrum,
    pub structure: M6,
}

impl Channel {
    pub fn new(name: impl Into<String>, spectrum: Spectrum, structure: Structure) -> Self {
        Self { name: name.into(), spectrum, structure: structure.matrix() }
    }
}

/// Cross-spectrum between two channels.
#[derive(Clone, Debug, PartialEq)]
pub enum CrossSpectrum {
    /// `R̂_{cc′} = ρ √(R̂_c R̂_{c′})`.
    Correlated(f64),
    /// Real radial table.
    Table(RadialTable),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralModel {
    pub channels: Vec<Channel>,
    pub cross: Vec<(usize, usize, CrossSpectrum)>,
    pub amplitude: f64,
}

impl SpectralModel {
    pub fn new(channels: Vec<Channel>, amplitude: f64) -> Result<Self> {
        for ch in &channels {
            ch.spectrum.validate()?;
        }
        if !(amplitude >= 0.0) {
            return Err(Error::InvalidArgument("amplitude must be >= 0".into()));
        }
        Ok(Self { channels, cross: Vec::new(), amplitude })
    }

    pub fn empty() -> Self {
        Self { channels: Vec::new(), cross: Vec::new(), amplitude: 0.0 }
    }

    /// Lorentz pair `ε₁`, `μ₁` with correlation `ρ` (no cross term when 0).
    pub fn lorentz(spectrum_eps: Spectrum, spectrum_mu: Option<Spectrum>, rho: f64, amplitude: f64) -> Result<Self> {
        let mut ch = vec![Channel::new("eps", spectrum_eps, Structure::Permittivity)];
        if let Some(s) = spectrum_mu {
            ch.push(Channel::new("mu", s, Structure::Permeability));
        }
        let mut m = Self::new(ch, amplitude)?;
        if rho != 0.0 && m.channels.len() == 2 {
            m = m.with_cross("eps", "mu", CrossSpectrum::Correlated(rho))?;
        }
        Ok(m)
    }

    /// Chiral pair `a`, `b` with correlation `ρ`.
    pub fn chiral(
        spectrum_a: Spectrum,
        spectrum_b: Option<Spectrum>,
        rho: f64,
        impedance: f64,
        amplitude: f64,
    ) -> Result<Self> {
        let mut ch = vec![Channel::new("a", spectrum_a, Structure::ChiralA)];
        if let Some(s) = spectrum_b {
            ch.push(Channel::new("b", s, Structure::ChiralB { impedance }));
        }
        let mut m = Self::new(ch, amplitude)?;
        if rho != 0.0 && m.channels.len() == 2 {
            m = m.with_cross("a", "b", CrossSpectrum::Correlated(rho))?;
        }
        Ok(m)
    }

    pub fn with_cross(mut self, a: &str, b: &str, cross: CrossSpectrum) -> Result<Self> {
        let i = self.channel_index(a)?;
        let j = self.channel_index(b)?;
        if i == j {
            return Err(Error::InvalidArgument("cross spectrum needs two distinct channels".into()));
        }
        if let CrossSpectrum::Correlated(rho) = cross {
            if !(rho.abs() <= 1.0) {
                return Err(Error::InvalidArgument(format!("correlation {rho} outside [-1, 1]")));
            }
        }
        self.cross.retain(|(p, q, _)| !((*p == i && *q == j) || (*p == j && *q == i)));
        self.cross.push((i.min(j), i.max(j), cross));
        Ok(self)
    }

    pub fn channel_index(&self, name: &str) -> Result<usize> {
        self.channels.iter().position(|ch| ch.name == name).ok_or_else(|| Error::UnknownChannel(name.to_string()))
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude == 0.0 || self.channels.is_empty()
    }

    /// Largest correlation length among the built-in spectra.
    pub fn correlation_length(&self) -> Option<f64> {
        self.channels.iter().filter_map(|ch| ch.spectrum.length()).reduce(f64::max)
    }

    fn cross_value(&self, i: usize, j: usize, q: &V3) -> C64 {
        if i == j {
            return c(self.channels[i].spectrum.eval(q));
        }
        let found = self.cross.iter().find(|(p, r, _)| (*p == i && *r == j) || (*p == j && *r == i));
        match found {
            None => c(0.0),
            Some((_, _, CrossSpectrum::Correlated(rho))) => {
                let a = self.channels[i].spectrum.eval(q).max(0.0);
                let b = self.channels[j].spectrum.eval(q).max(0.0);
                c(rho * (a * b).sqrt())
            }
            Some((_, _, CrossSpectrum::Table(t))) => c(t.eval(q.norm())),
        }
    }

    /// `R̂_{cc′}(q)` in the `R(0) = 1` normalization (without `σ²`).
    pub fn channel_cross_psd(&self, a: &str, b: &str, q: &V3) -> Result<C64> {
        Ok(self.cross_value(self.channel_index(a)?, self.channel_index(b)?, q))
    }

    /// Channel cross-spectral matrix at `q` (without `σ²`).
    pub fn channel_matrix(&self, q: &V3) -> CMat {
        let n = self.channels.len();
        CMat::from_fn(n, n, |i, j| self.cross_value(i, j, q))
    }

    /// Channel matrix including `σ²`; this is what the cross-sections use.
    pub fn scaled_matrix(&self, q: &V3) -> CMat {
        self.channel_matrix(q) * c(self.amplitude * self.amplitude)
    }

    /// `σ² Σ_c max R̂_c`, an upper bound of the largest eigenvalue of the
    /// scaled channel matrix.
    pub fn peak_bound(&self) -> f64 {
        self.amplitude * self.amplitude * self.channels.iter().map(|ch| ch.spectrum.peak()).sum::<f64>()
    }

    /// Rejects any sampled `|q|` where the channel matrix has a negative
    /// eigenvalue.
    pub fn check_bochner(&self, radii: &[f64]) -> Result<()> {
        if self.channels.is_empty() {
            return Ok(());
        }
        for &r in radii {
            let m = self.channel_matrix(&V3::new(0.0, 0.0, r));
            let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            let lmin = crate::linalg::min_eigenvalue(&m);
            if lmin < -1e-12 * scale {
                return Err(Error::NotPositive { q: r, eigenvalue: lmin });
            }
        }
        Ok(())
    }

    /// `K₀ S = S* K₀` for every structure map, so `K₀V` stays Hermitian.
    pub fn structure_residual(&self, k0: &M6) -> f64 {
        self.channels.iter().map(|ch| (k0 * ch.structure - ch.structure.adjoint() * k0).norm()).fold(0.0, f64::max)
    }
}

/// Periodic cubic-cell lattice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub shape: [usize; 3],
    pub spacing: f64,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn wavevector(&self, idx: [usize; 3]) -> V3 {
        let mut q = V3::zeros();
        for a in 0..3 {
            let n = self.shape[a];
            let m = if idx[a] <= n / 2 { idx[a] as f64 } else { idx[a] as f64 - n as f64 };
            q[a] = 2.0 * PI * m / (n as f64 * self.spacing);
        }
        q
    }

    fn unflatten(&self, i: usize) -> [usize; 3] {
        let [_, ny, nz] = self.shape;
        [i / (ny * nz), (i / nz) % ny, i % nz]
    }

    fn flatten(&self, idx: [usize; 3]) -> usize {
        let [_, ny, nz] = self.shape;
        (idx[0] * ny + idx[1]) * nz + idx[2]
    }

    fn partner(&self, i: usize) -> usize {
        let idx = self.unflatten(i);
        let mut p = [0; 3];
        for a in 0..3 {
            p[a] = (self.shape[a] - idx[a]) % self.shape[a];
        }
        self.flatten(p)
    }

    /// `Δq = (2π)³ / volume`.
    fn cell_volume_q(&self) -> f64 {
        let vol: f64 = self.shape.iter().map(|n| *n as f64 * self.spacing).product();
        (2.0 * PI).powi(3) / vol
    }
}

/// One sampled realization: a real field per channel, C order (x slowest).
#[derive(Clone, Debug)]
pub struct Realization {
    pub grid: Grid,
    pub seed: u64,
    pub names: Vec<String>,
    pub fields: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct RealizationMeta<'a> {
    shape: [usize; 3],
    spacing: f64,
    seed: u64,
    channels: &'a [String],
    order: &'static str,
    dtype: &'static str,
    convention: &'static str,
}

impl Realization {
    /// Writes all channels back to back as little-endian f64 plus a JSON
    /// sidecar.
    pub fn export(&self, path: &Path) -> Result<()> {
        let data: Vec<f64> = self.fields.iter().flatten().copied().collect();
        io::write_f64_le(path, &data)?;
        io::write_json(
            &io::sidecar_path(path),
            &RealizationMeta {
                shape: self.grid.shape,
                spacing: self.grid.spacing,
                seed: self.seed,
                channels: &self.names,
                order: "channel, x, y, z (z fastest)",
                dtype: "f64le",
                convention: CONVENTION,
            },
        )
    }
}

fn fft3(data: &mut [C64], shape: [usize; 3], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let strides = [shape[1] * shape[2], shape[2], 1];
    for axis in 0..3 {
        let n = shape[axis];
        let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
        let mut line = vec![C64::new(0.0, 0.0); n];
        let total = data.len();
        for start in 0..total {
            let idx = [start / strides[0], (start / strides[1]) % shape[1], start % shape[2]];
            if idx[axis] != 0 {
                continue;
            }
            for (m, slot) in line.iter_mut().enumerate() {
                *slot = data[start + m * strides[axis]];
            }
            fft.process(&mut line);
            for (m, v) in line.iter().enumerate() {
                data[start + m * strides[axis]] = *v;
            }
        }
    }
}

fn hermitian_sqrt(m: &CMat) -> CMat {
    let eig = SymmetricEigen::new(crate::linalg::hermitian_part(m));
    let d = eig.eigenvalues.map(|l| c(l.max(0.0).sqrt()));
    &eig.eigenvectors * CMat::from_diagonal(&d)
}

/// Spectral synthesis of a zero-mean real Gaussian field with the model's
/// channel cross-spectra (including `σ²`).
pub fn synthesize_realization(model: &SpectralModel, grid: Grid, seed: u64) -> Result<Realization> {
    if let Some(lc) = model.correlation_length() {
        for a in 0..3 {
            let span = grid.shape[a] as f64 * grid.spacing;
            if span < 8.0 * lc * (1.0 - 1e-12) || grid.spacing > lc / 4.0 * (1.0 + 1e-12) {
                return Err(Error::GridTooCoarse(format!(
                    "axis {a}: span {span} must be >= 8 lc and spacing {} <= lc/4 (lc = {lc})",
                    grid.spacing
                )));
            }
        }
    }
    let n = grid.len();
    let nc = model.channels.len();
    let mut amps = vec![vec![C64::new(0.0, 0.0); n]; nc];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dq = grid.cell_volume_q();
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 1..n {
        let p = grid.partner(i);
        if p < i {
            continue;
        }
        let q = grid.wavevector(grid.unflatten(i));
        let mat = model.scaled_matrix(&q) * c(dq);
        if p == i {
            let real = mat.map(|z| c(z.re));
            let s = hermitian_sqrt(&real);
            let xi: Vec<f64> = (0..nc).map(|_| StandardNormal.sample(&mut rng)).collect();
            for a in 0..nc {
                amps[a][i] = (0..nc).map(|b| s[(a, b)] * xi[b]).sum::<C64>().re.into();
            }
        } else {
            let s = hermitian_sqrt(&mat);
            let xi: Vec<C64> = (0..nc)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    C64::new(re * r2, im * r2)
                })
                .collect();
            for a in 0..nc {
                let v: C64 = (0..nc).map(|b| s[(a, b)] * xi[b]).sum();
                amps[a][i] = v;
                amps[a][p] = v.conj();
            }
        }
    }
    let fields = amps
        .into_iter()
        .map(|mut a| {
            fft3(&mut a, grid.shape, true);
            a.into_iter().map(|z| z.re).collect()
        })
        .collect();
    Ok(Realization { grid, seed, names: model.channels.iter().map(|ch| ch.name.clone()).collect(), fields })
}

/// Averaged periodogram on the lattice, in the model convention.
#[derive(Clone, Debug)]
pub struct PsdEstimate {
    pub grid: Grid,
    pub names: Vec<String>,
    /// `values[c][c′][lattice index]`.
    pub values: Vec<Vec<Vec<C64>>>,
    pub realizations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadialBin {
    pub q_mean: f64,
    pub value: f64,
    pub stderr: f64,
    pub count: usize,
    /// Indices of the independent lattice modes in the bin.
    pub modes: Vec<usize>,
}

pub fn estimate_psd(realizations: &[Realization]) -> Result<PsdEstimate> {
    let first = realizations.first().ok_or(Error::EmptyInput)?;
    let grid = first.grid;
    let nc = first.fields.len();
    if realizations.iter().any(|r| r.grid != grid || r.fields.len() != nc) {
        return Err(Error::GridMismatch);
    }
    let n = grid.len();
    let norm = 1.0 / (n as f64 * n as f64 * grid.cell_volume_q() * realizations.len() as f64);
    let mut values = vec![vec![vec![C64::new(0.0, 0.0); n]; nc]; nc];
    for r in realizations {
        let spectra: Vec<Vec<C64>> = r
            .fields
            .iter()
            .map(|f| {
                let mut a: Vec<C64> = f.iter().map(|v| c(*v)).collect();
                fft3(&mut a, grid.shape, false);
                a
            })
            .collect();
        for a in 0..nc {
            for b in 0..nc {
                for i in 0..n {
                    values[a][b][i] += spectra[a][i] * spectra[b][i].conj() * norm;
                }
            }
        }
    }
    Ok(PsdEstimate { grid, names: first.names.clone(), values, realizations: realizations.len() })
}

impl PsdEstimate {
    pub fn wavevector(&self, index: usize) -> V3 {
        self.grid.wavevector(self.grid.unflatten(index))
    }

    /// Radial average of `Re R̂_{cc′}` over independent modes (one of each
    /// `±q` pair, `q = 0` excluded) in shells of width `width`.
    pub fn radial(&self, a: usize, b: usize, width: f64) -> Vec<RadialBin> {
        let n = self.grid.len();
        let mut bins: Vec<RadialBin> = Vec::new();
        for i in 1..n {
            if self.grid.partner(i) < i {
                continue;
            }
            let r = self.wavevector(i).norm();
            let j = (r / width) as usize;
            if bins.len() <= j {
                bins.resize(j + 1, RadialBin { q_mean: 0.0, value: 0.0, stderr: 0.0, count: 0, modes: Vec::new() });
            }
            bins[j].modes.push(i);
        }
        for bin in &mut bins {
            let m = bin.modes.len();
            bin.count = m;
            if m == 0 {
                continue;
            }
            let vals: Vec<f64> = bin.modes.iter().map(|&i| self.values[a][b][i].re).collect();
            let mean = vals.iter().sum::<f64>() / m as f64;
            let var = if m > 1 { vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64 } else { 0.0 };
            bin.value = mean;
            bin.stderr = (var / m as f64).sqrt();
            bin.q_mean = bin.modes.iter().map(|&i| self.wavevector(i).norm()).sum::<f64>() / m as f64;
        }
        bins
    }
}

/// `n` evenly spaced radii in `[0, q_max]`.
pub fn sample_radii(q_max: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| q_max * i as f64 / (n.max(2) - 1) as f64).collect()
}
