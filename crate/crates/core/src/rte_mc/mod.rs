//! Monte Carlo solver for the mode-resolved matrix transfer equations.
//!
//! Each particle carries a mode, a phase-space point, a trace-normalized
//! coherence matrix and a scalar weight. Free flights follow the rays and
//! the attenuation/rotation matrix `R`; scattering events pick an outgoing
//! mode and direction on the energy shell with density `tr(σ:w)`.

mod histogram;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dispersion::{Family, Medium, ModeId, Susceptibility};
use crate::linalg::{c, frobenius, op_norm, CMat, Cols6, V3};
use crate::media::SpectralModel;
use crate::quadrature::SphereRule;
use crate::raytrace::{Domain, RayState, TraceOptions, Tracer};
use crate::scattering::total_xsection;
use crate::{Error, Result};

use histogram::Deposit;
pub use histogram::{estimate_fields, Binning, FieldEstimate, PhaseSpaceHistogram};

/// Weight factors this close to one are set to exactly one.
pub const WEIGHT_SNAP: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum PositionLaw {
    Point(V3),
    /// Uniform in the axis-aligned box.
    Box {
        min: V3,
        max: V3,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum DirectionLaw {
    Fixed(V3),
    Isotropic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Source {
    pub position: PositionLaw,
    pub direction: DirectionLaw,
    pub wavenumber: f64,
    pub mode: ModeId,
    /// Hermitian PSD with unit trace.
    pub coherence: CMat,
    pub particles: usize,
    /// Total `Σ weight` carried by the source.
    pub total_weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Numerics {
    pub dt: f64,
    pub theta_order: usize,
    pub phi_order: usize,
    pub seed: u64,
    pub workers: usize,
    pub batches: usize,
    pub max_attempts: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self { dt: 0.01, theta_order: 32, phi_order: 32, seed: 0, workers: 1, batches: 16, max_attempts: 100_000 }
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub medium: Medium,
    pub spectrum: SpectralModel,
    pub source: Source,
    pub horizon: f64,
    pub numerics: Numerics,
    pub binning: Binning,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let s = &self.source;
        if s.particles == 0 {
            return Err(Error::config("source.particles", "need at least one particle"));
        }
        if !(s.wavenumber > 0.0) || !s.wavenumber.is_finite() {
            return Err(Error::config("source.wavenumber", "must be positive"));
        }
        if !(s.total_weight > 0.0) {
            return Err(Error::config("source.total_weight", "must be positive"));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::config("numerics.horizon", "must be positive"));
        }
        if !(self.numerics.dt > 0.0) {
            return Err(Error::config("numerics.dt", "must be positive"));
        }
        if self.numerics.batches < 2 || self.numerics.batches > s.particles.max(2) {
            return Err(Error::config("numerics.batches", "need 2 ≤ batches ≤ particles"));
        }
        if self.numerics.workers == 0 {
            return Err(Error::config("numerics.workers", "need at least one worker"));
        }
        if self.numerics.theta_order < 2 || self.numerics.phi_order < 3 {
            return Err(Error::config(
                "numerics.theta_order",
                "shell quadrature needs theta_order ≥ 2 and phi_order ≥ 3",
            ));
        }
        self.binning.validate()?;
        if !self.medium.is_analytic() {
            return Err(Error::config("medium.kind", "the particle solver supports isotropic and chiral media only"));
        }
        let count = self.medium.branch_count().expect("analytic family");
        if s.mode >= count {
            return Err(Error::config("source.mode", format!("mode must be below {count}")));
        }
        if self.medium.mode_speed(s.mode) == Some(0.0) {
            return Err(Error::config("source.mode", "the null mode carries no energy"));
        }
        let a = self.medium.branch(s.mode, &V3::zeros(), &V3::z())?.multiplicity();
        let w = &s.coherence;
        if w.nrows() != a || w.ncols() != a {
            return Err(Error::config("source.coherence", format!("expected a {a}×{a} matrix")));
        }
        if frobenius(&(w - w.adjoint())) > 1e-12
            || crate::linalg::min_eigenvalue(w) < -1e-12
            || (w.trace().re - 1.0).abs() > 1e-12
        {
            return Err(Error::config("source.coherence", "must be Hermitian PSD with unit trace"));
        }
        match &s.position {
            PositionLaw::Point(x) if !self.binning.domain.contains(x) => {
                return Err(Error::config("source.position", "source lies outside the domain"))
            }
            PositionLaw::Box { min, max } => {
                if (0..3).any(|j| !(max[j] > min[j])) {
                    return Err(Error::config("source.box", "box must have positive extent"));
                }
                if !self.binning.domain.contains(min) || !self.binning.domain.contains(max) {
                    return Err(Error::config("source.box", "box must lie inside the domain"));
                }
            }
            _ => {}
        }
        if let DirectionLaw::Fixed(d) = &s.direction {
            if !(d.norm() > 0.0) {
                return Err(Error::config("source.direction", "direction must be nonzero"));
            }
        }
        Ok(())
    }

    fn trace_options(&self) -> TraceOptions {
        TraceOptions::new(self.binning.domain.clone())
    }
}

/// Loss rate `Λ = (2/A) tr Re Σ` from the real part of `Σ_α`.
pub fn rate_from_total(real: &CMat) -> f64 {
    let a = real.nrows().max(1) as f64;
    (2.0 / a * real.trace().re).max(0.0)
}

pub fn scattering_rate(
    medium: &Medium,
    x: &V3,
    mode: ModeId,
    k: &V3,
    model: &SpectralModel,
    rule: &SphereRule,
) -> Result<f64> {
    Ok(rate_from_total(&total_xsection(medium, x, mode, k, model, rule)?.real))
}

/// `τ ~ Exp(Λ)`, infinite when `Λ = 0`.
pub fn sample_free_flight<R: rand::Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    if !(rate > 0.0) {
        return f64::INFINITY;
    }
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// `Σ_α = f(x) s_α(|k|) I` and gain `g_α = f(x) γ_α(|k|) I` at the
/// reference profile, tabulated per mode.
#[derive(Clone, Debug)]
struct RateNode {
    k: f64,
    loss: f64,
    gain: f64,
}

#[derive(Clone, Debug)]
pub struct RateTable {
    nodes: Vec<Vec<RateNode>>,
    /// Bound of `2π ω_α² tr(σ̂_{βα}:w) dμ/dΩ` per `(α, β)` at `|k| = 1`
    /// and `f = 1`.
    bound: Vec<Vec<f64>>,
}

impl RateTable {
    /// Reachable wavenumbers per mode, then `Σ` and `g` at each.
    pub fn build(scenario: &Scenario) -> Result<Self> {
        let medium = &scenario.medium;
        let n = medium.branch_count().expect("analytic family");
        let speeds: Vec<f64> = (0..n).map(|m| medium.mode_speed(m).expect("analytic family")).collect();
        let rule = SphereRule::new(scenario.numerics.theta_order, scenario.numerics.phi_order);
        let s0 = &scenario.source;
        let mut ks: Vec<Vec<f64>> = vec![Vec::new(); n];
        if medium.is_homogeneous() {
            let mut stack = vec![(s0.mode, s0.wavenumber)];
            while let Some((m, k)) = stack.pop() {
                if ks[m].iter().any(|q| (q - k).abs() <= 1e-12 * k) {
                    continue;
                }
                ks[m].push(k);
                for (b, vb) in speeds.iter().enumerate() {
                    if vb * speeds[m] > 0.0 {
                        stack.push((b, k * speeds[m] / vb));
                    }
                }
            }
        } else {
            let (fmin, fmax) = profile_range(medium, &scenario.binning.domain)?;
            let omega = speeds[s0.mode].abs() * s0.wavenumber * medium.speed_factor(&first_position(s0))?;
            for (m, v) in speeds.iter().enumerate() {
                if *v == 0.0 || v * speeds[s0.mode] < 0.0 {
                    continue;
                }
                let (lo, hi) = (omega / (fmax * v.abs()), omega / (fmin * v.abs()));
                let count = 33;
                ks[m] = (0..count)
                    .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64) * if i == 0 { 1.0 - 1e-9 } else { 1.0 })
                    .collect();
                if let Some(k) = ks[m].last_mut() {
                    *k *= 1.0 + 1e-9;
                }
            }
        }
        let mut nodes = vec![Vec::new(); n];
        for m in 0..n {
            for &k in &ks[m] {
                let t = total_xsection(medium, &V3::zeros(), m, &(V3::z() * k), &scenario.spectrum, &rule)?;
                let a = t.real.nrows();
                let s = t.real.trace().re / a as f64;
                let g = t.gain.trace().re / a as f64;
                let id = CMat::identity(a, a);
                let tol = 1e-8 * s.abs().max(g.abs()).max(f64::MIN_POSITIVE);
                if frobenius(&(&t.real - &id * c(s))) > tol || frobenius(&(&t.gain - &id * c(g))) > tol {
                    return Err(Error::config(
                        "spectrum",
                        "the particle solver needs Σ and its gain matrix proportional to the identity",
                    ));
                }
                nodes[m].push(RateNode { k, loss: s, gain: g });
            }
            nodes[m].sort_by(|a, b| a.k.total_cmp(&b.k));
        }
        let bound = shell_bounds(medium, &scenario.spectrum)?;
        Ok(Self { nodes, bound })
    }

    /// `(s, γ)` at `f = 1`.
    fn lookup(&self, mode: ModeId, k: f64) -> Result<(f64, f64)> {
        let nodes = &self.nodes[mode];
        if let Some(n) = nodes.iter().find(|n| (n.k - k).abs() <= 1e-9 * k) {
            return Ok((n.loss, n.gain));
        }
        let i = nodes.partition_point(|n| n.k < k);
        if i == 0 || i == nodes.len() {
            return Err(Error::InvalidArgument(format!("|k| = {k} is outside the tabulated range of mode {mode}")));
        }
        let (a, b) = (&nodes[i - 1], &nodes[i]);
        let t = (k.ln() - a.k.ln()) / (b.k.ln() - a.k.ln());
        Ok((a.loss + t * (b.loss - a.loss), a.gain + t * (b.gain - a.gain)))
    }
}

fn first_position(s: &Source) -> V3 {
    match &s.position {
        PositionLaw::Point(x) => *x,
        PositionLaw::Box { min, max } => (min + max) / 2.0,
    }
}

/// Range of the profile factor over the domain corners and bump center.
fn profile_range(medium: &Medium, domain: &Domain) -> Result<(f64, f64)> {
    let mut pts: Vec<V3> = (0..8)
        .map(|i| {
            V3::new(
                if i & 1 == 0 { domain.min.x } else { domain.max.x },
                if i & 2 == 0 { domain.min.y } else { domain.max.y },
                if i & 4 == 0 { domain.min.z } else { domain.max.z },
            )
        })
        .collect();
    if let crate::dispersion::Profile::Bump { center, .. } = &medium.profile {
        pts.push(center.inf(&domain.max).sup(&domain.min));
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for p in pts {
        let f = medium.speed_factor(&p)?;
        lo = lo.min(f);
        hi = hi.max(f);
    }
    Ok((lo, hi))
}

/// `2π σ² (Σ_c √peak_c ‖S_c‖)² ‖c_α‖‖b_α‖‖c_β‖‖b_β‖ · v_α⁴/(v_β²|v_β|)`
/// per pair; the `f|k|⁴` scaling is applied at use.
fn shell_bounds(medium: &Medium, model: &SpectralModel) -> Result<Vec<Vec<f64>>> {
    let n = medium.branch_count().expect("analytic family");
    let dirs = [V3::z(), V3::x(), V3::new(1.0, 1.0, 1.0).normalize(), V3::new(-0.3, 0.8, -0.5).normalize()];
    let mut right = vec![0.0f64; n];
    let mut left = vec![0.0f64; n];
    for d in &dirs {
        let dec = medium.decompose(&V3::zeros(), d)?;
        for (m, b) in dec.branches.iter().enumerate() {
            right[m] = right[m].max(cols_norm(&b.right));
            left[m] = left[m].max(cols_norm(&b.left));
        }
    }
    let amp2 = model.amplitude * model.amplitude;
    let mut out = vec![vec![0.0; n]; n];
    for a in 0..n {
        let va = medium.mode_speed(a).expect("analytic");
        for b in 0..n {
            let vb = medium.mode_speed(b).expect("analytic");
            if va == 0.0 || vb == 0.0 || va * vb < 0.0 {
                continue;
            }
            let s: f64 = model
                .channels
                .iter()
                .map(|ch| ch.spectrum.peak().sqrt() * crate::linalg::m6_op_norm(&ch.structure))
                .sum();
            let norms = left[a] * right[a] * left[b] * right[b];
            let r = va / vb;
            out[a][b] = 1.02 * 2.0 * std::f64::consts::PI * va * va * amp2 * s * s * norms * r * r / vb.abs();
        }
    }
    Ok(out)
}

fn cols_norm(m: &Cols6) -> f64 {
    op_norm(&CMat::from_iterator(m.nrows(), m.ncols(), m.iter().copied()))
}

/// Outcome flags of one trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ParticleFlags {
    pub escaped: bool,
    pub absorbed: bool,
    pub scatters: u64,
}

struct Engine<'a> {
    scenario: &'a Scenario,
    tracer: Tracer<'a>,
    rates: RateTable,
}

impl<'a> Engine<'a> {
    fn rate(&self, state: &RayState) -> Result<(f64, f64)> {
        let f = self.scenario.medium.speed_factor(&state.x)?;
        let (s, g) = self.rates.lookup(state.mode, state.k.norm())?;
        Ok((2.0 * f * s, f * g))
    }

    fn spawn(&self, rng: &mut ChaCha8Rng) -> RayState {
        let s = &self.scenario.source;
        let x = match &s.position {
            PositionLaw::Point(x) => *x,
            PositionLaw::Box { min, max } => {
                let u = V3::new(rng.random(), rng.random(), rng.random());
                min + (max - min).component_mul(&u)
            }
        };
        let dir = match &s.direction {
            DirectionLaw::Fixed(d) => d.normalize(),
            DirectionLaw::Isotropic => uniform_direction(rng),
        };
        let mut st = RayState::new(s.mode, x, dir * s.wavenumber, s.coherence.clone());
        st.weight = s.total_weight / s.particles as f64;
        st
    }

    /// Flight of at most `limit`; returns the new state and whether the
    /// optical depth `depth` was used up before `limit`.
    fn fly(&self, state: &RayState, depth: f64, limit: f64) -> Result<(RayState, bool)> {
        let dt = self.scenario.numerics.dt;
        if self.scenario.medium.is_homogeneous() {
            let (rate, _) = self.rate(state)?;
            let tau = if rate > 0.0 { depth / rate } else { f64::INFINITY };
            let hit = tau < limit;
            let out = self.tracer.free_flight(state, if hit { tau } else { limit }, dt)?;
            return Ok((normalize(out), hit));
        }
        let mut cur = state.clone();
        let mut used = 0.0;
        let mut left = limit;
        while left > 0.0 {
            let h = dt.min(left);
            let (r0, _) = self.rate(&cur)?;
            let next = self.tracer.free_flight(&cur, h, h)?;
            let (r1, _) = self.rate(&next)?;
            let inc = 0.5 * (r0 + r1) * h;
            if used + inc >= depth && inc > 0.0 {
                let frac = ((depth - used) / inc).clamp(0.0, 1.0);
                if frac * h <= 0.0 {
                    return Ok((normalize(cur), true));
                }
                let part = self.tracer.free_flight(&cur, frac * h, frac * h)?;
                return Ok((normalize(part), true));
            }
            used += inc;
            left -= h;
            cur = next;
        }
        Ok((normalize(cur), false))
    }

    /// Samples `(β, p̂)` with density `tr(σ_{βα}(p,k):w)` on the shells.
    fn scatter(&self, state: &RayState, rng: &mut ChaCha8Rng) -> Result<RayState> {
        let medium = &self.scenario.medium;
        let model = &self.scenario.spectrum;
        let (loss, gain) = self.rate(state)?;
        let mut factor = if loss > 0.0 { gain / loss } else { 1.0 };
        if (factor - 1.0).abs() <= WEIGHT_SNAP {
            factor = 1.0;
        }
        let f = medium.speed_factor(&state.x)?;
        let kmag = state.k.norm();
        let here = medium.branch(state.mode, &state.x, &state.k)?;
        let bounds: Vec<f64> = self.rates.bound[state.mode].iter().map(|b| b * f * kmag.powi(4)).collect();
        let total: f64 = bounds.iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateKernel);
        }
        let wa = here.frequency;
        for _ in 0..self.scenario.numerics.max_attempts {
            let mut u = rng.random::<f64>() * total;
            let mut beta = bounds.len() - 1;
            for (b, v) in bounds.iter().enumerate() {
                if u < *v {
                    beta = b;
                    break;
                }
                u -= v;
            }
            if bounds[beta] == 0.0 {
                continue;
            }
            let ph = uniform_direction(rng);
            let dest = medium.branch(beta, &state.x, &ph)?;
            let r = wa / dest.frequency;
            let p = ph * r;
            let jac = r * r / dest.frequency.abs();
            let q = p - state.k;
            let rm = model.scaled_matrix(&q);
            let qf: Vec<CMat> =
                model.channels.iter().map(|ch| dest.left.adjoint() * (ch.structure * &here.right)).collect();
            let pf: Vec<CMat> =
                model.channels.iter().map(|ch| here.left.adjoint() * (ch.structure * &dest.right)).collect();
            let b = dest.multiplicity();
            let mut out = CMat::zeros(b, b);
            for (ci, qc) in qf.iter().enumerate() {
                let qw = qc * &state.coherence;
                for (cj, pc) in pf.iter().enumerate() {
                    let rr = rm[(ci, cj)];
                    if rr != c(0.0) {
                        out += &qw * pc * rr;
                    }
                }
            }
            let tr = out.trace().re;
            let density = 2.0 * std::f64::consts::PI * wa * wa * tr * jac;
            if density > bounds[beta] * 1.0000001 {
                return Err(Error::InvalidArgument("scattering bound violated".into()));
            }
            if rng.random::<f64>() * bounds[beta] < density && tr > 0.0 {
                let mut next = state.clone();
                next.mode = beta;
                next.k = p;
                next.coherence = crate::linalg::keep_psd(&(out / c(tr)), 1e-12);
                next.rotation = CMat::identity(b, b);
                next.weight *= factor;
                return Ok(next);
            }
        }
        Err(Error::DegenerateKernel)
    }

    fn run_particle(&self, index: usize) -> Result<(Option<Deposit>, ParticleFlags)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.scenario.numerics.seed);
        rng.set_stream(index as u64);
        let mut state = self.spawn(&mut rng);
        let mut flags = ParticleFlags::default();
        let horizon = self.scenario.horizon;
        while state.t < horizon {
            let depth = sample_free_flight(1.0, &mut rng);
            let (next, hit) = match self.fly(&state, depth, horizon - state.t) {
                Ok(v) => v,
                Err(Error::LeftDomain(_)) => {
                    flags.escaped = true;
                    return Ok((None, flags));
                }
                Err(e) => return Err(e),
            };
            state = next;
            if !hit {
                break;
            }
            match self.scatter(&state, &mut rng) {
                Ok(s) => {
                    state = s;
                    flags.scatters += 1;
                }
                Err(Error::DegenerateKernel) => {
                    flags.absorbed = true;
                    return Ok((None, flags));
                }
                Err(e) => return Err(e),
            }
        }
        let Some(local) = self.scenario.binning.index(&state.x, &state.k) else {
            flags.escaped = true;
            return Ok((None, flags));
        };
        let (_, vg) = self.tracer.hamiltonian_gradients(state.mode, &state.x, &state.k)?;
        let bin = state.mode * self.scenario.binning.per_mode() + local;
        Ok((Some(Deposit { bin, coherence: &state.coherence * c(state.weight), velocity: vg }), flags))
    }
}

/// Moves `tr w` into the weight.
fn normalize(mut s: RayState) -> RayState {
    let tr = s.coherence.trace().re;
    if tr > 0.0 {
        s.weight *= tr;
        s.coherence /= c(tr);
    }
    s
}

fn uniform_direction<R: rand::Rng + ?Sized>(rng: &mut R) -> V3 {
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi: f64 = std::f64::consts::TAU * rng.random::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    V3::new(s * phi.cos(), s * phi.sin(), z)
}

/// Batch of particle `i` among `n` particles split into `batches`.
pub fn batch_of(i: usize, n: usize, batches: usize) -> usize {
    ((i as u128 * batches as u128) / n as u128) as usize
}

/// Runs every particle to the horizon and bins the surviving state.
///
/// Trajectories depend only on `(seed, particle index)`; deposits are
/// merged in particle order, so the histogram is bit-identical for any
/// worker count.
pub fn run_simulation(scenario: &Scenario) -> Result<PhaseSpaceHistogram> {
    scenario.validate()?;
    let rates = RateTable::build(scenario)?;
    let engine = Engine { scenario, tracer: Tracer::new(&scenario.medium, scenario.trace_options()), rates };
    let n = scenario.source.particles;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(scenario.numerics.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let results: Vec<Result<(Option<Deposit>, ParticleFlags)>> =
        pool.install(|| (0..n).into_par_iter().map(|i| engine.run_particle(i)).collect());
    let multiplicity: Vec<usize> = engine_multiplicities(&scenario.medium)?;
    let batches = scenario.numerics.batches;
    let mut hist = PhaseSpaceHistogram::new(scenario.binning.clone(), multiplicity, n, scenario.numerics.seed, batches);
    hist.initial_total = scenario.source.total_weight;
    let mut deposits = Vec::with_capacity(n);
    for (i, r) in results.into_iter().enumerate() {
        let (d, flags) = r?;
        hist.escaped += flags.escaped as usize;
        hist.absorbed += flags.absorbed as usize;
        hist.scatter_events += flags.scatters;
        deposits.push((i, d));
    }
    hist.accumulate(deposits.into_iter(), |i| batch_of(i, n, batches));
    Ok(hist)
}

fn engine_multiplicities(medium: &Medium) -> Result<Vec<usize>> {
    Ok(medium.decompose(&V3::zeros(), &V3::z())?.branches.iter().map(|b| b.multiplicity()).collect())
}

/// Closed-form `w(x, k, t) = e^{−Γ̃t} w_I(x − v_g t, k)` of an undisturbed
/// homogeneous medium with a Lorentz (or no) susceptibility, for a box or
/// point source with a fixed direction. Returns the coefficient of
/// `δ(k − k_I)`; zero away from the transported support.
pub fn analytic_lorentz_solution(x: &V3, k: &V3, t: f64, scenario: &Scenario) -> Result<CMat> {
    let (decay, vg) = transport_constants(scenario)?;
    let s = &scenario.source;
    let a = s.coherence.nrows();
    let DirectionLaw::Fixed(d) = &s.direction else {
        return Err(Error::InvalidArgument("closed form needs a fixed source direction".into()));
    };
    let k0 = d.normalize() * s.wavenumber;
    if (k - k0).norm() > 1e-12 * s.wavenumber {
        return Ok(CMat::zeros(a, a));
    }
    let back = x - vg * t;
    let density = match &s.position {
        PositionLaw::Box { min, max } => {
            let inside = (0..3).all(|j| back[j] >= min[j] && back[j] <= max[j]);
            if inside {
                s.total_weight / (max - min).product()
            } else {
                0.0
            }
        }
        PositionLaw::Point(_) => return Err(Error::InvalidArgument("closed form needs a box source".into())),
    };
    Ok(&s.coherence * c(density * (-decay * t).exp()))
}

/// Expected `Σ weight · tr w` per spatial cell at time `t` for the box
/// source of [`analytic_lorentz_solution`] (zero spectrum).
pub fn analytic_cell_masses(scenario: &Scenario, t: f64) -> Result<Vec<f64>> {
    let (decay, vg) = transport_constants(scenario)?;
    let s = &scenario.source;
    let (min, max) = match &s.position {
        PositionLaw::Box { min, max } => (min + vg * t, max + vg * t),
        PositionLaw::Point(x) => (x + vg * t, x + vg * t),
    };
    let b = &scenario.binning;
    let size = b.cell_size();
    let vol = (max - min).product();
    let total = s.total_weight * (-decay * t).exp();
    let mut out = vec![0.0; b.spatial_len()];
    for (cell, o) in out.iter_mut().enumerate() {
        let center = b.spatial_center(cell);
        let mut frac = 1.0;
        for j in 0..3 {
            let (lo, hi) = (center[j] - size[j] / 2.0, center[j] + size[j] / 2.0);
            let len = max[j] - min[j];
            frac *= if len == 0.0 {
                if min[j] >= lo && min[j] < hi {
                    1.0
                } else {
                    0.0
                }
            } else {
                (hi.min(max[j]) - lo.max(min[j])).max(0.0) / len
            };
        }
        *o = total * frac;
    }
    if vol == 0.0 && out.iter().sum::<f64>() == 0.0 {
        return Err(Error::InvalidArgument("point source left the binned domain".into()));
    }
    Ok(out)
}

/// `(Γ̃, v_g)` of the source mode and direction.
fn transport_constants(scenario: &Scenario) -> Result<(f64, V3)> {
    let m = &scenario.medium;
    if !m.is_homogeneous() || !matches!(m.family(), Family::Isotropic { .. }) {
        return Err(Error::InvalidArgument("closed form needs a homogeneous isotropic medium".into()));
    }
    let s = &scenario.source;
    let DirectionLaw::Fixed(d) = &s.direction else {
        return Err(Error::InvalidArgument("closed form needs a fixed source direction".into()));
    };
    let k0 = d.normalize() * s.wavenumber;
    let omega = m.frequency(s.mode, &V3::zeros(), &k0)?;
    let decay = match &m.response.susceptibility {
        Susceptibility::None => 0.0,
        Susceptibility::Lorentz(l) => l.attenuation(omega),
        Susceptibility::Table(_) => {
            return Err(Error::InvalidArgument("closed form needs a Lorentz susceptibility".into()))
        }
    };
    let v = m.mode_speed(s.mode).expect("isotropic");
    Ok((decay, d.normalize() * v))
}

/// `|E − E_ref|₁ / |E_ref|₁` over spatial cells.
pub fn l1_distance(a: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(reference).map(|(x, y)| (x - y).abs()).sum();
    let den: f64 = reference.iter().map(|y| y.abs()).sum();
    num / den
}
