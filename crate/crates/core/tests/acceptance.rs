//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line; the process fails if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use emrt::dispersion::{
    chiral_branches, eigen_decompose, isotropic_branches, LorentzModel, Medium, OpticalResponse, Profile,
    Susceptibility,
};
use emrt::linalg::{c, frobenius, CMat, C64, M6, V3};
use emrt::media::{SpectralModel, Spectrum};
use emrt::quadrature::SphereRule;
use emrt::raytrace::{Domain, Gauge, RayState, TraceOptions, Tracer};
use emrt::rte_mc::{
    analytic_cell_masses, l1_distance, run_simulation, scattering_rate, Binning, DirectionLaw, Numerics, PositionLaw,
    Scenario, Source,
};
use emrt::scattering::{
    chiral_sigma, chiral_total, differential_xsection, lorentz_kernel, lorentz_total, total_xsection, LorentzSpectra,
};
use emrt::wigner_lab::{discrete_wigner, free_transport_check, kirchhoff_spherical_mean, SampledField};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn check(ok: bool, what: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn wavevectors() -> Vec<V3> {
    vec![
        V3::new(0.0, 0.0, 1.0),
        V3::new(0.3, -0.4, 1.2),
        V3::new(-2.0, 0.5, 0.1),
        V3::new(0.01, 0.02, -0.03),
        V3::new(5.0, 5.0, 5.0),
    ]
}

fn projector_gap(a: &M6, b: &M6) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn dispersion_oracles() -> Outcome {
    let mut worst_eig: f64 = 0.0;
    let mut worst_proj: f64 = 0.0;
    for (eps, mu) in [(1.0, 1.0), (2.0, 0.5), (3.0, 1.7)] {
        let c0 = 1.0 / f64::sqrt(eps * mu);
        let generic = Medium::general(OpticalResponse::isotropic(eps, mu).map_err(|e| e.to_string())?);
        for k in wavevectors() {
            let d = isotropic_branches(eps, mu, &k).map_err(|e| e.to_string())?;
            let mut got = d.eigenvalues();
            got.sort_by(f64::total_cmp);
            let w = c0 * k.norm();
            let expect = [-w, -w, 0.0, 0.0, w, w];
            for (g, e) in got.iter().zip(expect) {
                worst_eig = worst_eig.max((g - e).abs() / w.max(1.0));
            }
            let g = generic.decompose(&V3::zeros(), &k).map_err(|e| e.to_string())?;
            for b in &d.branches {
                let other = &g.branches[g.nearest(b.frequency)];
                worst_proj = worst_proj.max(projector_gap(&b.projector(), &other.projector()));
            }
        }
    }
    for kappa in [0.1, 0.5, 0.9] {
        let (eps, mu) = (1.3, 0.8);
        let c0 = 1.0 / f64::sqrt(eps * mu);
        let generic = Medium::general(OpticalResponse::chiral(eps, mu, kappa).map_err(|e| e.to_string())?);
        for k in wavevectors() {
            let d = chiral_branches(eps, mu, kappa, &k).map_err(|e| e.to_string())?;
            let n = k.norm();
            let expect =
                [0.0, c0 * n / (1.0 + kappa), -c0 * n / (1.0 + kappa), c0 * n / (1.0 - kappa), -c0 * n / (1.0 - kappa)];
            for (b, e) in d.branches.iter().zip(expect) {
                worst_eig = worst_eig.max((b.frequency - e).abs() / (c0 * n).max(1.0));
            }
            let g = generic.decompose(&V3::zeros(), &k).map_err(|e| e.to_string())?;
            for b in &d.branches {
                let other = &g.branches[g.nearest(b.frequency)];
                worst_proj = worst_proj.max(projector_gap(&b.projector(), &other.projector()));
            }
        }
    }
    check(worst_eig <= 1e-12, format!("eigenvalue error {worst_eig:e}"))?;
    check(worst_proj <= 1e-10, format!("projector gap {worst_proj:e}"))?;
    Ok(format!("eigenvalue error {worst_eig:.1e}, projector gap {worst_proj:.1e}"))
}

fn random_response(rng: &mut ChaCha8Rng) -> M6 {
    let a = M6::from_fn(|_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    a * a.adjoint() + M6::identity() * c(0.2)
}

fn spectral_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for trial in 0..200 {
        let k0 = random_response(&mut rng);
        let k = V3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 4.0;
        let d = eigen_decompose(&k0, &k).map_err(|e| format!("trial {trial}: {e}"))?;
        worst = worst.max(d.orthonormality_residual()).max(d.identity_residual()).max(d.reconstruction_residual());
        let null = d.null_branch().ok_or_else(|| format!("trial {trial}: no null branch"))?;
        check(d.branches[null].multiplicity() == 2, format!("trial {trial}: null multiplicity"))?;
    }
    check(worst <= 1e-10, format!("residual {worst:e}"))?;
    Ok(format!("200 responses, worst residual {worst:.1e}"))
}

fn ray_invariants() -> Outcome {
    let m = Medium::isotropic(1.0, 1.0)
        .map_err(|e| e.to_string())?
        .with_profile(Profile::Linear { gradient: V3::new(0.05, 0.0, 0.1) });
    let t = Tracer::new(&m, TraceOptions::new(Domain::cube(50.0)));
    let mut s = RayState::new(1, V3::new(0.1, 0.0, 0.0), V3::new(1.0, 0.5, -0.3), CMat::identity(2, 2));
    let h0 = t.frequency(1, &s.x, &s.k).map_err(|e| e.to_string())?;
    let mut drift: f64 = 0.0;
    for _ in 0..1000 {
        s = t.advance_ray(&s, 0.01).map_err(|e| e.to_string())?;
        let h = t.frequency(1, &s.x, &s.k).map_err(|e| e.to_string())?;
        drift = drift.max((h - h0).abs() / h0);
    }
    check(drift <= 1e-8, format!("Hamiltonian drift {drift:e}"))?;

    let hm = Medium::isotropic(2.0, 0.5).map_err(|e| e.to_string())?;
    let ht = Tracer::new(&hm, TraceOptions::new(Domain::cube(50.0)));
    let k = V3::new(0.6, -0.8, 0.0);
    let x0 = V3::new(1.0, 2.0, 3.0);
    let mut r = RayState::new(2, x0, k, CMat::identity(2, 2));
    for _ in 0..100 {
        r = ht.advance_ray(&r, 0.05).map_err(|e| e.to_string())?;
    }
    let exact = x0 - k.normalize() * 5.0;
    let err = (r.x - exact).norm();
    check(err <= 1e-12 && r.k == k, format!("homogeneous ray error {err:e}"))?;
    Ok(format!("drift {drift:.1e}, straight-ray error {err:.1e}"))
}

fn damping_transport() -> Outcome {
    let lin = Medium::isotropic(1.2, 0.9)
        .map_err(|e| e.to_string())?
        .with_profile(Profile::Linear { gradient: V3::new(0.0, 0.08, 0.15) });
    let mut opts = TraceOptions::new(Domain::cube(2.0));
    opts.gauge = Some(Gauge::ParallelTransport);
    let t = Tracer::new(&lin, opts);
    let x = V3::new(0.1, -0.2, 0.3);
    let mut skew: f64 = 0.0;
    for k in [V3::new(0.3, 0.4, 1.0), V3::new(-1.0, 0.2, 0.5)] {
        for mode in 0..3 {
            skew = skew.max(t.skew_matrix_n(mode, &x, &k).map_err(|e| e.to_string())?.residual);
        }
    }
    check(skew <= 1e-6, format!("skew residual {skew:e}"))?;
    let n0 = frobenius(&t.skew_matrix_n(0, &x, &V3::new(0.3, 0.4, 1.0)).map_err(|e| e.to_string())?.value);
    check(n0 <= 1e-6, format!("null-mode n {n0:e}"))?;

    let homo = Medium::chiral(1.2, 0.9, 0.3).map_err(|e| e.to_string())?;
    let mut hopts = TraceOptions::new(Domain::cube(2.0));
    hopts.gauge = Some(Gauge::ParallelTransport);
    let ht = Tracer::new(&homo, hopts);
    let mut nh: f64 = 0.0;
    for mode in 1..5 {
        nh = nh.max(frobenius(&ht.skew_matrix_n(mode, &x, &V3::new(0.2, -0.7, 0.4)).map_err(|e| e.to_string())?.value));
    }
    check(nh <= 1e-6, format!("homogeneous n {nh:e}"))?;

    let (plasma, resonance, damping) = (1.1, 0.6, 0.4);
    let (eps, mu) = (1.5, 1.0);
    let l = LorentzModel::new(eps, plasma, resonance, damping).map_err(|e| e.to_string())?;
    let c0 = 1.0 / f64::sqrt(eps * mu);
    let m = Medium::isotropic(eps, mu).map_err(|e| e.to_string())?.with_susceptibility(Susceptibility::Lorentz(l));
    let tr = Tracer::new(&m, TraceOptions::new(Domain::cube(100.0)));
    let gamma_tilde = |kn: f64| {
        let w2 = c0 * c0 * kn * kn;
        plasma * plasma * w2 * damping / ((resonance * resonance - w2).powi(2) + w2 * damping * damping)
    };
    let mut decay: f64 = 0.0;
    let mut formula: f64 = 0.0;
    let w0 = CMat::from_row_slice(2, 2, &[c(0.6), C64::new(0.2, 0.1), C64::new(0.2, -0.1), c(0.4)]);
    for kn in [0.2, 0.5, 0.9, 1.7, 4.0] {
        let k = V3::new(0.0, 0.6, 0.8) * kn;
        for mode in [1, 2] {
            let cp = tr.coupling_matrix_l(mode, &V3::zeros(), &k).map_err(|e| e.to_string())?;
            let g = gamma_tilde(kn);
            let target = CMat::identity(2, 2) * c(g);
            formula = formula.max(frobenius(&(&cp.symmetric * c(2.0) - target)) / g);
            let horizon = 2.5;
            let out = tr
                .free_flight(&RayState::new(mode, V3::zeros(), k, w0.clone()), horizon, 0.01)
                .map_err(|e| e.to_string())?;
            let expect = (-g * horizon).exp() * w0.trace().re;
            decay = decay.max((out.coherence.trace().re - expect).abs());
        }
    }
    check(decay <= 1e-12, format!("decay error {decay:e}"))?;
    check(formula <= 1e-12, format!("attenuation formula error {formula:e}"))?;
    Ok(format!("skew residual {skew:.1e}, n0 {n0:.1e}, homogeneous n {nh:.1e}, decay {decay:.1e}, rate {formula:.1e}"))
}

fn radial(model: &SpectralModel, i: usize, j: usize) -> impl Fn(f64) -> f64 + '_ {
    move |q| model.scaled_matrix(&V3::new(0.0, 0.0, q))[(i, j)].re
}

fn shell_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut off: f64 = 0.0;
    let rule = SphereRule::new(64, 64);
    let (eps, mu) = (1.4, 0.9);
    let m = Medium::isotropic(eps, mu).map_err(|e| e.to_string())?;
    let c0 = 1.0 / f64::sqrt(eps * mu);
    let shapes = [
        SpectralModel::lorentz(Spectrum::Gaussian { length: 1.0 }, Some(Spectrum::Gaussian { length: 0.6 }), 0.5, 0.3),
        SpectralModel::lorentz(
            Spectrum::Exponential { length: 0.8 },
            Some(Spectrum::Exponential { length: 0.5 }),
            0.3,
            0.3,
        ),
    ];
    for model in shapes {
        let model = model.map_err(|e| e.to_string())?;
        for i in 0..10 {
            let kn = 0.2 + 0.3 * i as f64;
            let k = V3::new(0.48, -0.6, 0.64) * kn;
            let tot = total_xsection(&m, &V3::zeros(), 1, &k, &model, &rule).map_err(|e| e.to_string())?;
            let closed = lorentz_total(c0, kn, radial(&model, 0, 0), radial(&model, 1, 1), radial(&model, 0, 1), 96);
            for d in 0..2 {
                worst = worst.max((tot.real[(d, d)].re - closed).abs() / closed);
            }
            off = off.max(tot.real[(0, 1)].norm().max(tot.real[(1, 0)].norm()) / closed);
        }
    }
    check(worst <= 1e-6, format!("relative error {worst:e}"))?;
    check(off <= 1e-8, format!("off-diagonal ratio {off:e}"))?;
    Ok(format!("relative error {worst:.1e}, off-diagonal {off:.1e}"))
}

fn worked_media() -> Outcome {
    let m = Medium::isotropic(1.6, 0.7).map_err(|e| e.to_string())?;
    let c0 = m.light_speed().unwrap_or(1.0);
    let lmodel = SpectralModel::lorentz(
        Spectrum::Gaussian { length: 1.0 },
        Some(Spectrum::Exponential { length: 0.5 }),
        0.4,
        0.5,
    )
    .map_err(|e| e.to_string())?;
    let pairs = [
        (V3::new(0.2, 0.4, 1.1), V3::new(-0.7, 0.5, 0.3)),
        (V3::new(1.0, 0.0, 0.0), V3::new(0.0, 1.0, 0.0)),
        (V3::new(-0.3, 0.9, 0.2), V3::new(0.8, 0.1, -0.6)),
    ];
    let w = CMat::from_row_slice(2, 2, &[c(0.55), C64::new(0.1, -0.2), C64::new(0.1, 0.2), c(0.45)]);
    let mut lorentz_err: f64 = 0.0;
    for (k, p) in &pairs {
        let dk = m.decompose(&V3::zeros(), k).map_err(|e| e.to_string())?;
        let dp = m.decompose(&V3::zeros(), p).map_err(|e| e.to_string())?;
        let rm = lmodel.scaled_matrix(&(k - p));
        let spectra =
            LorentzSpectra { eps: rm[(0, 0)].re, mu: rm[(1, 1)].re, eps_mu: rm[(0, 1)].re, mu_eps: rm[(1, 0)].re };
        let closed = lorentz_kernel(c0, k, p, spectra).map_err(|e| e.to_string())?.apply(&w);
        let generic = differential_xsection((&dk, 1), (&dp, 1), &lmodel).map_err(|e| e.to_string())?.apply(&w);
        lorentz_err = lorentz_err.max(frobenius(&(generic - &closed)) / frobenius(&closed).max(1e-30));
    }
    check(lorentz_err <= 1e-10, format!("Lorentz kernel error {lorentz_err:e}"))?;

    let (eps, mu, kappa) = (1.2, 0.9, 0.3);
    let cm = Medium::chiral(eps, mu, kappa).map_err(|e| e.to_string())?;
    let c0 = cm.light_speed().unwrap_or(1.0);
    let cmodel = SpectralModel::chiral(
        Spectrum::Gaussian { length: 1.0 },
        Some(Spectrum::Exponential { length: 0.6 }),
        0.3,
        (mu / eps).sqrt(),
        0.5,
    )
    .map_err(|e| e.to_string())?;
    let mut chiral_err: f64 = 0.0;
    let mut cross: f64 = 0.0;
    for (k, p) in &pairs {
        let dk = cm.decompose(&V3::zeros(), k).map_err(|e| e.to_string())?;
        let dp = cm.decompose(&V3::zeros(), p).map_err(|e| e.to_string())?;
        let rm = cmodel.scaled_matrix(&(k - p));
        for mode in 1..=4 {
            let g = differential_xsection((&dk, mode), (&dp, mode), &cmodel)
                .map_err(|e| e.to_string())?
                .tensor
                .get(0, 0, 0, 0)
                .re;
            let f = chiral_sigma(mode, c0, kappa, k, p, rm[(0, 0)].re, rm[(1, 1)].re, rm[(0, 1)].re)
                .map_err(|e| e.to_string())?;
            chiral_err = chiral_err.max((g - f).abs() / f.abs().max(1e-12));
        }
        for (a, b) in [(1, 3), (2, 4), (3, 1), (4, 2)] {
            let s = differential_xsection((&dk, a), (&dp, b), &cmodel).map_err(|e| e.to_string())?;
            let scale = differential_xsection((&dk, a), (&dp, a), &cmodel).map_err(|e| e.to_string())?.tensor.max_abs();
            cross = cross.max(s.tensor.max_abs() / scale.max(1e-30));
        }
    }
    check(chiral_err <= 1e-8, format!("chiral sigma error {chiral_err:e}"))?;
    check(cross <= 1e-10, format!("cross-helicity ratio {cross:e}"))?;

    let rule = SphereRule::new(48, 48);
    let k = V3::new(-0.4, 0.2, 0.8);
    let mut totals = [0.0; 4];
    for (mode, slot) in (1..=4).zip(totals.iter_mut()) {
        *slot = total_xsection(&cm, &V3::zeros(), mode, &k, &cmodel, &rule).map_err(|e| e.to_string())?.real[(0, 0)].re;
    }
    let closed =
        chiral_total(c0, kappa, k.norm(), radial(&cmodel, 0, 0), radial(&cmodel, 1, 1), radial(&cmodel, 0, 1), 96)
            .map_err(|e| e.to_string())?;
    let pair = ((totals[0] - totals[1]).abs() / totals[0]).max((totals[2] - totals[3]).abs() / totals[2]);
    let vs_closed = totals.iter().zip(&closed).map(|(a, b)| (a - b).abs() / b).fold(0.0, f64::max);
    check(pair <= 1e-9, format!("pair mismatch {pair:e}"))?;
    check(vs_closed <= 1e-8, format!("chiral totals vs closed form {vs_closed:e}"))?;
    Ok(format!(
        "Lorentz {lorentz_err:.1e}, chiral {chiral_err:.1e}, cross {cross:.1e}, pairs {pair:.1e}, totals {vs_closed:.1e}"
    ))
}

fn mc_scenario(medium: Medium, spectrum: SpectralModel, particles: usize) -> Scenario {
    Scenario {
        medium,
        spectrum,
        source: Source {
            position: PositionLaw::Point(V3::zeros()),
            direction: DirectionLaw::Isotropic,
            wavenumber: 1.0,
            mode: 1,
            coherence: CMat::identity(2, 2) * c(0.5),
            particles,
            total_weight: 1.0,
        },
        horizon: 1.0,
        numerics: Numerics { theta_order: 24, phi_order: 24, batches: 32, ..Numerics::default() },
        binning: Binning {
            domain: Domain::cube(20.0),
            x_cells: [4; 3],
            cos_cells: 4,
            phi_cells: 4,
            k_edges: vec![0.0, 10.0],
        },
    }
}

fn elastic_scenario(particles: usize, rate: f64) -> Result<Scenario, String> {
    let model =
        SpectralModel::lorentz(Spectrum::Gaussian { length: 1.0 }, Some(Spectrum::Gaussian { length: 1.0 }), 0.0, 1.0)
            .map_err(|e| e.to_string())?;
    let mut s = mc_scenario(Medium::isotropic(1.0, 1.0).map_err(|e| e.to_string())?, model, particles);
    let rule = SphereRule::new(s.numerics.theta_order, s.numerics.phi_order);
    let base = scattering_rate(&s.medium, &V3::zeros(), 1, &V3::z(), &s.spectrum, &rule).map_err(|e| e.to_string())?;
    s.spectrum.amplitude *= (rate / base).sqrt();
    Ok(s)
}

fn monte_carlo() -> Outcome {
    let l = LorentzModel::new(1.0, 0.8, 0.5, 0.6).map_err(|e| e.to_string())?;
    let m = Medium::isotropic(1.0, 1.0).map_err(|e| e.to_string())?.with_susceptibility(Susceptibility::Lorentz(l));
    let mut free = mc_scenario(m, SpectralModel::empty(), 100_000);
    free.source.position = PositionLaw::Box { min: V3::new(-1.0, -1.0, -1.0), max: V3::new(1.0, 1.0, 1.0) };
    free.source.direction = DirectionLaw::Fixed(V3::new(1.0, 0.5, 0.0));
    free.binning.domain = Domain::cube(4.0);
    free.binning.x_cells = [8; 3];
    free.horizon = 1.3;
    let h = run_simulation(&free).map_err(|e| e.to_string())?;
    let expect = analytic_cell_masses(&free, free.horizon).map_err(|e| e.to_string())?;
    let l1 = l1_distance(&h.spatial_totals(), &expect);
    check(l1 <= 0.02, format!("(a) L1 distance {l1:e}"))?;

    let mut elastic = elastic_scenario(100_000, 1.0)?;
    elastic.horizon = 3.0;
    let h = run_simulation(&elastic).map_err(|e| e.to_string())?;
    let drift = (h.total() - 1.0).abs();
    let sigma = h.total_stderr();
    check(h.scatter_events > 200_000, format!("(b) only {} scattering events", h.scatter_events))?;
    // Isotropic scattering keeps every weight at exactly one, so the batch
    // spread can fall below the roundoff of the final sum.
    let floor = 1e-12;
    check(drift <= 0.01 && drift <= (3.0 * sigma).max(floor), format!("(b) drift {drift:e}, batch sigma {sigma:e}"))?;

    let mut par = elastic_scenario(20_000, 2.0)?;
    par.horizon = 1.5;
    let a = run_simulation(&par).map_err(|e| e.to_string())?;
    par.numerics.workers = 8;
    let b = run_simulation(&par).map_err(|e| e.to_string())?;
    check(a == b, "(c) histograms differ between 1 and 8 workers")?;
    Ok(format!("(a) L1 {l1:.2e}, (b) drift {drift:.1e} with batch sigma {sigma:.1e}, (c) identical"))
}

fn wigner_lab() -> Outcome {
    let n = 512;
    let (origin, dx, eps) = (-1.0, 2.0 / 512.0, 1.0 / 32.0);
    let u = SampledField::from_fn(origin, dx, n, eps, |x| {
        C64::from_polar((-(x * x) / 0.05).exp() * (1.0 + 0.3 * x), (2.0 * x + 0.4 * x * x) / eps)
    })
    .map_err(|e| e.to_string())?;
    let w = discrete_wigner(&u, &u).map_err(|e| e.to_string())?;
    let marginal = w.k_marginal().iter().zip(&u.values).map(|(m, v)| (m - c(v.norm_sqr())).norm()).fold(0.0, f64::max);
    check(marginal <= 1e-12, format!("marginal error {marginal:e}"))?;

    let k0 = 2.0 * PI * 11.0 / u.period() * eps;
    let plane =
        SampledField::from_fn(origin, dx, n, eps, |x| C64::from_polar(1.0, k0 * x / eps)).map_err(|e| e.to_string())?;
    let wp = discrete_wigner(&plane, &plane).map_err(|e| e.to_string())?;
    let l0 = wp.nearest_k(k0);
    let mut inside = 0.0;
    for j in 0..n {
        for l in l0 - 1..=l0 + 1 {
            inside += wp.at(j, l).norm();
        }
    }
    let mass = inside / wp.l1_norm();
    check(mass >= 0.99, format!("pure-phase mass {mass}"))?;

    let packet = SampledField::from_fn(origin, dx, n, eps, |x| C64::from_polar((-(x * x) / 0.02).exp(), 2.0 * x / eps))
        .map_err(|e| e.to_string())?;
    let shift = free_transport_check(&packet, 1.0, 0.3).map_err(|e| e.to_string())?;
    check(shift <= 1e-3, format!("shift L1 {shift:e}"))?;

    let mut kirchhoff: f64 = 0.0;
    for (a, t, points) in [(2.5, 0.7, 26), (-1.0, 3.0, 50), (0.3, 0.01, 14)] {
        let v = kirchhoff_spherical_mean(|_| a, &V3::new(0.1, 0.2, 0.3), 1.3, t, points).map_err(|e| e.to_string())?;
        kirchhoff = kirchhoff.max((v - t * a).abs());
    }
    check(kirchhoff <= 1e-12, format!("Kirchhoff error {kirchhoff:e}"))?;
    Ok(format!("marginal {marginal:.1e}, mass {mass:.6}, shift {shift:.1e}, Kirchhoff {kirchhoff:.1e}"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 dispersion oracles", dispersion_oracles, Duration::from_secs(1)),
        ("2 spectral algebra", spectral_algebra, Duration::from_secs(5)),
        ("3 ray invariants", ray_invariants, Duration::from_secs(1)),
        ("4 geometric and damping transport", damping_transport, Duration::from_secs(5)),
        ("5 shell quadrature vs closed form", shell_equivalence, Duration::from_secs(10)),
        ("6 worked-media cross-sections", worked_media, Duration::from_secs(10)),
        ("7 Monte Carlo transport", monte_carlo, Duration::from_secs(120)),
        ("8 Wigner lab", wigner_lab, Duration::from_secs(10)),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = match result {
            Ok(msg) if elapsed > budget => Err(format!("{msg}; over budget ({:.2?} > {budget:.0?})", elapsed)),
            other => other,
        };
        match result {
            Ok(msg) => println!("PASS criterion {name}: {msg} [{elapsed:.2?}]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name}: {msg} [{elapsed:.2?}]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
