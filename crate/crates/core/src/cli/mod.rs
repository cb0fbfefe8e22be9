//! Command-line front end: `modes`, `trace`, `xsection`, `rte`, `wigner`.

mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::dispersion::Family;
use crate::io::write_json;
use crate::linalg::{c, CMat, C64, V3};
use crate::media::Structure;
use crate::quadrature::SphereRule;
use crate::raytrace::{Domain, RayState, TraceOptions, Tracer};
use crate::rte_mc::{estimate_fields, run_simulation};
use crate::scattering::{differential_xsection, lorentz_total, total_xsection, PrincipalValue};
use crate::wigner_lab::{discrete_wigner, free_transport_check, kirchhoff_spherical_mean, SampledField};
use crate::Result;

pub use config::{parse_scenario, parse_str, Config, SCHEMA_VERSION};

#[derive(Parser, Debug)]
#[command(name = "emrt", version, about = "Mode-resolved electromagnetic transport toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Mode frequencies and polarization vectors at the probe point.
    Modes(Common),
    /// Integrate a ray from the probe point and dump it as CSV.
    Trace(Common),
    /// Tabulate differential and total cross-sections.
    Xsection(Common),
    /// Monte Carlo solution of the transfer equations.
    Rte(Common),
    /// One-dimensional Wigner-transform and spherical-mean checks.
    Wigner(Common),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Scenario file (TOML). Defaults to a unit isotropic medium.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `numerics.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `numerics.workers`.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Leave wall-clock fields out of the manifest so reruns are
    /// byte-identical.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub workers: usize,
    pub deterministic: bool,
    pub started_unix: Option<f64>,
    pub elapsed_seconds: Option<f64>,
    pub outputs: Vec<String>,
}

/// Parses `args` (including the program name) and runs; returns the exit
/// status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(summary) => {
            print!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Runs one subcommand and returns its stdout text.
pub fn dispatch(command: &Command) -> Result<String> {
    let (name, common) = match command {
        Command::Modes(c) => ("modes", c),
        Command::Trace(c) => ("trace", c),
        Command::Xsection(c) => ("xsection", c),
        Command::Rte(c) => ("rte", c),
        Command::Wigner(c) => ("wigner", c),
    };
    let started = SystemTime::now();
    let clock = Instant::now();
    let mut cfg = match &common.config {
        Some(p) => parse_scenario(p)?,
        None => parse_str("[medium]\nkind = \"isotropic\"\n")?,
    };
    if let Some(s) = common.seed {
        cfg.numerics.seed = s;
    }
    if let Some(w) = common.workers {
        cfg.numerics.workers = w;
    }
    fs::create_dir_all(&common.out)?;
    let out = &common.out;
    let stem = cfg.outputs.stem.clone();
    let (text, files) = match command {
        Command::Modes(_) => modes(&cfg, out, &stem)?,
        Command::Trace(_) => trace(&cfg, out, &stem)?,
        Command::Xsection(_) => xsection(&cfg, out, &stem)?,
        Command::Rte(_) => rte(&cfg, out, &stem)?,
        Command::Wigner(_) => wigner(&cfg, out, &stem)?,
    };
    let manifest = RunManifest {
        tool: "emrt",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: name.into(),
        scenario_hash: cfg.hash(),
        seed: cfg.numerics.seed,
        workers: cfg.numerics.workers,
        deterministic: common.deterministic,
        started_unix: (!common.deterministic)
            .then(|| started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)),
        elapsed_seconds: (!common.deterministic).then(|| clock.elapsed().as_secs_f64()),
        outputs: files.iter().map(|p| p.strip_prefix(out).unwrap_or(p).display().to_string()).collect(),
    };
    let mpath = out.join(format!("{stem}.{name}.manifest.json"));
    write_json(&mpath, &manifest)?;
    Ok(text)
}

fn fmt_num(v: f64) -> String {
    let r = (v * 1e12).round() / 1e12;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn fmt_complex(z: C64) -> String {
    let im = fmt_num(z.im);
    if im == "0" {
        fmt_num(z.re)
    } else if im.starts_with('-') {
        format!("{}{im}i", fmt_num(z.re))
    } else {
        format!("{}+{im}i", fmt_num(z.re))
    }
}

fn probe(cfg: &Config) -> (V3, V3) {
    (V3::from(cfg.probe.x), V3::from(cfg.probe.k))
}

#[derive(Serialize)]
struct ModeRecord {
    index: usize,
    frequency: f64,
    multiplicity: usize,
    /// Columns of `b` as `[[re, im]; 6]`.
    right: Vec<Vec<[f64; 2]>>,
}

fn modes(cfg: &Config, out: &Path, stem: &str) -> Result<(String, Vec<PathBuf>)> {
    let medium = cfg.medium()?;
    let (x, k) = probe(cfg);
    let d = medium.decompose(&x, &k)?;
    let mut values = d.eigenvalues();
    values.sort_by(f64::total_cmp);
    let eig: Vec<String> = values.iter().map(|v| fmt_num(*v)).collect();
    let mut s = format!("eigenvalues: {}\n", eig.join(" "));
    let mut records = Vec::new();
    for (i, b) in d.branches.iter().enumerate() {
        let _ = writeln!(s, "mode {i}: frequency {} multiplicity {}", fmt_num(b.frequency), b.multiplicity());
        for j in 0..b.multiplicity() {
            let col: Vec<String> = b.right.column(j).iter().map(|z| fmt_complex(*z)).collect();
            let _ = writeln!(s, "  b[{j}] = [{}]", col.join(", "));
        }
        records.push(ModeRecord {
            index: i,
            frequency: b.frequency,
            multiplicity: b.multiplicity(),
            right: (0..b.multiplicity()).map(|j| b.right.column(j).iter().map(|z| [z.re, z.im]).collect()).collect(),
        });
    }
    let path = out.join(format!("{stem}.modes.json"));
    write_json(&path, &serde_json::json!({ "x": cfg.probe.x, "k": cfg.probe.k, "modes": records }))?;
    Ok((s, vec![path]))
}

fn trace(cfg: &Config, out: &Path, stem: &str) -> Result<(String, Vec<PathBuf>)> {
    let medium = cfg.medium()?;
    let (x, k) = probe(cfg);
    let t = &cfg.trace;
    let opts = TraceOptions::new(Domain::cube(cfg.outputs.domain_half_width));
    let tracer = Tracer::new(&medium, opts);
    let a = medium.branch(t.mode, &x, &k)?.multiplicity();
    let mut state = RayState::new(t.mode, x, k, CMat::identity(a, a) / c(a as f64));
    let w0 = tracer.frequency(t.mode, &x, &k)?;
    let mut csv = String::from("t,x,y,z,kx,ky,kz,omega,relative_drift\n");
    let mut row = |s: &RayState| -> Result<f64> {
        let w = tracer.frequency(t.mode, &s.x, &s.k)?;
        let drift = (w - w0).abs() / w0.abs().max(f64::MIN_POSITIVE);
        let _ = writeln!(csv, "{},{},{},{},{},{},{},{},{:e}", s.t, s.x.x, s.x.y, s.x.z, s.k.x, s.k.y, s.k.z, w, drift);
        Ok(drift)
    };
    let mut worst = row(&state)?;
    for _ in 0..t.steps {
        state = tracer.advance_ray(&state, t.dt)?;
        worst = worst.max(row(&state)?);
    }
    let path = out.join(format!("{stem}.trace.csv"));
    fs::write(&path, csv)?;
    Ok((format!("steps: {}\nmax relative frequency drift: {worst:e}\n", t.steps), vec![path]))
}

fn xsection(cfg: &Config, out: &Path, stem: &str) -> Result<(String, Vec<PathBuf>)> {
    let medium = cfg.medium()?;
    let model = cfg.spectrum()?;
    let (x, k) = probe(cfg);
    let khat = crate::linalg::unit(&k)?;
    let xs = &cfg.xsection;
    let rule = SphereRule::new(cfg.numerics.theta_order, cfg.numerics.phi_order);
    let lorentz_iso = matches!(medium.family(), Family::Isotropic { .. })
        && medium.is_homogeneous()
        && model.channels.iter().all(|ch| {
            ch.structure == Structure::Permittivity.matrix() || ch.structure == Structure::Permeability.matrix()
        });
    let mut total_csv = String::from("k,sigma_total,rate,gain_half,principal_value_im,closed_form\n");
    let mut diff_csv = String::from("k,theta,trace_sigma_I\n");
    let mut s = String::new();
    for &kk in &xs.wavenumbers {
        let kv = khat * kk;
        let t = total_xsection(&medium, &x, xs.mode, &kv, &model, &rule)?;
        let a = t.real.nrows() as f64;
        let sigma = t.real.trace().re / a;
        let pv = match t.principal_value {
            PrincipalValue::ScalarIdentity { value } => value.im,
            PrincipalValue::NotEvaluated => f64::NAN,
        };
        let closed = if lorentz_iso && xs.mode != 0 {
            let c0 = medium.light_speed().expect("isotropic");
            let radial = |i: usize, j: usize| {
                let model = &model;
                move |q: f64| {
                    let m = model.scaled_matrix(&V3::new(0.0, 0.0, q));
                    if i < m.nrows() && j < m.ncols() {
                        m[(i, j)].re
                    } else {
                        0.0
                    }
                }
            };
            let (ie, im) = channel_slots(&model);
            lorentz_total(c0, kk, radial(ie, ie), radial(im, im), radial(ie, im), 64)
        } else {
            f64::NAN
        };
        let _ = writeln!(
            total_csv,
            "{kk},{sigma:e},{:e},{:e},{pv:e},{closed:e}",
            2.0 * sigma,
            t.gain.trace().re / (2.0 * a)
        );
        let _ = writeln!(s, "|k| = {kk}: Sigma = {sigma:e}, rate = {:e}", 2.0 * sigma);
        let dk = medium.decompose(&x, &kv)?;
        let (e1, _) = crate::linalg::transverse_frame(&khat);
        for i in 0..xs.angles {
            let th = std::f64::consts::PI * i as f64 / (xs.angles.max(2) - 1) as f64;
            let ph = khat * th.cos() + e1 * th.sin();
            let dp = medium.decompose(&x, &ph)?;
            let wb = dp.branches[xs.mode].frequency;
            let wa = dk.branches[xs.mode].frequency;
            let p = if wb != 0.0 { ph * (wa / wb) } else { ph * kk };
            let dp = medium.decompose(&x, &p)?;
            let sig = differential_xsection((&dk, xs.mode), (&dp, xs.mode), &model)?;
            let b = sig.tensor.b;
            let tr = sig.apply(&CMat::identity(b, b)).trace().re;
            let _ = writeln!(diff_csv, "{kk},{th},{tr:e}");
        }
    }
    let p1 = out.join(format!("{stem}.xsection_total.csv"));
    let p2 = out.join(format!("{stem}.xsection_differential.csv"));
    fs::write(&p1, total_csv)?;
    fs::write(&p2, diff_csv)?;
    Ok((s, vec![p1, p2]))
}

/// Indices of the permittivity and permeability channels, or an index past
/// the end when absent.
fn channel_slots(model: &crate::media::SpectralModel) -> (usize, usize) {
    let n = model.channels.len();
    let find = |s: Structure| model.channels.iter().position(|ch| ch.structure == s.matrix()).unwrap_or(n + 1);
    (find(Structure::Permittivity), find(Structure::Permeability))
}

fn rte(cfg: &Config, out: &Path, stem: &str) -> Result<(String, Vec<PathBuf>)> {
    let scenario = cfg.scenario()?;
    let hist = run_simulation(&scenario)?;
    let hash = cfg.hash();
    let mut files = hist.export(out, &format!("{stem}.histogram"), &hash)?;
    let modes: Vec<usize> = (0..hist.multiplicity.len()).collect();
    let fields = estimate_fields(&hist, &modes);
    if let Ok(f) = &fields {
        let mut csv = String::from("cell,x,y,z,energy,flux_x,flux_y,flux_z\n");
        for (i, (e, fl)) in f.energy.iter().zip(&f.flux).enumerate() {
            let x = hist.binning.spatial_center(i);
            let _ = writeln!(csv, "{i},{},{},{},{e:e},{:e},{:e},{:e}", x.x, x.y, x.z, fl.x, fl.y, fl.z);
        }
        let p = out.join(format!("{stem}.fields.csv"));
        fs::write(&p, csv)?;
        files.push(p);
    }
    let s = format!(
        "particles: {}\nscatter events: {}\nescaped: {}\nabsorbed: {}\ninitial total: {:e}\nfinal total: {:e} +- {:e}\n",
        hist.particles,
        hist.scatter_events,
        hist.escaped,
        hist.absorbed,
        hist.initial_total,
        hist.total(),
        hist.total_stderr()
    );
    Ok((s, files))
}

#[derive(Serialize)]
struct WignerReport {
    marginal_max_error: f64,
    pure_phase_mass_in_three_bins: f64,
    shift_l1_distance: f64,
    kirchhoff_constant_error: f64,
}

fn wigner(cfg: &Config, out: &Path, stem: &str) -> Result<(String, Vec<PathBuf>)> {
    let w = &cfg.wigner;
    let n = w.points;
    let dx = 2.0 / n as f64;
    let packet =
        SampledField::from_fn(-1.0, dx, n, w.eps, |x| C64::from_polar((-(x * x) / 0.02).exp(), 2.0 * x / w.eps))?;
    let wp = discrete_wigner(&packet, &packet)?;
    let marginal_max_error =
        wp.k_marginal().iter().zip(&packet.values).map(|(m, u)| (m - c(u.norm_sqr())).norm()).fold(0.0, f64::max);
    let period_y = n as f64 * dx / w.eps;
    let k0 = 2.0 * std::f64::consts::PI * (n / 8) as f64 / period_y;
    let phase = SampledField::from_fn(-1.0, dx, n, w.eps, |x| C64::from_polar(1.0, k0 * x / w.eps))?;
    let wph = discrete_wigner(&phase, &phase)?;
    let l0 = wph.nearest_k(k0);
    let inside: f64 = (0..n)
        .flat_map(|j| (l0.saturating_sub(1)..=(l0 + 1).min(n - 1)).map(move |l| (j, l)))
        .map(|(j, l)| wph.at(j, l).norm())
        .sum();
    let pure = inside / wph.l1_norm();
    let shift = free_transport_check(&packet, w.speed, w.time)?;
    let t = w.time.max(f64::MIN_POSITIVE);
    let kc = kirchhoff_spherical_mean(|_| 1.5, &V3::new(0.1, 0.2, 0.3), w.speed, t, w.lebedev_points)?;
    let report = WignerReport {
        marginal_max_error,
        pure_phase_mass_in_three_bins: pure,
        shift_l1_distance: shift,
        kirchhoff_constant_error: (kc - 1.5 * t).abs(),
    };
    let p = out.join(format!("{stem}.wigner.json"));
    write_json(&p, &report)?;
    let mut files = vec![p];
    files.extend(wp.export_raw(&out.join(format!("{stem}.wigner_packet.f64")))?);
    let s = format!(
        "marginal identity max error: {:e}\npure phase mass in 3 bins: {}\nshift L1 distance: {:e}\nKirchhoff constant-data error: {:e}\n",
        report.marginal_max_error, report.pure_phase_mass_in_three_bins, report.shift_l1_distance, report.kirchhoff_constant_error
    );
    Ok((s, files))
}
