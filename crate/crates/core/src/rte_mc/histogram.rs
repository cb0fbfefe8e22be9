use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::io::{sidecar_path, write_f64_le, write_json};
use crate::linalg::{CMat, V3};
use crate::raytrace::Domain;
use crate::{Error, Result};

/// Phase-space binning: a uniform grid of x-cells over `domain`, uniform
/// cells in `(cos θ, φ)` for `k̂`, and explicit `|k|` edges.
#[derive(Clone, Debug, PartialEq)]
pub struct Binning {
    pub domain: Domain,
    pub x_cells: [usize; 3],
    pub cos_cells: usize,
    pub phi_cells: usize,
    /// Ascending; wavenumbers outside are clamped into the end cells.
    pub k_edges: Vec<f64>,
}

impl Binning {
    pub fn validate(&self) -> Result<()> {
        if self.x_cells.contains(&0) {
            return Err(Error::config("outputs.x_cells", "every axis needs at least one cell"));
        }
        if self.cos_cells == 0 || self.phi_cells == 0 {
            return Err(Error::config("outputs.direction_cells", "need at least one direction cell"));
        }
        if self.k_edges.len() < 2 || self.k_edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("outputs.k_edges", "need at least two strictly ascending edges"));
        }
        Ok(())
    }

    pub fn spatial_len(&self) -> usize {
        self.x_cells.iter().product()
    }

    pub fn direction_len(&self) -> usize {
        self.cos_cells * self.phi_cells
    }

    pub fn k_len(&self) -> usize {
        self.k_edges.len() - 1
    }

    /// Bins per mode.
    pub fn per_mode(&self) -> usize {
        self.spatial_len() * self.direction_len() * self.k_len()
    }

    pub fn cell_size(&self) -> V3 {
        let d = self.domain.max - self.domain.min;
        V3::new(d.x / self.x_cells[0] as f64, d.y / self.x_cells[1] as f64, d.z / self.x_cells[2] as f64)
    }

    pub fn cell_volume(&self) -> f64 {
        let s = self.cell_size();
        s.x * s.y * s.z
    }

    pub fn spatial_index(&self, x: &V3) -> Option<usize> {
        if !self.domain.contains(x) {
            return None;
        }
        let s = self.cell_size();
        let mut idx = [0usize; 3];
        for j in 0..3 {
            let i = ((x[j] - self.domain.min[j]) / s[j]).floor() as isize;
            idx[j] = i.clamp(0, self.x_cells[j] as isize - 1) as usize;
        }
        Some((idx[0] * self.x_cells[1] + idx[1]) * self.x_cells[2] + idx[2])
    }

    pub fn spatial_center(&self, cell: usize) -> V3 {
        let [_, ny, nz] = self.x_cells;
        let (ix, iy, iz) = (cell / (ny * nz), (cell / nz) % ny, cell % nz);
        let s = self.cell_size();
        self.domain.min + V3::new((ix as f64 + 0.5) * s.x, (iy as f64 + 0.5) * s.y, (iz as f64 + 0.5) * s.z)
    }

    pub fn direction_index(&self, k: &V3) -> usize {
        let kh = k.normalize();
        let ct = kh.z.clamp(-1.0, 1.0);
        let ic = (((ct + 1.0) / 2.0 * self.cos_cells as f64).floor() as usize).min(self.cos_cells - 1);
        let phi = kh.y.atan2(kh.x).rem_euclid(std::f64::consts::TAU);
        let ip = ((phi / std::f64::consts::TAU * self.phi_cells as f64).floor() as usize).min(self.phi_cells - 1);
        ic * self.phi_cells + ip
    }

    /// `(cos θ, φ)` at the center of a direction cell.
    pub fn direction_center(&self, cell: usize) -> (f64, f64) {
        let (ic, ip) = (cell / self.phi_cells, cell % self.phi_cells);
        (
            -1.0 + (ic as f64 + 0.5) * 2.0 / self.cos_cells as f64,
            (ip as f64 + 0.5) * std::f64::consts::TAU / self.phi_cells as f64,
        )
    }

    pub fn k_index(&self, kmag: f64) -> usize {
        let i = self.k_edges.partition_point(|e| *e <= kmag);
        i.saturating_sub(1).min(self.k_len() - 1)
    }

    /// Flat bin index within one mode.
    pub fn index(&self, x: &V3, k: &V3) -> Option<usize> {
        let s = self.spatial_index(x)?;
        Some((s * self.direction_len() + self.direction_index(k)) * self.k_len() + self.k_index(k.norm()))
    }

    /// `(spatial, direction, wavenumber)` cells of a flat index.
    pub fn split(&self, index: usize) -> (usize, usize, usize) {
        let nk = self.k_len();
        let nd = self.direction_len();
        (index / (nd * nk), (index / nk) % nd, index % nk)
    }
}

/// Accumulated time-`T` state over the phase-space bins of every mode.
///
/// Bin `i` of mode `α` lives at flat index `α · binning.per_mode() + i`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceHistogram {
    pub binning: Binning,
    /// Multiplicity of each mode; the null mode is kept for indexing.
    pub multiplicity: Vec<usize>,
    /// `Σ weight · w` per bin.
    pub coherence: Vec<CMat>,
    /// `Σ weight · tr w` per bin.
    pub trace: Vec<f64>,
    /// `Σ weight · tr w · ∇_kω` per bin.
    pub flux: Vec<V3>,
    pub counts: Vec<u64>,
    /// Batch-means standard error of `trace`.
    pub stderr: Vec<f64>,
    /// Surviving `Σ weight · tr w` per batch.
    pub batch_totals: Vec<f64>,
    pub particles: usize,
    pub seed: u64,
    pub initial_total: f64,
    pub escaped: usize,
    pub absorbed: usize,
    pub scatter_events: u64,
}

/// One particle's contribution at the horizon.
#[derive(Clone, Debug)]
pub(crate) struct Deposit {
    pub bin: usize,
    pub coherence: CMat,
    pub velocity: V3,
}

impl PhaseSpaceHistogram {
    pub(crate) fn new(binning: Binning, multiplicity: Vec<usize>, particles: usize, seed: u64, batches: usize) -> Self {
        let n = binning.per_mode() * multiplicity.len();
        let coherence = (0..n)
            .map(|i| {
                let a = multiplicity[i / binning.per_mode()];
                CMat::zeros(a, a)
            })
            .collect();
        Self {
            binning,
            multiplicity,
            coherence,
            trace: vec![0.0; n],
            flux: vec![V3::zeros(); n],
            counts: vec![0; n],
            stderr: vec![0.0; n],
            batch_totals: vec![0.0; batches],
            particles,
            seed,
            initial_total: 0.0,
            escaped: 0,
            absorbed: 0,
            scatter_events: 0,
        }
    }

    /// Adds deposits in particle order; `batch_of` maps the particle index
    /// to its batch.
    pub(crate) fn accumulate(
        &mut self,
        deposits: impl Iterator<Item = (usize, Option<Deposit>)>,
        batch_of: impl Fn(usize) -> usize,
    ) {
        let nb = self.batch_totals.len();
        let mut sum = vec![0.0; self.trace.len()];
        let mut sumsq = vec![0.0; self.trace.len()];
        let mut current: BTreeMap<usize, f64> = BTreeMap::new();
        let mut batch = 0;
        let flush = |current: &mut BTreeMap<usize, f64>, sum: &mut [f64], sumsq: &mut [f64]| {
            for (bin, v) in std::mem::take(current) {
                sum[bin] += v;
                sumsq[bin] += v * v;
            }
        };
        for (i, dep) in deposits {
            let b = batch_of(i);
            if b != batch {
                flush(&mut current, &mut sum, &mut sumsq);
                batch = b;
            }
            let Some(d) = dep else { continue };
            let tr = d.coherence.trace().re;
            self.coherence[d.bin] += &d.coherence;
            self.trace[d.bin] += tr;
            self.flux[d.bin] += d.velocity * tr;
            self.counts[d.bin] += 1;
            self.batch_totals[b] += tr;
            *current.entry(d.bin).or_insert(0.0) += tr;
        }
        flush(&mut current, &mut sum, &mut sumsq);
        if nb > 1 {
            let n = nb as f64;
            for i in 0..self.trace.len() {
                let mean = sum[i] / n;
                let var = ((sumsq[i] / n - mean * mean) * n / (n - 1.0)).max(0.0);
                self.stderr[i] = (var * n).sqrt();
            }
        }
    }

    pub fn total(&self) -> f64 {
        self.trace.iter().sum()
    }

    /// Standard error of [`Self::total`] from the batch totals.
    pub fn total_stderr(&self) -> f64 {
        let n = self.batch_totals.len() as f64;
        if n < 2.0 {
            return 0.0;
        }
        let mean = self.batch_totals.iter().sum::<f64>() / n;
        let var = self.batch_totals.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var * n).sqrt()
    }

    /// `Σ weight · tr w` per spatial cell, summed over modes, directions and
    /// wavenumbers.
    pub fn spatial_totals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.binning.spatial_len()];
        let per = self.binning.per_mode();
        for (i, t) in self.trace.iter().enumerate() {
            out[self.binning.split(i % per).0] += t;
        }
        out
    }

    /// Smallest `λ_min(w)/tr(w)` over populated bins.
    pub fn min_relative_eigenvalue(&self) -> f64 {
        self.coherence
            .iter()
            .zip(&self.trace)
            .filter(|(_, t)| **t > 0.0)
            .map(|(w, t)| crate::linalg::min_eigenvalue(w) / t)
            .fold(f64::INFINITY, f64::min)
    }

    /// Nonempty bins as CSV rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("mode,cell,x,y,z,cos_theta,phi,k_center,trace,stderr,count\n");
        let per = self.binning.per_mode();
        for (i, t) in self.trace.iter().enumerate() {
            if self.counts[i] == 0 {
                continue;
            }
            let (mode, local) = (i / per, i % per);
            let (cell, dir, ki) = self.binning.split(local);
            let x = self.binning.spatial_center(cell);
            let (ct, phi) = self.binning.direction_center(dir);
            let kc = 0.5 * (self.binning.k_edges[ki] + self.binning.k_edges[ki + 1]);
            let _ = writeln!(
                s,
                "{mode},{cell},{},{},{},{ct},{phi},{kc},{t:e},{:e},{}",
                x.x, x.y, x.z, self.stderr[i], self.counts[i]
            );
        }
        s
    }

    /// Writes `<stem>.csv`, `<stem>.f64` (trace then stderr, both in flat
    /// bin order) and `<stem>.f64.json`.
    pub fn export(&self, dir: &Path, stem: &str, scenario_hash: &str) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{stem}.csv"));
        fs::write(&csv, self.to_csv())?;
        let raw = dir.join(format!("{stem}.f64"));
        let mut data = self.trace.clone();
        data.extend_from_slice(&self.stderr);
        write_f64_le(&raw, &data)?;
        let side = sidecar_path(&raw);
        write_json(&side, &self.sidecar(scenario_hash))?;
        Ok(vec![csv, raw, side])
    }

    fn sidecar(&self, scenario_hash: &str) -> HistogramSidecar {
        let b = &self.binning;
        HistogramSidecar {
            layout: "trace[mode][x_cell][cos_cell][phi_cell][k_cell] followed by stderr in the same order; f64 little-endian",
            modes: self.multiplicity.len(),
            domain_min: b.domain.min.into(),
            domain_max: b.domain.max.into(),
            x_cells: b.x_cells,
            cos_edges: (0..=b.cos_cells).map(|i| -1.0 + 2.0 * i as f64 / b.cos_cells as f64).collect(),
            phi_edges: (0..=b.phi_cells).map(|i| std::f64::consts::TAU * i as f64 / b.phi_cells as f64).collect(),
            k_edges: b.k_edges.clone(),
            particles: self.particles,
            seed: self.seed,
            batches: self.batch_totals.len(),
            scenario_hash: scenario_hash.to_string(),
            total: self.total(),
            initial_total: self.initial_total,
            escaped: self.escaped,
            absorbed: self.absorbed,
        }
    }
}

#[derive(Serialize)]
struct HistogramSidecar {
    layout: &'static str,
    modes: usize,
    domain_min: [f64; 3],
    domain_max: [f64; 3],
    x_cells: [usize; 3],
    cos_edges: Vec<f64>,
    phi_edges: Vec<f64>,
    k_edges: Vec<f64>,
    particles: usize,
    seed: u64,
    batches: usize,
    scenario_hash: String,
    total: f64,
    initial_total: f64,
    escaped: usize,
    absorbed: usize,
}

/// Cell-integrated energy `E = ½ Σ tr w` and flux `F = ½ Σ tr w ∇_kω` per
/// spatial cell.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldEstimate {
    pub energy: Vec<f64>,
    pub flux: Vec<V3>,
    pub cell_volume: f64,
}

/// Sums the histogram over directions, wavenumbers and the selected modes.
pub fn estimate_fields(hist: &PhaseSpaceHistogram, modes: &[usize]) -> Result<FieldEstimate> {
    if hist.counts.iter().all(|c| *c == 0) {
        return Err(Error::EmptyHistogram);
    }
    let per = hist.binning.per_mode();
    let mut energy = vec![0.0; hist.binning.spatial_len()];
    let mut flux = vec![V3::zeros(); hist.binning.spatial_len()];
    for &m in modes {
        if m >= hist.multiplicity.len() {
            return Err(Error::InvalidArgument(format!("mode {m} is not in the histogram")));
        }
        for local in 0..per {
            let i = m * per + local;
            let cell = hist.binning.split(local).0;
            energy[cell] += 0.5 * hist.trace[i];
            flux[cell] += hist.flux[i] * 0.5;
        }
    }
    Ok(FieldEstimate { energy, flux, cell_volume: hist.binning.cell_volume() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binning() -> Binning {
        Binning {
            domain: Domain::cube(1.0),
            x_cells: [2, 3, 4],
            cos_cells: 4,
            phi_cells: 8,
            k_edges: vec![0.5, 1.0, 2.0],
        }
    }

    #[test]
    fn index_roundtrip() {
        let b = binning();
        let x = V3::new(0.6, -0.9, 0.1);
        let k = V3::new(-0.3, 0.4, 1.2);
        let i = b.index(&x, &k).unwrap();
        let (cell, dir, ki) = b.split(i);
        assert_eq!(cell, b.spatial_index(&x).unwrap());
        assert_eq!(dir, b.direction_index(&k));
        assert_eq!(ki, 1);
        let c = b.spatial_center(cell);
        let s = b.cell_size();
        for j in 0..3 {
            assert!((c[j] - x[j]).abs() <= s[j] / 2.0);
        }
        assert!(b.index(&V3::new(2.0, 0.0, 0.0), &k).is_none());
    }

    #[test]
    fn single_bin_energy_is_half_the_weight() {
        let b = Binning {
            domain: Domain::cube(1.0),
            x_cells: [1, 1, 1],
            cos_cells: 1,
            phi_cells: 1,
            k_edges: vec![0.0, 10.0],
        };
        let mut h = PhaseSpaceHistogram::new(b, vec![2, 2, 2], 1, 0, 1);
        let w = CMat::identity(2, 2) * crate::linalg::c(1.5);
        h.accumulate(
            std::iter::once((0, Some(Deposit { bin: h.binning.per_mode(), coherence: w, velocity: V3::z() }))),
            |_| 0,
        );
        let f = estimate_fields(&h, &[0, 1, 2]).unwrap();
        assert_eq!(f.energy, vec![1.5]);
        assert_eq!(f.flux[0], V3::new(0.0, 0.0, 1.5));
    }

    #[test]
    fn empty_histogram_is_an_error() {
        let h = PhaseSpaceHistogram::new(binning(), vec![2], 1, 0, 1);
        assert!(matches!(estimate_fields(&h, &[0]), Err(Error::EmptyHistogram)));
    }
}
