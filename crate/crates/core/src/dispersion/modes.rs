use nalgebra::{Matrix6, SymmetricEigen, Vector3};

use crate::linalg::{
    c, cholesky_lower, cross_matrix, frobenius, stack, transverse_frame, unit, CMat, Cols6, C64, I, M6, V3,
};
use crate::{Error, Result};

use super::response::OpticalResponse;

/// Relative tolerance for merging eigenvalues into one branch:
/// `|ωᵢ − ωⱼ| ≤ DEGENERACY_TOL·(1 + max|ω|)`.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// `M(k) = [[0, −Ω(k)], [Ω(k), 0]]` with `Ω(k)a = k × a`.
pub fn maxwell_symbol(k: &V3) -> Matrix6<f64> {
    let o = cross_matrix(k);
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-o));
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&o);
    m
}

/// One eigenvalue of `L₀` with its right (`b`) and left (`c = K₀ b`)
/// eigenvectors, normalized so that `c* b = I`.
#[derive(Clone, Debug)]
pub struct Branch {
    pub frequency: f64,
    pub right: Cols6,
    pub left: Cols6,
}

impl Branch {
    pub fn from_right(frequency: f64, right: Cols6, k0: &M6) -> Self {
        let left = k0 * &right;
        Self { frequency, right, left }
    }

    pub fn multiplicity(&self) -> usize {
        self.right.ncols()
    }

    /// Gauge-free spectral projector `b c*`.
    pub fn projector(&self) -> M6 {
        &self.right * self.left.adjoint()
    }

    /// Same subspace, rescaled for `K₀ → K₀/f` (frequency times `f`).
    pub fn scaled(&self, f: f64) -> Self {
        let s = f.sqrt();
        Self { frequency: self.frequency * f, right: &self.right * c(s), left: &self.left * c(1.0 / s) }
    }
}

#[derive(Clone, Debug)]
pub struct ModeDecomposition {
    pub wavevector: V3,
    /// The assembled `K₀` the branches refer to.
    pub response: M6,
    pub branches: Vec<Branch>,
}

impl ModeDecomposition {
    pub fn dispersion_matrix(&self) -> M6 {
        let inv = self.response.try_inverse().unwrap_or_else(M6::zeros);
        inv * maxwell_symbol(&self.wavevector).map(c)
    }

    /// All eigenvalues repeated by multiplicity, in branch order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.branches.iter().flat_map(|b| std::iter::repeat_n(b.frequency, b.multiplicity())).collect()
    }

    pub fn null_branch(&self) -> Option<usize> {
        let scale = 1.0 + self.branches.iter().map(|b| b.frequency.abs()).fold(0.0, f64::max);
        self.branches.iter().position(|b| b.frequency.abs() <= DEGENERACY_TOL * scale)
    }

    /// Index of the branch whose eigenvalue is closest to `omega`.
    pub fn nearest(&self, omega: f64) -> usize {
        let mut best = 0;
        for (i, b) in self.branches.iter().enumerate() {
            if (b.frequency - omega).abs() < (self.branches[best].frequency - omega).abs() {
                best = i;
            }
        }
        best
    }

    /// `max ‖c_α* b_β − δ_αβ I‖_F`.
    pub fn orthonormality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.branches.iter().enumerate() {
            for (j, b) in self.branches.iter().enumerate() {
                let mut g: CMat = a.left.adjoint() * &b.right;
                if i == j {
                    for d in 0..g.nrows() {
                        g[(d, d)] -= c(1.0);
                    }
                }
                worst = worst.max(frobenius(&g));
            }
        }
        worst
    }

    /// `‖Σ b_α c_α* − I‖_F / √6`.
    pub fn identity_residual(&self) -> f64 {
        let s: M6 = self.branches.iter().map(Branch::projector).sum();
        (s - M6::identity()).norm() / 6f64.sqrt()
    }

    /// `‖Σ ω_α b_α c_α* − L₀‖_F / ‖L₀‖_F`.
    pub fn reconstruction_residual(&self) -> f64 {
        let l0 = self.dispersion_matrix();
        let s: M6 = self.branches.iter().map(|b| b.projector() * c(b.frequency)).sum();
        (s - l0).norm() / l0.norm().max(f64::MIN_POSITIVE)
    }

    /// `max ‖c_α − K₀ b_α‖_F`.
    pub fn left_residual(&self) -> f64 {
        self.branches.iter().map(|b| (&b.left - self.response * &b.right).norm()).fold(0.0, f64::max)
    }
}

/// Generic solver for `M(k) b = ω K₀ b` through the Cholesky factor
/// `K₀ = L L*`: diagonalize `L⁻¹ M L⁻*` and map back with `b = L⁻* y`.
/// Branches are sorted by ascending eigenvalue.
pub fn eigen_decompose(k0: &M6, k: &V3) -> Result<ModeDecomposition> {
    unit(k)?;
    let herm = (k0 + k0.adjoint()) * c(0.5);
    let l = cholesky_lower(&herm).ok_or(Error::NonPositiveDefinite)?;
    let m = maxwell_symbol(k).map(c);
    let y = l.solve_lower_triangular(&m).ok_or(Error::NonPositiveDefinite)?;
    let a = l.solve_lower_triangular(&y.adjoint()).ok_or(Error::NonPositiveDefinite)?.adjoint();
    let a = (a + a.adjoint()) * c(0.5);
    let eig = SymmetricEigen::new(a);
    let vecs = l.adjoint().solve_upper_triangular(&eig.eigenvectors).ok_or(Error::NonPositiveDefinite)?;

    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let scale = 1.0 + vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let tol = DEGENERACY_TOL * scale;

    let mut branches = Vec::new();
    let mut start = 0;
    for end in 1..=6 {
        if end == 6 || vals[end] - vals[end - 1] > tol {
            let cols: Vec<_> = order[start..end].iter().map(|&i| vecs.column(i).into_owned()).collect();
            let right = Cols6::from_columns(&cols);
            let freq = vals[start..end].iter().sum::<f64>() / (end - start) as f64;
            branches.push(Branch::from_right(freq, right, &herm));
            start = end;
        }
    }
    Ok(ModeDecomposition { wavevector: *k, response: herm, branches })
}

/// Null space of `L₀`: `b⁽¹⁾ = (k̂/√ε̂, 0)` and
/// `b⁽²⁾ = (−ξ̂/√ε̂ k̂, √ε̂ k̂)/√(ε̂μ̂ − |ξ̂|²)`, with `ε̂ = k̂*εk̂` etc.,
/// which are `K₀`-orthonormal.
pub fn null_mode_basis(k0: &M6, k: &V3) -> Result<Cols6> {
    let kh = unit(k)?;
    let kc: Vector3<C64> = kh.map(c);
    let eps = k0.fixed_view::<3, 3>(0, 0);
    let mu = k0.fixed_view::<3, 3>(3, 3);
    let xi = k0.fixed_view::<3, 3>(0, 3);
    let e_hat = kc.dotc(&(eps * kc)).re;
    let m_hat = kc.dotc(&(mu * kc)).re;
    let x_hat = kc.dotc(&(xi * kc));
    let det = e_hat * m_hat - x_hat.norm_sqr();
    if !(e_hat > 0.0) || !(det > 0.0) {
        return Err(Error::DegenerateQ);
    }
    let se = e_hat.sqrt();
    let zero = Vector3::<C64>::zeros();
    let b1 = stack(&(kc * c(1.0 / se)), &zero);
    let nrm = 1.0 / det.sqrt();
    let b2 = stack(&(kc * (-x_hat * (nrm / se))), &(kc * c(se * nrm)));
    Ok(Cols6::from_columns(&[b1, b2]))
}

/// Closed-form branches of an isotropic medium, ordered
/// `[null, +c₀‖k‖, −c₀‖k‖]`, with
/// `b±ᵃ = (ê_a/√(2ε), ±k̂×ê_a/√(2μ))`.
pub fn isotropic_branches(eps: f64, mu: f64, k: &V3) -> Result<ModeDecomposition> {
    isotropic_with(OpticalResponse::isotropic(eps, mu)?.matrix(), eps, mu, k)
}

/// [`isotropic_branches`] for an already validated `response`.
pub(crate) fn isotropic_with(response: M6, eps: f64, mu: f64, k: &V3) -> Result<ModeDecomposition> {
    let kh = unit(k)?;
    let c0 = 1.0 / (eps * mu).sqrt();
    let w = c0 * k.norm();
    let (e1, e2) = transverse_frame(&kh);
    let se = 1.0 / (2.0 * eps).sqrt();
    let sm = 1.0 / (2.0 * mu).sqrt();
    let mode = |sign: f64| {
        let cols: Vec<_> =
            [e1, e2].iter().map(|e| stack(&(e * se).map(c), &(kh.cross(e) * (sign * sm)).map(c))).collect();
        Cols6::from_columns(&cols)
    };
    let null = null_mode_basis(&response, k)?;
    Ok(ModeDecomposition {
        wavevector: *k,
        response,
        branches: vec![
            Branch::from_right(0.0, null, &response),
            Branch::from_right(w, mode(1.0), &response),
            Branch::from_right(-w, mode(-1.0), &response),
        ],
    })
}

/// Closed-form branches of a chiral medium, ordered
/// `[null, ω₁, ω₂, ω₃, ω₄]` with `ω₁,₂ = ±c₀‖k‖/(1+κ)` and
/// `ω₃,₄ = ±c₀‖k‖/(1−κ)`, built on the circular vectors
/// `ê₁′ = (iê₁ − ê₂)/√2` and `ê₂′ = (iê₁ + ê₂)/√2`.
pub fn chiral_branches(eps: f64, mu: f64, kappa: f64, k: &V3) -> Result<ModeDecomposition> {
    chiral_with(OpticalResponse::chiral(eps, mu, kappa)?.matrix(), eps, mu, kappa, k)
}

pub(crate) fn chiral_with(response: M6, eps: f64, mu: f64, kappa: f64, k: &V3) -> Result<ModeDecomposition> {
    let kh = unit(k)?;
    let c0 = 1.0 / (eps * mu).sqrt();
    let w = c0 * k.norm();
    let (e1, e2) = transverse_frame(&kh);
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let e1p: Vector3<C64> = (e1.map(c) * I - e2.map(c)) * c(r2);
    let e2p: Vector3<C64> = (e1.map(c) * I + e2.map(c)) * c(r2);
    let khc = kh.map(c);
    let se = 1.0 / (2.0 * eps).sqrt();
    let sm = 1.0 / (2.0 * mu).sqrt();
    let mode = |e: &Vector3<C64>, sign: f64, norm: f64| {
        let h = khc.cross(e) * c(sign * sm);
        Cols6::from_columns(&[stack(&(e * c(se)), &h) * c(norm)])
    };
    let p = 1.0 / (1.0 + kappa).sqrt();
    let m = 1.0 / (1.0 - kappa).sqrt();
    let null = null_mode_basis(&response, k)?;
    Ok(ModeDecomposition {
        wavevector: *k,
        response,
        branches: vec![
            Branch::from_right(0.0, null, &response),
            Branch::from_right(w / (1.0 + kappa), mode(&e1p, 1.0, p), &response),
            Branch::from_right(-w / (1.0 + kappa), mode(&e2p, -1.0, p), &response),
            Branch::from_right(w / (1.0 - kappa), mode(&e2p, 1.0, m), &response),
            Branch::from_right(-w / (1.0 - kappa), mode(&e1p, -1.0, m), &response),
        ],
    })
}
