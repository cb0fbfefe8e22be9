//! Small dense helpers shared by the physics modules.

use nalgebra::{Complex, DMatrix, Dyn, Matrix3, Matrix6, OMatrix, SymmetricEigen, Vector3, U6};

use crate::{Error, Result};

pub type C64 = Complex<f64>;
pub type V3 = Vector3<f64>;
pub type M6 = Matrix6<C64>;
pub type CMat = DMatrix<C64>;
/// 6×A block of column vectors (eigenvectors of one branch).
pub type Cols6 = OMatrix<C64, U6, Dyn>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Matrix of `a ↦ k × a`.
pub fn cross_matrix(k: &V3) -> Matrix3<f64> {
    Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0)
}

pub fn unit(k: &V3) -> Result<V3> {
    let n = k.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::ZeroWaveVector);
    }
    Ok(k / n)
}

/// Right-handed orthonormal frame `(ê₁, ê₂)` transverse to `k̂`.
///
/// `ê₁ = normalize(e_z × k̂)` away from the poles; near them `e_x` with its
/// `k̂` component removed (exactly `e_x` on the axis); `ê₂ = k̂ × ê₁`.
pub fn transverse_frame(khat: &V3) -> (V3, V3) {
    let ez = V3::z();
    let t = ez.cross(khat);
    let e1 = if t.norm() > 1e-6 { t.normalize() } else { (V3::x() - khat * khat.x).normalize() };
    let e2 = khat.cross(&e1);
    (e1, e2)
}

pub fn to_complex(v: &V3) -> Vector3<C64> {
    v.map(c)
}

/// 6×6 block matrix `[[a, b], [c, d]]`.
pub fn block6(a: &Matrix3<C64>, b: &Matrix3<C64>, cc: &Matrix3<C64>, d: &Matrix3<C64>) -> M6 {
    let mut m = M6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(a);
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(b);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(cc);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(d);
    m
}

/// Stack an electric and a magnetic 3-vector into a 6-vector column.
pub fn stack(e: &Vector3<C64>, h: &Vector3<C64>) -> nalgebra::Vector6<C64> {
    nalgebra::Vector6::new(e.x, e.y, e.z, h.x, h.y, h.z)
}

/// Lower Cholesky factor of a Hermitian matrix, `None` unless it is
/// positive definite.
pub fn cholesky_lower(m: &M6) -> Option<M6> {
    let l = m.cholesky()?.unpack();
    let ok = (0..6).all(|i| {
        let d = l[(i, i)];
        d.re > 0.0 && d.re.is_finite() && d.im.abs() <= 1e-12 * d.re
    });
    ok.then_some(l)
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5)
}

pub fn anti_hermitian_part(m: &CMat) -> CMat {
    (m - m.adjoint()) * c(0.5)
}

/// Unitary polar factor `U` of `m = U H`.
pub fn polar_unitary(m: &CMat) -> CMat {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd requested u");
    let vt = svd.v_t.expect("svd requested v_t");
    u * vt
}

/// Eigenvalues of the Hermitian part of `w`, ascending.
pub fn hermitian_eigenvalues(w: &CMat) -> Vec<f64> {
    let eig = SymmetricEigen::new(hermitian_part(w));
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_eigenvalue(w: &CMat) -> f64 {
    hermitian_eigenvalues(w).first().copied().unwrap_or(0.0)
}

/// Nearest Hermitian positive semi-definite matrix (eigenvalue clipping).
pub fn project_psd(w: &CMat) -> CMat {
    let eig = SymmetricEigen::new(hermitian_part(w));
    let clipped = eig.eigenvalues.map(|l| c(l.max(0.0)));
    &eig.eigenvectors * CMat::from_diagonal(&clipped) * eig.eigenvectors.adjoint()
}

/// Hermitize `w` and clip negative eigenvalues if round-off pushed them
/// below `-tol * tr w`.
pub fn keep_psd(w: &CMat, tol: f64) -> CMat {
    let h = hermitian_part(w);
    let tr = h.trace().re.abs();
    if min_eigenvalue(&h) < -tol * tr.max(f64::MIN_POSITIVE) {
        project_psd(&h)
    } else {
        h
    }
}

/// Operator 2-norm of a small complex matrix.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

pub fn m6_op_norm(m: &M6) -> f64 {
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_is_right_handed() {
        for k in [V3::new(0.3, -1.0, 2.0), V3::z(), -V3::z(), V3::new(1e-9, 0.0, 1.0)] {
            let kh = k.normalize();
            let (e1, e2) = transverse_frame(&kh);
            assert!((e1.norm() - 1.0).abs() < 1e-14);
            assert!(e1.dot(&kh).abs() < 1e-14);
            assert!((kh.cross(&e1) - e2).norm() < 1e-14);
            assert!((e1.cross(&e2) - kh).norm() < 1e-14);
        }
    }

    #[test]
    fn frame_pole_fallback_is_ex() {
        let (e1, e2) = transverse_frame(&V3::z());
        assert_eq!(e1, V3::x());
        assert_eq!(e2, V3::y());
    }

    #[test]
    fn cross_matrix_matches_cross() {
        let k = V3::new(0.2, 1.5, -0.7);
        let a = V3::new(-1.0, 0.4, 2.0);
        assert!((cross_matrix(&k) * a - k.cross(&a)).norm() < 1e-15);
    }

    #[test]
    fn polar_factor_is_unitary() {
        let m = CMat::from_fn(3, 3, |i, j| C64::new((i + 2 * j) as f64 * 0.3 - 0.5, (i as f64 - j as f64) * 0.2));
        let u = polar_unitary(&m);
        let err = frobenius(&(u.adjoint() * &u - CMat::identity(3, 3)));
        assert!(err < 1e-12);
        let h = u.adjoint() * &m;
        assert!(frobenius(&(&h - h.adjoint())) < 1e-12);
    }

    #[test]
    fn psd_projection_clips() {
        let w = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(-0.25)]));
        let p = project_psd(&w);
        assert!((p[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!(p[(1, 1)].re.abs() < 1e-15);
    }
}
