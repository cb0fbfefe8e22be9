//! Gauss–Legendre and sphere quadrature rules.

use std::f64::consts::PI;

use crate::linalg::{transverse_frame, V3};

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre order must be positive");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let (pn, pn1) = if n == 1 { (z, 1.0) } else { (p1, p0) };
    let d = n as f64 * (z * pn - pn1) / (z * z - 1.0);
    (pn, d)
}

/// ∫ₐᵇ f by an n-point Gauss–Legendre rule.
pub fn integrate<F: FnMut(f64) -> f64>(a: f64, b: f64, n: usize, mut f: F) -> f64 {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let m = 0.5 * (b + a);
    x.iter().zip(&w).map(|(xi, wi)| wi * f(m + h * xi)).sum::<f64>() * h
}

/// Product rule on the unit sphere: Gauss–Legendre in cos θ times the
/// trapezoid rule in φ. Weights sum to 4π.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub n_theta: usize,
    pub n_phi: usize,
    cos_theta: Vec<f64>,
    weights_theta: Vec<f64>,
}

impl SphereRule {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let (cos_theta, weights_theta) = gauss_legendre(n_theta);
        Self { n_theta, n_phi: n_phi.max(1), cos_theta, weights_theta }
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nodes `(p̂, weight)` with the polar axis along `axis`.
    pub fn nodes_around(&self, axis: &V3) -> Vec<(V3, f64)> {
        let a = axis.normalize();
        let (e1, e2) = transverse_frame(&a);
        let dphi = 2.0 * PI / self.n_phi as f64;
        let mut out = Vec::with_capacity(self.len());
        for (ct, wt) in self.cos_theta.iter().zip(&self.weights_theta) {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for j in 0..self.n_phi {
                let phi = j as f64 * dphi;
                let p = e1 * (st * phi.cos()) + e2 * (st * phi.sin()) + a * *ct;
                out.push((p, wt * dphi));
            }
        }
        out
    }
}

/// Lebedev rules of algebraic degree 3, 5, 7 and 11 (6, 14, 26 and 50
/// points). Weights are normalized to sum to 1.
pub fn lebedev(points: usize) -> Option<Vec<(V3, f64)>> {
    let mut out = Vec::with_capacity(points);
    match points {
        6 => a1(&mut out, 1.0 / 6.0),
        14 => {
            a1(&mut out, 1.0 / 15.0);
            a3(&mut out, 3.0 / 40.0);
        }
        26 => {
            a1(&mut out, 1.0 / 21.0);
            a2(&mut out, 4.0 / 105.0);
            a3(&mut out, 9.0 / 280.0);
        }
        50 => {
            a1(&mut out, 4.0 / 315.0);
            a2(&mut out, 64.0 / 2835.0);
            a3(&mut out, 27.0 / 1280.0);
            let l = 1.0 / 11f64.sqrt();
            let m = 3.0 / 11f64.sqrt();
            bk(&mut out, l, m, 14641.0 / 725760.0);
        }
        _ => return None,
    }
    Some(out)
}

fn a1(out: &mut Vec<(V3, f64)>, w: f64) {
    for i in 0..3 {
        for s in [1.0, -1.0] {
            let mut v = V3::zeros();
            v[i] = s;
            out.push((v, w));
        }
    }
}

fn a2(out: &mut Vec<(V3, f64)>, w: f64) {
    let a = 0.5f64.sqrt();
    for zero in 0..3 {
        for s1 in [1.0, -1.0] {
            for s2 in [1.0, -1.0] {
                let mut v = V3::repeat(0.0);
                let (i, j) = ((zero + 1) % 3, (zero + 2) % 3);
                v[i] = s1 * a;
                v[j] = s2 * a;
                out.push((v, w));
            }
        }
    }
}

fn a3(out: &mut Vec<(V3, f64)>, w: f64) {
    let a = 1.0 / 3f64.sqrt();
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                out.push((V3::new(sx * a, sy * a, sz * a), w));
            }
        }
    }
}

fn bk(out: &mut Vec<(V3, f64)>, l: f64, m: f64, w: f64) {
    for odd in 0..3 {
        for sx in [1.0, -1.0] {
            for sy in [1.0, -1.0] {
                for sz in [1.0, -1.0] {
                    let mut v = V3::new(l, l, l);
                    v[odd] = m;
                    out.push((V3::new(sx * v.x, sy * v.y, sz * v.z), w));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_monomial_mean(a: u32, b: u32, cc: u32) -> f64 {
        if a % 2 == 1 || b % 2 == 1 || cc % 2 == 1 {
            return 0.0;
        }
        // ⟨x^a y^b z^c⟩ over S² = (a-1)!!(b-1)!!(c-1)!! / (a+b+c+1)!!
        let df = |n: i64| -> f64 {
            let mut r = 1.0;
            let mut k = n;
            while k > 1 {
                r *= k as f64;
                k -= 2;
            }
            r
        };
        df(a as i64 - 1) * df(b as i64 - 1) * df(cc as i64 - 1) / df((a + b + cc) as i64 + 1)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        for p in 0..16 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((s - exact).abs() < 1e-14, "degree {p}");
        }
        let (_, w64) = gauss_legendre(64);
        assert!((w64.iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn odd_and_tiny_orders() {
        let (x, w) = gauss_legendre(1);
        assert_eq!(x, vec![0.0]);
        assert!((w[0] - 2.0).abs() < 1e-15);
        let (x, _) = gauss_legendre(5);
        assert!(x[2].abs() < 1e-15);
    }

    #[test]
    fn lebedev_degrees() {
        for (n, degree) in [(6, 3), (14, 5), (26, 7), (50, 11)] {
            let rule = lebedev(n).unwrap();
            assert_eq!(rule.len(), n);
            for a in 0..=degree {
                for b in 0..=(degree - a) {
                    for cc in 0..=(degree - a - b) {
                        let s: f64 = rule
                            .iter()
                            .map(|(v, w)| w * v.x.powi(a as i32) * v.y.powi(b as i32) * v.z.powi(cc as i32))
                            .sum();
                        let exact = sphere_monomial_mean(a, b, cc);
                        assert!((s - exact).abs() < 1e-14, "rule {n}: x^{a} y^{b} z^{cc}: {s} vs {exact}");
                    }
                }
            }
            for (v, _) in &rule {
                assert!((v.norm() - 1.0).abs() < 1e-15);
            }
        }
        assert!(lebedev(7).is_none());
    }

    #[test]
    fn product_rule_area_and_axis() {
        let rule = SphereRule::new(16, 32);
        let nodes = rule.nodes_around(&V3::new(1.0, 2.0, -0.5));
        let area: f64 = nodes.iter().map(|n| n.1).sum();
        assert!((area - 4.0 * PI).abs() < 1e-12);
        let mean: V3 = nodes.iter().map(|(p, w)| p * *w).sum();
        assert!(mean.norm() < 1e-12);
    }
}
