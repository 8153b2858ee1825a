//! Quadrature on the reference interval, triangle and tetrahedron.
//!
//! Rules are conical (Stroud) products of Gauss-Jacobi rules, so that a rule of
//! order `d` integrates every polynomial of total degree `<= d` exactly.

use std::sync::{Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::FeError;

/// Highest supported exactness order.
pub const MAX_QUADRATURE_ORDER: usize = 40;

/// Gauss-Jacobi nodes and weights on `[-1, 1]` for the weight `(1 - t)^alpha`.
fn gauss_jacobi(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let beta = 0.0;
    let ab = alpha + beta;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let k = i as f64;
        let denom = (2.0 * k + ab) * (2.0 * k + ab + 2.0);
        jac[(i, i)] = if i == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / denom
        };
        if i + 1 < n {
            let k = k + 1.0;
            let s = 2.0 * k + ab;
            let num = 4.0 * k * (k + alpha) * (k + beta) * (k + ab);
            let den = s * s * (s + 1.0) * (s - 1.0);
            let b = (num / den).sqrt();
            jac[(i, i + 1)] = b;
            jac[(i + 1, i)] = b;
        }
    }
    let eig = SymmetricEigen::new(jac);
    // integral of (1-t)^alpha over [-1, 1]
    let mu0 = 2f64.powf(alpha + 1.0) / (alpha + 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gauss-Legendre rule on `[0, 1]` with `n` points.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_jacobi(n, 0.0);
    (
        t.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|w| 0.5 * w).collect(),
    )
}

/// A quadrature rule on a reference simplex.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[f64; 3]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(x))
            .sum()
    }
}

fn points_for(order: usize) -> usize {
    order / 2 + 1
}

fn tet_rule_uncached(order: usize) -> QuadratureRule {
    let n = points_for(order);
    let (ta, wa) = gauss_jacobi(n, 2.0);
    let (tb, wb) = gauss_jacobi(n, 1.0);
    let (tc, wc) = gauss_jacobi(n, 0.0);
    let mut points = Vec::with_capacity(n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for (ta, wa) in ta.iter().zip(&wa) {
        let a = 0.5 * (1.0 + ta);
        for (tb, wb) in tb.iter().zip(&wb) {
            let b = 0.5 * (1.0 + tb);
            for (tc, wc) in tc.iter().zip(&wc) {
                let c = 0.5 * (1.0 + tc);
                points.push([a, b * (1.0 - a), c * (1.0 - a) * (1.0 - b)]);
                weights.push(wa / 8.0 * wb / 4.0 * wc / 2.0);
            }
        }
    }
    QuadratureRule {
        points,
        weights,
        order,
    }
}

fn tri_rule_uncached(order: usize) -> QuadratureRule {
    let n = points_for(order);
    let (ta, wa) = gauss_jacobi(n, 1.0);
    let (tb, wb) = gauss_jacobi(n, 0.0);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (ta, wa) in ta.iter().zip(&wa) {
        let a = 0.5 * (1.0 + ta);
        for (tb, wb) in tb.iter().zip(&wb) {
            let b = 0.5 * (1.0 + tb);
            points.push([a, b * (1.0 - a), 0.0]);
            weights.push(wa / 4.0 * wb / 2.0);
        }
    }
    QuadratureRule {
        points,
        weights,
        order,
    }
}

fn line_rule_uncached(order: usize) -> QuadratureRule {
    let (t, w) = gauss_legendre_unit(points_for(order));
    QuadratureRule {
        points: t.iter().map(|&t| [t, 0.0, 0.0]).collect(),
        weights: w,
        order,
    }
}

type Cache = Mutex<Vec<Option<&'static QuadratureRule>>>;

fn cached(cache: &'static OnceLock<Cache>, order: usize, build: fn(usize) -> QuadratureRule) -> &'static QuadratureRule {
    let cache = cache.get_or_init(|| Mutex::new(vec![None; MAX_QUADRATURE_ORDER + 1]));
    let mut slots = cache.lock().unwrap();
    *slots[order].get_or_insert_with(|| Box::leak(Box::new(build(order))))
}

/// Rule on the reference tetrahedron `{x >= 0, x1 + x2 + x3 <= 1}` exact to total degree `order`.
/// The weights sum to `1/6`.
pub fn tet_rule(order: usize) -> Result<&'static QuadratureRule, FeError> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    if order > MAX_QUADRATURE_ORDER {
        return Err(FeError::UnsupportedOrder(order));
    }
    Ok(cached(&CACHE, order, tet_rule_uncached))
}

/// Rule on the reference triangle `{(s, t) >= 0, s + t <= 1}` (third coordinate zero).
pub fn triangle_rule(order: usize) -> Result<&'static QuadratureRule, FeError> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    if order > MAX_QUADRATURE_ORDER {
        return Err(FeError::UnsupportedOrder(order));
    }
    Ok(cached(&CACHE, order, tri_rule_uncached))
}

/// Gauss-Legendre rule on `[0, 1]` (first coordinate).
pub fn line_rule(order: usize) -> Result<&'static QuadratureRule, FeError> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    if order > MAX_QUADRATURE_ORDER {
        return Err(FeError::UnsupportedOrder(order));
    }
    Ok(cached(&CACHE, order, line_rule_uncached))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Exact integral of x^a y^b z^c over the reference tetrahedron.
    fn tet_monomial(a: u32, b: u32, c: u32) -> f64 {
        factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3)
    }

    #[test]
    fn volume_and_linear_moment() {
        let q = tet_rule(1).unwrap();
        assert!((q.integrate(|_| 1.0) - 1.0 / 6.0).abs() < 1e-15);
        assert!((q.integrate(|x| x[0]) - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn cubic_monomial() {
        let q = tet_rule(3).unwrap();
        let v = q.integrate(|x| x[0] * x[0] * x[1]);
        assert!((v - 1.0 / 360.0).abs() < 1e-15);
        assert!((tet_monomial(2, 1, 0) - 1.0 / 360.0).abs() < 1e-16);
    }

    #[test]
    fn exact_up_to_order_for_all_monomials() {
        for order in [0, 1, 2, 5, 8, 14, 20] {
            let q = tet_rule(order).unwrap();
            for a in 0..=order as u32 {
                for b in 0..=(order as u32 - a) {
                    for c in 0..=(order as u32 - a - b) {
                        let v = q.integrate(|x| x[0].powi(a as i32) * x[1].powi(b as i32) * x[2].powi(c as i32));
                        let exact = tet_monomial(a, b, c);
                        assert!(
                            (v - exact).abs() <= 1e-13 * exact.max(1e-3),
                            "order {order} monomial ({a},{b},{c}): {v} vs {exact}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn triangle_and_line() {
        let t = triangle_rule(6).unwrap();
        // integral of s^2 t^3 over the reference triangle is 2! 3! / 7!
        let v = t.integrate(|x| x[0].powi(2) * x[1].powi(3));
        assert!((v - 2.0 * 6.0 / 5040.0).abs() < 1e-15);
        let l = line_rule(9).unwrap();
        assert!((l.integrate(|x| x[0].powi(9)) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn order_cap() {
        assert!(matches!(tet_rule(MAX_QUADRATURE_ORDER + 1), Err(FeError::UnsupportedOrder(_))));
    }
}
