//! Reference elements on the unit tetrahedron.
//!
//! Every family is described by a redundant spanning set built from Legendre
//! products, reduced to a basis with an SVD of its (quadrature-weighted) values,
//! and made dual to a set of moment functionals. Moments on edges and faces are
//! taken in the parametrisation induced by the *sorted* vertex order of the
//! entity, so mapped basis functions of neighbouring cells agree on shared
//! entities without any sign or permutation fix-ups, provided every cell is
//! mapped from its vertices in ascending global order.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use nalgebra::{DMatrix, SVD};

use super::poly::{dim_p2, dim_p3, legendre_1d, legendre_products_2d, LegendreProducts};
use super::quadrature::{line_rule, tet_rule, triangle_rule};
use crate::error::FeError;

/// Highest polynomial degree any family is built for.
pub const MAX_DEGREE: usize = 8;

pub const REF_VERTICES: [[f64; 3]; 4] = [
    [0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
];

/// Local edges as pairs of local (sorted) vertex indices.
pub const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Local faces; face `i` is opposite vertex `i`.
pub const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Lagrange,
    Nedelec,
    RaviartThomas,
    DiscontinuousP,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Lagrange => "Lagrange",
            Family::Nedelec => "Nedelec",
            Family::RaviartThomas => "Raviart-Thomas",
            Family::DiscontinuousP => "discontinuous P",
        }
    }

    pub fn is_vector(self) -> bool {
        matches!(self, Family::Nedelec | Family::RaviartThomas)
    }

    /// Dimension of the local space of the given degree.
    pub fn local_dim(self, degree: usize) -> usize {
        let q = degree;
        match self {
            Family::Lagrange | Family::DiscontinuousP => dim_p3(q),
            Family::Nedelec => (q + 1) * (q + 3) * (q + 4) / 2,
            Family::RaviartThomas => (q + 1) * (q + 2) * (q + 4) / 2,
        }
    }

    /// Dofs per vertex, edge, face and cell interior.
    pub fn entity_dofs(self, degree: usize) -> [usize; 4] {
        let q = degree;
        match self {
            Family::Lagrange => [
                1,
                q.saturating_sub(1),
                if q >= 2 { (q - 2) * (q - 1) / 2 } else { 0 },
                if q >= 3 { (q - 3) * (q - 2) * (q - 1) / 6 } else { 0 },
            ],
            Family::Nedelec => [0, q + 1, q * (q + 1), if q >= 1 { (q - 1) * q * (q + 1) / 2 } else { 0 }],
            Family::RaviartThomas => [0, 0, dim_p2(q), q * (q + 1) * (q + 2) / 2],
            Family::DiscontinuousP => [0, 0, 0, dim_p3(q)],
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A member of the spanning set, with `y = x - centroid`.
#[derive(Debug, Clone, Copy)]
enum SpanFn {
    /// `L_m`
    Scalar(usize),
    /// `L_m e_c`
    Component(usize, usize),
    /// `L_m y`
    Radial(usize),
    /// `L_m (y x e_c)`
    Cross(usize, usize),
}

const CENTROID: [f64; 3] = [0.25, 0.25, 0.25];

/// A linear functional `u -> sum_p w_p . u(x_p)` on the reference cell.
#[derive(Debug, Clone, Default)]
pub struct Moment {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<[f64; 3]>,
}

impl Moment {
    pub fn apply(&self, f: impl Fn(&[f64; 3]) -> [f64; 3]) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| {
                let v = f(x);
                w[0] * v[0] + w[1] * v[1] + w[2] * v[2]
            })
            .sum()
    }
}

/// Basis values and derivatives at a set of reference points.
///
/// `derivs` holds gradients for scalar families, curls for Nedelec and
/// divergences (first slot) for Raviart-Thomas.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub nbasis: usize,
    pub npoints: usize,
    pub values: Vec<[f64; 3]>,
    pub derivs: Vec<[f64; 3]>,
}

impl Tabulation {
    #[inline]
    pub fn value(&self, point: usize, basis: usize) -> [f64; 3] {
        self.values[point * self.nbasis + basis]
    }

    #[inline]
    pub fn deriv(&self, point: usize, basis: usize) -> [f64; 3] {
        self.derivs[point * self.nbasis + basis]
    }
}

#[derive(Debug)]
pub struct ReferenceElement {
    pub family: Family,
    pub degree: usize,
    pub dim: usize,
    /// Dofs per vertex, edge, face, interior.
    pub entity_dofs: [usize; 4],
    scalars: LegendreProducts,
    span: Vec<SpanFn>,
    /// `basis_k = sum_j coeffs[(j, k)] span_j`.
    coeffs: DMatrix<f64>,
    /// Dof functionals in local dof order (empty for the discontinuous family).
    pub dofs: Vec<Moment>,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn unit(c: usize) -> [f64; 3] {
    let mut e = [0.0; 3];
    e[c] = 1.0;
    e
}

fn edge_point(edge: [usize; 2], s: f64) -> [f64; 3] {
    let a = REF_VERTICES[edge[0]];
    let t = sub(REF_VERTICES[edge[1]], a);
    [a[0] + s * t[0], a[1] + s * t[1], a[2] + s * t[2]]
}

fn face_frame(face: [usize; 3]) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let a = REF_VERTICES[face[0]];
    (a, sub(REF_VERTICES[face[1]], a), sub(REF_VERTICES[face[2]], a))
}

fn face_point(face: [usize; 3], s: f64, t: f64) -> [f64; 3] {
    let (a, t1, t2) = face_frame(face);
    [
        a[0] + s * t1[0] + t * t2[0],
        a[1] + s * t1[1] + t * t2[1],
        a[2] + s * t1[2] + t * t2[2],
    ]
}

/// Moments `int_e (u . dir) L_k(s) ds`, `k <= degree`, in the sorted edge parametrisation.
/// For scalar families `dir` is `[1, 0, 0]`.
fn edge_moments(edge: [usize; 2], degree: usize, tangential: bool) -> Vec<Moment> {
    let rule = line_rule(2 * degree + 2).unwrap();
    let dir = if tangential {
        sub(REF_VERTICES[edge[1]], REF_VERTICES[edge[0]])
    } else {
        [1.0, 0.0, 0.0]
    };
    (0..=degree)
        .map(|k| {
            let mut m = Moment::default();
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                let l = legendre_1d(degree, x[0])[k];
                m.points.push(edge_point(edge, x[0]));
                m.weights.push(scale(dir, w * l));
            }
            m
        })
        .collect()
}

/// Moments against `P_degree` on a face, weighted by each of `dirs`.
fn face_moments(face: [usize; 3], degree: usize, dirs: &[[f64; 3]]) -> Vec<Moment> {
    let rule = triangle_rule(2 * degree + 2).unwrap();
    let n = dim_p2(degree);
    let mut out = Vec::with_capacity(n * dirs.len());
    for m_idx in 0..n {
        for dir in dirs {
            let mut m = Moment::default();
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                let l = legendre_products_2d(degree, x[0], x[1])[m_idx];
                m.points.push(face_point(face, x[0], x[1]));
                m.weights.push(scale(*dir, w * l));
            }
            out.push(m);
        }
    }
    out
}

/// Moments against `P_degree` on the cell, weighted by each of `dirs`.
fn interior_moments(degree: usize, dirs: &[[f64; 3]]) -> Vec<Moment> {
    let rule = tet_rule(2 * degree + 2).unwrap();
    let basis = LegendreProducts::new(degree);
    let tab: Vec<Vec<f64>> = rule.points.iter().map(|x| basis.values(x)).collect();
    let mut out = Vec::new();
    for m_idx in 0..basis.len() {
        for dir in dirs {
            let mut m = Moment::default();
            for ((x, w), l) in rule.points.iter().zip(&rule.weights).zip(&tab) {
                m.points.push(*x);
                m.weights.push(scale(*dir, w * l[m_idx]));
            }
            out.push(m);
        }
    }
    out
}

fn build_dofs(family: Family, q: usize) -> Vec<Moment> {
    let scalar = [[1.0, 0.0, 0.0]];
    let xyz = [unit(0), unit(1), unit(2)];
    let mut dofs = Vec::new();
    match family {
        Family::Lagrange => {
            for v in REF_VERTICES {
                dofs.push(Moment {
                    points: vec![v],
                    weights: vec![[1.0, 0.0, 0.0]],
                });
            }
            if q >= 2 {
                for e in LOCAL_EDGES {
                    dofs.extend(edge_moments(e, q - 2, false));
                }
            }
            if q >= 3 {
                for f in LOCAL_FACES {
                    dofs.extend(face_moments(f, q - 3, &scalar));
                }
            }
            if q >= 4 {
                dofs.extend(interior_moments(q - 4, &scalar));
            }
        }
        Family::Nedelec => {
            for e in LOCAL_EDGES {
                dofs.extend(edge_moments(e, q, true));
            }
            if q >= 1 {
                for f in LOCAL_FACES {
                    let (_, t1, t2) = face_frame(f);
                    dofs.extend(face_moments(f, q - 1, &[t1, t2]));
                }
            }
            if q >= 2 {
                dofs.extend(interior_moments(q - 2, &xyz));
            }
        }
        Family::RaviartThomas => {
            for f in LOCAL_FACES {
                let (_, t1, t2) = face_frame(f);
                dofs.extend(face_moments(f, q, &[cross(t1, t2)]));
            }
            if q >= 1 {
                dofs.extend(interior_moments(q - 1, &xyz));
            }
        }
        Family::DiscontinuousP => {}
    }
    dofs
}

fn build_span(family: Family, q: usize) -> (LegendreProducts, Vec<SpanFn>) {
    let scalars = LegendreProducts::new(q);
    let n = scalars.len();
    let mut span = Vec::new();
    match family {
        Family::Lagrange | Family::DiscontinuousP => span.extend((0..n).map(SpanFn::Scalar)),
        Family::RaviartThomas => {
            for c in 0..3 {
                span.extend((0..n).map(|m| SpanFn::Component(c, m)));
            }
            span.extend((0..n).map(SpanFn::Radial));
        }
        Family::Nedelec => {
            for c in 0..3 {
                span.extend((0..n).map(|m| SpanFn::Component(c, m)));
            }
            for c in 0..3 {
                span.extend((0..n).map(|m| SpanFn::Cross(c, m)));
            }
        }
    }
    (scalars, span)
}

/// Values and derivatives of the spanning set at one point.
fn eval_span(
    family: Family,
    scalars: &LegendreProducts,
    span: &[SpanFn],
    x: &[f64; 3],
    vals: &mut [[f64; 3]],
    ders: &mut [[f64; 3]],
) {
    let n = scalars.len();
    let mut l = vec![0.0; n];
    let mut g = vec![[0.0; 3]; n];
    scalars.eval(x, &mut l, &mut g);
    let y = sub(*x, CENTROID);
    for (k, s) in span.iter().enumerate() {
        let (v, d) = match *s {
            SpanFn::Scalar(m) => ([l[m], 0.0, 0.0], g[m]),
            SpanFn::Component(c, m) => {
                let v = scale(unit(c), l[m]);
                let d = match family {
                    Family::Nedelec => cross(g[m], unit(c)),
                    _ => [g[m][c], 0.0, 0.0],
                };
                (v, d)
            }
            SpanFn::Radial(m) => {
                let div = 3.0 * l[m] + g[m][0] * y[0] + g[m][1] * y[1] + g[m][2] * y[2];
                (scale(y, l[m]), [div, 0.0, 0.0])
            }
            SpanFn::Cross(c, m) => {
                let w = cross(y, unit(c));
                let gw = cross(g[m], w);
                (scale(w, l[m]), [gw[0] - 2.0 * l[m] * (c == 0) as u8 as f64,
                                  gw[1] - 2.0 * l[m] * (c == 1) as u8 as f64,
                                  gw[2] - 2.0 * l[m] * (c == 2) as u8 as f64])
            }
        };
        vals[k] = v;
        ders[k] = d;
    }
}

impl ReferenceElement {
    fn build(family: Family, degree: usize) -> Result<Self, FeError> {
        if degree > MAX_DEGREE || (family == Family::Lagrange && degree == 0) {
            return Err(FeError::UnsupportedDegree {
                family: family.name(),
                degree,
            });
        }
        let dim = family.local_dim(degree);
        let span_degree = if family.is_vector() { degree + 1 } else { degree };
        let (scalars, span) = build_span(family, degree);
        let ncomp = if family.is_vector() { 3 } else { 1 };

        // weighted value matrix of the spanning set
        let rule = tet_rule(2 * span_degree)?;
        let mut vmat = DMatrix::<f64>::zeros(ncomp * rule.len(), span.len());
        let mut vals = vec![[0.0; 3]; span.len()];
        let mut ders = vec![[0.0; 3]; span.len()];
        for (p, (x, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            eval_span(family, &scalars, &span, x, &mut vals, &mut ders);
            let sw = w.sqrt();
            for (j, v) in vals.iter().enumerate() {
                for c in 0..ncomp {
                    vmat[(ncomp * p + c, j)] = sw * v[c];
                }
            }
        }
        let svd = SVD::new(vmat, false, true);
        let v_t = svd.v_t.expect("requested V^T");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let smax = svd.singular_values[order[0]];
        let s_last = svd.singular_values[order[dim - 1]];
        let s_next = order.get(dim).map_or(0.0, |&i| svd.singular_values[i]);
        debug_assert!(s_last > 1e-9 * smax && s_next < 1e-8 * smax, "rank gap {s_last:e} {s_next:e}");

        // orthonormal basis of the space, as combinations of span members
        let mut ortho = DMatrix::<f64>::zeros(span.len(), dim);
        for (k, &i) in order.iter().take(dim).enumerate() {
            let s = svd.singular_values[i];
            for j in 0..span.len() {
                ortho[(j, k)] = v_t[(i, j)] / s;
            }
        }

        let dofs = build_dofs(family, degree);
        let coeffs = if family == Family::DiscontinuousP {
            ortho
        } else {
            assert_eq!(dofs.len(), dim, "{family} degree {degree}: dof count");
            let mut dual = DMatrix::<f64>::zeros(dim, dim);
            for (i, dof) in dofs.iter().enumerate() {
                for (x, w) in dof.points.iter().zip(&dof.weights) {
                    eval_span(family, &scalars, &span, x, &mut vals, &mut ders);
                    for k in 0..dim {
                        let mut v = [0.0; 3];
                        for (j, sv) in vals.iter().enumerate() {
                            let c = ortho[(j, k)];
                            v[0] += c * sv[0];
                            v[1] += c * sv[1];
                            v[2] += c * sv[2];
                        }
                        dual[(i, k)] += w[0] * v[0] + w[1] * v[1] + w[2] * v[2];
                    }
                }
            }
            let inv = dual.lu().try_inverse().ok_or(FeError::UnsupportedDegree {
                family: family.name(),
                degree,
            })?;
            ortho * inv
        };

        Ok(Self {
            family,
            degree,
            dim,
            entity_dofs: family.entity_dofs(degree),
            scalars,
            span,
            coeffs,
            dofs,
        })
    }

    /// Local dof offsets of the vertex, edge, face and interior blocks.
    pub fn block_offsets(&self) -> [usize; 4] {
        let [nv, ne, nf, _] = self.entity_dofs;
        [0, 4 * nv, 4 * nv + 6 * ne, 4 * nv + 6 * ne + 4 * nf]
    }

    pub fn tabulate(&self, points: &[[f64; 3]]) -> Tabulation {
        let ns = self.span.len();
        let mut sv = vec![[0.0; 3]; ns];
        let mut sd = vec![[0.0; 3]; ns];
        let mut values = vec![[0.0; 3]; points.len() * self.dim];
        let mut derivs = vec![[0.0; 3]; points.len() * self.dim];
        for (p, x) in points.iter().enumerate() {
            eval_span(self.family, &self.scalars, &self.span, x, &mut sv, &mut sd);
            for k in 0..self.dim {
                let mut v = [0.0; 3];
                let mut d = [0.0; 3];
                for j in 0..ns {
                    let c = self.coeffs[(j, k)];
                    if c == 0.0 {
                        continue;
                    }
                    for i in 0..3 {
                        v[i] += c * sv[j][i];
                        d[i] += c * sd[j][i];
                    }
                }
                values[p * self.dim + k] = v;
                derivs[p * self.dim + k] = d;
            }
        }
        Tabulation {
            nbasis: self.dim,
            npoints: points.len(),
            values,
            derivs,
        }
    }

    /// Applies every dof functional to a reference-cell function.
    pub fn interpolate(&self, f: impl Fn(&[f64; 3]) -> [f64; 3]) -> Vec<f64> {
        self.dofs.iter().map(|m| m.apply(&f)).collect()
    }
}

/// Shared, lazily built reference element.
pub fn reference_element(family: Family, degree: usize) -> Result<&'static ReferenceElement, FeError> {
    type Cache = Mutex<HashMap<(Family, usize), &'static ReferenceElement>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(e) = cache.lock().unwrap().get(&(family, degree)) {
        return Ok(e);
    }
    // built outside the lock; a racing duplicate is simply dropped
    let built: &'static ReferenceElement = Box::leak(Box::new(ReferenceElement::build(family, degree)?));
    Ok(*cache.lock().unwrap().entry((family, degree)).or_insert(built))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    #[test]
    fn dimensions() {
        assert_eq!(reference_element(Family::Nedelec, 0).unwrap().dim, 6);
        assert_eq!(reference_element(Family::Nedelec, 2).unwrap().dim, 45);
        assert_eq!(reference_element(Family::RaviartThomas, 0).unwrap().dim, 4);
        assert_eq!(reference_element(Family::Lagrange, 3).unwrap().dim, 20);
        assert_eq!(reference_element(Family::DiscontinuousP, 2).unwrap().dim, 10);
        for fam in [Family::Lagrange, Family::Nedelec, Family::RaviartThomas] {
            for q in 0..=4 {
                if fam == Family::Lagrange && q == 0 {
                    continue;
                }
                let [v, e, f, i] = fam.entity_dofs(q);
                assert_eq!(4 * v + 6 * e + 4 * f + i, fam.local_dim(q), "{fam} {q}");
            }
        }
    }

    #[test]
    fn unisolvence_low_degrees() {
        for fam in [Family::Lagrange, Family::Nedelec, Family::RaviartThomas] {
            for q in 0..=3 {
                let Ok(el) = reference_element(fam, q) else { continue };
                let mut worst: f64 = 0.0;
                for (i, dof) in el.dofs.iter().enumerate() {
                    let tab = el.tabulate(&dof.points);
                    for k in 0..el.dim {
                        let v: f64 = (0..tab.npoints)
                            .map(|p| dot(dof.weights[p], tab.value(p, k)))
                            .sum();
                        let expected = if i == k { 1.0 } else { 0.0 };
                        worst = worst.max((v - expected).abs());
                    }
                }
                assert!(worst < 1e-10, "{fam} degree {q}: {worst:e}");
            }
        }
    }

    #[test]
    fn raviart_thomas_lowest_order_divergence() {
        // x -> x lies in RT_0 and has divergence 3
        let el = reference_element(Family::RaviartThomas, 0).unwrap();
        let coef = el.interpolate(|x| *x);
        let pts = [[0.1, 0.2, 0.3], [0.6, 0.1, 0.1]];
        let tab = el.tabulate(&pts);
        for p in 0..2 {
            let mut v = [0.0; 3];
            let mut d = 0.0;
            for k in 0..4 {
                let b = tab.value(p, k);
                for c in 0..3 {
                    v[c] += coef[k] * b[c];
                }
                d += coef[k] * tab.deriv(p, k)[0];
            }
            assert!((d - 3.0).abs() < 1e-12);
            for c in 0..3 {
                assert!((v[c] - pts[p][c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn nedelec_reproduces_its_polynomials_and_curls() {
        // (x2^2, x3 x1, x1^2 x2) is in P_3 subset N_3
        let el = reference_element(Family::Nedelec, 3).unwrap();
        let f = |x: &[f64; 3]| [x[1] * x[1], x[2] * x[0], x[0] * x[0] * x[1]];
        let curl = |x: &[f64; 3]| [x[0] * x[0] - x[0], 0.0 - 2.0 * x[0] * x[1], x[2] - 2.0 * x[1]];
        let coef = el.interpolate(f);
        let pts = [[0.2, 0.3, 0.1], [0.05, 0.05, 0.8]];
        let tab = el.tabulate(&pts);
        for (p, x) in pts.iter().enumerate() {
            let (mut v, mut c) = ([0.0; 3], [0.0; 3]);
            for k in 0..el.dim {
                for i in 0..3 {
                    v[i] += coef[k] * tab.value(p, k)[i];
                    c[i] += coef[k] * tab.deriv(p, k)[i];
                }
            }
            let (fv, cv) = (f(x), curl(x));
            for i in 0..3 {
                assert!((v[i] - fv[i]).abs() < 1e-10);
                assert!((c[i] - cv[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn unsupported_degree() {
        assert!(reference_element(Family::Lagrange, 0).is_err());
        assert!(reference_element(Family::Nedelec, MAX_DEGREE + 1).is_err());
    }
}
