//! Experiment definitions: domain, source and, where known, the exact solution.
//!
//! Every shipped case has `div J = 0` and a Dirichlet condition on the whole boundary.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{CaseError, MeshError};
use crate::mesh::{extrude, fan_triangulation, fichera_mesh, unit_cube_mesh, MeshTopology};
use crate::solver::VectorFn;

pub type MeshBuilder = dyn Fn(usize) -> Result<MeshTopology, MeshError> + Send + Sync;

pub struct CaseDefinition {
    pub name: String,
    /// Initial mesh at resolution `n` (cells per unit length, roughly).
    pub mesh: Box<MeshBuilder>,
    pub j: Arc<VectorFn>,
    pub a: Option<Arc<VectorFn>>,
    pub curl_a: Option<Arc<VectorFn>>,
    /// Convex domains have `C_L = 1`; the guaranteed bound is only claimed there.
    pub convex: bool,
}

impl std::fmt::Debug for CaseDefinition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CaseDefinition")
            .field("name", &self.name)
            .field("analytic", &self.curl_a.is_some())
            .field("convex", &self.convex)
            .finish()
    }
}

pub const CASE_NAMES: [&str; 6] = ["cube", "ltype-3pi4", "ltype-pi2", "ltype-pi8", "fichera", "poly"];

pub fn case_by_name(name: &str) -> Result<CaseDefinition, CaseError> {
    match name {
        "cube" => Ok(smooth_cube_case()),
        "ltype-3pi4" => ltype_case(0.75 * PI),
        "ltype-pi2" => ltype_case(0.5 * PI),
        "ltype-pi8" => ltype_case(PI / 8.0),
        "fichera" => Ok(fichera_case()),
        "poly" => polynomial_case(),
        other => Err(CaseError::UnknownCase(other.to_string())),
    }
}

pub fn smooth_cube_a(x: &[f64; 3]) -> [f64; 3] {
    let (s, c) = (|t: f64| (PI * t).sin(), |t: f64| (PI * t).cos());
    [c(x[0]) * s(x[1]) * s(x[2]), -s(x[0]) * c(x[1]) * s(x[2]), 0.0]
}

pub fn smooth_cube_curl(x: &[f64; 3]) -> [f64; 3] {
    let (s, c) = (|t: f64| (PI * t).sin(), |t: f64| (PI * t).cos());
    [
        PI * s(x[0]) * c(x[1]) * c(x[2]),
        PI * c(x[0]) * s(x[1]) * c(x[2]),
        -2.0 * PI * c(x[0]) * c(x[1]) * s(x[2]),
    ]
}

/// `curl curl A = -Laplace A = 3 pi^2 A`, since `A` is divergence free.
pub fn smooth_cube_j(x: &[f64; 3]) -> [f64; 3] {
    let k = 3.0 * PI * PI;
    smooth_cube_a(x).map(|v| k * v)
}

/// Smooth solution on the unit cube.
pub fn smooth_cube_case() -> CaseDefinition {
    CaseDefinition {
        name: "cube".into(),
        mesh: Box::new(|n| Ok(unit_cube_mesh(n.max(1)))),
        j: Arc::new(smooth_cube_j),
        a: Some(Arc::new(smooth_cube_a)),
        curl_a: Some(Arc::new(smooth_cube_curl)),
        convex: true,
    }
}

const CHI_INNER: f64 = 0.25;
const CHI_OUTER: f64 = 0.75;

/// Radial cutoff: one for `r <= 0.25`, zero for `r >= 0.75`, joined by the quintic
/// smoothstep so that the first two derivatives are continuous. Returns `(chi, chi', chi'')`.
pub fn cutoff(r: f64) -> (f64, f64, f64) {
    let w = CHI_OUTER - CHI_INNER;
    if r <= CHI_INNER {
        return (1.0, 0.0, 0.0);
    }
    if r >= CHI_OUTER {
        return (0.0, 0.0, 0.0);
    }
    let t = (r - CHI_INNER) / w;
    let t2 = t * t;
    let step = t * t2 * (10.0 - 15.0 * t + 6.0 * t2);
    let d1 = 30.0 * t2 * (1.0 - t) * (1.0 - t);
    let d2 = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
    (1.0 - step, -d1 / w, -d2 / (w * w))
}

/// Data of an L-type case with opening angle `phi` removed from the square.
#[derive(Debug, Clone, Copy)]
pub struct LType {
    pub phi: f64,
    pub alpha: f64,
}

impl LType {
    pub fn new(phi: f64) -> Result<Self, CaseError> {
        if !(phi > 0.0 && phi < 2.0 * PI) {
            return Err(CaseError::BadAngle(phi));
        }
        Ok(Self { phi, alpha: PI / (2.0 * PI - phi) })
    }

    /// Polar coordinates with `theta` in `[0, 2 pi)`.
    fn polar(x: &[f64; 3]) -> (f64, f64) {
        let r = x[0].hypot(x[1]);
        let mut theta = x[1].atan2(x[0]);
        if theta < 0.0 {
            theta += 2.0 * PI;
        }
        (r, theta)
    }

    pub fn s(&self, x: &[f64; 3]) -> f64 {
        let (r, t) = Self::polar(x);
        cutoff(r).0 * r.powf(self.alpha) * (self.alpha * t).sin()
    }

    pub fn a(&self, x: &[f64; 3]) -> [f64; 3] {
        [0.0, 0.0, self.s(x)]
    }

    /// `curl (0, 0, s) = (ds/dy, -ds/dx, 0)`.
    pub fn curl_a(&self, x: &[f64; 3]) -> [f64; 3] {
        let (r, t) = Self::polar(x);
        if r == 0.0 {
            return [0.0; 3];
        }
        let a = self.alpha;
        let (chi, dchi, _) = cutoff(r);
        let ra = r.powf(a);
        let (sa, ca) = ((a * t).sin(), (a * t).cos());
        // radial and angular components of grad s
        let gr = dchi * ra * sa + chi * a * ra / r * sa;
        let gt = chi * a * ra / r * ca;
        let (st, ct) = (t.sin(), t.cos());
        let gx = gr * ct - gt * st;
        let gy = gr * st + gt * ct;
        [gy, -gx, 0.0]
    }

    /// `J = (0, 0, -Laplace_2 (chi u))` with `u = r^alpha sin(alpha theta)` harmonic.
    pub fn j(&self, x: &[f64; 3]) -> [f64; 3] {
        let (r, t) = Self::polar(x);
        if r <= CHI_INNER || r >= CHI_OUTER {
            return [0.0; 3];
        }
        let a = self.alpha;
        let (_, d1, d2) = cutoff(r);
        let sa = (a * t).sin();
        let lap = (d2 + d1 / r) * r.powf(a) * sa + 2.0 * d1 * a * r.powf(a - 1.0) * sa;
        [0.0, 0.0, -lap]
    }

    /// Counterclockwise boundary of the cut square from the ray `theta = 0` to the ray
    /// `theta = 2 pi - phi`, with the side midpoints included.
    pub fn polygon(&self) -> Vec<[f64; 2]> {
        let end = 2.0 * PI - self.phi;
        let ring: [([f64; 2], f64); 8] = [
            ([1.0, 1.0], 0.25 * PI),
            ([0.0, 1.0], 0.5 * PI),
            ([-1.0, 1.0], 0.75 * PI),
            ([-1.0, 0.0], PI),
            ([-1.0, -1.0], 1.25 * PI),
            ([0.0, -1.0], 1.5 * PI),
            ([1.0, -1.0], 1.75 * PI),
            ([1.0, 0.0], 2.0 * PI),
        ];
        let mut out = vec![[1.0, 0.0]];
        for (p, ang) in ring {
            if ang < end - 1e-12 {
                out.push(p);
            } else {
                break;
            }
        }
        // where the ray leaves the square
        let (c, s) = (end.cos(), end.sin());
        let scale = 1.0 / c.abs().max(s.abs());
        let hit = [c * scale, s * scale];
        let snap = |v: f64| if v.abs() < 1e-14 { 0.0 } else { v };
        out.push([snap(hit[0]), snap(hit[1])]);
        out
    }

    /// Fan from the reentrant corner, `levels` rounds of red refinement, extruded with as
    /// many layers as the refined triangles are wide.
    pub fn mesh(&self, n: usize) -> Result<MeshTopology, MeshError> {
        let levels = n.max(1).next_power_of_two().trailing_zeros() as usize;
        let (pts, tris) = fan_triangulation([0.0, 0.0], &self.polygon(), false, levels);
        extrude(&pts, &tris, 1 << levels)
    }
}

/// Edge singularity along the reentrant edge of `L x (0, 1)`.
pub fn ltype_case(phi: f64) -> Result<CaseDefinition, CaseError> {
    let lt = LType::new(phi)?;
    let name = match phi {
        p if (p - 0.75 * PI).abs() < 1e-12 => "ltype-3pi4".to_string(),
        p if (p - 0.5 * PI).abs() < 1e-12 => "ltype-pi2".to_string(),
        p if (p - PI / 8.0).abs() < 1e-12 => "ltype-pi8".to_string(),
        p => format!("ltype-{p}"),
    };
    Ok(CaseDefinition {
        name,
        mesh: Box::new(move |n| lt.mesh(n)),
        j: Arc::new(move |x| lt.j(x)),
        a: Some(Arc::new(move |x| lt.a(x))),
        curl_a: Some(Arc::new(move |x| lt.curl_a(x))),
        convex: false,
    })
}

/// Constant source on the Fichera corner; no closed-form solution.
pub fn fichera_case() -> CaseDefinition {
    CaseDefinition {
        name: "fichera".into(),
        mesh: Box::new(|n| Ok(fichera_mesh(n.max(1)))),
        j: Arc::new(|_| [1.0, 1.0, 0.0]),
        a: None,
        curl_a: None,
        convex: false,
    }
}

/// `A = (0, 0, b)` with the bubble `b = x(1-x) y(1-y)`.
pub fn poly_a(x: &[f64; 3]) -> [f64; 3] {
    [0.0, 0.0, x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1])]
}

pub fn poly_curl(x: &[f64; 3]) -> [f64; 3] {
    [
        x[0] * (1.0 - x[0]) * (1.0 - 2.0 * x[1]),
        -(1.0 - 2.0 * x[0]) * x[1] * (1.0 - x[1]),
        0.0,
    ]
}

/// `curl curl A = -Laplace A` for the divergence-free `A`.
pub fn poly_j(x: &[f64; 3]) -> [f64; 3] {
    [0.0, 0.0, 2.0 * x[1] * (1.0 - x[1]) + 2.0 * x[0] * (1.0 - x[0])]
}

/// Largest `|A x n|` over a 50-point sample of each face of the unit cube.
pub fn unit_cube_trace(a: &VectorFn) -> f64 {
    let mut worst = 0.0f64;
    for axis in 0..3 {
        for side in [0.0, 1.0] {
            for i in 0..50 {
                let (u, v) = ((i % 7) as f64 / 6.0, (i / 7) as f64 / 7.0);
                let mut x = [0.0; 3];
                x[axis] = side;
                x[(axis + 1) % 3] = u;
                x[(axis + 2) % 3] = v;
                let f = a(&x);
                let mut n = [0.0; 3];
                n[axis] = 1.0;
                let t = [f[1] * n[2] - f[2] * n[1], f[2] * n[0] - f[0] * n[2], f[0] * n[1] - f[1] * n[0]];
                worst = worst.max(t.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            }
        }
    }
    worst
}

/// Polynomial solution with vanishing tangential trace, reproduced exactly from degree three.
pub fn polynomial_case() -> Result<CaseDefinition, CaseError> {
    let trace = unit_cube_trace(&poly_a);
    if trace > 1e-14 {
        return Err(CaseError::TraceCheckFailure(trace));
    }
    Ok(CaseDefinition {
        name: "poly".into(),
        mesh: Box::new(|n| Ok(unit_cube_mesh(n.max(1)))),
        j: Arc::new(poly_j),
        a: Some(Arc::new(poly_a)),
        curl_a: Some(Arc::new(poly_curl)),
        convex: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe::{tet_rule, CellMap};

    fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        (0..3).all(|i| (a[i] - b[i]).abs() <= tol)
    }

    /// Curl of `f` by central differences.
    fn fd_curl(f: &dyn Fn(&[f64; 3]) -> [f64; 3], x: &[f64; 3], h: f64) -> [f64; 3] {
        let d = |i: usize, c: usize| {
            let (mut p, mut m) = (*x, *x);
            p[i] += h;
            m[i] -= h;
            (f(&p)[c] - f(&m)[c]) / (2.0 * h)
        };
        [d(1, 2) - d(2, 1), d(2, 0) - d(0, 2), d(0, 1) - d(1, 0)]
    }

    #[test]
    fn cube_point_values() {
        assert!(close(smooth_cube_a(&[0.0, 0.5, 0.5]), [1.0, 0.0, 0.0], 1e-15));
        assert!(smooth_cube_j(&[0.5, 0.25, 0.25])[0].abs() < 1e-14);
    }

    #[test]
    fn cube_curl_matches_finite_differences() {
        for x in [[0.1, 0.2, 0.3], [0.7, 0.4, 0.9], [0.5, 0.5, 0.5]] {
            let c = fd_curl(&smooth_cube_a, &x, 1e-5);
            assert!(close(c, smooth_cube_curl(&x), 1e-8));
            let cc = fd_curl(&smooth_cube_curl, &x, 1e-5);
            assert!(close(cc, smooth_cube_j(&x), 1e-6));
        }
    }

    #[test]
    fn cube_curl_energy_by_quadrature() {
        // 3 pi^2 / 4 on a fine Kuhn grid with high-order quadrature
        let mesh = unit_cube_mesh(4);
        let rule = tet_rule(16).unwrap();
        let mut s = 0.0;
        for k in 0..mesh.num_cells() {
            let map = CellMap::new(&mesh, k);
            s += map.abs_det()
                * rule.integrate(|x| {
                    let c = smooth_cube_curl(&map.to_physical(x));
                    c[0] * c[0] + c[1] * c[1] + c[2] * c[2]
                });
        }
        assert!((s - 0.75 * PI * PI).abs() < 1e-10, "{s}");
    }

    #[test]
    fn cutoff_is_c2_at_the_knots() {
        for knot in [CHI_INNER, CHI_OUTER] {
            let (a, b) = (cutoff(knot - 1e-13), cutoff(knot + 1e-13));
            assert!((a.0 - b.0).abs() < 1e-12);
            assert!((a.1 - b.1).abs() < 1e-12);
            assert!((a.2 - b.2).abs() < 1e-10);
        }
        assert_eq!(cutoff(0.1), (1.0, 0.0, 0.0));
        assert_eq!(cutoff(0.9), (0.0, 0.0, 0.0));
        assert!((cutoff(0.5).0 - 0.5).abs() < 1e-15);
        // monotone bridge
        let mut prev = 1.0;
        for i in 0..=100 {
            let v = cutoff(CHI_INNER + 0.005 * i as f64).0;
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn cutoff_derivatives_match_differences() {
        for r in [0.3, 0.45, 0.6, 0.7] {
            let h = 1e-6;
            let (_, d1, d2) = cutoff(r);
            assert!(((cutoff(r + h).0 - cutoff(r - h).0) / (2.0 * h) - d1).abs() < 1e-6);
            assert!(((cutoff(r + h).1 - cutoff(r - h).1) / (2.0 * h) - d2).abs() < 1e-5);
        }
    }

    #[test]
    fn ltype_angle_and_data() {
        let lt = LType::new(0.5 * PI).unwrap();
        assert!((lt.alpha - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(LType::new(0.0), Err(CaseError::BadAngle(_))));
        assert!(matches!(LType::new(2.0 * PI), Err(CaseError::BadAngle(_))));
        for phi in [0.75 * PI, 0.5 * PI, PI / 8.0] {
            let lt = LType::new(phi).unwrap();
            // J vanishes where the cutoff is one
            assert_eq!(lt.j(&[0.1, 0.1, 0.5]), [0.0; 3]);
            // s vanishes on both cut faces
            let end = 2.0 * PI - phi;
            for r in [0.1, 0.3, 0.5] {
                assert!(lt.s(&[r, 0.0, 0.3]).abs() < 1e-15);
                assert!(lt.s(&[r * end.cos(), r * end.sin(), 0.3]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn ltype_curl_and_source_match_finite_differences() {
        let lt = LType::new(0.5 * PI).unwrap();
        let a = |x: &[f64; 3]| lt.a(x);
        let c = |x: &[f64; 3]| lt.curl_a(x);
        for x in [[0.3, 0.4, 0.5], [-0.5, 0.2, 0.1], [-0.2, -0.6, 0.7], [0.1, 0.1, 0.2]] {
            assert!(close(fd_curl(&a, &x, 1e-6), lt.curl_a(&x), 1e-7), "{x:?}");
            assert!(close(fd_curl(&c, &x, 1e-5), lt.j(&x), 1e-4), "{x:?}");
        }
    }

    #[test]
    fn ltype_meshes_cover_the_domain() {
        for (phi, area) in [(0.75 * PI, 2.5), (0.5 * PI, 3.0), (PI / 8.0, 4.0 - 0.5 * (PI / 8.0).tan())] {
            let lt = LType::new(phi).unwrap();
            for n in [1, 2] {
                let m = lt.mesh(n).unwrap();
                m.check().unwrap();
                assert!((m.total_volume() - area).abs() < 1e-12, "phi {phi}: {}", m.total_volume());
            }
        }
    }

    #[test]
    fn fichera_volume_and_source() {
        let c = fichera_case();
        let m = (c.mesh)(1).unwrap();
        assert!((m.total_volume() - 7.0).abs() < 1e-12);
        assert_eq!((c.j)(&[0.3, -0.2, 0.9]), [1.0, 1.0, 0.0]);
        assert!(c.curl_a.is_none());
    }

    #[test]
    fn polynomial_case_traces_and_source() {
        let c = polynomial_case().unwrap();
        assert!(unit_cube_trace(c.a.as_deref().unwrap()) < 1e-15);
        assert!(unit_cube_trace(&smooth_cube_a) < 1e-15);
        // a field with a tangential trace fails the check
        assert!(unit_cube_trace(&|_: &[f64; 3]| [1.0, 0.0, 0.0]) > 0.5);
        for x in [[0.2, 0.3, 0.4], [0.9, 0.1, 0.5]] {
            assert!(close(fd_curl(&poly_a, &x, 1e-5), poly_curl(&x), 1e-9));
            assert!(close(fd_curl(&poly_curl, &x, 1e-5), poly_j(&x), 1e-8));
        }
    }

    #[test]
    fn lookup_by_name() {
        for name in CASE_NAMES {
            assert_eq!(case_by_name(name).unwrap().name, name);
        }
        assert!(matches!(case_by_name("sphere"), Err(CaseError::UnknownCase(_))));
    }
}
