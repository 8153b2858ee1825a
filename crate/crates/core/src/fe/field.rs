use std::sync::Arc;

use super::dofmap::{build_dofmap, DofMap, Essential};
use super::element::{reference_element, Family, ReferenceElement};
use super::geometry::CellMap;
use crate::error::FeError;
use crate::mesh::MeshTopology;

/// A global finite element space: mesh, reference element and numbering.
#[derive(Debug, Clone)]
pub struct Space {
    pub mesh: Arc<MeshTopology>,
    pub element: &'static ReferenceElement,
    pub dofmap: DofMap,
}

impl Space {
    pub fn new(mesh: Arc<MeshTopology>, family: Family, degree: usize, essential: &Essential) -> Result<Self, FeError> {
        let element = reference_element(family, degree)?;
        let dofmap = build_dofmap(&mesh, family, degree, essential);
        Ok(Self { mesh, element, dofmap })
    }

    pub fn family(&self) -> Family {
        self.element.family
    }

    pub fn degree(&self) -> usize {
        self.element.degree
    }

    pub fn num_dofs(&self) -> usize {
        self.dofmap.num_dofs
    }

    /// Canonical interpolant of a physical field (`f` returns the scalar in slot 0 for
    /// scalar families). Shared dofs are simply overwritten, which is exact for fields
    /// with the continuity of the space.
    pub fn interpolate(&self, f: impl Fn(&[f64; 3]) -> [f64; 3]) -> DiscreteField {
        self.interpolate_cellwise(|_, x| f(x))
    }

    /// As [`Space::interpolate`], but `f` also receives the cell, so that broken or
    /// discrete fields can be evaluated without point location.
    pub fn interpolate_cellwise(&self, f: impl Fn(usize, &[f64; 3]) -> [f64; 3]) -> DiscreteField {
        let mut coeffs = vec![0.0; self.num_dofs()];
        let fam = self.family();
        for k in 0..self.mesh.num_cells() {
            let map = CellMap::new(&self.mesh, k);
            let local = self
                .element
                .interpolate(|xr| map.pull_value(fam, f(k, &map.to_physical(xr))));
            for (i, &g) in self.dofmap.cell_dofs(k).iter().enumerate() {
                coeffs[g] = local[i];
            }
        }
        DiscreteField {
            space: Arc::new(self.clone()),
            coeffs,
        }
    }
}

/// Coefficients of a function in a [`Space`].
#[derive(Debug, Clone)]
pub struct DiscreteField {
    pub space: Arc<Space>,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Query {
    Value,
    Curl,
    Div,
    Grad,
}

impl Query {
    fn name(self) -> &'static str {
        match self {
            Query::Value => "value",
            Query::Curl => "curl",
            Query::Div => "div",
            Query::Grad => "grad",
        }
    }
}

impl DiscreteField {
    pub fn new(space: Arc<Space>, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), space.num_dofs());
        Self { space, coeffs }
    }

    pub fn zero(space: Arc<Space>) -> Self {
        let n = space.num_dofs();
        Self::new(space, vec![0.0; n])
    }

    pub fn cell_coeffs(&self, k: usize) -> Vec<f64> {
        self.space.dofmap.cell_dofs(k).iter().map(|&g| self.coeffs[g]).collect()
    }
}

/// Evaluates a field, or one of its derivatives, at reference points of one cell.
/// Divergences are returned in slot 0.
pub fn evaluate_field(field: &DiscreteField, cell: usize, points: &[[f64; 3]], what: Query) -> Result<Vec<[f64; 3]>, FeError> {
    let space = &field.space;
    let fam = space.family();
    let ok = match what {
        Query::Value => true,
        Query::Curl => fam == Family::Nedelec,
        Query::Div => fam == Family::RaviartThomas,
        Query::Grad => matches!(fam, Family::Lagrange | Family::DiscontinuousP),
    };
    if !ok {
        return Err(FeError::IncompatibleQuery {
            family: fam.name(),
            query: what.name(),
        });
    }
    let map = CellMap::new(&space.mesh, cell);
    let tab = space.element.tabulate(points);
    let c = field.cell_coeffs(cell);
    let mut out = Vec::with_capacity(points.len());
    for p in 0..points.len() {
        let mut r = [0.0; 3];
        for (i, ci) in c.iter().enumerate() {
            let v = if what == Query::Value { tab.value(p, i) } else { tab.deriv(p, i) };
            for d in 0..3 {
                r[d] += ci * v[d];
            }
        }
        out.push(if what == Query::Value {
            map.push_value(fam, r)
        } else {
            map.push_deriv(fam, r)
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_cube_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    }

    fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    }

    /// Evaluates a random global function from both sides of interior faces.
    fn continuity_mismatch(family: Family, degree: usize) -> f64 {
        let mesh = Arc::new(unit_cube_mesh(2));
        let space = Arc::new(Space::new(mesh.clone(), family, degree, &Essential::None).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(7 + degree as u64);
        let coeffs: Vec<f64> = (0..space.num_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let field = DiscreteField::new(space, coeffs);
        let interior: Vec<usize> = (0..mesh.num_faces()).filter(|&f| !mesh.is_boundary_face(f)).collect();
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let f = interior[rng.gen_range(0..interior.len())];
            let [a, b, c] = mesh.faces[f].map(|v| mesh.vertices[v]);
            let (s, t) = (rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.5));
            let x = [
                a[0] + s * (b[0] - a[0]) + t * (c[0] - a[0]),
                a[1] + s * (b[1] - a[1]) + t * (c[1] - a[1]),
                a[2] + s * (b[2] - a[2]) + t * (c[2] - a[2]),
            ];
            let n = cross(sub(b, a), sub(c, a));
            let vals: Vec<[f64; 3]> = mesh.face_tets[f]
                .iter()
                .map(|&k| {
                    let xr = CellMap::new(&mesh, k).to_reference(&x);
                    evaluate_field(&field, k, &[xr], Query::Value).unwrap()[0]
                })
                .collect();
            let d = sub(vals[0], vals[1]);
            let mismatch = match family {
                Family::Nedelec => {
                    let tc = cross(d, n);
                    dot(tc, tc).sqrt()
                }
                Family::RaviartThomas => dot(d, n).abs(),
                _ => d[0].abs(),
            };
            worst = worst.max(mismatch);
        }
        worst
    }

    #[test]
    fn inter_element_continuity() {
        for q in 0..=3 {
            assert!(continuity_mismatch(Family::Nedelec, q) < 1e-10, "N{q}");
            assert!(continuity_mismatch(Family::RaviartThomas, q) < 1e-10, "RT{q}");
            assert!(continuity_mismatch(Family::Lagrange, q + 1) < 1e-10, "P{}", q + 1);
        }
    }

    #[test]
    fn lowest_order_edge_duality() {
        let mesh = Arc::new(unit_cube_mesh(1));
        let space = Arc::new(Space::new(mesh.clone(), Family::Nedelec, 0, &Essential::None).unwrap());
        let rule = crate::fe::quadrature::line_rule(4).unwrap();
        for e in 0..mesh.num_edges() {
            let mut c = vec![0.0; space.num_dofs()];
            c[e] = 1.0;
            let field = DiscreteField::new(space.clone(), c);
            for e2 in 0..mesh.num_edges() {
                let k = mesh.edge_tets[e2][0];
                let map = CellMap::new(&mesh, k);
                let [a, b] = mesh.edges[e2].map(|v| mesh.vertices[v]);
                let t = sub(b, a);
                let mut integral = 0.0;
                for (x, w) in rule.points.iter().zip(&rule.weights) {
                    let p = [a[0] + x[0] * t[0], a[1] + x[0] * t[1], a[2] + x[0] * t[2]];
                    let v = evaluate_field(&field, k, &[map.to_reference(&p)], Query::Value).unwrap()[0];
                    integral += w * dot(v, t);
                }
                let expected = if e == e2 { 1.0 } else { 0.0 };
                assert!((integral - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_field_is_curl_free() {
        let mesh = Arc::new(unit_cube_mesh(2));
        let space = Space::new(mesh.clone(), Family::Nedelec, 0, &Essential::None).unwrap();
        let f = space.interpolate(|_| [0.3, -1.0, 2.0]);
        for k in 0..mesh.num_cells() {
            let c = evaluate_field(&f, k, &[[0.25; 3]], Query::Curl).unwrap()[0];
            assert!(c.iter().all(|x| x.abs() < 1e-12));
            let v = evaluate_field(&f, k, &[[0.1, 0.2, 0.3]], Query::Value).unwrap()[0];
            assert!((v[0] - 0.3).abs() < 1e-12 && (v[2] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rt_interpolant_of_position_has_divergence_three() {
        let mesh = Arc::new(unit_cube_mesh(2));
        let space = Space::new(mesh.clone(), Family::RaviartThomas, 0, &Essential::None).unwrap();
        let f = space.interpolate(|x| *x);
        for k in 0..mesh.num_cells() {
            let d = evaluate_field(&f, k, &[[0.2, 0.2, 0.2]], Query::Div).unwrap()[0];
            assert!((d[0] - 3.0).abs() < 1e-12);
        }
        assert!(evaluate_field(&f, 0, &[[0.2; 3]], Query::Curl).is_err());
    }
}
