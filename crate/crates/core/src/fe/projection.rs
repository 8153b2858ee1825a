use std::sync::Arc;

use super::dofmap::Essential;
use super::element::{reference_element, Family};
use super::field::{DiscreteField, Space};
use super::geometry::CellMap;
use super::quadrature::tet_rule;
use crate::error::FeError;
use crate::mesh::MeshTopology;

/// Cellwise polynomial of degree `degree` with `ncomp` components on a list of cells.
///
/// Coefficients refer to the orthonormal reference basis of the discontinuous family, so on
/// cell `K` the local mass matrix is `|det J_K|` times the identity.
#[derive(Debug, Clone)]
pub struct PiecewisePolynomial {
    pub degree: usize,
    pub ncomp: usize,
    pub cells: Vec<usize>,
    /// `coeffs[(i * ncomp + c) * dim + j]` for list position `i`, component `c`, basis `j`.
    pub coeffs: Vec<f64>,
}

impl PiecewisePolynomial {
    pub fn basis_dim(&self) -> usize {
        Family::DiscontinuousP.local_dim(self.degree)
    }

    pub fn cell_component(&self, i: usize, c: usize) -> &[f64] {
        let d = self.basis_dim();
        &self.coeffs[(i * self.ncomp + c) * d..(i * self.ncomp + c + 1) * d]
    }

    /// Value at a reference point of the `i`-th listed cell.
    pub fn eval(&self, i: usize, x: &[f64; 3]) -> [f64; 3] {
        let el = reference_element(Family::DiscontinuousP, self.degree).expect("degree checked at construction");
        let tab = el.tabulate(&[*x]);
        let mut out = [0.0; 3];
        for (c, o) in out.iter_mut().enumerate().take(self.ncomp) {
            *o = self
                .cell_component(i, c)
                .iter()
                .enumerate()
                .map(|(j, a)| a * tab.value(0, j)[0])
                .sum();
        }
        out
    }

    /// Converts a scalar projection over all cells into a field of the discontinuous space.
    pub fn into_field(self, mesh: Arc<MeshTopology>) -> Result<DiscreteField, FeError> {
        assert_eq!(self.ncomp, 1);
        assert_eq!(self.cells.len(), mesh.num_cells());
        let space = Arc::new(Space::new(mesh, Family::DiscontinuousP, self.degree, &Essential::None)?);
        let mut coeffs = vec![0.0; space.num_dofs()];
        let d = self.basis_dim();
        for (i, &k) in self.cells.iter().enumerate() {
            for (j, &g) in space.dofmap.cell_dofs(k).iter().enumerate() {
                coeffs[g] = self.coeffs[i * d + j];
            }
        }
        Ok(DiscreteField::new(space, coeffs))
    }
}

/// Cellwise L2 projection onto polynomials of degree `degree`. `f(cell, x)` is evaluated at
/// physical points and returns `ncomp` meaningful components. `order` overrides the default
/// quadrature order `2 degree + 2`.
pub fn l2_project_piecewise(
    mesh: &MeshTopology,
    cells: &[usize],
    degree: usize,
    ncomp: usize,
    order: Option<usize>,
    f: impl Fn(usize, &[f64; 3]) -> [f64; 3],
) -> Result<PiecewisePolynomial, FeError> {
    let el = reference_element(Family::DiscontinuousP, degree)?;
    let rule = tet_rule(order.unwrap_or(2 * degree + 2).max(2 * degree + 2))?;
    let tab = el.tabulate(&rule.points);
    let d = el.dim;
    let mut coeffs = vec![0.0; cells.len() * ncomp * d];
    for (i, &k) in cells.iter().enumerate() {
        let map = CellMap::new(mesh, k);
        for (p, (x, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let v = f(k, &map.to_physical(x));
            for c in 0..ncomp {
                let base = (i * ncomp + c) * d;
                for j in 0..d {
                    // |det| cancels between the integral and the mass matrix
                    coeffs[base + j] += w * v[c] * tab.value(p, j)[0];
                }
            }
        }
    }
    Ok(PiecewisePolynomial {
        degree,
        ncomp,
        cells: cells.to_vec(),
        coeffs,
    })
}
