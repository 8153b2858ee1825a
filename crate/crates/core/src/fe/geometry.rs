use nalgebra::{Matrix3, Vector3};

use super::element::Family;
use crate::mesh::MeshTopology;

/// Affine map from the reference cell onto a mesh cell, taken from the sorted vertex list.
///
/// The determinant may be negative; integrals use its absolute value.
#[derive(Debug, Clone, Copy)]
pub struct CellMap {
    pub origin: Vector3<f64>,
    pub jac: Matrix3<f64>,
    pub jac_inv_t: Matrix3<f64>,
    pub det: f64,
}

impl CellMap {
    pub fn new(mesh: &MeshTopology, k: usize) -> Self {
        Self::from_vertices(mesh.cell_coords(k))
    }

    pub fn from_vertices(v: [[f64; 3]; 4]) -> Self {
        let o = Vector3::from(v[0]);
        let jac = Matrix3::from_columns(&[
            Vector3::from(v[1]) - o,
            Vector3::from(v[2]) - o,
            Vector3::from(v[3]) - o,
        ]);
        let det = jac.determinant();
        let inv = jac.try_inverse().expect("degenerate cell");
        Self {
            origin: o,
            jac,
            jac_inv_t: inv.transpose(),
            det,
        }
    }

    pub fn abs_det(&self) -> f64 {
        self.det.abs()
    }

    pub fn to_physical(&self, x: &[f64; 3]) -> [f64; 3] {
        (self.origin + self.jac * Vector3::from(*x)).into()
    }

    pub fn to_reference(&self, x: &[f64; 3]) -> [f64; 3] {
        (self.jac_inv_t.transpose() * (Vector3::from(*x) - self.origin)).into()
    }

    /// Maps a reference value to the physical cell.
    #[inline]
    pub fn push_value(&self, family: Family, v: [f64; 3]) -> [f64; 3] {
        let v = Vector3::from(v);
        match family {
            Family::Nedelec => (self.jac_inv_t * v).into(),
            Family::RaviartThomas => (self.jac * v / self.det).into(),
            Family::Lagrange | Family::DiscontinuousP => v.into(),
        }
    }

    /// Maps a reference derivative (gradient, curl or divergence) to the physical cell.
    #[inline]
    pub fn push_deriv(&self, family: Family, d: [f64; 3]) -> [f64; 3] {
        let d = Vector3::from(d);
        match family {
            Family::Nedelec => (self.jac * d / self.det).into(),
            Family::RaviartThomas => [d[0] / self.det, 0.0, 0.0],
            Family::Lagrange | Family::DiscontinuousP => (self.jac_inv_t * d).into(),
        }
    }

    /// Transforms a physical vector field into the reference field of the given family,
    /// so that reference dof functionals can be applied to it.
    #[inline]
    pub fn pull_value(&self, family: Family, v: [f64; 3]) -> [f64; 3] {
        let v = Vector3::from(v);
        match family {
            Family::Nedelec => (self.jac.transpose() * v).into(),
            Family::RaviartThomas => (self.jac_inv_t.transpose() * v * self.det).into(),
            Family::Lagrange | Family::DiscontinuousP => v.into(),
        }
    }
}
