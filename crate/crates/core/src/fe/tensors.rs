//! Reference-cell integrals of products of basis components.
//!
//! For affine cells every bilinear form used here reduces to a 3x3 metric contracted
//! against `R^{ab}_{ij} = int_ref A_i^a B_j^b`, so the quadrature is done once per pair
//! of elements instead of once per cell.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::{DMatrix, Matrix3};

use super::element::{reference_element, Family};
use super::quadrature::tet_rule;
use crate::error::FeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Part {
    Value,
    /// Gradient, curl or divergence depending on the family.
    Deriv,
}

pub type Operand = (Family, usize, Part);

fn poly_degree((family, degree, part): Operand) -> usize {
    match (family.is_vector(), part) {
        (true, Part::Value) => degree + 1,
        (true, Part::Deriv) => degree,
        (false, Part::Value) => degree,
        (false, Part::Deriv) => degree.saturating_sub(1),
    }
}

#[derive(Debug)]
pub struct RefTensor {
    pub na: usize,
    pub nb: usize,
    /// `data[3 a + b][i nb + j]`
    pub data: [Vec<f64>; 9],
}

impl RefTensor {
    fn build(a: Operand, b: Operand) -> Result<Self, FeError> {
        let ea = reference_element(a.0, a.1)?;
        let eb = reference_element(b.0, b.1)?;
        let rule = tet_rule(poly_degree(a) + poly_degree(b))?;
        let ta = ea.tabulate(&rule.points);
        let tb = eb.tabulate(&rule.points);
        let (na, nb) = (ea.dim, eb.dim);
        let mut data: [Vec<f64>; 9] = std::array::from_fn(|_| vec![0.0; na * nb]);
        for (p, w) in rule.weights.iter().enumerate() {
            for i in 0..na {
                let va = if a.2 == Part::Value { ta.value(p, i) } else { ta.deriv(p, i) };
                for j in 0..nb {
                    let vb = if b.2 == Part::Value { tb.value(p, j) } else { tb.deriv(p, j) };
                    for x in 0..3 {
                        if va[x] == 0.0 {
                            continue;
                        }
                        for y in 0..3 {
                            data[3 * x + y][i * nb + j] += w * va[x] * vb[y];
                        }
                    }
                }
            }
        }
        Ok(Self { na, nb, data })
    }

    /// `scale * sum_ab metric[a][b] R^{ab}` as a dense matrix.
    pub fn contract(&self, metric: &Matrix3<f64>, scale: f64) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.na, self.nb);
        for x in 0..3 {
            for y in 0..3 {
                let m = metric[(x, y)] * scale;
                if m == 0.0 {
                    continue;
                }
                let d = &self.data[3 * x + y];
                for i in 0..self.na {
                    for j in 0..self.nb {
                        out[(i, j)] += m * d[i * self.nb + j];
                    }
                }
            }
        }
        out
    }

    /// The `(0, 0)` component block times `scale`; used for scalar-by-scalar pairings.
    pub fn scalar(&self, scale: f64) -> DMatrix<f64> {
        DMatrix::from_fn(self.na, self.nb, |i, j| scale * self.data[0][i * self.nb + j])
    }
}

pub fn reference_tensor(a: Operand, b: Operand) -> Result<&'static RefTensor, FeError> {
    type Cache = Mutex<HashMap<(Operand, Operand), &'static RefTensor>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&(a, b)) {
        return Ok(t);
    }
    let built: &'static RefTensor = Box::leak(Box::new(RefTensor::build(a, b)?));
    Ok(*cache.lock().unwrap().entry((a, b)).or_insert(built))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lagrange_mass_sums_to_volume() {
        let t = reference_tensor((Family::Lagrange, 2, Part::Value), (Family::Lagrange, 2, Part::Value)).unwrap();
        let one = nalgebra::DVector::from_vec(reference_element(Family::Lagrange, 2).unwrap().interpolate(|_| [1.0, 0.0, 0.0]));
        let total = (one.transpose() * t.scalar(1.0) * &one)[(0, 0)];
        assert!((total - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let t = reference_tensor((Family::Lagrange, 3, Part::Deriv), (Family::Lagrange, 3, Part::Deriv)).unwrap();
        let k = t.contract(&Matrix3::identity(), 1.0);
        let ones = nalgebra::DVector::from_vec(reference_element(Family::Lagrange, 3).unwrap().interpolate(|_| [1.0, 0.0, 0.0]));
        assert!((k * ones).amax() < 1e-12);
    }
}
