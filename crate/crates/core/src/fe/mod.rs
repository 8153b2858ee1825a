//! Finite element spaces on tetrahedra.

pub mod dofmap;
pub mod element;
pub mod field;
pub mod geometry;
pub mod poly;
pub mod projection;
pub mod quadrature;
pub mod tensors;

pub use dofmap::{build_dofmap, DofMap, Essential};
pub use element::{reference_element, Family, ReferenceElement, Tabulation};
pub use field::{evaluate_field, DiscreteField, Query, Space};
pub use geometry::CellMap;
pub use projection::{l2_project_piecewise, PiecewisePolynomial};
pub use quadrature::{line_rule, tet_rule, triangle_rule, QuadratureRule};
