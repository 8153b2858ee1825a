//! Poincare-Friedrichs constants of edge patches.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::EquilibrationError;
use crate::fe::tensors::{reference_tensor, Part};
use crate::fe::{CellMap, Essential, Family, Space};
use crate::linalg::{Cholesky, SparseMatrix};
use crate::mesh::{build_topology_with, BoundaryLabel, EdgePatch, MeshTopology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoincareMode {
    /// Smallest eigenvalue of the patch Laplacian with cubic Lagrange elements.
    #[default]
    Eigen,
    /// The convex-domain value `1 / pi`.
    Bound,
}

/// Degree of the Lagrange discretisation used by [`PoincareMode::Eigen`].
pub const EIGEN_DEGREE: usize = 3;

/// `C_P` of the patch, relative to its diameter: `|| v || <= C_P h || grad v ||`.
pub fn poincare_constant(mesh: &MeshTopology, patch: &EdgePatch, mode: PoincareMode) -> Result<f64, EquilibrationError> {
    match mode {
        PoincareMode::Bound => Ok(std::f64::consts::FRAC_1_PI),
        PoincareMode::Eigen => {
            let dirichlet: &[usize] = if patch.dirichlet_edge { &patch.gamma_faces } else { &[] };
            let lambda = smallest_eigenvalue(mesh, &patch.cells, dirichlet)?;
            Ok(1.0 / (patch.h * lambda.sqrt()))
        }
    }
}

/// The cells as a stand-alone mesh, with `dirichlet_faces` (global face ids) labelled Dirichlet
/// and every other boundary face Neumann.
pub fn submesh(mesh: &MeshTopology, cells: &[usize], dirichlet_faces: &[usize]) -> Result<MeshTopology, EquilibrationError> {
    let mut verts: Vec<usize> = cells.iter().flat_map(|&k| mesh.tets[k]).collect();
    verts.sort_unstable();
    verts.dedup();
    let local: HashMap<usize, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let vertices = verts.iter().map(|&v| mesh.vertices[v]).collect();
    let tets = cells.iter().map(|&k| mesh.tets[k].map(|v| local[&v])).collect();
    let gamma: Vec<[usize; 3]> = dirichlet_faces
        .iter()
        .map(|&f| {
            let mut t = mesh.faces[f].map(|v| local[&v]);
            t.sort_unstable();
            t
        })
        .collect();
    build_topology_with(vertices, tets, |f| {
        Some(if gamma.contains(&f) {
            BoundaryLabel::Dirichlet
        } else {
            BoundaryLabel::Neumann
        })
    })
    .map_err(|e| EquilibrationError::EigenFailure(format!("patch mesh: {e}")))
}

/// Smallest eigenvalue of `-Laplace` on the union of `cells`, with homogeneous Dirichlet
/// conditions on `dirichlet_faces`, or, when that list is empty, the smallest non-zero Neumann
/// eigenvalue (the mean-zero constraint).
pub fn smallest_eigenvalue(mesh: &MeshTopology, cells: &[usize], dirichlet_faces: &[usize]) -> Result<f64, EquilibrationError> {
    let sub = Arc::new(submesh(mesh, cells, dirichlet_faces)?);
    let mean_zero = dirichlet_faces.is_empty();
    let (k, m, ones) = laplace_matrices(&sub, EIGEN_DEGREE)?;
    lowest_generalized_eigenvalue(&k, &m, mean_zero.then_some(ones.as_slice()))
}

/// Stiffness and mass matrices of Lagrange elements on the free dofs, plus the coefficient
/// vector of the constant one.
pub fn laplace_matrices(mesh: &Arc<MeshTopology>, degree: usize) -> Result<(SparseMatrix, SparseMatrix, Vec<f64>), EquilibrationError> {
    let space = Space::new(mesh.clone(), Family::Lagrange, degree, &Essential::Dirichlet)?;
    let free = space.dofmap.free_index();
    let n = space.dofmap.num_free();
    let t_stiff = reference_tensor((Family::Lagrange, degree, Part::Deriv), (Family::Lagrange, degree, Part::Deriv))?;
    let t_mass = reference_tensor((Family::Lagrange, degree, Part::Value), (Family::Lagrange, degree, Part::Value))?;
    let (mut tk, mut tm) = (Vec::new(), Vec::new());
    for c in 0..mesh.num_cells() {
        let map = CellMap::new(mesh, c);
        let ad = map.abs_det();
        let metric = map.jac_inv_t.transpose() * map.jac_inv_t;
        let kl = t_stiff.contract(&metric, ad);
        let ml = t_mass.scalar(ad);
        let dofs = space.dofmap.cell_dofs(c);
        for (a, &ga) in dofs.iter().enumerate() {
            let Some(ia) = free[ga] else { continue };
            for (b, &gb) in dofs.iter().enumerate() {
                if let Some(ib) = free[gb] {
                    tk.push((ia, ib, kl[(a, b)]));
                    tm.push((ia, ib, ml[(a, b)]));
                }
            }
        }
    }
    let one = space.interpolate(|_| [1.0, 0.0, 0.0]);
    let ones = one
        .coeffs
        .iter()
        .enumerate()
        .filter_map(|(g, v)| free[g].map(|_| *v))
        .collect();
    Ok((SparseMatrix::from_triplets(n, n, &tk), SparseMatrix::from_triplets(n, n, &tm), ones))
}

/// Eigenvalues of the pencil `(A, B)` for small dense symmetric matrices, ascending.
pub fn dense_generalized_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>, EquilibrationError> {
    let l = b
        .clone()
        .cholesky()
        .ok_or_else(|| EquilibrationError::EigenFailure("mass matrix is not positive definite".into()))?
        .l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| EquilibrationError::EigenFailure("singular mass factor".into()))?;
    let c = &linv * a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut vals: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

const BLOCK: usize = 6;
/// Problems up to this size are solved densely.
const DENSE_LIMIT: usize = 120;
const MAX_SWEEPS: usize = 400;

/// Lowest eigenvalue of `K x = lambda M x` by shifted subspace iteration with Rayleigh-Ritz.
/// With `deflate = Some(c)`, the search space is kept `M`-orthogonal to `c` (the constants),
/// which removes the zero Neumann eigenvalue.
pub fn lowest_generalized_eigenvalue(k: &SparseMatrix, m: &SparseMatrix, deflate: Option<&[f64]>) -> Result<f64, EquilibrationError> {
    let n = k.nrows();
    let usable = n - usize::from(deflate.is_some());
    if usable == 0 {
        return Err(EquilibrationError::EigenFailure("no free degrees of freedom".into()));
    }
    if n <= DENSE_LIMIT {
        return dense_lowest(&k.to_dense(), &m.to_dense(), deflate);
    }

    // shift so that the pencil is definite even with the constant mode present
    let diag_k: f64 = k.diagonal().iter().sum();
    let diag_m: f64 = m.diagonal().iter().sum();
    let shift = if deflate.is_some() { 1e-2 * diag_k / diag_m } else { 0.0 };
    let chol = Cholesky::new(&k.add_scaled(1.0, m, shift)).map_err(|e| EquilibrationError::EigenFailure(e.to_string()))?;
    let b = BLOCK.min(usable);
    let mc = deflate.map(|c| m.mul_vec(c));
    let cmc = match (&mc, deflate) {
        (Some(mc), Some(c)) => crate::linalg::dot(c, mc),
        _ => 1.0,
    };
    let project = |v: &mut Vec<f64>| {
        if let (Some(c), Some(mc)) = (deflate, &mc) {
            let a = crate::linalg::dot(v, mc) / cmc;
            for (x, ci) in v.iter_mut().zip(c) {
                *x -= a * ci;
            }
        }
    };
    // fixed oscillatory start block, so results do not depend on a seed
    let mut x: Vec<Vec<f64>> = (0..b)
        .map(|j| {
            let mut v: Vec<f64> = (0..n).map(|i| ((i + 1) as f64 * (j as f64 + 1.618)).sin()).collect();
            project(&mut v);
            v
        })
        .collect();
    for _ in 0..MAX_SWEEPS {
        let y: Vec<Vec<f64>> = x
            .iter()
            .map(|v| {
                let mut w = chol.solve(&m.mul_vec(v));
                project(&mut w);
                w
            })
            .collect();
        let ky: Vec<Vec<f64>> = y.iter().map(|v| k.mul_vec(v)).collect();
        let my: Vec<Vec<f64>> = y.iter().map(|v| m.mul_vec(v)).collect();
        let kr = DMatrix::from_fn(b, b, |i, j| crate::linalg::dot(&y[i], &ky[j]));
        let mr = DMatrix::from_fn(b, b, |i, j| crate::linalg::dot(&y[i], &my[j]));
        let (vals, vecs) = ritz(&kr, &mr)?;
        let lambda = vals[0];
        // rotate the block onto the Ritz vectors
        let combine = |src: &[Vec<f64>], c: usize| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (r, v) in src.iter().enumerate() {
                let w = vecs[(r, c)];
                for (a, yv) in out.iter_mut().zip(v) {
                    *a += w * yv;
                }
            }
            out
        };
        let (kx, mx) = (combine(&ky, 0), combine(&my, 0));
        let res: f64 = kx.iter().zip(&mx).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        let size: f64 = mx.iter().map(|v| v * v).sum::<f64>().sqrt() * lambda.abs();
        if res <= 1e-8 * size {
            return Ok(lambda);
        }
        x = (0..b)
            .map(|c| {
                let mut v = combine(&y, c);
                let s = crate::linalg::norm_inf(&v);
                if s > 0.0 {
                    v.iter_mut().for_each(|a| *a /= s);
                }
                v
            })
            .collect();
    }
    Err(EquilibrationError::EigenFailure("subspace iteration did not converge".into()))
}

/// Ritz values (ascending) and `M`-orthonormal Ritz vectors of a small pencil.
fn ritz(kr: &DMatrix<f64>, mr: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>), EquilibrationError> {
    let l = mr
        .clone()
        .cholesky()
        .ok_or_else(|| EquilibrationError::EigenFailure("Ritz basis lost rank".into()))?
        .l();
    let linv = l
        .try_inverse()
        .ok_or_else(|| EquilibrationError::EigenFailure("Ritz basis lost rank".into()))?;
    let c = &linv * kr * linv.transpose();
    let eig = SymmetricEigen::new((&c + c.transpose()) * 0.5);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let w = linv.transpose() * &eig.eigenvectors;
    let vecs = DMatrix::from_fn(w.nrows(), w.ncols(), |r, c| w[(r, order[c])]);
    Ok((vals, vecs))
}

fn dense_lowest(k: &DMatrix<f64>, m: &DMatrix<f64>, deflate: Option<&[f64]>) -> Result<f64, EquilibrationError> {
    let vals = dense_generalized_eigenvalues(k, m)?;
    match deflate {
        // the constant is the only kernel vector; skip it
        Some(_) => vals
            .get(1)
            .copied()
            .ok_or_else(|| EquilibrationError::EigenFailure("no non-constant mode".into())),
        None => Ok(vals[0]),
    }
}
