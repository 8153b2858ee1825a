use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix3, Vector3};

use super::VectorFn;
use crate::error::SolverError;
use crate::fe::tensors::{reference_tensor, Part};
use crate::fe::{reference_element, tet_rule, CellMap, DiscreteField, Essential, Family, Space};
use crate::linalg::{par_map, Pattern, SparseMatrix};
use crate::mesh::MeshTopology;

/// The discrete curl-curl system restricted to unconstrained dofs.
///
/// Rows and columns of every block refer to *free* dofs; `nedelec_free_dofs[i]` is the global
/// Nedelec dof of free index `i` (likewise for Lagrange).
pub struct SaddleSystem {
    pub nedelec: Arc<Space>,
    pub lagrange: Arc<Space>,
    pub nedelec_free_dofs: Vec<usize>,
    pub lagrange_free_dofs: Vec<usize>,
    /// `(curl phi_j, curl phi_i)`
    pub k: SparseMatrix,
    /// `(phi_j, phi_i)`
    pub m: SparseMatrix,
    /// `(phi_j, grad q_i)`, Lagrange rows by Nedelec columns.
    pub b: SparseMatrix,
    /// `(grad q_j, grad q_i)`
    pub l: SparseMatrix,
    /// Discrete gradient: `grad q_j = sum_i grad[i, j] phi_i`.
    pub grad: SparseMatrix,
    /// `(J, phi_i)`
    pub rhs: Vec<f64>,
    /// `(J, grad q_i)`
    pub rhs_grad: Vec<f64>,
}

impl SaddleSystem {
    /// The symmetric block matrix `[[K, B^T], [B, 0]]`.
    pub fn matrix(&self) -> SparseMatrix {
        let n = self.rhs.len();
        let m = self.rhs_grad.len();
        let mut t = self.k.triplets();
        for (r, c, v) in self.b.triplets() {
            t.push((n + r, c, v));
            t.push((c, n + r, v));
        }
        SparseMatrix::from_triplets(n + m, n + m, &t)
    }

    pub fn nedelec_field(&self, free: &[f64]) -> DiscreteField {
        let mut c = vec![0.0; self.nedelec.num_dofs()];
        for (i, &g) in self.nedelec_free_dofs.iter().enumerate() {
            c[g] = free[i];
        }
        DiscreteField::new(self.nedelec.clone(), c)
    }

    pub fn lagrange_field(&self, free: &[f64]) -> DiscreteField {
        let mut c = vec![0.0; self.lagrange.num_dofs()];
        for (i, &g) in self.lagrange_free_dofs.iter().enumerate() {
            c[g] = free[i];
        }
        DiscreteField::new(self.lagrange.clone(), c)
    }

    /// Restricts a global Nedelec coefficient vector to the free dofs.
    pub fn restrict_nedelec(&self, field: &DiscreteField) -> Vec<f64> {
        self.nedelec_free_dofs.iter().map(|&g| field.coeffs[g]).collect()
    }

    pub fn restrict_lagrange(&self, field: &DiscreteField) -> Vec<f64> {
        self.lagrange_free_dofs.iter().map(|&g| field.coeffs[g]).collect()
    }
}

/// Reference discrete gradient: Nedelec dof functionals applied to Lagrange basis gradients.
fn reference_gradient(p: usize) -> Result<DMatrix<f64>, SolverError> {
    let ned = reference_element(Family::Nedelec, p)?;
    let lag = reference_element(Family::Lagrange, p + 1)?;
    let mut g = DMatrix::zeros(ned.dim, lag.dim);
    for (i, dof) in ned.dofs.iter().enumerate() {
        let tab = lag.tabulate(&dof.points);
        for j in 0..lag.dim {
            let mut s = 0.0;
            for (q, w) in dof.weights.iter().enumerate() {
                let d = tab.deriv(q, j);
                s += w[0] * d[0] + w[1] * d[1] + w[2] * d[2];
            }
            g[(i, j)] = if s.abs() < 1e-12 { 0.0 } else { s };
        }
    }
    Ok(g)
}

struct Local {
    k: DMatrix<f64>,
    m: DMatrix<f64>,
    b: DMatrix<f64>,
    l: DMatrix<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
}

/// Cells per parallel batch; bounds the memory held in local matrices.
const CHUNK: usize = 512;

fn free_dofs(dofs: &[usize], free: &[Option<usize>]) -> Vec<usize> {
    dofs.iter().map(|&g| free[g].unwrap_or(usize::MAX)).collect()
}

pub fn assemble_curlcurl_system(
    mesh: Arc<MeshTopology>,
    p: usize,
    j: &VectorFn,
    essential: &Essential,
) -> Result<SaddleSystem, SolverError> {
    let nedelec = Arc::new(Space::new(mesh.clone(), Family::Nedelec, p, essential)?);
    let lagrange = Arc::new(Space::new(mesh.clone(), Family::Lagrange, p + 1, essential)?);
    let t_curl = reference_tensor((Family::Nedelec, p, Part::Deriv), (Family::Nedelec, p, Part::Deriv))?;
    let t_mass = reference_tensor((Family::Nedelec, p, Part::Value), (Family::Nedelec, p, Part::Value))?;
    let t_coup = reference_tensor((Family::Lagrange, p + 1, Part::Deriv), (Family::Nedelec, p, Part::Value))?;
    let t_lap = reference_tensor((Family::Lagrange, p + 1, Part::Deriv), (Family::Lagrange, p + 1, Part::Deriv))?;
    let rule = tet_rule(2 * p + 10)?;
    let tab_n = nedelec.element.tabulate(&rule.points);
    let tab_l = lagrange.element.tabulate(&rule.points);
    let gref = reference_gradient(p)?;

    let local = |k: usize| {
        let map = CellMap::new(&mesh, k);
        let jt = map.jac.transpose();
        let jinv = map.jac_inv_t.transpose();
        let covariant = jinv * map.jac_inv_t;
        let curl_metric: Matrix3<f64> = jt * map.jac;
        let ad = map.abs_det();
        let mut f = vec![0.0; tab_n.nbasis];
        let mut g = vec![0.0; tab_l.nbasis];
        for (q, (x, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let jv = j(&map.to_physical(x));
            // (J, J^{-T} v) = (J^{-1} J, v)
            let pulled: Vector3<f64> = jinv * Vector3::from(jv) * (w * ad);
            for (i, fi) in f.iter_mut().enumerate() {
                let v = tab_n.value(q, i);
                *fi += pulled[0] * v[0] + pulled[1] * v[1] + pulled[2] * v[2];
            }
            for (i, gi) in g.iter_mut().enumerate() {
                let d = tab_l.deriv(q, i);
                *gi += pulled[0] * d[0] + pulled[1] * d[1] + pulled[2] * d[2];
            }
        }
        Local {
            k: t_curl.contract(&curl_metric, 1.0 / ad),
            m: t_mass.contract(&covariant, ad),
            b: t_coup.contract(&covariant, ad),
            l: t_lap.contract(&covariant, ad),
            f,
            g,
        }
    };

    let nfree = nedelec.dofmap.free_index();
    let lfree = lagrange.dofmap.free_index();
    let nn = nedelec.dofmap.num_free();
    let nl = lagrange.dofmap.num_free();
    let ncells = mesh.num_cells();
    let ndofs: Vec<Vec<usize>> = (0..ncells).map(|k| free_dofs(nedelec.dofmap.cell_dofs(k), &nfree)).collect();
    let ldofs: Vec<Vec<usize>> = (0..ncells).map(|k| free_dofs(lagrange.dofmap.cell_dofs(k), &lfree)).collect();
    let pn = Pattern::from_elements(nn, nn, ndofs.iter().map(|d| (d.as_slice(), d.as_slice())));
    let pl = Pattern::from_elements(nl, nl, ldofs.iter().map(|d| (d.as_slice(), d.as_slice())));
    let pb = Pattern::from_elements(nl, nn, ldofs.iter().zip(&ndofs).map(|(l, n)| (l.as_slice(), n.as_slice())));
    let mut vk = vec![0.0; pn.nnz()];
    let mut vm = vec![0.0; pn.nnz()];
    let mut vl = vec![0.0; pl.nnz()];
    let mut vb = vec![0.0; pb.nnz()];
    let mut rhs = vec![0.0; nn];
    let mut rhs_grad = vec![0.0; nl];
    let mut grad: HashMap<(usize, usize), f64> = HashMap::new();
    for chunk in (0..ncells).step_by(CHUNK) {
        let end = (chunk + CHUNK).min(ncells);
        let locals: Vec<Local> = par_map(end - chunk, |i| local(chunk + i));
        for (loc, k) in locals.iter().zip(chunk..end) {
            let (nd, ld) = (&ndofs[k], &ldofs[k]);
            for (a, &ia) in nd.iter().enumerate() {
                if ia == usize::MAX {
                    continue;
                }
                rhs[ia] += loc.f[a];
                for (b, &ib) in nd.iter().enumerate() {
                    if ib != usize::MAX {
                        let idx = pn.index(ia, ib);
                        vk[idx] += loc.k[(a, b)];
                        vm[idx] += loc.m[(a, b)];
                    }
                }
            }
            for (a, &ia) in ld.iter().enumerate() {
                if ia == usize::MAX {
                    continue;
                }
                rhs_grad[ia] += loc.g[a];
                for (b, &ib) in ld.iter().enumerate() {
                    if ib != usize::MAX {
                        vl[pl.index(ia, ib)] += loc.l[(a, b)];
                    }
                }
                for (b, &ib) in nd.iter().enumerate() {
                    if ib == usize::MAX {
                        continue;
                    }
                    vb[pb.index(ia, ib)] += loc.b[(a, b)];
                    if gref[(b, a)] != 0.0 {
                        grad.insert((ib, ia), gref[(b, a)]);
                    }
                }
            }
        }
    }
    let mut tg: Vec<(usize, usize, f64)> = grad.into_iter().map(|((r, c), v)| (r, c, v)).collect();
    tg.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

    let free_list = |map: &[Option<usize>]| -> Vec<usize> {
        map.iter().enumerate().filter_map(|(g, f)| f.map(|_| g)).collect()
    };
    Ok(SaddleSystem {
        nedelec_free_dofs: free_list(&nfree),
        lagrange_free_dofs: free_list(&lfree),
        k: SparseMatrix::from_pattern(&pn, vk),
        m: SparseMatrix::from_pattern(&pn, vm),
        b: SparseMatrix::from_pattern(&pb, vb),
        l: SparseMatrix::from_pattern(&pl, vl),
        grad: SparseMatrix::from_triplets(nn, nl, &tg),
        rhs,
        rhs_grad,
        nedelec,
        lagrange,
    })
}
