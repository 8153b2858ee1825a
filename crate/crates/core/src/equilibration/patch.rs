use std::collections::HashMap;

use nalgebra::Vector3;

use super::edge_function::{edge_function, EdgeFunction};
use crate::error::EquilibrationError;
use crate::fe::tensors::{reference_tensor, Part};
use crate::fe::{
    evaluate_field, reference_element, tet_rule, CellMap, DiscreteField, Family, PiecewisePolynomial, QuadratureRule,
    Query, Space,
};
use crate::linalg::{norm_inf, SparseLu, SparseMatrix};
use crate::mesh::{edge_patch, EdgePatch, MeshTopology};
use crate::solver::VectorFn;

/// Relative tolerance on the mean of the divergence datum for edges away from the Dirichlet
/// boundary.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

/// Quadrature order used on patches: exact for the polynomial integrands and matching the
/// source quadrature of the Galerkin assembly.
pub fn patch_quadrature_order(p: usize, q: usize) -> usize {
    (2 * q + 4).max(2 * p + 10)
}

/// Data of the local minimisation on one edge patch.
#[derive(Debug, Clone)]
pub struct PatchMixedProblem {
    pub patch: EdgePatch,
    pub function: EdgeFunction,
    /// Flux degree `q`.
    pub degree: usize,
    /// Global Raviart-Thomas dof of every patch flux unknown.
    pub flux_dofs: Vec<usize>,
    /// Per patch cell, the patch flux index of every local dof (`usize::MAX` if constrained).
    pub cell_map: Vec<Vec<usize>>,
    /// Projected divergence datum `r`.
    pub r: PiecewisePolynomial,
    pub rule: &'static QuadratureRule,
    /// `g = psi x curl A_h` at the quadrature points of every patch cell.
    pub g: Vec<Vec<[f64; 3]>>,
    /// `psi . J - curl psi . curl A_h` at the quadrature points.
    pub s: Vec<Vec<f64>>,
    /// `(r, 1)` over the patch.
    pub mean: f64,
    /// `(|psi . J| + |curl psi . curl A_h|, 1)`, the size the mean is compared against.
    pub mean_scale: f64,
}

impl PatchMixedProblem {
    /// Interior edges need a mean-value multiplier; edges on the Dirichlet boundary do not.
    pub fn needs_mean_constraint(&self) -> bool {
        !self.patch.dirichlet_edge
    }
}

/// The minimiser on one patch, as coefficients of the global Raviart-Thomas space.
#[derive(Debug, Clone)]
pub struct PatchFlux {
    pub edge: usize,
    pub degree: usize,
    pub flux_dofs: Vec<usize>,
    pub coeffs: Vec<f64>,
    /// Relative residual of the mixed system.
    pub residual: f64,
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Sets up the local problem of `edge` for the Galerkin solution `a_h`. `rt` is the global
/// Raviart-Thomas space of degree `q` without constraints.
///
/// `phi` is the discrete multiplier of the Galerkin solve. It vanishes up to quadrature error
/// of `(J, grad q)`; subtracting its gradient from `J` makes the mean condition on interior
/// patches hold to solver precision. On divergence-free test fields the two residuals agree.
pub fn build_patch_problem(
    a_h: &DiscreteField,
    phi: Option<&DiscreteField>,
    j: &VectorFn,
    edge: usize,
    rt: &Space,
) -> Result<PatchMixedProblem, EquilibrationError> {
    let problem = patch_problem_unchecked(a_h, phi, j, edge, rt)?;
    let mean = problem.mean;
    if problem.needs_mean_constraint() && mean.abs() > COMPATIBILITY_TOL * problem.mean_scale.max(f64::MIN_POSITIVE) {
        return Err(EquilibrationError::CompatibilityViolation { edge, mean });
    }
    Ok(problem)
}

/// [`build_patch_problem`] without the mean check, for data that need not come from a
/// Galerkin solve.
pub fn patch_problem_unchecked(
    a_h: &DiscreteField,
    phi: Option<&DiscreteField>,
    j: &VectorFn,
    edge: usize,
    rt: &Space,
) -> Result<PatchMixedProblem, EquilibrationError> {
    let mesh: &MeshTopology = &a_h.space.mesh;
    let p = a_h.space.degree();
    let q = rt.degree();
    if q < p + 1 {
        return Err(EquilibrationError::DegreeMismatch { expected: p + 1, found: q });
    }
    let patch = edge_patch(mesh, edge);
    let function = edge_function(mesh, edge);

    let mut free_face: HashMap<usize, bool> = HashMap::new();
    for f in patch.boundary_faces(mesh) {
        free_face.insert(f, patch.gamma_faces.contains(&f));
    }
    let nf = rt.element.entity_dofs[2];
    let face_dofs_end = nf * mesh.num_faces();
    let mut index: HashMap<usize, usize> = HashMap::new();
    let mut flux_dofs = Vec::new();
    let mut cell_map = Vec::with_capacity(patch.cells.len());
    for &k in &patch.cells {
        let mut local = Vec::with_capacity(rt.element.dim);
        for &g in rt.dofmap.cell_dofs(k) {
            let constrained = g < face_dofs_end && free_face.get(&(g / nf)) == Some(&false);
            if constrained {
                local.push(usize::MAX);
                continue;
            }
            let next = flux_dofs.len();
            let id = *index.entry(g).or_insert(next);
            if id == next {
                flux_dofs.push(g);
            }
            local.push(id);
        }
        cell_map.push(local);
    }

    let rule = tet_rule(patch_quadrature_order(p, q))?;
    let dg = reference_element(Family::DiscontinuousP, q)?;
    let dg_tab = dg.tabulate(&rule.points);
    let ndg = dg.dim;
    let mut g = Vec::with_capacity(patch.cells.len());
    let mut s = Vec::with_capacity(patch.cells.len());
    let mut coeffs = vec![0.0; patch.cells.len() * ndg];
    let (mut mean, mut mean_scale) = (0.0, 0.0);
    for (i, (&k, piece)) in patch.cells.iter().zip(&function.pieces).enumerate() {
        let map = CellMap::new(mesh, k);
        let ad = map.abs_det();
        let curl_a = evaluate_field(a_h, k, &rule.points, Query::Curl)?;
        let curl_psi = piece.curl();
        let grad_phi = match phi {
            Some(f) => Some(evaluate_field(f, k, &rule.points, Query::Grad)?),
            None => None,
        };
        let mut gk = Vec::with_capacity(rule.len());
        let mut sk = Vec::with_capacity(rule.len());
        for (qp, (x, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let psi = piece.value(x);
            let mut jv = j(&map.to_physical(x));
            if let Some(gp) = &grad_phi {
                for c in 0..3 {
                    jv[c] -= gp[qp][c];
                }
            }
            let a = dot3(psi, jv);
            let b = dot3(curl_psi, curl_a[qp]);
            gk.push(cross3(psi, curl_a[qp]));
            sk.push(a - b);
            mean_scale += w * ad * (a.abs() + b.abs());
            // orthonormal reference basis: the |det| of the integral and of the mass cancel
            for jj in 0..ndg {
                coeffs[i * ndg + jj] += w * (a - b) * dg_tab.value(qp, jj)[0];
            }
        }
        g.push(gk);
        s.push(sk);
        let ci = &coeffs[i * ndg..(i + 1) * ndg];
        for (qp, w) in rule.weights.iter().enumerate() {
            let r: f64 = (0..ndg).map(|jj| ci[jj] * dg_tab.value(qp, jj)[0]).sum();
            mean += w * ad * r;
        }
    }
    let r = PiecewisePolynomial {
        degree: q,
        ncomp: 1,
        cells: patch.cells.clone(),
        coeffs,
    };
    Ok(PatchMixedProblem {
        patch,
        function,
        degree: q,
        flux_dofs,
        cell_map,
        r,
        rule,
        g,
        s,
        mean,
        mean_scale,
    })
}

/// Solves the local mixed system
///
/// ```text
/// (sigma, v) + (lambda, div v)          = -(g, v)
/// (div sigma, w)           + mu (1, w)  = (r, w)
/// (lambda, 1)                           = 0        (interior edges only)
/// ```
///
/// by sparse LU. At the solution `mu` vanishes up to the compatibility tolerance.
pub fn solve_patch(mesh: &MeshTopology, problem: &PatchMixedProblem) -> Result<PatchFlux, EquilibrationError> {
    let q = problem.degree;
    let edge = problem.patch.edge;
    let rt = reference_element(Family::RaviartThomas, q)?;
    let dg = reference_element(Family::DiscontinuousP, q)?;
    let t_mass = reference_tensor((Family::RaviartThomas, q, Part::Value), (Family::RaviartThomas, q, Part::Value))?;
    let t_div = reference_tensor((Family::DiscontinuousP, q, Part::Value), (Family::RaviartThomas, q, Part::Deriv))?;
    let rule = problem.rule;
    let rt_tab = rt.tabulate(&rule.points);
    let dg_tab = dg.tabulate(&rule.points);
    let ndg = dg.dim;
    let dg_means: Vec<f64> = (0..ndg)
        .map(|jj| rule.weights.iter().enumerate().map(|(qp, w)| w * dg_tab.value(qp, jj)[0]).sum())
        .collect();

    let nsig = problem.flux_dofs.len();
    let ncells = problem.patch.cells.len();
    let nlam = ncells * ndg;
    let mean_row = problem.needs_mean_constraint();
    let n = nsig + nlam + usize::from(mean_row);
    let mut t = Vec::new();
    let mut rhs = vec![0.0; n];
    for (i, &k) in problem.patch.cells.iter().enumerate() {
        let map = CellMap::new(mesh, k);
        let ad = map.abs_det();
        let sign = map.det.signum();
        let metric = map.jac.transpose() * map.jac;
        let m = t_mass.contract(&metric, 1.0 / ad);
        let d = t_div.scalar(sign);
        let local = &problem.cell_map[i];
        for (a, &ia) in local.iter().enumerate() {
            if ia == usize::MAX {
                continue;
            }
            for (b, &ib) in local.iter().enumerate() {
                if ib != usize::MAX {
                    t.push((ia, ib, m[(a, b)]));
                }
            }
            for jj in 0..ndg {
                let row = nsig + i * ndg + jj;
                let v = d[(jj, a)];
                if v != 0.0 {
                    t.push((row, ia, v));
                    t.push((ia, row, v));
                }
            }
            // -(g, v_a) with v_a = J v_hat / det
            let mut s = 0.0;
            for (qp, w) in rule.weights.iter().enumerate() {
                let pulled = map.jac.transpose() * Vector3::from(problem.g[i][qp]);
                let vh = rt_tab.value(qp, a);
                s += w * (pulled[0] * vh[0] + pulled[1] * vh[1] + pulled[2] * vh[2]);
            }
            rhs[ia] -= sign * s;
        }
        for jj in 0..ndg {
            let row = nsig + i * ndg + jj;
            rhs[row] = ad * problem.r.cell_component(i, 0)[jj];
            if mean_row {
                t.push((row, n - 1, ad * dg_means[jj]));
                t.push((n - 1, row, ad * dg_means[jj]));
            }
        }
    }
    let a = SparseMatrix::from_triplets(n, n, &t);
    let x = SparseLu::new(&a)
        .map_err(|_| EquilibrationError::SingularPatchSystem(edge))?
        .solve(&rhs);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(EquilibrationError::SingularPatchSystem(edge));
    }
    let ax = a.mul_vec(&x);
    let res: Vec<f64> = ax.iter().zip(&rhs).map(|(u, v)| u - v).collect();
    let scale = norm_inf(&rhs).max(a.max_abs() * norm_inf(&x));
    let residual = if scale > 0.0 { norm_inf(&res) / scale } else { 0.0 };
    if residual > 1e-8 {
        return Err(EquilibrationError::SingularPatchSystem(edge));
    }
    Ok(PatchFlux {
        edge,
        degree: q,
        flux_dofs: problem.flux_dofs.clone(),
        coeffs: x[..nsig].to_vec(),
        residual,
    })
}

/// Local coefficients of a patch flux on the `i`-th patch cell.
pub fn cell_flux_coeffs(problem: &PatchMixedProblem, flux: &PatchFlux, i: usize) -> Vec<f64> {
    problem.cell_map[i]
        .iter()
        .map(|&ia| if ia == usize::MAX { 0.0 } else { flux.coeffs[ia] })
        .collect()
}

/// Values and divergences of a patch flux at the quadrature points of the `i`-th patch cell.
pub fn flux_at_points(mesh: &MeshTopology, problem: &PatchMixedProblem, flux: &PatchFlux, i: usize) -> Vec<([f64; 3], f64)> {
    let rt = reference_element(Family::RaviartThomas, problem.degree).expect("degree checked at build");
    let tab = rt.tabulate(&problem.rule.points);
    let c = cell_flux_coeffs(problem, flux, i);
    let map = CellMap::new(mesh, problem.patch.cells[i]);
    (0..problem.rule.len())
        .map(|qp| {
            let (mut v, mut d) = ([0.0; 3], 0.0);
            for (a, ca) in c.iter().enumerate() {
                if *ca == 0.0 {
                    continue;
                }
                let vh = tab.value(qp, a);
                for x in 0..3 {
                    v[x] += ca * vh[x];
                }
                d += ca * tab.deriv(qp, a)[0];
            }
            (map.push_value(Family::RaviartThomas, v), d / map.det)
        })
        .collect()
}

/// `|| sigma + psi x curl A_h ||` over the patch and `|| s - r ||`, where `s - r` equals
/// `psi . J - pi_q (psi . J)` because `curl psi . curl A_h` is a polynomial of degree `p <= q`.
pub fn patch_norms(mesh: &MeshTopology, problem: &PatchMixedProblem, flux: &PatchFlux) -> (f64, f64) {
    let dg = reference_element(Family::DiscontinuousP, problem.degree).expect("degree checked at build");
    let dg_tab = dg.tabulate(&problem.rule.points);
    let (mut eta2, mut osc2) = (0.0, 0.0);
    for (i, &k) in problem.patch.cells.iter().enumerate() {
        let ad = CellMap::new(mesh, k).abs_det();
        let vals = flux_at_points(mesh, problem, flux, i);
        let rc = problem.r.cell_component(i, 0);
        for (qp, w) in problem.rule.weights.iter().enumerate() {
            let (v, _) = vals[qp];
            let g = problem.g[i][qp];
            let e = [v[0] + g[0], v[1] + g[1], v[2] + g[2]];
            eta2 += w * ad * dot3(e, e);
            let r: f64 = rc.iter().enumerate().map(|(jj, c)| c * dg_tab.value(qp, jj)[0]).sum();
            osc2 += w * ad * (problem.s[i][qp] - r).powi(2);
        }
    }
    (eta2.sqrt(), osc2.sqrt())
}
