//! Equilibrated-flux error estimators.
//!
//! For every edge `l` the residual tested with `v psi_l` is represented by a Raviart-Thomas
//! field `sigma_l` on the edge patch, the minimiser of `|| v + psi_l x curl A_h ||` under the
//! constraint `div v = pi_q (psi_l . J - curl psi_l . curl A_h)`. The edge estimator is the
//! value of that minimum. Summing the fields with weights `tau_l . u^k` gives three globally
//! equilibrated fields `S^k`, from which the cellwise estimator follows.

pub mod edge_function;
pub mod patch;
pub mod poincare;

use std::f64::consts::PI;
use std::sync::Arc;

pub use edge_function::{edge_function, lattice_points, Barycentric, CellEdgeFunction, EdgeFunction};
pub use patch::{build_patch_problem, patch_norms, patch_problem_unchecked, solve_patch, PatchFlux, PatchMixedProblem};
pub use poincare::{poincare_constant, smallest_eigenvalue, PoincareMode};

use crate::error::EquilibrationError;
use crate::fe::{evaluate_field, tet_rule, CellMap, DiscreteField, Essential, Family, Query, Space};
use crate::linalg::par_map;
use crate::mesh::{geometry_stats, MeshTopology};
use crate::solver::VectorFn;

#[derive(Debug, Clone, Copy)]
pub struct EstimatorOptions {
    /// Flux degree is `p + degree_offset`; must be at least one.
    pub degree_offset: usize,
    pub poincare: PoincareMode,
    /// Lifting constant `C_L`; one on convex domains.
    pub c_lift: f64,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            degree_offset: 1,
            poincare: PoincareMode::Eigen,
            c_lift: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EdgeEstimate {
    pub edge: usize,
    pub eta: f64,
    pub osc: f64,
    pub c_p: f64,
    pub h: f64,
    /// `||psi||_inf + C_P h ||curl psi||_inf`, a diagnostic of the efficiency constant.
    pub c_cont: f64,
    pub dirichlet_edge: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct CellEstimate {
    pub cell: usize,
    pub eta: [f64; 3],
    pub osc: [f64; 3],
}

/// The three recombined fields `S^k`, in the global Raviart-Thomas space of degree `q`.
#[derive(Debug, Clone)]
pub struct EquilibratedFieldSet {
    pub fields: [DiscreteField; 3],
}

#[derive(Debug, Clone, Copy)]
pub struct EstimatorTotals {
    pub c_lift: f64,
    /// `(sum eta_l^2)^(1/2)`
    pub eta_edge_raw: f64,
    /// `(sum osc_l^2)^(1/2)`
    pub osc_edge: f64,
    /// `sqrt(6) C_L (sum eta_l^2 + osc_l^2)^(1/2)`
    pub eta_edge: f64,
    /// `C_L (sum_K sum_k (eta_K^k + osc_K^k)^2)^(1/2)`
    pub eta_cell: f64,
    /// `(sum_K sum_k (osc_K^k)^2)^(1/2)`
    pub osc_cell: f64,
    /// `sqrt(6) C_L (sum eta_l^2)^(1/2)`, oscillations dropped.
    pub eta_edge_no_osc: f64,
    /// `C_L (sum_K sum_k (eta_K^k)^2)^(1/2)`, oscillations dropped.
    pub eta_cell_no_osc: f64,
}

pub fn totals(edges: &[EdgeEstimate], cells: &[CellEstimate], c_lift: f64) -> EstimatorTotals {
    let eta2: f64 = edges.iter().map(|e| e.eta * e.eta).sum();
    let osc2: f64 = edges.iter().map(|e| e.osc * e.osc).sum();
    let mut with_osc = 0.0;
    let mut plain = 0.0;
    let mut osc_cell = 0.0;
    for c in cells {
        for k in 0..3 {
            with_osc += (c.eta[k] + c.osc[k]).powi(2);
            plain += c.eta[k] * c.eta[k];
            osc_cell += c.osc[k] * c.osc[k];
        }
    }
    let s6 = 6f64.sqrt();
    EstimatorTotals {
        c_lift,
        eta_edge_raw: eta2.sqrt(),
        osc_edge: osc2.sqrt(),
        eta_edge: s6 * c_lift * (eta2 + osc2).sqrt(),
        eta_cell: c_lift * with_osc.sqrt(),
        osc_cell: osc_cell.sqrt(),
        eta_edge_no_osc: s6 * c_lift * eta2.sqrt(),
        eta_cell_no_osc: c_lift * plain.sqrt(),
    }
}

/// Estimator and oscillation of one edge from its solved patch problem.
pub fn edge_estimate(
    mesh: &MeshTopology,
    problem: &PatchMixedProblem,
    flux: &PatchFlux,
    mode: PoincareMode,
) -> Result<EdgeEstimate, EquilibrationError> {
    let (eta, dev) = patch_norms(mesh, problem, flux);
    let c_p = poincare_constant(mesh, &problem.patch, mode)?;
    let h = problem.patch.h;
    Ok(EdgeEstimate {
        edge: problem.patch.edge,
        eta,
        osc: c_p * h * dev,
        c_p,
        h,
        c_cont: problem.function.sup_value + c_p * h * problem.function.sup_curl,
        dirichlet_edge: problem.patch.dirichlet_edge,
    })
}

/// Solves every patch problem. Returns the edge estimates and fluxes in edge order.
pub fn solve_all_patches(
    a_h: &DiscreteField,
    phi: Option<&DiscreteField>,
    j: &VectorFn,
    rt: &Space,
    mode: PoincareMode,
) -> Result<(Vec<EdgeEstimate>, Vec<PatchFlux>), EquilibrationError> {
    let mesh = &a_h.space.mesh;
    let results = par_map(mesh.num_edges(), |e| -> Result<_, EquilibrationError> {
        let problem = build_patch_problem(a_h, phi, j, e, rt)?;
        let flux = solve_patch(mesh, &problem)?;
        let est = edge_estimate(mesh, &problem, &flux, mode)?;
        Ok((est, flux))
    });
    let mut estimates = Vec::with_capacity(results.len());
    let mut fluxes = Vec::with_capacity(results.len());
    for r in results {
        let (e, f) = r?;
        estimates.push(e);
        fluxes.push(f);
    }
    Ok((estimates, fluxes))
}

/// `S^k = sum_l (tau_l . u^k) sigma_l`, accumulated in ascending edge order.
pub fn assemble_equilibrated_fields(
    mesh: &Arc<MeshTopology>,
    rt: &Arc<Space>,
    fluxes: &[PatchFlux],
) -> Result<EquilibratedFieldSet, EquilibrationError> {
    let q = rt.degree();
    let mut order: Vec<&PatchFlux> = fluxes.iter().collect();
    order.sort_by_key(|f| f.edge);
    let mut coeffs = [vec![0.0; rt.num_dofs()], vec![0.0; rt.num_dofs()], vec![0.0; rt.num_dofs()]];
    for flux in order {
        if flux.degree != q {
            return Err(EquilibrationError::DegreeMismatch { expected: q, found: flux.degree });
        }
        let tau = mesh.tangent(flux.edge);
        for (k, c) in coeffs.iter_mut().enumerate() {
            if tau[k] == 0.0 {
                continue;
            }
            for (&g, &v) in flux.flux_dofs.iter().zip(&flux.coeffs) {
                c[g] += tau[k] * v;
            }
        }
    }
    let [c0, c1, c2] = coeffs;
    Ok(EquilibratedFieldSet {
        fields: [
            DiscreteField::new(rt.clone(), c0),
            DiscreteField::new(rt.clone(), c1),
            DiscreteField::new(rt.clone(), c2),
        ],
    })
}

/// `u^k x c` for the canonical basis vector `u^k`.
#[inline]
pub fn unit_cross(k: usize, c: [f64; 3]) -> [f64; 3] {
    match k {
        0 => [0.0, -c[2], c[1]],
        1 => [c[2], 0.0, -c[0]],
        _ => [-c[1], c[0], 0.0],
    }
}

/// `eta_K^k = || u^k x curl A_h + S^k ||_K` and `osc_K^k = h_K / pi || div S^k - J_k ||_K`.
pub fn cell_estimates(fields: &EquilibratedFieldSet, a_h: &DiscreteField, j: &VectorFn) -> Result<Vec<CellEstimate>, EquilibrationError> {
    let mesh = &a_h.space.mesh;
    let q = fields.fields[0].space.degree();
    let rule = tet_rule(patch::patch_quadrature_order(a_h.space.degree(), q))?;
    let out = par_map(mesh.num_cells(), |c| -> Result<CellEstimate, EquilibrationError> {
        let map = CellMap::new(mesh, c);
        let ad = map.abs_det();
        let h = geometry_stats(mesh, c).map(|g| g.h).unwrap_or(0.0);
        let curl = evaluate_field(a_h, c, &rule.points, Query::Curl)?;
        let jv: Vec<[f64; 3]> = rule.points.iter().map(|x| j(&map.to_physical(x))).collect();
        let mut eta = [0.0; 3];
        let mut osc = [0.0; 3];
        for k in 0..3 {
            let s = evaluate_field(&fields.fields[k], c, &rule.points, Query::Value)?;
            let d = evaluate_field(&fields.fields[k], c, &rule.points, Query::Div)?;
            let (mut e2, mut o2) = (0.0, 0.0);
            for (qp, w) in rule.weights.iter().enumerate() {
                let u = unit_cross(k, curl[qp]);
                let v = [u[0] + s[qp][0], u[1] + s[qp][1], u[2] + s[qp][2]];
                e2 += w * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
                o2 += w * (d[qp][0] - jv[qp][k]).powi(2);
            }
            eta[k] = (e2 * ad).sqrt();
            osc[k] = h / PI * (o2 * ad).sqrt();
        }
        Ok(CellEstimate { cell: c, eta, osc })
    });
    out.into_iter().collect()
}

/// Everything the estimators produce for one Galerkin solution.
#[derive(Debug, Clone)]
pub struct Estimates {
    pub degree: usize,
    pub edges: Vec<EdgeEstimate>,
    pub cells: Vec<CellEstimate>,
    pub fields: EquilibratedFieldSet,
    pub totals: EstimatorTotals,
}

/// Runs both estimators for `a_h`, the Galerkin solution for the source `j`, with `phi` the
/// discrete multiplier of that solve when available.
pub fn estimate(
    a_h: &DiscreteField,
    phi: Option<&DiscreteField>,
    j: &VectorFn,
    opts: &EstimatorOptions,
) -> Result<Estimates, EquilibrationError> {
    let mesh = a_h.space.mesh.clone();
    let q = a_h.space.degree() + opts.degree_offset.max(1);
    let rt = Arc::new(Space::new(mesh.clone(), Family::RaviartThomas, q, &Essential::None)?);
    let (edges, fluxes) = solve_all_patches(a_h, phi, j, &rt, opts.poincare)?;
    let fields = assemble_equilibrated_fields(&mesh, &rt, &fluxes)?;
    drop(fluxes);
    let cells = cell_estimates(&fields, a_h, j)?;
    let totals = totals(&edges, &cells, opts.c_lift);
    Ok(Estimates {
        degree: q,
        edges,
        cells,
        fields,
        totals,
    })
}
