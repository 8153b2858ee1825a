//! Galerkin solve of the gauged curl-curl problem.
//!
//! Find `A_h` in `N_p` with zero tangential trace on the Dirichlet boundary and a
//! multiplier `phi_h` in `P_{p+1}` such that
//!
//! ```text
//! (curl A_h, curl v) + (v, grad phi_h) = (J, v)
//! (A_h, grad q)                        = 0
//! ```
//!
//! The default solver never factors the indefinite matrix. Writing `G` for the discrete
//! gradient (`grad P_{p+1}` lies inside `N_p`), `B = G^T M` and `G^T B^T = L` is the
//! Lagrange stiffness matrix, so the multiplier solves `L phi = G^T f`. The remaining
//! right-hand side is orthogonal to the kernel of `K`, hence `(K + eps M) u = f - B^T phi`
//! has the exact solution up to `O(eps)`; a few refinement sweeps remove that bias and a
//! final projection `u -= G L^{-1} B u` enforces the gauge. Both steps use sparse Cholesky.
//! [`SolveMethod::SaddleLu`] factors the full block matrix with sparse LU instead and is
//! kept as a cross-check.

mod assembly;

use std::sync::Arc;
use std::time::Instant;

pub use assembly::{assemble_curlcurl_system, SaddleSystem};

use crate::error::SolverError;
use crate::fe::{evaluate_field, tet_rule, CellMap, DiscreteField, Query};
use crate::linalg::{dot, norm_inf, par_map, Cholesky, SparseLu, SparseMatrix};
use crate::mesh::MeshTopology;

/// A vector field given as a closure of the physical point.
pub type VectorFn = dyn Fn(&[f64; 3]) -> [f64; 3] + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    GaugedCholesky,
    SaddleLu,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub method: SolveMethod,
    /// Regularisation as a multiple of `1 / diam(Omega)^2`.
    pub regularization: f64,
    pub max_refinement_steps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: SolveMethod::GaugedCholesky,
            regularization: 1e-4,
            max_refinement_steps: 6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveStats {
    pub method: SolveMethod,
    pub nedelec_free: usize,
    pub lagrange_free: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct GalerkinSolution {
    pub a_h: DiscreteField,
    pub multiplier: DiscreteField,
    /// `|f - K u - B^T phi|_inf / |f|_inf`.
    pub galerkin_residual: f64,
    /// `|B u|_inf` relative to the size of `B` and `u`.
    pub gauge_residual: f64,
    pub stats: SolveStats,
}

impl GalerkinSolution {
    /// Number of unconstrained Nedelec dofs.
    pub fn nr_dofs(&self) -> usize {
        self.stats.nedelec_free
    }
}

fn domain_diameter(mesh: &MeshTopology) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in &mesh.vertices {
        for c in 0..3 {
            lo[c] = lo[c].min(v[c]);
            hi[c] = hi[c].max(v[c]);
        }
    }
    ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2) + (hi[2] - lo[2]).powi(2)).sqrt()
}

pub fn solve_galerkin(system: &SaddleSystem) -> Result<GalerkinSolution, SolverError> {
    solve_galerkin_with(system, &SolveOptions::default())
}

pub fn solve_galerkin_with(system: &SaddleSystem, opts: &SolveOptions) -> Result<GalerkinSolution, SolverError> {
    let start = Instant::now();
    let (u, phi) = match opts.method {
        SolveMethod::GaugedCholesky => solve_gauged(system, opts)?,
        SolveMethod::SaddleLu => solve_saddle_lu(system)?,
    };
    let f = &system.rhs;
    let mut r = system.k.mul_vec(&u);
    let bt_phi = system.b.mul_t_vec(&phi);
    for i in 0..r.len() {
        r[i] = f[i] - r[i] - bt_phi[i];
    }
    let fscale = norm_inf(f);
    let galerkin_residual = if fscale > 0.0 { norm_inf(&r) / fscale } else { norm_inf(&r) };
    let bu = system.b.mul_vec(&u);
    let uscale = system.b.max_abs() * norm_inf(&u);
    let gauge_residual = if uscale > 0.0 { norm_inf(&bu) / uscale } else { norm_inf(&bu) };

    let a_h = system.nedelec_field(&u);
    let multiplier = system.lagrange_field(&phi);
    Ok(GalerkinSolution {
        a_h,
        multiplier,
        galerkin_residual,
        gauge_residual,
        stats: SolveStats {
            method: opts.method,
            nedelec_free: u.len(),
            lagrange_free: phi.len(),
            seconds: start.elapsed().as_secs_f64(),
        },
    })
}

fn solve_gauged(system: &SaddleSystem, opts: &SolveOptions) -> Result<(Vec<f64>, Vec<f64>), SolverError> {
    let n = system.rhs.len();
    if n == 0 {
        return Ok((Vec::new(), vec![0.0; system.rhs_grad.len()]));
    }
    let lchol = Cholesky::new(&system.l)?;
    let phi = lchol.solve(&system.rhs_grad);
    let bt_phi = system.b.mul_t_vec(&phi);
    let f: Vec<f64> = system.rhs.iter().zip(&bt_phi).map(|(a, b)| a - b).collect();

    let eps = opts.regularization / domain_diameter(&system.nedelec.mesh).powi(2);
    let reg = system.k.add_scaled(1.0, &system.m, eps);
    let chol = Cholesky::new(&reg)?;
    let mut u = chol.solve(&f);
    let fnorm = norm_inf(&f);
    for _ in 0..opts.max_refinement_steps {
        let ku = system.k.mul_vec(&u);
        let r: Vec<f64> = f.iter().zip(&ku).map(|(a, b)| a - b).collect();
        if fnorm == 0.0 || norm_inf(&r) <= 1e-14 * fnorm {
            break;
        }
        let du = chol.solve(&r);
        for (x, d) in u.iter_mut().zip(&du) {
            *x += d;
        }
    }
    // remove the discrete-gradient part left over from roundoff
    let s = lchol.solve(&system.b.mul_vec(&u));
    let gs = system.grad.mul_vec(&s);
    for (x, g) in u.iter_mut().zip(&gs) {
        *x -= g;
    }
    Ok((u, phi))
}

fn solve_saddle_lu(system: &SaddleSystem) -> Result<(Vec<f64>, Vec<f64>), SolverError> {
    let (n, m) = (system.rhs.len(), system.rhs_grad.len());
    let a = system.matrix();
    let mut b = system.rhs.clone();
    b.extend(std::iter::repeat(0.0).take(m));
    if n + m == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let x = SparseLu::new(&a)?.solve(&b);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::SingularSystem("non-finite saddle solution".into()));
    }
    Ok((x[..n].to_vec(), x[n..].to_vec()))
}

/// Galerkin solution at degree `p + 2` on the same mesh, used as the error reference when no
/// analytic solution is known.
pub fn reference_solution(
    mesh: Arc<MeshTopology>,
    p: usize,
    j: &VectorFn,
    essential: &crate::fe::Essential,
) -> Result<GalerkinSolution, SolverError> {
    let system = assemble_curlcurl_system(mesh, p + 2, j, essential)?;
    solve_galerkin(&system)
}

/// What the discrete solution is compared against.
pub enum Reference<'a> {
    /// Analytic curl of the exact solution.
    CurlOf(&'a VectorFn),
    /// A discrete field on the same mesh.
    Field(&'a DiscreteField),
}

/// `|| curl (reference - A_h) ||` over the whole domain.
pub fn energy_error(a_h: &DiscreteField, reference: Reference<'_>) -> f64 {
    cellwise_energy_error(a_h, reference).iter().sum::<f64>().sqrt()
}

/// Squared curl error per cell.
pub fn cellwise_energy_error(a_h: &DiscreteField, reference: Reference<'_>) -> Vec<f64> {
    let mesh = &a_h.space.mesh;
    let p = a_h.space.degree();
    let order = match &reference {
        Reference::CurlOf(_) => 2 * p + 8,
        Reference::Field(f) => {
            assert!(Arc::ptr_eq(&f.space.mesh, mesh) || f.space.mesh.num_cells() == mesh.num_cells());
            2 * p.max(f.space.degree()) + 4
        }
    };
    let rule = tet_rule(order).expect("quadrature order within range");
    par_map(mesh.num_cells(), |k| {
        let map = CellMap::new(mesh, k);
        let ch = evaluate_field(a_h, k, &rule.points, Query::Curl).expect("Nedelec field");
        let cr: Vec<[f64; 3]> = match &reference {
            Reference::CurlOf(c) => rule.points.iter().map(|x| c(&map.to_physical(x))).collect(),
            Reference::Field(f) => evaluate_field(f, k, &rule.points, Query::Curl).expect("Nedelec field"),
        };
        let mut s = 0.0;
        for (q, w) in rule.weights.iter().enumerate() {
            let d = [cr[q][0] - ch[q][0], cr[q][1] - ch[q][1], cr[q][2] - ch[q][2]];
            s += w * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        }
        s * map.abs_det()
    })
}

/// `(curl u, curl u)` from the stiffness matrix, for free coefficient vectors.
pub fn curl_energy(k: &SparseMatrix, u: &[f64]) -> f64 {
    dot(u, &k.mul_vec(u)).max(0.0).sqrt()
}

#[cfg(test)]
mod tests;
