//! Bulk marking and the solve, estimate, mark, refine loop.

use std::sync::Arc;

use crate::cases::CaseDefinition;
use crate::equilibration::{estimate, EdgeEstimate, EstimatorOptions, Estimates};
use crate::error::Error;
use crate::fe::Essential;
use crate::mesh::{refine_bisection, MeshTopology};
use crate::solver::{assemble_curlcurl_system, energy_error, reference_solution, solve_galerkin, GalerkinSolution, Reference};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    Edge,
    Cell,
}

impl std::str::FromStr for Driver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "edge" => Ok(Driver::Edge),
            "cell" => Ok(Driver::Cell),
            other => Err(format!("unknown driver `{other}`, expected `edge` or `cell`")),
        }
    }
}

/// One row of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRecord {
    pub iter: usize,
    pub p: usize,
    pub nr_dofs: usize,
    pub num_cells: usize,
    pub h_max: f64,
    pub err: f64,
    pub eta_edge_raw: f64,
    pub eta_edge: f64,
    pub eta_cell: f64,
    pub osc_edge: f64,
    pub osc_cell: f64,
    pub eff_edge: f64,
    pub eff_cell: f64,
}

/// Indices of the smallest set of largest values whose squares reach `theta` times the total.
/// Ties are broken by ascending index, so the result does not depend on input order.
pub fn dorfler_mark(values: &[f64], theta: f64) -> Vec<usize> {
    let total: f64 = values.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    let target = theta * total;
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for i in order {
        if acc >= target || values[i] == 0.0 {
            break;
        }
        acc += values[i] * values[i];
        marked.push(i);
    }
    marked
}

/// Cell indicators from edge indicators: every patch cell receives `eta_l^2 / |patch|`.
pub fn spread_edge_indicators(mesh: &MeshTopology, edges: &[EdgeEstimate], with_osc: bool) -> Vec<f64> {
    let mut cell = vec![0.0; mesh.num_cells()];
    for e in edges {
        let cells = &mesh.edge_tets[e.edge];
        let mut v = e.eta * e.eta;
        if with_osc {
            v += e.osc * e.osc;
        }
        let share = v / cells.len() as f64;
        for &k in cells {
            cell[k] += share;
        }
    }
    cell.into_iter().map(f64::sqrt).collect()
}

/// Cell indicators of the equilibrated estimator, `(sum_k (eta_K^k + osc_K^k)^2)^(1/2)`.
pub fn cell_indicators(est: &Estimates, with_osc: bool) -> Vec<f64> {
    est.cells
        .iter()
        .map(|c| {
            (0..3)
                .map(|k| {
                    let v = c.eta[k] + if with_osc { c.osc[k] } else { 0.0 };
                    v * v
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub p: usize,
    pub estimator: EstimatorOptions,
    /// Include oscillation terms in the reported totals.
    pub osc: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            p: 0,
            estimator: EstimatorOptions::default(),
            osc: false,
        }
    }
}

/// Solution, estimates and the summary record of one run on a fixed mesh.
pub struct RunOutcome {
    pub solution: GalerkinSolution,
    pub estimates: Estimates,
    pub record: ConvergenceRecord,
}

/// Energy error against the exact curl when known, otherwise against the degree `p + 2`
/// solution on the same mesh.
pub fn case_error(case: &CaseDefinition, a_h: &crate::fe::DiscreteField) -> Result<f64, Error> {
    match &case.curl_a {
        Some(c) => Ok(energy_error(a_h, Reference::CurlOf(c.as_ref()))),
        None => {
            let mesh = a_h.space.mesh.clone();
            let r = reference_solution(mesh, a_h.space.degree(), case.j.as_ref(), &Essential::Dirichlet)?;
            Ok(energy_error(a_h, Reference::Field(&r.a_h)))
        }
    }
}

pub fn run_on_mesh(case: &CaseDefinition, mesh: Arc<MeshTopology>, opts: &RunOptions, iter: usize) -> Result<RunOutcome, Error> {
    let system = assemble_curlcurl_system(mesh.clone(), opts.p, case.j.as_ref(), &Essential::Dirichlet)?;
    let solution = solve_galerkin(&system)?;
    drop(system);
    let estimates = estimate(&solution.a_h, Some(&solution.multiplier), case.j.as_ref(), &opts.estimator)?;
    let err = case_error(case, &solution.a_h)?;
    let t = estimates.totals;
    let (eta_edge, eta_cell) = if opts.osc {
        (t.eta_edge, t.eta_cell)
    } else {
        (t.eta_edge_no_osc, t.eta_cell_no_osc)
    };
    let record = ConvergenceRecord {
        iter,
        p: opts.p,
        nr_dofs: solution.nr_dofs(),
        num_cells: mesh.num_cells(),
        h_max: mesh.h_max(),
        err,
        eta_edge_raw: t.eta_edge_raw,
        eta_edge,
        eta_cell,
        osc_edge: t.osc_edge,
        osc_cell: t.osc_cell,
        eff_edge: eta_edge / err,
        eff_cell: eta_cell / err,
    };
    Ok(RunOutcome {
        solution,
        estimates,
        record,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptOptions {
    pub run: RunOptions,
    pub driver: Driver,
    pub theta: f64,
    /// Stop once a solve has at least this many dofs.
    pub budget_dofs: usize,
    pub max_iters: usize,
    /// Resolution of the initial mesh.
    pub n0: usize,
}

impl Default for AdaptOptions {
    fn default() -> Self {
        Self {
            run: RunOptions::default(),
            driver: Driver::Cell,
            theta: 0.1,
            budget_dofs: 30_000,
            max_iters: 100,
            n0: 1,
        }
    }
}

/// Runs the adaptive loop from the case's initial mesh. `on_record` sees every row as soon as
/// it is computed.
pub fn adapt_loop(
    case: &CaseDefinition,
    opts: &AdaptOptions,
    mut on_record: impl FnMut(&ConvergenceRecord),
) -> Result<Vec<ConvergenceRecord>, Error> {
    if !(opts.theta > 0.0 && opts.theta < 1.0) {
        return Err(Error::Config(format!("theta {} is outside (0, 1)", opts.theta)));
    }
    let mut mesh = Arc::new((case.mesh)(opts.n0)?);
    let mut records = Vec::new();
    for iter in 0..opts.max_iters.max(1) {
        let out = run_on_mesh(case, mesh.clone(), &opts.run, iter)?;
        on_record(&out.record);
        records.push(out.record);
        if out.record.nr_dofs >= opts.budget_dofs || iter + 1 >= opts.max_iters {
            break;
        }
        let indicators = match opts.driver {
            Driver::Edge => spread_edge_indicators(&mesh, &out.estimates.edges, opts.run.osc),
            Driver::Cell => cell_indicators(&out.estimates, opts.run.osc),
        };
        drop(out);
        let marked = dorfler_mark(&indicators, opts.theta);
        if marked.is_empty() {
            break;
        }
        mesh = Arc::new(refine_bisection(&mesh, &marked)?);
    }
    Ok(records)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
