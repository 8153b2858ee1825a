//! Run configurations behind the command-line tool and their CSV output.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::adaptivity::{adapt_loop, run_on_mesh, AdaptOptions, ConvergenceRecord, Driver, RunOptions};
use crate::cases::{case_by_name, CaseDefinition};
use crate::equilibration::{EstimatorOptions, PoincareMode};
use crate::error::{CaseError, Error, MeshError};
use crate::mesh::{read_medit, refine_uniform, MeshTopology, RefLabels};

pub const STUDY_HEADER: &str = "h,p,nr_dofs,err,etae_raw,etae,etac,osce,oscc,eff_edge,eff_cell";
pub const ADAPT_HEADER: &str = "iter,nr_dofs,h_max,err,etae,etac,eff_edge,eff_cell";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Single,
    HConv,
    PConv,
    Adapt,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(Mode::Single),
            "hconv" => Ok(Mode::HConv),
            "pconv" => Ok(Mode::PConv),
            "adapt" => Ok(Mode::Adapt),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub case: String,
    pub mode: Mode,
    pub p: usize,
    /// Flux degree offset `q - p`.
    pub q_offset: usize,
    pub n: usize,
    pub levels: usize,
    pub pmax: usize,
    pub driver: Driver,
    pub theta: f64,
    pub budget_dofs: usize,
    pub max_iters: usize,
    pub c_lift: f64,
    pub osc: bool,
    pub poincare: PoincareMode,
    pub mesh_in: Option<std::path::PathBuf>,
    pub dirichlet_refs: Option<Vec<i64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            case: "cube".into(),
            mode: Mode::Single,
            p: 0,
            q_offset: 1,
            n: 2,
            levels: 3,
            pmax: 3,
            driver: Driver::Cell,
            theta: 0.1,
            budget_dofs: 30_000,
            max_iters: 100,
            c_lift: 1.0,
            osc: false,
            poincare: PoincareMode::Eigen,
            mesh_in: None,
            dirichlet_refs: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad(format!("theta {} is outside (0, 1)", self.theta));
        }
        if self.budget_dofs == 0 || self.max_iters == 0 {
            return bad("budget must be positive".into());
        }
        if self.n == 0 || self.levels == 0 {
            return bad("n and levels must be positive".into());
        }
        if self.q_offset == 0 {
            return bad("flux degree offset must be at least one".into());
        }
        if self.mode == Mode::PConv && self.pmax < self.p {
            return bad(format!("pmax {} is below p {}", self.pmax, self.p));
        }
        if !(self.c_lift.is_finite() && self.c_lift > 0.0) {
            return bad(format!("lifting constant {} must be positive", self.c_lift));
        }
        if self.p > 6 || self.p + self.q_offset > 8 || (self.mode == Mode::PConv && self.pmax > 6) {
            return bad("polynomial degree out of the supported range".into());
        }
        Ok(())
    }

    fn run_options(&self, p: usize) -> RunOptions {
        RunOptions {
            p,
            estimator: EstimatorOptions {
                degree_offset: self.q_offset,
                poincare: self.poincare,
                c_lift: self.c_lift,
            },
            osc: self.osc,
        }
    }

    fn initial_mesh(&self, case: &CaseDefinition, n: usize) -> Result<MeshTopology, Error> {
        match &self.mesh_in {
            Some(path) => {
                let refs = match &self.dirichlet_refs {
                    Some(list) => RefLabels::DirichletSet(list.clone()),
                    None => RefLabels::AllDirichlet,
                };
                Ok(read_medit(path, &refs)?)
            }
            None => Ok((case.mesh)(n)?),
        }
    }
}

/// Formats with 12 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn study_row(r: &ConvergenceRecord) -> String {
    let f = fmt_num;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        f(r.h_max),
        r.p,
        r.nr_dofs,
        f(r.err),
        f(r.eta_edge_raw),
        f(r.eta_edge),
        f(r.eta_cell),
        f(r.osc_edge),
        f(r.osc_cell),
        f(r.eff_edge),
        f(r.eff_cell)
    )
}

pub fn adapt_row(r: &ConvergenceRecord) -> String {
    let f = fmt_num;
    format!(
        "{},{},{},{},{},{},{},{}",
        r.iter,
        r.nr_dofs,
        f(r.h_max),
        f(r.err),
        f(r.eta_edge),
        f(r.eta_cell),
        f(r.eff_edge),
        f(r.eff_cell)
    )
}

/// Output of a run: the records and the CSV text.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<ConvergenceRecord>,
    pub csv: String,
}

/// Executes a configuration. `progress` receives every record as it is produced.
pub fn run(config: &RunConfig, mut progress: impl FnMut(&ConvergenceRecord)) -> Result<RunOutput, Error> {
    config.validate()?;
    let case = case_by_name(&config.case)?;
    if config.mesh_in.is_some() && config.mode == Mode::HConv {
        return Err(Error::Config("hconv builds its own meshes; drop --mesh-in".into()));
    }
    let mut records = Vec::new();
    match config.mode {
        Mode::Single => {
            let mesh = Arc::new(config.initial_mesh(&case, config.n)?);
            let out = run_on_mesh(&case, mesh, &config.run_options(config.p), 0)?;
            progress(&out.record);
            records.push(out.record);
        }
        Mode::HConv => {
            let mut mesh = (case.mesh)(config.n)?;
            for level in 0..config.levels {
                if level > 0 {
                    mesh = refine_uniform(&mesh);
                }
                let out = run_on_mesh(&case, Arc::new(mesh.clone()), &config.run_options(config.p), level)?;
                progress(&out.record);
                records.push(out.record);
            }
        }
        Mode::PConv => {
            let mesh = Arc::new(config.initial_mesh(&case, config.n)?);
            for (i, p) in (config.p..=config.pmax).enumerate() {
                let out = run_on_mesh(&case, mesh.clone(), &config.run_options(p), i)?;
                progress(&out.record);
                records.push(out.record);
            }
        }
        Mode::Adapt => {
            let opts = AdaptOptions {
                run: config.run_options(config.p),
                driver: config.driver,
                theta: config.theta,
                budget_dofs: config.budget_dofs,
                max_iters: config.max_iters,
                n0: config.n,
            };
            records = match &config.mesh_in {
                Some(_) => {
                    let mesh = config.initial_mesh(&case, config.n)?;
                    let fixed = CaseDefinition {
                        mesh: Box::new(move |_| Ok(mesh.clone())),
                        ..case
                    };
                    adapt_loop(&fixed, &opts, &mut progress)?
                }
                None => adapt_loop(&case, &opts, &mut progress)?,
            };
        }
    }
    let mut csv = String::new();
    let (header, row): (&str, fn(&ConvergenceRecord) -> String) = match config.mode {
        Mode::Adapt => (ADAPT_HEADER, adapt_row),
        _ => (STUDY_HEADER, study_row),
    };
    csv.push_str(header);
    csv.push('\n');
    for r in &records {
        let _ = writeln!(csv, "{}", row(r));
    }
    Ok(RunOutput { records, csv })
}

/// Exit status for an error: 2 for invalid input, 3 for failures of the numerics.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Case(CaseError::UnknownCase(_)) | Error::Case(CaseError::BadAngle(_)) => 2,
        Error::Mesh(MeshError::Parse { .. } | MeshError::Io(_) | MeshError::UnmappedReference(_)) => 2,
        Error::Mesh(
            MeshError::NonConforming(_)
            | MeshError::UnlabeledBoundary(_)
            | MeshError::SpuriousLabel(_)
            | MeshError::InvertedCell { .. }
            | MeshError::BadVertex { .. },
        ) => 2,
        Error::Io(_) => 2,
        _ => 3,
    }
}
