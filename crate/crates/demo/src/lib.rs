//! Browser front end for the `curlcurl` solver. Every operation returns text (CSV or MEDIT)
//! that the page renders as is.

use wasm_bindgen::prelude::*;

use curlcurl::adaptivity::Driver;
use curlcurl::cases::case_by_name;
use curlcurl::driver::{run, Mode, RunConfig};
use curlcurl::equilibration::PoincareMode;
use curlcurl::mesh::format_medit;

/// Largest problem the page accepts, to keep the tab responsive.
pub const MAX_DOFS: usize = 20_000;

fn config(case: &str, mode: Mode, p: usize, n: usize) -> RunConfig {
    RunConfig {
        case: case.to_string(),
        mode,
        p,
        n,
        // eigenvalue solves per patch are the slowest part in a single-threaded tab
        poincare: PoincareMode::Bound,
        ..Default::default()
    }
}

pub fn solve_csv(case: &str, p: usize, n: usize, levels: usize) -> Result<String, String> {
    let mode = if levels > 1 { Mode::HConv } else { Mode::Single };
    let cfg = RunConfig { levels: levels.max(1), ..config(case, mode, p, n) };
    run(&cfg, |_| {}).map(|o| o.csv).map_err(|e| e.to_string())
}

pub fn adapt_csv(case: &str, p: usize, theta: f64, budget_dofs: usize, edge_driver: bool) -> Result<String, String> {
    let cfg = RunConfig {
        theta,
        budget_dofs: budget_dofs.min(MAX_DOFS),
        driver: if edge_driver { Driver::Edge } else { Driver::Cell },
        ..config(case, Mode::Adapt, p, 1)
    };
    run(&cfg, |_| {}).map(|o| o.csv).map_err(|e| e.to_string())
}

pub fn mesh_text(case: &str, n: usize) -> Result<String, String> {
    let case = case_by_name(case).map_err(|e| e.to_string())?;
    let mesh = (case.mesh)(n).map_err(|e| e.to_string())?;
    Ok(format_medit(&mesh))
}

/// Solves a case on a uniform mesh (`levels > 1` gives an h-convergence study).
#[wasm_bindgen]
pub fn solve(case: &str, p: usize, n: usize, levels: usize) -> Result<String, JsValue> {
    solve_csv(case, p, n, levels).map_err(|e| JsValue::from_str(&e))
}

/// Adaptive loop from the case's coarsest mesh.
#[wasm_bindgen]
pub fn adapt(case: &str, p: usize, theta: f64, budget_dofs: usize, edge_driver: bool) -> Result<String, JsValue> {
    adapt_csv(case, p, theta, budget_dofs, edge_driver).map_err(|e| JsValue::from_str(&e))
}

/// Initial mesh of a case in MEDIT format.
#[wasm_bindgen]
pub fn mesh(case: &str, n: usize) -> Result<String, JsValue> {
    mesh_text(case, n).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_returns_study_rows() {
        let csv = solve_csv("cube", 0, 1, 2).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("h,p,nr_dofs"));
    }

    #[test]
    fn adapt_respects_budget() {
        let csv = adapt_csv("ltype-pi2", 0, 0.5, 150, false).unwrap();
        assert!(csv.starts_with("iter,"));
        assert!(csv.lines().count() >= 2);
    }

    #[test]
    fn mesh_is_medit() {
        let text = mesh_text("fichera", 1).unwrap();
        assert!(text.starts_with("MeshVersionFormatted"));
        assert!(text.contains("Tetrahedra"));
    }

    #[test]
    fn bad_case_is_an_error() {
        assert!(solve_csv("torus", 0, 1, 1).is_err());
    }
}
