use std::f64::consts::PI;
use std::sync::Arc;

use super::*;
use crate::fe::{Essential, Family, Space};
use crate::mesh::unit_cube_mesh;

fn cube_a(x: &[f64; 3]) -> [f64; 3] {
    let (s, c) = (|t: f64| (PI * t).sin(), |t: f64| (PI * t).cos());
    [c(x[0]) * s(x[1]) * s(x[2]), -s(x[0]) * c(x[1]) * s(x[2]), 0.0]
}

fn cube_curl(x: &[f64; 3]) -> [f64; 3] {
    let (s, c) = (|t: f64| (PI * t).sin(), |t: f64| (PI * t).cos());
    [
        PI * s(x[0]) * c(x[1]) * c(x[2]),
        PI * c(x[0]) * s(x[1]) * c(x[2]),
        -2.0 * PI * c(x[0]) * c(x[1]) * s(x[2]),
    ]
}

fn cube_j(x: &[f64; 3]) -> [f64; 3] {
    let a = cube_a(x);
    let k = 3.0 * PI * PI;
    [k * a[0], k * a[1], k * a[2]]
}

fn poly_j(x: &[f64; 3]) -> [f64; 3] {
    [0.0, 0.0, 2.0 * x[1] * (1.0 - x[1]) + 2.0 * x[0] * (1.0 - x[0])]
}

fn poly_curl(x: &[f64; 3]) -> [f64; 3] {
    [
        x[0] * (1.0 - x[0]) * (1.0 - 2.0 * x[1]),
        -(1.0 - 2.0 * x[0]) * x[1] * (1.0 - x[1]),
        0.0,
    ]
}

fn cube(n: usize) -> Arc<MeshTopology> {
    Arc::new(unit_cube_mesh(n))
}

#[test]
fn lowest_order_single_cube_has_one_free_dof() {
    let sys = assemble_curlcurl_system(cube(1), 0, &cube_j, &Essential::Dirichlet).unwrap();
    assert_eq!(sys.nedelec.num_dofs(), 19);
    assert_eq!(sys.rhs.len(), 1);
    assert_eq!(sys.rhs_grad.len(), 0);
}

#[test]
fn zero_source_gives_zero_solution() {
    let zero = |_: &[f64; 3]| [0.0; 3];
    let sys = assemble_curlcurl_system(cube(2), 1, &zero, &Essential::Dirichlet).unwrap();
    assert!(sys.rhs.iter().all(|&v| v == 0.0));
    let sol = solve_galerkin(&sys).unwrap();
    assert!(sol.a_h.coeffs.iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn stiffness_is_symmetric_and_kills_gradients() {
    let sys = assemble_curlcurl_system(cube(2), 1, &cube_j, &Essential::Dirichlet).unwrap();
    assert!(sys.k.asymmetry() <= 1e-12 * sys.k.max_abs());
    assert!(sys.l.asymmetry() <= 1e-12 * sys.l.max_abs());
    // K G = 0 and G^T M = B
    let q: Vec<f64> = (0..sys.rhs_grad.len()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
    let gq = sys.grad.mul_vec(&q);
    assert!(norm_inf(&sys.k.mul_vec(&gq)) < 1e-10 * sys.k.max_abs() * norm_inf(&gq));
    let mg = sys.m.mul_vec(&gq);
    let bt_q = sys.b.mul_t_vec(&q);
    for (a, b) in mg.iter().zip(&bt_q) {
        assert!((a - b).abs() < 1e-11 * sys.m.max_abs() * norm_inf(&q).max(1.0) * 10.0);
    }
}

#[test]
fn gauged_cholesky_matches_saddle_lu() {
    for p in [0, 1, 2] {
        let sys = assemble_curlcurl_system(cube(2), p, &cube_j, &Essential::Dirichlet).unwrap();
        let a = solve_galerkin(&sys).unwrap();
        let b = solve_galerkin_with(
            &sys,
            &SolveOptions {
                method: SolveMethod::SaddleLu,
                ..Default::default()
            },
        )
        .unwrap();
        let diff: Vec<f64> = a.a_h.coeffs.iter().zip(&b.a_h.coeffs).map(|(x, y)| x - y).collect();
        assert!(norm_inf(&diff) < 1e-8 * norm_inf(&a.a_h.coeffs), "p={p}");
        for s in [&a, &b] {
            assert!(s.galerkin_residual < 1e-9, "p={p} {}", s.galerkin_residual);
            assert!(s.gauge_residual < 1e-9, "p={p} {}", s.gauge_residual);
        }
    }
}

#[test]
fn multiplier_vanishes_for_divergence_free_source() {
    let sys = assemble_curlcurl_system(cube(2), 1, &cube_j, &Essential::Dirichlet).unwrap();
    let sol = solve_galerkin(&sys).unwrap();
    let phi = sys.restrict_lagrange(&sol.multiplier);
    // ||grad phi||^2 = phi^T L phi
    let e = dot(&phi, &sys.l.mul_vec(&phi)).max(0.0).sqrt();
    let zero = DiscreteField::zero(sys.nedelec.clone());
    let jn = energy_error(&zero, Reference::CurlOf(&cube_j));
    assert!(e <= 1e-8 * jn, "{e} vs {jn}");
}

#[test]
fn polynomial_solution_is_reproduced_at_degree_three() {
    let sys = assemble_curlcurl_system(cube(1), 3, &poly_j, &Essential::Dirichlet).unwrap();
    let sol = solve_galerkin(&sys).unwrap();
    let err = energy_error(&sol.a_h, Reference::CurlOf(&poly_curl));
    assert!(err < 1e-9, "{err}");
}

#[test]
fn analytic_curl_norm_matches_closed_form() {
    // ||curl A||^2 = pi^2 (1/8 + 1/8 + 4/8) = 3 pi^2 / 4
    let space = Arc::new(Space::new(cube(2), Family::Nedelec, 0, &Essential::None).unwrap());
    let e = energy_error(&DiscreteField::zero(space), Reference::CurlOf(&cube_curl));
    assert!((e - (0.75f64).sqrt() * PI).abs() < 1e-6, "{e}");
}

#[test]
fn h_convergence_at_degree_one() {
    let err: Vec<f64> = [1, 2, 4]
        .iter()
        .map(|&n| {
            let sys = assemble_curlcurl_system(cube(n), 1, &cube_j, &Essential::Dirichlet).unwrap();
            energy_error(&solve_galerkin(&sys).unwrap().a_h, Reference::CurlOf(&cube_curl))
        })
        .collect();
    let rate = (err[1] / err[2]).log2();
    assert!(err[2] < err[1] && err[1] < err[0]);
    assert!((rate - 2.0).abs() < 0.35, "rate {rate}");
}

#[test]
fn reference_error_agrees_with_analytic_error() {
    let mesh = cube(2);
    let sys = assemble_curlcurl_system(mesh.clone(), 0, &cube_j, &Essential::Dirichlet).unwrap();
    let sol = solve_galerkin(&sys).unwrap();
    let exact = energy_error(&sol.a_h, Reference::CurlOf(&cube_curl));
    let r = reference_solution(mesh, 0, &cube_j, &Essential::Dirichlet).unwrap();
    let approx = energy_error(&sol.a_h, Reference::Field(&r.a_h));
    assert!((approx - exact).abs() <= 0.1 * exact, "{approx} vs {exact}");
    assert!(energy_error(&sol.a_h, Reference::Field(&sol.a_h)) < 1e-12);
}

#[test]
fn residual_identity_in_reference_space() {
    // (J, v) - (curl A_h, curl v) = (curl(A_ref - A_h), curl v) for v in the p+2 space
    let mesh = cube(1);
    let sys = assemble_curlcurl_system(mesh.clone(), 0, &cube_j, &Essential::Dirichlet).unwrap();
    let sol = solve_galerkin(&sys).unwrap();
    let fine = assemble_curlcurl_system(mesh, 2, &cube_j, &Essential::Dirichlet).unwrap();
    let reference = solve_galerkin(&fine).unwrap();
    // A_h expressed in the fine space by interpolation is exact since N_0 is contained in N_2
    let fine_space = fine.nedelec.clone();
    let a_h = sol.a_h.clone();
    let lifted = fine_space.interpolate_cellwise(|k, x| {
        let map = CellMap::new(&a_h.space.mesh, k);
        let xr = map.to_reference(x);
        evaluate_field(&a_h, k, &[xr], Query::Value).unwrap()[0]
    });
    let u = fine.restrict_nedelec(&lifted);
    let ku = fine.k.mul_vec(&u);
    let r: Vec<f64> = fine.rhs.iter().zip(&ku).map(|(a, b)| a - b).collect();
    let d: Vec<f64> = fine.restrict_nedelec(&reference.a_h).iter().zip(&u).map(|(a, b)| a - b).collect();
    let kd = fine.k.mul_vec(&d);
    for (a, b) in r.iter().zip(&kd) {
        assert!((a - b).abs() < 1e-9 * norm_inf(&fine.rhs), "{a} vs {b}");
    }
    // dual norm of the residual equals the reference error
    let sup = dot(&d, &kd).sqrt();
    let err = energy_error(&sol.a_h, Reference::Field(&reference.a_h));
    assert!((sup - err).abs() < 1e-8 * err.max(1.0));
}

#[test]
fn fichera_reference_has_energy() {
    let mesh = Arc::new(crate::mesh::fichera_mesh(1));
    let j = |_: &[f64; 3]| [1.0, 1.0, 0.0];
    let sol = reference_solution(mesh, 0, &j, &Essential::Dirichlet).unwrap();
    let space = sol.a_h.space.clone();
    let e = energy_error(&DiscreteField::zero(space), Reference::Field(&sol.a_h));
    assert!(e > 1e-3);
}
