//! Shared oracles for the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use curlcurl::fe::{evaluate_field, reference_element, tet_rule, CellMap, DiscreteField, Essential, Family, Query, Space};
use curlcurl::mesh::{BoundaryLabel, MeshTopology};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random vector polynomial of total degree two.
#[derive(Debug, Clone)]
pub struct RandomPoly {
    coeffs: [[f64; 10]; 3],
}

impl RandomPoly {
    pub fn new(rng: &mut impl Rng) -> Self {
        let mut coeffs = [[0.0; 10]; 3];
        for c in coeffs.iter_mut() {
            for v in c.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        Self { coeffs }
    }

    pub fn eval(&self, x: &[f64; 3]) -> [f64; 3] {
        let m = [
            1.0,
            x[0],
            x[1],
            x[2],
            x[0] * x[0],
            x[1] * x[1],
            x[2] * x[2],
            x[0] * x[1],
            x[1] * x[2],
            x[0] * x[2],
        ];
        let mut out = [0.0; 3];
        for (o, c) in out.iter_mut().zip(&self.coeffs) {
            *o = c.iter().zip(&m).map(|(a, b)| a * b).sum();
        }
        out
    }
}

/// A Nedelec field of degree `p` with uniformly random coefficients.
pub fn random_nedelec(mesh: Arc<MeshTopology>, p: usize, rng: &mut impl Rng) -> DiscreteField {
    let space = Arc::new(Space::new(mesh, Family::Nedelec, p, &Essential::None).unwrap());
    let coeffs = (0..space.num_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    DiscreteField::new(space, coeffs)
}

fn cross(a: Vector3<f64>, b: Vector3<f64>) -> Vector3<f64> {
    a.cross(&b)
}

/// Monomials of total degree at most `q` in `x - c`.
fn monomials(q: usize, x: Vector3<f64>, c: Vector3<f64>) -> Vec<f64> {
    let d = x - c;
    let mut out = Vec::new();
    for total in 0..=q {
        for i in (0..=total).rev() {
            for j in (0..=total - i).rev() {
                let k = total - i - j;
                out.push(d[0].powi(i as i32) * d[1].powi(j as i32) * d[2].powi(k as i32));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct OracleResult {
    pub eta: f64,
    /// `|| D sigma - d ||_inf`, zero when the data are compatible.
    pub constraint_residual: f64,
    /// The constant removed from the divergence datum.
    pub mean_shift: f64,
    pub dirichlet_edge: bool,
    /// Smallest retained and largest discarded eigenvalue of `D^T D`, relative to the top.
    pub spectrum_gap: (f64, f64),
}

/// Minimises `|| sigma + psi x curl A_h ||` over Raviart-Thomas fields of degree `q` on the
/// patch of `edge`, subject to `div sigma = pi_q (psi . J - curl psi . curl A_h) - kappa` and the
/// boundary conditions, where `kappa` is the patch mean for interior edges and zero otherwise.
///
/// Built without the library's patch code: the constraint set comes from the face labels, the
/// divergence test space is physical monomials, and the problem is solved by a null-space
/// method with dense linear algebra. Only the reference Raviart-Thomas basis, the quadrature
/// and the evaluation of `curl A_h` are shared with the library.
pub fn dense_patch_oracle(mesh: &MeshTopology, edge: usize, q: usize, a_h: &DiscreteField, j: &dyn Fn(&[f64; 3]) -> [f64; 3]) -> OracleResult {
    let [va, vb] = mesh.edges[edge];
    let cells: Vec<usize> = (0..mesh.num_cells()).filter(|&k| mesh.tets[k].contains(&va) && mesh.tets[k].contains(&vb)).collect();
    let face_id: HashMap<[usize; 3], usize> = mesh.faces.iter().enumerate().map(|(i, f)| (*f, i)).collect();
    let local_faces = |k: usize| -> [[usize; 3]; 4] {
        let mut s = mesh.tets[k];
        s.sort_unstable();
        let mut out = [[0; 3]; 4];
        for (i, o) in out.iter_mut().enumerate() {
            let mut f: Vec<usize> = s.iter().enumerate().filter(|(l, _)| *l != i).map(|(_, v)| *v).collect();
            f.sort_unstable();
            *o = [f[0], f[1], f[2]];
        }
        out
    };
    // faces seen once are on the patch boundary
    let mut count: HashMap<[usize; 3], usize> = HashMap::new();
    for &k in &cells {
        for f in local_faces(k) {
            *count.entry(f).or_default() += 1;
        }
    }
    let is_dirichlet = |f: &[usize; 3]| mesh.face_label(face_id[f]) == Some(BoundaryLabel::Dirichlet);
    let dirichlet_edge = count.keys().any(|f| is_dirichlet(f) && f.contains(&va) && f.contains(&vb));

    let rt = reference_element(Family::RaviartThomas, q).unwrap();
    let nf = rt.entity_dofs[2];
    let face_off = rt.entity_dofs[0] * 4 + rt.entity_dofs[1] * 6;
    // unknown numbering: shared face dofs by (face, index), interior dofs by (cell, local)
    let mut index: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let mut local_to_unknown: Vec<Vec<Option<usize>>> = Vec::new();
    for &k in &cells {
        let faces = local_faces(k);
        let mut map = Vec::with_capacity(rt.dim);
        for a in 0..rt.dim {
            let key = if a >= face_off && a < face_off + 4 * nf {
                let i = (a - face_off) / nf;
                let f = faces[i];
                let on_boundary = count[&f] == 1;
                let free = !on_boundary || (dirichlet_edge && is_dirichlet(&f));
                if !free {
                    map.push(None);
                    continue;
                }
                (0, face_id[&f], (a - face_off) % nf)
            } else {
                (1, k, a)
            };
            let next = index.len();
            map.push(Some(*index.entry(key).or_insert(next)));
        }
        local_to_unknown.push(map);
    }
    let n = index.len();
    let nm = monomials(q, Vector3::zeros(), Vector3::zeros()).len();
    let rule = tet_rule(2 * q + 8).unwrap();
    let tab = rt.tabulate(&rule.points);

    let mut mass = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    let mut d_mat = DMatrix::<f64>::zeros(cells.len() * nm, n);
    let mut d_rhs = DVector::<f64>::zeros(cells.len() * nm);
    let mut m_int = DVector::<f64>::zeros(cells.len() * nm);
    // (weight, g, free basis values) at every quadrature point, to evaluate the norm directly
    let mut samples: Vec<(f64, Vector3<f64>, Vec<(usize, Vector3<f64>)>)> = Vec::new();
    let (mut s_int, mut volume) = (0.0, 0.0);
    let len = {
        let (p, r) = (Vector3::from(mesh.vertices[va]), Vector3::from(mesh.vertices[vb]));
        (r - p).norm()
    };
    for (i, &k) in cells.iter().enumerate() {
        let map = CellMap::new(mesh, k);
        let ad = map.abs_det();
        volume += ad / 6.0;
        let t = mesh.tets[k];
        let v0 = Vector3::from(mesh.vertices[t[0]]);
        let tm = Matrix3::from_columns(&[
            Vector3::from(mesh.vertices[t[1]]) - v0,
            Vector3::from(mesh.vertices[t[2]]) - v0,
            Vector3::from(mesh.vertices[t[3]]) - v0,
        ]);
        let inv = tm.try_inverse().unwrap();
        let grads: Vec<Vector3<f64>> = {
            let g: Vec<Vector3<f64>> = (0..3).map(|r| inv.row(r).transpose()).collect();
            vec![-(g[0] + g[1] + g[2]), g[0], g[1], g[2]]
        };
        let la = t.iter().position(|&v| v == va).unwrap();
        let lb = t.iter().position(|&v| v == vb).unwrap();
        let curl_psi = 2.0 * len * cross(grads[la], grads[lb]);
        let curl_a = evaluate_field(a_h, k, &rule.points, Query::Curl).unwrap();
        let centre = (0..4).fold(Vector3::zeros(), |acc, l| acc + Vector3::from(mesh.vertices[t[l]])) / 4.0;
        let scale = (ad / 6.0).cbrt();

        let mut sm = DVector::<f64>::zeros(nm);
        let mut dloc = DMatrix::<f64>::zeros(nm, rt.dim);
        for (qp, w) in rule.weights.iter().enumerate() {
            let wq = w * ad;
            let x = Vector3::from(map.to_physical(&rule.points[qp]));
            let lam_rest = inv * (x - v0);
            let lam = [1.0 - lam_rest.sum(), lam_rest[0], lam_rest[1], lam_rest[2]];
            let psi = len * (lam[la] * grads[lb] - lam[lb] * grads[la]);
            let ca = Vector3::from(curl_a[qp]);
            let g = cross(psi, ca);
            let s = psi.dot(&Vector3::from(j(&x.into()))) - curl_psi.dot(&ca);
            s_int += wq * s;
            let m = monomials(q, (x - centre) / scale, Vector3::zeros());
            let phys: Vec<(Vector3<f64>, f64)> = (0..rt.dim)
                .map(|a| {
                    let v = map.jac * Vector3::from(tab.value(qp, a)) / map.det;
                    (v, tab.deriv(qp, a)[0] / map.det)
                })
                .collect();
            for r in 0..nm {
                sm[r] += wq * s * m[r];
                m_int[i * nm + r] += wq * m[r];
                for (a, (_, dv)) in phys.iter().enumerate() {
                    dloc[(r, a)] += wq * m[r] * dv;
                }
            }
            let free: Vec<(usize, Vector3<f64>)> = phys.iter().enumerate().filter_map(|(a, (v, _))| local_to_unknown[i][a].map(|ia| (ia, *v))).collect();
            samples.push((wq, g, free));
            for (a, (va_, _)) in phys.iter().enumerate() {
                let Some(ia) = local_to_unknown[i][a] else { continue };
                b[ia] += wq * g.dot(va_);
                for (c, (vc, _)) in phys.iter().enumerate() {
                    if let Some(ic) = local_to_unknown[i][c] {
                        mass[(ia, ic)] += wq * va_.dot(vc);
                    }
                }
            }
        }
        // (pi_q s, m_r) = (s, m_r) for every test monomial
        for r in 0..nm {
            d_rhs[i * nm + r] = sm[r];
            for a in 0..rt.dim {
                if let Some(ia) = local_to_unknown[i][a] {
                    d_mat[(i * nm + r, ia)] += dloc[(r, a)];
                }
            }
        }
    }
    let mean_shift = if dirichlet_edge { 0.0 } else { s_int / volume };
    for r in 0..d_rhs.len() {
        d_rhs[r] -= mean_shift * m_int[r];
    }

    // sigma = D^+ d + Z y with Z spanning ker D
    let pinv = d_mat.clone().svd(true, true).pseudo_inverse(1e-12 * d_mat.norm()).unwrap();
    let sigma_p = &pinv * &d_rhs;
    let dtd = d_mat.transpose() * &d_mat;
    let eig = SymmetricEigen::new(dtd);
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let null: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] <= 1e-12 * top).collect();
    let gap = (0..n).map(|i| eig.eigenvalues[i]).filter(|&v| v > 1e-12 * top).fold(f64::INFINITY, f64::min) / top;
    let noise = null.iter().map(|&i| eig.eigenvalues[i].abs()).fold(0.0, f64::max) / top;
    let z = DMatrix::from_fn(n, null.len(), |r, c| eig.eigenvectors[(r, null[c])]);
    let zmz = z.transpose() * &mass * &z;
    let rhs = -(z.transpose() * (&mass * &sigma_p + &b));
    let y = zmz.cholesky().expect("mass is definite on the kernel").solve(&rhs);
    let sigma = sigma_p + &z * y;
    let constraint_residual = (&d_mat * &sigma - &d_rhs).amax();
    let eta2: f64 = samples
        .iter()
        .map(|(w, g, free)| w * free.iter().fold(*g, |acc, (ia, v)| acc + sigma[*ia] * v).norm_squared())
        .sum();
    OracleResult {
        eta: eta2.max(0.0).sqrt(),
        constraint_residual,
        mean_shift,
        dirichlet_edge,
        spectrum_gap: (gap, noise),
    }
}

/// The library's patch estimator on the same data. On interior patches the library's mean
/// multiplier removes the constant `kappa` from the datum; it is returned for comparison.
pub fn library_patch_eta(a_h: &DiscreteField, j: &curlcurl::solver::VectorFn, edge: usize, q: usize) -> (f64, f64) {
    use curlcurl::equilibration::{patch_norms, patch_problem_unchecked, solve_patch};
    let mesh = a_h.space.mesh.clone();
    let rt = Space::new(mesh.clone(), Family::RaviartThomas, q, &Essential::None).unwrap();
    let problem = patch_problem_unchecked(a_h, None, j, edge, &rt).unwrap();
    let kappa = if problem.needs_mean_constraint() {
        problem.mean / problem.patch.cells.iter().map(|&k| mesh.cell_volume(k)).sum::<f64>()
    } else {
        0.0
    };
    let flux = solve_patch(&mesh, &problem).unwrap();
    (patch_norms(&mesh, &problem, &flux).0, kappa)
}
