//! Scalar polynomial bases on the reference simplex.
//!
//! Everything is built from tensor products of shifted Legendre polynomials
//! `P_k(2t - 1)` restricted to the simplex. They are not orthogonal there, but
//! far better conditioned than monomials at the degrees used here.

/// Multi-indices `(a, b, c)` with `a + b + c <= degree`, ordered by total degree.
pub fn multi_indices_3d(degree: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(dim_p3(degree));
    for total in 0..=degree {
        for a in (0..=total).rev() {
            for b in (0..=(total - a)).rev() {
                out.push([a, b, total - a - b]);
            }
        }
    }
    out
}

/// Multi-indices `(a, b)` with `a + b <= degree`.
pub fn multi_indices_2d(degree: usize) -> Vec<[usize; 2]> {
    let mut out = Vec::new();
    for total in 0..=degree {
        for a in (0..=total).rev() {
            out.push([a, total - a]);
        }
    }
    out
}

pub fn dim_p3(degree: usize) -> usize {
    (degree + 1) * (degree + 2) * (degree + 3) / 6
}

pub fn dim_p2(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Values and first derivatives of `P_k(2t - 1)`, `k = 0..=n`.
pub fn shifted_legendre(n: usize, t: f64, vals: &mut [f64], ders: &mut [f64]) {
    let x = 2.0 * t - 1.0;
    vals[0] = 1.0;
    ders[0] = 0.0;
    if n == 0 {
        return;
    }
    vals[1] = x;
    ders[1] = 1.0;
    for k in 1..n {
        let kf = k as f64;
        vals[k + 1] = ((2.0 * kf + 1.0) * x * vals[k] - kf * vals[k - 1]) / (kf + 1.0);
        ders[k + 1] = ders[k - 1] + (2.0 * kf + 1.0) * vals[k];
    }
    // chain rule for the shift
    for d in ders.iter_mut().take(n + 1) {
        *d *= 2.0;
    }
}

/// Legendre-product basis of `P_degree` in three variables.
#[derive(Debug, Clone)]
pub struct LegendreProducts {
    pub degree: usize,
    pub indices: Vec<[usize; 3]>,
}

impl LegendreProducts {
    pub fn new(degree: usize) -> Self {
        Self {
            degree,
            indices: multi_indices_3d(degree),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Writes values and gradients of all basis members at `x`.
    pub fn eval(&self, x: &[f64; 3], vals: &mut [f64], grads: &mut [[f64; 3]]) {
        let n = self.degree;
        let mut lv = [[0.0; 16]; 3];
        let mut ld = [[0.0; 16]; 3];
        for c in 0..3 {
            shifted_legendre(n, x[c], &mut lv[c], &mut ld[c]);
        }
        for (i, &[a, b, c]) in self.indices.iter().enumerate() {
            let (va, vb, vc) = (lv[0][a], lv[1][b], lv[2][c]);
            vals[i] = va * vb * vc;
            grads[i] = [ld[0][a] * vb * vc, va * ld[1][b] * vc, va * vb * ld[2][c]];
        }
    }

    pub fn values(&self, x: &[f64; 3]) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        let mut g = vec![[0.0; 3]; self.len()];
        self.eval(x, &mut v, &mut g);
        v
    }
}

/// Legendre-product basis of `P_degree` in two variables (face moments).
pub fn legendre_products_2d(degree: usize, s: f64, t: f64) -> Vec<f64> {
    let mut vs = [0.0; 16];
    let mut vt = [0.0; 16];
    let mut scratch = [0.0; 16];
    shifted_legendre(degree, s, &mut vs, &mut scratch);
    shifted_legendre(degree, t, &mut vt, &mut scratch);
    multi_indices_2d(degree)
        .into_iter()
        .map(|[a, b]| vs[a] * vt[b])
        .collect()
}

/// Shifted Legendre values `P_k(2t - 1)`, `k = 0..=degree`.
pub fn legendre_1d(degree: usize, t: f64) -> Vec<f64> {
    let mut v = [0.0; 16];
    let mut d = [0.0; 16];
    shifted_legendre(degree, t, &mut v, &mut d);
    v[..=degree].to_vec()
}
