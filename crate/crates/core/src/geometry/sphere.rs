//! Axisymmetric collocation on the unit round sphere in `u = cos θ`.
//!
//! Fields are sampled at the `N` Gauss–Legendre nodes and represented by
//! their degree `< N` Legendre interpolant. The round complex Laplacian is
//! `Δ f = ½ d/du[(1 − u²) df/du]`, diagonal on `P_l` with eigenvalue
//! `−l(l+1)/2`. The reference measure is the round area form `du dϑ`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

#[derive(Debug)]
pub(crate) struct SphereOps {
    pub(crate) size: usize,
    pub(crate) nodes: Vec<f64>,
    /// Round area weights `2π wₖ`.
    pub(crate) area_weights: Vec<f64>,
    /// `P_l(u_k)`, row k, column l.
    legendre: DMatrix<f64>,
    /// Nodal values → Legendre coefficients.
    to_coef: DMatrix<f64>,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
    lap: DMatrix<f64>,
    lap_inv: DMatrix<f64>,
}

/// Gauss–Legendre nodes (ascending) and weights on `[−1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n {
        let mut z = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, z);
        if d.is_finite() {
            dp = d;
        }
        x[k] = -z;
        w[k] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap());
    (idx.iter().map(|&i| x[i]).collect(), idx.iter().map(|&i| w[i]).collect())
}

fn legendre_and_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for l in 1..n {
        let p2 = ((2 * l + 1) as f64 * z * p1 - l as f64 * p0) / (l + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// Values of `P_l`, `P_l'`, `P_l''` for `l < n` at `z`.
pub(crate) fn legendre_table(n: usize, z: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let mut ddp = vec![0.0; n];
    p[0] = 1.0;
    if n > 1 {
        p[1] = z;
        dp[1] = 1.0;
    }
    for l in 1..n.saturating_sub(1) {
        let lf = l as f64;
        p[l + 1] = ((2.0 * lf + 1.0) * z * p[l] - lf * p[l - 1]) / (lf + 1.0);
        dp[l + 1] = dp[l - 1] + (2.0 * lf + 1.0) * p[l];
        ddp[l + 1] = ddp[l - 1] + (2.0 * lf + 1.0) * dp[l];
    }
    (p, dp, ddp)
}

impl SphereOps {
    pub(crate) fn new(size: usize) -> Self {
        let (nodes, w) = gauss_legendre(size);
        let mut legendre = DMatrix::zeros(size, size);
        let mut dleg = DMatrix::zeros(size, size);
        let mut ddleg = DMatrix::zeros(size, size);
        for (k, &u) in nodes.iter().enumerate() {
            let (p, dp, ddp) = legendre_table(size, u);
            for l in 0..size {
                legendre[(k, l)] = p[l];
                dleg[(k, l)] = dp[l];
                ddleg[(k, l)] = ddp[l];
            }
        }
        let mut to_coef = DMatrix::zeros(size, size);
        for l in 0..size {
            for k in 0..size {
                to_coef[(l, k)] = (2 * l + 1) as f64 / 2.0 * w[k] * legendre[(k, l)];
            }
        }
        let eig = DVector::from_fn(size, |l, _| -0.5 * (l * (l + 1)) as f64);
        let inv_eig = eig.map(|e| if e == 0.0 { 0.0 } else { 1.0 / e });
        let lap = &legendre * DMatrix::from_diagonal(&eig) * &to_coef;
        let lap_inv = &legendre * DMatrix::from_diagonal(&inv_eig) * &to_coef;
        let d1 = &dleg * &to_coef;
        let d2 = &ddleg * &to_coef;
        let area_weights = w.iter().map(|wk| 2.0 * PI * wk).collect();
        Self { size, nodes, area_weights, legendre, to_coef, d1, d2, lap, lap_inv }
    }

    fn apply(m: &DMatrix<f64>, f: &[f64]) -> Vec<f64> {
        (m * DVector::from_column_slice(f)).as_slice().to_vec()
    }

    pub(crate) fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        Self::apply(&self.lap, f)
    }

    /// Zero-mean solution of the round Poisson equation (mean of `rhs` dropped).
    pub(crate) fn laplacian_inverse(&self, rhs: &[f64]) -> Vec<f64> {
        Self::apply(&self.lap_inv, rhs)
    }

    pub(crate) fn d1(&self, f: &[f64]) -> Vec<f64> {
        Self::apply(&self.d1, f)
    }

    pub(crate) fn d2(&self, f: &[f64]) -> Vec<f64> {
        Self::apply(&self.d2, f)
    }

    pub(crate) fn coefficients(&self, f: &[f64]) -> Vec<f64> {
        Self::apply(&self.to_coef, f)
    }

    pub(crate) fn synthesize(&self, coef: &[f64]) -> Vec<f64> {
        let mut c = coef.to_vec();
        c.resize(self.size, 0.0);
        Self::apply(&self.legendre, &c)
    }
}
