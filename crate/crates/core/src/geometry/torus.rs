//! Fourier pseudo-spectral operators on the periodic torus `Cⁿ / Λ`.
//!
//! Real axes are ordered `(x₁, y₁, x₂, y₂)` with `zᵢ = xᵢ + √−1 yᵢ`. The
//! holomorphic derivative is normalised as `∂ᵢ = (∂_{xᵢ} − √−1 ∂_{yᵢ})/√2`,
//! which makes `∂ᵢ∂_{īi}` half the Euclidean Laplacian in the `(xᵢ, yᵢ)` plane.
//! Odd-order derivatives along an axis drop that axis' Nyquist mode.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use num_complex::Complex64 as C;
use rustfft::{Fft, FftPlanner};

const MAX_AXES: usize = 4;

/// A constant-coefficient linear differential operator, written as a sum of
/// real partial derivatives `c · ∂^{o₀}_{a₀} ∂^{o₁}_{a₁} …`.
#[derive(Clone, Debug)]
pub(crate) struct DerivOp {
    terms: Vec<(C, [u8; MAX_AXES])>,
}

impl DerivOp {
    fn single(axis: usize) -> Self {
        let mut o = [0u8; MAX_AXES];
        o[axis] = 1;
        Self { terms: vec![(C::new(1.0, 0.0), o)] }
    }

    fn combine(a: &Self, ca: C, b: &Self, cb: C) -> Self {
        let mut terms = Vec::new();
        for &(c, o) in &a.terms {
            push_term(&mut terms, c * ca, o);
        }
        for &(c, o) in &b.terms {
            push_term(&mut terms, c * cb, o);
        }
        Self { terms }
    }

    /// `∂ᵢ = (∂_x − √−1 ∂_y)/√2`
    pub(crate) fn holo(i: usize) -> Self {
        Self::combine(
            &Self::single(2 * i),
            C::new(FRAC_1_SQRT_2, 0.0),
            &Self::single(2 * i + 1),
            C::new(0.0, -FRAC_1_SQRT_2),
        )
    }

    /// `∂_ī = (∂_x + √−1 ∂_y)/√2`
    pub(crate) fn anti(i: usize) -> Self {
        Self::combine(
            &Self::single(2 * i),
            C::new(FRAC_1_SQRT_2, 0.0),
            &Self::single(2 * i + 1),
            C::new(0.0, FRAC_1_SQRT_2),
        )
    }

    pub(crate) fn then(&self, other: &Self) -> Self {
        let mut terms = Vec::new();
        for &(ca, oa) in &self.terms {
            for &(cb, ob) in &other.terms {
                let mut o = oa;
                for k in 0..MAX_AXES {
                    o[k] += ob[k];
                }
                push_term(&mut terms, ca * cb, o);
            }
        }
        Self { terms }
    }
}

fn push_term(terms: &mut Vec<(C, [u8; MAX_AXES])>, c: C, o: [u8; MAX_AXES]) {
    if let Some(t) = terms.iter_mut().find(|t| t.1 == o) {
        t.0 += c;
    } else {
        terms.push((c, o));
    }
    terms.retain(|t| t.0.norm() > 1e-15);
}

pub(crate) struct TorusOps {
    pub(crate) n: usize,
    pub(crate) size: usize,
    pub(crate) axes: usize,
    pub(crate) nodes: usize,
    pub(crate) periods: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    /// Angular wavenumber per axis and index.
    wave: Vec<Vec<f64>>,
    /// Symbol of `Σᵢ ∂ᵢ∂_ī` with full second-derivative symbols.
    lap_symbol: Vec<f64>,
}

impl std::fmt::Debug for TorusOps {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TorusOps").field("n", &self.n).field("size", &self.size).finish()
    }
}

impl TorusOps {
    pub(crate) fn new(n: usize, size: usize, periods: &[f64]) -> Self {
        let axes = 2 * n;
        let nodes = size.pow(axes as u32);
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(size);
        let ifft = planner.plan_fft_inverse(size);
        let wave: Vec<Vec<f64>> = periods
            .iter()
            .map(|&l| (0..size).map(|j| 2.0 * PI * signed_freq(j, size) as f64 / l).collect())
            .collect();
        let mut ops = Self {
            n,
            size,
            axes,
            nodes,
            periods: periods.to_vec(),
            fft,
            ifft,
            wave,
            lap_symbol: Vec::new(),
        };
        let mut lap = vec![0.0; nodes];
        for (p, s) in lap.iter_mut().enumerate() {
            let idx = ops.index(p);
            *s = -0.5 * (0..axes).map(|a| ops.wave[a][idx[a]].powi(2)).sum::<f64>();
        }
        ops.lap_symbol = lap;
        ops
    }

    pub(crate) fn index(&self, mut p: usize) -> [usize; MAX_AXES] {
        let mut idx = [0; MAX_AXES];
        for a in (0..self.axes).rev() {
            idx[a] = p % self.size;
            p /= self.size;
        }
        idx
    }

    pub(crate) fn coords(&self, p: usize) -> Vec<f64> {
        let idx = self.index(p);
        (0..self.axes).map(|a| self.periods[a] * idx[a] as f64 / self.size as f64).collect()
    }

    pub(crate) fn volume(&self) -> f64 {
        self.periods.iter().product()
    }

    pub(crate) fn cell_weight(&self) -> f64 {
        self.volume() / self.nodes as f64
    }

    fn transform(&self, data: &mut [C], inverse: bool) {
        let plan = if inverse { &self.ifft } else { &self.fft };
        let n = self.size;
        let mut scratch = vec![C::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // Last axis is contiguous.
        plan.process_with_scratch(data, &mut scratch);
        let mut line = vec![C::new(0.0, 0.0); n];
        for a in 0..self.axes - 1 {
            let stride = n.pow((self.axes - 1 - a) as u32);
            let outer = self.nodes / (n * stride);
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * n * stride + inner;
                    for (j, v) in line.iter_mut().enumerate() {
                        *v = data[base + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        data[base + j * stride] = *v;
                    }
                }
            }
        }
        if inverse {
            let s = 1.0 / self.nodes as f64;
            for v in data.iter_mut() {
                *v *= s;
            }
        }
    }

    pub(crate) fn forward(&self, f: &[f64]) -> Vec<C> {
        let mut d: Vec<C> = f.iter().map(|&v| C::new(v, 0.0)).collect();
        self.transform(&mut d, false);
        d
    }

    pub(crate) fn forward_complex(&self, f: &[C]) -> Vec<C> {
        let mut d = f.to_vec();
        self.transform(&mut d, false);
        d
    }

    pub(crate) fn inverse(&self, mut spec: Vec<C>) -> Vec<C> {
        self.transform(&mut spec, true);
        spec
    }

    pub(crate) fn inverse_real(&self, spec: Vec<C>) -> Vec<f64> {
        self.inverse(spec).into_iter().map(|c| c.re).collect()
    }

    fn symbol_at(&self, op: &DerivOp, idx: &[usize; MAX_AXES]) -> C {
        let nyq = self.size / 2;
        let mut s = C::new(0.0, 0.0);
        for &(c, o) in &op.terms {
            let mut t = c;
            for a in 0..self.axes {
                let ord = o[a];
                if ord == 0 {
                    continue;
                }
                if ord % 2 == 1 && idx[a] == nyq {
                    t = C::new(0.0, 0.0);
                    break;
                }
                t *= C::new(0.0, self.wave[a][idx[a]]).powu(ord as u32);
            }
            s += t;
        }
        s
    }

    /// Apply a derivative operator to a spectrum, returning physical values.
    pub(crate) fn apply(&self, spec: &[C], op: &DerivOp) -> Vec<C> {
        let out: Vec<C> = spec
            .iter()
            .enumerate()
            .map(|(p, &v)| v * self.symbol_at(op, &self.index(p)))
            .collect();
        self.inverse(out)
    }

    /// `Σᵢ ∂ᵢ∂_ī f` (half the flat Laplacian).
    pub(crate) fn flat_laplacian(&self, f: &[f64]) -> Vec<f64> {
        let mut s = self.forward(f);
        for (v, l) in s.iter_mut().zip(&self.lap_symbol) {
            *v *= *l;
        }
        self.inverse_real(s)
    }

    /// Zero-mean solution of `Σᵢ ∂ᵢ∂_ī u = rhs` (the mean of `rhs` is discarded).
    pub(crate) fn flat_laplacian_inverse(&self, rhs: &[f64]) -> Vec<f64> {
        let mut s = self.forward(rhs);
        for (v, l) in s.iter_mut().zip(&self.lap_symbol) {
            *v = if *l == 0.0 { C::new(0.0, 0.0) } else { *v / *l };
        }
        self.inverse_real(s)
    }

    /// Complex Hessian `f_{ij̄}` per node, row-major.
    pub(crate) fn complex_hessian(&self, f: &[f64]) -> Vec<C> {
        let n = self.n;
        let spec = self.forward(f);
        let mut out = vec![C::new(0.0, 0.0); self.nodes * n * n];
        for i in 0..n {
            for j in i..n {
                let op = DerivOp::holo(i).then(&DerivOp::anti(j));
                let v = self.apply(&spec, &op);
                for p in 0..self.nodes {
                    if i == j {
                        out[p * n * n + i * n + i] = C::new(v[p].re, 0.0);
                    } else {
                        out[p * n * n + i * n + j] = v[p];
                        out[p * n * n + j * n + i] = v[p].conj();
                    }
                }
            }
        }
        out
    }

    /// `∂ᵢ f` per node, `n` entries each.
    pub(crate) fn holo_gradient(&self, f: &[f64]) -> Vec<C> {
        self.holo_gradient_complex(&f.iter().map(|&v| C::new(v, 0.0)).collect::<Vec<_>>())
    }

    pub(crate) fn holo_gradient_complex(&self, f: &[C]) -> Vec<C> {
        let n = self.n;
        let spec = self.forward_complex(f);
        let mut out = vec![C::new(0.0, 0.0); self.nodes * n];
        for i in 0..n {
            let v = self.apply(&spec, &DerivOp::holo(i));
            for p in 0..self.nodes {
                out[p * n + i] = v[p];
            }
        }
        out
    }

    /// Second holomorphic derivatives `∂ᵢ∂ⱼ f`, row-major per node.
    pub(crate) fn holo_hessian(&self, f: &[f64]) -> Vec<C> {
        let n = self.n;
        let spec = self.forward(f);
        let mut out = vec![C::new(0.0, 0.0); self.nodes * n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.apply(&spec, &DerivOp::holo(i).then(&DerivOp::holo(j)));
                for p in 0..self.nodes {
                    out[p * n * n + i * n + j] = v[p];
                    out[p * n * n + j * n + i] = v[p];
                }
            }
        }
        out
    }

    /// `Re Σᵢ ∂ᵢ vᵢ` for a complex vector field `v` (`n` entries per node).
    pub(crate) fn holo_divergence(&self, v: &[C]) -> Vec<f64> {
        let n = self.n;
        let mut acc = vec![C::new(0.0, 0.0); self.nodes];
        for i in 0..n {
            let comp: Vec<C> = (0..self.nodes).map(|p| v[p * n + i]).collect();
            let spec = self.forward_complex(&comp);
            let d = self.apply(&spec, &DerivOp::holo(i));
            for (a, b) in acc.iter_mut().zip(d) {
                *a += b;
            }
        }
        acc.into_iter().map(|c| c.re).collect()
    }

    /// `∂_ī f` per node.
    pub(crate) fn anti_gradient(&self, f: &[f64]) -> Vec<C> {
        let n = self.n;
        let spec = self.forward(f);
        let mut out = vec![C::new(0.0, 0.0); self.nodes * n];
        for i in 0..n {
            let v = self.apply(&spec, &DerivOp::anti(i));
            for p in 0..self.nodes {
                out[p * n + i] = v[p];
            }
        }
        out
    }

    /// Symbol of `Σᵢ ∂ᵢ∂_ī` built from first-derivative factors (Nyquist
    /// dropped), i.e. the flat divergence-form operator.
    pub(crate) fn divergence_form_symbol(&self) -> Vec<f64> {
        let nyq = self.size / 2;
        (0..self.nodes)
            .map(|p| {
                let idx = self.index(p);
                -0.5 * (0..self.axes)
                    .map(|a| if idx[a] == nyq { 0.0 } else { self.wave[a][idx[a]].powi(2) })
                    .sum::<f64>()
            })
            .collect()
    }

    /// Remove the modes annihilated by every first derivative
    /// (all axis indices in `{0, N/2}`), including the constant mode.
    pub(crate) fn remove_checkerboard_modes(&self, f: &mut [f64]) {
        for mask in 0..(1usize << self.axes) {
            let chi = |p: usize| -> f64 {
                let idx = self.index(p);
                let mut s = 1.0;
                for (a, &i) in idx.iter().enumerate().take(self.axes) {
                    if mask & (1 << a) != 0 && i % 2 == 1 {
                        s = -s;
                    }
                }
                s
            };
            let coef = (0..self.nodes).map(|p| f[p] * chi(p)).sum::<f64>() / self.nodes as f64;
            for (p, v) in f.iter_mut().enumerate() {
                *v -= coef * chi(p);
            }
        }
    }

    pub(crate) fn checkerboard_mode(&self, mask: usize) -> Vec<f64> {
        (0..self.nodes)
            .map(|p| {
                let idx = self.index(p);
                let odd = (0..self.axes).filter(|&a| mask & (1 << a) != 0 && idx[a] % 2 == 1).count();
                if odd % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect()
    }

    /// Trigonometric resampling onto another torus grid of the same
    /// dimension and periods. Nyquist content of the source is dropped.
    pub(crate) fn resample(&self, other: &TorusOps, f: &[f64]) -> Vec<f64> {
        let spec = self.forward(f);
        let mut out = vec![C::new(0.0, 0.0); other.nodes];
        let lim = (self.size.min(other.size) / 2) as i64;
        for (p, &v) in spec.iter().enumerate() {
            let idx = self.index(p);
            let mut q = 0usize;
            let mut keep = true;
            for &i in idx.iter().take(self.axes) {
                let m = signed_freq(i, self.size);
                if m.abs() >= lim {
                    keep = false;
                    break;
                }
                let j = m.rem_euclid(other.size as i64) as usize;
                q = q * other.size + j;
            }
            if keep {
                out[q] = v * (other.nodes as f64 / self.nodes as f64);
            }
        }
        other.inverse_real(out)
    }
}

pub(crate) fn signed_freq(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        if j == n / 2 {
            -(j as i64)
        } else {
            j as i64
        }
    } else {
        j as i64 - n as i64
    }
}
