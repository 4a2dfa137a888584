//! Pointwise algebra on 1×1 and 2×2 complex matrices stored row-major in
//! slices. A (1,1)-tensor `T` is stored as `T[i][j] = T_{ij̄}`; its raised
//! trace against a metric `g` is `tr(g⁻¹ T)`.

use num_complex::Complex64 as C;

pub(crate) const ZERO: C = C { re: 0.0, im: 0.0 };

#[inline]
pub(crate) fn det(m: &[C], n: usize) -> f64 {
    match n {
        1 => m[0].re,
        _ => (m[0] * m[3] - m[1] * m[2]).re,
    }
}

#[inline]
pub(crate) fn det_c(m: &[C], n: usize) -> C {
    match n {
        1 => m[0],
        _ => m[0] * m[3] - m[1] * m[2],
    }
}

/// Adjugate; for 2×2 this is linear in the entries.
#[inline]
pub(crate) fn adj(m: &[C], n: usize) -> [C; 4] {
    match n {
        1 => [C::new(1.0, 0.0), ZERO, ZERO, ZERO],
        _ => [m[3], -m[1], -m[2], m[0]],
    }
}

#[inline]
pub(crate) fn inv(m: &[C], n: usize) -> [C; 4] {
    match n {
        1 => [C::new(1.0, 0.0) / m[0], ZERO, ZERO, ZERO],
        _ => {
            let d = det_c(m, n);
            let a = adj(m, n);
            [a[0] / d, a[1] / d, a[2] / d, a[3] / d]
        }
    }
}

#[inline]
pub(crate) fn mul(a: &[C], b: &[C], n: usize) -> [C; 4] {
    match n {
        1 => [a[0] * b[0], ZERO, ZERO, ZERO],
        _ => [
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ],
    }
}

/// Real part of `tr(a b)`.
#[inline]
pub(crate) fn tr_prod(a: &[C], b: &[C], n: usize) -> f64 {
    match n {
        1 => (a[0] * b[0]).re,
        _ => (a[0] * b[0] + a[1] * b[2] + a[2] * b[1] + a[3] * b[3]).re,
    }
}

/// `tr(g⁻¹ t)` for Hermitian `t`.
#[inline]
pub(crate) fn trace_with(g: &[C], t: &[C], n: usize) -> f64 {
    let gi = inv(g, n);
    tr_prod(&gi, t, n)
}

/// Squared norm `tr(g⁻¹ t g⁻¹ t)` of a Hermitian (1,1)-tensor.
#[inline]
pub(crate) fn norm2_11(g: &[C], t: &[C], n: usize) -> f64 {
    let gi = inv(g, n);
    let a = mul(&gi, t, n);
    tr_prod(&a, &a, n)
}

/// Squared norm of a symmetric (2,0)-tensor: `Σ g^{ik̄} g^{jl̄} c_{ij} conj(c_{kl})`.
#[inline]
pub(crate) fn norm2_20(g: &[C], c: &[C], n: usize) -> f64 {
    pair_20(g, c, c, n)
}

/// Lower Cholesky factor `L` of a Hermitian positive `h`, `h = L L^*`.
#[inline]
pub(crate) fn chol_lower(h: &[C], n: usize) -> [C; 4] {
    match n {
        1 => [C::new(h[0].re.sqrt(), 0.0), ZERO, ZERO, ZERO],
        _ => {
            let l00 = h[0].re.sqrt();
            let l10 = h[2] / l00;
            let l11 = (h[3].re - l10.norm_sqr()).sqrt();
            [C::new(l00, 0.0), ZERO, l10, C::new(l11, 0.0)]
        }
    }
}

/// `L^* a conj(L)`: with `g⁻¹ = L L^*`, the Frobenius pairing of whitened
/// tensors equals [`pair_20`].
#[inline]
pub(crate) fn whiten_20(l: &[C], a: &[C], n: usize) -> [C; 4] {
    let ls = [l[0].conj(), l[2].conj(), l[1].conj(), l[3].conj()];
    let lc = [l[0].conj(), l[1].conj(), l[2].conj(), l[3].conj()];
    mul(&mul(&ls, a, n), &lc, n)
}

/// Real part of the Hermitian pairing of two (2,0)-tensors.
#[inline]
pub(crate) fn pair_20(g: &[C], a: &[C], b: &[C], n: usize) -> f64 {
    let h = inv(g, n);
    match n {
        1 => (h[0] * h[0] * a[0] * b[0].conj()).re,
        _ => {
            let mut s = ZERO;
            for k in 0..2 {
                for l in 0..2 {
                    let mut hah = ZERO;
                    for i in 0..2 {
                        for j in 0..2 {
                            hah += h[k * 2 + i] * a[i * 2 + j] * h[l * 2 + j];
                        }
                    }
                    s += hah * b[k * 2 + l].conj();
                }
            }
            s.re
        }
    }
}

/// Eigenvalues of `g⁻¹ a` for Hermitian positive `g` and Hermitian `a`, ascending.
#[inline]
pub(crate) fn rel_eigs(g: &[C], a: &[C], n: usize) -> (f64, f64) {
    match n {
        1 => {
            let l = a[0].re / g[0].re;
            (l, l)
        }
        _ => {
            let dg = det(g, n);
            let b = tr_prod(&adj(g, n), a, n);
            let c = det(a, n);
            let disc = (b * b - 4.0 * dg * c).max(0.0).sqrt();
            ((b - disc) / (2.0 * dg), (b + disc) / (2.0 * dg))
        }
    }
}
