//! Closed-form sine-product integrals and the triple-overlap tensor
//! `T_{ijn} = ∫ phi_i phi_j phi_n`, the single bridge between the electron
//! and phonon representations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{CoreError, Result};
use crate::spectral::SpectralBasis;

/// Exact `∫_0^L prod_i sin(n_i pi x / L) dx` for any number of factors.
///
/// Expands the product over `{±1}^k` sign choices of complex exponentials;
/// each term integrates to `L` (zero frequency) or
/// `L ((-1)^m - 1)/(i m pi)` (frequency `m`). Exact up to rounding.
pub fn sine_product_integral(indices: &[u32], length: f64) -> f64 {
    let k = indices.len();
    assert!(k >= 1 && k <= 16);
    // coefficient prefactor 1/(2i)^k
    let mut total_re = 0.0;
    let mut total_im = 0.0;
    for signs in 0..(1u32 << k) {
        let mut m: i64 = 0;
        let mut sign_product = 1.0;
        for (bit, &n) in indices.iter().enumerate() {
            if signs >> bit & 1 == 0 {
                m += n as i64;
            } else {
                m -= n as i64;
                sign_product = -sign_product;
            }
        }
        // integral of e^{i m pi x / L} over [0, L]
        let (re, im) = if m == 0 {
            (length, 0.0)
        } else {
            // ((-1)^m - 1) * L / (i m pi) ; purely imaginary numerator over i
            let num = if m % 2 == 0 { 0.0 } else { -2.0 };
            // (num)/(i m pi) * L = num * L / (m pi) * (1/i) = -i num L/(m pi)
            (0.0, -num * length / (m as f64 * PI))
        };
        total_re += sign_product * re;
        total_im += sign_product * im;
    }
    // divide by (2i)^k: multiply by (1/2)^k * i^{-k}
    let scale = 0.5f64.powi(k as i32);
    let (re, im) = (total_re * scale, total_im * scale);
    match k % 4 {
        0 => re,
        1 => im,  // i^{-1} = -i: Re[-i z] = Im z
        2 => -re, // i^{-2} = -1
        _ => -im, // i^{-3} = i: Re[i z] = -Im z
    }
}

/// `∫_0^pi sin(ax) sin(bx) sin(cx) dx`, the 1D building block of the tensor.
/// Zero unless `a + b + c` is odd.
pub fn triple_1d(a: u32, b: u32, c: u32) -> f64 {
    if (a + b + c) % 2 == 0 {
        return 0.0;
    }
    let term = |m: u32| -> f64 {
        if c == m {
            0.0
        } else {
            let parity = if (m + c) % 2 == 0 { 0.0 } else { 2.0 };
            c as f64 * parity / (c as f64 * c as f64 - m as f64 * m as f64)
        }
    };
    0.5 * (term(a.abs_diff(b)) - term(a + b))
}

/// Dense triple-overlap tensor `T_{ijn} = ∫ phi_i phi_j phi_n` of shape
/// `(B, B, M)`, symmetric in `(i, j)`, entries in closed form per axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlapTensor {
    pub b: usize,
    pub m: usize,
    entries: Vec<f64>,
}

impl OverlapTensor {
    #[inline]
    pub fn get(&self, i: usize, j: usize, n: usize) -> f64 {
        debug_assert!(i < self.b && j < self.b && n < self.m);
        self.entries[(i * self.b + j) * self.m + n]
    }

    /// Row-major `(B, B, M)` view of the entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// `(Phi_n v)_i = sum_j T_{ijn} v_j` - the action of multiplication by
    /// `phi_n` on an electron vector.
    pub fn apply_mode(&self, n: usize, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.b);
        for i in 0..self.b {
            let mut acc = 0.0;
            for (j, &vj) in v.iter().enumerate() {
                acc += self.get(i, j, n) * vj;
            }
            out[i] = acc;
        }
    }

    /// `v^T Phi_n v`.
    pub fn quadratic_form(&self, n: usize, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, &vi) in v.iter().enumerate() {
            for (j, &vj) in v.iter().enumerate() {
                acc += vi * self.get(i, j, n) * vj;
            }
        }
        acc
    }
}

/// Assemble the `(B, B, M)` overlap tensor from the basis. Entries are
/// independent closed forms, so assembly parallelizes without any
/// schedule dependence.
pub fn triple_overlap(basis: &SpectralBasis, b: usize, m: usize) -> Result<OverlapTensor> {
    if b > basis.len() || m > basis.len() {
        return Err(CoreError::OutOfBounds { b, m, available: basis.len() });
    }
    if b == 0 || m == 0 {
        return Err(CoreError::InvalidInput("tensor sizes must be >= 1".into()));
    }
    let dim = basis.domain.dim();
    let lengths = basis.domain.lengths.clone();
    let modes = basis.modes();
    let entries: Vec<f64> = (0..b * b * m)
        .into_par_iter()
        .map(|flat| {
            let n = flat % m;
            let ij = flat / m;
            let j = ij % b;
            let i = ij / b;
            if j > i {
                return 0.0; // filled from the (i, j) half below
            }
            let mut value = 1.0;
            for a in 0..dim {
                let l = lengths[a];
                let norm = (2.0 / l).powf(1.5);
                let scale = l / PI; // maps [0, L] integrals onto [0, pi]
                value *= norm
                    * scale
                    * triple_1d(modes[i].index[a], modes[j].index[a], modes[n].index[a]);
                if value == 0.0 {
                    return 0.0;
                }
            }
            value
        })
        .collect();
    let mut tensor = OverlapTensor { b, m, entries };
    // mirror the strictly-lower half into (j > i)
    for i in 0..b {
        for j in (i + 1)..b {
            for n in 0..m {
                let v = tensor.entries[(j * b + i) * m + n];
                tensor.entries[(i * b + j) * m + n] = v;
            }
        }
    }
    Ok(tensor)
}
