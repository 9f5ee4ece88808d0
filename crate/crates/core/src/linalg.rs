//! Dense symmetric eigendecomposition wrappers, a Lanczos ground-state
//! solver for matrix-free operators, and small regression helpers.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{CoreError, Result};

/// Eigendecomposition of a real symmetric matrix with eigenvalues sorted
/// ascending and eigenvectors in matching column order.
#[derive(Debug, Clone)]
pub struct SymmetricSpectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Full eigendecomposition of a symmetric matrix, sorted ascending.
pub fn sym_eigen(matrix: &DMatrix<f64>) -> SymmetricSpectrum {
    let n = matrix.nrows();
    let eig = matrix.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    SymmetricSpectrum { values, vectors }
}

/// Eigenvalues only, sorted ascending.
pub fn sym_eigenvalues(matrix: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = matrix.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Tr f(A) for symmetric A via eigendecomposition.
pub fn trace_fn(matrix: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> f64 {
    sym_eigenvalues(matrix).iter().map(|&t| f(t)).sum()
}

/// Smallest eigenvalue of the difference `rhs - lhs`; nonnegative values
/// certify `lhs <= rhs` on the assembled space.
pub fn min_eig_difference(lhs: &DMatrix<f64>, rhs: &DMatrix<f64>) -> f64 {
    let diff = rhs - lhs;
    sym_eigenvalues(&diff)[0]
}

/// Result of a Lanczos ground-state solve.
#[derive(Debug, Clone)]
pub struct LanczosGround {
    pub value: f64,
    pub vector: Vec<f64>,
    /// True residual norm `||A v - value v||` of the returned pair.
    pub residual: f64,
    pub iterations: usize,
}

/// Lowest eigenpair of a symmetric operator given only its matrix-vector
/// product, via Lanczos with full reorthogonalization and restarts.
///
/// The starting vector is drawn deterministically from `seed`, so repeated
/// runs are bit-reproducible.
pub fn lanczos_smallest<F>(
    dim: usize,
    matvec: F,
    tol: f64,
    max_restarts: usize,
    seed: u64,
) -> Result<LanczosGround>
where
    F: Fn(&[f64], &mut [f64]),
{
    assert!(dim > 0);
    let block = dim.min(260);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut start: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    normalize(&mut start);

    let mut total_iters = 0;
    let mut best: Option<LanczosGround> = None;
    for _restart in 0..max_restarts {
        let (value, vector, iters) = lanczos_cycle(dim, &matvec, &start, block);
        total_iters += iters;
        let mut hv = vec![0.0; dim];
        matvec(&vector, &mut hv);
        let mut res = 0.0;
        for i in 0..dim {
            let r = hv[i] - value * vector[i];
            res += r * r;
        }
        let res = res.sqrt();
        let candidate = LanczosGround { value, vector, residual: res, iterations: total_iters };
        let improved = best.as_ref().map_or(true, |b| res < b.residual);
        if improved {
            best = Some(candidate);
        }
        let current = best.as_ref().unwrap();
        if current.residual <= tol {
            return Ok(best.unwrap());
        }
        // restart from the best Ritz vector
        start = current.vector.clone();
    }
    let b = best.unwrap();
    Err(CoreError::EigensolverStall { iterations: b.iterations, tol, best: b.residual })
}

fn lanczos_cycle<F>(dim: usize, matvec: &F, start: &[f64], block: usize) -> (f64, Vec<f64>, usize)
where
    F: Fn(&[f64], &mut [f64]),
{
    let m = block.min(dim);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut alphas: Vec<f64> = Vec::with_capacity(m);
    let mut betas: Vec<f64> = Vec::with_capacity(m);

    let mut v = start.to_vec();
    normalize(&mut v);
    basis.push(v.clone());
    let mut w = vec![0.0; dim];

    for j in 0..m {
        matvec(&basis[j], &mut w);
        let alpha = dot(&w, &basis[j]);
        alphas.push(alpha);
        for i in 0..dim {
            w[i] -= alpha * basis[j][i];
        }
        if j > 0 {
            let b = betas[j - 1];
            for i in 0..dim {
                w[i] -= b * basis[j - 1][i];
            }
        }
        // full reorthogonalization, twice for stability
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                for i in 0..dim {
                    w[i] -= c * q[i];
                }
            }
        }
        let beta = norm(&w);
        if beta < 1e-14 || j + 1 == m {
            break;
        }
        betas.push(beta);
        let mut next = w.clone();
        for x in next.iter_mut() {
            *x /= beta;
        }
        basis.push(next);
    }

    let k = alphas.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let spec = sym_eigen(&t);
    let value = spec.values[0];
    let coeffs = spec.vectors.column(0);
    let mut vector = vec![0.0; dim];
    for (j, q) in basis.iter().enumerate() {
        let c = coeffs[j];
        for i in 0..dim {
            vector[i] += c * q[i];
        }
    }
    normalize(&mut vector);
    (value, vector, k)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn normalize(a: &mut [f64]) {
    let n = norm(a);
    if n > 0.0 {
        for x in a.iter_mut() {
            *x /= n;
        }
    }
}

/// Ordinary least squares for `y = a + b x`; returns `(a, b, stderr_of_fit)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| u * v).sum();
    let denom = n * sxx - sx * sx;
    let b = (n * sxy - sx * sy) / denom;
    let a = (sy - b * sx) / n;
    let mut ss = 0.0;
    for (u, v) in x.iter().zip(y) {
        let r = v - a - b * u;
        ss += r * r;
    }
    let dof = (x.len().max(3) - 2) as f64;
    (a, b, (ss / dof).sqrt())
}

/// Slope of `log y` against `log x` with its R^2; inputs must be positive.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (a, b, _) = linear_fit(&lx, &ly);
    let mean: f64 = ly.iter().sum::<f64>() / ly.len() as f64;
    let ss_tot: f64 = ly.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = lx.iter().zip(&ly).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (b, r2)
}

/// Deterministic per-sample RNG stream: every sample index gets its own
/// generator so parallel loops stay schedule-independent.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
