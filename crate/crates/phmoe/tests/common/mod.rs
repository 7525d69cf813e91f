//! Shared test oracles: independent numerical routines (Taylor series,
//! adaptive quadrature, random model generators) used to cross-check the
//! library's closed-form and block-matrix paths.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use phmoe::SubIntensityMatrix;

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Matrix exponential by a pre-scaled 200-term Taylor series: scale `A` by a
/// power of two until its max-norm is below 1/2, sum the series, square back.
pub fn taylor_expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.amax();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = DMatrix::<f64>::identity(n, n);
    for k in 1..=200 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Adaptive Simpson quadrature for matrix-valued integrands, refined until
/// the entrywise error estimate is below `tol`.
pub fn integrate_matrix<F: Fn(f64) -> DMatrix<f64>>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
) -> DMatrix<f64> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (&fa + &fm * 4.0 + &fb) * ((b - a) / 6.0);
    recurse_matrix(f, a, b, &fa, &fm, &fb, &whole, tol, 30)
}

#[allow(clippy::too_many_arguments)]
fn recurse_matrix<F: Fn(f64) -> DMatrix<f64>>(
    f: &F,
    a: f64,
    b: f64,
    fa: &DMatrix<f64>,
    fm: &DMatrix<f64>,
    fb: &DMatrix<f64>,
    whole: &DMatrix<f64>,
    tol: f64,
    depth: u32,
) -> DMatrix<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (fa + &flm * 4.0 + fm) * ((m - a) / 6.0);
    let right = (fm + &frm * 4.0 + fb) * ((b - m) / 6.0);
    let refined = &left + &right;
    let err = (&refined - whole).amax();
    if depth == 0 || err <= 15.0 * tol {
        let correction = (&refined - whole) / 15.0;
        return refined + correction;
    }
    recurse_matrix(f, a, m, fa, &flm, fm, &left, tol / 2.0, depth - 1)
        + recurse_matrix(f, m, b, fm, &frm, fb, &right, tol / 2.0, depth - 1)
}

/// Scalar adaptive Simpson quadrature.
pub fn integrate_scalar<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let m = integrate_matrix(&|x| DMatrix::from_element(1, 1, f(x)), a, b, tol);
    m[(0, 0)]
}

/// Random sub-intensity matrix of order `p` with dense strictly-positive
/// jump and exit rates.
pub fn random_sub_intensity(p: usize, rng: &mut ChaCha12Rng) -> SubIntensityMatrix {
    let mut m = DMatrix::zeros(p, p);
    for k in 0..p {
        let mut total = 0.0;
        for l in 0..p {
            if l != k {
                let rate = rng.gen_range(0.05..1.5);
                m[(k, l)] = rate;
                total += rate;
            }
        }
        let exit = rng.gen_range(0.05..1.5);
        m[(k, k)] = -(total + exit);
    }
    SubIntensityMatrix::new(m).expect("random construction is valid")
}

/// Random probability vector of length `p` with strictly positive entries.
pub fn random_simplex(p: usize, rng: &mut ChaCha12Rng) -> DVector<f64> {
    let mut v = DVector::from_fn(p, |_, _| rng.gen_range(0.05..1.0));
    let total = v.sum();
    v /= total;
    // Nudge so the entries sum to one at full precision.
    let correction = 1.0 - v.sum();
    v[0] += correction;
    v
}

/// Empirical Kolmogorov-Smirnov distance against a reference CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in sample.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(((i as f64 + 1.0) / n - f).max(f - i as f64 / n));
    }
    d
}
