//! Dense matrix kernels: matrix exponentials, exponential-integral blocks,
//! cumulative integrals, fractional powers, and dominant-eigenvalue analysis.
//!
//! Everything here operates on dense `nalgebra` matrices. The intended problem
//! sizes are small (state spaces of order up to a few dozen), so no sparse or
//! structured paths exist.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Padé order-13 scaling-and-squaring thresholds (Higham 2005, Table 4.1).
const THETA_3: f64 = 1.495_585_217_958_292e-2;
const THETA_5: f64 = 2.539_398_330_063_230e-1;
const THETA_7: f64 = 9.504_178_996_162_932e-1;
const THETA_9: f64 = 2.097_847_961_257_068e0;
const THETA_13: f64 = 5.371_920_351_148_152e0;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const PADE_9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// A sub-intensity matrix `T` together with its exit-rate vector `t = -T 1`.
///
/// `T` is the transient block of the generator of a Markov jump process with
/// one absorbing state: strictly negative diagonal, non-negative off-diagonal
/// entries, row sums at most zero, and invertible (absorption is certain from
/// every state).
#[derive(Debug, Clone, PartialEq)]
pub struct SubIntensityMatrix {
    matrix: DMatrix<f64>,
    exit: DVector<f64>,
}

impl SubIntensityMatrix {
    /// Validates and wraps a candidate sub-intensity matrix.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let p = matrix.nrows();
        if p == 0 || matrix.ncols() != p {
            return Err(Error::invalid(format!(
                "sub-intensity matrix must be square with order >= 1, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sub-intensity matrix has non-finite entries"));
        }
        let scale = matrix.amax().max(1.0);
        let tol = 1e-12 * scale;
        for k in 0..p {
            if matrix[(k, k)] >= 0.0 {
                return Err(Error::invalid(format!(
                    "diagonal entry ({k},{k}) = {} must be strictly negative",
                    matrix[(k, k)]
                )));
            }
            for l in 0..p {
                if l != k && matrix[(k, l)] < -tol {
                    return Err(Error::invalid(format!(
                        "off-diagonal entry ({k},{l}) = {} must be non-negative",
                        matrix[(k, l)]
                    )));
                }
            }
        }
        let mut exit = DVector::zeros(p);
        for k in 0..p {
            let row_sum: f64 = matrix.row(k).iter().sum();
            if row_sum > tol {
                return Err(Error::invalid(format!(
                    "row {k} sums to {row_sum}, must be <= 0"
                )));
            }
            // Clamp roundoff so exit rates are exactly non-negative.
            exit[k] = (-row_sum).max(0.0);
        }
        if matrix.clone().lu().determinant().abs() <= f64::MIN_POSITIVE {
            return Err(Error::invalid(
                "sub-intensity matrix is singular: some state never reaches absorption",
            ));
        }
        Ok(SubIntensityMatrix { matrix, exit })
    }

    pub fn order(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Exit-rate vector `t = -T 1`.
    pub fn exit_vector(&self) -> &DVector<f64> {
        &self.exit
    }

    /// Solves `T x = rhs` for each column of `rhs`.
    pub(crate) fn solve(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.matrix
            .clone()
            .lu()
            .solve(rhs)
            .ok_or_else(|| Error::numerical("sub-intensity matrix solve failed (singular T)"))
    }
}

/// Decay-rate summary of a sub-intensity matrix: `exp(T z)` behaves like
/// `z^{block_size-1} exp(-eta z)` for large `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    /// Decay rate: negated largest real eigenvalue of `T`.
    pub eta: f64,
    /// Estimated size of the dominant Jordan block: the number of eigenvalues
    /// within `multiplicity_tolerance` of the dominant one. Exact Jordan
    /// structure is numerically ill-posed, so this is an estimate.
    pub block_size: usize,
    /// Absolute tolerance used to group eigenvalues.
    pub multiplicity_tolerance: f64,
}

fn check_finite(a: &DMatrix<f64>, what: &str) -> Result<()> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{what} has non-finite entries")));
    }
    Ok(())
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Evaluates the Padé numerator/denominator pair (U odd part, V even part)
/// for orders 3, 5, 7, 9.
fn pade_low_order(a: &DMatrix<f64>, coeffs: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let ident = DMatrix::identity(n, n);
    let a2 = a * a;
    // Powers a^0, a^2, a^4, ... of the even part.
    let mut even_pows: Vec<DMatrix<f64>> = vec![ident];
    while even_pows.len() < coeffs.len() / 2 {
        even_pows.push(even_pows.last().unwrap() * &a2);
    }
    let n_pairs = coeffs.len() / 2;
    let mut u_inner = DMatrix::zeros(n, n);
    let mut v = DMatrix::zeros(n, n);
    for i in 0..n_pairs {
        v += &even_pows[i] * coeffs[2 * i];
        u_inner += &even_pows[i] * coeffs[2 * i + 1];
    }
    (a * u_inner, v)
}

/// Matrix exponential `exp(scale * a)` by scaling-and-squaring with a
/// degree-13 Padé approximant.
pub fn expm(a: &DMatrix<f64>, scale: f64) -> Result<DMatrix<f64>> {
    check_finite(a, "matrix exponent argument")?;
    if !scale.is_finite() {
        return Err(Error::invalid(format!("scale {scale} is not finite")));
    }
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::invalid("expm requires a non-empty square matrix"));
    }
    let m = a * scale;
    let norm = one_norm(&m);

    let (u, v, squarings) = if norm <= THETA_3 {
        let (u, v) = pade_low_order(&m, &PADE_3);
        (u, v, 0u32)
    } else if norm <= THETA_5 {
        let (u, v) = pade_low_order(&m, &PADE_5);
        (u, v, 0)
    } else if norm <= THETA_7 {
        let (u, v) = pade_low_order(&m, &PADE_7);
        (u, v, 0)
    } else if norm <= THETA_9 {
        let (u, v) = pade_low_order(&m, &PADE_9);
        (u, v, 0)
    } else {
        let squarings = ((norm / THETA_13).log2().ceil() as i32).max(0) as u32;
        let scaled = &m / 2f64.powi(squarings as i32);
        let ident = DMatrix::identity(n, n);
        let a2 = &scaled * &scaled;
        let a4 = &a2 * &a2;
        let a6 = &a2 * &a4;
        let b = &PADE_13;
        let u_hi = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
        let u_lo = &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1];
        let u = &scaled * (u_hi + u_lo);
        let v_hi = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
        let v = v_hi + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
        (u, v, squarings)
    };

    let denom = &v - &u;
    let numer = &v + &u;
    let mut result = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| Error::numerical("Padé denominator is singular in expm"))?;
    for _ in 0..squarings {
        result = &result * &result;
    }
    Ok(result)
}

/// Jointly evaluates `exp(T z)` and the rank-one convolution integral
/// `J(z) = ∫_0^z exp(T (z-u)) c r' exp(T u) du` for a column `c` and row `r`.
///
/// Uses the block-matrix identity: the exponential of `[[T, c r'], [0, T]] z`
/// carries `exp(T z)` in its diagonal blocks and `J(z)` in the top-right
/// block (Van Loan's method).
pub fn expm_rank_one_integral(
    sub: &SubIntensityMatrix,
    col: &DVector<f64>,
    row: &DVector<f64>,
    z: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let p = sub.order();
    if col.len() != p || row.len() != p {
        return Err(Error::invalid(format!(
            "vector lengths ({}, {}) must match order {p}",
            col.len(),
            row.len()
        )));
    }
    if !z.is_finite() || z < 0.0 {
        return Err(Error::invalid(format!(
            "integral endpoint z = {z} must be finite and non-negative"
        )));
    }
    let t = sub.matrix();
    let mut block = DMatrix::zeros(2 * p, 2 * p);
    block.view_mut((0, 0), (p, p)).copy_from(t);
    block.view_mut((p, p), (p, p)).copy_from(t);
    for i in 0..p {
        for j in 0..p {
            block[(i, p + j)] = col[i] * row[j];
        }
    }
    let big = expm(&block, z)?;
    let etz = big.view((0, 0), (p, p)).into_owned();
    let integral = big.view((0, p), (p, p)).into_owned();
    Ok((etz, integral))
}

/// Cumulative integral `∫_a^b exp(T u) du = T^{-1} (exp(T b) - exp(T a))`.
///
/// `b` may be `+∞`: since sub-intensity exponentials vanish at infinity, the
/// result is then `-T^{-1} exp(T a)`.
pub fn expm_cumulative(sub: &SubIntensityMatrix, a: f64, b: f64) -> Result<DMatrix<f64>> {
    if a.is_nan() || b.is_nan() || a < 0.0 || !a.is_finite() {
        return Err(Error::invalid(format!(
            "integration bounds must satisfy 0 <= a < inf, got a = {a}, b = {b}"
        )));
    }
    if b < a {
        return Err(Error::invalid(format!(
            "upper bound b = {b} is below lower bound a = {a}"
        )));
    }
    let p = sub.order();
    if b == a {
        return Ok(DMatrix::zeros(p, p));
    }
    let ea = expm(sub.matrix(), a)?;
    let diff = if b.is_finite() {
        expm(sub.matrix(), b)? - ea
    } else {
        -ea
    };
    sub.solve(&diff)
}

const SQRT_MAX_ITER: usize = 100;
const LOG_SERIES_NORM: f64 = 0.2;
const LOG_MAX_SQRTS: usize = 60;

/// 9-point Gauss-Legendre nodes and weights on [0, 1]; together they evaluate
/// the [9/9] Padé approximant of log(1 + x) in partial-fraction form.
const GL_NODES: [f64; 9] = [
    0.015_919_880_246_186_96,
    0.081_984_446_336_682_1,
    0.193_314_283_649_704_8,
    0.337_873_288_298_095_5,
    0.5,
    0.662_126_711_701_904_5,
    0.806_685_716_350_295_2,
    0.918_015_553_663_317_9,
    0.984_080_119_753_813_04,
];
const GL_WEIGHTS: [f64; 9] = [
    0.040_637_194_180_787_2,
    0.090_324_080_347_428_7,
    0.130_305_348_201_467_7,
    0.156_173_538_520_001_4,
    0.165_119_677_500_629_9,
    0.156_173_538_520_001_4,
    0.130_305_348_201_467_7,
    0.090_324_080_347_428_7,
    0.040_637_194_180_787_2,
];

/// Principal square root by the coupled Denman-Beavers iteration.
fn sqrtm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::identity(n, n);
    for _ in 0..SQRT_MAX_ITER {
        let y_inv = y
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::numerical("matrix square root: singular iterate"))?;
        let z_inv = z
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::numerical("matrix square root: singular iterate"))?;
        let y_next = (&y + z_inv) * 0.5;
        let z_next = (&z + y_inv) * 0.5;
        let delta = one_norm(&(&y_next - &y));
        y = y_next;
        z = z_next;
        if delta <= 1e-15 * one_norm(&y).max(1.0) {
            return Ok(y);
        }
    }
    Err(Error::numerical(
        "matrix square root did not converge (spectrum near the negative real axis?)",
    ))
}

/// Principal matrix logarithm by inverse scaling-and-squaring: repeated
/// square roots until `A^(1/2^k)` is close to the identity, then a
/// partial-fraction Padé approximant of log(1 + X).
fn logm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let ident = DMatrix::identity(n, n);
    let mut b = a.clone();
    let mut k = 0usize;
    while one_norm(&(&b - &ident)) > LOG_SERIES_NORM {
        if k >= LOG_MAX_SQRTS {
            return Err(Error::numerical(
                "matrix logarithm: square-root recursion did not contract",
            ));
        }
        b = sqrtm(&b)?;
        k += 1;
    }
    let x = &b - &ident;
    let mut log_b = DMatrix::zeros(n, n);
    for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
        let shifted = &ident + &x * *node;
        let solved = shifted
            .lu()
            .solve(&x)
            .ok_or_else(|| Error::numerical("matrix logarithm: singular Padé term"))?;
        log_b += solved * *weight;
    }
    Ok(log_b * 2f64.powi(k as i32))
}

/// Real fractional power `A^s = exp(s log A)` with the principal logarithm.
///
/// Requires the spectrum of `A` to lie in the open right half-plane (as for
/// `A = -T` with `T` a sub-intensity matrix).
pub fn fractional_power(a: &DMatrix<f64>, s: f64) -> Result<DMatrix<f64>> {
    check_finite(a, "fractional power argument")?;
    if !s.is_finite() {
        return Err(Error::invalid(format!("exponent {s} is not finite")));
    }
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::invalid(
            "fractional power requires a non-empty square matrix",
        ));
    }
    let log_a = logm(a)?;
    expm(&log_a, s)
}

/// Dominant-eigenvalue summary `(eta, m)` of a sub-intensity matrix.
///
/// `eta` is the negated largest real eigenvalue; `m` counts the eigenvalues
/// within `1e-6 * ||T||_1` of the dominant one (a Jordan block size
/// estimate).
pub fn dominant_eigen(sub: &SubIntensityMatrix) -> Result<SpectralSummary> {
    let t = sub.matrix();
    let eigen = t.complex_eigenvalues();
    let tol = 1e-6 * one_norm(t).max(f64::MIN_POSITIVE);
    let mut max_re = f64::NEG_INFINITY;
    for ev in eigen.iter() {
        if !ev.re.is_finite() {
            return Err(Error::numerical("eigenvalue computation produced non-finite values"));
        }
        if ev.re > max_re {
            max_re = ev.re;
        }
    }
    let dominant = nalgebra::Complex::new(max_re, 0.0);
    let block_size = eigen.iter().filter(|ev| (*ev - dominant).norm() <= tol).count();
    Ok(SpectralSummary {
        eta: -max_re,
        block_size: block_size.max(1),
        multiplicity_tolerance: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).amax()
    }

    #[test]
    fn expm_of_zero_is_identity() {
        for n in 1..5 {
            let z = DMatrix::zeros(n, n);
            let e = expm(&z, 1.0).unwrap();
            assert!(max_abs_diff(&e, &DMatrix::identity(n, n)) < 1e-15);
        }
    }

    #[test]
    fn expm_diagonal() {
        let a = dmatrix![-1.0, 0.0; 0.0, -2.0];
        let e = expm(&a, 1.0).unwrap();
        assert!((e[(0, 0)] - (-1.0f64).exp()).abs() < 1e-14);
        assert!((e[(1, 1)] - (-2.0f64).exp()).abs() < 1e-14);
        assert!(e[(0, 1)].abs() < 1e-15 && e[(1, 0)].abs() < 1e-15);
    }

    #[test]
    fn expm_nilpotent() {
        let a = dmatrix![0.0, 1.0; 0.0, 0.0];
        let e = expm(&a, 1.0).unwrap();
        let expected = dmatrix![1.0, 1.0; 0.0, 1.0];
        assert!(max_abs_diff(&e, &expected) < 1e-15);
    }

    #[test]
    fn expm_rejects_non_finite() {
        let a = dmatrix![f64::NAN, 0.0; 0.0, 1.0];
        assert!(matches!(expm(&a, 1.0), Err(Error::InvalidArgument(_))));
        let b = dmatrix![1.0];
        assert!(matches!(expm(&b, f64::INFINITY), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn rank_one_integral_scalar_closed_form() {
        let sub = SubIntensityMatrix::new(dmatrix![-1.0]).unwrap();
        let col = DVector::from_element(1, 1.0);
        let row = DVector::from_element(1, 1.0);
        let (etz, j) = expm_rank_one_integral(&sub, &col, &row, 2.0).unwrap();
        assert!((etz[(0, 0)] - (-2.0f64).exp()).abs() < 1e-14);
        assert!((j[(0, 0)] - 2.0 * (-2.0f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn rank_one_integral_at_zero_is_zero() {
        let sub = SubIntensityMatrix::new(dmatrix![-1.0, 0.5; 0.3, -2.0]).unwrap();
        let col = sub.exit_vector().clone();
        let row = DVector::from_vec(vec![0.4, 0.6]);
        let (etz, j) = expm_rank_one_integral(&sub, &col, &row, 0.0).unwrap();
        assert!(max_abs_diff(&etz, &DMatrix::identity(2, 2)) < 1e-15);
        assert!(j.amax() < 1e-15);
    }

    #[test]
    fn rank_one_integral_rejects_negative_z() {
        let sub = SubIntensityMatrix::new(dmatrix![-1.0]).unwrap();
        let v = DVector::from_element(1, 1.0);
        assert!(expm_rank_one_integral(&sub, &v, &v, -0.5).is_err());
    }

    #[test]
    fn cumulative_scalar_closed_form() {
        let sub = SubIntensityMatrix::new(dmatrix![-1.0]).unwrap();
        let c = expm_cumulative(&sub, 0.0, 2f64.ln()).unwrap();
        assert!((c[(0, 0)] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn cumulative_empty_interval_is_zero() {
        let sub = SubIntensityMatrix::new(dmatrix![-1.0, 0.5; 0.3, -2.0]).unwrap();
        let c = expm_cumulative(&sub, 0.7, 0.7).unwrap();
        assert!(c.amax() == 0.0);
    }

    #[test]
    fn cumulative_infinite_upper_bound() {
        // ∫_0^∞ exp(T u) du = -T^{-1} = (−T)^{-1}.
        let sub = SubIntensityMatrix::new(dmatrix![-2.0]).unwrap();
        let c = expm_cumulative(&sub, 0.0, f64::INFINITY).unwrap();
        assert!((c[(0, 0)] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn cumulative_rejects_reversed_bounds() {
        let sub = SubIntensityMatrix::new(dmatrix![-1.0]).unwrap();
        assert!(expm_cumulative(&sub, 2.0, 1.0).is_err());
    }

    #[test]
    fn fractional_power_identity_exponent() {
        let a = dmatrix![2.0, 0.7; 0.1, 3.0];
        let p = fractional_power(&a, 1.0).unwrap();
        assert!(max_abs_diff(&p, &a) < 1e-12);
    }

    #[test]
    fn fractional_power_diagonal_square_root() {
        let a = dmatrix![4.0, 0.0; 0.0, 9.0];
        let p = fractional_power(&a, 0.5).unwrap();
        let expected = dmatrix![2.0, 0.0; 0.0, 3.0];
        assert!(max_abs_diff(&p, &expected) < 1e-12);
    }

    #[test]
    fn fractional_power_defective_matrix() {
        // -T for the Erlang generator is defective; the logm path must still work.
        let a = dmatrix![1.0, -1.0; 0.0, 1.0];
        let p = fractional_power(&a, 2.0).unwrap();
        let expected = &a * &a;
        assert!(max_abs_diff(&p, &expected) < 1e-12);
    }

    #[test]
    fn dominant_eigen_diagonal() {
        let sub = SubIntensityMatrix::new(dmatrix![-1.0, 0.0; 0.0, -3.0]).unwrap();
        let s = dominant_eigen(&sub).unwrap();
        assert!((s.eta - 1.0).abs() < 1e-12);
        assert_eq!(s.block_size, 1);
    }

    #[test]
    fn dominant_eigen_two_state_example() {
        let sub = SubIntensityMatrix::new(dmatrix![-1.0, 0.5; 1.0, -2.0]).unwrap();
        let s = dominant_eigen(&sub).unwrap();
        // Largest eigenvalue is (-3 + sqrt(3)) / 2.
        let exact = (3.0 - 3f64.sqrt()) / 2.0;
        assert!((s.eta - exact).abs() < 1e-12);
        assert!((s.eta - 0.634).abs() < 5e-4);
        assert_eq!(s.block_size, 1);
    }

    #[test]
    fn dominant_eigen_erlang_block() {
        let sub = SubIntensityMatrix::new(dmatrix![-1.0, 1.0; 0.0, -1.0]).unwrap();
        let s = dominant_eigen(&sub).unwrap();
        assert!((s.eta - 1.0).abs() < 1e-9);
        assert_eq!(s.block_size, 2);
    }

    #[test]
    fn sub_intensity_rejects_bad_matrices() {
        assert!(SubIntensityMatrix::new(dmatrix![1.0]).is_err());
        assert!(SubIntensityMatrix::new(dmatrix![-1.0, -0.5; 0.0, -1.0]).is_err());
        assert!(SubIntensityMatrix::new(dmatrix![-1.0, 2.0; 0.0, -1.0]).is_err());
        // Row sums to zero everywhere -> singular (no absorption).
        assert!(SubIntensityMatrix::new(dmatrix![-1.0, 1.0; 1.0, -1.0]).is_err());
    }

    #[test]
    fn exit_vector_matches_row_sums() {
        let sub = SubIntensityMatrix::new(dmatrix![-2.0, 0.5; 0.25, -1.0]).unwrap();
        assert!((sub.exit_vector()[0] - 1.5).abs() < 1e-15);
        assert!((sub.exit_vector()[1] - 0.75).abs() < 1e-15);
    }
}
