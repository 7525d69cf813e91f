//! Adaptive Simpson quadrature for smooth scalar integrands.

/// Integrates `f` over `[a, b]` to the requested relative tolerance
/// (with an absolute floor for integrals near zero).
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // First-pass magnitude estimate for the relative tolerance.
    let scale = whole.abs().max(abs_floor);
    simpson_recurse(f, a, b, fa, fm, fb, whole, rel_tol * scale, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson_recurse(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
        + simpson_recurse(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
}
