//! A small derivative-free Nelder-Mead minimizer for low-dimensional smooth
//! objectives (transform parameters, test oracles).

/// Options for [`nelder_mead`].
#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// Initial simplex step added to each coordinate of the start point.
    pub initial_step: f64,
    pub max_iterations: usize,
    /// Stop when the simplex function-value spread falls below this.
    pub f_tolerance: f64,
    /// Stop when the simplex diameter falls below this.
    pub x_tolerance: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            initial_step: 0.25,
            max_iterations: 400,
            f_tolerance: 1e-12,
            x_tolerance: 1e-10,
        }
    }
}

/// Result of a Nelder-Mead run.
#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimizes `f` from `x0` with the standard reflect/expand/contract/shrink
/// moves. Non-finite objective values are treated as +inf, so the simplex
/// retreats from invalid regions.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    options: &NelderMeadOptions,
) -> NelderMeadResult {
    let n = x0.len();
    assert!(n >= 1, "nelder_mead requires at least one parameter");
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += if p[i].abs() > 1e-12 {
            options.initial_step * p[i].abs()
        } else {
            options.initial_step
        };
        let v = eval(&p);
        simplex.push((p, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iterations {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = if worst.is_finite() { worst - best } else { f64::INFINITY };
        let diameter = (0..n)
            .map(|i| {
                simplex
                    .iter()
                    .map(|(p, _)| p[i])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    })
            })
            .map(|(lo, hi)| hi - lo)
            .fold(0.0, f64::max);
        if spread <= options.f_tolerance && diameter <= options.x_tolerance {
            converged = true;
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; n];
        for (p, _) in simplex.iter().take(n) {
            for i in 0..n {
                centroid[i] += p[i] / n as f64;
            }
        }
        let worst_point = simplex[n].0.clone();
        let blend = |coef: f64| -> Vec<f64> {
            (0..n)
                .map(|i| centroid[i] + coef * (centroid[i] - worst_point[i]))
                .collect()
        };

        let reflected = blend(REFLECT);
        let f_reflected = eval(&reflected);
        if f_reflected < simplex[0].1 {
            let expanded = blend(EXPAND);
            let f_expanded = eval(&expanded);
            simplex[n] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
            continue;
        }
        if f_reflected < simplex[n - 1].1 {
            simplex[n] = (reflected, f_reflected);
            continue;
        }
        let contracted = if f_reflected < simplex[n].1 {
            blend(CONTRACT)
        } else {
            blend(-CONTRACT)
        };
        let f_contracted = eval(&contracted);
        if f_contracted < simplex[n].1.min(f_reflected) {
            simplex[n] = (contracted, f_contracted);
            continue;
        }
        // Shrink toward the best vertex.
        let best_point = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            for i in 0..n {
                vertex.0[i] = best_point[i] + SHRINK * (vertex.0[i] - best_point[i]);
            }
            vertex.1 = eval(&vertex.0);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    NelderMeadResult {
        x: simplex[0].0.clone(),
        value: simplex[0].1,
        iterations,
        converged,
    }
}
