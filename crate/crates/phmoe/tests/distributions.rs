//! Distributional cross-checks: normalization, density/survival consistency,
//! mixture identities, simulation law equivalence, and moment oracles.

mod common;

use common::{integrate_scalar, ks_distance, random_simplex, random_sub_intensity, rng};
use nalgebra::{DMatrix, DVector};
use phmoe::moe::{softmax_pi, DesignRow, GatingCoefficients, PhMoeModel};
use phmoe::phcore::{IphDistribution, PhaseDistribution};
use phmoe::simulate::{sample_absorption, sample_response, RngState};
use phmoe::{CovariateSchema, Transform};
use rand::Rng;

fn all_transforms() -> Vec<Transform> {
    vec![
        Transform::Identity,
        Transform::Pareto { theta: 1.3 },
        Transform::Weibull { theta: 1.6 },
        Transform::SemiCompositeWeibullTail {
            theta: 1.4,
            threshold: 0.8,
            threshold_fixed: true,
        },
        Transform::SemiCompositeParetoTail {
            theta: 0.9,
            threshold: 1.1,
            threshold_fixed: true,
        },
    ]
}

fn random_iph(
    p: usize,
    transform: Transform,
    r: &mut rand_chacha::ChaCha12Rng,
) -> IphDistribution {
    let sub = random_sub_intensity(p, r);
    let pi = random_simplex(p, r);
    IphDistribution::new(PhaseDistribution::new(pi, sub).unwrap(), transform).unwrap()
}

#[test]
fn density_integrates_to_one() {
    // Integrate in v = log y so that heavy tails (cutoffs as large as
    // exp(200)) and the Weibull singularity at zero are both tame; slice at
    // survival-guided quantiles so the adaptive rule sees balanced mass.
    let mut r = rng(71);
    let mut trial = 0;
    for transform in all_transforms() {
        for _ in 0..10 {
            trial += 1;
            let p = r.gen_range(1..=5);
            let dist = random_iph(p, transform.clone(), &mut r);
            let levels = [
                1e-12, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99,
                1.0 - 1e-10,
            ];
            let cuts: Vec<f64> = levels
                .iter()
                .map(|q| dist.quantile(*q).unwrap().max(1e-290).ln())
                .collect();
            let integrand = |v: f64| {
                let y = v.exp();
                dist.density(y).unwrap_or(0.0) * y
            };
            let mut integral = 0.0;
            for pair in cuts.windows(2) {
                if pair[1] > pair[0] {
                    integral += integrate_scalar(&integrand, pair[0], pair[1], 1e-10);
                }
            }
            assert!(
                (integral - 1.0).abs() < 1e-6,
                "trial {trial} ({transform:?}, p={p}): integral {integral}"
            );
        }
    }
}

#[test]
fn density_is_minus_derivative_of_survival() {
    let mut r = rng(73);
    for transform in all_transforms() {
        let dist = random_iph(3, transform.clone(), &mut r);
        let kink = transform.threshold().unwrap_or(f64::NAN);
        for y in [0.3, 0.9, 1.7, 3.0] {
            if (y - kink).abs() < 0.2 {
                continue;
            }
            let h = 1e-6 * y.max(1.0);
            let derivative =
                -(dist.survival(y + h).unwrap() - dist.survival(y - h).unwrap()) / (2.0 * h);
            let density = dist.density(y).unwrap();
            if density > 1e-12 {
                assert!(
                    (derivative - density).abs() / density < 1e-5,
                    "{transform:?} at y={y}: fd {derivative} vs f {density}"
                );
            }
        }
    }
}

#[test]
fn survival_is_mixture_of_unit_starts() {
    let mut r = rng(79);
    let p = 4;
    let sub = random_sub_intensity(p, &mut r);
    let pi = random_simplex(p, &mut r);
    let transform = Transform::Weibull { theta: 1.3 };
    let mixed = IphDistribution::new(
        PhaseDistribution::new(pi.clone(), sub.clone()).unwrap(),
        transform.clone(),
    )
    .unwrap();
    for y in [0.2, 1.0, 2.5, 6.0] {
        let mut total = 0.0;
        for k in 0..p {
            let mut unit = DVector::zeros(p);
            unit[k] = 1.0;
            let component = IphDistribution::new(
                PhaseDistribution::new(unit, sub.clone()).unwrap(),
                transform.clone(),
            )
            .unwrap();
            total += pi[k] * component.survival(y).unwrap();
        }
        assert!((mixed.survival(y).unwrap() - total).abs() < 1e-12);
    }
}

#[test]
fn marginal_over_covariates_is_survival_at_averaged_pi() {
    // Average of conditional survivals across a finite covariate
    // distribution equals the survival at the averaged initial vector.
    let mut r = rng(83);
    let p = 3;
    let sub = random_sub_intensity(p, &mut r);
    let transform = Transform::Pareto { theta: 2.0 };
    let alpha = GatingCoefficients::new(DMatrix::from_fn(p, 2, |_, _| r.gen_range(-1.0..1.0)))
        .unwrap();
    let xs: Vec<DesignRow> = (0..5)
        .map(|i| DesignRow::new(DVector::from_vec(vec![1.0, i as f64 / 2.0])).unwrap())
        .collect();
    let weights = [0.1, 0.3, 0.2, 0.25, 0.15];

    let mut pi_bar = DVector::zeros(p);
    for (x, w) in xs.iter().zip(weights) {
        pi_bar += softmax_pi(x, &alpha).unwrap() * w;
    }
    let marginal = IphDistribution::new(
        PhaseDistribution::new(pi_bar, sub.clone()).unwrap(),
        transform.clone(),
    )
    .unwrap();

    for y in [0.4, 1.3, 4.0] {
        let mut averaged = 0.0;
        for (x, w) in xs.iter().zip(weights) {
            let pi = softmax_pi(x, &alpha).unwrap();
            let dist = IphDistribution::new(
                PhaseDistribution::new(pi, sub.clone()).unwrap(),
                transform.clone(),
            )
            .unwrap();
            averaged += w * dist.survival(y).unwrap();
        }
        assert!((marginal.survival(y).unwrap() - averaged).abs() < 1e-12);
    }
}

#[test]
fn simulated_responses_match_model_survival_for_each_family() {
    // Law equivalence of the transform representation: the empirical CDF of
    // simulated responses stays within the 1% KS band of the model CDF.
    let n = 100_000;
    let critical = 1.63 / (n as f64).sqrt();
    let mut r = rng(89);
    for transform in all_transforms() {
        let p = 3;
        let sub = random_sub_intensity(p, &mut r);
        let pi = random_simplex(p, &mut r);
        let dist = IphDistribution::new(
            PhaseDistribution::new(pi.clone(), sub.clone()).unwrap(),
            transform.clone(),
        )
        .unwrap();
        let mut draws: Vec<f64> = Vec::with_capacity(n);
        let mut sim_rng = RngState::new(17).master();
        for _ in 0..n {
            let (z, _) = sample_absorption(&pi, &sub, &mut sim_rng);
            draws.push(transform.g_forward(z).unwrap());
        }
        let d = ks_distance(&mut draws, |y| 1.0 - dist.survival(y.max(0.0)).unwrap());
        assert!(d < critical, "{transform:?}: KS {d} vs {critical}");
    }
}

#[test]
fn start_state_frequencies_match_softmax() {
    let p = 3;
    let mut r = rng(97);
    let sub = random_sub_intensity(p, &mut r);
    let alpha =
        GatingCoefficients::new(DMatrix::from_fn(p, 2, |_, _| r.gen_range(-0.8..0.8))).unwrap();
    let x = DesignRow::new(DVector::from_vec(vec![1.0, 0.7])).unwrap();
    let pi = softmax_pi(&x, &alpha).unwrap();

    let n = 100_000;
    let mut counts = vec![0usize; p];
    let mut sim_rng = RngState::new(23).master();
    for _ in 0..n {
        let (_, start) = sample_absorption(&pi, &sub, &mut sim_rng);
        counts[start] += 1;
    }
    for k in 0..p {
        let freq = counts[k] as f64 / n as f64;
        let se = (pi[k] * (1.0 - pi[k]) / n as f64).sqrt();
        assert!(
            (freq - pi[k]).abs() < 3.0 * se,
            "state {k}: {freq} vs {} (se {se})",
            pi[k]
        );
    }
}

#[test]
fn ph_mean_matches_monte_carlo() {
    let mut r = rng(103);
    let p = 4;
    let sub = random_sub_intensity(p, &mut r);
    let pi = random_simplex(p, &mut r);
    let dist = PhaseDistribution::new(pi.clone(), sub.clone()).unwrap();
    let mean = dist.mean().unwrap();

    let n = 1_000_000;
    let mut sim_rng = RngState::new(5).master();
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let (z, _) = sample_absorption(&pi, &sub, &mut sim_rng);
        s1 += z;
        s2 += z * z;
    }
    let mc_mean = s1 / n as f64;
    let mc_sd = (s2 / n as f64 - mc_mean * mc_mean).sqrt();
    let se = mc_sd / (n as f64).sqrt();
    assert!((mean - mc_mean).abs() < 3.0 * se, "{mean} vs {mc_mean} +- {se}");
}

#[test]
fn weibull_fractional_moment_matches_monte_carlo() {
    let mut r = rng(107);
    let p = 3;
    let sub = random_sub_intensity(p, &mut r);
    let pi = random_simplex(p, &mut r);
    let dist = PhaseDistribution::new(pi.clone(), sub.clone()).unwrap();
    let theta = 1.5;
    let moment = dist.weibull_fractional_moment(theta, 1.0).unwrap();

    let n = 1_000_000;
    let mut sim_rng = RngState::new(6).master();
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let (z, _) = sample_absorption(&pi, &sub, &mut sim_rng);
        let y = z.powf(1.0 / theta);
        s1 += y;
        s2 += y * y;
    }
    let mc_mean = s1 / n as f64;
    let se = ((s2 / n as f64 - mc_mean * mc_mean) / n as f64).sqrt();
    assert!((moment - mc_mean).abs() < 3.0 * se, "{moment} vs {mc_mean} +- {se}");
}

#[test]
fn quantile_survival_self_consistency() {
    let mut r = rng(109);
    let dist = random_iph(3, Transform::Weibull { theta: 1.8 }, &mut r);
    for q in [0.05, 0.5, 0.95] {
        let y = dist.quantile(q).unwrap();
        assert!((1.0 - dist.survival(y).unwrap() - q).abs() < 1e-9, "q={q}");
    }
}

#[test]
fn conditional_mean_is_mixture_of_component_means() {
    let mut r = rng(113);
    let p = 3;
    let sub = random_sub_intensity(p, &mut r);
    let alpha =
        GatingCoefficients::new(DMatrix::from_fn(p, 2, |_, _| r.gen_range(-0.5..0.5))).unwrap();
    let schema = CovariateSchema::new(vec![phmoe::Column {
        name: "x".into(),
        kind: phmoe::ColumnKind::Numeric { standardize: None },
    }])
    .unwrap();
    for transform in [Transform::Identity, Transform::Weibull { theta: 1.2 }] {
        let model = PhMoeModel::new(
            schema.clone(),
            alpha.clone(),
            sub.clone(),
            transform.clone(),
        )
        .unwrap();
        let x = DesignRow::new(DVector::from_vec(vec![1.0, 0.4])).unwrap();
        let mean = model.conditional_mean(&x).unwrap();

        let pi = model.pi(&x).unwrap();
        let mut mixture = 0.0;
        for k in 0..p {
            let mut unit = DVector::zeros(p);
            unit[k] = 1.0;
            let component = IphDistribution::new(
                PhaseDistribution::new(unit, sub.clone()).unwrap(),
                transform.clone(),
            )
            .unwrap();
            mixture += pi[k] * component.mean().unwrap();
        }
        assert!(
            (mean - mixture).abs() < 1e-8 * mixture.max(1.0),
            "{transform:?}: {mean} vs {mixture}"
        );
    }
}

#[test]
fn conditional_mean_block_mixture_closed_form() {
    // Two non-communicating exponential blocks with rates 1 and 1/3 mixed
    // 50/50 have mean 0.5 * 1 + 0.5 * 3 = 2.
    let sub = phmoe::SubIntensityMatrix::new(nalgebra::dmatrix![
        -1.0, 0.0;
        0.0, -1.0 / 3.0
    ])
    .unwrap();
    let schema = CovariateSchema::default();
    let model = PhMoeModel::new(
        schema,
        GatingCoefficients::zeros(2, 1),
        sub,
        Transform::Identity,
    )
    .unwrap();
    let mean = model.conditional_mean(&DesignRow::intercept_only()).unwrap();
    assert!((mean - 2.0).abs() < 1e-12);
}

#[test]
fn conditional_mean_scalar_weibull_gamma_value() {
    // p = 1, rate 1, Weibull theta = 2: mean is Gamma(1.5).
    let sub = phmoe::SubIntensityMatrix::new(nalgebra::dmatrix![-1.0]).unwrap();
    let model = PhMoeModel::new(
        CovariateSchema::default(),
        GatingCoefficients::zeros(1, 1),
        sub,
        Transform::Weibull { theta: 2.0 },
    )
    .unwrap();
    let mean = model.conditional_mean(&DesignRow::intercept_only()).unwrap();
    let gamma_1_5 = 0.5 * std::f64::consts::PI.sqrt();
    assert!((mean - gamma_1_5).abs() < 1e-10);
}

#[test]
fn pareto_numeric_mean_matches_quadrature_of_survival() {
    // Cross-check the transformed-integral path against a plain y-space
    // quadrature with an explicit tail correction.
    let mut r = rng(127);
    let dist = random_iph(3, Transform::Pareto { theta: 1.5 }, &mut r);
    let mean = dist.mean().unwrap();
    let hi = dist.quantile(1.0 - 1e-9).unwrap();
    let body = integrate_scalar(&|y: f64| dist.survival(y).unwrap(), 0.0, hi, 1e-10);
    // Regularly varying tail: S(y) ~ S(hi) (y/hi)^(-eta).
    let report =
        phmoe::phcore::tail_report(dist.base().pi(), dist.base().sub_intensity(), dist.transform(), 1e-8)
            .unwrap();
    let tail = dist.survival(hi).unwrap() * hi / (report.eta - 1.0);
    assert!(
        (mean - (body + tail)).abs() / mean < 1e-3,
        "mean {mean} vs body {body} + tail {tail}"
    );
}

#[test]
fn sample_response_lomax_point_check() {
    // Lomax(2, 1): S(1) = 0.25.
    let sub = phmoe::SubIntensityMatrix::new(nalgebra::dmatrix![-2.0]).unwrap();
    let model = PhMoeModel::new(
        CovariateSchema::default(),
        GatingCoefficients::zeros(1, 1),
        sub,
        Transform::Pareto { theta: 1.0 },
    )
    .unwrap();
    let x = DesignRow::intercept_only();
    let n = 1_000_000;
    let mut rng = RngState::new(31).master();
    let mut above = 0usize;
    for _ in 0..n {
        if sample_response(&model, &x, &mut rng).unwrap() > 1.0 {
            above += 1;
        }
    }
    let freq = above as f64 / n as f64;
    let se = (0.25 * 0.75 / n as f64).sqrt();
    assert!((freq - 0.25).abs() < 3.0 * se, "{freq}");
}

#[test]
fn simulate_responses_deterministic_and_order_stable() {
    let mut r = rng(131);
    let sub = random_sub_intensity(2, &mut r);
    let model = PhMoeModel::new(
        CovariateSchema::default(),
        GatingCoefficients::zeros(2, 1),
        sub,
        Transform::Identity,
    )
    .unwrap();
    let designs: Vec<DesignRow> = (0..64).map(|_| DesignRow::intercept_only()).collect();
    let a = phmoe::simulate::simulate_responses(&model, &designs, RngState::new(9), true).unwrap();
    let b = phmoe::simulate::simulate_responses(&model, &designs, RngState::new(9), false).unwrap();
    assert_eq!(a, b);
}
