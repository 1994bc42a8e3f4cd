mod common;

use birthgrowth::analytic::special::{gamma, lower_incomplete_gamma};
use birthgrowth::analytic::{
    exposure_moment, influence_content, mean_exposed, overlap_kernel, speed_weighted_volume,
    variance_lower_bound, variance_scale, variance_upper_bound, TimeIntensity, WindowGeometry,
};
use birthgrowth::model::{ModelSpec, SpeedDistribution};
use common::*;
use proptest::prelude::*;

// Reference values for d=1, τ=0, ν=δ_1, a=1, W=[0,1], from an
// arbitrary-precision evaluation of the defining integrals.
const REF_MEAN: f64 = 0.746_824_132_812_427;
const REF_LOWER: f64 = 0.397_378_861_056_83;
const REF_UPPER: f64 = 1.827_301_994_444_504_8;

#[test]
fn oracle_self_check() {
    let v = tanh_sinh(|x| x.sqrt().recip(), 0.0, 1.0);
    assert!((v - 2.0).abs() < 1e-12, "{v}");
    let v = tanh_sinh_half_line(|t| (-t * t).exp());
    assert!((v - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-13, "{v}");
    let v = theta_integral(|_| 1.0, -0.7, 0.0, 2.0);
    assert!((v - 2f64.powf(0.3) / 0.3).abs() < 1e-12 * v, "{v} {}", v - 2f64.powf(0.3) / 0.3);
}

#[test]
fn mean_reference_against_riemann_sum() {
    let riemann = midpoint(|t| (-t * t).exp(), 0.0, 1.0, 1_000_000);
    let m = mean_exposed(&reference_spec()).unwrap();
    assert!((m - riemann).abs() < 1e-12);
    assert!((m - REF_MEAN).abs() < 1e-13);
    let doubled = reference_spec().with_window(WindowGeometry::Box { sides: vec![2.0] });
    assert!((mean_exposed(&doubled).unwrap() - 2.0 * m).abs() < 1e-14);
}

#[test]
fn mean_vanishes_with_horizon() {
    let m = mean_exposed(&reference_spec().with_horizon(1e-12)).unwrap();
    assert!(m > 0.0 && m < 1.1e-12);
}

#[test]
fn lower_bound_reference() {
    let w = |t: f64| (-t * t).exp();
    let inner = |t: f64| tanh_sinh(|s| (t - s) * w(s), 0.0, t);
    let oracle = tanh_sinh(w, 0.0, 1.0) - 4.0 * tanh_sinh(|t| w(t) * inner(t), 0.0, 1.0);
    let lb = variance_lower_bound(&reference_spec()).unwrap();
    assert!(!lb.vacuous);
    assert!((lb.value - oracle).abs() < 1e-10, "{} vs {oracle}", lb.value);
    assert!((lb.value - REF_LOWER).abs() < 1e-10);
}

#[test]
fn upper_bound_reference_from_triple_integral() {
    // 2∫√w θ + ∫∫ ℓ(t1, t2) √w(t1) √w(t2) θ(dt1) θ(dt2), ℓ by its own quadrature
    let sw = |t: f64| (-0.5 * t * t).exp();
    let ell = |t1: f64, t2: f64| 4.0 * tanh_sinh(|s| (t1 - s) * (t2 - s), 0.0, t1.min(t2));
    let double = tanh_sinh(
        |t1| {
            sw(t1)
                * (tanh_sinh(|t2| ell(t1, t2) * sw(t2), 0.0, t1)
                    + tanh_sinh(|t2| ell(t1, t2) * sw(t2), t1, 1.0))
        },
        0.0,
        1.0,
    );
    let oracle = 2.0 * tanh_sinh(sw, 0.0, 1.0) + double;
    let ub = variance_upper_bound(&reference_spec()).unwrap();
    assert!((ub - oracle).abs() < 1e-9, "{ub} vs {oracle}");
    assert!((ub - REF_UPPER).abs() < 1e-10);
}

#[test]
fn bounds_vanish_with_horizon() {
    let spec = reference_spec().with_horizon(1e-9);
    assert!(variance_lower_bound(&spec).unwrap().value.abs() < 1e-8);
    assert!(variance_upper_bound(&spec).unwrap() < 1e-8);
}

#[test]
fn lower_bound_positive_at_tau_d_minus_one() {
    for d in 1..=3 {
        for a in [0.5, 1.0, 2.0, 8.0] {
            let spec = ModelSpec::new(
                d,
                TimeIntensity::PowerLaw { tau: d as f64 - 1.0 },
                SpeedDistribution::PointMass { value: 2.0 },
            )
            .with_horizon(a);
            let lb = variance_lower_bound(&spec).unwrap();
            assert!(lb.value > 0.0 && !lb.vacuous, "d={d} a={a}: {}", lb.value);
        }
    }
}

#[test]
fn negative_tau_bounds_against_oracle() {
    let tau = -0.5;
    let ti = TimeIntensity::PowerLaw { tau };
    let spec = ModelSpec::new(1, ti, SpeedDistribution::PointMass { value: 1.0 });
    let lam = |t: f64| influence_content(ti, 1, t);
    let oracle = theta_integral(|t| (-lam(t)).exp(), tau, 0.0, 1.0);
    assert!((mean_exposed(&spec).unwrap() - oracle).abs() < 1e-10 * oracle);
    let inner = |t: f64| theta_integral(|s| (t - s) * (-lam(s)).exp(), tau, 0.0, t);
    let lower = oracle - 4.0 * theta_integral(|t| (-lam(t)).exp() * inner(t), tau, 0.0, 1.0);
    let lb = variance_lower_bound(&spec).unwrap().value;
    assert!((lb - lower).abs() < 1e-9, "{lb} vs {lower}");
}

#[test]
fn lambda_examples() {
    assert_eq!(influence_content(TimeIntensity::Lebesgue, 1, 1.0), 1.0);
    assert_eq!(influence_content(TimeIntensity::PowerLaw { tau: 0.3 }, 2, 0.0), 0.0);
    let v = influence_content(TimeIntensity::PowerLaw { tau: 1.0 }, 2, 2.0);
    let oracle = std::f64::consts::PI * tanh_sinh(|s| (2.0 - s).powi(2) * s, 0.0, 2.0);
    assert!((v - oracle).abs() < 1e-12 * oracle);
}

#[test]
fn exposure_moment_scaling() {
    for ti in [
        TimeIntensity::PowerLaw { tau: -0.4 },
        TimeIntensity::PowerLaw { tau: 1.2 },
        TimeIntensity::Lebesgue,
    ] {
        for d in 1..=3 {
            for x in [0.0, 1.0, 2.0 * d as f64] {
                let q = exposure_moment(x, 1.3, ti, d).unwrap();
                let b: f64 = 3.7;
                let e = (x + ti.tau() + 1.0) / (d as f64 + ti.tau() + 1.0);
                let qb = exposure_moment(x, b * 1.3, ti, d).unwrap();
                assert!((qb - b.powf(-e) * q).abs() < 1e-13 * q);
            }
        }
    }
    let q = exposure_moment(2.0, 1.0, TimeIntensity::PowerLaw { tau: 0.0 }, 1).unwrap();
    let oracle = tanh_sinh_half_line(|t| t * t * (-t * t).exp());
    assert!((q - oracle).abs() < 1e-12 * oracle);
}

#[test]
fn overlap_kernel_examples() {
    let ti = TimeIntensity::PowerLaw { tau: 0.0 };
    assert_eq!(overlap_kernel(0.0, 2.0, ti, 1, 1.0), 0.0);
    assert!((overlap_kernel(1.0, 1.0, ti, 1, 1.0) - 4.0 / 3.0).abs() < 1e-14);
}

#[test]
fn speed_weighted_volume_examples() {
    let w = WindowGeometry::unit_box(1);
    let v = speed_weighted_volume(&w, &SpeedDistribution::PointMass { value: 1.0 }, 1).unwrap();
    assert!((v - 2.0).abs() < 1e-15);
    let c: f64 = 1.5;
    let w2 = WindowGeometry::Box { sides: vec![2.0, 0.5] };
    let v = speed_weighted_volume(&w2, &SpeedDistribution::PointMass { value: c }, 2).unwrap();
    let expected = c.powi(2) + 2.5 * c.powi(3) + c.powi(4);
    assert!((v - expected).abs() < 1e-13);
    let atom = SpeedDistribution::FiniteDiscrete {
        values: vec![0.0],
        probabilities: vec![1.0],
    };
    assert!(speed_weighted_volume(&w, &atom, 1).is_err());
}

/// `λ_d(box ⊕ B_ρ)` by slicing along the first axis.
fn dilated_box_volume(sides: &[f64], rho: f64) -> f64 {
    if sides.is_empty() {
        return 1.0;
    }
    let rest = &sides[1..];
    // a slice at distance δ beyond a face is the rest dilated by √(ρ² - δ²);
    // with r = ρ - δ that radius is √(r (2ρ - r))
    let cap = if rho > 0.0 {
        2.0 * tanh_sinh_ends(|_, _, r| dilated_box_volume(rest, (r * (2.0 * rho - r)).sqrt()), 0.0, rho)
    } else {
        0.0
    };
    sides[0] * dilated_box_volume(rest, rho) + cap
}

#[test]
fn steiner_matches_slicing() {
    let boxes = [vec![1.3], vec![1.0, 0.4], vec![2.0, 0.5, 0.7]];
    for sides in boxes {
        let w = WindowGeometry::Box { sides: sides.clone() };
        for rho in [0.0, 0.1, 0.6, 2.5] {
            let direct = dilated_box_volume(&sides, rho);
            let steiner = w.dilated_volume(rho);
            assert!(
                (direct - steiner).abs() <= 1e-12 * direct,
                "{sides:?} ρ={rho}: {direct} vs {steiner}"
            );
        }
    }
    let sq = WindowGeometry::unit_box(2);
    assert!((sq.dilated_volume(1.0) - (5.0 + std::f64::consts::PI)).abs() < 1e-14);
}

#[test]
fn variance_ratio_bounded_as_nu_sweeps() {
    for (d, tau) in [(1, 0.0), (2, 0.5), (2, 1.0), (3, -0.5)] {
        let mut ratios = Vec::new();
        for k in 0..=10 {
            let nu_d = 0.5 * 100f64.powf(k as f64 / 10.0);
            let c = nu_d.powf(1.0 / d as f64);
            let spec = ModelSpec::new(d, TimeIntensity::PowerLaw { tau }, SpeedDistribution::PointMass { value: c });
            let lb = variance_lower_bound(&spec).unwrap();
            let l = variance_scale(1.0, tau, d, nu_d).unwrap();
            ratios.push(lb.value / l);
        }
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(lo > 0.0, "d={d} τ={tau}: {ratios:?}");
        assert!(hi / lo < 20.0, "d={d} τ={tau}: {ratios:?}");
    }
}

fn spec_strategy() -> impl Strategy<Value = ModelSpec> {
    let speed = prop_oneof![
        (0.2f64..3.0).prop_map(|value| SpeedDistribution::PointMass { value }),
        (0.1f64..2.0, 0.5f64..4.0, 0.05f64..0.95).prop_map(|(v1, v2, p)| {
            SpeedDistribution::FiniteDiscrete {
                values: vec![v1, v2],
                probabilities: vec![p, 1.0 - p],
            }
        }),
        (0.2f64..3.0).prop_map(|upper| SpeedDistribution::Uniform { upper }),
        (-0.5f64..0.5, 0.1f64..0.6).prop_map(|(mu, sigma)| SpeedDistribution::LogNormal { mu, sigma }),
    ];
    let ti = prop_oneof![
        Just(TimeIntensity::Lebesgue),
        (-0.8f64..2.5).prop_map(|tau| TimeIntensity::PowerLaw { tau }),
    ];
    (1usize..=3, ti, speed, 0.2f64..2.0).prop_map(|(d, ti, speed, a)| ModelSpec::new(d, ti, speed).with_horizon(a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn upper_dominates_lower(spec in spec_strategy()) {
        let lo = variance_lower_bound(&spec).unwrap();
        let hi = variance_upper_bound(&spec).unwrap();
        prop_assert!(hi >= lo.value, "{} < {}", hi, lo.value);
        prop_assert!(hi > 0.0);
        prop_assert_eq!(lo.vacuous, lo.value <= 0.0);
    }

    #[test]
    fn overlap_kernel_symmetric(t1 in 0.0f64..3.0, t2 in 0.0f64..3.0, d in 1usize..=3, tau in -0.9f64..3.0) {
        let ti = TimeIntensity::PowerLaw { tau };
        let a = overlap_kernel(t1, t2, ti, d, 2.0);
        let b = overlap_kernel(t2, t1, ti, d, 2.0);
        prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn incomplete_gamma_monotone(p in 0.05f64..8.0, z1 in 0.0f64..60.0, dz in 0.0f64..20.0) {
        let a = lower_incomplete_gamma(p, z1).unwrap();
        let b = lower_incomplete_gamma(p, z1 + dz).unwrap();
        prop_assert!(a <= b * (1.0 + 1e-14));
        prop_assert!(b <= gamma(p) * (1.0 + 1e-14));
    }
}

#[test]
fn incomplete_gamma_scaling_sandwich() {
    let grid = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
    };
    let mut count = 0;
    for &b in &grid(0.1, 10.0, 5) {
        for &p in &grid(0.1, 5.0, 5) {
            for &y in &grid(0.01, 100.0, 5) {
                let g = lower_incomplete_gamma(p, y).unwrap();
                let gb = lower_incomplete_gamma(p, b * y).unwrap();
                let bp = b.powf(p);
                let tol = 1e-13 * gb;
                assert!(1f64.min(bp) * g <= gb + tol, "b={b} p={p} y={y}");
                assert!(gb <= 1f64.max(bp) * g + tol, "b={b} p={p} y={y}");
                count += 1;
            }
        }
    }
    assert!(count >= 100);
}
