mod common;

use birthgrowth::analytic::{TimeIntensity, WindowGeometry};
use birthgrowth::exposure::{exposed_indexed, exposed_naive};
use birthgrowth::model::{ModelSpec, Seed, SpeedDistribution};
use birthgrowth::sampler::{sample_realization, Realization};
use common::*;
use proptest::prelude::*;

fn seeds_strategy(dim: usize, max_len: usize) -> impl Strategy<Value = Vec<Seed>> {
    let coord = prop_oneof![
        -0.5f64..1.5,
        // coarse lattice values make exact-boundary contacts common
        (-4i32..12).prop_map(|k| k as f64 * 0.125),
    ];
    let time = prop_oneof![0.0f64..1.0, (0i32..9).prop_map(|k| k as f64 * 0.125)];
    let speed = prop_oneof![
        Just(0.0),
        0.0f64..0.5,
        (0i32..5).prop_map(|k| k as f64 * 0.5),
        1.0f64..40.0,
    ];
    prop::collection::vec((prop::collection::vec(coord, dim), time, speed), 0..max_len).prop_map(|raw| {
        raw.into_iter()
            .enumerate()
            .map(|(i, (x, t, v))| Seed::new(i as u32, &x, t, v))
            .collect()
    })
}

fn spec_for(dim: usize) -> ModelSpec {
    ModelSpec::new(dim, TimeIntensity::PowerLaw { tau: 0.0 }, SpeedDistribution::PointMass { value: 1.0 })
}

fn realization_strategy() -> impl Strategy<Value = Realization> {
    (1usize..=3).prop_flat_map(|d| seeds_strategy(d, 300).prop_map(move |s| Realization::from_seeds(spec_for(d), s)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn indexed_matches_naive_on_arbitrary_seeds(r in realization_strategy()) {
        let a = exposed_naive(&r);
        let b = exposed_indexed(&r);
        prop_assert_eq!(a.flags, b.flags);
        prop_assert_eq!(a.count, b.count);
    }

    #[test]
    fn count_invariant_under_permutation(r in realization_strategy(), rot in 0usize..1000) {
        let base = exposed_naive(&r);
        let mut seeds = r.seeds.clone();
        seeds.reverse();
        if !seeds.is_empty() {
            let k = rot % seeds.len();
            seeds.rotate_left(k);
        }
        let shuffled = Realization::from_seeds(r.spec.clone(), seeds.clone());
        let res = exposed_indexed(&shuffled);
        prop_assert_eq!(res.count, base.count);
        for (s, f) in seeds.iter().zip(&res.flags) {
            prop_assert_eq!(*f, base.flags[s.id as usize]);
        }
    }

    #[test]
    fn adding_a_seed_never_exposes(r in realization_strategy(), extra in seeds_strategy(3, 2)) {
        prop_assume!(!extra.is_empty());
        let d = r.spec.dim;
        let e = &extra[0];
        let added = Seed::new(r.seeds.len() as u32, &e.location[..d], e.birth_time, e.speed);
        let before = exposed_indexed(&r);
        let mut seeds = r.seeds.clone();
        seeds.push(added);
        let after = exposed_indexed(&Realization::from_seeds(r.spec.clone(), seeds));
        for (b, a) in before.flags.iter().zip(&after.flags) {
            prop_assert!(*b || !*a, "a shaded seed became exposed");
        }
    }

    #[test]
    fn deleting_a_seed_never_shades(r in realization_strategy(), pick in 0usize..1000) {
        prop_assume!(!r.seeds.is_empty());
        let gone = pick % r.seeds.len();
        let before = exposed_indexed(&r);
        let seeds: Vec<Seed> = r.seeds.iter().enumerate().filter(|(i, _)| *i != gone).map(|(_, s)| s.clone()).collect();
        let after = exposed_indexed(&Realization::from_seeds(r.spec.clone(), seeds));
        let kept = before.flags.iter().enumerate().filter(|(i, _)| *i != gone).map(|(_, f)| *f);
        for (b, a) in kept.zip(&after.flags) {
            prop_assert!(!b || *a, "an exposed seed became shaded");
        }
    }
}

#[test]
fn sampled_realizations_agree_across_families() {
    let mut checked = 0;
    for d in 1..=3 {
        for (k, speed) in speed_zoo().into_iter().enumerate() {
            let spec = ModelSpec::new(d, TimeIntensity::PowerLaw { tau: 0.5 * k as f64 - 0.5 }, speed)
                .with_window_scale(30.0);
            for r in 0..8 {
                let real = sample_realization(&spec, 21, (d * 100 + k * 10 + r) as u64).unwrap();
                assert_eq!(exposed_naive(&real).flags, exposed_indexed(&real).flags, "d={d} k={k} r={r}");
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 120);
}

#[test]
fn exact_contact_counts_as_shaded() {
    // dist = 0.5, reach = 1.0 * 0.5
    let spec = spec_for(2);
    let seeds = vec![Seed::new(0, &[0.25, 0.5], 0.25, 1.0), Seed::new(1, &[0.75, 0.5], 0.75, 1.0)];
    let r = Realization::from_seeds(spec, seeds);
    assert_eq!(exposed_naive(&r).flags, vec![true, false]);
    assert_eq!(exposed_indexed(&r).flags, vec![true, false]);
}

#[test]
fn ball_window_counts() {
    let spec = ModelSpec::new(2, TimeIntensity::Lebesgue, SpeedDistribution::PointMass { value: 0.0 })
        .with_window(WindowGeometry::Ball { dim: 2, radius: 1.0 });
    let seeds = vec![
        Seed::new(0, &[0.0, 0.0], 0.1, 0.0),
        Seed::new(1, &[1.0, 0.0], 0.2, 0.0),
        Seed::new(2, &[0.8, 0.8], 0.3, 0.0),
    ];
    let r = Realization::from_seeds(spec, seeds);
    assert_eq!(exposed_indexed(&r).count, 2);
}
