use irsjam::channel::{sample_channels, ArraySpec, Deployment, FadingSpec};
use irsjam::pj_opt::{brute_force_pj, csi_pj_attack, PjProblem, RateModel, RcgOptions};
use irsjam::reflect::{random_reflect, PhaseAlphabet};
use irsjam::rng::substream;
use irsjam::sim::{sweep, trial_channels, ScenarioConfig, Scheme, SchemeKind, SweepAxis};
use irsjam::units::{dbm_to_watts, noise_power_watts};

fn small() -> ScenarioConfig {
    ScenarioConfig {
        arrays: ArraySpec {
            n_irs_y: 4,
            n_irs_z: 4,
            ..Default::default()
        },
        n_trials: 6,
        p0_sweep_dbm: vec![0.0, 10.0, 20.0],
        quant_bits_sweep: vec![1, 2, 3],
        n_elements_sweep: vec![(2, 4), (4, 4)],
        rcg: RcgOptions {
            max_iters: 60,
            ..Default::default()
        },
        ..Default::default()
    }
}

#[test]
fn channels_are_common_across_power_and_bits() {
    let cfg = small();
    for axis in [SweepAxis::Power, SweepAxis::Bits] {
        let pts = axis.points(&cfg).unwrap();
        for t in 0..cfg.n_trials {
            let first = trial_channels(&cfg, pts[0].1, t).unwrap();
            for (_, p) in &pts[1..] {
                assert_eq!(trial_channels(&cfg, *p, t).unwrap(), first);
            }
        }
    }
    let pts = SweepAxis::Elements.points(&cfg).unwrap();
    let a = trial_channels(&cfg, pts[0].1, 0).unwrap().channels;
    let b = trial_channels(&cfg, pts[1].1, 0).unwrap().channels;
    assert_eq!((a.n_irs(), b.n_irs()), (8, 16));
}

#[test]
fn serial_and_parallel_sweeps_agree() {
    let cfg = small();
    let serial = sweep(&cfg, SweepAxis::Power, 1).unwrap();
    let parallel = sweep(&cfg, SweepAxis::Power, 4).unwrap();
    assert_eq!(serial, parallel);
    let other_seed = sweep(
        &ScenarioConfig {
            master_seed: 7,
            ..cfg.clone()
        },
        SweepAxis::Power,
        1,
    )
    .unwrap();
    assert_ne!(serial, other_seed);
}

#[test]
fn sweep_shape_and_bookkeeping() {
    let cfg = small();
    let r = sweep(&cfg, SweepAxis::Bits, 1).unwrap();
    assert_eq!(
        r.points.iter().map(|p| p.axis_value).collect::<Vec<_>>(),
        [1.0, 2.0, 3.0]
    );
    for p in &r.points {
        assert_eq!(p.series.len(), 5);
        for s in &p.series {
            assert_eq!(s.n_trials, cfg.n_trials);
            assert_eq!(s.trials.len(), cfg.n_trials);
        }
        let nj = p.series(Scheme::NoJammer).unwrap();
        assert!(nj.trials.iter().all(|t| t.i_over_n < 1e-9));
        assert_eq!(nj.mean_i_over_n_db, -120.0);
    }
}

#[test]
fn scheme_subset_is_respected() {
    let cfg = ScenarioConfig {
        schemes: vec![SchemeKind::Fpj, SchemeKind::ActiveJammer],
        ..small()
    };
    let r = sweep(&cfg, SweepAxis::Power, 1).unwrap();
    let ids: Vec<String> = r.points[0].series.iter().map(|s| s.scheme.id()).collect();
    assert_eq!(ids, ["fpj", "aj_5db", "aj_10db"]);
}

#[test]
fn degenerate_channels_abort_with_partial_result() {
    // A 7000 dB loss underflows the direct channel to exactly zero.
    let mut cfg = small();
    cfg.fading.pathloss_direct.intercept_db = 7000.0;
    let err = sweep(&cfg, SweepAxis::Power, 1).unwrap_err();
    assert_eq!(err.axis_value, 0.0);
    assert!(err.partial.points.is_empty());
    assert!(matches!(err.source, irsjam::Error::ResampleLimit { .. }));
}

/// Default geometry and link budget, shrunk to two users, four antennas and
/// a 2x4 surface.
fn small_physical(seed: u64) -> PjProblem {
    let arrays = ArraySpec {
        n_ap: 4,
        n_irs_y: 2,
        n_irs_z: 4,
        element_spacing: 0.5,
    };
    let mut rng = substream(seed, &[99]);
    let geometry = Deployment::default().place_users(&mut rng, 2).unwrap();
    let ch = sample_channels(&mut rng, &geometry, &arrays, &FadingSpec::default()).unwrap();
    PjProblem::new(ch, dbm_to_watts(20.0), noise_power_watts(180e3)).unwrap()
}

#[test]
fn attack_beats_random_reflection_on_small_irs() {
    let alphabet = PhaseAlphabet::one_bit();
    for seed in 0..10u64 {
        let prob = small_physical(seed);
        let mut rng = substream(seed, &[100]);
        let attack = csi_pj_attack(&prob, alphabet, &RcgOptions::default(), &mut rng).unwrap();
        let random_mean = (0..100)
            .map(|_| prob.objective(random_reflect(&mut rng, 8, alphabet).entries()))
            .sum::<f64>()
            / 100.0;
        let exact = prob.objective(brute_force_pj(&prob, alphabet).unwrap().entries());
        assert!(attack.objective <= random_mean, "seed {seed}");
        assert!(exact <= attack.objective, "seed {seed}");
    }
}
