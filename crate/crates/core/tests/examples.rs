use unfold_core::fit::{fd_gradient, forward_gradient};
use unfold_core::icdm::IcdmParams;
use unfold_core::objective::{
    bce_dice_loss, constraint_loss, exploration_loss, reconstruction_loss, ssec_loss, total_loss, ObjectiveConfig,
    SsecConfig,
};
use unfold_core::rng::Stream;
use unfold_core::sve::{patch_entropies, DEFAULT_EPSILON};
use unfold_core::synth::{gen_bitemporal, gen_instance, SynthSpec};
use unfold_core::wavelet::{dwt2_haar, wssm_apply, WssmParams};
use unfold_core::{FeatureField, Model, PlaneField, Sample};

/// `(c, n)` pair of unit vectors with `1 − cos = sep`.
fn pair_with_separation(sep: f64) -> (FeatureField, FeatureField) {
    let cos = 1.0 - sep;
    let c = FeatureField::new(2, 1, 1, vec![1.0, 0.0]).unwrap();
    let n = FeatureField::new(2, 1, 1, vec![cos, (1.0 - cos * cos).sqrt()]).unwrap();
    (c, n)
}

fn zero_pair() -> (FeatureField, FeatureField) {
    (FeatureField::zeros(2, 1, 1), FeatureField::zeros(2, 1, 1))
}

#[test]
fn exploration_examples() {
    let cfg = SsecConfig {
        early: vec![1, 2],
        late: vec![],
        ..SsecConfig::for_steps(2)
    };
    let states = vec![zero_pair(), pair_with_separation(0.1), pair_with_separation(0.25)];
    assert!((exploration_loss(&states, &cfg).unwrap() - 0.25).abs() < 1e-6);
    let wide = vec![zero_pair(), pair_with_separation(0.5), pair_with_separation(1.0)];
    assert_eq!(exploration_loss(&wide, &cfg).unwrap(), 0.0);
    let single = SsecConfig {
        early: vec![1],
        ..cfg
    };
    assert!((exploration_loss(&states, &single).unwrap() - 0.2).abs() < 1e-6);
}

#[test]
fn constraint_and_ssec_examples() {
    let cfg = SsecConfig {
        early: vec![],
        late: vec![1],
        ..SsecConfig::for_steps(2)
    };
    let with_mu = |mu: f64| vec![zero_pair(), (FeatureField::zeros(1, 2, 2), FeatureField::filled(1, 2, 2, mu))];
    assert_eq!(constraint_loss(&with_mu(0.2), &cfg).unwrap(), 0.0);
    assert!((constraint_loss(&with_mu(0.5), &cfg).unwrap() - 0.10).abs() < 1e-12);
    assert!((constraint_loss(&with_mu(0.01), &cfg).unwrap() - 0.04).abs() < 1e-12);

    let both = SsecConfig {
        early: vec![1, 2],
        late: vec![3],
        ..SsecConfig::for_steps(3)
    };
    let (c3, _) = pair_with_separation(1.0);
    let states = vec![
        zero_pair(),
        pair_with_separation(0.1),
        pair_with_separation(0.25),
        (c3, FeatureField::new(2, 1, 1, vec![0.5, -0.5]).unwrap()),
    ];
    assert!((ssec_loss(&states, &both).unwrap() - 0.225).abs() < 1e-6);
    let off = SsecConfig {
        lambda_e: 0.0,
        lambda_c: 0.0,
        ..both
    };
    assert_eq!(ssec_loss(&states, &off).unwrap(), 0.0);
}

#[test]
fn reconstruction_matches_loop() {
    let mut rng = Stream::new(4, 4);
    let mut f = || FeatureField::from_fn(3, 5, 6, |_, _, _| rng.normal());
    let (d, c, n) = (f(), f(), f());
    let mut want = 0.0;
    for ch in 0..3 {
        for y in 0..5 {
            for x in 0..6 {
                want += (d.get(ch, y, x) - c.get(ch, y, x) - n.get(ch, y, x)).abs();
            }
        }
    }
    assert!((reconstruction_loss(&d, &c, &n).unwrap() - want).abs() < 1e-12);
    let ones = FeatureField::filled(1, 2, 2, 1.0);
    let zero = FeatureField::zeros(1, 2, 2);
    assert_eq!(reconstruction_loss(&zero, &zero, &ones).unwrap(), 4.0);
}

#[test]
fn bce_dice_examples() {
    let half = |h: usize, w: usize| PlaneField::from_fn(h, w, |y, _| (y < h / 2) as u8 as f64);
    // smoothing 1 on a 2×2 plane: Dice = 1 − (2·1 + 1)/(2 + 2 + 1)
    let small = bce_dice_loss(&PlaneField::filled(2, 2, 0.5), &half(2, 2)).unwrap();
    assert!((small - (2f64.ln() + 0.4)).abs() < 1e-12);
    // smoothing vanishes on a large plane
    let large = bce_dice_loss(&PlaneField::filled(64, 64, 0.5), &half(64, 64)).unwrap();
    assert!((large - 1.1931).abs() < 1e-3);
    let empty = bce_dice_loss(&PlaneField::filled(4, 4, 1e-7), &PlaneField::zeros(4, 4)).unwrap();
    assert!(empty.abs() < 1e-5);
    let y = half(4, 4);
    assert!(bce_dice_loss(&y, &y).unwrap().abs() < 1e-5);
    assert_eq!(total_loss(1.0, 2.0, 0.5, 1.0), 3.5);
    assert_eq!(total_loss(1.0, 2.0, 0.5, 0.0), total_loss(1.0, 9.0, 0.5, 0.0));
}

#[test]
fn fd_gradient_examples() {
    let g = fd_gradient(&mut |t| Ok(t[0].abs()), &[2.0], 1e-4).unwrap();
    assert!((g[0] - 1.0).abs() < 1e-8);

    // the first step sees R⁰ = 0, so the injection strength of step 2 is the
    // first one with a nonzero effect
    let inst = gen_instance(&SynthSpec::new(3)).unwrap();
    let sample = Sample::from_instance(&inst);
    let mut model = Model::seeded(4, 2, 3).unwrap();
    model.icdm = IcdmParams::seeded(4, 2, 3).unwrap();
    let obj = ObjectiveConfig::for_steps(2);
    let mut f = |t: &[f64]| {
        let mut m = model.clone();
        m.icdm.gamma[1] = t[0];
        Ok(m.loss(&sample, &obj)?.total)
    };
    let central = fd_gradient(&mut f, &[0.5], 1e-5).unwrap()[0];
    let forward = forward_gradient(&mut f, &[0.5], 1e-6).unwrap()[0];
    assert!(central.abs() > 1e-6);
    assert!((central - forward).abs() < 1e-4 * central.abs());
}

#[test]
fn changed_patches_have_higher_entropy() {
    let mut wins = 0;
    for seed in 0..20 {
        let inst = gen_instance(&SynthSpec::new(seed)).unwrap();
        let sve = patch_entropies(&inst.d, 8, DEFAULT_EPSILON).unwrap();
        let (c, u) = (inst.groups.mean_changed(&sve).unwrap(), inst.groups.mean_unchanged(&sve).unwrap());
        if seed == 7 {
            assert!(c > u, "seed 7: {c} vs {u}");
        }
        wins += (c > u) as usize;
    }
    assert_eq!(wins, 20);
}

#[test]
fn offset_only_difference_lives_in_approximation() {
    let spec = SynthSpec {
        rects: vec![],
        ..SynthSpec::new(2)
    };
    let (f1, f2, y) = gen_bitemporal(&spec).unwrap();
    assert!(y.data().iter().all(|&v| v == 0.0));
    let s = dwt2_haar(&f2.sub(&f1)).unwrap();
    assert!(s.approx.data().iter().all(|&v| (v - 0.6).abs() < 1e-12));
    for b in [&s.horizontal, &s.vertical, &s.diagonal] {
        assert!(b.max_abs() < 1e-12);
    }
}

#[test]
fn alignment_removes_offset_and_keeps_change_detail() {
    let spec = SynthSpec::new(5);
    let (f1, f2, y) = gen_bitemporal(&spec).unwrap();
    let mut p = WssmParams::new(4);
    p.eta = [0.5, 0.0, 0.0, 0.0];
    let (a1, a2) = wssm_apply(&f1, &f2, &p).unwrap();
    let before = dwt2_haar(&f2.sub(&f1)).unwrap();
    let after = dwt2_haar(&a2.sub(&a1)).unwrap();
    let energy = |f: &FeatureField| f.dot(f);
    assert!(energy(&after.approx) <= 0.1 * energy(&before.approx));

    // detail energy on the change support (label at the top-left pixel of each 2×2 block)
    let detail_on_change = |s: &unfold_core::wavelet::SubbandSet| {
        let mut e = 0.0;
        for b in [&s.horizontal, &s.vertical, &s.diagonal] {
            for c in 0..b.channels() {
                for i in 0..b.height() {
                    for j in 0..b.width() {
                        if y.get(2 * i, 2 * j) > 0.5 {
                            e += b.get(c, i, j).powi(2);
                        }
                    }
                }
            }
        }
        e
    };
    let (eb, ea) = (detail_on_change(&before), detail_on_change(&after));
    assert!(eb > 0.0);
    assert!((ea - eb).abs() <= 0.1 * eb);
}
