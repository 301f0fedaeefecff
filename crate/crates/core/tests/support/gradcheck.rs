//! Central vs forward finite differences for each loss term at seeded,
//! kink-free points.

#![allow(dead_code)]

use unfold_core::fit::{fd_gradient, forward_gradient};
use unfold_core::objective::{
    bce_dice_loss, constraint_loss, exploration_loss, nuisance_mean, reconstruction_loss, separation, ObjectiveConfig,
    SsecConfig,
};
use unfold_core::rng::Stream;
use unfold_core::sve::sigmoid;
use unfold_core::synth::{gen_instance, Rect, SynthSpec};
use unfold_core::{FeatureField, Group, Model, PlaneField, Result, Sample};

pub const CENTRAL_STEP: f64 = 1e-5;
pub const FORWARD_STEP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Term {
    Segmentation,
    Reconstruction,
    Exploration,
    Constraint,
    Total,
}

impl Term {
    pub const ALL: [Term; 5] = [
        Term::Segmentation,
        Term::Reconstruction,
        Term::Exploration,
        Term::Constraint,
        Term::Total,
    ];
}

/// `max|g_central − g_forward| / max|g_central|`.
pub fn disagreement(f: &mut dyn FnMut(&[f64]) -> Result<f64>, theta: &[f64]) -> f64 {
    let central = fd_gradient(f, theta, CENTRAL_STEP).unwrap();
    let forward = forward_gradient(f, theta, FORWARD_STEP).unwrap();
    let scale = central.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let err = central.iter().zip(&forward).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if scale < 1e-12 {
        err
    } else {
        err / scale
    }
}

/// Entries of magnitude in `[0.1, 1.1]` with random sign.
fn away_from_zero(rng: &mut Stream, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let m = 0.1 + rng.uniform();
            if rng.uniform() < 0.5 {
                -m
            } else {
                m
            }
        })
        .collect()
}

fn field(d: usize, h: usize, w: usize, data: &[f64]) -> FeatureField {
    FeatureField::new(d, h, w, data.to_vec()).unwrap()
}

fn small_spec(seed: u64) -> SynthSpec {
    SynthSpec {
        height: 16,
        width: 16,
        rects: vec![Rect::new(0, 8, 8, 8)],
        ..SynthSpec::new(seed)
    }
}

/// Relative disagreement for `term` at the point drawn from `seed`.
pub fn check(term: Term, seed: u64) -> f64 {
    let mut rng = Stream::named(seed, "gradcheck");
    let (d, h, w) = (2, 4, 4);
    let len = d * h * w;
    match term {
        Term::Segmentation => {
            let y = PlaneField::from_fn(h, w, |_, _| (rng.uniform() < 0.5) as u8 as f64);
            let theta: Vec<f64> = (0..h * w).map(|_| rng.uniform_in(-3.0, 3.0)).collect();
            disagreement(
                &mut |t| bce_dice_loss(&PlaneField::new(h, w, t.iter().map(|&z| sigmoid(z)).collect())?, &y),
                &theta,
            )
        }
        Term::Reconstruction => {
            let n: Vec<f64> = (0..len).map(|_| rng.normal()).collect();
            let diff: Vec<f64> = (0..len).map(|_| rng.normal()).collect();
            let r = away_from_zero(&mut rng, len);
            let theta: Vec<f64> = (0..len).map(|i| diff[i] - n[i] - r[i]).collect();
            let (nf, df) = (field(d, h, w, &n), field(d, h, w, &diff));
            disagreement(&mut |t| reconstruction_loss(&df, &field(d, h, w, t), &nf), &theta)
        }
        Term::Exploration => {
            let n = field(d, h, w, &away_from_zero(&mut rng, len));
            let theta: Vec<f64> = (0..len).map(|_| rng.normal()).collect();
            let zero = FeatureField::zeros(d, h, w);
            let sep = separation(&field(d, h, w, &theta), &n, 1e-8);
            let cfg = SsecConfig {
                margin: sep + 0.2,
                ..SsecConfig::for_steps(2)
            };
            disagreement(
                &mut |t| exploration_loss(&[(zero.clone(), zero.clone()), (field(d, h, w, t), n.clone())], &cfg),
                &theta,
            )
        }
        Term::Constraint => {
            let theta = away_from_zero(&mut rng, len);
            let mu = nuisance_mean(&field(d, h, w, &theta));
            let mut cfg = SsecConfig::for_steps(2);
            if seed % 2 == 0 {
                cfg.tau_lo = (mu - 0.3).max(0.0);
                cfg.tau_hi = mu - 0.05;
            } else {
                cfg.tau_lo = mu + 0.05;
                cfg.tau_hi = mu + 0.3;
            }
            let zero = FeatureField::zeros(d, h, w);
            disagreement(
                &mut |t| constraint_loss(&[(zero.clone(), zero.clone()), (zero.clone(), zero.clone()), (zero.clone(), field(d, h, w, t))], &cfg),
                &theta,
            )
        }
        Term::Total => {
            let sample = Sample::from_instance(&gen_instance(&small_spec(seed)).unwrap());
            let mut model = Model::seeded(4, 3, seed).unwrap();
            model.icdm.sve.patch_side = 8;
            let groups = Group::default_trainable();
            let mut theta = model.flatten(&groups);
            for v in theta.iter_mut() {
                *v += rng.uniform_in(-0.05, 0.05);
            }
            let obj = ObjectiveConfig::for_steps(3);
            disagreement(&mut |t| Ok(model.with_flat(&groups, t)?.loss(&sample, &obj)?.total), &theta)
        }
    }
}
