use anyhow::Result;
use unfold_core::convergence::{consistency_distance, mismatch_score, ContractionReport};
use unfold_core::field::{frobenius_norm, FeatureField};
use unfold_core::fit::fd_gradient;
use unfold_core::icdm::{run, IcdmParams};
use unfold_core::report::fmt_g6;
use unfold_core::rng::Stream;
use unfold_core::sve::{patch_sve, sve_map, SveParams};
use unfold_core::synth::{gen_instance, SynthSpec};
use unfold_core::wavelet::{dwt2_haar, idwt2_haar, wssm_align, WssmParams};

use super::{Context, Experiment, Options, Report};

/// Fast invariant suite; any failure makes the process exit with status 2.
pub struct Check;

struct Row {
    name: &'static str,
    measured: f64,
    tolerance: f64,
}

fn random_field(rng: &mut Stream, d: usize, h: usize, w: usize) -> FeatureField {
    FeatureField::from_fn(d, h, w, |_, _, _| rng.normal())
}

/// Entries on the grid `k/16`, `|k| ≤ 64`: sums and halvings stay exact.
fn dyadic_field(rng: &mut Stream, d: usize, h: usize, w: usize) -> FeatureField {
    FeatureField::from_fn(d, h, w, |_, _, _| (rng.next_u64() % 129) as f64 / 16.0 - 4.0)
}

impl Experiment for Check {
    fn name(&self) -> &'static str {
        "check"
    }

    fn needs_seed(&self, _options: &Options) -> bool {
        false
    }

    fn run(&self, ctx: &Context) -> Result<Report> {
        let seed = ctx.settings.seed.unwrap_or(0);
        let mut rng = Stream::named(seed, "check");
        let mut rows = Vec::new();

        let (mut round_trip, mut parseval) = (0.0f64, 0.0f64);
        for _ in 0..20 {
            let x = random_field(&mut rng, 4, 16, 16);
            let s = dwt2_haar(&x)?;
            round_trip = round_trip.max(idwt2_haar(&s)?.sub(&x).max_abs());
            let e: f64 = s.bands().iter().map(|b| b.dot(b)).sum();
            parseval = parseval.max((e - x.dot(&x)).abs() / x.dot(&x));
        }
        rows.push(Row { name: "haar_round_trip", measured: round_trip, tolerance: 1e-12 });
        rows.push(Row { name: "haar_parseval", measured: parseval, tolerance: 1e-12 });

        rows.push(Row {
            name: "sve_uniform",
            measured: (patch_sve(&[0.25; 4], 1e-8) - 4f64.ln()).abs(),
            tolerance: 1e-6,
        });
        rows.push(Row { name: "sve_one_hot", measured: patch_sve(&[1.0, 0.0, 0.0, 0.0], 1e-8).abs(), tolerance: 2e-8 });
        let x = random_field(&mut rng, 4, 16, 16);
        let p = SveParams::identity(4);
        let scaled = sve_map(&x.scale(4.0), &p)?;
        let base = sve_map(&x, &p)?;
        let diff = scaled.data().iter().zip(base.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        rows.push(Row { name: "sve_scale_invariance", measured: diff, tolerance: 0.0 });

        let (mut sum_err, mut eta0_err) = (0.0f64, 0.0f64);
        let dyadic = WssmParams {
            eta: [0.5, 0.25, 0.125, 0.75],
            ..WssmParams::new(3)
        };
        for _ in 0..10 {
            let s1 = dwt2_haar(&dyadic_field(&mut rng, 3, 8, 8))?;
            let s2 = dwt2_haar(&dyadic_field(&mut rng, 3, 8, 8))?;
            let (a1, a2) = wssm_align(&s1, &s2, &dyadic)?;
            for k in 0..4 {
                let lhs = a1.bands()[k].add(a2.bands()[k]);
                let rhs = s1.bands()[k].add(s2.bands()[k]);
                sum_err = sum_err.max(lhs.sub(&rhs).max_abs());
            }
            let (b1, b2) = wssm_align(&s1, &s2, &WssmParams::disabled(3))?;
            for k in 0..4 {
                eta0_err = eta0_err
                    .max(b1.bands()[k].sub(s1.bands()[k]).max_abs())
                    .max(b2.bands()[k].sub(s2.bands()[k]).max_abs());
            }
        }
        rows.push(Row { name: "wssm_sum_preserved", measured: sum_err, tolerance: 0.0 });
        rows.push(Row { name: "wssm_eta_zero_identity", measured: eta0_err, tolerance: 1e-12 });

        let inst = gen_instance(&SynthSpec::new(seed))?;
        rows.push(Row {
            name: "synth_additivity",
            measured: inst.d.sub(&inst.c_star.add(&inst.n_star)).max_abs(),
            tolerance: 0.0,
        });
        let out = run(&inst.d, &IcdmParams::null(4, 5), None)?;
        rows.push(Row {
            name: "null_step_fixed_point",
            measured: out.c.max_abs().max(out.n.sub(&inst.d).max_abs()),
            tolerance: 0.0,
        });

        let c = random_field(&mut rng, 4, 8, 8);
        let n = random_field(&mut rng, 4, 8, 8);
        let d = random_field(&mut rng, 4, 8, 8);
        let dist = consistency_distance(&d, &c, &n)?;
        let via_score = mismatch_score(&d, &c, &n)? * frobenius_norm(&d) / std::f64::consts::SQRT_2;
        rows.push(Row { name: "consistency_distance_identity", measured: (dist - via_score).abs(), tolerance: 1e-12 });

        let rep = ContractionReport::from_scores(&[0.412, 0.173, 0.068])?;
        let replay_err = [
            (rep.ratios[0].unwrap_or(f64::NAN) - 0.420).abs(),
            (rep.ratios[1].unwrap_or(f64::NAN) - 0.393).abs(),
            (rep.decrease.unwrap_or(f64::NAN) - 0.835).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        rows.push(Row { name: "table5_replay", measured: replay_err, tolerance: 5e-4 });

        let g = fd_gradient(&mut |t| Ok(t[0] * t[0]), &[3.0], 1e-4)?;
        rows.push(Row { name: "fd_quadratic", measured: (g[0] - 6.0).abs(), tolerance: 1e-6 });

        let mut csv = String::from("check,measured,tolerance,pass\n");
        let mut failed = false;
        for r in rows {
            let pass = r.measured <= r.tolerance;
            failed |= !pass;
            csv.push_str(&format!("{},{},{},{}\n", r.name, fmt_g6(r.measured), fmt_g6(r.tolerance), pass as u8));
        }
        Ok(Report { csv, files: Vec::new(), failed })
    }
}
