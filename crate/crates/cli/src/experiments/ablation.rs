use anyhow::Result;
use unfold_core::fit::fit;
use unfold_core::model::Model;
use unfold_core::objective::SsecConfig;
use unfold_core::report::{fmt_g6, fmt_opt};

use super::{bitemporal_samples, evaluate_model, Context, Experiment, Report};

/// All eight on/off combinations of residual gating, subband alignment and
/// the staged regulariser, each fitted from the same initialisation.
pub struct Ablation;

impl Experiment for Ablation {
    fn name(&self) -> &'static str {
        "ablation"
    }

    fn run(&self, ctx: &Context) -> Result<Report> {
        let s = &ctx.settings;
        let seed = s.require_seed()?;
        let steps: usize = s.get("steps")?;
        let eval = bitemporal_samples(s, &s.eval_seeds(seed, s.seeds_or(10)?)?)?;
        let full_objective = s.objective(steps)?;
        let mut csv = String::from(
            "# variants: gating,wssm,ssec (1 = on)\n\
             gating,wssm,ssec,train_loss,eval_total,mu_n,separation,f1,frac_below,frac_outside\n",
        );
        for bits in 0..8u8 {
            let (gating, wssm, ssec) = (bits & 4 != 0, bits & 2 != 0, bits & 1 != 0);
            let mut cfg = s.fit_config(seed, steps)?;
            cfg.bitemporal = true;
            if !ssec {
                cfg.objective.ssec = SsecConfig {
                    lambda_e: 0.0,
                    lambda_c: 0.0,
                    ..cfg.objective.ssec.clone()
                };
            }
            let mut model = Model::seeded(s.get("channels")?, steps, cfg.seed)?;
            model.tau = s.get("threshold")?;
            model.gating = gating;
            model.use_wssm = wssm;
            let fitted = fit(&cfg, &model)?;
            let ev = evaluate_model(&fitted.model, &eval, &full_objective)?;
            let train = fitted.curve.last().map(|r| r.total);
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                gating as u8,
                wssm as u8,
                ssec as u8,
                fmt_opt(train),
                fmt_g6(ev.loss.total),
                fmt_g6(ev.mu_n),
                fmt_g6(ev.separation),
                fmt_g6(ev.f1),
                fmt_g6(ev.frac_below),
                fmt_g6(ev.frac_outside)
            ));
        }
        Ok(Report::csv(csv))
    }
}
