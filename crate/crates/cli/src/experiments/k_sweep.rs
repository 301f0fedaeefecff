use std::time::Instant;

use anyhow::Result;
use unfold_core::report::{fmt_g6, fmt_opt};

use super::{evaluate_model, instance_samples, Context, Experiment, Report};

/// Fits and evaluates the solver for `K = 0..=k_max`.
pub struct KSweep;

impl Experiment for KSweep {
    fn name(&self) -> &'static str {
        "k-sweep"
    }

    fn run(&self, ctx: &Context) -> Result<Report> {
        let s = &ctx.settings;
        let seed = s.require_seed()?;
        let k_max: usize = s.get("k_max")?;
        let eval = instance_samples(s, &s.eval_seeds(seed, s.seeds_or(10)?)?)?;
        let mut csv = String::from(if ctx.options.timing {
            "k,train_loss,eval_total,f1,sve_gap,wall_ms\n"
        } else {
            "k,train_loss,eval_total,f1,sve_gap\n"
        });
        for k in 0..=k_max {
            let objective = s.objective(k)?;
            let fitted = ctx.fit_model(seed, k, |_| {})?;
            let start = Instant::now();
            let ev = evaluate_model(&fitted.model, &eval, &objective)?;
            let wall = start.elapsed().as_secs_f64() * 1e3;
            csv.push_str(&format!(
                "{k},{},{},{},{}",
                fmt_opt(fitted.curve.last().map(|r| r.total)),
                fmt_g6(ev.loss.total),
                fmt_g6(ev.f1),
                fmt_opt(ev.sve_gap)
            ));
            if ctx.options.timing {
                csv.push_str(&format!(",{}", fmt_g6(wall)));
            }
            csv.push('\n');
        }
        Ok(Report::csv(csv))
    }
}
