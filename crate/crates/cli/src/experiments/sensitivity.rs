use anyhow::Result;
use unfold_core::fit::fit;
use unfold_core::objective::ObjectiveConfig;
use unfold_core::report::fmt_g6;

use super::{evaluate_model, instance_samples, Context, Experiment, Report};

pub const MARGINS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];
pub const BANDS: [(f64, f64); 5] = [(0.01, 0.20), (0.03, 0.30), (0.05, 0.40), (0.08, 0.50), (0.10, 0.60)];
pub const LAMBDAS: [(f64, f64); 6] = [(0.1, 0.5), (0.3, 0.5), (0.5, 1.0), (0.5, 2.0), (1.0, 1.0), (1.0, 2.0)];

/// One-at-a-time sweep of the regulariser settings around a fitted
/// baseline; every setting continues fitting from the same baseline.
pub struct Sensitivity;

impl Experiment for Sensitivity {
    fn name(&self) -> &'static str {
        "sensitivity"
    }

    fn run(&self, ctx: &Context) -> Result<Report> {
        let s = &ctx.settings;
        let seed = s.require_seed()?;
        let steps: usize = s.get("steps")?;
        let baseline = match &ctx.options.params {
            Some(_) => ctx.load_params()?,
            None => ctx.fit_model(seed, steps, |_| {})?.model,
        };
        let eval = instance_samples(s, &s.eval_seeds(seed, s.seeds_or(10)?)?)?;
        let mut cfg = s.fit_config(seed, steps)?;
        cfg.iterations = s.get("sens_iterations")?;
        let base_obj = cfg.objective.clone();

        let mut settings: Vec<(&str, f64, f64, ObjectiveConfig)> = Vec::new();
        for m in MARGINS {
            let mut o = base_obj.clone();
            o.ssec.margin = m;
            settings.push(("m", m, f64::NAN, o));
        }
        for (lo, hi) in BANDS {
            let mut o = base_obj.clone();
            o.ssec.tau_lo = lo;
            o.ssec.tau_hi = hi;
            settings.push(("tau", lo, hi, o));
        }
        for (le, lc) in LAMBDAS {
            let mut o = base_obj.clone();
            o.ssec.lambda_e = le;
            o.ssec.lambda_c = lc;
            settings.push(("lambda", le, lc, o));
        }

        let mut csv = String::from("family,a,b,default,f1,eval_total,mu_n\n");
        for (family, a, b, obj) in settings {
            let is_default = obj.ssec.margin == base_obj.ssec.margin
                && obj.ssec.tau_lo == base_obj.ssec.tau_lo
                && obj.ssec.tau_hi == base_obj.ssec.tau_hi
                && obj.ssec.lambda_e == base_obj.ssec.lambda_e
                && obj.ssec.lambda_c == base_obj.ssec.lambda_c;
            cfg.objective = obj;
            let tuned = fit(&cfg, &baseline)?;
            let ev = evaluate_model(&tuned.model, &eval, &cfg.objective)?;
            let b = if b.is_nan() { String::new() } else { fmt_g6(b) };
            csv.push_str(&format!(
                "{family},{},{b},{},{},{},{}\n",
                fmt_g6(a),
                is_default as u8,
                fmt_g6(ev.f1),
                fmt_g6(ev.loss.total),
                fmt_g6(ev.mu_n)
            ));
        }
        Ok(Report::csv(csv))
    }
}
