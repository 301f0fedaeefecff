use anyhow::Result;
use unfold_core::convergence::{contraction_report, ContractionReport};
use unfold_core::field::frobenius_norm;
use unfold_core::icdm::IcdmParams;
use unfold_core::model::{Model, Sample};
use unfold_core::report::{fmt_g6, fmt_opt};
use unfold_core::synth::gen_instance;

use super::{Context, Experiment, Options, Report};

/// Normalised mismatch scores `r^k`, step ratios and the fitted bound.
pub struct Contraction;

const HEADER: &str = "instance,k,r_k,ratio,bound,decrease\n";

impl Experiment for Contraction {
    fn name(&self) -> &'static str {
        "contraction"
    }

    fn needs_seed(&self, options: &Options) -> bool {
        options.replay.is_none()
    }

    fn run(&self, ctx: &Context) -> Result<Report> {
        if let Some(scores) = &ctx.options.replay {
            let rep = ContractionReport::from_scores(scores)?;
            let mut csv = String::from(HEADER);
            push_rows(&mut csv, "replay", &rep);
            return Ok(Report::csv(csv));
        }
        let s = &ctx.settings;
        let model = if ctx.options.null_params {
            let mut m = Model::seeded(s.get("channels")?, s.get("steps")?, 0)?;
            m.icdm = IcdmParams::null(m.channels(), m.steps());
            m
        } else {
            ctx.load_params()?
        };
        let seed = s.require_seed()?;
        let seeds = s.eval_seeds(seed, s.seeds_or(50)?)?;
        let mut csv = String::from(HEADER);
        let k = model.steps();
        let mut ratios: Vec<Vec<f64>> = vec![Vec::new(); k.saturating_sub(1)];
        let mut decreases = Vec::new();
        for &inst_seed in &seeds {
            let inst = gen_instance(&s.spec(inst_seed)?)?;
            let f = model.forward(&Sample::from_instance(&inst), false)?;
            let rep = contraction_report(&f.run.trace, frobenius_norm(&f.d))?;
            push_rows(&mut csv, &inst_seed.to_string(), &rep);
            for (slot, r) in ratios.iter_mut().zip(&rep.ratios) {
                slot.extend(r);
            }
            decreases.extend(rep.decrease);
        }
        for (i, r) in ratios.iter_mut().enumerate() {
            csv.push_str(&format!("median,{},,{},,\n", i + 2, fmt_opt(median(r))));
        }
        csv.push_str(&format!("median,,,,,{}\n", fmt_opt(median(&mut decreases))));
        Ok(Report::csv(csv))
    }
}

fn push_rows(csv: &mut String, label: &str, rep: &ContractionReport) {
    let last = rep.steps();
    for (i, r) in rep.scores.iter().enumerate() {
        let k = i + 1;
        let ratio = if k >= 2 { rep.ratios[k - 2] } else { None };
        let decrease = if k == last { rep.decrease } else { None };
        csv.push_str(&format!(
            "{label},{k},{},{},{},{}\n",
            fmt_g6(*r),
            fmt_opt(ratio),
            fmt_opt(rep.bound_at(k)),
            fmt_opt(decrease)
        ));
    }
}

/// Median of the finite values; `None` when empty.
pub fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}
