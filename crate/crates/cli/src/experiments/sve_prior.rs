use anyhow::Result;
use unfold_core::model::Sample;
use unfold_core::report::fmt_opt;
use unfold_core::sve::patch_entropies;
use unfold_core::synth::gen_instance;

use super::{Context, Experiment, Report};

/// Changed vs unchanged mean patch SVE on `D` and on every `C^k`.
pub struct SvePrior;

impl Experiment for SvePrior {
    fn name(&self) -> &'static str {
        "sve-prior"
    }

    fn run(&self, ctx: &Context) -> Result<Report> {
        let s = &ctx.settings;
        let model = ctx.load_params()?;
        let seed = s.require_seed()?;
        let seeds = s.eval_seeds(seed, s.seeds_or(20)?)?;
        let steps = model.steps();
        let mut csv = String::from("seed,stage,k,sve_changed,sve_unchanged,gap\n");
        // per stage (0 = raw D, k = C^k): sums and counts of each column
        let mut sums = vec![[0.0f64; 3]; steps + 1];
        let mut counts = vec![[0usize; 3]; steps + 1];
        for &inst_seed in &seeds {
            let inst = gen_instance(&s.spec(inst_seed)?)?;
            let sve = &model.icdm.sve;
            let raw = patch_entropies(&inst.d, sve.patch_side, sve.epsilon)?;
            let mut rows = vec![(
                "D",
                String::new(),
                inst.groups.mean_changed(&raw),
                inst.groups.mean_unchanged(&raw),
            )];
            let f = model.forward(&Sample::from_instance(&inst), true)?;
            for rec in f.run.trace.records.iter().skip(1) {
                rows.push(("C", rec.step.to_string(), rec.sve_changed, rec.sve_unchanged));
            }
            for (stage, (name, k, ch, un)) in rows.into_iter().enumerate() {
                let gap = ch.zip(un).map(|(a, b)| a - b);
                for (j, v) in [ch, un, gap].into_iter().enumerate() {
                    if let Some(v) = v {
                        sums[stage][j] += v;
                        counts[stage][j] += 1;
                    }
                }
                csv.push_str(&format!(
                    "{inst_seed},{name},{k},{},{},{}\n",
                    fmt_opt(ch),
                    fmt_opt(un),
                    fmt_opt(gap)
                ));
            }
        }
        for stage in 0..=steps {
            let mean = |j: usize| (counts[stage][j] > 0).then(|| sums[stage][j] / counts[stage][j] as f64);
            let (name, k) = if stage == 0 { ("D", String::new()) } else { ("C", stage.to_string()) };
            csv.push_str(&format!(
                "mean,{name},{k},{},{},{}\n",
                fmt_opt(mean(0)),
                fmt_opt(mean(1)),
                fmt_opt(mean(2))
            ));
        }
        Ok(Report::csv(csv))
    }
}
