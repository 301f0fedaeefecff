use anyhow::Result;
use unfold_core::pufd::Tensor;
use unfold_core::report::{fmt_g6, fmt_opt};
use unfold_core::sve::{patch_entropies, DEFAULT_EPSILON};
use unfold_core::synth::{gen_bitemporal, gen_instance};

use super::{Context, Experiment, Report};

/// Writes one synthetic instance (and its bi-temporal pair) as tensor
/// files; the CSV lists per-patch label group and SVE of `D`.
pub struct Gen;

fn encode(t: Tensor) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    t.write_to(&mut buf)?;
    Ok(buf)
}

impl Experiment for Gen {
    fn name(&self) -> &'static str {
        "gen"
    }

    fn run(&self, ctx: &Context) -> Result<Report> {
        ctx.require_out()?;
        let s = &ctx.settings;
        let spec = s.spec(s.require_seed()?)?;
        let inst = gen_instance(&spec)?;
        let (f1, f2, _) = gen_bitemporal(&spec)?;
        let files = vec![
            ("d.pufd".to_string(), encode(Tensor::from(&inst.d))?),
            ("c_star.pufd".to_string(), encode(Tensor::from(&inst.c_star))?),
            ("n_star.pufd".to_string(), encode(Tensor::from(&inst.n_star))?),
            ("y.pufd".to_string(), encode(Tensor::from(&inst.y))?),
            ("f1.pufd".to_string(), encode(Tensor::from(&f1))?),
            ("f2.pufd".to_string(), encode(Tensor::from(&f2))?),
            ("spec.txt".to_string(), format!("{}\n", spec.record()).into_bytes()),
        ];
        let sve = patch_entropies(&inst.d, spec.patch_side, DEFAULT_EPSILON)?;
        let mut csv = String::from("patch,changed,sve_d\n");
        for (j, v) in sve.iter().enumerate() {
            let changed = inst.groups.changed.contains(&j);
            csv.push_str(&format!("{j},{},{}\n", changed as u8, fmt_g6(*v)));
        }
        csv.push_str(&format!(
            "mean_changed,,{}\nmean_unchanged,,{}\n",
            fmt_opt(inst.groups.mean_changed(&sve)),
            fmt_opt(inst.groups.mean_unchanged(&sve))
        ));
        Ok(Report {
            csv,
            files,
            failed: false,
        })
    }
}
