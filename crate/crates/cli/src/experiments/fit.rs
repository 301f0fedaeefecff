use anyhow::Result;

use super::{Context, Experiment, Report};

/// Fits a model under the current settings; writes `params.txt` and the
/// loss curve.
pub struct Fit;

impl Experiment for Fit {
    fn name(&self) -> &'static str {
        "fit"
    }

    fn run(&self, ctx: &Context) -> Result<Report> {
        ctx.require_out()?;
        let s = &ctx.settings;
        let seed = s.require_seed()?;
        let fitted = ctx.fit_model(seed, s.get("steps")?, |_| {})?;
        Ok(Report {
            csv: fitted.curve_csv(),
            files: vec![("params.txt".into(), fitted.model.to_text().into_bytes())],
            failed: false,
        })
    }
}
