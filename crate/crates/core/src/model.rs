//! Full pipeline (subband alignment, solver, head) with flat parameter
//! access by group and a `name = value` text format.

use std::borrow::Cow;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{config_err, Error, Result};
use crate::field::{FeatureField, Matrix, PlaneField};
use crate::icdm::{predict_head, run, HeadParams, IcdmParams, Prediction, RunOutput, DEFAULT_THRESHOLD};
use crate::objective::{evaluate, LossReport, ObjectiveConfig};
use crate::synth::{gen_bitemporal, SynthInstance, SynthSpec};
use crate::wavelet::{wssm_apply, WssmParams};

/// One training/evaluation example.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    /// Difference field used when no bi-temporal pair is attached or the
    /// alignment stage is switched off.
    pub d: FeatureField,
    pub pair: Option<(FeatureField, FeatureField)>,
    pub y: PlaneField,
}

impl Sample {
    pub fn from_instance(inst: &SynthInstance) -> Self {
        Self {
            d: inst.d.clone(),
            pair: None,
            y: inst.y.clone(),
        }
    }

    /// Pair from [`gen_bitemporal`]; `d` holds the raw `F2 − F1`.
    pub fn bitemporal(spec: &SynthSpec) -> Result<Self> {
        let (f1, f2, y) = gen_bitemporal(spec)?;
        Ok(Self {
            d: f2.sub(&f1),
            pair: Some((f1, f2)),
            y,
        })
    }
}

/// Trainable parameter groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    Steps,
    Psi,
    Phi,
    Memory,
    Reducer,
    Mapper,
    Head,
    WssmEta,
    WssmPsi,
}

impl Group {
    pub const ALL: [Group; 9] = [
        Group::Steps,
        Group::Psi,
        Group::Phi,
        Group::Memory,
        Group::Reducer,
        Group::Mapper,
        Group::Head,
        Group::WssmEta,
        Group::WssmPsi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Group::Steps => "steps",
            Group::Psi => "psi",
            Group::Phi => "phi",
            Group::Memory => "memory",
            Group::Reducer => "reducer",
            Group::Mapper => "mapper",
            Group::Head => "head",
            Group::WssmEta => "wssm_eta",
            Group::WssmPsi => "wssm_psi",
        }
    }

    /// Parses a comma-separated list such as `steps,psi,head`.
    pub fn parse_list(s: &str) -> Result<Vec<Group>> {
        let mut out: Vec<Group> = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(Group::from_str)
            .collect::<Result<_>>()?;
        out.sort();
        out.dedup();
        Ok(out)
    }

    pub fn default_trainable() -> Vec<Group> {
        vec![Group::Steps, Group::Psi, Group::Mapper, Group::Head]
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Group::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown parameter group '{s}'")))
    }
}

/// Output of one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Forward {
    pub d: FeatureField,
    pub run: RunOutput,
    pub pred: Prediction,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub icdm: IcdmParams,
    pub head: HeadParams,
    pub wssm: WssmParams,
    pub tau: f64,
    /// When false the residual injections are switched off (`γ ≡ 0`).
    pub gating: bool,
    /// When false bi-temporal samples use the raw difference.
    pub use_wssm: bool,
}

impl Model {
    pub fn seeded(channels: usize, steps: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            icdm: IcdmParams::seeded(channels, steps, seed)?,
            head: HeadParams::new(channels),
            wssm: WssmParams::new(channels),
            tau: DEFAULT_THRESHOLD,
            gating: true,
            use_wssm: true,
        })
    }

    pub fn channels(&self) -> usize {
        self.icdm.channels
    }

    pub fn steps(&self) -> usize {
        self.icdm.steps()
    }

    /// Solver parameters with the ablation switches applied.
    pub fn solver_params(&self) -> Cow<'_, IcdmParams> {
        if self.gating {
            Cow::Borrowed(&self.icdm)
        } else {
            let mut p = self.icdm.clone();
            p.gamma.iter_mut().for_each(|g| *g = 0.0);
            Cow::Owned(p)
        }
    }

    /// `F̂2 − F̂1` after alignment, or the stored difference.
    pub fn difference(&self, s: &Sample) -> Result<FeatureField> {
        match (&s.pair, self.use_wssm) {
            (Some((f1, f2)), true) => {
                let (a1, a2) = wssm_apply(f1, f2, &self.wssm)?;
                Ok(a2.sub(&a1))
            }
            _ => Ok(s.d.clone()),
        }
    }

    pub fn forward(&self, s: &Sample, with_labels: bool) -> Result<Forward> {
        let d = self.difference(s)?;
        let labels = with_labels.then_some(&s.y);
        let out = run(&d, &self.solver_params(), labels)?;
        let pred = predict_head(&out.c, &self.head, self.tau)?;
        Ok(Forward { d, run: out, pred })
    }

    pub fn loss_of(&self, f: &Forward, s: &Sample, obj: &ObjectiveConfig) -> Result<LossReport> {
        evaluate(&f.d, &f.run.trace.states, &f.pred.probs, &s.y, obj)
    }

    /// Loss with the head re-evaluated on a cached solver output.
    pub fn loss_with_head(&self, f: &Forward, s: &Sample, obj: &ObjectiveConfig) -> Result<LossReport> {
        let pred = predict_head(&f.run.c, &self.head, self.tau)?;
        evaluate(&f.d, &f.run.trace.states, &pred.probs, &s.y, obj)
    }

    pub fn loss(&self, s: &Sample, obj: &ObjectiveConfig) -> Result<LossReport> {
        let f = self.forward(s, false)?;
        self.loss_of(&f, s, obj)
    }

    /// Calls `f` on every scalar of the selected groups, in a fixed order.
    /// Switched-off stages contribute nothing.
    pub fn visit_params(&mut self, groups: &[Group], f: &mut dyn FnMut(&mut f64)) {
        for g in Group::ALL {
            if !groups.contains(&g) {
                continue;
            }
            let p = &mut self.icdm;
            match g {
                Group::Steps => {
                    p.alpha.iter_mut().chain(p.beta.iter_mut()).for_each(&mut *f);
                    if self.gating {
                        p.gamma.iter_mut().for_each(&mut *f);
                    }
                }
                Group::Psi => {
                    p.psi_c.data_mut().iter_mut().chain(p.psi_n.data_mut()).for_each(&mut *f);
                }
                Group::Phi => {
                    p.phi_c.weights.iter_mut().chain(p.phi_n.weights.iter_mut()).for_each(&mut *f);
                }
                Group::Memory => {
                    for cell in [&mut p.mem_c, &mut p.mem_n] {
                        cell.w_update.data_mut().iter_mut().for_each(&mut *f);
                        cell.b_update.iter_mut().for_each(&mut *f);
                        cell.w_reset.data_mut().iter_mut().for_each(&mut *f);
                        cell.b_reset.iter_mut().for_each(&mut *f);
                        cell.w_cand.data_mut().iter_mut().for_each(&mut *f);
                        cell.b_cand.iter_mut().for_each(&mut *f);
                    }
                }
                Group::Reducer => p.sve.reducer.data_mut().iter_mut().for_each(&mut *f),
                Group::Mapper => {
                    f(&mut p.sve.mapper.scale);
                    f(&mut p.sve.mapper.bias);
                }
                Group::Head => {
                    self.head.weights.iter_mut().for_each(&mut *f);
                    f(&mut self.head.bias);
                }
                Group::WssmEta if self.use_wssm => self.wssm.eta.iter_mut().for_each(&mut *f),
                Group::WssmPsi if self.use_wssm => {
                    for m in &mut self.wssm.psi {
                        m.data_mut().iter_mut().for_each(&mut *f);
                    }
                }
                Group::WssmEta | Group::WssmPsi => {}
            }
        }
    }

    pub fn flatten(&self, groups: &[Group]) -> Vec<f64> {
        let mut out = Vec::new();
        self.clone().visit_params(groups, &mut |v| out.push(*v));
        out
    }

    pub fn param_count(&self, groups: &[Group]) -> usize {
        self.flatten(groups).len()
    }

    /// Inverse of [`Model::flatten`].
    pub fn with_flat(&self, groups: &[Group], theta: &[f64]) -> Result<Model> {
        let mut m = self.clone();
        let mut i = 0;
        m.visit_params(groups, &mut |v| {
            if i < theta.len() {
                *v = theta[i];
            }
            i += 1;
        });
        if i != theta.len() {
            return config_err(format!("expected {i} parameters, got {}", theta.len()));
        }
        Ok(m)
    }

    /// Index range of `group` inside the flat vector for `groups`.
    pub fn group_range(&self, groups: &[Group], group: Group) -> std::ops::Range<usize> {
        let mut start = 0;
        for g in Group::ALL {
            if !groups.contains(&g) {
                continue;
            }
            let n = self.param_count(&[g]);
            if g == group {
                return start..start + n;
            }
            start += n;
        }
        start..start
    }

    /// Pulls constrained scalars back into their domain.
    pub fn project(&mut self) {
        for e in &mut self.wssm.eta {
            *e = e.clamp(0.0, 1.0);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.icdm.validate()?;
        self.wssm.validate(self.channels())?;
        if self.head.weights.len() != self.channels() {
            return config_err("head weights must have one entry per channel");
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return config_err(format!("threshold {} outside (0, 1)", self.tau));
        }
        Ok(())
    }
}

/// F1 of a binary mask against binary labels; 1 when both are empty.
pub fn f1_score(mask: &PlaneField, y: &PlaneField) -> f64 {
    let (mut tp, mut fp, mut fneg) = (0.0, 0.0, 0.0);
    for (&m, &t) in mask.data().iter().zip(y.data()) {
        match (m > 0.5, t > 0.5) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fneg += 1.0,
            _ => {}
        }
    }
    if tp + fp + fneg == 0.0 {
        1.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fneg)
    }
}

fn write_values(out: &mut String, name: &str, values: &[f64]) {
    let joined: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
    let _ = writeln!(out, "{name} = {}", joined.join(" "));
}

impl Model {
    /// `name = value` lines; arrays are whitespace separated, matrices row-major.
    pub fn to_text(&self) -> String {
        let p = &self.icdm;
        let mut s = String::new();
        let _ = writeln!(s, "channels = {}", p.channels);
        let _ = writeln!(s, "steps = {}", p.steps());
        let _ = writeln!(s, "sve.reduced_channels = {}", p.sve.reduced_channels());
        let _ = writeln!(s, "sve.patch_side = {}", p.sve.patch_side);
        write_values(&mut s, "sve.epsilon", &[p.sve.epsilon]);
        let _ = writeln!(s, "memory_bypass = {}", p.memory_bypass);
        let _ = writeln!(s, "gating = {}", self.gating);
        let _ = writeln!(s, "use_wssm = {}", self.use_wssm);
        write_values(&mut s, "tau", &[self.tau]);
        write_values(&mut s, "alpha", &p.alpha);
        write_values(&mut s, "beta", &p.beta);
        write_values(&mut s, "gamma", &p.gamma);
        write_values(&mut s, "phi_c", &p.phi_c.weights);
        write_values(&mut s, "phi_n", &p.phi_n.weights);
        write_values(&mut s, "psi_c", p.psi_c.data());
        write_values(&mut s, "psi_n", p.psi_n.data());
        for (tag, cell) in [("mem_c", &p.mem_c), ("mem_n", &p.mem_n)] {
            write_values(&mut s, &format!("{tag}.w_update"), cell.w_update.data());
            write_values(&mut s, &format!("{tag}.b_update"), &cell.b_update);
            write_values(&mut s, &format!("{tag}.w_reset"), cell.w_reset.data());
            write_values(&mut s, &format!("{tag}.b_reset"), &cell.b_reset);
            write_values(&mut s, &format!("{tag}.w_cand"), cell.w_cand.data());
            write_values(&mut s, &format!("{tag}.b_cand"), &cell.b_cand);
        }
        write_values(&mut s, "sve.reducer", p.sve.reducer.data());
        write_values(&mut s, "sve.mapper", &[p.sve.mapper.scale, p.sve.mapper.bias]);
        write_values(&mut s, "head.weights", &self.head.weights);
        write_values(&mut s, "head.bias", &[self.head.bias]);
        write_values(&mut s, "wssm.eta", &self.wssm.eta);
        for (b, m) in ["a", "h", "v", "d"].iter().zip(&self.wssm.psi) {
            write_values(&mut s, &format!("wssm.psi_{b}"), m.data());
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Model> {
        let mut map = std::collections::BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("line {}: expected 'name = value'", lineno + 1)))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| -> Result<&str> {
            map.get(k)
                .map(String::as_str)
                .ok_or_else(|| Error::Format(format!("missing key '{k}'")))
        };
        let scalar = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| Error::Format(format!("key '{k}' is not an integer")))
        };
        let flag = |k: &str| -> Result<bool> {
            get(k)?
                .parse()
                .map_err(|_| Error::Format(format!("key '{k}' is not a boolean")))
        };
        let values = |k: &str, n: usize| -> Result<Vec<f64>> {
            let v: Vec<f64> = get(k)?
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Format(format!("key '{k}' has a malformed number")))?;
            if v.len() != n {
                return Err(Error::Format(format!("key '{k}' has {} values, expected {n}", v.len())));
            }
            Ok(v)
        };
        let d = scalar("channels")?;
        let k = scalar("steps")?;
        let r = scalar("sve.reduced_channels")?;
        let matrix = |key: &str, rows: usize, cols: usize| Matrix::new(rows, cols, values(key, rows * cols)?);

        let mut m = Model::seeded(d.max(1), k, 0)?;
        let p = &mut m.icdm;
        p.channels = d;
        p.sve.patch_side = scalar("sve.patch_side")?;
        p.sve.epsilon = values("sve.epsilon", 1)?[0];
        p.memory_bypass = flag("memory_bypass")?;
        p.alpha = values("alpha", k)?;
        p.beta = values("beta", k)?;
        p.gamma = values("gamma", k)?;
        p.phi_c.weights = values("phi_c", 27 * d * d)?;
        p.phi_n.weights = values("phi_n", 27 * d * d)?;
        p.psi_c = matrix("psi_c", d, d)?;
        p.psi_n = matrix("psi_n", d, d)?;
        for (tag, cell) in [("mem_c", &mut p.mem_c), ("mem_n", &mut p.mem_n)] {
            cell.w_update = matrix(&format!("{tag}.w_update"), d, 2 * d)?;
            cell.b_update = values(&format!("{tag}.b_update"), d)?;
            cell.w_reset = matrix(&format!("{tag}.w_reset"), d, 2 * d)?;
            cell.b_reset = values(&format!("{tag}.b_reset"), d)?;
            cell.w_cand = matrix(&format!("{tag}.w_cand"), d, 2 * d)?;
            cell.b_cand = values(&format!("{tag}.b_cand"), d)?;
        }
        p.sve.reducer = matrix("sve.reducer", r, d)?;
        let mapper = values("sve.mapper", 2)?;
        p.sve.mapper.scale = mapper[0];
        p.sve.mapper.bias = mapper[1];
        m.head.weights = values("head.weights", d)?;
        m.head.bias = values("head.bias", 1)?[0];
        m.tau = values("tau", 1)?[0];
        m.gating = flag("gating")?;
        m.use_wssm = flag("use_wssm")?;
        let eta = values("wssm.eta", 4)?;
        m.wssm.eta.copy_from_slice(&eta);
        for (b, slot) in ["a", "h", "v", "d"].iter().zip(m.wssm.psi.iter_mut()) {
            *slot = matrix(&format!("wssm.psi_{b}"), d, d)?;
        }
        m.validate().map_err(|e| Error::Format(format!("invalid parameters: {e}")))?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Model> {
        Model::from_text(&std::fs::read_to_string(path)?)
    }
}
