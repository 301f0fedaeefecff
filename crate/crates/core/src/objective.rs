//! Staged separation/energy regulariser, reconstruction and segmentation
//! losses, and the total training objective.

use crate::error::{config_err, Result};
use crate::field::{frobenius_norm, FeatureField, PlaneField};

pub const DEFAULT_MARGIN: f64 = 0.3;
pub const DEFAULT_BAND: (f64, f64) = (0.05, 0.40);
pub const DEFAULT_LAMBDAS: (f64, f64) = (0.5, 1.0);
/// Probability clamp used by the cross-entropy term.
pub const BCE_EPSILON: f64 = 1e-7;
pub const DICE_SMOOTH: f64 = 1.0;

/// Staged regulariser settings. Step indices refer to states `1..=K`.
#[derive(Clone, Debug, PartialEq)]
pub struct SsecConfig {
    pub margin: f64,
    pub tau_lo: f64,
    pub tau_hi: f64,
    pub lambda_e: f64,
    pub lambda_c: f64,
    pub early: Vec<usize>,
    pub late: Vec<usize>,
    pub epsilon: f64,
}

impl SsecConfig {
    /// Defaults with the early/late split `{1..⌈K/2⌉}`, `{⌈K/2⌉+1..K}`.
    pub fn for_steps(k: usize) -> Self {
        let (early, late) = default_split(k);
        Self {
            margin: DEFAULT_MARGIN,
            tau_lo: DEFAULT_BAND.0,
            tau_hi: DEFAULT_BAND.1,
            lambda_e: DEFAULT_LAMBDAS.0,
            lambda_c: DEFAULT_LAMBDAS.1,
            early,
            late,
            epsilon: crate::sve::DEFAULT_EPSILON,
        }
    }

    /// Same split, both weights zero.
    pub fn disabled(k: usize) -> Self {
        Self {
            lambda_e: 0.0,
            lambda_c: 0.0,
            ..Self::for_steps(k)
        }
    }

    pub fn with_steps(mut self, k: usize) -> Self {
        let (early, late) = default_split(k);
        self.early = early;
        self.late = late;
        self
    }

    pub fn is_enabled(&self) -> bool {
        self.lambda_e != 0.0 || self.lambda_c != 0.0
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if !(0.0 <= self.tau_lo && self.tau_lo < self.tau_hi) {
            return config_err(format!("need 0 <= tau_lo < tau_hi, got ({}, {})", self.tau_lo, self.tau_hi));
        }
        if !(self.margin > 0.0 && self.margin < 2.0) {
            return config_err(format!("margin {} outside (0, 2)", self.margin));
        }
        if self.lambda_e < 0.0 || self.lambda_c < 0.0 {
            return config_err("regulariser weights must be nonnegative");
        }
        for &s in self.early.iter().chain(&self.late) {
            if s == 0 || s > k {
                return config_err(format!("step {s} outside 1..={k}"));
            }
        }
        if self.early.iter().any(|s| self.late.contains(s)) {
            return config_err("early and late step sets overlap");
        }
        Ok(())
    }
}

pub fn default_split(k: usize) -> (Vec<usize>, Vec<usize>) {
    let half = k.div_ceil(2);
    ((1..=half).collect(), (half + 1..=k).collect())
}

/// `1 − ⟨c, n⟩ / (‖c‖‖n‖ + ε)`, clamped to `[0, 2]`.
pub fn separation(c: &FeatureField, n: &FeatureField, eps: f64) -> f64 {
    let cos = c.dot(n) / (frobenius_norm(c) * frobenius_norm(n) + eps);
    (1.0 - cos).clamp(0.0, 2.0)
}

/// Mean absolute entry.
pub fn nuisance_mean(n: &FeatureField) -> f64 {
    let data = n.data();
    if data.is_empty() {
        return 0.0;
    }
    data.iter().map(|v| v.abs()).sum::<f64>() / data.len() as f64
}

fn state_at(states: &[(FeatureField, FeatureField)], k: usize) -> Result<&(FeatureField, FeatureField)> {
    states.get(k).ok_or_else(|| {
        crate::error::Error::Config(format!("step {k} not present in a trace of {} states", states.len()))
    })
}

/// `Σ_{k∈early} max(0, m − d(C^k, N^k))`; `states[k]` holds `(C^k, N^k)`.
pub fn exploration_loss(states: &[(FeatureField, FeatureField)], cfg: &SsecConfig) -> Result<f64> {
    let mut total = 0.0;
    for &k in &cfg.early {
        let (c, n) = state_at(states, k)?;
        total += hinge_separation(separation(c, n, cfg.epsilon), cfg.margin);
    }
    Ok(total)
}

pub fn hinge_separation(d: f64, margin: f64) -> f64 {
    (margin - d).max(0.0)
}

/// `max(0, μ − τ_u) + max(0, τ_ℓ − μ)`.
pub fn band_penalty(mu: f64, tau_lo: f64, tau_hi: f64) -> f64 {
    (mu - tau_hi).max(0.0) + (tau_lo - mu).max(0.0)
}

/// Band violation of `μ(N^k)` summed over the late steps.
pub fn constraint_loss(states: &[(FeatureField, FeatureField)], cfg: &SsecConfig) -> Result<f64> {
    let mut total = 0.0;
    for &k in &cfg.late {
        let (_, n) = state_at(states, k)?;
        total += band_penalty(nuisance_mean(n), cfg.tau_lo, cfg.tau_hi);
    }
    Ok(total)
}

/// `λ_e·exploration + λ_c·constraint`.
pub fn ssec_loss(states: &[(FeatureField, FeatureField)], cfg: &SsecConfig) -> Result<f64> {
    let exp = exploration_loss(states, cfg)?;
    let con = constraint_loss(states, cfg)?;
    Ok(cfg.lambda_e * exp + cfg.lambda_c * con)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RecReduction {
    /// Entrywise L1 norm.
    #[default]
    Sum,
    /// L1 norm divided by the entry count.
    Mean,
}

impl std::str::FromStr for RecReduction {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Self::Sum),
            "mean" => Ok(Self::Mean),
            other => config_err(format!("unknown reconstruction reduction '{other}'")),
        }
    }
}

impl std::fmt::Display for RecReduction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Sum => "sum",
            Self::Mean => "mean",
        })
    }
}

/// `‖D − (C + N)‖₁`.
pub fn reconstruction_loss(d_field: &FeatureField, c_k: &FeatureField, n_k: &FeatureField) -> Result<f64> {
    d_field.check_same_shape(c_k, "reconstruction")?;
    d_field.check_same_shape(n_k, "reconstruction")?;
    Ok(d_field
        .data()
        .iter()
        .zip(c_k.data())
        .zip(n_k.data())
        .map(|((d, c), n)| (d - (c + n)).abs())
        .sum())
}

pub fn reduced_reconstruction(
    d_field: &FeatureField,
    c_k: &FeatureField,
    n_k: &FeatureField,
    reduction: RecReduction,
) -> Result<f64> {
    let l1 = reconstruction_loss(d_field, c_k, n_k)?;
    Ok(match reduction {
        RecReduction::Sum => l1,
        RecReduction::Mean => l1 / d_field.data().len().max(1) as f64,
    })
}

/// Mean binary cross-entropy plus soft Dice loss (smoothing 1), weighted 1:1.
pub fn bce_dice_loss(p: &PlaneField, y: &PlaneField) -> Result<f64> {
    if p.height() != y.height() || p.width() != y.width() {
        return config_err("probability and label planes differ in shape");
    }
    let n = p.data().len().max(1) as f64;
    let (mut bce, mut inter, mut sum_p, mut sum_y) = (0.0, 0.0, 0.0, 0.0);
    for (&pv, &yv) in p.data().iter().zip(y.data()) {
        let q = pv.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
        bce -= yv * q.ln() + (1.0 - yv) * (1.0 - q).ln();
        inter += q * yv;
        sum_p += q;
        sum_y += yv;
    }
    let dice = 1.0 - (2.0 * inter + DICE_SMOOTH) / (sum_p + sum_y + DICE_SMOOTH);
    Ok(bce / n + dice)
}

/// Objective weights shared by fitting and the experiments.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveConfig {
    pub ssec: SsecConfig,
    pub lambda_rec: f64,
    pub rec_reduction: RecReduction,
    /// Slot for the deep-supervision weight; the term itself is always 0.
    pub lambda_aux: f64,
}

impl ObjectiveConfig {
    pub fn for_steps(k: usize) -> Self {
        Self {
            ssec: SsecConfig::for_steps(k),
            lambda_rec: 1.0,
            rec_reduction: RecReduction::Sum,
            lambda_aux: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossReport {
    pub seg: f64,
    pub rec: f64,
    pub exp: f64,
    pub con: f64,
    pub ssec: f64,
    pub total: f64,
}

impl LossReport {
    pub const CSV_HEADER: &'static str = "seg,rec,exp,con,ssec,total";

    /// Assembles the report from raw terms under the configured weights.
    pub fn assemble(seg: f64, rec: f64, exp: f64, con: f64, cfg: &ObjectiveConfig) -> Self {
        let ssec = cfg.ssec.lambda_e * exp + cfg.ssec.lambda_c * con;
        Self {
            seg,
            rec,
            exp,
            con,
            ssec,
            total: total_loss(seg, rec, ssec, cfg.lambda_rec),
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.seg, self.rec, self.exp, self.con, self.ssec, self.total]
            .iter()
            .all(|v| v.is_finite())
    }

    /// Component-wise mean of several reports.
    pub fn mean(reports: &[LossReport]) -> LossReport {
        let n = reports.len().max(1) as f64;
        let mut m = LossReport::default();
        for r in reports {
            m.seg += r.seg / n;
            m.rec += r.rec / n;
            m.exp += r.exp / n;
            m.con += r.con / n;
            m.ssec += r.ssec / n;
            m.total += r.total / n;
        }
        m
    }

    pub fn to_csv_row(&self) -> String {
        use crate::report::fmt_g6;
        [self.seg, self.rec, self.exp, self.con, self.ssec, self.total]
            .iter()
            .map(|&v| fmt_g6(v))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// `seg + λ_rec·rec + ssec`; the auxiliary term is identically zero.
pub fn total_loss(seg: f64, rec: f64, ssec: f64, lambda_rec: f64) -> f64 {
    seg + lambda_rec * rec + ssec
}

/// Full objective of one solver run against labels `y`.
pub fn evaluate(
    d_field: &FeatureField,
    states: &[(FeatureField, FeatureField)],
    probs: &PlaneField,
    y: &PlaneField,
    cfg: &ObjectiveConfig,
) -> Result<LossReport> {
    let (c_k, n_k) = states
        .last()
        .ok_or_else(|| crate::error::Error::Config("empty trace".into()))?;
    let seg = bce_dice_loss(probs, y)?;
    let rec = reduced_reconstruction(d_field, c_k, n_k, cfg.rec_reduction)?;
    let (exp, con) = if cfg.ssec.is_enabled() {
        (exploration_loss(states, &cfg.ssec)?, constraint_loss(states, &cfg.ssec)?)
    } else {
        (0.0, 0.0)
    };
    Ok(LossReport::assemble(seg, rec, exp, con, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ff(c: usize, h: usize, w: usize, v: &[f64]) -> FeatureField {
        FeatureField::new(c, h, w, v.to_vec()).unwrap()
    }

    #[test]
    fn separation_examples() {
        let a = ff(1, 1, 2, &[1.0, 2.0]);
        assert!(separation(&a, &a, 1e-8).abs() < 1e-8);
        let b = ff(1, 1, 2, &[0.0, 3.0]);
        let c = ff(1, 1, 2, &[4.0, 0.0]);
        assert_eq!(separation(&b, &c, 1e-8), 1.0);
        assert!((separation(&a, &a.scale(-1.0), 1e-8) - 2.0).abs() < 1e-8);
    }

    #[test]
    fn nuisance_mean_examples() {
        assert_eq!(nuisance_mean(&FeatureField::zeros(2, 2, 2)), 0.0);
        assert_eq!(nuisance_mean(&FeatureField::filled(2, 2, 2, 1.0)), 1.0);
        assert_eq!(nuisance_mean(&ff(1, 2, 2, &[-1.0, 3.0, -1.0, 3.0])), 2.0);
    }

    #[test]
    fn band_examples() {
        assert_eq!(band_penalty(0.2, 0.05, 0.4), 0.0);
        assert!((band_penalty(0.5, 0.05, 0.4) - 0.1).abs() < 1e-15);
        assert!((band_penalty(0.01, 0.05, 0.4) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn split_for_three_steps() {
        assert_eq!(default_split(3), (vec![1, 2], vec![3]));
        assert_eq!(default_split(1), (vec![1], vec![]));
        assert_eq!(default_split(0), (vec![], vec![]));
    }

    #[test]
    fn exploration_out_of_range() {
        let s = vec![(FeatureField::zeros(1, 1, 1), FeatureField::zeros(1, 1, 1))];
        assert!(exploration_loss(&s, &SsecConfig::for_steps(2)).is_err());
    }

    #[test]
    fn reconstruction_examples() {
        let z = FeatureField::zeros(1, 2, 2);
        let ones = FeatureField::filled(1, 2, 2, 1.0);
        assert_eq!(reconstruction_loss(&z, &z, &ones).unwrap(), 4.0);
        assert_eq!(reconstruction_loss(&ones, &z, &ones).unwrap(), 0.0);
    }

    #[test]
    fn total_examples() {
        assert_eq!(total_loss(1.0, 2.0, 0.5, 1.0), 3.5);
        assert_eq!(total_loss(1.0, 7.0, 0.5, 0.0), 1.5);
        let cfg = ObjectiveConfig::for_steps(3);
        let r = LossReport::assemble(0.0, 0.0, 0.25, 0.1, &cfg);
        assert!((r.ssec - 0.225).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(SsecConfig::for_steps(3).validate(3).is_ok());
        let mut c = SsecConfig::for_steps(3);
        c.tau_lo = 0.5;
        assert!(c.validate(3).is_err());
        let mut c = SsecConfig::for_steps(3);
        c.late = vec![2];
        assert!(c.validate(3).is_err());
        assert!(SsecConfig::for_steps(3).validate(2).is_err());
    }
}
