//! Residual-contraction diagnostics of the unrolled solver.
//!
//! All contraction statistics start at `k = 1`; the `0 → 1` transition out
//! of the trivial initialisation is treated as a transient.

use crate::error::{config_err, Error, Result};
use crate::field::{frobenius_norm, FeatureField};
use crate::icdm::{residual, SolverState, SolverTrace};
use crate::report::{fmt_g6, fmt_opt};

/// Scores at or below this are treated as zero.
pub const SCORE_EPSILON: f64 = 1e-12;

/// `‖D − (C + N)‖_F / ‖D‖_F`.
pub fn mismatch_score(d_field: &FeatureField, c: &FeatureField, n: &FeatureField) -> Result<f64> {
    let d_norm = frobenius_norm(d_field);
    if d_norm == 0.0 {
        return Err(Error::UndefinedScore("difference field is identically zero".into()));
    }
    Ok(residual_norm(d_field, c, n)? / d_norm)
}

/// `‖D − (C + N)‖_F / √2`, the Euclidean distance from `(C, N)` to the set
/// `{(C', N') : C' + N' = D}`.
pub fn consistency_distance(d_field: &FeatureField, c: &FeatureField, n: &FeatureField) -> Result<f64> {
    Ok(residual_norm(d_field, c, n)? / std::f64::consts::SQRT_2)
}

fn residual_norm(d_field: &FeatureField, c: &FeatureField, n: &FeatureField) -> Result<f64> {
    let state = SolverState {
        c: c.clone(),
        n: n.clone(),
        h_c: c.clone(),
        h_n: n.clone(),
        k: 0,
    };
    Ok(frobenius_norm(&residual(&state, d_field)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionReport {
    /// `r^1 .. r^K`.
    pub scores: Vec<f64>,
    /// `r^k / r^{k−1}` for `k = 2..=K`; absent when `r^{k−1}` is zero.
    pub ratios: Vec<Option<f64>>,
    /// `exp` of the least-squares slope of `ln r^k` against `k`.
    pub rho: Option<f64>,
    /// Estimated perturbations `max(0, r^{k+1} − ρ·r^k)`, `k = 1..K−1`.
    pub deltas: Option<Vec<f64>>,
    /// `1 − r^K / r^1`.
    pub decrease: Option<f64>,
}

impl ContractionReport {
    /// Builds the report from the scores `r^1 .. r^K`.
    pub fn from_scores(scores: &[f64]) -> Result<Self> {
        if scores.len() < 2 {
            return config_err(format!("need at least 2 refinement steps, got {}", scores.len()));
        }
        if scores.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::Domain("mismatch scores must be finite and nonnegative".into()));
        }
        let ratios = scores
            .windows(2)
            .map(|w| (w[0] > SCORE_EPSILON).then(|| w[1] / w[0]))
            .collect();
        let rho = fit_rho(scores);
        let deltas = rho.map(|rho| {
            scores
                .windows(2)
                .map(|w| (w[1] - rho * w[0]).max(0.0))
                .collect()
        });
        let (first, last) = (scores[0], scores[scores.len() - 1]);
        let decrease = (first > SCORE_EPSILON).then(|| 1.0 - last / first);
        Ok(Self {
            scores: scores.to_vec(),
            ratios,
            rho,
            deltas,
            decrease,
        })
    }

    pub fn steps(&self) -> usize {
        self.scores.len()
    }

    /// Bound on `r^k` implied by the fitted `ρ` and estimated `δ`, for
    /// `k ≥ 2`; absent unless `0 < ρ < 1`.
    pub fn bound_at(&self, k: usize) -> Option<f64> {
        let rho = self.rho?;
        let deltas = self.deltas.as_ref()?;
        if k < 2 || k > self.steps() {
            return None;
        }
        geometric_bound(self.scores[0], rho, deltas, k).ok().map(|b| b.bound)
    }

    /// Rows `k, r_k, ratio, bound` for `k = 1..=K`.
    pub fn to_csv_rows(&self, prefix: &str) -> String {
        let mut out = String::new();
        for (i, r) in self.scores.iter().enumerate() {
            let k = i + 1;
            let ratio = if k >= 2 { self.ratios[k - 2] } else { None };
            out.push_str(&format!(
                "{prefix}{k},{},{},{}\n",
                fmt_g6(*r),
                fmt_opt(ratio),
                fmt_opt(self.bound_at(k))
            ));
        }
        out
    }
}

/// Report from a solver trace, skipping the initial state.
pub fn contraction_report(trace: &SolverTrace, d_norm: f64) -> Result<ContractionReport> {
    if !(d_norm > 0.0) {
        return Err(Error::UndefinedScore("difference field has zero norm".into()));
    }
    let scores: Vec<f64> = trace.res_norms().iter().skip(1).map(|r| r / d_norm).collect();
    ContractionReport::from_scores(&scores)
}

fn fit_rho(scores: &[f64]) -> Option<f64> {
    if scores.len() < 2 || scores.iter().any(|&r| r <= SCORE_EPSILON) {
        return None;
    }
    let n = scores.len() as f64;
    let xs: Vec<f64> = (1..=scores.len()).map(|k| k as f64).collect();
    let ys: Vec<f64> = scores.iter().map(|r| r.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some((sxy / sxx).exp())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometricBound {
    /// `ρ^{K−1}·r1 + Σ_{j=1}^{K−1} ρ^{K−1−j}·δ_j`.
    pub bound: f64,
    /// `sup δ / (1 − ρ)`.
    pub asymptotic_cap: f64,
}

/// Perturbed-contraction bound on `r^K`; `deltas[j−1]` is `δ_j`.
pub fn geometric_bound(r1: f64, rho: f64, deltas: &[f64], k: usize) -> Result<GeometricBound> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!("contraction factor {rho} outside (0, 1)")));
    }
    if k < 2 {
        return Err(Error::Domain(format!("bound needs K >= 2, got {k}")));
    }
    if deltas.len() < k - 1 {
        return config_err(format!("need {} perturbations, got {}", k - 1, deltas.len()));
    }
    if deltas.iter().any(|d| *d < 0.0) || r1 < 0.0 {
        return Err(Error::Domain("r1 and perturbations must be nonnegative".into()));
    }
    let mut bound = rho.powi(k as i32 - 1) * r1;
    for j in 1..k {
        bound += rho.powi((k - 1 - j) as i32) * deltas[j - 1];
    }
    let sup = deltas.iter().copied().fold(0.0, f64::max);
    Ok(GeometricBound {
        bound,
        asymptotic_cap: sup / (1.0 - rho),
    })
}
