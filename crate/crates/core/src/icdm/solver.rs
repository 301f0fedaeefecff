use crate::error::{config_err, Result};
use crate::field::{frobenius_norm, FeatureField, PlaneField};
use crate::objective::{nuisance_mean, separation};
use crate::sve::{patch_entropies, patch_groups, sve_gate, PatchGroups};

use super::params::IcdmParams;
use super::spmu::GruCell;

/// Iterate `(C^k, N^k)` plus the memory states feeding the next step.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub c: FeatureField,
    pub n: FeatureField,
    pub h_c: FeatureField,
    pub h_n: FeatureField,
    pub k: usize,
}

impl SolverState {
    /// `C⁰ = 0`, `N⁰ = D`, zero memories.
    pub fn initial(d_field: &FeatureField) -> Self {
        let (d, h, w) = d_field.shape();
        Self {
            c: FeatureField::zeros(d, h, w),
            n: d_field.clone(),
            h_c: FeatureField::zeros(d, h, w),
            h_n: FeatureField::zeros(d, h, w),
            k: 0,
        }
    }
}

/// `D − (C + N)`.
pub fn residual(state: &SolverState, d_field: &FeatureField) -> Result<FeatureField> {
    d_field.check_same_shape(&state.c, "residual")?;
    d_field.check_same_shape(&state.n, "residual")?;
    let mut r = d_field.clone();
    for ((v, c), n) in r.data_mut().iter_mut().zip(state.c.data()).zip(state.n.data()) {
        *v -= c + n;
    }
    Ok(r)
}

/// `(Φ_C([C, N, R]), Φ_N([C, N, R]))`.
pub fn coupled_updates(
    state: &SolverState,
    r: &FeatureField,
    params: &IcdmParams,
) -> (FeatureField, FeatureField) {
    let inputs = [&state.c, &state.n, r];
    (params.phi_c.apply(&inputs), params.phi_n.apply(&inputs))
}

/// One memory update; with `bypass` the provisional state passes through.
pub fn spmu_update(
    provisional: &FeatureField,
    h_prev: &FeatureField,
    cell: &GruCell,
    bypass: bool,
) -> FeatureField {
    if bypass {
        provisional.clone()
    } else {
        cell.update(provisional, h_prev)
    }
}

/// One refinement step `k` and the gate it applied.
pub fn step_with_gate(
    state: &SolverState,
    d_field: &FeatureField,
    params: &IcdmParams,
    k: usize,
) -> Result<(SolverState, PlaneField)> {
    if k >= params.steps() {
        return config_err(format!("step {k} out of range for K = {}", params.steps()));
    }
    let r = residual(state, d_field)?;
    let (delta_c, delta_n) = coupled_updates(state, &r, params);

    let (alpha, beta, gamma) = (params.alpha[k], params.beta[k], params.gamma[k]);
    let prov_c = state.c.zip_map(&delta_c, |c, u| c + alpha * u);
    let prov_n = state.n.zip_map(&delta_n, |n, u| n + beta * u);
    let inject_c = params.psi_c.apply_channels(&r).scale(gamma);
    let inject_n = params.psi_n.apply_channels(&r).scale(gamma);

    let h_c = spmu_update(&prov_c, &state.h_c, &params.mem_c, params.memory_bypass);
    let h_n = spmu_update(&prov_n, &state.h_n, &params.mem_n, params.memory_bypass);

    let gate = sve_gate(&r, &params.sve)?;
    let c = h_c.add(&inject_c.mul_plane(&gate));
    let n = h_n.add(&inject_n.mul_plane(&gate));
    Ok((
        SolverState {
            c,
            n,
            h_c,
            h_n,
            k: state.k + 1,
        },
        gate,
    ))
}

/// One refinement step `k`: residual, coupled updates, base and injection
/// terms, provisional states, memory, gated final update.
pub fn step(
    state: &SolverState,
    d_field: &FeatureField,
    params: &IcdmParams,
    k: usize,
) -> Result<SolverState> {
    step_with_gate(state, d_field, params, k).map(|(s, _)| s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl GateStats {
    fn of(g: &PlaneField) -> Self {
        Self {
            min: g.min(),
            mean: g.mean(),
            max: g.max(),
        }
    }
}

/// Diagnostics for state `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// `‖D − (C^k + N^k)‖_F`.
    pub res_norm: f64,
    /// Mean absolute value of `N^k`.
    pub mu_n: f64,
    /// Cosine separation of `C^k` and `N^k`.
    pub separation: f64,
    /// Mean patch SVE of `C^k` over changed / unchanged patches; absent when
    /// no labels were supplied or the group is empty.
    pub sve_changed: Option<f64>,
    pub sve_unchanged: Option<f64>,
    /// Gate that produced state `k` (absent for the initial state).
    pub gate: Option<GateStats>,
}

impl StepRecord {
    /// Changed minus unchanged mean SVE, when both groups exist.
    pub fn sve_gap(&self) -> Option<f64> {
        Some(self.sve_changed? - self.sve_unchanged?)
    }
}

/// Per-step records for `k = 0..=K` plus the iterates themselves.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverTrace {
    pub records: Vec<StepRecord>,
    pub states: Vec<(FeatureField, FeatureField)>,
}

impl SolverTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn res_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.res_norm).collect()
    }

    pub fn to_csv(&self) -> String {
        use crate::report::{fmt_g6, fmt_opt};
        let mut out = String::from(
            "step,res_norm,mu_n,separation,sve_changed,sve_unchanged,gate_min,gate_mean,gate_max\n",
        );
        for r in &self.records {
            let g = r.gate;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.step,
                fmt_g6(r.res_norm),
                fmt_g6(r.mu_n),
                fmt_g6(r.separation),
                fmt_opt(r.sve_changed),
                fmt_opt(r.sve_unchanged),
                fmt_opt(g.map(|g| g.min)),
                fmt_opt(g.map(|g| g.mean)),
                fmt_opt(g.map(|g| g.max)),
            ));
        }
        out
    }
}

/// Final iterate and trace of a full run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub c: FeatureField,
    pub n: FeatureField,
    pub trace: SolverTrace,
}

/// Applies all `K` steps from the canonical initialisation.
///
/// When `labels` is given, patches are grouped by majority label and the
/// trace carries the mean SVE of `C^k` per group.
pub fn run(
    d_field: &FeatureField,
    params: &IcdmParams,
    labels: Option<&PlaneField>,
) -> Result<RunOutput> {
    params.validate()?;
    if d_field.channels() != params.channels {
        return config_err(format!(
            "difference field has {} channels, solver expects {}",
            d_field.channels(),
            params.channels
        ));
    }
    let groups = labels
        .map(|y| patch_groups(y, params.sve.patch_side))
        .transpose()?;

    let mut state = SolverState::initial(d_field);
    let mut records = Vec::with_capacity(params.steps() + 1);
    let mut states = Vec::with_capacity(params.steps() + 1);
    records.push(record(&state, d_field, None, groups.as_ref(), params)?);
    states.push((state.c.clone(), state.n.clone()));
    for k in 0..params.steps() {
        let (next, gate) = step_with_gate(&state, d_field, params, k)?;
        state = next;
        records.push(record(&state, d_field, Some(&gate), groups.as_ref(), params)?);
        states.push((state.c.clone(), state.n.clone()));
    }
    Ok(RunOutput {
        c: state.c,
        n: state.n,
        trace: SolverTrace { records, states },
    })
}

fn record(
    state: &SolverState,
    d_field: &FeatureField,
    gate: Option<&PlaneField>,
    groups: Option<&PatchGroups>,
    params: &IcdmParams,
) -> Result<StepRecord> {
    let r = residual(state, d_field)?;
    let (sve_changed, sve_unchanged) = match groups {
        Some(g) => {
            let s = patch_entropies(&state.c, params.sve.patch_side, params.sve.epsilon)?;
            (g.mean_changed(&s), g.mean_unchanged(&s))
        }
        None => (None, None),
    };
    Ok(StepRecord {
        step: state.k,
        res_norm: frobenius_norm(&r),
        mu_n: nuisance_mean(&state.n),
        separation: separation(&state.c, &state.n, params.sve.epsilon),
        sve_changed,
        sve_unchanged,
        gate: gate.map(GateStats::of),
    })
}
