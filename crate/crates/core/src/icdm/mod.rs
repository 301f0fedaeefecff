//! The unrolled change/nuisance decomposition solver.
//!
//! Starting from `C⁰ = 0, N⁰ = D`, each step computes the consistency
//! residual `R = D − (C + N)`, predicts coupled directions from `[C, N, R]`,
//! forms provisional states from the scaled base updates, passes them
//! through a shared recurrent memory and finally adds the residual
//! injection `γ·Ψ(R)` modulated by a patch-entropy gate.

mod conv;
mod head;
mod params;
mod solver;
mod spmu;

pub use conv::{reflect, Conv3x3};
pub use head::{predict_head, Prediction, DEFAULT_THRESHOLD};
pub use params::{
    HeadParams, IcdmParams, DEFAULT_STEPS, DEFAULT_STEP_SCALAR, MEMORY_INIT_SCALE,
    MEMORY_UPDATE_BIAS, PHI_INIT_SCALE,
};
pub use solver::{
    coupled_updates, residual, run, spmu_update, step, step_with_gate, GateStats, RunOutput,
    SolverState, SolverTrace, StepRecord,
};
pub use spmu::GruCell;
