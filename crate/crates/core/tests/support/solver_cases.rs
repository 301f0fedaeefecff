//! Seeded solver configurations compared step by step against the
//! straight-line oracle.

#![allow(dead_code)]

use super::oracle::{self, Dims, Gru, StepInputs};
use unfold_core::icdm::{step_with_gate, GruCell, IcdmParams, SolverState};
use unfold_core::rng::Stream;
use unfold_core::FeatureField;

fn gru_view(cell: &GruCell) -> Gru<'_> {
    Gru {
        wz: cell.w_update.data(),
        bz: &cell.b_update,
        wr: cell.w_reset.data(),
        br: &cell.b_reset,
        wc: cell.w_cand.data(),
        bc: &cell.b_cand,
    }
}

/// Random sizes, step scalars, projections, gate mapper; every third case
/// bypasses the memory.
pub fn random_config(case: u64) -> (IcdmParams, FeatureField) {
    let mut rng = Stream::named(case, "oracle.config");
    let d = 2 + (rng.next_u64() % 3) as usize;
    let (h, w) = [(8, 8), (8, 12), (12, 8)][(rng.next_u64() % 3) as usize];
    let mut p = IcdmParams::seeded(d, 3, 100 + case).unwrap();
    for v in p.alpha.iter_mut().chain(p.beta.iter_mut()).chain(p.gamma.iter_mut()) {
        *v = rng.uniform_in(-0.2, 1.0);
    }
    rng.fill_uniform(p.psi_c.data_mut(), -1.0, 1.0);
    rng.fill_uniform(p.psi_n.data_mut(), -1.0, 1.0);
    for cell in [&mut p.mem_c, &mut p.mem_n] {
        rng.fill_uniform(&mut cell.b_reset, -0.5, 0.5);
        rng.fill_uniform(&mut cell.b_cand, -0.5, 0.5);
    }
    p.sve.patch_side = 4;
    p.sve.mapper.scale = rng.uniform_in(-2.0, 2.0);
    p.sve.mapper.bias = rng.uniform_in(-1.0, 1.0);
    p.memory_bypass = case % 3 == 0;
    let diff = FeatureField::from_fn(d, h, w, |_, _, _| rng.normal());
    (p, diff)
}

fn max_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest deviation between library and oracle over all steps of `case`,
/// across `C`, `N`, both memories and the gate.
pub fn max_step_error(case: u64) -> f64 {
    let (p, diff) = random_config(case);
    let (d, h, w) = diff.shape();
    let mut state = SolverState::initial(&diff);
    let mut worst = 0.0f64;
    for k in 0..p.steps() {
        let want = oracle::step(&StepInputs {
            dims: Dims { d, h, w },
            diff: diff.data(),
            c: state.c.data(),
            n: state.n.data(),
            h_c: state.h_c.data(),
            h_n: state.h_n.data(),
            phi_c: &p.phi_c.weights,
            phi_n: &p.phi_n.weights,
            psi_c: p.psi_c.data(),
            psi_n: p.psi_n.data(),
            alpha: p.alpha[k],
            beta: p.beta[k],
            gamma: p.gamma[k],
            mem: (!p.memory_bypass).then(|| (gru_view(&p.mem_c), gru_view(&p.mem_n))),
            reducer: p.sve.reducer.data(),
            reduced: p.sve.reducer.rows(),
            patch: p.sve.patch_side,
            eps: p.sve.epsilon,
            gate_scale: p.sve.mapper.scale,
            gate_bias: p.sve.mapper.bias,
        });
        let (next, gate) = step_with_gate(&state, &diff, &p, k).unwrap();
        worst = worst
            .max(max_err(next.c.data(), &want.c))
            .max(max_err(next.n.data(), &want.n))
            .max(max_err(next.h_c.data(), &want.h_c))
            .max(max_err(next.h_n.data(), &want.h_n))
            .max(max_err(gate.data(), &want.gate));
        state = next;
    }
    worst
}
