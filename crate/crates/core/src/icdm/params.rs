use crate::error::{config_err, Result};
use crate::field::Matrix;
use crate::rng::Stream;
use crate::sve::{SveParams, DEFAULT_REDUCED_CHANNELS};

use super::conv::Conv3x3;
use super::spmu::GruCell;

pub const DEFAULT_STEPS: usize = 3;
pub const DEFAULT_STEP_SCALAR: f64 = 0.5;

/// Scale of the seeded coupled-update kernels relative to `1/√fan_in`.
pub const PHI_INIT_SCALE: f64 = 0.5;
/// Scale of the seeded memory gate weights relative to `1/√(2d)`.
pub const MEMORY_INIT_SCALE: f64 = 0.2;
/// Initial update-gate bias of the memory cells.
pub const MEMORY_UPDATE_BIAS: f64 = 2.0;

/// Everything the unrolled solver learns.
#[derive(Clone, Debug, PartialEq)]
pub struct IcdmParams {
    pub channels: usize,
    /// Base-update step sizes for `C`, one per step.
    pub alpha: Vec<f64>,
    /// Base-update step sizes for `N`, one per step.
    pub beta: Vec<f64>,
    /// Residual-injection strengths, one per step.
    pub gamma: Vec<f64>,
    /// `[C, N, R] → ΔC`.
    pub phi_c: Conv3x3,
    /// `[C, N, R] → ΔN`.
    pub phi_n: Conv3x3,
    /// `1×1` residual projections.
    pub psi_c: Matrix,
    pub psi_n: Matrix,
    pub mem_c: GruCell,
    pub mem_n: GruCell,
    pub sve: SveParams,
    /// Skip the memory cells: `h = provisional state`.
    pub memory_bypass: bool,
}

impl IcdmParams {
    /// Default initialisation, reproducible by seed.
    pub fn seeded(channels: usize, steps: usize, seed: u64) -> Result<Self> {
        if channels == 0 {
            return config_err("channel count must be positive");
        }
        let d = channels;
        let mut phi_rng = Stream::named(seed, "icdm.phi");
        let mut mem_rng = Stream::named(seed, "icdm.memory");
        Ok(Self {
            channels: d,
            alpha: vec![DEFAULT_STEP_SCALAR; steps],
            beta: vec![DEFAULT_STEP_SCALAR; steps],
            gamma: vec![DEFAULT_STEP_SCALAR; steps],
            phi_c: Conv3x3::seeded(d, 3 * d, PHI_INIT_SCALE, &mut phi_rng),
            phi_n: Conv3x3::seeded(d, 3 * d, PHI_INIT_SCALE, &mut phi_rng),
            psi_c: Matrix::identity(d),
            psi_n: Matrix::identity(d),
            mem_c: GruCell::seeded(d, MEMORY_UPDATE_BIAS, MEMORY_INIT_SCALE, &mut mem_rng),
            mem_n: GruCell::seeded(d, MEMORY_UPDATE_BIAS, MEMORY_INIT_SCALE, &mut mem_rng),
            sve: SveParams::seeded(d, DEFAULT_REDUCED_CHANNELS.min(d), seed)?,
            memory_bypass: false,
        })
    }

    /// Zero operators, zero step scalars, memory bypassed: every step is
    /// the identity on `(C, N)`.
    pub fn null(channels: usize, steps: usize) -> Self {
        let d = channels;
        Self {
            channels: d,
            alpha: vec![0.0; steps],
            beta: vec![0.0; steps],
            gamma: vec![0.0; steps],
            phi_c: Conv3x3::zeros(d, 3 * d),
            phi_n: Conv3x3::zeros(d, 3 * d),
            psi_c: Matrix::zeros(d, d),
            psi_n: Matrix::zeros(d, d),
            mem_c: GruCell::zeros(d),
            mem_n: GruCell::zeros(d),
            sve: SveParams::identity(d),
            memory_bypass: true,
        }
    }

    pub fn steps(&self) -> usize {
        self.alpha.len()
    }

    /// Resizes the per-step scalars to `steps`, padding with the last
    /// value (or the default when empty).
    pub fn with_steps(mut self, steps: usize) -> Self {
        for v in [&mut self.alpha, &mut self.beta, &mut self.gamma] {
            let fill = v.last().copied().unwrap_or(DEFAULT_STEP_SCALAR);
            v.resize(steps, fill);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.channels;
        let k = self.alpha.len();
        if self.beta.len() != k || self.gamma.len() != k {
            return config_err("alpha, beta, gamma must have one entry per step");
        }
        for phi in [&self.phi_c, &self.phi_n] {
            if phi.out_channels != d || phi.in_channels != 3 * d || phi.weights.len() != 27 * d * d {
                return config_err("coupled-update kernels must map 3d -> d channels");
            }
        }
        for psi in [&self.psi_c, &self.psi_n] {
            if psi.rows() != d || psi.cols() != d {
                return config_err("residual projections must be d x d");
            }
        }
        for cell in [&self.mem_c, &self.mem_n] {
            if cell.channels() != d
                || cell.w_update.rows() != d
                || cell.w_update.cols() != 2 * d
                || cell.w_reset.cols() != 2 * d
                || cell.w_cand.cols() != 2 * d
            {
                return config_err("memory cells must have d x 2d weights");
            }
        }
        self.sve.validate(d)?;
        if !self.all_values().all(f64::is_finite) {
            return config_err("solver parameters contain non-finite values");
        }
        Ok(())
    }

    fn all_values(&self) -> impl Iterator<Item = f64> + '_ {
        let cells = [&self.mem_c, &self.mem_n];
        self.alpha
            .iter()
            .chain(&self.beta)
            .chain(&self.gamma)
            .chain(&self.phi_c.weights)
            .chain(&self.phi_n.weights)
            .chain(self.psi_c.data())
            .chain(self.psi_n.data())
            .chain(cells.into_iter().flat_map(|c| {
                c.w_update
                    .data()
                    .iter()
                    .chain(&c.b_update)
                    .chain(c.w_reset.data())
                    .chain(&c.b_reset)
                    .chain(c.w_cand.data())
                    .chain(&c.b_cand)
            }))
            .chain(self.sve.reducer.data())
            .chain([&self.sve.mapper.scale, &self.sve.mapper.bias])
            .copied()
    }
}

/// Linear `d → 1` segmentation head.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadParams {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl HeadParams {
    /// Equal weights `1/d`, zero bias.
    pub fn new(channels: usize) -> Self {
        Self {
            weights: vec![1.0 / channels as f64; channels],
            bias: 0.0,
        }
    }
}
