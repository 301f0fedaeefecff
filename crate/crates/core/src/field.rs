//! Dense real fields, patch partitioning and small matrices.
//!
//! Layouts are channel-major, row-major: entry `(c, y, x)` of a `d × H × W`
//! field lives at `c·H·W + y·W + x`.

use crate::error::{config_err, Error, Result};

/// A `channels × height × width` real field.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureField {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl FeatureField {
    /// Builds a field from raw data, checking shape and finiteness.
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return config_err(format!(
                "field dimensions must be positive, got {channels}x{height}x{width}"
            ));
        }
        if data.len() != channels * height * width {
            return config_err(format!(
                "field data length {} does not match {channels}x{height}x{width}",
                data.len()
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return config_err("field contains non-finite values");
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        assert!(channels > 0 && height > 0 && width > 0, "empty field");
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f64) -> Self {
        let mut f = Self::zeros(channels, height, width);
        f.data.fill(value);
        f
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut out = Self::zeros(channels, height, width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    out.data[(c * height + y) * width + x] = f(c, y, x);
                }
            }
        }
        out
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    /// `(channels, height, width)`.
    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    #[inline]
    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    /// Contiguous slice holding channel `c`.
    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn same_shape(&self, other: &FeatureField) -> bool {
        self.shape() == other.shape()
    }

    pub(crate) fn check_same_shape(&self, other: &FeatureField, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            config_err(format!(
                "{what}: shape mismatch {:?} vs {:?}",
                self.shape(),
                other.shape()
            ))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        self.with_data(self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &FeatureField, f: impl Fn(f64, f64) -> f64) -> Self {
        assert!(self.same_shape(other), "zip_map shape mismatch");
        self.with_data(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn add(&self, other: &FeatureField) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &FeatureField) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn dot(&self, other: &FeatureField) -> f64 {
        assert!(self.same_shape(other), "dot shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// Multiplies every channel by the same plane.
    pub fn mul_plane(&self, plane: &PlaneField) -> Self {
        assert_eq!(
            (self.height, self.width),
            (plane.height(), plane.width()),
            "plane broadcast shape mismatch"
        );
        let n = self.plane_len();
        let mut out = self.clone();
        for c in 0..self.channels {
            for (v, g) in out.data[c * n..(c + 1) * n].iter_mut().zip(plane.data()) {
                *v *= g;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn with_data(&self, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data,
        }
    }
}

/// A `height × width` real plane (entropy maps, gates, probabilities, labels).
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneField {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl PlaneField {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return config_err(format!(
                "plane dimensions must be positive, got {height}x{width}"
            ));
        }
        if data.len() != height * width {
            return config_err(format!(
                "plane data length {} does not match {height}x{width}",
                data.len()
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return config_err("plane contains non-finite values");
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0, "empty plane");
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut out = Self::zeros(height, width);
        for y in 0..height {
            for x in 0..width {
                out.data[y * width + x] = f(y, x);
            }
        }
        out
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// Non-overlapping square patch grid over an `H × W` domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatchLayout {
    patch_side: usize,
    rows: usize,
    cols: usize,
}

impl PatchLayout {
    /// Fails unless `patch_side` divides both spatial dimensions.
    pub fn new(height: usize, width: usize, patch_side: usize) -> Result<Self> {
        if patch_side == 0 {
            return config_err("patch side must be positive");
        }
        if height % patch_side != 0 || width % patch_side != 0 {
            return config_err(format!(
                "patch side {patch_side} does not divide field {height}x{width}"
            ));
        }
        Ok(Self {
            patch_side,
            rows: height / patch_side,
            cols: width / patch_side,
        })
    }

    pub fn for_field(field: &FeatureField, patch_side: usize) -> Result<Self> {
        Self::new(field.height(), field.width(), patch_side)
    }

    #[inline]
    pub fn patch_side(&self) -> usize {
        self.patch_side
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Top-left pixel `(y, x)` of patch `j` (patches enumerated row-major).
    #[inline]
    pub fn origin(&self, j: usize) -> (usize, usize) {
        ((j / self.cols) * self.patch_side, (j % self.cols) * self.patch_side)
    }

    /// Patch index containing pixel `(y, x)`.
    #[inline]
    pub fn patch_of(&self, y: usize, x: usize) -> usize {
        (y / self.patch_side) * self.cols + x / self.patch_side
    }
}

/// Small dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return config_err(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Applies this `out × in` matrix to every pixel's channel vector.
    pub fn apply_channels(&self, x: &FeatureField) -> FeatureField {
        assert_eq!(self.cols, x.channels(), "channel map input mismatch");
        let n = x.plane_len();
        let mut out = FeatureField::zeros(self.rows, x.height(), x.width());
        for o in 0..self.rows {
            let dst = &mut out.data_mut()[o * n..(o + 1) * n];
            for i in 0..self.cols {
                let w = self.get(o, i);
                if w == 0.0 {
                    continue;
                }
                for (d, s) in dst.iter_mut().zip(x.channel(i)) {
                    *d += w * s;
                }
            }
        }
        out
    }
}

/// Square root of the sum of squared entries.
pub fn frobenius_norm(x: &FeatureField) -> f64 {
    x.data().iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Reshapes patch `patch_index` of `x` into a `d × p²` matrix.
///
/// Columns enumerate the patch pixels row-major: column `a·p + b` holds the
/// pixel at offset `(a, b)` from the patch origin.
pub fn patch_matrix(x: &FeatureField, layout: &PatchLayout, patch_index: usize) -> Result<Matrix> {
    if patch_index >= layout.len() {
        return Err(Error::Range {
            index: patch_index,
            limit: layout.len(),
        });
    }
    if x.height() != layout.rows() * layout.patch_side()
        || x.width() != layout.cols() * layout.patch_side()
    {
        return config_err("patch layout does not match field dimensions");
    }
    let p = layout.patch_side();
    let (y0, x0) = layout.origin(patch_index);
    let mut m = Matrix::zeros(x.channels(), p * p);
    for c in 0..x.channels() {
        let row = &mut m.data_mut()[c * p * p..(c + 1) * p * p];
        for a in 0..p {
            let start = (c * x.height() + y0 + a) * x.width() + x0;
            row[a * p..(a + 1) * p].copy_from_slice(&x.data()[start..start + p]);
        }
    }
    Ok(m)
}
