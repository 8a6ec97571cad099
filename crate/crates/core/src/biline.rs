//! Thick bi-line features and their composition into dense maps.
//!
//! A bi-line feature stores, per channel, a row embedding `[H × D]` and a
//! column embedding `[W × D]`. Composition produces the dense map
//! `F[c, i, j] = Σ_d row[c, i, d] · col[c, j, d]`, i.e. a rank-`D`
//! factorization per channel.
//!
//! Every composed element is accumulated from zero in ascending `d`, whether
//! it comes from [`compose`], [`compose_pixel`] or [`compose_subset`]. The
//! three routes are therefore bit-identical on overlapping elements, which is
//! what makes tiled and monolithic synthesis agree exactly.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense activation tensor `[C × H × W]`, channel-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap<T> {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> FeatureMap<T> {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![T::zero(); channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::shape(
                "feature map",
                channels * height * width,
                data.len(),
            ));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    #[inline]
    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn get(&self, c: usize, i: usize, j: usize) -> T {
        self.data[(c * self.height + i) * self.width + j]
    }

    #[inline]
    pub fn set(&mut self, c: usize, i: usize, j: usize, v: T) {
        self.data[(c * self.height + i) * self.width + j] = v;
    }

    /// Channel vector at pixel `(i, j)`.
    pub fn pixel(&self, i: usize, j: usize) -> Vec<T> {
        (0..self.channels).map(|c| self.get(c, i, j)).collect()
    }

    pub fn plane(&self, c: usize) -> &[T] {
        let n = self.pixels();
        &self.data[c * n..(c + 1) * n]
    }

    /// Sub-grid gathered by row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut out = Self::zeros(self.channels, rows.len(), cols.len());
        for c in 0..self.channels {
            for (a, &i) in rows.iter().enumerate() {
                for (b, &j) in cols.iter().enumerate() {
                    out.set(c, a, b, self.get(c, i, j));
                }
            }
        }
        out
    }

    pub fn cast<U: Scalar>(&self) -> FeatureMap<U> {
        FeatureMap {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|v| U::of(v.widen())).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.widen() - b.widen()).abs())
            .fold(0.0, f64::max)
    }
}

/// Per-channel row and column embeddings of a common thickness.
#[derive(Clone, Debug, PartialEq)]
pub struct BilineFeature<T> {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub thickness: usize,
    /// `[C × H × D]`
    pub row_half: Vec<T>,
    /// `[C × W × D]`
    pub col_half: Vec<T>,
}

impl<T: Scalar> BilineFeature<T> {
    pub fn new(
        channels: usize,
        height: usize,
        width: usize,
        thickness: usize,
        row_half: Vec<T>,
        col_half: Vec<T>,
    ) -> Result<Self> {
        if thickness == 0 {
            return Err(Error::InvalidArgument("bi-line thickness must be >= 1".into()));
        }
        if row_half.len() != channels * height * thickness {
            return Err(Error::shape(
                "bi-line row half",
                channels * height * thickness,
                row_half.len(),
            ));
        }
        if col_half.len() != channels * width * thickness {
            return Err(Error::shape(
                "bi-line column half",
                channels * width * thickness,
                col_half.len(),
            ));
        }
        if row_half.iter().chain(&col_half).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("bi-line entries".into()));
        }
        Ok(Self {
            channels,
            height,
            width,
            thickness,
            row_half,
            col_half,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize, thickness: usize) -> Self {
        Self {
            channels,
            height,
            width,
            thickness,
            row_half: vec![T::zero(); channels * height * thickness],
            col_half: vec![T::zero(); channels * width * thickness],
        }
    }

    #[inline]
    pub fn row(&self, c: usize, i: usize) -> &[T] {
        let d = self.thickness;
        let start = (c * self.height + i) * d;
        &self.row_half[start..start + d]
    }

    #[inline]
    pub fn col(&self, c: usize, j: usize) -> &[T] {
        let d = self.thickness;
        let start = (c * self.width + j) * d;
        &self.col_half[start..start + d]
    }

    /// Number of stored elements in both halves.
    pub fn len(&self) -> usize {
        self.row_half.len() + self.col_half.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The single `[C × H × 2D]` tensor with row and column embeddings
    /// concatenated along thickness; square features only.
    pub fn concatenated(&self) -> Result<Vec<T>> {
        if self.height != self.width {
            return Err(Error::shape(
                "concatenated bi-line view (requires H = W)",
                self.height,
                self.width,
            ));
        }
        let d = self.thickness;
        let mut out = Vec::with_capacity(self.len());
        for c in 0..self.channels {
            for i in 0..self.height {
                out.extend_from_slice(self.row(c, i));
                out.extend_from_slice(self.col(c, i));
            }
        }
        debug_assert_eq!(out.len(), self.channels * self.height * 2 * d);
        Ok(out)
    }

    /// Stacks `other` after `self` along the thickness axis.
    pub fn concat_thickness(&self, other: &Self) -> Result<Self> {
        if (self.channels, self.height, self.width) != (other.channels, other.height, other.width) {
            return Err(Error::shape(
                "thickness concatenation",
                format!("{}x{}x{}", self.channels, self.height, self.width),
                format!("{}x{}x{}", other.channels, other.height, other.width),
            ));
        }
        let d = self.thickness + other.thickness;
        let mut row_half = Vec::with_capacity(self.channels * self.height * d);
        for c in 0..self.channels {
            for i in 0..self.height {
                row_half.extend_from_slice(self.row(c, i));
                row_half.extend_from_slice(other.row(c, i));
            }
        }
        let mut col_half = Vec::with_capacity(self.channels * self.width * d);
        for c in 0..self.channels {
            for j in 0..self.width {
                col_half.extend_from_slice(self.col(c, j));
                col_half.extend_from_slice(other.col(c, j));
            }
        }
        Ok(Self {
            channels: self.channels,
            height: self.height,
            width: self.width,
            thickness: d,
            row_half,
            col_half,
        })
    }

    pub fn storage_ratio(&self) -> f64 {
        storage_ratio(self.thickness, self.height, self.width)
    }

    pub fn cast<U: Scalar>(&self) -> BilineFeature<U> {
        BilineFeature {
            channels: self.channels,
            height: self.height,
            width: self.width,
            thickness: self.thickness,
            row_half: self.row_half.iter().map(|v| U::of(v.widen())).collect(),
            col_half: self.col_half.iter().map(|v| U::of(v.widen())).collect(),
        }
    }
}

/// Column half re-laid as `[C × D × W]` so a composed row can be
/// accumulated one thickness slot at a time across all columns.
fn transposed_cols<T: Scalar>(b: &BilineFeature<T>, cols: &[usize]) -> Vec<T> {
    let (d, n) = (b.thickness, cols.len());
    let mut out = vec![T::zero(); b.channels * d * n];
    for c in 0..b.channels {
        for (jj, &j) in cols.iter().enumerate() {
            for (slot, &v) in b.col(c, j).iter().enumerate() {
                out[(c * d + slot) * n + jj] = v;
            }
        }
    }
    out
}

fn compose_rows<T: Scalar>(b: &BilineFeature<T>, rows: &[usize], cols: &[usize]) -> FeatureMap<T> {
    let (d, h, w) = (b.thickness, rows.len(), cols.len());
    let col_t = transposed_cols(b, cols);
    let mut out = FeatureMap::zeros(b.channels, h, w);
    if w == 0 {
        return out;
    }
    out.data
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(ci, out_row)| {
            let (c, a) = (ci / h, ci % h);
            let r = b.row(c, rows[a]);
            for (slot, &rv) in r.iter().enumerate() {
                let src = &col_t[(c * d + slot) * w..(c * d + slot + 1) * w];
                for (o, &cv) in out_row.iter_mut().zip(src) {
                    *o = *o + rv * cv;
                }
            }
        });
    out
}

/// Dense `[C × H × W]` map of the feature.
pub fn compose<T: Scalar>(b: &BilineFeature<T>) -> FeatureMap<T> {
    let rows: Vec<usize> = (0..b.height).collect();
    let cols: Vec<usize> = (0..b.width).collect();
    compose_rows(b, &rows, &cols)
}

/// Channel vector of the composed map at `(i, j)`.
pub fn compose_pixel<T: Scalar>(b: &BilineFeature<T>, i: usize, j: usize) -> Result<Vec<T>> {
    check_index(i, b.height)?;
    check_index(j, b.width)?;
    Ok((0..b.channels)
        .map(|c| {
            b.row(c, i)
                .iter()
                .zip(b.col(c, j))
                .fold(T::zero(), |acc, (&r, &s)| acc + r * s)
        })
        .collect())
}

/// Composed map restricted to a sub-grid; duplicate indices are allowed.
pub fn compose_subset<T: Scalar>(
    b: &BilineFeature<T>,
    row_idx: &[usize],
    col_idx: &[usize],
) -> Result<FeatureMap<T>> {
    for &i in row_idx {
        check_index(i, b.height)?;
    }
    for &j in col_idx {
        check_index(j, b.width)?;
    }
    Ok(compose_rows(b, row_idx, col_idx))
}

/// Element count of both embeddings relative to the dense map:
/// `D·(H + W) / (H·W)`.
///
/// Counting one half only gives `D / W` for a square map, half of this
/// value: 1.5625% rather than 3.125% at 512 × 512 with `D = 8`.
pub fn storage_ratio(thickness: usize, height: usize, width: usize) -> f64 {
    (thickness * (height + width)) as f64 / (height * width) as f64
}

fn check_index(index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { index, len })
    }
}
