//! Normalized image-plane coordinates, geometric transforms, and the learned
//! Fourier input encoding.
//!
//! Grids use the pixel-center convention `e_i = -1 + (2i + 1) / n`, so an
//! `n`-pixel axis spans `(-1, 1)` symmetrically. A [`Transform`] maps each
//! grid value through `e' = scale * e + shift` (scale first, then shift):
//! `scale > 1` zooms out, `scale < 1` zooms in.

use std::f64::consts::PI;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    Row,
    Column,
}

/// Coordinates along one image axis.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordVector {
    pub values: Vec<f64>,
    pub axis: Axis,
}

impl CoordVector {
    pub fn new(values: Vec<f64>, axis: Axis) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("coordinate value {bad}")));
        }
        Ok(Self { values, axis })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Restriction to the given indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let values = indices
            .iter()
            .map(|&i| {
                self.values.get(i).copied().ok_or(Error::IndexOutOfRange {
                    index: i,
                    len: self.values.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            values,
            axis: self.axis,
        })
    }

    /// Contiguous sub-range `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            values: self.values[start..end].to_vec(),
            axis: self.axis,
        }
    }
}

/// Shift and zoom applied to the default grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transform {
    pub shift_row: f64,
    pub shift_col: f64,
    pub scale: f64,
}

impl Default for Transform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Transform {
    pub const IDENTITY: Transform = Transform {
        shift_row: 0.0,
        shift_col: 0.0,
        scale: 1.0,
    };

    pub fn new(shift_row: f64, shift_col: f64, scale: f64) -> Result<Self> {
        let t = Self {
            shift_row,
            shift_col,
            scale,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "transform scale must be finite and > 0, got {}",
                self.scale
            )));
        }
        if !self.shift_row.is_finite() || !self.shift_col.is_finite() {
            return Err(Error::InvalidArgument("transform shift must be finite".into()));
        }
        Ok(())
    }

    pub fn shift(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Row => self.shift_row,
            Axis::Column => self.shift_col,
        }
    }

    #[inline]
    pub fn apply(&self, e: f64, axis: Axis) -> f64 {
        self.scale * e + self.shift(axis)
    }

    #[inline]
    pub fn invert(&self, e: f64, axis: Axis) -> f64 {
        (e - self.shift(axis)) / self.scale
    }
}

/// Pixel-center grid of `len` samples along `axis`, mapped through `transform`.
pub fn grid_coords(len: usize, transform: &Transform, axis: Axis) -> Result<CoordVector> {
    if len == 0 {
        return Err(Error::InvalidArgument("grid resolution must be >= 1".into()));
    }
    transform.validate()?;
    let n = len as f64;
    let values = (0..len)
        .map(|i| transform.apply(-1.0 + (2 * i + 1) as f64 / n, axis))
        .collect();
    Ok(CoordVector { values, axis })
}

/// One axis' learned frequencies and phases, each `[channels × thickness]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSet<T> {
    pub channels: usize,
    pub thickness: usize,
    pub frequencies: Vec<T>,
    pub phases: Vec<T>,
}

impl<T: Scalar> FourierSet<T> {
    fn validate(&self, channels: usize, thickness: usize) -> Result<()> {
        let n = channels * thickness;
        if self.channels != channels || self.thickness != thickness {
            return Err(Error::shape(
                "fourier set",
                format!("{channels}x{thickness}"),
                format!("{}x{}", self.channels, self.thickness),
            ));
        }
        if self.frequencies.len() != n || self.phases.len() != n {
            return Err(Error::shape(
                "fourier set arrays",
                n,
                format!("{}/{}", self.frequencies.len(), self.phases.len()),
            ));
        }
        if self
            .frequencies
            .iter()
            .chain(&self.phases)
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("fourier parameters".into()));
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> FourierSet<U> {
        FourierSet {
            channels: self.channels,
            thickness: self.thickness,
            frequencies: self.frequencies.iter().map(|v| U::of(v.widen())).collect(),
            phases: self.phases.iter().map(|v| U::of(v.widen())).collect(),
        }
    }

    /// `sin(2π(b[k,d]·e + φ[k,d]))` for a single coordinate.
    #[inline]
    pub fn encode_at(&self, k: usize, d: usize, e: T) -> T {
        let idx = k * self.thickness + d;
        let two_pi = T::of(2.0 * PI);
        (two_pi * (self.frequencies[idx] * e + self.phases[idx])).sin()
    }
}

/// Independent row and column Fourier parameter sets.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierParams<T> {
    pub row: FourierSet<T>,
    pub col: FourierSet<T>,
    pub sigma: f64,
}

impl<T: Scalar> FourierParams<T> {
    /// Frequencies `~ N(0, sigma²)`, phases `~ U[0, 1)`, row set drawn first.
    pub fn sample(channels: usize, thickness: usize, sigma: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut draw = || {
            let n = channels * thickness;
            let frequencies = (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    T::of(sigma * z)
                })
                .collect();
            let unif = Uniform::new(0.0f64, 1.0).expect("valid range");
            let phases = (0..n).map(|_| T::of(unif.sample(rng))).collect();
            FourierSet {
                channels,
                thickness,
                frequencies,
                phases,
            }
        };
        let row = draw();
        let col = draw();
        Self { row, col, sigma }
    }

    pub fn validate(&self, channels: usize, thickness: usize) -> Result<()> {
        self.row.validate(channels, thickness)?;
        self.col.validate(channels, thickness)
    }

    pub fn set(&self, axis: Axis) -> &FourierSet<T> {
        match axis {
            Axis::Row => &self.row,
            Axis::Column => &self.col,
        }
    }

    pub fn channels(&self) -> usize {
        self.row.channels
    }

    pub fn thickness(&self) -> usize {
        self.row.thickness
    }

    pub fn cast<U: Scalar>(&self) -> FourierParams<U> {
        FourierParams {
            row: self.row.cast(),
            col: self.col.cast(),
            sigma: self.sigma,
        }
    }
}

/// Encodes one coordinate axis into a `[C_f × len × D]` half-feature using
/// the parameter set that matches `coords.axis`.
pub fn fourier_encode<T: Scalar>(coords: &CoordVector, params: &FourierParams<T>) -> Vec<T> {
    let set = params.set(coords.axis);
    let (c, d) = (set.channels, set.thickness);
    let n = coords.len();
    let mut out = vec![T::zero(); c * n * d];
    for k in 0..c {
        let plane = &mut out[k * n * d..(k + 1) * n * d];
        for (i, &e) in coords.values.iter().enumerate() {
            let e = T::of(e);
            for slot in 0..d {
                plane[i * d + slot] = set.encode_at(k, slot, e);
            }
        }
    }
    out
}

/// Per-pixel normalized coordinates `{(r_ij, c_ij)}`, row-major `H × W`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordField {
    pub height: usize,
    pub width: usize,
    pub rows: Vec<f64>,
    pub cols: Vec<f64>,
}

impl CoordField {
    pub fn new(height: usize, width: usize, rows: Vec<f64>, cols: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidArgument("coordinate field must be at least 1x1".into()));
        }
        let n = height * width;
        if rows.len() != n || cols.len() != n {
            return Err(Error::shape(
                "coordinate field",
                n,
                format!("{}/{}", rows.len(), cols.len()),
            ));
        }
        if rows.iter().chain(&cols).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("coordinate field".into()));
        }
        Ok(Self {
            height,
            width,
            rows,
            cols,
        })
    }

    /// Default pixel-center grid, optionally transformed.
    pub fn grid(height: usize, width: usize, transform: &Transform) -> Result<Self> {
        let r = grid_coords(height, transform, Axis::Row)?;
        let c = grid_coords(width, transform, Axis::Column)?;
        Ok(Self::outer(&r, &c))
    }

    /// Broadcast of a row vector and a column vector to a full field.
    pub fn outer(rows: &CoordVector, cols: &CoordVector) -> Self {
        let (h, w) = (rows.len(), cols.len());
        let mut r = Vec::with_capacity(h * w);
        let mut c = Vec::with_capacity(h * w);
        for &rv in &rows.values {
            r.extend(std::iter::repeat_n(rv, w));
            c.extend_from_slice(&cols.values);
        }
        Self {
            height: h,
            width: w,
            rows: r,
            cols: c,
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> (f64, f64) {
        let k = i * self.width + j;
        (self.rows[k], self.cols[k])
    }

    /// Row `i` as a pair of coordinate vectors `(e^r, e^c)` of length `W`.
    pub fn row_batch(&self, i: usize) -> (CoordVector, CoordVector) {
        let span = i * self.width..(i + 1) * self.width;
        (
            CoordVector {
                values: self.rows[span.clone()].to_vec(),
                axis: Axis::Row,
            },
            CoordVector {
                values: self.cols[span].to_vec(),
                axis: Axis::Column,
            },
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FieldKind {
    /// Rotation of the sampling grid about the image center, in radians.
    Rotation(f64),
    /// Row and column displacements added to the default grid, each `H × W`.
    Elastic { d_row: Vec<f64>, d_col: Vec<f64> },
    /// A `CFLD0001` coordinate-field file loaded verbatim.
    Custom(PathBuf),
}

/// Builds a warped coordinate field.
///
/// Rotation treats the column coordinate as `x` and the row coordinate as `y`
/// and applies the standard rotation matrix to every default grid point, so a
/// positive angle turns the sampling grid counter-clockwise in `(x, y)`.
pub fn make_coord_field(kind: &FieldKind, height: usize, width: usize) -> Result<CoordField> {
    match kind {
        FieldKind::Rotation(angle) => {
            if !angle.is_finite() {
                return Err(Error::InvalidArgument("rotation angle must be finite".into()));
            }
            let base = CoordField::grid(height, width, &Transform::IDENTITY)?;
            let (sin, cos) = angle.sin_cos();
            let (rows, cols) = base
                .rows
                .iter()
                .zip(&base.cols)
                .map(|(&y, &x)| (x * sin + y * cos, x * cos - y * sin))
                .unzip();
            CoordField::new(height, width, rows, cols)
        }
        FieldKind::Elastic { d_row, d_col } => {
            let n = height * width;
            if d_row.len() != n || d_col.len() != n {
                return Err(Error::shape(
                    "elastic displacement",
                    n,
                    format!("{}/{}", d_row.len(), d_col.len()),
                ));
            }
            let base = CoordField::grid(height, width, &Transform::IDENTITY)?;
            let rows = base.rows.iter().zip(d_row).map(|(a, b)| a + b).collect();
            let cols = base.cols.iter().zip(d_col).map(|(a, b)| a + b).collect();
            CoordField::new(height, width, rows, cols)
        }
        FieldKind::Custom(path) => {
            let field = crate::persistence::read_coord_field(path)?;
            if field.height != height || field.width != width {
                return Err(Error::shape(
                    "custom coordinate field",
                    format!("{height}x{width}"),
                    format!("{}x{}", field.height, field.width),
                ));
            }
            Ok(field)
        }
    }
}

/// Smooth random displacement pair for elastic warps: a sum of a few
/// random low-frequency sinusoids per axis with peak magnitude `amplitude`.
pub fn smooth_displacement(
    height: usize,
    width: usize,
    amplitude: f64,
    seed: u64,
) -> (Vec<f64>, Vec<f64>) {
    const WAVES: usize = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unif = Uniform::new(0.0f64, 1.0).expect("valid range");
    let base = CoordField::grid(height.max(1), width.max(1), &Transform::IDENTITY)
        .expect("non-empty grid");
    let field = |rng: &mut ChaCha8Rng| {
        let waves: Vec<[f64; 3]> = (0..WAVES)
            .map(|_| {
                [
                    (unif.sample(rng) - 0.5) * 2.0 * PI,
                    (unif.sample(rng) - 0.5) * 2.0 * PI,
                    unif.sample(rng) * 2.0 * PI,
                ]
            })
            .collect();
        base.rows
            .iter()
            .zip(&base.cols)
            .map(|(&y, &x)| {
                let s: f64 = waves.iter().map(|[fy, fx, ph]| (fy * y + fx * x + ph).sin()).sum();
                amplitude * s / WAVES as f64
            })
            .collect::<Vec<_>>()
    };
    let d_row = field(&mut rng);
    let d_col = field(&mut rng);
    (d_row, d_col)
}
