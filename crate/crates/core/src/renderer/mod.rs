//! Rendering paths: monolithic, tiled, warped by diagonal sampling, and a
//! per-pixel reference.
//!
//! All paths share the style computed once per latent, so a pixel's bytes
//! depend only on its coordinates.

mod image_io;

pub use image_io::{
    decode_png, decode_ppm, encode_png, encode_ppm, quantize, read_image, read_image8, write_image, Image8,
    ImageFormat,
};

use crate::bench::{check_budget, DEFAULT_BUDGET};
use crate::biline::FeatureMap;
use crate::coords::{grid_coords, Axis, CoordField, CoordVector, Transform};
use crate::error::{Error, Result};
use crate::generator::{sample_latent, Generator, Mode, Styled};

#[derive(Clone, Debug, PartialEq)]
pub enum Latent {
    Seed(u64),
    Explicit(Vec<f64>),
}

impl Latent {
    pub fn resolve(&self, dim: usize) -> Result<Vec<f32>> {
        let z = match self {
            Latent::Seed(s) => sample_latent(dim, *s),
            Latent::Explicit(z) => z.clone(),
        };
        if z.len() != dim {
            return Err(Error::shape("latent", dim, z.len()));
        }
        Ok(z.into_iter().map(|v| v as f32).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderRequest {
    pub latent: Latent,
    pub height: usize,
    pub width: usize,
    pub transform: Transform,
    pub tile_size: Option<usize>,
    /// Byte budget for the activations of a single synthesis call.
    pub memory_budget: u64,
}

impl RenderRequest {
    pub fn new(latent: Latent, height: usize, width: usize) -> Self {
        Self {
            latent,
            height,
            width,
            transform: Transform::IDENTITY,
            tile_size: None,
            memory_budget: DEFAULT_BUDGET,
        }
    }

    pub fn with_transform(mut self, transform: Transform) -> Self {
        self.transform = transform;
        self
    }

    pub fn with_tile(mut self, tile: usize) -> Self {
        self.tile_size = Some(tile);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::InvalidArgument(format!(
                "resolution must be at least 1x1, got {}x{}",
                self.height, self.width
            )));
        }
        if let Some(t) = self.tile_size {
            if t == 0 || t > self.height.max(self.width) {
                return Err(Error::InvalidArgument(format!(
                    "tile size {t} must be in 1..={}",
                    self.height.max(self.width)
                )));
            }
        }
        self.transform.validate()
    }
}

/// Resolves the latent into a generator with its style baked in.
pub fn stylize(gen: &Generator<f32>, latent: &Latent) -> Result<Styled<f32>> {
    let z = latent.resolve(gen.config().latent_dim)?;
    gen.prepare(&gen.map_latent(&z)?)
}

/// Synthesizes the `[3 × |e_r| × |e_c|]` map for a pair of coordinate
/// vectors, in either mode.
pub fn synthesize_axes(styled: &Styled<f32>, mode: Mode, e_r: &CoordVector, e_c: &CoordVector) -> Result<FeatureMap<f32>> {
    match mode {
        Mode::Biline => styled.synthesize(e_r, e_c),
        Mode::Dense => styled.synthesize_dense(&CoordField::outer(e_r, e_c)),
    }
}

/// Synthesizes the transformed default grid.
pub fn synthesize_grid(
    styled: &Styled<f32>,
    mode: Mode,
    height: usize,
    width: usize,
    transform: &Transform,
) -> Result<FeatureMap<f32>> {
    let e_r = grid_coords(height, transform, Axis::Row)?;
    let e_c = grid_coords(width, transform, Axis::Column)?;
    synthesize_axes(styled, mode, &e_r, &e_c)
}

/// Monolithic render of the whole grid.
pub fn render(gen: &Generator<f32>, req: &RenderRequest) -> Result<Image8> {
    req.validate()?;
    check_budget(gen.config(), req.height, req.width, req.memory_budget)?;
    let styled = stylize(gen, &req.latent)?;
    let map = synthesize_grid(&styled, gen.config().mode, req.height, req.width, &req.transform)?;
    Image8::from_map(&map)
}

/// Patch-by-patch render; byte-identical to [`render`].
///
/// Tiles are `tile × tile` except at the right and bottom edges. Without a
/// tile size the whole image is one tile.
pub fn render_tiled(gen: &Generator<f32>, req: &RenderRequest) -> Result<Image8> {
    req.validate()?;
    let tile = req.tile_size.unwrap_or(req.height.max(req.width));
    check_budget(gen.config(), tile.min(req.height), tile.min(req.width), req.memory_budget)?;
    let styled = stylize(gen, &req.latent)?;
    let mode = gen.config().mode;
    let e_r = grid_coords(req.height, &req.transform, Axis::Row)?;
    let e_c = grid_coords(req.width, &req.transform, Axis::Column)?;
    let mut img = Image8::blank(req.height, req.width);
    for i0 in (0..req.height).step_by(tile) {
        let rows = e_r.slice(i0, (i0 + tile).min(req.height));
        for j0 in (0..req.width).step_by(tile) {
            let cols = e_c.slice(j0, (j0 + tile).min(req.width));
            let patch = Image8::from_map(&synthesize_axes(&styled, mode, &rows, &cols)?)?;
            img.paste(&patch, i0, j0);
        }
    }
    Ok(img)
}

/// Warped render by diagonal sampling.
///
/// For output row `i`, the row and column coordinates `[r_ij]_j` and
/// `[c_ij]_j` are synthesized as a full `W × W` intermediate whose diagonal
/// entry `(j, j)` is pixel `(i, j)`. Dense mode evaluates the field directly.
pub fn render_warped(gen: &Generator<f32>, latent: &Latent, field: &CoordField) -> Result<Image8> {
    let styled = stylize(gen, latent)?;
    if gen.config().mode == Mode::Dense {
        check_budget(gen.config(), field.height, field.width, DEFAULT_BUDGET)?;
        return Image8::from_map(&styled.synthesize_dense(field)?);
    }
    check_budget(gen.config(), field.width, field.width, DEFAULT_BUDGET)?;
    let w = field.width;
    let mut img = Image8::blank(field.height, w);
    for i in 0..field.height {
        let (e_r, e_c) = field.row_batch(i);
        let inter = Image8::from_map(&styled.synthesize(&e_r, &e_c)?)?;
        for j in 0..w {
            img.set_pixel(i, j, inter.pixel(j, j));
        }
    }
    Ok(img)
}

/// Reference render: one `1 × 1` synthesis per pixel.
pub fn render_pixelwise(gen: &Generator<f32>, latent: &Latent, field: &CoordField) -> Result<Image8> {
    let styled = stylize(gen, latent)?;
    let mode = gen.config().mode;
    let mut img = Image8::blank(field.height, field.width);
    for i in 0..field.height {
        for j in 0..field.width {
            let (r, c) = field.at(i, j);
            let e_r = CoordVector::new(vec![r], Axis::Row)?;
            let e_c = CoordVector::new(vec![c], Axis::Column)?;
            let px = Image8::from_map(&synthesize_axes(&styled, mode, &e_r, &e_c)?)?;
            img.set_pixel(i, j, px.pixel(0, 0));
        }
    }
    Ok(img)
}
