//! The scale-equivariant generator.
//!
//! A latent `z` is mapped to a style `w`. Fourier encodings of the row and
//! column coordinates form the first bi-line feature, which passes through
//! `N` synthesis blocks of modulated pixel-wise layers. After every block a
//! modulated projection extracts a residual bi-line `f⁽ˡ⁾` that is composed
//! into a dense map `F⁽ˡ⁾` and fused across depth:
//!
//! ```text
//! E⁽¹⁾   = F⁽¹⁾
//! E⁽ˡ⁺¹⁾ = π⁽ˡ⁾(E⁽ˡ⁾) + F⁽ˡ⁺¹⁾
//! F      = π⁽ᴺ⁾(E⁽ᴺ⁾)
//! ```
//!
//! The fused map goes through the refinement stages, whose RGB heads are
//! summed into the image. No operation mixes locations, so a pixel's value
//! depends only on `(z, r, c)` and the weights.
//!
//! The dense mode applies the same layers on per-pixel maps and replaces the
//! decoders by plain summation, `E⁽ˡ⁺¹⁾ = E⁽ˡ⁾ + F⁽ˡ⁺¹⁾`.

mod config;
mod layers;
mod weights;

pub use config::{GeneratorConfig, Mode};
pub use layers::{leaky_relu, modulated_linear, Activation, Affine, ModulatedLayer, PreparedLayer};
pub use weights::{init_weights, GeneratorWeights, RefineStage, SynthesisBlock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::biline::{compose, BilineFeature, FeatureMap};
use crate::coords::{fourier_encode, Axis, CoordField, CoordVector, FourierParams};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const RMS_EPSILON: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct StyleVector<T> {
    pub w: Vec<T>,
}

/// Standard-normal latent drawn from `seed`.
pub fn sample_latent(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Configuration plus matching weights.
#[derive(Clone, Debug)]
pub struct Generator<T> {
    config: GeneratorConfig,
    weights: GeneratorWeights<T>,
}

impl Generator<f32> {
    pub fn init(config: GeneratorConfig, seed: u64) -> Result<Self> {
        let weights = init_weights(&config, seed)?;
        Ok(Self { config, weights })
    }
}

impl<T: Scalar> Generator<T> {
    pub fn new(config: GeneratorConfig, weights: GeneratorWeights<T>) -> Result<Self> {
        config.validate()?;
        weights.validate(&config)?;
        Ok(Self { config, weights })
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    pub fn weights(&self) -> &GeneratorWeights<T> {
        &self.weights
    }

    /// Same generator in another precision.
    pub fn cast<U: Scalar>(&self) -> Generator<U> {
        Generator {
            config: self.config.clone(),
            weights: self.weights.cast(),
        }
    }

    /// Same weights applied in the given mode.
    pub fn with_mode(&self, mode: Mode) -> Self {
        Self {
            config: self.config.clone().with_mode(mode),
            weights: self.weights.clone(),
        }
    }

    fn activation(&self) -> Activation<T> {
        activation(&self.config)
    }

    fn epsilon(&self) -> T {
        T::of(self.config.demod_epsilon)
    }

    /// RMS-normalizes `z` and runs the mapping network.
    pub fn map_latent(&self, z: &[T]) -> Result<StyleVector<T>> {
        if z.len() != self.config.latent_dim {
            return Err(Error::shape("latent", self.config.latent_dim, z.len()));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("latent".into()));
        }
        let mean_sq = z.iter().fold(T::zero(), |acc, &v| acc + v * v) / T::of(z.len() as f64);
        let denom = (mean_sq + T::of(RMS_EPSILON)).sqrt();
        let mut x: Vec<T> = z.iter().map(|&v| v / denom).collect();
        for layer in &self.weights.mapping {
            x = layer.prepare(Some(self.activation())).forward(&x);
        }
        Ok(StyleVector { w: x })
    }

    /// Resolves every modulated layer for one style.
    pub fn prepare(&self, style: &StyleVector<T>) -> Result<Styled<T>> {
        if style.w.len() != self.config.style_dim {
            return Err(Error::shape("style vector", self.config.style_dim, style.w.len()));
        }
        let (w, eps, act) = (&style.w[..], self.epsilon(), self.activation());
        let block = |b: &SynthesisBlock<T>| {
            [
                b.layers[0].prepare(w, eps, act),
                b.layers[1].prepare(w, eps, act),
            ]
        };
        let n_dec = self.config.decoder_widths.len() - 1;
        Ok(Styled {
            mode: self.config.mode,
            thickness: self.config.thickness,
            fourier: self.weights.fourier.clone(),
            blocks: self.weights.blocks.iter().map(block).collect(),
            projections: self
                .weights
                .projections
                .iter()
                .map(|p| p.prepare(w, eps, act))
                .collect(),
            decoders: self
                .weights
                .decoders
                .iter()
                .map(|d| {
                    d.iter()
                        .enumerate()
                        .map(|(k, a)| a.prepare((k + 1 < n_dec).then_some(act)))
                        .collect()
                })
                .collect(),
            refinement: self
                .weights
                .refinement
                .iter()
                .map(|r| (block(&r.block), r.to_rgb.prepare(w, eps, act)))
                .collect(),
        })
    }

    /// `I = G(z, e^r, e^c)` in bi-line mode; returns `[3 × H × W]`.
    pub fn synthesize(&self, z: &[T], e_r: &CoordVector, e_c: &CoordVector) -> Result<FeatureMap<T>> {
        let style = self.map_latent(z)?;
        self.prepare(&style)?.synthesize(e_r, e_c)
    }

    /// Dense-mode synthesis over an arbitrary per-pixel coordinate field.
    pub fn synthesize_dense(&self, z: &[T], field: &CoordField) -> Result<FeatureMap<T>> {
        let style = self.map_latent(z)?;
        self.prepare(&style)?.synthesize_dense(field)
    }
}

fn activation<T: Scalar>(config: &GeneratorConfig) -> Activation<T> {
    Activation {
        slope: T::of(config.leaky_slope),
        gain: T::of(config.activation_gain),
    }
}

/// Applies a synthesis block to a bi-line feature, location by location.
pub fn synthesis_block_biline<T: Scalar>(
    input: &BilineFeature<T>,
    style: &StyleVector<T>,
    block: &SynthesisBlock<T>,
    config: &GeneratorConfig,
) -> Result<BilineFeature<T>> {
    if input.channels != block.c_in() {
        return Err(Error::shape("synthesis block input", block.c_in(), input.channels));
    }
    let (eps, act) = (T::of(config.demod_epsilon), activation(config));
    let layers = [
        block.layers[0].prepare(&style.w, eps, act),
        block.layers[1].prepare(&style.w, eps, act),
    ];
    Ok(apply_block_biline(&layers, input.clone()))
}

/// Applies a synthesis block to a dense map, pixel by pixel.
pub fn synthesis_block_dense<T: Scalar>(
    input: &FeatureMap<T>,
    style: &StyleVector<T>,
    block: &SynthesisBlock<T>,
    config: &GeneratorConfig,
) -> Result<FeatureMap<T>> {
    if input.channels != block.c_in() {
        return Err(Error::shape("synthesis block input", block.c_in(), input.channels));
    }
    let (eps, act) = (T::of(config.demod_epsilon), activation(config));
    let layers = [
        block.layers[0].prepare(&style.w, eps, act),
        block.layers[1].prepare(&style.w, eps, act),
    ];
    let n = input.pixels();
    let data = apply_block(&layers, input.data.clone(), n);
    FeatureMap::from_vec(layers[1].c_out, input.height, input.width, data)
}

fn apply_layer_biline<T: Scalar>(layer: &PreparedLayer<T>, b: &BilineFeature<T>) -> BilineFeature<T> {
    let d = b.thickness;
    BilineFeature {
        channels: layer.c_out,
        height: b.height,
        width: b.width,
        thickness: d,
        row_half: layer.forward_planar(&b.row_half, b.height * d),
        col_half: layer.forward_planar(&b.col_half, b.width * d),
    }
}

fn apply_block_biline<T: Scalar>(layers: &[PreparedLayer<T>; 2], b: BilineFeature<T>) -> BilineFeature<T> {
    let a = apply_layer_biline(&layers[0], &b);
    drop(b);
    apply_layer_biline(&layers[1], &a)
}

fn apply_block<T: Scalar>(layers: &[PreparedLayer<T>; 2], x: Vec<T>, n: usize) -> Vec<T> {
    let a = layers[0].forward_planar(&x, n);
    drop(x);
    layers[1].forward_planar(&a, n)
}

fn add_into<T: Scalar>(acc: &mut [T], other: &[T]) {
    acc.par_iter_mut()
        .zip(other.par_iter())
        .for_each(|(a, &b)| *a = *a + b);
}

/// Generator with one style baked in; reusable across tiles and rows.
#[derive(Clone, Debug)]
pub struct Styled<T> {
    mode: Mode,
    thickness: usize,
    fourier: FourierParams<T>,
    blocks: Vec<[PreparedLayer<T>; 2]>,
    projections: Vec<PreparedLayer<T>>,
    decoders: Vec<Vec<PreparedLayer<T>>>,
    refinement: Vec<([PreparedLayer<T>; 2], PreparedLayer<T>)>,
}

/// Intermediate dense maps of one bi-line synthesis.
#[derive(Clone, Debug)]
pub struct LayerMaps<T> {
    /// `F⁽ˡ⁾`, one per block.
    pub composed: Vec<FeatureMap<T>>,
    /// `E⁽ˡ⁾`, one per block.
    pub fused: Vec<FeatureMap<T>>,
    /// `F`, the refinement input.
    pub output: FeatureMap<T>,
}

impl<T: Scalar> Styled<T> {
    fn decode(&self, l: usize, mut x: Vec<T>, n: usize) -> Vec<T> {
        for layer in &self.decoders[l] {
            let y = layer.forward_planar(&x, n);
            x = y;
        }
        x
    }

    fn refine(&self, mut x: Vec<T>, n: usize) -> Vec<T> {
        let mut rgb: Option<Vec<T>> = None;
        for (block, to_rgb) in &self.refinement {
            x = apply_block(block, x, n);
            let r = to_rgb.forward_planar(&x, n);
            rgb = Some(match rgb {
                None => r,
                Some(mut acc) => {
                    add_into(&mut acc, &r);
                    acc
                }
            });
        }
        rgb.expect("at least one refinement stage")
    }

    fn check_axes(&self, e_r: &CoordVector, e_c: &CoordVector) -> Result<()> {
        if e_r.is_empty() || e_c.is_empty() {
            return Err(Error::InvalidArgument("coordinate vectors must be non-empty".into()));
        }
        if e_r.axis != Axis::Row || e_c.axis != Axis::Column {
            return Err(Error::InvalidArgument(
                "expected a row coordinate vector and a column coordinate vector".into(),
            ));
        }
        Ok(())
    }

    fn input_biline(&self, e_r: &CoordVector, e_c: &CoordVector) -> BilineFeature<T> {
        BilineFeature {
            channels: self.fourier.channels(),
            height: e_r.len(),
            width: e_c.len(),
            thickness: self.thickness,
            row_half: fourier_encode(e_r, &self.fourier),
            col_half: fourier_encode(e_c, &self.fourier),
        }
    }

    /// Bi-line synthesis of the `|e_r| × |e_c|` image, `[3 × H × W]`.
    pub fn synthesize(&self, e_r: &CoordVector, e_c: &CoordVector) -> Result<FeatureMap<T>> {
        if self.mode != Mode::Biline {
            return Err(Error::InvalidArgument(
                "bi-line synthesis requires mode = biline".into(),
            ));
        }
        self.check_axes(e_r, e_c)?;
        let (h, w) = (e_r.len(), e_c.len());
        let n = h * w;
        let mut b = self.input_biline(e_r, e_c);
        let mut fused: Option<Vec<T>> = None;
        for (l, block) in self.blocks.iter().enumerate() {
            b = apply_block_biline(block, b);
            let decoded = fused.take().map(|e| self.decode(l - 1, e, n));
            let f = apply_layer_biline(&self.projections[l], &b);
            let composed = compose(&f).data;
            drop(f);
            fused = Some(match decoded {
                None => composed,
                Some(mut p) => {
                    add_into(&mut p, &composed);
                    p
                }
            });
        }
        drop(b);
        let last = self.blocks.len() - 1;
        let fmap = self.decode(last, fused.expect("at least one block"), n);
        let rgb = self.refine(fmap, n);
        FeatureMap::from_vec(3, h, w, rgb)
    }

    /// Every composed and fused map of one bi-line synthesis.
    pub fn layer_maps(&self, e_r: &CoordVector, e_c: &CoordVector) -> Result<LayerMaps<T>> {
        if self.mode != Mode::Biline {
            return Err(Error::InvalidArgument("layer maps require mode = biline".into()));
        }
        self.check_axes(e_r, e_c)?;
        let (h, w) = (e_r.len(), e_c.len());
        let n = h * w;
        let rc = self.projections[0].c_out;
        let mut b = self.input_biline(e_r, e_c);
        let mut composed = Vec::new();
        let mut fused: Vec<FeatureMap<T>> = Vec::new();
        for (l, block) in self.blocks.iter().enumerate() {
            b = apply_block_biline(block, b);
            let f = compose(&apply_layer_biline(&self.projections[l], &b));
            let e = match fused.last() {
                None => f.data.clone(),
                Some(prev) => {
                    let mut p = self.decode(l - 1, prev.data.clone(), n);
                    add_into(&mut p, &f.data);
                    p
                }
            };
            composed.push(f);
            fused.push(FeatureMap::from_vec(rc, h, w, e)?);
        }
        let last = fused.last().expect("at least one block");
        let out = self.decode(self.blocks.len() - 1, last.data.clone(), n);
        let out_c = self.decoders[self.blocks.len() - 1]
            .last()
            .map_or(rc, |d| d.c_out);
        Ok(LayerMaps {
            composed,
            fused,
            output: FeatureMap::from_vec(out_c, h, w, out)?,
        })
    }

    /// Dense input map: per pixel and channel, the thickness-wise dot
    /// product of the row and column Fourier encodings at `(r, c)`.
    fn input_dense(&self, field: &CoordField) -> Vec<T> {
        let n = field.height * field.width;
        let (cf, d) = (self.fourier.channels(), self.thickness);
        let mut out = vec![T::zero(); cf * n];
        out.par_chunks_mut(n).enumerate().for_each(|(k, plane)| {
            for (p, v) in plane.iter_mut().enumerate() {
                let (r, c) = (T::of(field.rows[p]), T::of(field.cols[p]));
                *v = (0..d).fold(T::zero(), |acc, slot| {
                    acc + self.fourier.row.encode_at(k, slot, r) * self.fourier.col.encode_at(k, slot, c)
                });
            }
        });
        out
    }

    /// Dense-mode synthesis over a per-pixel coordinate field.
    pub fn synthesize_dense(&self, field: &CoordField) -> Result<FeatureMap<T>> {
        if self.mode != Mode::Dense {
            return Err(Error::InvalidArgument(
                "dense synthesis requires mode = dense".into(),
            ));
        }
        let n = field.height * field.width;
        if n == 0 {
            return Err(Error::InvalidArgument("coordinate field must be non-empty".into()));
        }
        let mut x = self.input_dense(field);
        let mut fused: Option<Vec<T>> = None;
        for (l, block) in self.blocks.iter().enumerate() {
            x = apply_block(block, x, n);
            let f = self.projections[l].forward_planar(&x, n);
            fused = Some(match fused {
                None => f,
                Some(mut e) => {
                    add_into(&mut e, &f);
                    e
                }
            });
        }
        drop(x);
        let rgb = self.refine(fused.expect("at least one block"), n);
        FeatureMap::from_vec(3, field.height, field.width, rgb)
    }
}
