//! Pixel-wise (1×1) layers.
//!
//! Raw weights are stored as unit-variance samples and scaled by
//! `1/sqrt(fan_in)` when used. Every output element is accumulated from
//! zero in ascending input-channel order, then the bias is added, then the
//! activation is applied; [`PreparedLayer::forward`] and
//! [`PreparedLayer::forward_planar`] follow that order exactly, so a
//! location's output does not depend on how many other locations are
//! processed with it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Locations per work item in planar application.
const BLOCK: usize = 256;

#[inline]
pub fn leaky_relu<T: Scalar>(x: T, slope: T) -> T {
    if x >= T::zero() {
        x
    } else {
        slope * x
    }
}

/// LeakyReLU followed by a constant gain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Activation<T> {
    pub slope: T,
    pub gain: T,
}

impl<T: Scalar> Activation<T> {
    /// Plain LeakyReLU, gain 1.
    pub fn leaky(slope: T) -> Self {
        Self {
            slope,
            gain: T::one(),
        }
    }

    #[inline]
    pub fn apply(&self, x: T) -> T {
        leaky_relu(x, self.slope) * self.gain
    }
}

/// Plain affine layer `y = (W / sqrt(c_in)) x + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine<T> {
    pub c_in: usize,
    pub c_out: usize,
    /// `[c_out × c_in]`, unit-variance at initialization.
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Affine<T> {
    pub fn gain(&self) -> T {
        T::one() / T::of(self.c_in as f64).sqrt()
    }

    pub fn forward(&self, x: &[T]) -> Vec<T> {
        self.prepare(None).forward(x)
    }

    pub fn prepare(&self, activation: Option<Activation<T>>) -> PreparedLayer<T> {
        let g = self.gain();
        PreparedLayer {
            c_in: self.c_in,
            c_out: self.c_out,
            weight: self.weight.iter().map(|&w| w * g).collect(),
            bias: self.bias.clone(),
            activation,
        }
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn cast<U: Scalar>(&self) -> Affine<U> {
        Affine {
            c_in: self.c_in,
            c_out: self.c_out,
            weight: cast_vec(&self.weight),
            bias: cast_vec(&self.bias),
        }
    }
}

/// Style-modulated pixel-wise layer.
///
/// A per-sample style `s = affine(w)` scales the input channels of the
/// weight, `w'[o,i] = s[i] · W[o,i] / sqrt(c_in)`; with demodulation each
/// output row is renormalized, `w''[o,i] = w'[o,i] / sqrt(Σ_i w'[o,i]² + ε)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModulatedLayer<T> {
    pub c_in: usize,
    pub c_out: usize,
    /// Maps the style vector to one scale per input channel.
    pub style: Affine<T>,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
    pub demodulate: bool,
    /// LeakyReLU after the bias; off for projections and RGB heads.
    pub activate: bool,
}

impl<T: Scalar> ModulatedLayer<T> {
    pub fn styles(&self, w: &[T]) -> Vec<T> {
        self.style.forward(w)
    }

    pub fn modulated_weights(&self, styles: &[T], epsilon: T) -> Vec<T> {
        let g = T::one() / T::of(self.c_in as f64).sqrt();
        let mut out = Vec::with_capacity(self.c_out * self.c_in);
        for o in 0..self.c_out {
            let row = &self.weight[o * self.c_in..(o + 1) * self.c_in];
            let start = out.len();
            out.extend(row.iter().zip(styles).map(|(&wv, &s)| s * (wv * g)));
            if self.demodulate {
                let sq = out[start..]
                    .iter()
                    .fold(T::zero(), |acc, &v| acc + v * v);
                let norm = (sq + epsilon).sqrt();
                out[start..].iter_mut().for_each(|v| *v = *v / norm);
            }
        }
        out
    }

    /// Bakes the style vector `w` into a plain layer.
    pub fn prepare(&self, w: &[T], epsilon: T, activation: Activation<T>) -> PreparedLayer<T> {
        let s = self.styles(w);
        PreparedLayer {
            c_in: self.c_in,
            c_out: self.c_out,
            weight: self.modulated_weights(&s, epsilon),
            bias: self.bias.clone(),
            activation: self.activate.then_some(activation),
        }
    }

    pub fn param_count(&self) -> usize {
        self.style.param_count() + self.weight.len() + self.bias.len()
    }

    pub fn cast<U: Scalar>(&self) -> ModulatedLayer<U> {
        ModulatedLayer {
            c_in: self.c_in,
            c_out: self.c_out,
            style: self.style.cast(),
            weight: cast_vec(&self.weight),
            bias: cast_vec(&self.bias),
            demodulate: self.demodulate,
            activate: self.activate,
        }
    }
}

/// Modulated layer applied to the channel vector of a single location, with
/// a plain LeakyReLU of the given slope when the layer is activated.
pub fn modulated_linear<T: Scalar>(
    x: &[T],
    w: &[T],
    layer: &ModulatedLayer<T>,
    epsilon: T,
    slope: T,
) -> Result<Vec<T>> {
    if x.len() != layer.c_in {
        return Err(Error::shape("modulated layer input", layer.c_in, x.len()));
    }
    if w.len() != layer.style.c_in {
        return Err(Error::shape("style vector", layer.style.c_in, w.len()));
    }
    Ok(layer.prepare(w, epsilon, Activation::leaky(slope)).forward(x))
}

/// A layer with its effective weights resolved, ready to apply.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedLayer<T> {
    pub c_in: usize,
    pub c_out: usize,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
    pub activation: Option<Activation<T>>,
}

impl<T: Scalar> PreparedLayer<T> {
    #[inline]
    fn finish(&self, acc: T, o: usize) -> T {
        let y = acc + self.bias[o];
        match self.activation {
            Some(a) => a.apply(y),
            None => y,
        }
    }

    /// Single location.
    pub fn forward(&self, x: &[T]) -> Vec<T> {
        (0..self.c_out)
            .map(|o| {
                let row = &self.weight[o * self.c_in..(o + 1) * self.c_in];
                let acc = row
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (&wv, &xv)| acc + wv * xv);
                self.finish(acc, o)
            })
            .collect()
    }

    /// `n` locations stored channel-major: input `[c_in × n]`, output
    /// `[c_out × n]`.
    pub fn forward_planar(&self, x: &[T], n: usize) -> Vec<T> {
        debug_assert_eq!(x.len(), self.c_in * n);
        let mut out = vec![T::zero(); self.c_out * n];
        if n == 0 {
            return out;
        }
        let blocks = n.div_ceil(BLOCK);
        let mut per_block: Vec<Vec<&mut [T]>> =
            (0..blocks).map(|_| Vec::with_capacity(self.c_out)).collect();
        for plane in out.chunks_mut(n) {
            for (b, chunk) in plane.chunks_mut(BLOCK).enumerate() {
                per_block[b].push(chunk);
            }
        }
        per_block
            .into_par_iter()
            .enumerate()
            .for_each(|(b, mut planes)| {
                let start = b * BLOCK;
                for (o, dst) in planes.iter_mut().enumerate() {
                    let len = dst.len();
                    let row = &self.weight[o * self.c_in..(o + 1) * self.c_in];
                    for (i, &wv) in row.iter().enumerate() {
                        let src = &x[i * n + start..i * n + start + len];
                        for (d, &s) in dst.iter_mut().zip(src) {
                            *d = *d + wv * s;
                        }
                    }
                    for d in dst.iter_mut() {
                        *d = self.finish(*d, o);
                    }
                }
            });
        out
    }
}

pub(crate) fn cast_vec<T: Scalar, U: Scalar>(v: &[T]) -> Vec<U> {
    v.iter().map(|x| U::of(x.widen())).collect()
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn affine(c_in: usize, c_out: usize, rng: &mut ChaCha8Rng) -> Affine<f64> {
        Affine {
            c_in,
            c_out,
            weight: (0..c_in * c_out).map(|_| rng.random_range(-1.5..1.5)).collect(),
            bias: (0..c_out).map(|_| rng.random_range(-0.5..0.5)).collect(),
        }
    }

    fn modulated(c_in: usize, c_out: usize, style_dim: usize, demod: bool, seed: u64) -> ModulatedLayer<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let style = affine(style_dim, c_in, &mut rng);
        let inner = affine(c_in, c_out, &mut rng);
        ModulatedLayer {
            c_in,
            c_out,
            style,
            weight: inner.weight,
            bias: inner.bias,
            demodulate: demod,
            activate: true,
        }
    }

    #[test]
    fn near_identity() {
        let layer = ModulatedLayer {
            c_in: 1,
            c_out: 1,
            // style affine with zero weight and unit bias gives s = 1
            style: Affine {
                c_in: 1,
                c_out: 1,
                weight: vec![0.0],
                bias: vec![1.0],
            },
            weight: vec![1.0],
            bias: vec![0.0],
            demodulate: true,
            activate: false,
        };
        let eps = 1e-8;
        let y = modulated_linear(&[0.7], &[3.0], &layer, eps, 0.2).unwrap();
        assert!((y[0] - 0.7 / (1.0f64 + eps).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_style_yields_bias() {
        let mut layer = modulated(4, 3, 5, true, 1);
        layer.style.weight.iter_mut().for_each(|v| *v = 0.0);
        layer.style.bias.iter_mut().for_each(|v| *v = 0.0);
        layer.activate = false;
        let y = modulated_linear(&[1.0, -2.0, 3.0, 0.5], &[0.3; 5], &layer, 1e-8, 0.2).unwrap();
        assert_eq!(y, layer.bias);
    }

    #[test]
    fn matches_scalar_formula() {
        for demod in [false, true] {
            let layer = modulated(4, 3, 6, demod, 7);
            let mut rng = ChaCha8Rng::seed_from_u64(8);
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (eps, slope) = (1e-8, 0.2);
            let got = modulated_linear(&x, &w, &layer, eps, slope).unwrap();

            // scalar reference
            let mut s = [0.0; 4];
            for (i, si) in s.iter_mut().enumerate() {
                let mut acc = layer.style.bias[i];
                for k in 0..6 {
                    acc += layer.style.weight[i * 6 + k] / 6f64.sqrt() * w[k];
                }
                *si = acc;
            }
            for o in 0..3 {
                let wp: Vec<f64> = (0..4)
                    .map(|i| s[i] * layer.weight[o * 4 + i] / 2.0)
                    .collect();
                let norm = if demod {
                    (wp.iter().map(|v| v * v).sum::<f64>() + eps).sqrt()
                } else {
                    1.0
                };
                let mut y = layer.bias[o];
                for i in 0..4 {
                    y += wp[i] / norm * x[i];
                }
                let y = if y >= 0.0 { y } else { slope * y };
                assert!((got[o] - y).abs() <= 1e-12, "{} vs {}", got[o], y);
            }
        }
    }

    #[test]
    fn demodulated_rows_have_unit_norm() {
        let layer = modulated(16, 8, 6, true, 3);
        let w = vec![0.4; 6];
        let s = layer.styles(&w);
        let m = layer.modulated_weights(&s, 1e-8);
        for o in 0..8 {
            let sq: f64 = m[o * 16..(o + 1) * 16].iter().map(|v| v * v).sum();
            assert!((sq - 1.0).abs() <= 1e-6, "{sq}");
        }
    }

    #[test]
    fn planar_is_bitwise_per_location() {
        let act = Activation { slope: 0.2, gain: std::f64::consts::SQRT_2 };
        let layer = modulated(5, 7, 4, true, 11).prepare(&[0.1, -0.2, 0.3, 0.9], 1e-8, act);
        let n = 600;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<f64> = (0..5 * n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y = layer.forward_planar(&x, n);
        for p in [0, 1, 255, 256, 599] {
            let xp: Vec<f64> = (0..5).map(|i| x[i * n + p]).collect();
            let yp = layer.forward(&xp);
            for o in 0..7 {
                assert_eq!(y[o * n + p].to_bits(), yp[o].to_bits());
            }
        }
    }

    #[test]
    fn shape_errors() {
        let layer = modulated(4, 3, 5, true, 1);
        assert!(modulated_linear(&[1.0; 3], &[0.0; 5], &layer, 1e-8, 0.2).is_err());
        assert!(modulated_linear(&[1.0; 4], &[0.0; 4], &layer, 1e-8, 0.2).is_err());
    }
}
