use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::GeneratorConfig;
use super::layers::{Affine, ModulatedLayer};
use crate::coords::{FourierParams, FourierSet};
use crate::error::{ContainerError, Error, Result};
use crate::persistence::Entry;
use crate::scalar::Scalar;

/// Two modulated, demodulated, activated layers; no noise, no upsampling.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisBlock<T> {
    pub layers: [ModulatedLayer<T>; 2],
}

impl<T: Scalar> SynthesisBlock<T> {
    pub fn c_in(&self) -> usize {
        self.layers[0].c_in
    }

    pub fn c_out(&self) -> usize {
        self.layers[1].c_out
    }

    fn cast<U: Scalar>(&self) -> SynthesisBlock<U> {
        SynthesisBlock {
            layers: [self.layers[0].cast(), self.layers[1].cast()],
        }
    }
}

/// One refinement stage: a synthesis block followed by its RGB head.
#[derive(Clone, Debug, PartialEq)]
pub struct RefineStage<T> {
    pub block: SynthesisBlock<T>,
    pub to_rgb: ModulatedLayer<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorWeights<T> {
    pub mapping: Vec<Affine<T>>,
    pub fourier: FourierParams<T>,
    pub blocks: Vec<SynthesisBlock<T>>,
    /// Per-block modulated projection to the residual width, not demodulated.
    pub projections: Vec<ModulatedLayer<T>>,
    /// Per-block plain decoders `π`.
    pub decoders: Vec<Vec<Affine<T>>>,
    pub refinement: Vec<RefineStage<T>>,
}

struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    fn normal<T: Scalar>(&mut self, n: usize) -> Vec<T> {
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                T::of(z)
            })
            .collect()
    }

    fn affine<T: Scalar>(&mut self, c_in: usize, c_out: usize) -> Affine<T> {
        Affine {
            c_in,
            c_out,
            weight: self.normal(c_in * c_out),
            bias: vec![T::zero(); c_out],
        }
    }

    fn modulated<T: Scalar>(
        &mut self,
        style_dim: usize,
        c_in: usize,
        c_out: usize,
        demodulate: bool,
        activate: bool,
    ) -> ModulatedLayer<T> {
        let style = self.affine(style_dim, c_in);
        let inner = self.affine(c_in, c_out);
        ModulatedLayer {
            c_in,
            c_out,
            style,
            weight: inner.weight,
            bias: inner.bias,
            demodulate,
            activate,
        }
    }

    fn block<T: Scalar>(&mut self, style_dim: usize, c_in: usize, c_out: usize) -> SynthesisBlock<T> {
        SynthesisBlock {
            layers: [
                self.modulated(style_dim, c_in, c_out, true, true),
                self.modulated(style_dim, c_out, c_out, true, true),
            ],
        }
    }
}

/// Deterministic random initialization: unit-normal weights (scaled by
/// `1/sqrt(fan_in)` at use), zero biases, Fourier parameters drawn first.
pub fn init_weights(config: &GeneratorConfig, seed: u64) -> Result<GeneratorWeights<f32>> {
    config.validate()?;
    let mut s = Sampler {
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let fourier = FourierParams::sample(
        config.fourier_channels,
        config.thickness,
        config.fourier_sigma,
        &mut s.rng,
    );
    let mut mapping = Vec::with_capacity(config.mapping_layers);
    for k in 0..config.mapping_layers {
        let c_in = if k == 0 { config.latent_dim } else { config.style_dim };
        mapping.push(s.affine(c_in, config.style_dim));
    }
    let sd = config.style_dim;
    let mut blocks = Vec::with_capacity(config.num_blocks);
    let mut projections = Vec::with_capacity(config.num_blocks);
    let mut decoders = Vec::with_capacity(config.num_blocks);
    for l in 0..config.num_blocks {
        let c_in = if l == 0 {
            config.fourier_channels
        } else {
            config.hidden_channels
        };
        blocks.push(s.block(sd, c_in, config.hidden_channels));
        projections.push(s.modulated(sd, config.hidden_channels, config.residual_channels, false, false));
        decoders.push(
            config
                .decoder_widths
                .windows(2)
                .map(|w| s.affine(w[0], w[1]))
                .collect(),
        );
    }
    let refinement = config
        .refinement_widths
        .windows(2)
        .map(|w| RefineStage {
            block: s.block(sd, w[0], w[1]),
            to_rgb: s.modulated(sd, w[1], 3, false, false),
        })
        .collect();
    Ok(GeneratorWeights {
        mapping,
        fourier,
        blocks,
        projections,
        decoders,
        refinement,
    })
}

fn push_affine<T: Scalar>(out: &mut Vec<Entry>, prefix: &str, a: &Affine<T>) {
    out.push(Entry::new(
        format!("{prefix}.weight"),
        vec![a.c_out, a.c_in],
        a.weight.iter().map(|v| v.widen() as f32).collect(),
    ));
    out.push(Entry::new(
        format!("{prefix}.bias"),
        vec![a.c_out],
        a.bias.iter().map(|v| v.widen() as f32).collect(),
    ));
}

fn push_modulated<T: Scalar>(out: &mut Vec<Entry>, prefix: &str, m: &ModulatedLayer<T>) {
    push_affine(out, &format!("{prefix}.style"), &m.style);
    push_affine(
        out,
        prefix,
        &Affine {
            c_in: m.c_in,
            c_out: m.c_out,
            weight: m.weight.clone(),
            bias: m.bias.clone(),
        },
    );
}

fn push_fourier<T: Scalar>(out: &mut Vec<Entry>, axis: &str, set: &FourierSet<T>) {
    let dims = vec![set.channels, set.thickness];
    let f32s = |v: &[T]| v.iter().map(|x| x.widen() as f32).collect::<Vec<_>>();
    out.push(Entry::new(format!("fourier.{axis}.freq"), dims.clone(), f32s(&set.frequencies)));
    out.push(Entry::new(format!("fourier.{axis}.phase"), dims, f32s(&set.phases)));
}

struct Lookup {
    entries: HashMap<String, Entry>,
}

impl Lookup {
    fn take<T: Scalar>(&mut self, name: &str, dims: &[usize]) -> Result<Vec<T>> {
        let e = self
            .entries
            .remove(name)
            .ok_or_else(|| ContainerError::MissingEntry(name.to_string()))?;
        if e.dims != dims {
            return Err(Error::shape(
                format!("weight entry {name}"),
                format!("{dims:?}"),
                format!("{:?}", e.dims),
            ));
        }
        if let Some(bad) = e.data.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{bad} in weight entry {name}")));
        }
        Ok(e.data.iter().map(|&v| T::of(v as f64)).collect())
    }

    fn affine<T: Scalar>(&mut self, prefix: &str, c_in: usize, c_out: usize) -> Result<Affine<T>> {
        Ok(Affine {
            c_in,
            c_out,
            weight: self.take(&format!("{prefix}.weight"), &[c_out, c_in])?,
            bias: self.take(&format!("{prefix}.bias"), &[c_out])?,
        })
    }

    fn modulated<T: Scalar>(
        &mut self,
        prefix: &str,
        style_dim: usize,
        c_in: usize,
        c_out: usize,
        demodulate: bool,
        activate: bool,
    ) -> Result<ModulatedLayer<T>> {
        let style = self.affine(&format!("{prefix}.style"), style_dim, c_in)?;
        let inner = self.affine(prefix, c_in, c_out)?;
        Ok(ModulatedLayer {
            c_in,
            c_out,
            style,
            weight: inner.weight,
            bias: inner.bias,
            demodulate,
            activate,
        })
    }

    fn block<T: Scalar>(&mut self, prefix: &str, sd: usize, c_in: usize, c_out: usize) -> Result<SynthesisBlock<T>> {
        Ok(SynthesisBlock {
            layers: [
                self.modulated(&format!("{prefix}.conv0"), sd, c_in, c_out, true, true)?,
                self.modulated(&format!("{prefix}.conv1"), sd, c_out, c_out, true, true)?,
            ],
        })
    }

    fn fourier<T: Scalar>(&mut self, axis: &str, channels: usize, thickness: usize) -> Result<FourierSet<T>> {
        let dims = [channels, thickness];
        Ok(FourierSet {
            channels,
            thickness,
            frequencies: self.take(&format!("fourier.{axis}.freq"), &dims)?,
            phases: self.take(&format!("fourier.{axis}.phase"), &dims)?,
        })
    }
}

impl<T: Scalar> GeneratorWeights<T> {
    /// Named tensors in a fixed order, for the weight container.
    pub fn to_entries(&self) -> Vec<Entry> {
        let mut out = Vec::new();
        push_fourier(&mut out, "row", &self.fourier.row);
        push_fourier(&mut out, "col", &self.fourier.col);
        for (k, a) in self.mapping.iter().enumerate() {
            push_affine(&mut out, &format!("mapping.{k}"), a);
        }
        for (l, b) in self.blocks.iter().enumerate() {
            push_modulated(&mut out, &format!("block.{l}.conv0"), &b.layers[0]);
            push_modulated(&mut out, &format!("block.{l}.conv1"), &b.layers[1]);
            push_modulated(&mut out, &format!("proj.{l}"), &self.projections[l]);
            for (k, a) in self.decoders[l].iter().enumerate() {
                push_affine(&mut out, &format!("decoder.{l}.{k}"), a);
            }
        }
        for (r, st) in self.refinement.iter().enumerate() {
            push_modulated(&mut out, &format!("refine.{r}.conv0"), &st.block.layers[0]);
            push_modulated(&mut out, &format!("refine.{r}.conv1"), &st.block.layers[1]);
            push_modulated(&mut out, &format!("refine.{r}.torgb"), &st.to_rgb);
        }
        out
    }

    /// Rebuilds weights for `config`; every expected entry must be present
    /// with matching dims and nothing else may be left over.
    pub fn from_entries(config: &GeneratorConfig, entries: Vec<Entry>) -> Result<Self> {
        config.validate()?;
        let mut map = HashMap::with_capacity(entries.len());
        for e in entries {
            let name = e.name.clone();
            if map.insert(name.clone(), e).is_some() {
                return Err(ContainerError::DuplicateName(name).into());
            }
        }
        let mut lk = Lookup { entries: map };
        let (cf, d, sd) = (config.fourier_channels, config.thickness, config.style_dim);
        let fourier = FourierParams {
            row: lk.fourier("row", cf, d)?,
            col: lk.fourier("col", cf, d)?,
            sigma: config.fourier_sigma,
        };
        let mut mapping = Vec::new();
        for k in 0..config.mapping_layers {
            let c_in = if k == 0 { config.latent_dim } else { sd };
            mapping.push(lk.affine(&format!("mapping.{k}"), c_in, sd)?);
        }
        let ch = config.hidden_channels;
        let mut blocks = Vec::new();
        let mut projections = Vec::new();
        let mut decoders = Vec::new();
        for l in 0..config.num_blocks {
            let c_in = if l == 0 { cf } else { ch };
            blocks.push(lk.block(&format!("block.{l}"), sd, c_in, ch)?);
            projections.push(lk.modulated(
                &format!("proj.{l}"),
                sd,
                ch,
                config.residual_channels,
                false,
                false,
            )?);
            let dec = config
                .decoder_widths
                .windows(2)
                .enumerate()
                .map(|(k, w)| lk.affine(&format!("decoder.{l}.{k}"), w[0], w[1]))
                .collect::<Result<Vec<_>>>()?;
            decoders.push(dec);
        }
        let refinement = config
            .refinement_widths
            .windows(2)
            .enumerate()
            .map(|(r, w)| {
                Ok(RefineStage {
                    block: lk.block(&format!("refine.{r}"), sd, w[0], w[1])?,
                    to_rgb: lk.modulated(&format!("refine.{r}.torgb"), sd, w[1], 3, false, false)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(extra) = lk.entries.keys().min() {
            return Err(Error::shape(
                "weight container",
                "no unused entries",
                format!("unexpected entry {extra:?}"),
            ));
        }
        Ok(Self {
            mapping,
            fourier,
            blocks,
            projections,
            decoders,
            refinement,
        })
    }

    pub fn param_count(&self) -> usize {
        self.to_entries().iter().map(|e| e.data.len()).sum()
    }

    pub fn cast<U: Scalar>(&self) -> GeneratorWeights<U> {
        GeneratorWeights {
            mapping: self.mapping.iter().map(Affine::cast).collect(),
            fourier: self.fourier.cast(),
            blocks: self.blocks.iter().map(SynthesisBlock::cast).collect(),
            projections: self.projections.iter().map(ModulatedLayer::cast).collect(),
            decoders: self
                .decoders
                .iter()
                .map(|d| d.iter().map(Affine::cast).collect())
                .collect(),
            refinement: self
                .refinement
                .iter()
                .map(|r| RefineStage {
                    block: r.block.cast(),
                    to_rgb: r.to_rgb.cast(),
                })
                .collect(),
        }
    }

    /// Checks every shape against `config`.
    pub fn validate(&self, config: &GeneratorConfig) -> Result<()> {
        Self::from_entries(config, self.to_entries()).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persistence::{decode_container, encode_container};

    #[test]
    fn seeded_init_is_deterministic() {
        let cfg = GeneratorConfig::small();
        let a = encode_container(&init_weights(&cfg, 0).unwrap().to_entries()).unwrap();
        let b = encode_container(&init_weights(&cfg, 0).unwrap().to_entries()).unwrap();
        let c = encode_container(&init_weights(&cfg, 1).unwrap().to_entries()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn entries_round_trip() {
        let cfg = GeneratorConfig::small();
        let w = init_weights(&cfg, 5).unwrap();
        let bytes = encode_container(&w.to_entries()).unwrap();
        let back = GeneratorWeights::<f32>::from_entries(&cfg, decode_container(&bytes).unwrap()).unwrap();
        assert_eq!(back, w);
        assert!(w.validate(&cfg).is_ok());
    }

    #[test]
    fn mismatched_config_rejected() {
        let cfg = GeneratorConfig::small();
        let w = init_weights(&cfg, 5).unwrap();
        let other = GeneratorConfig {
            hidden_channels: 12,
            ..cfg.clone()
        };
        assert!(w.validate(&other).is_err());
        let mut entries = w.to_entries();
        entries.pop();
        let err = GeneratorWeights::<f32>::from_entries(&cfg, entries).unwrap_err();
        assert_eq!(err.code(), "E_MISSING_ENTRY");
    }

    #[test]
    fn fan_in_scaling_gives_unit_variance() {
        // 10^4 output units of a 64-input layer fed all ones
        let mut s = Sampler {
            rng: ChaCha8Rng::seed_from_u64(0),
        };
        let layer: Affine<f64> = s.affine(64, 10_000);
        let y = layer.forward(&[1.0; 64]);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (y.len() - 1) as f64;
        assert!((0.8..=1.2).contains(&var), "{var}");
    }
}
