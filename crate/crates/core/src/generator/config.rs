use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the trunk represents its features.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Thick bi-line embeddings composed layer by layer.
    Biline,
    /// Dense per-pixel maps throughout, no decoders.
    Dense,
}

/// Architecture hyper-parameters. Field names double as the JSON keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub latent_dim: usize,
    pub style_dim: usize,
    pub mapping_layers: usize,
    /// Number of synthesis blocks `N`.
    pub num_blocks: usize,
    pub hidden_channels: usize,
    pub residual_channels: usize,
    pub thickness: usize,
    pub fourier_channels: usize,
    /// Standard deviation of the sampled Fourier frequencies.
    pub fourier_sigma: f64,
    pub decoder_widths: Vec<usize>,
    pub refinement_widths: Vec<usize>,
    pub leaky_slope: f64,
    /// Constant factor applied after every LeakyReLU.
    pub activation_gain: f64,
    pub demod_epsilon: f64,
    pub mode: Mode,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            latent_dim: 64,
            style_dim: 64,
            mapping_layers: 2,
            num_blocks: 6,
            hidden_channels: 128,
            residual_channels: 32,
            thickness: 8,
            fourier_channels: 32,
            fourier_sigma: 8.0,
            decoder_widths: vec![32, 64, 128, 64, 32],
            refinement_widths: vec![32, 128, 64],
            leaky_slope: 0.2,
            activation_gain: 1.25,
            demod_epsilon: 1e-8,
            mode: Mode::Biline,
        }
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field: field.to_string(),
        reason: reason.into(),
    }
}

impl GeneratorConfig {
    /// A narrow configuration for tests and quick experiments.
    pub fn small() -> Self {
        Self {
            latent_dim: 16,
            style_dim: 16,
            mapping_layers: 2,
            num_blocks: 3,
            hidden_channels: 16,
            residual_channels: 8,
            thickness: 4,
            fourier_channels: 8,
            fourier_sigma: 2.0,
            decoder_widths: vec![8, 16, 32, 16, 8],
            refinement_widths: vec![8, 32, 16],
            ..Self::default()
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("latent_dim", self.latent_dim),
            ("style_dim", self.style_dim),
            ("mapping_layers", self.mapping_layers),
            ("num_blocks", self.num_blocks),
            ("hidden_channels", self.hidden_channels),
            ("residual_channels", self.residual_channels),
            ("thickness", self.thickness),
            ("fourier_channels", self.fourier_channels),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(invalid(field, "must be >= 1"));
            }
        }
        if self.decoder_widths.len() < 2 {
            return Err(invalid("decoder_widths", "needs at least two widths"));
        }
        if self.decoder_widths.contains(&0) {
            return Err(invalid("decoder_widths", "widths must be >= 1"));
        }
        if self.decoder_widths.first() != Some(&self.residual_channels)
            || self.decoder_widths.last() != Some(&self.residual_channels)
        {
            return Err(invalid(
                "decoder_widths",
                format!(
                    "first and last width must equal residual_channels ({})",
                    self.residual_channels
                ),
            ));
        }
        if self.refinement_widths.len() < 2 {
            return Err(invalid("refinement_widths", "needs at least two widths"));
        }
        if self.refinement_widths.contains(&0) {
            return Err(invalid("refinement_widths", "widths must be >= 1"));
        }
        if self.refinement_widths[0] != self.residual_channels {
            return Err(invalid(
                "refinement_widths",
                format!(
                    "first width must equal residual_channels ({})",
                    self.residual_channels
                ),
            ));
        }
        if !(self.fourier_sigma.is_finite() && self.fourier_sigma > 0.0) {
            return Err(invalid("fourier_sigma", "must be finite and > 0"));
        }
        if !(self.leaky_slope.is_finite() && self.leaky_slope >= 0.0) {
            return Err(invalid("leaky_slope", "must be finite and >= 0"));
        }
        if !(self.activation_gain.is_finite() && self.activation_gain > 0.0) {
            return Err(invalid("activation_gain", "must be finite and > 0"));
        }
        if !(self.demod_epsilon.is_finite() && self.demod_epsilon > 0.0) {
            return Err(invalid("demod_epsilon", "must be finite and > 0"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
