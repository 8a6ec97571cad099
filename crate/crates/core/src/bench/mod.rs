//! Activation-memory accounting and timing for bi-line versus dense synthesis.
//!
//! [`count_activations`] replays the buffer lifetimes of one synthesis call
//! without running it. Every intermediate array the pipeline allocates is
//! counted in elements, and the maximum simultaneously live total is the
//! peak. The trunk count sums the buffers produced by the Fourier input,
//! the synthesis blocks and the projections.

pub mod alloc;

use std::time::Instant;

use serde::Serialize;

use crate::coords::Transform;
use crate::error::{Error, Result};
use crate::generator::{sample_latent, Generator, GeneratorConfig, Mode};
use crate::renderer::synthesize_grid;

pub use alloc::TrackingAllocator;

/// Default allocation budget for a single synthesis, in bytes.
pub const DEFAULT_BUDGET: u64 = 4 << 30;

/// Element counts for one `H × W` synthesis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ActivationCount {
    /// Sum of trunk buffer sizes.
    pub trunk: u64,
    /// Sum of every intermediate buffer, trunk and fusion/refinement alike.
    pub total: u64,
    /// Largest number of elements alive at once.
    pub peak: u64,
}

impl ActivationCount {
    pub fn peak_bytes(&self, element_bytes: usize) -> u64 {
        self.peak * element_bytes as u64
    }
}

#[derive(Default)]
struct Ledger {
    live: u64,
    peak: u64,
    total: u64,
    trunk: u64,
}

impl Ledger {
    fn alloc(&mut self, n: u64) {
        self.live += n;
        self.total += n;
        self.peak = self.peak.max(self.live);
    }

    fn alloc_trunk(&mut self, n: u64) {
        self.trunk += n;
        self.alloc(n);
    }

    fn free(&mut self, n: u64) {
        self.live -= n;
    }

    /// A chain of pixel-wise layers that consumes its input: each output is
    /// allocated while its input is still alive, then the input is dropped.
    fn chain(&mut self, widths: &[usize], n: u64) {
        for w in widths.windows(2) {
            self.alloc(w[1] as u64 * n);
            self.free(w[0] as u64 * n);
        }
    }

    /// Two-layer block; `trunk` routes the counts into the trunk total.
    fn block(&mut self, c_in: usize, c_out: usize, n: u64, trunk: bool) {
        for (a, b) in [(c_in, c_out), (c_out, c_out)] {
            if trunk {
                self.alloc_trunk(b as u64 * n);
            } else {
                self.alloc(b as u64 * n);
            }
            self.free(a as u64 * n);
        }
    }

    fn refine(&mut self, config: &GeneratorConfig, n: u64) {
        let widths = &config.refinement_widths;
        for (r, w) in widths.windows(2).enumerate() {
            self.block(w[0], w[1], n, false);
            self.alloc(3 * n);
            if r > 0 {
                self.free(3 * n);
            }
        }
        // the fused map entering the refinement was consumed by the first
        // block; the last stage's activations are released on return
        self.free(*widths.last().expect("validated") as u64 * n);
    }
}

/// Analytic activation accounting for one `height × width` synthesis.
pub fn count_activations(config: &GeneratorConfig, mode: Mode, height: usize, width: usize) -> ActivationCount {
    let n = (height * width) as u64;
    let (cf, ch, rc) = (
        config.fourier_channels,
        config.hidden_channels,
        config.residual_channels as u64,
    );
    let mut m = Ledger::default();
    match mode {
        Mode::Biline => {
            let d = config.thickness as u64;
            let (h, w) = (height as u64, width as u64);
            // row and column halves are separate buffers of the same width
            let halves = |m: &mut Ledger, c: usize, trunk: bool| {
                for len in [h, w] {
                    if trunk {
                        m.alloc_trunk(c as u64 * len * d);
                    } else {
                        m.alloc(c as u64 * len * d);
                    }
                }
            };
            let free_halves = |m: &mut Ledger, c: usize| m.free(c as u64 * (h + w) * d);
            halves(&mut m, cf, true);
            for l in 0..config.num_blocks {
                let c_in = if l == 0 { cf } else { ch };
                halves(&mut m, ch, true);
                free_halves(&mut m, c_in);
                halves(&mut m, ch, true);
                free_halves(&mut m, ch);
                if l > 0 {
                    m.chain(&config.decoder_widths, n);
                }
                halves(&mut m, config.residual_channels, true);
                // compose: transposed column half, then the dense output
                m.alloc(rc * d * w);
                m.alloc(rc * n);
                m.free(rc * d * w);
                free_halves(&mut m, config.residual_channels);
                if l > 0 {
                    m.free(rc * n);
                }
            }
            free_halves(&mut m, ch);
            m.chain(&config.decoder_widths, n);
        }
        Mode::Dense => {
            m.alloc_trunk(cf as u64 * n);
            for l in 0..config.num_blocks {
                let c_in = if l == 0 { cf } else { ch };
                m.block(c_in, ch, n, true);
                m.alloc_trunk(rc * n);
                if l > 0 {
                    m.free(rc * n);
                }
            }
            m.free(ch as u64 * n);
        }
    }
    m.refine(config, n);
    ActivationCount {
        trunk: m.trunk,
        total: m.total,
        peak: m.peak,
    }
}

/// Checks that one synthesis at `height × width` fits the byte budget.
pub fn check_budget(config: &GeneratorConfig, height: usize, width: usize, budget: u64) -> Result<()> {
    let required = count_activations(config, config.mode, height, width).peak_bytes(4);
    if required > budget {
        return Err(Error::MemoryBudget { required, budget });
    }
    Ok(())
}

fn mode_name<S: serde::Serializer>(mode: &Mode, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(match mode {
        Mode::Biline => "biline",
        Mode::Dense => "dense",
    })
}

/// One `(mode, resolution, batch)` measurement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    #[serde(serialize_with = "mode_name")]
    pub mode: Mode,
    #[serde(rename = "H")]
    pub height: usize,
    #[serde(rename = "W")]
    pub width: usize,
    pub batch: usize,
    pub params: usize,
    /// Peak live elements for the batch: one synthesis in flight plus the
    /// finished RGB outputs of the earlier batch members.
    pub activation_elements: u64,
    pub trunk_elements: u64,
    pub bytes_est: u64,
    /// `None` when the estimate exceeds the budget (an OOM row).
    pub time_s_median: Option<f64>,
    pub repeats: usize,
    pub throughput_px_per_s: Option<f64>,
}

impl BenchRow {
    pub fn is_oom(&self) -> bool {
        self.time_s_median.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub threads: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    /// Aligned plain-text table.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<7} {:>6} {:>6} {:>5} {:>9} {:>14} {:>12} {:>12} {:>14}\n",
            "mode", "H", "W", "batch", "params", "activations", "MiB est", "median s", "px/s"
        );
        for r in &self.rows {
            let mode = match r.mode {
                Mode::Biline => "biline",
                Mode::Dense => "dense",
            };
            let (t, tp) = match (r.time_s_median, r.throughput_px_per_s) {
                (Some(t), Some(tp)) => (format!("{t:.4}"), format!("{tp:.0}")),
                _ => ("OOM".to_string(), "-".to_string()),
            };
            out.push_str(&format!(
                "{:<7} {:>6} {:>6} {:>5} {:>9} {:>14} {:>12.1} {:>12} {:>14}\n",
                mode,
                r.height,
                r.width,
                r.batch,
                r.params,
                r.activation_elements,
                r.bytes_est as f64 / (1u64 << 20) as f64,
                t,
                tp
            ));
        }
        out.push_str(&format!("threads: {}\n", self.threads));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Clone, Debug)]
pub struct BenchPlan {
    pub resolutions: Vec<(usize, usize)>,
    pub modes: Vec<Mode>,
    pub batches: Vec<usize>,
    pub repeats: usize,
    pub budget: u64,
}

impl Default for BenchPlan {
    fn default() -> Self {
        Self {
            resolutions: vec![(256, 256), (512, 512)],
            modes: vec![Mode::Biline, Mode::Dense],
            batches: vec![1],
            repeats: 3,
            budget: DEFAULT_BUDGET,
        }
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2.0
    }
}

/// Times synthesis for every `(mode, resolution, batch)` in `plan`.
///
/// Weights and latents come from seed 0. Each cell gets one untimed warm-up
/// run, then `repeats` timed runs whose median is reported. Cells whose
/// estimated activation bytes exceed the budget are reported as OOM rows
/// without running.
pub fn run_bench(config: &GeneratorConfig, plan: &BenchPlan) -> Result<BenchReport> {
    if plan.repeats < 3 {
        return Err(Error::InvalidArgument("bench needs at least 3 repeats".into()));
    }
    if plan.resolutions.iter().any(|&(h, w)| h == 0 || w == 0) || plan.batches.contains(&0) {
        return Err(Error::InvalidArgument("resolutions and batch sizes must be >= 1".into()));
    }
    let base = Generator::init(config.clone(), 0)?;
    let params = base.weights().param_count();
    let mut rows = Vec::new();
    for &mode in &plan.modes {
        let gen = base.with_mode(mode);
        for &(h, w) in &plan.resolutions {
            for &batch in &plan.batches {
                let count = count_activations(config, mode, h, w);
                let activation_elements = count.peak + (batch as u64 - 1) * 3 * (h * w) as u64;
                let bytes_est = activation_elements * 4;
                let mut row = BenchRow {
                    mode,
                    height: h,
                    width: w,
                    batch,
                    params,
                    activation_elements,
                    trunk_elements: count.trunk,
                    bytes_est,
                    time_s_median: None,
                    repeats: plan.repeats,
                    throughput_px_per_s: None,
                };
                if bytes_est <= plan.budget {
                    let styles = (0..batch as u64)
                        .map(|k| {
                            let z: Vec<f32> = sample_latent(config.latent_dim, k)
                                .into_iter()
                                .map(|v| v as f32)
                                .collect();
                            gen.prepare(&gen.map_latent(&z)?)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let run = || -> Result<f64> {
                        let start = Instant::now();
                        let mut outs = Vec::with_capacity(batch);
                        for s in &styles {
                            outs.push(synthesize_grid(s, mode, h, w, &Transform::IDENTITY)?);
                        }
                        std::hint::black_box(&outs);
                        Ok(start.elapsed().as_secs_f64())
                    };
                    run()?;
                    let mut times = (0..plan.repeats).map(|_| run()).collect::<Result<Vec<_>>>()?;
                    let t = median(&mut times).max(f64::MIN_POSITIVE);
                    row.time_s_median = Some(t);
                    row.throughput_px_per_s = Some((batch * h * w) as f64 / t);
                }
                rows.push(row);
            }
        }
    }
    Ok(BenchReport {
        threads: rayon::current_num_threads(),
        rows,
    })
}
