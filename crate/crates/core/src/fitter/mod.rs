//! Fits an image into a thick bi-line representation.
//!
//! Each channel `I` is approximated independently by `F = f^r (f^c)ᵀ` with
//! `f^r ∈ ℝ^{H×D}` and `f^c ∈ ℝ^{W×D}`, minimizing `L = mean((F − I)²)` with
//! the analytic gradients
//!
//! ```text
//! ∂L/∂f^r[i,d] = 2/(H·W) · Σ_j (F_ij − I_ij) · f^c[j,d]
//! ∂L/∂f^c[j,d] = 2/(H·W) · Σ_i (F_ij − I_ij) · f^r[i,d]
//! ```
//!
//! Since `F` has rank at most `D`, the truncated-SVD residual
//! ([`svd_oracle_mse`]) is the global optimum of the same objective.

mod svd;

pub use svd::{power_oracle_mse, singular_values, svd_oracle_mse, top_energies_power};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::biline::{storage_ratio, BilineFeature, FeatureMap};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Optimizer {
    GradientDescent,
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl Optimizer {
    pub const ADAM: Optimizer = Optimizer::Adam {
        beta1: 0.9,
        beta2: 0.999,
        epsilon: 1e-8,
    };
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub thickness: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
    /// Embedding entries start as `N(0, (init_scale · D^(-1/4))²)`, which
    /// makes the initial composed values unit-variance at `init_scale = 1`.
    pub init_scale: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            thickness: 8,
            iterations: 5000,
            learning_rate: 1e-2,
            optimizer: Optimizer::ADAM,
            seed: 0,
            init_scale: 1.0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thickness == 0 {
            return Err(Error::InvalidArgument("thickness must be >= 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be > 0".into()));
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(Error::InvalidArgument("init scale must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct FitResult {
    /// One bi-line channel per image channel.
    pub embeddings: BilineFeature<f64>,
    /// Mean over channels of the MSE before each update.
    pub mse_trace: Vec<f64>,
    /// Mean over channels of the MSE after the last update.
    pub final_mse: f64,
    pub channel_mse: Vec<f64>,
    pub compression_ratio: f64,
}

/// Fit of a single channel.
#[derive(Clone, Debug)]
pub struct ChannelFit {
    /// `[H × D]`
    pub row: Vec<f64>,
    /// `[W × D]`
    pub col: Vec<f64>,
    pub mse_trace: Vec<f64>,
    pub final_mse: f64,
}

/// Loss and gradients for one channel; gradients are `[H × D]` and `[W × D]`.
pub fn loss_and_grad(
    image: &[f64],
    height: usize,
    width: usize,
    thickness: usize,
    row: &[f64],
    col: &[f64],
) -> (f64, Vec<f64>, Vec<f64>) {
    let (h, w, d) = (height, width, thickness);
    let mut col_t = vec![0.0; d * w];
    for j in 0..w {
        for k in 0..d {
            col_t[k * w + j] = col[j * d + k];
        }
    }
    let coef = 2.0 / (h * w) as f64;
    let mut g_row = vec![0.0; h * d];
    let mut g_col_t = vec![0.0; d * w];
    let mut resid = vec![0.0; w];
    let mut sse = 0.0;
    for i in 0..h {
        resid.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..d {
            let a = row[i * d + k];
            for (r, &c) in resid.iter_mut().zip(&col_t[k * w..(k + 1) * w]) {
                *r += a * c;
            }
        }
        for (r, &px) in resid.iter_mut().zip(&image[i * w..(i + 1) * w]) {
            *r -= px;
            sse += *r * *r;
        }
        for k in 0..d {
            let dot: f64 = resid
                .iter()
                .zip(&col_t[k * w..(k + 1) * w])
                .map(|(r, c)| r * c)
                .sum();
            g_row[i * d + k] = coef * dot;
            let a = coef * row[i * d + k];
            for (g, &r) in g_col_t[k * w..(k + 1) * w].iter_mut().zip(&resid) {
                *g += a * r;
            }
        }
    }
    let mut g_col = vec![0.0; w * d];
    for j in 0..w {
        for k in 0..d {
            g_col[j * d + k] = g_col_t[k * w + j];
        }
    }
    (sse / (h * w) as f64, g_row, g_col)
}

/// MSE of the composition `row · colᵀ` against `image`.
pub fn biline_mse(image: &[f64], height: usize, width: usize, thickness: usize, row: &[f64], col: &[f64]) -> f64 {
    let d = thickness;
    let mut sse = 0.0;
    for i in 0..height {
        for j in 0..width {
            let f: f64 = (0..d).map(|k| row[i * d + k] * col[j * d + k]).sum();
            sse += (f - image[i * width + j]).powi(2);
        }
    }
    sse / (height * width) as f64
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
}

fn step(params: &mut [f64], grad: &[f64], state: &mut AdamState, opt: Optimizer, lr: f64, t: usize) {
    match opt {
        Optimizer::GradientDescent => {
            for (p, g) in params.iter_mut().zip(grad) {
                *p -= lr * g;
            }
        }
        Optimizer::Adam {
            beta1,
            beta2,
            epsilon,
        } => {
            let bc1 = 1.0 - beta1.powi(t as i32);
            let bc2 = 1.0 - beta2.powi(t as i32);
            for (((p, g), m), v) in params
                .iter_mut()
                .zip(grad)
                .zip(state.m.iter_mut())
                .zip(state.v.iter_mut())
            {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + epsilon);
            }
        }
    }
}

/// Random embedding pair for a `height × width` channel.
pub fn init_embeddings(height: usize, width: usize, config: &FitConfig, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let std = config.init_scale * (config.thickness as f64).powf(-0.25);
    let normal = Normal::new(0.0, std).expect("finite std");
    let d = config.thickness;
    let row = (0..height * d).map(|_| normal.sample(rng)).collect();
    let col = (0..width * d).map(|_| normal.sample(rng)).collect();
    (row, col)
}

/// Fits one `height × width` channel; deterministic given `seed`.
pub fn fit_channel(image: &[f64], height: usize, width: usize, config: &FitConfig, seed: u64) -> Result<ChannelFit> {
    config.validate()?;
    if height == 0 || width == 0 || image.len() != height * width {
        return Err(Error::InvalidArgument(format!(
            "channel must be a non-empty {height}x{width} array, got {} values",
            image.len()
        )));
    }
    if image.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("input image".into()));
    }
    let d = config.thickness;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut row, mut col) = init_embeddings(height, width, config, &mut rng);
    let mut s_row = AdamState {
        m: vec![0.0; row.len()],
        v: vec![0.0; row.len()],
    };
    let mut s_col = AdamState {
        m: vec![0.0; col.len()],
        v: vec![0.0; col.len()],
    };
    let mut trace = Vec::with_capacity(config.iterations);
    for t in 1..=config.iterations {
        let (mse, g_row, g_col) = loss_and_grad(image, height, width, d, &row, &col);
        if !mse.is_finite() || g_row.iter().chain(&g_col).any(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!(
                "fit diverged at iteration {t} (mse = {mse}); lower the learning rate"
            )));
        }
        trace.push(mse);
        step(&mut row, &g_row, &mut s_row, config.optimizer, config.learning_rate, t);
        step(&mut col, &g_col, &mut s_col, config.optimizer, config.learning_rate, t);
    }
    let final_mse = loss_and_grad(image, height, width, d, &row, &col).0;
    if !final_mse.is_finite() {
        return Err(Error::NonFinite("fit diverged on the final update".into()));
    }
    Ok(ChannelFit {
        row,
        col,
        mse_trace: trace,
        final_mse,
    })
}

/// Fits every channel of a `[C × H × W]` image independently.
pub fn fit_biline(image: &FeatureMap<f64>, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let (c, h, w) = (image.channels, image.height, image.width);
    if c == 0 || h == 0 || w == 0 {
        return Err(Error::InvalidArgument("image must be non-empty".into()));
    }
    let mut seeder = ChaCha8Rng::seed_from_u64(config.seed);
    let seeds: Vec<u64> = (0..c).map(|_| seeder.random()).collect();
    let fits = (0..c)
        .into_par_iter()
        .map(|ch| fit_channel(image.plane(ch), h, w, config, seeds[ch]))
        .collect::<Result<Vec<_>>>()?;
    let d = config.thickness;
    let mut row_half = Vec::with_capacity(c * h * d);
    let mut col_half = Vec::with_capacity(c * w * d);
    for f in &fits {
        row_half.extend_from_slice(&f.row);
        col_half.extend_from_slice(&f.col);
    }
    let mse_trace = (0..config.iterations)
        .map(|t| fits.iter().map(|f| f.mse_trace[t]).sum::<f64>() / c as f64)
        .collect();
    let channel_mse: Vec<f64> = fits.iter().map(|f| f.final_mse).collect();
    Ok(FitResult {
        embeddings: BilineFeature::new(c, h, w, d, row_half, col_half)?,
        mse_trace,
        final_mse: channel_mse.iter().sum::<f64>() / c as f64,
        channel_mse,
        compression_ratio: storage_ratio(d, h, w),
    })
}

/// Channel-averaged rank-`D` optimum for a `[C × H × W]` image.
pub fn image_oracle_mse(image: &FeatureMap<f64>, thickness: usize) -> Result<f64> {
    let mut total = 0.0;
    for c in 0..image.channels {
        total += svd_oracle_mse(image.plane(c), image.height, image.width, thickness)?;
    }
    Ok(total / image.channels as f64)
}

/// Largest relative disagreement between the analytic gradient and central
/// differences (step `1e-5`) over all embedding entries:
/// `|g_a − g_fd| / max(1, |g_a|, |g_fd|)`.
pub fn gradient_check(
    image: &[f64],
    height: usize,
    width: usize,
    thickness: usize,
    row: &[f64],
    col: &[f64],
) -> f64 {
    const STEP: f64 = 1e-5;
    let (_, g_row, g_col) = loss_and_grad(image, height, width, thickness, row, col);
    let loss = |r: &[f64], c: &[f64]| biline_mse(image, height, width, thickness, r, c);
    let rel = |ga: f64, gf: f64| (ga - gf).abs() / 1f64.max(ga.abs()).max(gf.abs());
    let mut worst = 0.0f64;
    let mut r = row.to_vec();
    for k in 0..r.len() {
        let orig = r[k];
        r[k] = orig + STEP;
        let up = loss(&r, col);
        r[k] = orig - STEP;
        let down = loss(&r, col);
        r[k] = orig;
        worst = worst.max(rel(g_row[k], (up - down) / (2.0 * STEP)));
    }
    let mut c = col.to_vec();
    for k in 0..c.len() {
        let orig = c[k];
        c[k] = orig + STEP;
        let up = loss(row, &c);
        c[k] = orig - STEP;
        let down = loss(row, &c);
        c[k] = orig;
        worst = worst.max(rel(g_col[k], (up - down) / (2.0 * STEP)));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_image(h: usize, w: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..h * w).map(|_| rng.random_range(0.0..1.0)).collect()
    }

    #[test]
    fn hand_gradient() {
        let (_, gr, gc) = loss_and_grad(&[0.0; 4], 2, 2, 1, &[1.0, 0.0], &[1.0, 0.0]);
        assert_eq!(gr, vec![0.5, 0.0]);
        assert_eq!(gc, vec![0.5, 0.0]);
    }

    #[test]
    fn zero_point_gradients_vanish() {
        let (l, gr, gc) = loss_and_grad(&[0.0; 64], 8, 8, 2, &[0.0; 16], &[0.0; 16]);
        assert_eq!(l, 0.0);
        assert!(gr.iter().chain(&gc).all(|&g| g == 0.0));
        assert_eq!(gradient_check(&[0.0; 64], 8, 8, 2, &[0.0; 16], &[0.0; 16]), 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let img = random_image(8, 8, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = FitConfig {
            thickness: 2,
            ..FitConfig::default()
        };
        let (r, c) = init_embeddings(8, 8, &cfg, &mut rng);
        assert!(gradient_check(&img, 8, 8, 2, &r, &c) <= 1e-4);
    }

    #[test]
    fn loss_matches_direct_mse() {
        let img = random_image(5, 7, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = FitConfig {
            thickness: 3,
            ..FitConfig::default()
        };
        let (r, c) = init_embeddings(5, 7, &cfg, &mut rng);
        let a = loss_and_grad(&img, 5, 7, 3, &r, &c).0;
        assert!((a - biline_mse(&img, 5, 7, 3, &r, &c)).abs() < 1e-14);
    }

    #[test]
    fn scaled_objective() {
        let img = random_image(6, 6, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cfg = FitConfig {
            thickness: 2,
            ..FitConfig::default()
        };
        let (r, c) = init_embeddings(6, 6, &cfg, &mut rng);
        let m = biline_mse(&img, 6, 6, 2, &r, &c);
        let alpha = 2.5;
        let img2: Vec<f64> = img.iter().map(|v| alpha * v).collect();
        let r2: Vec<f64> = r.iter().map(|v| alpha * v).collect();
        let m2 = biline_mse(&img2, 6, 6, 2, &r2, &c);
        assert!((m2 - alpha * alpha * m).abs() <= 1e-12);
    }

    #[test]
    fn rank_one_image_is_recovered() {
        let u: Vec<f64> = (0..12).map(|i| 0.2 + 0.05 * i as f64).collect();
        let v: Vec<f64> = (0..9).map(|j| 1.0 - 0.08 * j as f64).collect();
        let img: Vec<f64> = u.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
        let cfg = FitConfig {
            thickness: 1,
            iterations: 2000,
            ..FitConfig::default()
        };
        let fit = fit_channel(&img, 12, 9, &cfg, 0).unwrap();
        assert!(fit.final_mse <= 1e-8, "{}", fit.final_mse);
    }

    #[test]
    fn never_beats_the_oracle() {
        let img = random_image(10, 8, 5);
        let cfg = FitConfig {
            thickness: 3,
            iterations: 300,
            ..FitConfig::default()
        };
        let fit = fit_channel(&img, 10, 8, &cfg, 1).unwrap();
        let oracle = svd_oracle_mse(&img, 10, 8, 3).unwrap();
        assert!(fit.final_mse >= oracle - 1e-10);
        assert!(fit.mse_trace.iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn divergence_is_reported() {
        let img = random_image(4, 4, 6);
        let cfg = FitConfig {
            thickness: 2,
            iterations: 200,
            learning_rate: 1e6,
            optimizer: Optimizer::GradientDescent,
            ..FitConfig::default()
        };
        let err = fit_channel(&img, 4, 4, &cfg, 0).unwrap_err();
        assert_eq!(err.code(), "E_NON_FINITE");
    }

    #[test]
    fn empty_and_invalid_inputs() {
        let cfg = FitConfig::default();
        assert!(fit_channel(&[], 0, 0, &cfg, 0).is_err());
        let bad = FitConfig {
            iterations: 0,
            ..cfg
        };
        assert!(fit_channel(&[0.0; 4], 2, 2, &bad, 0).is_err());
    }

    #[test]
    fn multi_channel_is_deterministic() {
        let data = random_image(6, 5, 8).into_iter().chain(random_image(6, 5, 9)).collect();
        let img = FeatureMap::from_vec(2, 6, 5, data).unwrap();
        let cfg = FitConfig {
            thickness: 2,
            iterations: 50,
            ..FitConfig::default()
        };
        let a = fit_biline(&img, &cfg).unwrap();
        let b = fit_biline(&img, &cfg).unwrap();
        assert_eq!(a.embeddings, b.embeddings);
        assert_eq!(a.mse_trace.len(), 50);
        assert_eq!(a.compression_ratio, storage_ratio(2, 6, 5));
    }
}
