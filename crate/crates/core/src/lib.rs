//! Image synthesis from thick bi-line features.
//!
//! A feature map `F[c, i, j]` is stored as a row half `R[c, i, :]` and a
//! column half `C[c, j, :]` of thickness `D`, and composed on demand as
//! `F[c, i, j] = Σ_d R[c, i, d] · C[c, j, d]`. Every pixel depends only on
//! its own row and column coordinates, which makes tiled, zoomed and warped
//! renders byte-identical to a monolithic render of the same coordinates.
//!
//! - [`biline`]: the feature type, composition and subsets
//! - [`coords`]: coordinate grids, transforms, Fourier features and warp fields
//! - [`generator`]: mapping network, modulated synthesis blocks, weights
//! - [`renderer`]: monolithic, tiled, warped and per-pixel rendering, PPM/PNG
//! - [`fitter`]: gradient fitting of an image and the rank-`D` optimum
//! - [`bench`]: activation accounting and timing
//! - [`persistence`]: weight container, config and coordinate field files
//! - [`cli`]: the `creps` command line
//!
//! ```
//! use creps::biline::{compose, BilineFeature};
//!
//! let b = BilineFeature::new(1, 2, 3, 1, vec![1.0, 2.0], vec![1.0, 0.5, -1.0]).unwrap();
//! let f = compose(&b);
//! assert_eq!(f.get(0, 1, 1), 1.0);
//! ```
//!
//! Runnable examples live in `examples/`: `compose_biline`, `generate`,
//! `zoom_and_pan`, `tiled_render`, `warp`, `fit_image`, `memory_bench` and
//! `weights_roundtrip`.

pub mod bench;
pub mod biline;
pub mod cli;
pub mod coords;
pub mod error;
pub mod fitter;
pub mod generator;
pub mod persistence;
pub mod renderer;
pub mod scalar;
pub mod selftest;

pub use error::{Error, Result};
