//! Command-line front end for the `creps` binary.
//!
//! Exit codes: 0 success, 1 usage or invalid input, 2 I/O or file format,
//! 3 numeric failure (divergence, memory budget, failed self-test).

use std::ffi::OsString;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{run_bench, BenchPlan, DEFAULT_BUDGET};
use crate::coords::{make_coord_field, smooth_displacement, FieldKind, Transform};
use crate::error::{Error, Result};
use crate::fitter::{fit_biline, image_oracle_mse, FitConfig, Optimizer};
use crate::generator::{Generator, GeneratorConfig, GeneratorWeights, Mode};
use crate::persistence::{load_config, load_container, save_container, save_json, write_trace_csv, Entry};
use crate::renderer::{read_image, render, render_tiled, render_warped, write_image, Latent, RenderRequest};
use crate::selftest::run_selftest;

#[derive(Parser, Debug)]
#[command(name = "creps", version, about = "Scale-equivariant bi-line image synthesis and fitting")]
pub struct Cli {
    /// Worker threads: a positive count or `max`.
    #[arg(long, global = true, default_value = "max")]
    pub threads: Threads,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Threads {
    Max,
    Count(usize),
}

impl FromStr for Threads {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "max" {
            return Ok(Threads::Max);
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Threads::Count(n)),
            _ => Err(format!("expected a positive integer or `max`, got `{s}`")),
        }
    }
}

/// `HxW`, both at least 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Resolution {
    pub height: usize,
    pub width: usize,
}

impl FromStr for Resolution {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parse = |t: &str| t.trim().parse::<usize>().ok().filter(|&v| v >= 1);
        let parsed = match s.split_once(['x', 'X']) {
            Some((h, w)) => parse(h).zip(parse(w)),
            None => parse(s).map(|v| (v, v)),
        };
        parsed
            .map(|(height, width)| Resolution { height, width })
            .ok_or_else(|| format!("expected HxW with both sides >= 1, got `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SynthesisMode {
    Biline,
    Dense,
}

impl From<SynthesisMode> for Mode {
    fn from(m: SynthesisMode) -> Mode {
        match m {
            SynthesisMode::Biline => Mode::Biline,
            SynthesisMode::Dense => Mode::Dense,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Generator config (JSON); defaults apply when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Weight container; initialized from --seed when absent.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Seed for weight initialization and, unless --latent-seed is given, the latent.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub latent_seed: Option<u64>,
    /// Override the config's synthesis mode.
    #[arg(long)]
    pub synthesis: Option<SynthesisMode>,
}

#[derive(Args, Debug, Clone)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output resolution `HxW`.
    #[arg(long, default_value = "256x256")]
    pub res: Resolution,
    /// Coordinate scale; values above 1 zoom out.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub scale: f64,
    /// Column (horizontal) shift in normalized coordinates.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub shift_x: f64,
    /// Row (vertical) shift in normalized coordinates.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub shift_y: f64,
    /// Activation memory budget per synthesis call, in MiB.
    #[arg(long)]
    pub budget_mib: Option<u64>,
    /// Output image, `.ppm` or `.png`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WarpKind {
    Rotate,
    Elastic,
    Custom,
}

#[derive(Args, Debug, Clone)]
pub struct WarpArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub mode: WarpKind,
    /// Rotation angle in degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub angle: f64,
    /// Peak elastic displacement in normalized coordinates.
    #[arg(long, default_value_t = 0.1)]
    pub amplitude: f64,
    /// Seed of the elastic displacement.
    #[arg(long, default_value_t = 0)]
    pub field_seed: u64,
    /// Coordinate field file for `--mode custom`.
    #[arg(long)]
    pub field: Option<PathBuf>,
    #[arg(long, default_value = "256x256")]
    pub res: Resolution,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct FitArgs {
    /// Input image, `.ppm` or `.png`.
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub thickness: usize,
    #[arg(long, default_value_t = 5000)]
    pub iters: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub lr: f64,
    /// Plain gradient descent instead of Adam.
    #[arg(long)]
    pub gd: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_embeddings: Option<PathBuf>,
    #[arg(long)]
    pub out_trace: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated resolutions, `N` or `HxW`.
    #[arg(long, value_delimiter = ',', default_value = "256,512")]
    pub resolutions: Vec<Resolution>,
    #[arg(long, value_delimiter = ',', default_value = "biline,dense")]
    pub modes: Vec<SynthesisMode>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub batches: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    /// Allocation budget in MiB; larger cells become OOM rows.
    #[arg(long)]
    pub budget_mib: Option<u64>,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct InitArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Render one image.
    Generate(GenerateArgs),
    /// Render patch by patch; identical bytes to `generate`.
    Tile {
        #[command(flatten)]
        args: GenerateArgs,
        /// Tile side in pixels.
        #[arg(long)]
        tile: usize,
    },
    /// Render through a warped coordinate field by diagonal sampling.
    Warp(WarpArgs),
    /// Fit an image with a thick bi-line and compare against the rank-D optimum.
    Fit(FitArgs),
    /// Time bi-line versus dense synthesis and report activation counts.
    Bench(BenchArgs),
    /// Run the built-in oracle checks.
    Selftest,
    /// Write deterministic initial weights to a container.
    InitWeights(InitArgs),
}

/// Maps an error to its exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_)
        | Error::ShapeMismatch { .. }
        | Error::IndexOutOfRange { .. }
        | Error::InvalidConfig { .. }
        | Error::ConfigParse(_) => 1,
        Error::Io { .. } | Error::Format(_) | Error::UnsupportedFormat(_) | Error::Container(_) => 2,
        Error::NonFinite(_) | Error::MemoryBudget { .. } => 3,
    }
}

fn config_from(path: &Option<PathBuf>) -> Result<GeneratorConfig> {
    match path {
        Some(p) => load_config(p),
        None => Ok(GeneratorConfig::default()),
    }
}

fn load_generator(m: &ModelArgs) -> Result<Generator<f32>> {
    let mut config = config_from(&m.config)?;
    if let Some(mode) = m.synthesis {
        config.mode = mode.into();
    }
    match &m.weights {
        Some(p) => {
            let weights = GeneratorWeights::from_entries(&config, load_container(p)?)?;
            Generator::new(config, weights)
        }
        None => Generator::init(config, m.seed),
    }
}

fn request(a: &GenerateArgs) -> Result<RenderRequest> {
    let transform = Transform::new(a.shift_y, a.shift_x, a.scale)?;
    let mut req = RenderRequest::new(
        Latent::Seed(a.model.latent_seed.unwrap_or(a.model.seed)),
        a.res.height,
        a.res.width,
    )
    .with_transform(transform);
    if let Some(mib) = a.budget_mib {
        req.memory_budget = mib << 20;
    }
    Ok(req)
}

fn cmd_generate(a: &GenerateArgs, tile: Option<usize>) -> Result<()> {
    let gen = load_generator(&a.model)?;
    let mut req = request(a)?;
    let start = Instant::now();
    let img = match tile {
        Some(t) => {
            req = req.with_tile(t);
            render_tiled(&gen, &req)?
        }
        None => render(&gen, &req)?,
    };
    let secs = start.elapsed().as_secs_f64();
    write_image(&img, &a.out)?;
    println!(
        "rendered {}x{} ({:?}) in {secs:.3} s -> {}",
        img.height,
        img.width,
        gen.config().mode,
        a.out.display()
    );
    Ok(())
}

fn cmd_warp(a: &WarpArgs) -> Result<()> {
    let gen = load_generator(&a.model)?;
    let (h, w) = (a.res.height, a.res.width);
    let kind = match a.mode {
        WarpKind::Rotate => FieldKind::Rotation(a.angle.to_radians()),
        WarpKind::Elastic => {
            let (d_row, d_col) = smooth_displacement(h, w, a.amplitude, a.field_seed);
            FieldKind::Elastic { d_row, d_col }
        }
        WarpKind::Custom => FieldKind::Custom(
            a.field
                .clone()
                .ok_or_else(|| Error::InvalidArgument("--mode custom needs --field FILE".into()))?,
        ),
    };
    let field = make_coord_field(&kind, h, w)?;
    let latent = Latent::Seed(a.model.latent_seed.unwrap_or(a.model.seed));
    let start = Instant::now();
    let img = render_warped(&gen, &latent, &field)?;
    let secs = start.elapsed().as_secs_f64();
    write_image(&img, &a.out)?;
    println!("warped {h}x{w} in {secs:.3} s -> {}", a.out.display());
    Ok(())
}

fn cmd_fit(a: &FitArgs) -> Result<()> {
    let image = read_image(&a.image)?;
    let config = FitConfig {
        thickness: a.thickness,
        iterations: a.iters,
        learning_rate: a.lr,
        optimizer: if a.gd {
            Optimizer::GradientDescent
        } else {
            Optimizer::ADAM
        },
        seed: a.seed,
        ..FitConfig::default()
    };
    if a.thickness > image.height.min(image.width) {
        return Err(Error::InvalidArgument(format!(
            "thickness {} exceeds min(H, W) = {}",
            a.thickness,
            image.height.min(image.width)
        )));
    }
    let start = Instant::now();
    let fit = fit_biline(&image, &config)?;
    let secs = start.elapsed().as_secs_f64();
    let oracle = image_oracle_mse(&image, a.thickness)?;
    println!("image: {}x{}x{}", image.height, image.width, image.channels);
    println!("thickness: {}", a.thickness);
    println!("iterations: {} ({secs:.2} s)", a.iters);
    println!("final_mse: {:.6e}", fit.final_mse);
    println!("oracle_mse: {oracle:.6e}");
    println!("storage_ratio: {:.6}", fit.compression_ratio);
    if let Some(p) = &a.out_embeddings {
        let e = &fit.embeddings;
        let f32s = |v: &[f64]| v.iter().map(|&x| x as f32).collect();
        save_container(
            &[
                Entry::new("fit.row", vec![e.channels, e.height, e.thickness], f32s(&e.row_half)),
                Entry::new("fit.col", vec![e.channels, e.width, e.thickness], f32s(&e.col_half)),
            ],
            p,
        )?;
    }
    if let Some(p) = &a.out_trace {
        write_trace_csv(&fit.mse_trace, p)?;
    }
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let config = config_from(&a.config)?;
    let plan = BenchPlan {
        resolutions: a.resolutions.iter().map(|r| (r.height, r.width)).collect(),
        modes: a.modes.iter().map(|&m| m.into()).collect(),
        batches: a.batches.clone(),
        repeats: a.repeats,
        budget: a.budget_mib.map_or(DEFAULT_BUDGET, |m| m << 20),
    };
    let report = run_bench(&config, &plan)?;
    print!("{}", report.table());
    if let Some(p) = &a.json {
        save_json(&report, p)?;
    }
    Ok(())
}

fn cmd_selftest() -> Result<bool> {
    let checks = run_selftest();
    for c in &checks {
        println!("[{}] {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn cmd_init(a: &InitArgs) -> Result<()> {
    let config = config_from(&a.config)?;
    let gen = Generator::init(config, a.seed)?;
    save_container(&gen.weights().to_entries(), &a.out)?;
    println!(
        "wrote {} parameters -> {}",
        gen.weights().param_count(),
        a.out.display()
    );
    Ok(())
}

fn dispatch(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Generate(a) => cmd_generate(a, None)?,
        Command::Tile { args, tile } => cmd_generate(args, Some(*tile))?,
        Command::Warp(a) => cmd_warp(a)?,
        Command::Fit(a) => cmd_fit(a)?,
        Command::Bench(a) => cmd_bench(a)?,
        Command::Selftest => return Ok(if cmd_selftest()? { 0 } else { 3 }),
        Command::InitWeights(a) => cmd_init(a)?,
    }
    Ok(0)
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let threads = match cli.threads {
        Threads::Max => std::thread::available_parallelism().map_or(1, |n| n.get()),
        Threads::Count(n) => n,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {threads} worker threads: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(&cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            exit_code(&e)
        }
    }
}
