//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use blowups::attractor::{attractor_raster, viewport_for};
use blowups::raster::write_points_csv;
use blowups::rifs::{self, ReverseIfs, Window};
use blowups::systems::{self, IfsDescription};
use blowups::tiling::{self, transition_report};
use blowups::tops::{compute_top_field_with, default_min_cells_for, top_words};
use blowups::{Ifs, InfiniteAddress, Point, PriorityOrder, Viewport};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{self, Config};
use crate::figures;
use crate::render::{self, ColorMode, RenderStyle};
use crate::verify::{self, SuiteReport};

/// Verification failed.
pub const EXIT_FAILED: i32 = 1;
/// Bad command line or unusable input.
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "blowups", version, about = "Fractal tops, blowups and top tilings")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads; all available cores when absent.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct IfsArgs {
    /// IFS description file, or a built-in name.
    #[arg(long, default_value = "leaf")]
    pub ifs: String,
    /// Priority order such as 2>1; overrides the file and the config.
    #[arg(long)]
    pub order: Option<String>,
    /// Cells across the attractor; the config value when absent.
    #[arg(long)]
    pub resolution: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Rasterize the attractor.
    Attractor {
        #[command(flatten)]
        ifs: IfsArgs,
        #[arg(long, default_value = "attractor.png")]
        out: PathBuf,
        /// Also write this many chaos-game points as CSV.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Top field at one depth, as PNG with a word-count sidecar.
    Top {
        #[command(flatten)]
        ifs: IfsArgs,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value = "top.png")]
        out: PathBuf,
        /// Also write an SVG with labelled regions.
        #[arg(long)]
        svg: bool,
    },
    /// Partial tiling of a blowup, as SVG plus a manifest.
    Tiling {
        #[command(flatten)]
        ifs: IfsArgs,
        /// Address of the blowup, e.g. (1) or 2(12).
        #[arg(long, default_value = "(1)")]
        address: String,
        #[arg(long)]
        level: usize,
        #[arg(long, default_value = "tiling.svg")]
        out: PathBuf,
        #[command(flatten)]
        style: StyleArgs,
    },
    /// Rasterize the blowup f_{-i|n}(A).
    Blowup {
        #[command(flatten)]
        ifs: IfsArgs,
        #[arg(long, default_value = "(1)")]
        address: String,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value = "blowup.png")]
        out: PathBuf,
    },
    /// Parent, child and new-tile relations between two levels.
    Classify {
        #[command(flatten)]
        ifs: IfsArgs,
        #[arg(long, default_value = "(1)")]
        address: String,
        /// Compare this level with the next.
        #[arg(long)]
        level: usize,
    },
    /// Orbits of the discrete reverse systems.
    Rifs {
        #[arg(long, value_enum)]
        example: RifsExample,
        /// Half-width of the window.
        #[arg(long, default_value_t = 40.0)]
        window: f64,
        /// Project onto y = ρx and report the gaps.
        #[arg(long)]
        project: bool,
        /// Write the orbit as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Fast basin of an attractor on a window four times its box.
    Fastbasin {
        #[command(flatten)]
        ifs: IfsArgs,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value = "fastbasin.png")]
        out: PathBuf,
    },
    /// Run an invariant suite; exit status 1 on any failed check.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[command(flatten)]
        ifs: IfsArgs,
        #[arg(long, default_value = "(1)")]
        address: String,
        /// Deepest transition or level checked; the config value when absent.
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Regenerate every figure.
    Figures {
        /// Output directory; $BLOWUPS_OUT or ./figures when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct StyleArgs {
    #[arg(long, value_enum, default_value = "address-hash")]
    pub color: ColorMode,
    /// Photo for photo-sample colouring.
    #[arg(long)]
    pub photo: Option<PathBuf>,
    /// Outline width in cells.
    #[arg(long, default_value_t = 0.25)]
    pub stroke: f64,
    /// Print tile addresses.
    #[arg(long)]
    pub labels: bool,
    /// Also write a PNG.
    #[arg(long)]
    pub png: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RifsExample {
    /// {2x, 2x - 1} on the integers.
    Integers,
    /// The golden maps on the Fibonacci strip.
    Fib,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// One child per tile, child and new-tile words.
    Theorem5,
    /// Tiles of the blowups of 1̄ reappear at the next level.
    Theorem6,
    /// New-cylinder counts of a single-ratio system.
    Osc,
    /// Blowups of 1̄ against A plus the reverse orbit of 0.
    Decomposition,
    /// Orbit of {0, 1} under {2x, 2x - 1}.
    Integers,
    /// Orbit and projected gaps on the golden strip.
    Fibonacci,
    /// Raster top words against the exact line oracle.
    Tops,
    /// Reverse prefixes of periodic addresses.
    Reversibility,
    All,
}

/// Parses `argv` (program name first) and runs it, returning the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(true) => 0,
        Ok(false) => EXIT_FAILED,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn load_ifs(name: &str) -> Result<IfsDescription> {
    if let Some(ifs) = systems::builtin(name) {
        return Ok(IfsDescription { ifs, order: None });
    }
    let path = Path::new(name);
    if !path.exists() {
        bail!(
            "no IFS file {name}; built-in systems are {}",
            systems::BUILTIN_NAMES.join(", ")
        );
    }
    systems::load(path).with_context(|| format!("loading {name}"))
}

struct Setup {
    ifs: Ifs,
    order: PriorityOrder,
    resolution: usize,
}

fn setup(args: &IfsArgs, cfg: &Config) -> Result<Setup> {
    let desc = load_ifs(&args.ifs)?;
    let order = match args.order.as_ref().or(cfg.order.as_ref()) {
        Some(s) => s.parse::<PriorityOrder>()?,
        None => desc.order_or_default(),
    };
    if order.alphabet() != desc.ifs.len() {
        bail!("order {order} does not match {} maps", desc.ifs.len());
    }
    Ok(Setup {
        ifs: desc.ifs,
        order,
        resolution: args.resolution.unwrap_or(cfg.resolution),
    })
}

fn address(s: &str, ifs: &Ifs) -> Result<InfiniteAddress> {
    let a: InfiniteAddress = s.parse().with_context(|| format!("address {s}"))?;
    a.check_alphabet(ifs.len())?;
    Ok(a)
}

fn base_of(s: &Setup) -> Result<(Viewport, blowups::Raster)> {
    let vp = viewport_for(&s.ifs, s.resolution)?;
    let base = attractor_raster(&s.ifs, &vp);
    Ok((vp, base))
}

fn execute(cli: Cli) -> Result<bool> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(n) = cli.workers {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match cli.command {
        Command::Attractor { ifs, out, points } => {
            let s = setup(&ifs, &cfg)?;
            let (_, base) = base_of(&s)?;
            base.write_png(&out)?;
            if let Some(n) = points {
                let pts = blowups::attractor::chaos_game(&s.ifs, n, cfg.seed, blowups::attractor::DEFAULT_BURN_IN);
                write_points_csv(&pts, out.with_extension("csv"))?;
            }
            println!("{} cells of {} -> {}", base.count(), s.ifs.name(), out.display());
            Ok(true)
        }
        Command::Top { ifs, depth, out, svg } => {
            let s = setup(&ifs, &cfg)?;
            let (_, base) = base_of(&s)?;
            let field = compute_top_field_with(&s.ifs, depth, &base, &s.order, cli.workers)?;
            let set = top_words(&field, default_min_cells_for(&s.ifs, &base, depth));
            field.write_png(&out)?;
            field.write_sidecar(&set, out.with_extension("txt"))?;
            if svg {
                let style = RenderStyle {
                    labels: true,
                    ..RenderStyle::default()
                };
                render::render_top_field(&field, &style, &out.with_extension("svg"), false)?;
            }
            println!("{} top words at depth {depth} -> {}", set.len(), out.display());
            Ok(true)
        }
        Command::Tiling {
            ifs,
            address: a,
            level,
            out,
            style,
        } => {
            let s = setup(&ifs, &cfg)?;
            let i = address(&a, &s.ifs)?;
            let (_, base) = base_of(&s)?;
            let field = compute_top_field_with(&s.ifs, level, &base, &s.order, cli.workers)?;
            let words = top_words(&field, default_min_cells_for(&s.ifs, &base, level));
            let t = tiling::partial_tiling(&s.ifs, &i, level, &field, &words)?;
            let rs = RenderStyle {
                color: style.color,
                photo: style.photo,
                stroke: style.stroke,
                labels: style.labels,
            };
            render::render_tiling(&t, &rs, &out, style.png)?;
            t.write_manifest(out.with_extension("txt"))?;
            println!("{} tiles at level {level} -> {}", t.len(), out.display());
            Ok(true)
        }
        Command::Blowup {
            ifs,
            address: a,
            depth,
            out,
        } => {
            let s = setup(&ifs, &cfg)?;
            let i = address(&a, &s.ifs)?;
            let (_, base) = base_of(&s)?;
            let r = tiling::blowup_region(&s.ifs, &i, depth, &base)?;
            r.write_png(&out)?;
            println!("{} cells -> {}", r.count(), out.display());
            Ok(true)
        }
        Command::Classify {
            ifs,
            address: a,
            level,
        } => {
            let s = setup(&ifs, &cfg)?;
            let i = address(&a, &s.ifs)?;
            let (_, base) = base_of(&s)?;
            let levels = verify::levels_on(&s.ifs, &s.order, &i, &base, level + 1)?;
            let report = transition_report(
                &s.ifs,
                &levels[level],
                &levels[level + 1],
                cfg.tolerances.containment(),
            )?;
            for (parent, children) in &report.children {
                let kids: Vec<String> = children.iter().map(|w| w.to_string()).collect();
                println!("{parent} -> {}", kids.join(" "));
            }
            let new: Vec<String> = report.new_tiles.iter().map(|w| w.to_string()).collect();
            println!("new: {}", new.join(" "));
            println!("reversible: {}", report.reversible);
            for v in &report.violations {
                println!("violation: {v}");
            }
            Ok(report.is_clean())
        }
        Command::Rifs {
            example,
            window,
            project,
            csv,
        } => {
            let (t, seeds, w) = match example {
                RifsExample::Integers => (
                    ReverseIfs::example1(),
                    vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)],
                    Window::interval(-window, window),
                ),
                RifsExample::Fib => (
                    ReverseIfs::example2(),
                    vec![Point::new(0.0, 0.0), Point::new(0.0, 1.0)],
                    Window::square(window),
                ),
            };
            let orbit = rifs::forward_orbit(&t, &seeds, &w, usize::MAX)?;
            println!("{} points in {} generations", orbit.len(), orbit.generations());
            if let Some(path) = csv {
                std::fs::write(&path, orbit.to_csv())?;
            }
            if project {
                let gaps = rifs::fib_projection(&orbit)?;
                for (len, n) in &gaps.lengths {
                    println!("gap {len:.12} x {n}");
                }
                let (a, b) = gaps.main_lengths();
                println!("main lengths {a:.12} {b:.12} ratio {:.12}", b / a);
                println!("count ratio {:.6}", gaps.count_ratio());
            }
            Ok(true)
        }
        Command::Fastbasin { ifs, depth, out } => {
            let s = setup(&ifs, &cfg)?;
            let (_, base) = base_of(&s)?;
            let b = blowups::attractor::bounds(&s.ifs);
            let side = (b.hi.x - b.lo.x).max(b.hi.y - b.lo.y);
            let c = Point::new((b.lo.x + b.hi.x) / 2.0, (b.lo.y + b.hi.y) / 2.0);
            let window = Viewport::square(
                Point::new(c.x - 2.0 * side, c.y - 2.0 * side),
                Point::new(c.x + 2.0 * side, c.y + 2.0 * side),
                s.resolution,
            )?;
            let basin = rifs::fast_basin(&s.ifs, &window, depth, &base)?;
            basin.write_png(&out)?;
            println!("{} cells -> {}", basin.count(), out.display());
            Ok(true)
        }
        Command::Verify {
            suite,
            ifs,
            address: a,
            depth,
        } => {
            let s = setup(&ifs, &cfg)?;
            let i = address(&a, &s.ifs)?;
            let depth = depth.unwrap_or(cfg.depth);
            let report = run_suite(suite, &s, &i, depth, &cfg)?;
            println!("{report}");
            Ok(report.passed())
        }
        Command::Figures { out } => {
            let dir = config::out_dir(out, "figures");
            let files = figures::generate(&cfg, &dir)?;
            for f in &files {
                println!("{}", f.display());
            }
            Ok(true)
        }
    }
}

fn run_suite(suite: Suite, s: &Setup, i: &InfiniteAddress, depth: usize, cfg: &Config) -> Result<SuiteReport> {
    let tol = &cfg.tolerances;
    let exact_depth = if s.ifs.is_one_dimensional() { cfg.exact_depth } else { 0 };
    Ok(match suite {
        Suite::Theorem5 => verify::tile_structure(&s.ifs, &s.order, i, s.resolution, depth, exact_depth, tol.containment())?,
        Suite::Theorem6 => verify::nesting(&s.ifs, &s.order, s.resolution, depth, exact_depth)?,
        Suite::Osc => verify::osc(&s.ifs, i, depth)?,
        Suite::Decomposition => verify::decomposition(&s.ifs, s.resolution, depth, tol.hausdorff_cells)?,
        Suite::Integers => verify::integers(64)?,
        Suite::Fibonacci => verify::fibonacci(100.0, tol.gap, tol.count_ratio)?,
        Suite::Tops => verify::tops_consistency(&s.ifs, &s.order, s.resolution, depth)?,
        Suite::Reversibility => {
            let addrs: Vec<InfiniteAddress> = ["(1)", "(2)", "(12)", "(21)"]
                .iter()
                .map(|a| a.parse().expect("valid address"))
                .filter(|a: &InfiniteAddress| a.check_alphabet(s.ifs.len()).is_ok())
                .collect();
            verify::reversibility(&s.ifs, &s.order, &addrs, depth)?
        }
        Suite::All => {
            let mut all = SuiteReport::new(format!("all {}", s.ifs.name()));
            all.extend(verify::tile_structure(&s.ifs, &s.order, i, s.resolution, depth, exact_depth, tol.containment())?);
            all.extend(verify::nesting(&s.ifs, &s.order, s.resolution, depth, exact_depth)?);
            if s.ifs.is_one_dimensional() {
                all.extend(verify::tops_consistency(&s.ifs, &s.order, s.resolution, depth)?);
            }
            if rifs::translation_family(&s.ifs).is_ok() {
                all.extend(verify::decomposition(&s.ifs, s.resolution, depth, tol.hausdorff_cells)?);
            }
            all.extend(verify::integers(64)?);
            all.extend(verify::fibonacci(100.0, tol.gap, tol.count_ratio)?);
            all
        }
    })
}
