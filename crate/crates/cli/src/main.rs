mod output;
mod render;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use favlab_core::counting::{avoidance_count, h2_length_bound, removal_recursion};
use favlab_core::expr::Expr;
use favlab_core::favard::{favard_sweep, quadrature_angles};
use favlab_core::hull::{certified_hull, ConvexBody};
use favlab_core::ifs::DEFAULT_LEVEL_CAP;
use favlab_core::projection::{density_profile, density_witness, level_measure, visibility_estimate};
use favlab_core::relclose::{double_family, find_pair, power_family, RelCloseCertificate};
use favlab_core::rotation::{diophantine_profile, epsilon_net, DEFAULT_NET_BOUND};
use favlab_core::schedule::{bound_curves, fit_decay, growth_threshold, schedule};
use favlab_core::{Error, Ifs, Point, Word};

use output::{config_hash, csv_header, emit};
use render::{render_svg, RenderOptions};

/// Hull refinement depth behind `--hull`.
const HULL_DEPTH: usize = 6;
/// Directions drawn as bar rows in `favard --svg`.
const SVG_BAR_ROWS: usize = 8;
/// Deepest level drawn as a point cloud in `favard --svg`.
const SVG_MAX_DEPTH: usize = 7;
/// Radii in the `density` profile.
const DENSITY_RADII: usize = 6;
/// Largest number of radius doublings skipped to reach a resolvable radius.
const DENSITY_MAX_DOUBLINGS: usize = 2048;

#[derive(Debug, Parser)]
#[command(name = "favlab", version, about = "Projections, relatively close words and Favard length of planar self-similar sets")]
struct Cli {
    /// IFS description file (JSON).
    #[arg(long, global = true)]
    ifs: Option<PathBuf>,
    /// Seed recorded in every CSV header.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Similarity dimension of the system.
    Dim,
    /// SVG of the level cover.
    Render {
        #[arg(long, default_value_t = 6)]
        depth: usize,
        /// Draw the projection onto this direction (radians) under the picture.
        #[arg(long)]
        theta: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Projection lengths of level covers and their Favard integrals.
    Favard(FavardArgs),
    /// Fits and bounds for a Favard sweep.
    Decay {
        #[command(subcommand)]
        action: DecayAction,
    },
    /// Families of relatively close words.
    Relclose {
        #[command(subcommand)]
        action: RelcloseAction,
    },
    /// Projected-mass density witness for a certificate.
    Density {
        #[arg(long)]
        theta: String,
        /// Level of the atomic measure behind the density profile.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        cert: PathBuf,
    },
    /// Arc-cover sums of the radial projection from a point.
    Visible {
        #[arg(long)]
        ax: f64,
        #[arg(long)]
        ay: f64,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        n_min: usize,
        /// Disks lying within this distance of the point are dropped.
        #[arg(long, default_value_t = 0.0)]
        exclusion: f64,
    },
    /// Continued-fraction profile of a real number.
    Dioph {
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        nmax: u64,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
    },
    /// Smallest orbit of a rotation forming an ε-net.
    Net {
        #[arg(long)]
        theta_over_pi: String,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
    },
    /// Counting surrogates.
    Count {
        #[command(subcommand)]
        action: CountAction,
    },
    /// The scale schedule s(n), L_n, ρ_n and exponent B.
    Schedule(ScheduleArgs),
}

#[derive(Debug, Args)]
struct FavardArgs {
    #[arg(long)]
    n: usize,
    /// Sweep levels n..=n_max.
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long, default_value_t = 64)]
    angles: usize,
    /// Use a certified polygon hull instead of the enclosing disk.
    #[arg(long)]
    hull: bool,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Copy)]
struct ScheduleArgs {
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    #[arg(long, default_value_t = 2.0)]
    d: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
}

#[derive(Debug, Subcommand)]
enum DecayAction {
    Fit {
        /// CSV written by `favard`.
        #[arg(long)]
        csv: PathBuf,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[arg(long, default_value_t = 1.0)]
        c_low: f64,
        #[arg(long, default_value_t = 1.0)]
        c_ls: f64,
        #[arg(long, default_value_t = 1.0)]
        a_ls: f64,
    },
}

#[derive(Debug, Subcommand)]
enum RelcloseAction {
    Find {
        #[arg(long)]
        eps: f64,
        /// Target angle as a function of `theta`.
        #[arg(long, default_value = "0")]
        phi: String,
        #[arg(long, default_value_t = 12)]
        budget: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Double {
        #[arg(long)]
        cert: PathBuf,
        /// Defaults to 7 times the certificate's tolerance.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 12)]
        budget: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Power {
        #[arg(long)]
        u: String,
        #[arg(long)]
        v: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum CountAction {
    Avoid {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        s: u32,
        #[arg(long)]
        blocks: u32,
    },
    Removal {
        #[arg(long)]
        target: String,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value = "0")]
        phi: String,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 1 << 22)]
        cap: usize,
    },
}

enum Failure {
    Usage(String),
    Domain(Error),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::WordParse(_) | Error::Expr(_) => Failure::Usage(format!("{}: {e}", e.code())),
            e => Failure::Domain(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

struct Context {
    ifs_path: Option<PathBuf>,
    ifs_bytes: Option<Vec<u8>>,
    seed: u64,
}

impl Context {
    fn ifs(&self) -> std::result::Result<Ifs, Failure> {
        let bytes = self
            .ifs_bytes
            .as_ref()
            .ok_or_else(|| Failure::Usage("usage: this command needs --ifs <file>".into()))?;
        let text = std::str::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))?;
        Ok(favlab_core::config::parse_ifs(text)?)
    }

    fn header(&self) -> String {
        csv_header(&config_hash(self.ifs_bytes.as_deref()), self.seed)
    }
}

fn constant(text: &str) -> std::result::Result<f64, Failure> {
    Ok(Expr::parse(text)?.value()?)
}

fn read_text(path: &Path) -> std::result::Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())).into())
}

fn parse_word(text: &str) -> std::result::Result<Word, Failure> {
    Ok(text.parse::<Word>()?)
}

fn emit_cert(cert: &RelCloseCertificate, out: Option<&Path>) -> Outcome {
    let mut text = cert.to_json();
    text.push('\n');
    Ok(emit(out, &text)?)
}

fn run(cli: Cli) -> Outcome {
    let ifs_bytes = match &cli.ifs {
        Some(p) => Some(std::fs::read(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let ctx = Context {
        ifs_path: cli.ifs.clone(),
        ifs_bytes,
        seed: cli.seed,
    };
    eprintln!(
        "favlab {} ifs={:?} config={} seed={} command={:?}",
        output::VERSION,
        ctx.ifs_path,
        config_hash(ctx.ifs_bytes.as_deref()),
        ctx.seed,
        cli.command
    );
    match cli.command {
        Command::Dim => {
            let gamma = ctx.ifs()?.gamma();
            println!("gamma {:?}", (gamma * 1e12).round() / 1e12);
        }
        Command::Render { depth, theta, out } => {
            let ifs = ctx.ifs()?;
            let bar_angles = match theta {
                Some(t) => vec![constant(&t)?],
                None => Vec::new(),
            };
            let opts = RenderOptions {
                depth,
                bar_angles,
                bar_level: depth,
            };
            emit(out.as_deref(), &render_svg(&ifs, &opts)?)?;
        }
        Command::Favard(args) => run_favard(&ctx, &args)?,
        Command::Decay {
            action:
                DecayAction::Fit {
                    csv,
                    schedule: sa,
                    c_low,
                    c_ls,
                    a_ls,
                },
        } => {
            let ifs = ctx.ifs()?;
            let samples = read_summary(&read_text(&csv)?)?;
            let fit = fit_decay(&samples)?;
            let sched = schedule(&ifs, sa.n, sa.c1, sa.k, sa.d, sa.delta)?;
            let (n0, l0) = fit.samples[0];
            // theorem curve calibrated to pass through the first fitted sample
            let a = l0 * (n0 as f64).ln().powf(sched.b);
            let levels: Vec<usize> = samples.iter().map(|s| s.0).filter(|&n| n >= 2).collect();
            let curves = bound_curves(&sched, a, c_low, c_ls, a_ls, &levels)?;
            let mut text = ctx.header();
            text.push_str("A_hat,B_hat,residual\n");
            text.push_str(&format!("{},{},{}\n", fit.a_hat, fit.b_hat, fit.residual));
            text.push_str(&format!("# curves B={} A={a}\n", sched.b));
            text.push_str("n,observed,lower,log_star,theorem\n");
            for (i, &n) in curves.levels.iter().enumerate() {
                let observed = samples.iter().find(|s| s.0 == n).map_or(f64::NAN, |s| s.1);
                text.push_str(&format!(
                    "{n},{observed},{},{},{}\n",
                    curves.lower[i], curves.log_star[i], curves.theorem[i]
                ));
            }
            emit(None, &text)?;
        }
        Command::Relclose { action } => {
            let ifs = ctx.ifs()?;
            match action {
                RelcloseAction::Find { eps, phi, budget, out } => {
                    let phi = Expr::parse(&phi)?;
                    let cert = find_pair(&ifs, eps, &|t| phi.eval(t), budget)?;
                    emit_cert(&cert, out.as_deref())?;
                }
                RelcloseAction::Double { cert, eps, budget, out } => {
                    let cert = RelCloseCertificate::from_json(&read_text(&cert)?)?;
                    let eps = eps.unwrap_or(7.0 * cert.eps);
                    emit_cert(&double_family(&ifs, &cert, eps, budget)?, out.as_deref())?;
                }
                RelcloseAction::Power { u, v, n, out } => {
                    let cert = power_family(&ifs, &parse_word(&u)?, &parse_word(&v)?, n)?;
                    emit_cert(&cert, out.as_deref())?;
                }
            }
        }
        Command::Density { theta, n, cert } => {
            let ifs = ctx.ifs()?;
            let theta = constant(&theta)?;
            let cert = RelCloseCertificate::from_json(&read_text(&cert)?)?;
            let w = density_witness(&ifs, &cert, theta)?;
            // radii b·2^j, from the first one the level-n atoms resolve
            let floor = 100.0 * level_measure(&ifs, theta, n)?.max_error;
            let skipped = (0..DENSITY_MAX_DOUBLINGS)
                .find(|&j| (w.log_b + j as f64 * 2f64.ln()).exp() > floor)
                .unwrap_or(DENSITY_MAX_DOUBLINGS);
            let radii: Vec<f64> = (skipped..skipped + DENSITY_RADII)
                .map(|j| (w.log_b + j as f64 * 2f64.ln()).exp())
                .collect();
            let ratios = density_profile(&ifs, theta, w.x, &radii, n)?;
            let mut text = ctx.header();
            text.push_str(&format!(
                "# prefix={} x={} b={:e} ratio={} bound={} chain={} contained={} skipped_doublings={skipped}\n",
                w.prefix, w.x, w.b, w.ratio, w.bound, w.chain, w.contained
            ));
            text.push_str("r,ratio\n");
            for (r, q) in radii.iter().zip(&ratios) {
                text.push_str(&format!("{r},{q}\n"));
            }
            emit(None, &text)?;
        }
        Command::Visible {
            ax,
            ay,
            s,
            n,
            n_min,
            exclusion,
        } => {
            let ifs = ctx.ifs()?;
            let a = Point::new(ax, ay);
            let mut text = ctx.header();
            text.push_str("n,covering_sum\n");
            let mut notes = String::new();
            for level in n_min..=n {
                let r = visibility_estimate(&ifs, a, s, level, exclusion)?;
                text.push_str(&format!("{level},{}\n", r.sum));
                notes = format!(
                    "# center_inside={} excluded_at_n={} components={}\n",
                    r.center_inside, r.excluded, r.components
                );
            }
            text.push_str(&notes);
            emit(None, &text)?;
        }
        Command::Dioph { alpha, nmax, d } => {
            let alpha = Expr::parse(&alpha)?.eval_rational()?;
            let prof = diophantine_profile(&alpha, nmax, d)?;
            let mut text = ctx.header();
            text.push_str("n,m,residual,scaled\n");
            for c in &prof.convergents {
                text.push_str(&format!("{},{},{},{}\n", c.n, c.m, c.residual, c.residual * (c.n as f64).powf(d)));
            }
            text.push_str(&format!(
                "# c_hat={} tail_c_hat={} d_hat={} d={}\n",
                prof.c_hat,
                prof.tail_c_hat(),
                prof.d_hat,
                prof.d
            ));
            emit(None, &text)?;
        }
        Command::Net { theta_over_pi, eps, d } => {
            let theta1 = constant(&theta_over_pi)? * std::f64::consts::PI;
            let net = epsilon_net(theta1, eps, DEFAULT_NET_BOUND)?;
            println!("p {}\nmax_gap {}\nc1_hat {}", net.p, net.max_gap, net.c1_hat(d));
        }
        Command::Count { action } => match action {
            CountAction::Avoid { m, s, blocks } => {
                let c = avoidance_count(m, s, blocks)?;
                println!("exact {}\nbound {}", c.exact, c.bound);
                println!("relaxation_ln {}\nrelaxation_holds {}", c.relaxation_ln, c.relaxation_holds);
                let h = h2_length_bound(m, s, blocks, 1.0 / m as f64)?;
                println!("h2_value {}\nh2_bound {}\nh2_holds {}", h.value, h.bound, h.holds);
            }
            CountAction::Removal {
                target,
                steps,
                phi,
                eps,
                cap,
            } => {
                let ifs = ctx.ifs()?;
                let trace = removal_recursion(&ifs, &parse_word(&target)?, constant(&phi)?, eps, steps, cap)?;
                let mut text = ctx.header();
                text.push_str(&format!("# c={:e} n0={} a={}\n", trace.c, trace.n0, trace.a_word));
                text.push_str("step,mass,cylinders\n");
                for (i, (m, k)) in trace.masses.iter().zip(&trace.cylinders).enumerate() {
                    text.push_str(&format!("{i},{m},{k}\n"));
                }
                emit(None, &text)?;
            }
        },
        Command::Schedule(sa) => {
            let ifs = ctx.ifs()?;
            let s = schedule(&ifs, sa.n, sa.c1, sa.k, sa.d, sa.delta)?;
            let threshold = growth_threshold(s.m, s.r, sa.c1, sa.k, sa.d, sa.delta, sa.n.max(20))?;
            println!("s_n {}\nln_s_n {}\nln_L_n {}\nlog_m_L_n {}", s.s_n, s.ln_s_n, s.ln_l_n, s.log_m_l_n());
            println!("ln_neg_ln_rho_n {}\nB {}", s.ln_neg_ln_rho, s.b);
            println!("growth_inequality {}", s.growth_inequality_holds());
            match threshold {
                Some(t) => println!("growth_threshold {t}"),
                None => println!("growth_threshold none"),
            }
        }
    }
    Ok(())
}

fn run_favard(ctx: &Context, args: &FavardArgs) -> Outcome {
    let ifs = ctx.ifs()?;
    let body = if args.hull {
        ConvexBody::Polygon(certified_hull(&ifs, HULL_DEPTH)?)
    } else {
        ConvexBody::Disk(ifs.disk())
    };
    let last = args.n_max.unwrap_or(args.n).max(args.n);
    let mut rows = String::from("n,theta,length\n");
    let mut summary = String::from("# summary\nn,favard,max_over_theta\n");
    for n in args.n..=last {
        let r = favard_sweep(&ifs, n, args.angles, &body, None)?;
        for (t, l) in r.angles.iter().zip(&r.lengths) {
            rows.push_str(&format!("{n},{t},{l}\n"));
        }
        summary.push_str(&format!("{n},{},{}\n", r.favard, r.max_over_theta));
    }
    let text = format!("{}{rows}{summary}", ctx.header());
    match &args.csv {
        Some(p) => {
            std::fs::write(p, &text)?;
            print!("{summary}");
        }
        None => emit(None, &text)?,
    }
    if let Some(p) = &args.svg {
        let angles = quadrature_angles(args.angles);
        let step = (angles.len() / SVG_BAR_ROWS).max(1);
        let opts = RenderOptions {
            depth: last.min(SVG_MAX_DEPTH),
            bar_angles: angles.into_iter().step_by(step).collect(),
            bar_level: last,
        };
        if ifs.level_size(last) > DEFAULT_LEVEL_CAP as f64 {
            return Err(Error::LevelTooLarge {
                level: last,
                count: ifs.level_size(last),
                cap: DEFAULT_LEVEL_CAP,
            }
            .into());
        }
        std::fs::write(p, render_svg(&ifs, &opts)?)?;
    }
    Ok(())
}

/// `(n, favard)` rows below the `# summary` marker of a `favard` CSV.
fn read_summary(text: &str) -> std::result::Result<Vec<(usize, f64)>, Failure> {
    let bad = |line: &str| Failure::Usage(format!("config: malformed summary row {line:?}"));
    let mut samples = Vec::new();
    let mut in_summary = false;
    for line in text.lines().map(str::trim) {
        if line == "# summary" {
            in_summary = true;
            continue;
        }
        if !in_summary || line.is_empty() || line.starts_with('#') || line.starts_with("n,") {
            continue;
        }
        let mut parts = line.split(',');
        let n = parts.next().and_then(|x| x.parse().ok()).ok_or_else(|| bad(line))?;
        let v = parts.next().and_then(|x| x.parse().ok()).ok_or_else(|| bad(line))?;
        samples.push((n, v));
    }
    if samples.is_empty() {
        return Err(Failure::Usage("config: no summary rows in the CSV".into()));
    }
    Ok(samples)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("ERROR usage: {first}");
            return ExitCode::from(2);
        }
    };
    if let Ok(v) = std::env::var("FAVLAB_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("ERROR usage: FAVLAB_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(detail)) => {
            eprintln!("ERROR {detail}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("ERROR {}: {e}", e.code());
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            eprintln!("ERROR io: {e}");
            ExitCode::from(1)
        }
    }
}
