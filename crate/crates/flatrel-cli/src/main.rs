//! Command-line front end: reproducible experiments on translation
//! surfaces with JSON/CSV/DOT outputs.
//!
//! Exit codes: 0 success, 1 domain/computation errors, 2 usage errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::Ratio;

use flatrel::dynamics::{
    birkhoff_average, circle_average, count_growth, minimal_set, nondivergence_profile,
    observable_battery, systole, MinimalSetVerdict,
};
use flatrel::eigenform::{connect_sum_tori, detect_rm, detect_rm_auto, prototype_pair, Prototype};
use flatrel::exactnum::QuadNum;
use flatrel::fixtures;
use flatrel::json::{from_json, to_json, AnySurface};
use flatrel::rel::{collapse, rel_apply, split, FramedH2Surface};
use flatrel::scan::{
    cylinder_decomposition, default_budget, horizontal_diagram, saddle_connections,
    CylinderVerdict, ScanConfig,
};
use flatrel::surface::{Mat2, TriSurface, Vec2};

#[derive(Parser)]
#[command(name = "flatrel", version, about = "experiments on translation surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct Common {
    /// Numeric mode for emitted surfaces.
    #[arg(long, global = true, default_value = "exact", value_parser = ["exact", "float"])]
    mode: String,
    /// Field discriminant filter/override where applicable.
    #[arg(long, global = true)]
    disc: Option<i64>,
    /// Length budget for saddle enumeration.
    #[arg(long = "budget-L", global = true)]
    budget_l: Option<f64>,
    /// Budget for horizontal-structure scans.
    #[arg(long = "budget-B", global = true)]
    budget_b: Option<f64>,
    /// Numeric tolerance echoed into reports.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// RNG seed recorded in output headers.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads for enumeration kernels.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Output path (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a named built-in surface as JSON.
    Build {
        /// One of: square_torus, decagon, tipped_decagon, golden_l, skew_l,
        /// l_origami_3, l_origami_4, three_cylinder, type_b_origami.
        name: String,
    },
    /// Validate a surface file and report its stratum.
    Validate { input: PathBuf },
    /// Apply a 2x2 matrix (entries as rationals) to a surface.
    Gl2 {
        input: PathBuf,
        #[arg(long, default_value = "1")]
        a: String,
        #[arg(long, default_value = "0")]
        b: String,
        #[arg(long, default_value = "0")]
        c: String,
        #[arg(long, default_value = "1")]
        d: String,
    },
    /// Apply the horizontal Rel deformation.
    Rel {
        input: PathBuf,
        #[arg(long)]
        t: String,
    },
    /// Collapse the short horizontal saddle, reporting the selected prong.
    Collapse { input: PathBuf },
    /// Split a framed one-singularity surface at a prong.
    Split {
        input: PathBuf,
        #[arg(long)]
        t: String,
        #[arg(long, default_value_t = 0)]
        prong: usize,
    },
    /// Enumerate saddle connections up to the length budget (CSV).
    Saddles { input: PathBuf },
    /// Horizontal cylinder decomposition (CSV).
    Cylinders { input: PathBuf },
    /// Horizontal data diagram (DOT).
    Diagram { input: PathBuf },
    /// Eigenform constructions and detection.
    Eigenform {
        #[command(subcommand)]
        cmd: EigenformCmd,
    },
    /// Saddle-connection counting curve (CSV).
    Count {
        input: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        tmax: f64,
        #[arg(long, default_value_t = 10)]
        samples: usize,
    },
    /// Horocycle Birkhoff averages of an observable (CSV).
    Birkhoff {
        input: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        t: f64,
        #[arg(long, default_value_t = 400)]
        steps: usize,
        #[arg(long, default_value = "systole")]
        observable: String,
    },
    /// Circle averages pushed by the geodesic flow (CSV).
    Circle {
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 256)]
        angles: usize,
        #[arg(long, default_value = "systole")]
        observable: String,
    },
    /// Fraction of horocycle time with small systole (CSV).
    Nondiv {
        input: PathBuf,
        #[arg(long, default_value_t = 100.0)]
        t: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
    },
    /// Minimal-set verdict for the horizontal direction.
    Minimal { input: PathBuf },
}

#[derive(Subcommand)]
enum EigenformCmd {
    /// Detect real multiplication on a genus-2 surface.
    Detect {
        input: PathBuf,
        #[arg(long, default_value_t = 400)]
        dmax: i64,
    },
    /// Report the prototype data (e, l, m) -> D, lambda.
    Prototype {
        #[arg(long)]
        e: i64,
        #[arg(long)]
        l: i64,
        #[arg(long)]
        m: i64,
    },
    /// Build the slit connected sum of the prototype torus pair.
    ConnectSum {
        #[arg(long)]
        e: i64,
        #[arg(long)]
        l: i64,
        #[arg(long)]
        m: i64,
        #[arg(long)]
        t: String,
    },
    /// Emit the regular-decagon surface with its detection report.
    Decagon,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn resolve(path: &Path) -> PathBuf {
    if path.exists() {
        return path.to_path_buf();
    }
    if let Ok(dir) = std::env::var("FLATREL_FIXTURES") {
        let alt = Path::new(&dir).join(path);
        if alt.exists() {
            return alt;
        }
        // Also try just the file name inside the fixture directory.
        if let Some(name) = path.file_name() {
            let alt = Path::new(&dir).join(name);
            if alt.exists() {
                return alt;
            }
        }
    }
    path.to_path_buf()
}

fn load(path: &Path) -> Result<AnySurface, String> {
    let p = resolve(path);
    let text = std::fs::read_to_string(&p)
        .map_err(|e| format!("cannot read {}: {e}", p.display()))?;
    from_json(&text).map_err(|e| e.to_string())
}

fn load_exact(path: &Path) -> Result<TriSurface<QuadNum>, String> {
    match load(path)? {
        AnySurface::Exact(m) => Ok(m),
        AnySurface::Float(_) => Err("this command needs an exact-mode surface".into()),
    }
}

fn parse_rational(s: &str) -> Result<QuadNum, String> {
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|e| format!("bad rational {s:?}: {e}"))?;
        let d: i64 = d.trim().parse().map_err(|e| format!("bad rational {s:?}: {e}"))?;
        if d == 0 {
            return Err(format!("bad rational {s:?}: zero denominator"));
        }
        return Ok(QuadNum::from_ratio(n, d));
    }
    let f: f64 = s.parse().map_err(|e| format!("bad number {s:?}: {e}"))?;
    let r = Ratio::<BigInt>::from_float(f).ok_or_else(|| format!("bad number {s:?}"))?;
    Ok(QuadNum::from_rational(r))
}

fn header(cli: &Cli, cmd: &str) -> String {
    let c = &cli.common;
    format!(
        "# flatrel {cmd} mode={} seed={} threads={} tol={}{}{}\n",
        c.mode,
        c.seed,
        c.threads,
        c.tol,
        c.budget_l.map(|b| format!(" budget-L={b}")).unwrap_or_default(),
        c.budget_b.map(|b| format!(" budget-B={b}")).unwrap_or_default(),
    )
}

fn emit(cli: &Cli, text: &str) -> Result<(), String> {
    match &cli.common.out {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_surface(cli: &Cli, m: TriSurface<QuadNum>) -> Result<(), String> {
    let any = if cli.common.mode == "float" {
        AnySurface::Float(m.to_float())
    } else {
        AnySurface::Exact(m)
    };
    let text = to_json(&any).map_err(|e| e.to_string())?;
    emit(cli, &text)
}

fn built_in(name: &str) -> Result<TriSurface<QuadNum>, String> {
    Ok(match name {
        "square_torus" => fixtures::square_torus(),
        "decagon" | "horizontal_decagon" => fixtures::decagon(),
        "tipped_decagon" => fixtures::tipped_decagon(),
        "golden_l" => fixtures::golden_l(),
        "skew_l" => fixtures::skew_l(),
        "l_origami_3" => fixtures::l_origami_3(),
        "l_origami_4" => fixtures::l_origami_4(),
        "three_cylinder" => fixtures::three_cylinder(),
        "type_b_origami" => fixtures::type_b_origami(),
        other => return Err(format!("unknown fixture {other:?}")),
    })
}

fn stratum_name(orders: &mut Vec<usize>) -> String {
    orders.sort_unstable_by(|a, b| b.cmp(a));
    let parts: Vec<String> = orders.iter().map(|o| o.to_string()).collect();
    format!("H({})", parts.join(","))
}

fn scan_config(cli: &Cli) -> ScanConfig {
    ScanConfig { threads: cli.common.threads.max(1), ..ScanConfig::default() }
}

fn observable_by_name(
    name: &str,
) -> Result<Box<dyn Fn(&TriSurface<f64>) -> f64>, String> {
    if name == "systole" {
        return Ok(Box::new(|m| systole(m).unwrap_or(f64::NAN)));
    }
    for (n, f) in observable_battery() {
        if n == name {
            return Ok(Box::new(f));
        }
    }
    Err(format!(
        "unknown observable {name:?}; available: systole, {}",
        observable_battery()
            .iter()
            .map(|(n, _)| *n)
            .collect::<Vec<_>>()
            .join(", ")
    ))
}

fn run(cli: &Cli) -> Result<(), String> {
    match &cli.command {
        Command::Build { name } => emit_surface(cli, built_in(name)?),
        Command::Validate { input } => {
            let any = load(input)?;
            any.validate().map_err(|e| e.to_string())?;
            let (mut orders, genus, area, n_tri) = match &any {
                AnySurface::Exact(m) => (
                    m.labels.iter().map(|l| l.order).collect::<Vec<_>>(),
                    m.genus(),
                    m.area().to_f64(),
                    m.n_triangles(),
                ),
                AnySurface::Float(m) => (
                    m.labels.iter().map(|l| l.order).collect::<Vec<_>>(),
                    m.genus(),
                    m.area(),
                    m.n_triangles(),
                ),
            };
            let report = format!(
                "{}valid surface: stratum {}, genus {genus}, area {area}, {n_tri} triangles\n",
                header(cli, "validate"),
                stratum_name(&mut orders),
            );
            emit(cli, &report)
        }
        Command::Gl2 { input, a, b, c, d } => {
            let m = load_exact(input)?;
            let g = Mat2::new(
                parse_rational(a)?,
                parse_rational(b)?,
                parse_rational(c)?,
                parse_rational(d)?,
            );
            let out = m.apply_gl2(&g).map_err(|e| e.to_string())?;
            emit_surface(cli, out)
        }
        Command::Rel { input, t } => {
            let m = load_exact(input)?;
            let t = parse_rational(t)?;
            let budget = cli.common.budget_b.unwrap_or_else(|| default_budget(&m));
            let out = rel_apply(&m, &t, budget).map_err(|e| e.to_string())?;
            emit_surface(cli, out)
        }
        Command::Collapse { input } => {
            let m = load_exact(input)?;
            let budget = cli.common.budget_b.unwrap_or_else(|| default_budget(&m));
            let f = collapse(&m, budget).map_err(|e| e.to_string())?;
            eprintln!("selected prong index: {}", f.prong_index());
            emit_surface(cli, f.surface)
        }
        Command::Split { input, t, prong } => {
            let m = load_exact(input)?;
            let t = parse_rational(t)?;
            let budget = cli.common.budget_b.unwrap_or_else(|| default_budget(&m));
            let f = FramedH2Surface::from_index(m, *prong).map_err(|e| e.to_string())?;
            let out = split(&f, &t, budget).map_err(|e| e.to_string())?;
            emit_surface(cli, out)
        }
        Command::Saddles { input } => {
            let any = load(input)?;
            let budget = cli.common.budget_l.unwrap_or(5.0);
            let mut csv = format!("{}x,y,length,from,to\n", header(cli, "saddles"));
            let mut rows: Vec<String> = Vec::new();
            match &any {
                AnySurface::Exact(m) => {
                    let l2 = parse_rational(&format!("{}", budget * budget))?;
                    let found =
                        saddle_connections(m, &l2, &scan_config(cli)).map_err(|e| e.to_string())?;
                    for s in found {
                        let v = s.hol.to_f64();
                        rows.push(format!(
                            "{},{},{},{},{}",
                            v.x,
                            v.y,
                            v.norm2().sqrt(),
                            m.labels[s.from].name,
                            m.labels[s.to].name
                        ));
                    }
                }
                AnySurface::Float(m) => {
                    let found = saddle_connections(m, &(budget * budget), &scan_config(cli))
                        .map_err(|e| e.to_string())?;
                    for s in found {
                        rows.push(format!(
                            "{},{},{},{},{}",
                            s.hol.x,
                            s.hol.y,
                            s.hol.norm2().sqrt(),
                            m.labels[s.from].name,
                            m.labels[s.to].name
                        ));
                    }
                }
            }
            rows.sort();
            csv.push_str(&rows.join("\n"));
            csv.push('\n');
            emit(cli, &csv)
        }
        Command::Cylinders { input } => {
            let m = load_exact(input)?;
            let budget = cli.common.budget_b.unwrap_or_else(|| default_budget(&m));
            let dir = Vec2::new(QuadNum::one(), QuadNum::zero());
            match cylinder_decomposition(&m, &dir, budget).map_err(|e| e.to_string())? {
                CylinderVerdict::Periodic(cyls) => {
                    let mut csv =
                        format!("{}circumference,height,modulus,area\n", header(cli, "cylinders"));
                    for c in &cyls {
                        csv.push_str(&format!(
                            "{},{},{},{}\n",
                            c.circumference.to_f64(),
                            c.height.to_f64(),
                            c.modulus().to_f64(),
                            c.area().to_f64()
                        ));
                    }
                    emit(cli, &csv)
                }
                CylinderVerdict::Undetermined => {
                    Err("horizontal direction not certified periodic within budget".into())
                }
            }
        }
        Command::Diagram { input } => {
            let any = load(input)?;
            let budget = cli.common.budget_b.unwrap_or(50.0);
            let d = match &any {
                AnySurface::Exact(m) => horizontal_diagram(m, budget),
                AnySurface::Float(m) => horizontal_diagram(m, budget),
            };
            let mut dot = format!("// {}", header(cli, "diagram"));
            dot.push_str("digraph horizontal {\n");
            for (i, (name, order)) in d.vertices.iter().enumerate() {
                dot.push_str(&format!("  v{i} [label=\"{name} (order {order})\"];\n"));
            }
            for (a, ga, b, gb) in &d.edges {
                dot.push_str(&format!("  v{a} -> v{b} [label=\"{ga}->{gb}\"];\n"));
            }
            if let Some(class) = d.classify_h11(None) {
                dot.push_str(&format!("  // H(1,1) diagram type: {class}\n"));
            }
            dot.push_str(&format!("  // certified: {}\n}}\n", d.certified));
            emit(cli, &dot)
        }
        Command::Eigenform { cmd } => run_eigenform(cli, cmd),
        Command::Count { input, tmax, samples } => {
            let any = load(input)?;
            let curve = match &any {
                AnySurface::Exact(m) => count_growth(m, *tmax, *samples, &scan_config(cli)),
                AnySurface::Float(m) => count_growth(m, *tmax, *samples, &scan_config(cli)),
            }
            .map_err(|e| e.to_string())?;
            let mut csv = format!("{}radius,count,estimate\n", header(cli, "count"));
            for i in 0..curve.radii.len() {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    curve.radii[i], curve.counts[i], curve.estimates[i]
                ));
            }
            csv.push_str(&format!(
                "# fitted quadratic constant: {} (bootstrap spread {})\n",
                curve.quadratic_constant(),
                curve.bootstrap_spread(cli.common.seed, 200)
            ));
            emit(cli, &csv)
        }
        Command::Birkhoff { input, t, steps, observable } => {
            let m = load(input)?.to_float();
            let phi = observable_by_name(observable)?;
            let mut csv = format!("{}t,average\n", header(cli, "birkhoff"));
            for i in 1..=10 {
                let ti = t * i as f64 / 10.0;
                let si = (steps * i / 10).max(1);
                let avg = birkhoff_average(&m, phi.as_ref(), ti, si).map_err(|e| e.to_string())?;
                csv.push_str(&format!("{ti},{avg}\n"));
            }
            emit(cli, &csv)
        }
        Command::Circle { input, t, angles, observable } => {
            let m = load(input)?.to_float();
            let phi = observable_by_name(observable)?;
            let avg = circle_average(&m, phi.as_ref(), *t, *angles).map_err(|e| e.to_string())?;
            let csv = format!("{}t,average\n{t},{avg}\n", header(cli, "circle"));
            emit(cli, &csv)
        }
        Command::Nondiv { input, t, steps } => {
            let m = load(input)?.to_float();
            let eps: Vec<f64> = (0..16).map(|i| 0.02 * 1.5f64.powi(i)).collect();
            let prof =
                nondivergence_profile(&m, *t, *steps, &eps).map_err(|e| e.to_string())?;
            let mut csv = format!("{}epsilon,fraction\n", header(cli, "nondiv"));
            for (e, f) in prof {
                csv.push_str(&format!("{e},{f}\n"));
            }
            emit(cli, &csv)
        }
        Command::Minimal { input } => {
            let m = load_exact(input)?;
            let budget = cli.common.budget_b.unwrap_or_else(|| default_budget(&m));
            let report = match minimal_set(&m, budget).map_err(|e| e.to_string())? {
                MinimalSetVerdict::Minimal { dimension, n_cylinders, .. } => format!(
                    "{}minimal set: torus of dimension {dimension} ({n_cylinders} horizontal cylinders){}\n",
                    header(cli, "minimal"),
                    if dimension == 1 { "; horocycle orbit is periodic" } else { "" },
                ),
                MinimalSetVerdict::NotCompactClosure { .. } => format!(
                    "{}no horizontal cylinder decomposition found within budget: orbit closure not certified compact\n",
                    header(cli, "minimal"),
                ),
            };
            emit(cli, &report)
        }
    }
}

fn run_eigenform(cli: &Cli, cmd: &EigenformCmd) -> Result<(), String> {
    match cmd {
        EigenformCmd::Detect { input, dmax } => {
            let m = load_exact(input)?;
            let act = match cli.common.disc {
                Some(d) => detect_rm(&m, d).map_err(|e| e.to_string())?,
                None => detect_rm_auto(&m, *dmax).map_err(|e| e.to_string())?,
            };
            match act {
                Some(a) => {
                    let mut report = format!(
                        "{}real multiplication by the order of discriminant {}\n",
                        header(cli, "eigenform detect"),
                        a.d
                    );
                    report.push_str("generator action on homology (columns):\n");
                    for row in &a.rho {
                        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
                        report.push_str(&format!("  [{}]\n", cells.join(", ")));
                    }
                    emit(cli, &report)
                }
                None => Err("no real multiplication detected".into()),
            }
        }
        EigenformCmd::Prototype { e, l, m } => {
            let p = Prototype::new(*e, *l, *m).map_err(|er| er.to_string())?;
            let report = format!(
                "{}prototype (e={}, l={}, m={}): D = {}, lambda = {} ({}), isogeny degree {}\n",
                header(cli, "eigenform prototype"),
                p.e,
                p.l,
                p.m,
                p.d,
                p.lambda.decimal_string(12),
                if p.lambda.is_rational() { "rational" } else { "quadratic" },
                p.l * p.l * p.m
            );
            emit(cli, &report)
        }
        EigenformCmd::ConnectSum { e, l, m, t } => {
            let p = Prototype::new(*e, *l, *m).map_err(|er| er.to_string())?;
            let pair = prototype_pair(&p).map_err(|er| er.to_string())?;
            let t = parse_rational(t)?;
            let out = connect_sum_tori(&pair, &t).map_err(|er| er.to_string())?;
            emit_surface(cli, out)
        }
        EigenformCmd::Decagon => {
            let m = fixtures::decagon();
            let act = detect_rm_auto(&m, 200).map_err(|e| e.to_string())?;
            if let Some(a) = &act {
                eprintln!("decagon: real multiplication with discriminant {}", a.d);
            }
            emit_surface(cli, m)
        }
    }
}
