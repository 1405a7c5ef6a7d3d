mod config;
mod format;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use polybody::approx::{default_eval_grid, dn_series, fit_rate, FunctionSpec};
use polybody::fekete::{approx_fekete, build_mesh, interp_error_series};
use polybody::rate::{closed_form_for, minimize_rate, RateOptions, SingularSetQuadric};
use polybody::reproduce::{run_suite, SuiteOptions, CRITERIA};
use polybody::{ConvexBody, ProductExtremal, ProductSet};
use serde_json::{json, Map, Value};

use format::{csv_row, g12, num, Header};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "polybody", version, about = "Polynomial approximation with convex-body degree")]
struct Cli {
    /// JSON file of default flag values; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect a convex body and its index sets.
    Body(BodyArgs),
    /// Extremal function evaluation.
    #[command(subcommand)]
    Extremal(ExtremalCommand),
    /// Predicted convergence rate from a quadric singular set.
    Rate(RateArgs),
    /// Chebyshev truncation errors and fitted rate.
    Approx(ApproxArgs),
    /// Approximate Fekete points and interpolation.
    Fekete(FeketeArgs),
    /// Run the numerical acceptance suite.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct Output {
    /// Primary output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BodyArgs {
    #[arg(long)]
    spec: String,
    /// Write the index set of nP as CSV.
    #[arg(long)]
    indexset: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Subcommand)]
enum ExtremalCommand {
    /// Evaluate V over a tensor grid of complex points.
    Eval(EvalArgs),
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    body: String,
    /// Product set (default: the unit cube of matching dimension).
    #[arg(long)]
    set: Option<String>,
    /// One per coordinate: `re_lo,re_hi,n_re,im_lo,im_hi,n_im`.
    #[arg(long = "axis", required = true)]
    axes: Vec<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct RateArgs {
    #[arg(long)]
    body: String,
    /// `quadric:a=<a1>,...;r=<float>`.
    #[arg(long)]
    sing: String,
    #[arg(long)]
    set: Option<String>,
    #[arg(long, default_value_t = 64)]
    starts: usize,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ApproxArgs {
    #[arg(long)]
    body: String,
    /// `runge:a=<a1>,...;r=<float>`.
    #[arg(long)]
    func: String,
    /// Degrees: `lo..hi`, a comma list, or a single value.
    #[arg(long, default_value = "4..24")]
    n: String,
    /// Evaluation grid points per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Restrict the rate fit to `lo..hi`.
    #[arg(long)]
    fit: Option<String>,
    #[command(flatten)]
    output: Output,
    /// JSON summary file (appended to stdout when absent).
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct FeketeArgs {
    #[arg(long)]
    body: String,
    #[arg(long)]
    set: Option<String>,
    #[arg(long)]
    n: usize,
    /// Mesh resolution per factor.
    #[arg(long, default_value_t = 60)]
    mesh: usize,
    #[command(flatten)]
    output: Output,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Function for an interpolation-error series.
    #[arg(long)]
    interp: Option<String>,
    /// Degrees of the error series.
    #[arg(long, default_value = "1..10")]
    ns: String,
    #[arg(long, default_value_t = 101)]
    eval_mesh: usize,
    /// Error series CSV (appended to stdout when absent).
    #[arg(long)]
    errors: Option<PathBuf>,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(long, default_value = "paper")]
    suite: String,
    /// Comma list of criteria (default: all).
    #[arg(long)]
    criteria: Option<String>,
    #[command(flatten)]
    output: Output,
}

enum Failure {
    Usage(String),
    Numeric(String),
    Acceptance,
}

impl From<polybody::Error> for Failure {
    fn from(e: polybody::Error) -> Self {
        Failure::Numeric(e.to_string())
    }
}

type Run<T> = std::result::Result<T, Failure>;

fn usage<'a, E: std::fmt::Display>(what: &'a str, token: &'a str) -> impl FnOnce(E) -> Failure + 'a {
    move |e| Failure::Usage(format!("invalid {what} `{token}`: {e}"))
}

fn parse_body(s: &str) -> Run<ConvexBody> {
    s.parse().map_err(usage("body", s))
}

fn parse_set(s: Option<&str>, dim: usize) -> Run<ProductSet> {
    match s {
        Some(s) => {
            let set: ProductSet = s.parse().map_err(usage("set", s))?;
            if set.dim() != dim {
                return Err(Failure::Usage(format!("set `{s}` has dimension {}, body has {dim}", set.dim())));
            }
            Ok(set)
        }
        None => Ok(ProductSet::cube(dim)?),
    }
}

fn parse_degrees(s: &str) -> Run<Vec<usize>> {
    let bad = || Failure::Usage(format!("invalid degree list `{s}`"));
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn parse_range(s: &str) -> Run<(usize, usize)> {
    let d = parse_degrees(s)?;
    match (d.first(), d.last()) {
        (Some(&lo), Some(&hi)) if s.contains("..") => Ok((lo, hi)),
        _ => Err(Failure::Usage(format!("invalid fit range `{s}`"))),
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn parse_axis(s: &str) -> Run<Vec<Complex64>> {
    let bad = || Failure::Usage(format!("invalid axis `{s}`: expected re_lo,re_hi,n_re,im_lo,im_hi,n_im"));
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err(bad());
    }
    let f = |i: usize| parts[i].parse::<f64>().map_err(|_| bad());
    let c = |i: usize| parts[i].parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(bad);
    let re = linspace(f(0)?, f(1)?, c(2)?);
    let im = linspace(f(3)?, f(4)?, c(5)?);
    Ok(re.iter().flat_map(|&x| im.iter().map(move |&y| Complex64::new(x, y))).collect())
}

fn emit(path: Option<&PathBuf>, content: &str) -> Run<()> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|e| Failure::Numeric(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_body(a: &BodyArgs, h: &Header) -> Run<()> {
    let body = parse_body(&a.spec)?;
    if let Some(n) = a.indexset {
        let set = body.enumerate_index_set(n);
        let head: Vec<String> = (1..=body.dim()).map(|k| format!("j{k}")).collect();
        let mut s = h.comment();
        s.push_str(&head.join(","));
        s.push('\n');
        s.push_str(&set.to_csv());
        if !s.ends_with('\n') {
            s.push('\n');
        }
        return emit(a.output.out.as_ref(), &s);
    }
    let (big_a, k) = body.containment_constants();
    let mut m = Map::new();
    m.insert("body".into(), json!(body.to_string()));
    m.insert("dim".into(), json!(body.dim()));
    m.insert("volume".into(), num(body.volume()));
    m.insert("containment_a".into(), json!(big_a));
    m.insert("containment_k".into(), json!(k));
    m.insert("lower_set".into(), json!(body.is_lower_set(20)));
    let support: Vec<Value> = (0..body.dim()).map(|k| num(body.max_coordinate(k))).collect();
    m.insert("max_coordinate".into(), Value::Array(support));
    emit(a.output.out.as_ref(), &h.wrap(m))
}

fn cmd_extremal(a: &EvalArgs, h: &Header) -> Run<()> {
    let body = parse_body(&a.body)?;
    let set = parse_set(a.set.as_deref(), body.dim())?;
    if a.axes.len() != body.dim() {
        return Err(Failure::Usage(format!("need {} --axis values, got {}", body.dim(), a.axes.len())));
    }
    let axes: Vec<Vec<Complex64>> = a.axes.iter().map(|s| parse_axis(s)).collect::<Run<_>>()?;
    let ext = ProductExtremal::new(&body, &set)?;
    let mut s = h.comment();
    let head: Vec<String> = (1..=body.dim()).flat_map(|k| [format!("x{k}"), format!("y{k}")]).collect();
    s.push_str(&head.join(","));
    s.push_str(",V\n");
    let total: usize = axes.iter().map(Vec::len).product();
    let mut idx = vec![0usize; axes.len()];
    for _ in 0..total {
        let z: Vec<Complex64> = idx.iter().zip(&axes).map(|(&i, ax)| ax[i]).collect();
        let mut row: Vec<f64> = z.iter().flat_map(|c| [c.re, c.im]).collect();
        row.push(ext.eval(&z)?.value);
        s.push_str(&csv_row(&row));
        s.push('\n');
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
    emit(a.output.out.as_ref(), &s)
}

fn cmd_rate(a: &RateArgs, seed: u64, h: &Header) -> Run<()> {
    let body = parse_body(&a.body)?;
    let quadric: SingularSetQuadric = a.sing.parse().map_err(usage("singular set", &a.sing))?;
    if quadric.dim() != body.dim() {
        return Err(Failure::Usage(format!(
            "singular set `{}` has dimension {}, body has {}",
            a.sing,
            quadric.dim(),
            body.dim()
        )));
    }
    let set = parse_set(a.set.as_deref(), body.dim())?;
    if a.starts == 0 {
        return Err(Failure::Usage("--starts must be positive".into()));
    }
    let opts = RateOptions {
        starts: a.starts,
        max_iter: a.max_iter,
        seed,
        ..RateOptions::default()
    };
    let rep = minimize_rate(&body, &set, &quadric, &opts)?;
    let mut m = Map::new();
    m.insert("rate".into(), num(rep.rate));
    m.insert("log_rate".into(), num(rep.log_rate));
    m.insert(
        "minimizer".into(),
        Value::Array(rep.minimizer.iter().map(|c| json!([num(c.re), num(c.im)])).collect()),
    );
    m.insert("kkt_spread".into(), num(rep.kkt_spread));
    m.insert("classification".into(), json!(rep.classification.to_string()));
    m.insert(
        "closed_form".into(),
        closed_form_for(&body, &set, &quadric).map_or(Value::Null, num),
    );
    m.insert("starts".into(), json!(rep.starts_used));
    m.insert("converged_starts".into(), json!(rep.converged_starts));
    m.insert("seed".into(), json!(rep.seed));
    m.insert("constraint_residual".into(), num(rep.constraint_residual));
    m.insert("body".into(), json!(body.to_string()));
    m.insert("singular_set".into(), json!(quadric.to_string()));
    emit(a.output.out.as_ref(), &h.wrap(m))
}

fn cmd_approx(a: &ApproxArgs, h: &Header) -> Run<()> {
    let body = parse_body(&a.body)?;
    let f: FunctionSpec = a.func.parse().map_err(usage("function", &a.func))?;
    if f.dim() != body.dim() {
        return Err(Failure::Usage(format!("function `{}` has dimension {}, body has {}", a.func, f.dim(), body.dim())));
    }
    let ns = parse_degrees(&a.n)?;
    let grid = a.grid.unwrap_or_else(|| default_eval_grid(body.dim()));
    if grid < 2 {
        return Err(Failure::Usage("--grid must be at least 2".into()));
    }
    let mut series = dn_series(&f, &body, &ns, grid)?;
    if let Some(r) = &a.fit {
        let range = parse_range(r)?;
        series.fitted_rate = Some(fit_rate(&series, Some(range))?);
        series.fit_range = Some(range);
    }
    let mut csv = h.comment();
    csv.push_str("n,d_n,D_hat\n");
    for row in &series.rows {
        csv.push_str(&format!("{},{},{}\n", row.n, row.d_n, g12(row.d_hat)));
    }
    let mut m = Map::new();
    m.insert("R_hat".into(), series.fitted_rate.map_or(Value::Null, num));
    m.insert("fit_range".into(), series.fit_range.map_or(Value::Null, |(lo, hi)| json!([lo, hi])));
    m.insert("body".into(), json!(body.to_string()));
    m.insert("function".into(), json!(f.to_string()));
    m.insert("eval_grid".into(), json!(grid));
    let summary = h.wrap(m);
    emit(a.output.out.as_ref(), &csv)?;
    emit(a.json.as_ref(), &summary)
}

fn cmd_fekete(a: &FeketeArgs, h: &Header) -> Run<()> {
    let body = parse_body(&a.body)?;
    let set = parse_set(a.set.as_deref(), body.dim())?;
    let interp: Option<FunctionSpec> = match &a.interp {
        Some(s) => Some(s.parse().map_err(usage("function", s))?),
        None => None,
    };
    let mesh = build_mesh(&set, a.mesh)?;
    let fs = approx_fekete(&mesh, &body, &set, a.n)?;
    let mut csv = h.comment();
    let head: Vec<String> = if set.is_real() {
        (1..=body.dim()).map(|k| format!("x{k}")).collect()
    } else {
        (1..=body.dim()).flat_map(|k| [format!("x{k}"), format!("y{k}")]).collect()
    };
    csv.push_str(&head.join(","));
    csv.push('\n');
    for z in &fs.nodes {
        let row: Vec<f64> = if set.is_real() {
            z.iter().map(|c| c.re).collect()
        } else {
            z.iter().flat_map(|c| [c.re, c.im]).collect()
        };
        csv.push_str(&csv_row(&row));
        csv.push('\n');
    }
    let r = fs.report();
    let mut m = Map::new();
    m.insert("n".into(), json!(r.n));
    m.insert("d_n".into(), json!(r.d_n));
    m.insert("vdm_log_abs".into(), num(r.vdm_log_abs));
    m.insert("max_psi_on_mesh".into(), num(r.max_psi_on_mesh));
    m.insert("swaps_performed".into(), json!(r.swaps_performed));
    m.insert("greedy_vdm_log_abs".into(), num(r.greedy_vdm_log_abs));
    m.insert("kronecker_residual".into(), num(r.kronecker_residual));
    m.insert("conditioning_warning".into(), json!(r.conditioning_warning));
    m.insert("mesh_points".into(), json!(mesh.len()));
    let summary = h.wrap(m);

    let errors = match &interp {
        Some(f) => {
            if f.dim() != body.dim() {
                return Err(Failure::Usage("interpolated function dimension differs from body".into()));
            }
            let ns = parse_degrees(&a.ns)?;
            let eval = build_mesh(&set, a.eval_mesh)?;
            let series = interp_error_series(&mesh, &body, &set, f, &ns, &eval)?;
            let mut s = h.comment();
            s.push_str("n,error\n");
            for (n, e) in series {
                s.push_str(&format!("{n},{}\n", g12(e)));
            }
            Some(s)
        }
        None => None,
    };
    emit(a.output.out.as_ref(), &csv)?;
    emit(a.json.as_ref(), &summary)?;
    if let Some(s) = errors {
        emit(a.errors.as_ref(), &s)?;
    }
    Ok(())
}

fn cmd_reproduce(a: &ReproduceArgs, seed: u64, h: &Header) -> Run<()> {
    if a.suite != "paper" {
        return Err(Failure::Usage(format!("unknown suite `{}` (available: paper)", a.suite)));
    }
    let ids: Vec<u8> = match &a.criteria {
        Some(s) => s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u8>()
                    .ok()
                    .filter(|id| CRITERIA.iter().any(|c| c.0 == *id))
                    .ok_or_else(|| Failure::Usage(format!("unknown criterion `{t}`")))
            })
            .collect::<Run<_>>()?,
        None => Vec::new(),
    };
    let report = run_suite(&ids, &SuiteOptions { seed });
    let mut s = h.comment();
    s.push_str(&format!("{:<3} {:<56} {:>20}  {:<30} {}\n", "id", "check", "observed", "expected", "result"));
    for c in &report.checks {
        s.push_str(&format!(
            "{:<3} {:<56} {:>20}  {:<30} {}\n",
            c.criterion,
            c.label,
            g12(c.observed),
            c.expected,
            if c.passed { "PASS" } else { "FAIL" }
        ));
    }
    for c in &report.criteria {
        s.push_str(&format!(
            "criterion {} ({}): {}\n",
            c.criterion,
            c.name,
            if c.passed { "PASS" } else { "FAIL" }
        ));
    }
    emit(a.output.out.as_ref(), &s)?;
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Acceptance)
    }
}

fn run(raw: Vec<String>) -> Run<()> {
    let argv = config::merge(&raw).map_err(Failure::Usage)?;
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            return Err(Failure::Usage(e.to_string()));
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Numeric(e.to_string()))?;
    }
    let mut shown = vec!["polybody".to_string()];
    shown.extend(raw.iter().skip(1).cloned());
    let h = Header {
        version: VERSION,
        argv: shown,
        seed: cli.seed,
    };
    match &cli.command {
        Command::Body(a) => cmd_body(a, &h),
        Command::Extremal(ExtremalCommand::Eval(a)) => cmd_extremal(a, &h),
        Command::Rate(a) => cmd_rate(a, cli.seed, &h),
        Command::Approx(a) => cmd_approx(a, &h),
        Command::Fekete(a) => cmd_fekete(a, &h),
        Command::Reproduce(a) => cmd_reproduce(a, cli.seed, &h),
    }
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {}", msg.trim_end());
            ExitCode::from(1)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Acceptance) => {
            eprintln!("acceptance failure");
            ExitCode::from(3)
        }
    }
}
