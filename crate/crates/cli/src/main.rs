mod output;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use lyaplab::experiments::{run_experiment, ExperimentReport};
use lyaplab::lattice::{BoxSpec, EnvCache, Environment, Site};
use lyaplab::lyapunov::{bounds_check, ladder_run, LadderParams, LyapunovEstimate};
use lyaplab::sampler::conditioned_stats;
use lyaplab::solver::{inflate_until_stable, replica_seed, solve_survival, BoxPolicy, SolveOptions};
use lyaplab::{DistSpec, Error};
use serde_json::json;

use output::{num, opt_num, RunDir, RunManifest};

#[derive(Parser, Debug)]
#[command(name = "lyaplab", version, about = "Lyapunov exponents of random walks in random potentials")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Master seed for every random quantity of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Root of the output tree.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Run directory name; defaults to the start time.
    #[arg(long, global = true)]
    tag: Option<String>,
    /// Environment cache directory; falls back to LYAPLAB_CACHE.
    #[arg(long, global = true)]
    env_cache: Option<PathBuf>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Inspect a potential law.
    Dist {
        #[command(subcommand)]
        action: DistAction,
    },
    /// Solve the survival field for one environment.
    Solve(SolveArgs),
    /// Sample conditioned paths and report path statistics.
    Paths(PathsArgs),
    /// Quenched exponent ladder.
    Quenched(LadderArgs),
    /// Annealed exponent ladder with the interval check.
    Annealed(LadderArgs),
    /// Run a packaged experiment from a JSON config.
    Experiment(ExperimentArgs),
}

#[derive(Subcommand, Debug)]
enum DistAction {
    Describe {
        #[arg(long)]
        dist: String,
        /// Rows of the CDF table.
        #[arg(long, default_value_t = 21)]
        points: usize,
    },
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    dist: String,
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Box radius.
    #[arg(long = "L")]
    l: usize,
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Grow the box by this step until e(0) settles.
    #[arg(long)]
    inflate_step: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    tol_box: f64,
    #[arg(long = "max-L", default_value_t = 60)]
    max_l: usize,
}

#[derive(Args, Debug)]
struct PathsArgs {
    #[arg(long)]
    dist: String,
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long = "L")]
    l: usize,
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 10_000)]
    n_paths: usize,
    #[arg(long, default_value_t = 0.5)]
    t0: f64,
    #[arg(long, default_value_t = 4)]
    cube_l: i64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Per-path records as JSON lines.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LadderArgs {
    #[arg(long)]
    dist: String,
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Direction, e.g. "1,0,0".
    #[arg(long)]
    x: Option<String>,
    #[arg(long, default_value = "1,2,4,6,8,10,12")]
    n_list: String,
    #[arg(long, default_value_t = 100)]
    replicas: usize,
    /// Box radius is |n·x|∞ plus this margin.
    #[arg(long, default_value_t = 12)]
    margin: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Slack on the upper end of the annealed interval.
    #[arg(long, default_value_t = 0.02)]
    slack: f64,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// continuity, convolution, low-potential, truncation or ballisticity.
    name: String,
    /// Inline JSON or a path to a JSON file.
    #[arg(long)]
    config: String,
    /// Exit with status 3 when a checked row fails.
    #[arg(long)]
    strict: bool,
}

enum Failure {
    Config(String),
    Run(String),
    Rows(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidDist(_) => Failure::Config(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

/// Inline JSON when it looks like an object, else a file path.
fn load_json(arg: &str, key: &str) -> Result<String, Failure> {
    if arg.trim_start().starts_with('{') {
        Ok(arg.to_string())
    } else {
        fs::read_to_string(arg).map_err(|e| Failure::Config(format!("--{key}: cannot read '{arg}': {e}")))
    }
}

fn load_dist(arg: &str) -> Result<DistSpec, Failure> {
    let text = load_json(arg, "dist")?;
    DistSpec::from_json(&text).map_err(|e| Failure::Config(format!("--dist: {e}")))
}

fn parse_site(s: &str, key: &str, d: usize) -> Result<Site, Failure> {
    let site: Site = s.parse().map_err(|e: Error| Failure::Config(format!("--{key}: {e}")))?;
    if site.dim() != d {
        return Err(Failure::Config(format!("--{key}: '{s}' does not have {d} coordinates")));
    }
    Ok(site)
}

struct Ctx {
    seed: u64,
    out: PathBuf,
    tag: String,
    cache: Option<EnvCache>,
}

impl Ctx {
    fn environment(&self, dist: &DistSpec, b: BoxSpec) -> Result<Environment, Failure> {
        Ok(match &self.cache {
            Some(c) => c.get_or_sample(dist, b, self.seed)?,
            None => Environment::sample(dist, b, self.seed)?,
        })
    }

    fn run_dir(&self, verb: &str, config: serde_json::Value, derived: Vec<u64>) -> Result<RunDir, Failure> {
        let m = RunManifest::new(verb, config, self.seed, derived);
        Ok(RunDir::create(&self.out, &self.tag, m)?)
    }
}

fn describe(dist: &str, points: usize) -> Result<(), Failure> {
    let f = load_dist(dist)?;
    let class = if f.in_d1() {
        "D1"
    } else if f.in_d() {
        "D"
    } else {
        "outside D"
    };
    println!("id,{}", f.id());
    println!("mean,{}", f.mean());
    println!("laplace,{}", f.laplace());
    println!("class,{class}");
    let hi = f.quantile(0.99).max(1e-9);
    let n = points.max(2);
    let mut w = csv::Writer::from_writer(std::io::stdout());
    w.write_record(["t", "cdf"]).map_err(|e| Failure::Run(e.to_string()))?;
    for i in 0..n {
        let t = hi * i as f64 / (n - 1) as f64;
        w.write_record([num(t), num(f.cdf(t))]).map_err(|e| Failure::Run(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn solve(ctx: &Ctx, a: &SolveArgs) -> Result<(), Failure> {
    let dist = load_dist(&a.dist)?;
    let y = parse_site(&a.target, "target", a.d)?;
    let opts = SolveOptions { tol: a.tol, ..SolveOptions::default() };
    let b = BoxSpec::new(a.d, a.l)?;
    if !b.contains(&y) {
        return Err(Failure::Config(format!("--target {y} lies outside the radius-{} box", a.l)));
    }
    let config = json!({"dist": dist, "d": a.d, "L": a.l, "target": y, "tol": a.tol,
        "inflate_step": a.inflate_step, "tol_box": a.tol_box, "max_L": a.max_l});
    let dir = ctx.run_dir("solve", config, vec![ctx.seed])?;
    let (field, ladder) = match a.inflate_step {
        Some(step) => {
            let r = inflate_until_stable(&dist, a.d, ctx.seed, &y, opts, a.l, step, a.tol_box, a.max_l)?;
            (r.field, r.ladder)
        }
        None => {
            let env = Arc::new(ctx.environment(&dist, b)?);
            let f = solve_survival(env, &y, opts)?;
            let e0 = f.e0();
            (f, vec![(a.l, e0)])
        }
    };
    let a0 = field.cost_a(&Site::origin(a.d)).unwrap_or(f64::INFINITY);
    let radius = field.env.box_spec.radius;
    let report = json!({
        "e0": field.e0(), "a0": a0, "sweeps": field.sweeps, "residual": field.residual,
        "rel_residual": field.rel_residual, "L": radius, "L_ladder": ladder, "box_truncated": true,
    });
    dir.write_json("report.json", &report)?;
    dir.write_csv(
        &["e0", "a0", "sweeps", "residual", "rel_residual", "L"],
        &[vec![num(field.e0()), num(a0), field.sweeps.to_string(), num(field.residual), num(field.rel_residual), radius.to_string()]],
    )?;
    dir.finish()?;
    println!("{}", serde_json::to_string_pretty(&report).expect("json"));
    Ok(())
}

fn paths(ctx: &Ctx, a: &PathsArgs) -> Result<(), Failure> {
    let dist = load_dist(&a.dist)?;
    let y = parse_site(&a.target, "target", a.d)?;
    let b = BoxSpec::new(a.d, a.l)?;
    if !b.contains(&y) {
        return Err(Failure::Config(format!("--target {y} lies outside the radius-{} box", a.l)));
    }
    let config = json!({"dist": dist, "d": a.d, "L": a.l, "target": y, "n_paths": a.n_paths,
        "t0": a.t0, "cube_l": a.cube_l, "delta": a.delta, "tol": a.tol});
    let dir = ctx.run_dir("paths", config, vec![ctx.seed])?;
    let env = Arc::new(ctx.environment(&dist, b)?);
    let field = solve_survival(env, &y, SolveOptions { tol: a.tol, ..SolveOptions::default() })?;
    let stats = conditioned_stats(&field, a.n_paths, ctx.seed, a.t0, a.cube_l, a.delta)?;
    let rows: Vec<Vec<String>> = stats
        .rows()
        .into_iter()
        .map(|(name, s)| vec![name.to_string(), num(s.mean), num(s.stderr), s.n.to_string()])
        .collect();
    dir.write_csv(&["name", "mean", "stderr", "n"], &rows)?;
    let summary = json!({"paths": stats.paths, "rows": stats.rows(), "all_a1_animals": stats.all_a1_animals,
        "e0": field.e0(), "measure": "box-truncated conditioned walk"});
    dir.write_json("report.json", &summary)?;
    if let Some(p) = &a.dump {
        let mut w = std::io::BufWriter::new(fs::File::create(p)?);
        for r in &stats.records {
            writeln!(w, "{}", serde_json::to_string(r).expect("json"))?;
        }
    }
    dir.finish()?;
    for r in rows {
        println!("{}", r.join(","));
    }
    Ok(())
}

fn ladder(ctx: &Ctx, a: &LadderArgs, annealed: bool) -> Result<(), Failure> {
    let verb = if annealed { "annealed" } else { "quenched" };
    let dist = load_dist(&a.dist)?;
    let x = match &a.x {
        Some(s) => parse_site(s, "x", a.d)?,
        None => Site::axis(a.d, 0, 1),
    };
    let n_list = a
        .n_list
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| Failure::Config(format!("--n-list: cannot parse '{}'", a.n_list)))?;
    let params = LadderParams {
        d: a.d,
        n_list,
        replicas: a.replicas,
        policy: BoxPolicy::Margin { margin: a.margin },
        tol: a.tol,
    };
    if !annealed && !dist.in_d1() {
        return Err(Failure::Run(format!("quenched exponent needs a finite-mean law, got {}", dist.id())));
    }
    let config = json!({"dist": dist, "x": x, "params": params, "slack": a.slack});
    let derived = (0..a.replicas).map(|r| replica_seed(ctx.seed, r)).collect();
    let dir = ctx.run_dir(verb, config, derived)?;
    let run = ladder_run(&dist, &x, ctx.seed, &params)?;
    let est: LyapunovEstimate = if annealed { run.annealed()? } else { run.quenched()? };
    let bounds = annealed.then(|| bounds_check(&est, a.slack));
    let rows: Vec<Vec<String>> = est
        .records
        .iter()
        .map(|r| {
            vec![
                est.kind.as_str().to_string(),
                est.dist_id(),
                x.to_string(),
                r.n.to_string(),
                num(r.value),
                num(r.stderr),
                r.replicas.to_string(),
                r.radius.to_string(),
                bounds.as_ref().map(|b| b.violations_at(r.n).to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    dir.write_csv(&["kind", "dist_id", "x", "n", "value", "stderr", "M", "L", "violations"], &rows)?;
    dir.write_json("report.json", &json!({"estimate": est, "bounds": bounds}))?;
    dir.finish()?;
    for r in rows {
        println!("{}", r.join(" "));
    }
    Ok(())
}

fn experiment(ctx: &Ctx, a: &ExperimentArgs, seed: Option<u64>) -> Result<(), Failure> {
    let text = load_json(&a.config, "config")?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("--config: {e}")))?;
    // nothing is written until the config parses
    parse_experiment_config(&a.name, &text)?;
    let dir = ctx.run_dir(&format!("experiment/{}", a.name), value, vec![ctx.seed])?;
    let report: ExperimentReport = run_experiment(&a.name, &text, seed)?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.label.clone(),
                num(r.lhs),
                num(r.lhs_stderr),
                opt_num(r.rhs),
                num(r.slack),
                opt_num(r.margin),
                r.pass.to_string(),
                r.checked.to_string(),
            ]
        })
        .collect();
    dir.write_csv(&["label", "lhs", "lhs_stderr", "rhs", "slack", "margin", "pass", "checked"], &rows)?;
    dir.write_json("report.json", &report)?;
    dir.finish()?;
    for r in &report.rows {
        let status = if !r.checked { "info" } else if r.pass { "PASS" } else { "FAIL" };
        println!("{status} {} lhs={} rhs={}", r.label, r.lhs, opt_num(r.rhs));
    }
    let failed = report.failures().len();
    if a.strict && failed > 0 {
        return Err(Failure::Rows(failed));
    }
    Ok(())
}

fn parse_experiment_config(name: &str, text: &str) -> Result<(), Failure> {
    use lyaplab::experiments::*;
    fn check<T: serde::de::DeserializeOwned>(text: &str) -> Result<(), Failure> {
        serde_json::from_str::<T>(text).map(|_| ()).map_err(|e| Failure::Config(format!("--config: {e}")))
    }
    match name {
        "continuity" => check::<ContinuityConfig>(text),
        "convolution" => check::<ConvolutionConfig>(text),
        "low-potential" => check::<LowPotentialConfig>(text),
        "truncation" => check::<TruncationConfig>(text),
        "ballisticity" => check::<BallisticityConfig>(text),
        other => Err(Failure::Config(format!("unknown experiment '{other}', expected one of {EXPERIMENTS:?}"))),
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let cache_dir = cli.env_cache.clone().or_else(|| std::env::var_os("LYAPLAB_CACHE").map(PathBuf::from));
    let ctx = Ctx {
        seed: cli.seed.unwrap_or(0),
        out: cli.out.clone(),
        tag: cli.tag.clone().unwrap_or_else(|| output::unix_now().to_string()),
        cache: cache_dir.map(EnvCache::new).transpose()?,
    };
    match &cli.verb {
        Verb::Dist { action: DistAction::Describe { dist, points } } => describe(dist, *points),
        Verb::Solve(a) => solve(&ctx, a),
        Verb::Paths(a) => paths(&ctx, a),
        Verb::Quenched(a) => ladder(&ctx, a, false),
        Verb::Annealed(a) => ladder(&ctx, a, true),
        Verb::Experiment(a) => experiment(&ctx, a, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("config error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Rows(n)) => {
            eprintln!("{n} checked row(s) failed");
            ExitCode::from(3)
        }
    }
}
