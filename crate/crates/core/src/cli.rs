//! Command-line front end. Structured inputs come from a JSON config, flags
//! only pick files and modes. Exit codes: 0 success, 1 a violation was
//! found, 2 bad input.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::construction::{audit, audit_points, build, DeloneSet, FillPolicy, ScaleSchedule};
use crate::density::DensitySpec;
use crate::distortion::{
    co_uniformity, counting_lower_bound, escape_check, interior_balls, lipschitz_constants,
    nested_family, order_gate, regularity_constant, BijectionTable,
};
use crate::error::{Error, Result};
use crate::geometry::{Ball, ScaledPoint};
use crate::io;
use crate::matching::{brute_force_min, min_lipschitz, MatchInstance, MatchMode, Method};
use crate::measures::{
    discrepancy, mass_loss, normalize_patch, CountingMeasure, RectFamily, CSV_HEADER,
};
use crate::rational::{fmt_rational, int, parse_rational, Rational};
use crate::svg;

#[derive(Parser, Debug)]
#[command(name = "delone", version, about = "Density-driven Delone sets and distortion diagnostics")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for randomized fills and searches.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exact,
    Heuristic,
    Brute,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Lipschitz,
    Bilipschitz,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the configured window of the set and audit it.
    Build,
    /// Audit a point-set file against the configuration.
    Audit {
        #[arg(long)]
        points: PathBuf,
    },
    /// Minimal-Lipschitz matching between two point-set files.
    Match {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        method: MethodArg,
        #[arg(long, value_enum, default_value = "lipschitz")]
        mode: ModeArg,
        /// Allow a smaller source than target.
        #[arg(long)]
        injective: bool,
        /// Cross-check against exhaustive enumeration when it is small enough.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 200)]
        iters: usize,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
    },
    /// Distortion, regularity and co-uniformity of a map file.
    Analyze {
        #[arg(long)]
        map: PathBuf,
        /// Radii in target units, comma separated.
        #[arg(long, value_delimiter = ',')]
        radii: Vec<String>,
        /// Run the boundary-escape check described by the config's `escape` block.
        #[arg(long)]
        escape: bool,
        #[arg(long, default_value_t = 64)]
        search_cap: u32,
    },
    /// Counting-measure discrepancy per level, with optional mass loss.
    Measures {
        /// `dyadic:<depth>`, `cells` or `cells:<m>`.
        #[arg(long)]
        family: Option<String>,
        /// Normalized map (`map-v1`) for the mass-loss block.
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        level: Option<usize>,
    },
    /// SVG of a point-set file or a CSV table.
    Plot {
        #[arg(long)]
        input: PathBuf,
    },
    /// Build, audit and measure every materialized level in one JSON report.
    Report,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    #[default]
    RowMajor,
    Seeded,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EscapeSpec {
    pub center: [String; 2],
    pub r0: String,
    #[serde(rename = "L")]
    pub lipschitz: String,
    pub l: i64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassLossSpec {
    pub center: [String; 2],
    pub radius: String,
}

/// JSON run configuration; every field is optional and checked by the
/// command that needs it.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub density: Option<DensitySpec>,
    pub schedule: Option<ScaleSchedule>,
    pub window: Option<Ball>,
    #[serde(default)]
    pub policy: PolicyName,
    pub seed: Option<u64>,
    pub family: Option<String>,
    pub escape: Option<EscapeSpec>,
    pub mass_loss: Option<MassLossSpec>,
}

struct Ctx {
    cli: Cli,
    config: RunConfig,
    config_json: Value,
    seed: u64,
    outputs: Vec<String>,
}

impl Ctx {
    fn density(&self) -> Result<&DensitySpec> {
        self.config
            .density
            .as_ref()
            .ok_or_else(|| Error::Config("config lacks 'density'".into()))
    }

    fn schedule(&self) -> Result<&ScaleSchedule> {
        self.config
            .schedule
            .as_ref()
            .ok_or_else(|| Error::Config("config lacks 'schedule'".into()))
    }

    fn policy(&self) -> FillPolicy {
        match self.config.policy {
            PolicyName::RowMajor => FillPolicy::RowMajor,
            PolicyName::Seeded => FillPolicy::Seeded(self.seed),
        }
    }

    fn build(&self) -> Result<DeloneSet> {
        let schedule = self.schedule()?;
        let window = match &self.config.window {
            Some(w) => w.clone(),
            None => schedule
                .covering_window()
                .ok_or_else(|| Error::Config("schedule has no levels".into()))?,
        };
        build(self.density()?, schedule, &window, self.policy())
    }

    fn format(&self, default: Format) -> Format {
        self.cli.format.unwrap_or(default)
    }

    /// Writes the primary output to `--out` or standard output.
    fn emit(&mut self, text: &str) -> Result<()> {
        match &self.cli.out {
            Some(p) => {
                std::fs::write(p, text)?;
                self.outputs.push(p.display().to_string());
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())?;
                out.flush()?;
            }
        }
        Ok(())
    }

    /// Writes a companion file next to `--out`, if one was given.
    fn emit_side(&mut self, suffix: &str, text: &str) -> Result<()> {
        if let Some(p) = &self.cli.out {
            let path = sidecar(p, suffix);
            std::fs::write(&path, text)?;
            self.outputs.push(path.display().to_string());
        }
        Ok(())
    }
}

fn sidecar(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn rational_pair(p: &[String; 2]) -> Result<(Rational, Rational)> {
    Ok((parse_rational(&p[0])?, parse_rational(&p[1])?))
}

fn check_input(p: &Path) -> Result<()> {
    if !p.is_file() {
        return Err(Error::Config(format!("input file {} does not exist", p.display())));
    }
    Ok(())
}

fn validate_paths(cli: &Cli) -> Result<()> {
    if let Some(c) = &cli.config {
        check_input(c)?;
    }
    if let Some(o) = &cli.out {
        let parent = o.parent().filter(|p| !p.as_os_str().is_empty());
        if let Some(dir) = parent {
            if !dir.is_dir() {
                return Err(Error::Config(format!(
                    "output directory {} does not exist",
                    dir.display()
                )));
            }
        }
    }
    match &cli.command {
        Command::Audit { points } => check_input(points),
        Command::Match { source, target, .. } => check_input(source).and(check_input(target)),
        Command::Analyze { map, .. } => check_input(map),
        Command::Measures { map: Some(m), .. } => check_input(m),
        Command::Plot { input } => check_input(input),
        _ => Ok(()),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Build => "build",
        Command::Audit { .. } => "audit",
        Command::Match { .. } => "match",
        Command::Analyze { .. } => "analyze",
        Command::Measures { .. } => "measures",
        Command::Plot { .. } => "plot",
        Command::Report => "report",
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("DELONE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // a pool may already exist when running in-process more than once
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    configure_threads();
    let name = command_name(&cli.command);
    let argv_text: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let manifest_path = cli
        .out
        .as_ref()
        .map(|o| sidecar(o, ".manifest.json"))
        .unwrap_or_else(|| PathBuf::from("delone.manifest.json"));

    let mut ctx = None;
    let result = prepare(cli).and_then(|c| {
        let c = ctx.insert(c);
        dispatch(c)
    });
    let code = match &result {
        Ok(code) => *code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    };
    let manifest = json!({
        "tool": "delone",
        "version": env!("CARGO_PKG_VERSION"),
        "command": name,
        "argv": argv_text,
        "seed": ctx.as_ref().map(|c| c.seed),
        "config": ctx.as_ref().map(|c| c.config_json.clone()),
        "outputs": ctx.as_ref().map(|c| c.outputs.clone()).unwrap_or_default(),
        "exit_code": code,
    });
    if let Err(e) = std::fs::write(&manifest_path, pretty(&manifest)) {
        eprintln!("error: cannot write manifest {}: {e}", manifest_path.display());
        return 2;
    }
    code
}

fn prepare(cli: Cli) -> Result<Ctx> {
    validate_paths(&cli)?;
    let (config, config_json) = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            let raw: Value = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            let cfg: RunConfig = serde_json::from_value(raw.clone())
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            (cfg, raw)
        }
        None => (RunConfig::default(), Value::Null),
    };
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    Ok(Ctx {
        cli,
        config,
        config_json,
        seed,
        outputs: Vec::new(),
    })
}

fn dispatch(ctx: &mut Ctx) -> Result<i32> {
    match &ctx.cli.command {
        Command::Build => cmd_build(ctx),
        Command::Audit { points } => {
            let points = points.clone();
            cmd_audit(ctx, &points)
        }
        Command::Match {
            source,
            target,
            method,
            mode,
            injective,
            oracle,
            iters,
            restarts,
        } => {
            let (source, target) = (source.clone(), target.clone());
            let mode = match mode {
                ModeArg::Lipschitz => MatchMode::Lipschitz,
                ModeArg::Bilipschitz => MatchMode::Bilipschitz,
            };
            let (method, injective, oracle, iters, restarts) =
                (*method, *injective, *oracle, *iters, *restarts);
            cmd_match(ctx, &source, &target, method, mode, injective, oracle, iters, restarts)
        }
        Command::Analyze {
            map,
            radii,
            escape,
            search_cap,
        } => {
            let (map, radii, escape, cap) = (map.clone(), radii.clone(), *escape, *search_cap);
            cmd_analyze(ctx, &map, &radii, escape, cap)
        }
        Command::Measures { family, map, level } => {
            let (family, map, level) = (family.clone(), map.clone(), *level);
            cmd_measures(ctx, family, map.as_deref(), level)
        }
        Command::Plot { input } => {
            let input = input.clone();
            cmd_plot(ctx, &input)
        }
        Command::Report => cmd_report(ctx),
    }
}

fn cmd_build(ctx: &mut Ctx) -> Result<i32> {
    let d = ctx.build()?;
    let report = audit(&d);
    ctx.emit(&io::write_points(d.points()))?;
    let text = pretty(&serde_json::to_value(&report)?);
    if ctx.cli.out.is_some() {
        ctx.emit_side(".audit.json", &text)?;
    } else {
        eprint!("{text}");
    }
    Ok(if report.is_clean() { 0 } else { 1 })
}

fn cmd_audit(ctx: &mut Ctx, points: &Path) -> Result<i32> {
    let pts = io::read_points(points)?;
    let d = ctx.build()?;
    let report = audit_points(&d, &pts);
    ctx.emit(&pretty(&serde_json::to_value(&report)?))?;
    Ok(if report.is_clean() { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn cmd_match(
    ctx: &mut Ctx,
    source: &Path,
    target: &Path,
    method: MethodArg,
    mode: MatchMode,
    injective: bool,
    oracle: bool,
    iters: usize,
    restarts: usize,
) -> Result<i32> {
    let inst = MatchInstance::new(io::read_points(source)?, io::read_points(target)?, mode, injective)?;
    let result = match method {
        MethodArg::Exact => min_lipschitz(&inst, Method::Exact)?,
        MethodArg::Heuristic => min_lipschitz(
            &inst,
            Method::Heuristic {
                seed: ctx.seed,
                iters,
                restarts,
            },
        )?,
        MethodArg::Brute => brute_force_min(&inst)?,
    };
    let mut v = result.to_json();
    let mut code = 0;
    if oracle {
        match brute_force_min(&inst) {
            Ok(o) => {
                let agree = if result.optimal {
                    o.l_star == result.l_star
                } else {
                    o.l_star <= result.l_star
                };
                v["oracle"] = json!({ "L_star": fmt_rational(&o.l_star), "agrees": agree });
                if !agree {
                    code = 1;
                }
            }
            Err(e) => v["oracle"] = json!({ "skipped": e.to_string() }),
        }
    }
    ctx.emit(&pretty(&v))?;
    Ok(code)
}

fn default_radii(f: &BijectionTable) -> Vec<Rational> {
    let t = Rational::new(1, f.target().denom());
    let diam = f
        .target()
        .bounding_box()
        .map(|[x0, x1, y0, y1]| Rational::new((x1 - x0).max(y1 - y0), f.target().denom()))
        .unwrap_or(int(0));
    let mut out = Vec::new();
    let mut r = t;
    while r * int(2) <= diam || out.len() < 3 {
        out.push(r);
        r *= int(2);
    }
    out
}

/// Every `k`-th ball, keeping at most `cap` of them.
fn thin<T: Clone>(v: Vec<T>, cap: usize) -> Vec<T> {
    if v.len() <= cap {
        return v;
    }
    let step = v.len().div_ceil(cap);
    v.into_iter().step_by(step).collect()
}

fn err_json(e: &Error) -> Value {
    json!({ "error": e.to_string() })
}

fn cmd_analyze(ctx: &mut Ctx, map: &Path, radii: &[String], escape: bool, cap: u32) -> Result<i32> {
    let f = io::read_map(map)?;
    let radii: Vec<Rational> = if radii.is_empty() {
        default_radii(&f)
    } else {
        radii.iter().map(|r| parse_rational(r)).collect::<Result<_>>()?
    };
    if radii.iter().any(|r| *r <= int(0)) {
        return Err(Error::Config("radii must be positive".into()));
    }
    let mut out = serde_json::Map::new();
    let mut code = 0;
    out.insert(
        "lipschitz".into(),
        match lipschitz_constants(&f) {
            Ok(r) => serde_json::to_value(r)?,
            Err(e) => err_json(&e),
        },
    );
    let modulus = co_uniformity(&f, &radii)?;
    out.insert(
        "order_gate".into(),
        match order_gate(&modulus, 2) {
            Ok(g) => serde_json::to_value(g)?,
            Err(e) => err_json(&e),
        },
    );
    out.insert("co_uniformity".into(), serde_json::to_value(&modulus)?);
    let reg_radii: Vec<Rational> = radii.iter().copied().take(3).collect();
    let balls = thin(interior_balls(f.target(), &reg_radii), 400);
    out.insert(
        "regularity".into(),
        if balls.is_empty() {
            json!({ "error": "no ball fits inside the target" })
        } else {
            match regularity_constant(&f, &balls, cap) {
                Ok(r) => json!({
                    "C_hat": r.c_hat,
                    "approximate": r.approximate,
                    "balls": r.certificates.len(),
                    "failing_below": r.failing_below,
                }),
                Err(e) => err_json(&e),
            }
        },
    );
    let t = Rational::new(1, f.target().denom());
    out.insert(
        "counting_bound".into(),
        serde_json::to_value(counting_lower_bound(f.source(), t, &reg_radii)?)?,
    );
    if escape {
        let spec = ctx
            .config
            .escape
            .clone()
            .ok_or_else(|| Error::Config("--escape needs an 'escape' block in the config".into()))?;
        let c = rational_pair(&spec.center)?;
        let lip = parse_rational(&spec.lipschitz)?;
        let family = nested_family(parse_rational(&spec.r0)?, lip, spec.l);
        let diag = escape_check(&f, ScaledPoint::from_rationals(c.0, c.1), &family, lip, spec.l)?;
        if diag.claim1_violations + diag.claim4_violations > 0 {
            code = 1;
        }
        out.insert("escape".into(), serde_json::to_value(diag)?);
    }
    ctx.emit(&pretty(&Value::Object(out)))?;
    Ok(code)
}

fn materialized_levels(d: &DeloneSet, only: Option<usize>) -> Result<Vec<usize>> {
    let levels: Vec<usize> = (0..d.schedule().levels.len())
        .filter(|&n| d.level_materialized(n))
        .filter(|&n| only.is_none_or(|k| k == n))
        .collect();
    if let Some(k) = only {
        if levels.is_empty() {
            return Err(Error::State(format!("level {k} is not materialized")));
        }
    }
    Ok(levels)
}

fn cmd_measures(
    ctx: &mut Ctx,
    family: Option<String>,
    map: Option<&Path>,
    level: Option<usize>,
) -> Result<i32> {
    let d = ctx.build()?;
    let levels = materialized_levels(&d, level)?;
    let spec = family.or(ctx.config.family.clone()).unwrap_or_else(|| "cells".into());
    let map = map.map(io::read_map).transpose()?;
    let mut csv = format!("{CSV_HEADER}\n");
    let mut summary = Vec::new();
    let mut code = 0;
    for &n in &levels {
        let lv = &d.schedule().levels[n];
        let patch = normalize_patch(&d, n)?;
        let fam = RectFamily::parse(&spec, lv.m)?;
        let m = CountingMeasure::new(patch.points.clone(), lv.l);
        let disc = discrepancy(&m, d.density(), &fam)?;
        csv.push_str(&disc.csv_rows(n));
        let bound = (lv.m * lv.m) as f64 / (lv.l * lv.l) as f64 + 1e-6;
        let mut entry = json!({
            "level": n,
            "l": lv.l,
            "m": lv.m,
            "points": patch.points.len(),
            "family": disc.family,
            "sup_discrepancy": disc.sup,
            "argmax": disc.argmax,
        });
        if fam.name.starts_with("cells") && fam.name == format!("cells:{}", lv.m) {
            entry["cell_bound"] = json!(bound);
            entry["within_bound"] = json!(disc.sup <= bound);
            if disc.sup > bound {
                code = 1;
            }
        }
        if ctx.cli.format == Some(Format::Json) {
            entry["rows"] = serde_json::to_value(&disc.rows)?;
        }
        if let Some(ml) = &ctx.config.mass_loss {
            let c = rational_pair(&ml.center)?;
            let q = Ball::closed(c, parse_rational(&ml.radius)?);
            let admissible: Vec<i64> = levels
                .iter()
                .filter(|&&k| k <= n)
                .map(|&k| d.schedule().levels[k].l)
                .collect();
            let f = match &map {
                Some(f) => f.clone(),
                None => BijectionTable::identity(&patch.points),
            };
            let r = mass_loss(&f, &q, lv.l, &admissible)?;
            entry["mass_loss"] = json!({
                "missing": r.missing.len(),
                "normalized_mass": fmt_rational(&r.normalized_mass),
                "band_width": fmt_rational(&r.band_width),
            });
        }
        summary.push(entry);
    }
    let summary = json!({ "family": spec, "levels": summary });
    match ctx.format(Format::Csv) {
        Format::Csv => {
            ctx.emit(&csv)?;
            ctx.emit_side(".summary.json", &pretty(&summary))?;
        }
        Format::Json => ctx.emit(&pretty(&summary))?,
    }
    Ok(code)
}

fn cmd_plot(ctx: &mut Ctx, input: &Path) -> Result<i32> {
    let text = std::fs::read_to_string(input)?;
    let svg = if text.starts_with(io::POINTS_MAGIC) {
        svg::points_svg(&io::parse_points(&text)?)
    } else {
        svg::series_svg(&text)?
    };
    ctx.emit(&svg)?;
    Ok(0)
}

fn cmd_report(ctx: &mut Ctx) -> Result<i32> {
    let d = ctx.build()?;
    let report = audit(&d);
    let levels = materialized_levels(&d, None)?;
    let dyadic = RectFamily::dyadic(4);
    let mut rows = Vec::new();
    let mut sups = Vec::new();
    for &n in &levels {
        let lv = &d.schedule().levels[n];
        let patch = normalize_patch(&d, n)?;
        let m = CountingMeasure::new(patch.points.clone(), lv.l);
        let cells = discrepancy(&m, d.density(), &RectFamily::cells(lv.m))?;
        let dy = discrepancy(&m, d.density(), &dyadic)?;
        sups.push(dy.sup);
        rows.push(json!({
            "level": n,
            "l": lv.l,
            "m": lv.m,
            "points": patch.points.len(),
            "cells_sup": cells.sup,
            "cells_bound": (lv.m * lv.m) as f64 / (lv.l * lv.l) as f64,
            "dyadic4_sup": dy.sup,
        }));
    }
    let v = json!({
        "points": d.points().len(),
        "audit": {
            "clean": report.is_clean(),
            "violations": report.violations.len(),
            "cells_checked": report.cells_checked,
            "sigma": report.sigma.map(|s| fmt_rational(&s)),
            "covering": report.covering.map(|s| fmt_rational(&s)),
        },
        "levels": rows,
        "dyadic_nonincreasing": sups.windows(2).all(|w| w[1] <= w[0]),
    });
    ctx.emit(&pretty(&v))?;
    Ok(if report.is_clean() { 0 } else { 1 })
}
