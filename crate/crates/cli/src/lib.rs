//! Front end for the `bohrcolor` binary: argument parsing, configuration,
//! command dispatch and report files.
//!
//! Exit codes: 0 success, 1 failed check or precondition, 2 bad input,
//! 3 the ambient bound `m` is too small, 4 a construction inequality failed.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use bohrcolor_core::bohr::build_witness;
use bohrcolor_core::construction::{is_member, sample};
use bohrcolor_core::projection::{color_integer, density, enumerate, project, AlphaSchedule, ScheduleCertificate};
use bohrcolor_core::verify::{cayley_audit, discrepancy, nilbohr_hit_in, IntegerColorer};
use bohrcolor_core::{Error, IntegerSetReport, NilBohrNbhd, SpecialGenPoly, TorusBohrSet};
use clap::{Parser, Subcommand};
use serde::Serialize;

pub use config::{Golden, GoldenAudit, GoldenEnumerate, NamedNbhd, RunConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Unreadable or malformed input.
    Input(String),
    Io(String),
    Core(Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Core(e) => match e {
                Error::Domain(_) | Error::Dimension(_) | Error::Config(_) => 2,
                Error::InvalidParams { .. } | Error::Precondition(_) | Error::Overflow(_) => 1,
                Error::Capacity { .. } | Error::NeedLargerM { .. } => 3,
                Error::ConstructionViolation(_) => 4,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bohrcolor", version, about = "Audits for a progression-blocking coloring of the integers")]
pub struct Cli {
    #[arg(long, global = true, default_value = "config/default.json")]
    pub config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Write reference values instead of comparing against them.
    #[arg(long, global = true)]
    pub record: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the parameters and certify the frequency schedule.
    Validate,
    /// Draw seeded members of S_m.
    Sample {
        #[arg(long)]
        count: Option<u64>,
    },
    /// Build a member of S_m inside a Bohr set read from JSON.
    Witness {
        #[arg(long)]
        bohr: PathBuf,
    },
    /// List S_ℕ ∩ [1, N].
    Enumerate {
        #[arg(long)]
        n: Option<u64>,
    },
    /// Colors of the given integers.
    Color {
        #[arg(required = true)]
        values: Vec<u64>,
    },
    /// Exhaustive 3-AP audit over [1, N] with differences in S_ℕ.
    Audit {
        #[arg(long)]
        n: Option<u64>,
    },
    /// Search S_ℕ for nil-Bohr hits.
    Nilbohr {
        /// A neighborhood file to use instead of the configured ones.
        #[arg(long)]
        nbhd: Option<PathBuf>,
        #[arg(long)]
        n: Option<u64>,
    },
    /// Discrepancy and density statistics.
    Stats,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Sample { .. } => "sample",
            Command::Witness { .. } => "witness",
            Command::Enumerate { .. } => "enumerate",
            Command::Color { .. } => "color",
            Command::Audit { .. } => "audit",
            Command::Nilbohr { .. } => "nilbohr",
            Command::Stats => "stats",
        }
    }
}

/// What a command concluded.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub ok: bool,
    pub summary: String,
    pub report_path: PathBuf,
}

#[derive(Serialize)]
struct Header<'a> {
    command: &'a str,
    unix_time: u64,
    elapsed_secs: f64,
    workers: usize,
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    header: Header<'a>,
    report: &'a T,
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    record: bool,
    seed: u64,
    started: Instant,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn schedule(&self) -> Result<AlphaSchedule, CliError> {
        Ok(AlphaSchedule::build(&self.cfg.schedule, &self.cfg.params)?)
    }

    fn write_report<T: Serialize>(&self, command: &str, name: &str, report: &T) -> Result<PathBuf, CliError> {
        let env = Envelope {
            header: Header {
                command,
                unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
                elapsed_secs: self.started.elapsed().as_secs_f64(),
                workers: rayon::current_num_threads(),
            },
            report,
        };
        let path = self.path(name);
        let text = serde_json::to_string_pretty(&env).expect("reports serialize");
        fs::write(&path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

/// Parses, configures the worker pool and runs one command.
pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    let cfg = RunConfig::load(&cli.config)?;
    let workers = cli.workers.or(cfg.workers);
    let out = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let ctx =
        Ctx { seed: cli.seed.unwrap_or(cfg.sampling.seed), cfg, out, record: cli.record, started: Instant::now() };

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = workers {
        pool = pool.num_threads(k);
    }
    let pool = pool.build().map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    pool.install(|| {
        ctx.cfg.params.validate()?;
        dispatch(&ctx, &cli.command)
    })
}

fn dispatch(ctx: &Ctx, cmd: &Command) -> Result<Outcome, CliError> {
    let name = cmd.name();
    match cmd {
        Command::Validate => cmd_validate(ctx, name),
        Command::Sample { count } => cmd_sample(ctx, name, count.unwrap_or(ctx.cfg.sampling.count)),
        Command::Witness { bohr } => cmd_witness(ctx, name, bohr),
        Command::Enumerate { n } => cmd_enumerate(ctx, name, n.unwrap_or(ctx.cfg.scan.enumerate_n)),
        Command::Color { values } => cmd_color(ctx, name, values),
        Command::Audit { n } => cmd_audit(ctx, name, n.unwrap_or(ctx.cfg.scan.audit_n)),
        Command::Nilbohr { nbhd, n } => cmd_nilbohr(ctx, name, nbhd.as_deref(), n.unwrap_or(ctx.cfg.scan.enumerate_n)),
        Command::Stats => cmd_stats(ctx, name),
    }
}

#[derive(Serialize)]
struct ValidateReport {
    params: bohrcolor_core::ValidationReport,
    schedule: ScheduleCertificate,
    fingerprint: String,
}

fn cmd_validate(ctx: &Ctx, name: &str) -> Result<Outcome, CliError> {
    let params = ctx.cfg.params.validate()?;
    let sched = ctx.schedule()?;
    let cert = sched.certify(ctx.cfg.max_scan());
    let ok = cert.passed();
    let summary = if ok {
        format!(
            "parameters valid (margins {:.6}, {:.6}); schedule m = {} certified, tail bound {:e}",
            params.lower_margin, params.upper_margin, cert.m, cert.tail_bound
        )
    } else {
        format!("schedule certification failed: {}", cert.problems.join("; "))
    };
    let report = ValidateReport { params, schedule: cert, fingerprint: sched.fingerprint() };
    let report_path = ctx.write_report(name, "validate.json", &report)?;
    Ok(Outcome { ok, summary, report_path })
}

#[derive(Serialize)]
struct SampleReport {
    seed: u64,
    points: Vec<bohrcolor_core::SparsePoint>,
}

fn cmd_sample(ctx: &Ctx, name: &str, count: u64) -> Result<Outcome, CliError> {
    let p = &ctx.cfg.params;
    let mut points = Vec::new();
    for k in 0..count {
        let x = sample(p, ctx.seed.wrapping_add(k))?;
        debug_assert!(is_member(&x, p)?.is_member);
        points.push(x);
    }
    let report_path = ctx.write_report(name, "sample.json", &SampleReport { seed: ctx.seed, points })?;
    Ok(Outcome { ok: true, summary: format!("{count} members of S_m written"), report_path })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn cmd_witness(ctx: &Ctx, name: &str, bohr: &Path) -> Result<Outcome, CliError> {
    let b: TorusBohrSet = read_json(bohr)?;
    let r = build_witness(&b, &ctx.cfg.params)?;
    let summary = format!(
        "witness anchored at {} after {} coordinates: |f(v)| = {:e}, Σ|f_j - f_i| = {:e}, δ₁ε = {:e}",
        r.anchor, r.scanned, r.sup_norm, r.chain_bound, r.bound
    );
    let report_path = ctx.write_report(name, "witness.json", &r)?;
    Ok(Outcome { ok: true, summary, report_path })
}

fn enumerate_set(ctx: &Ctx, n: u64) -> Result<(AlphaSchedule, IntegerSetReport), CliError> {
    let sched = ctx.schedule()?;
    let set = enumerate(n, &ctx.cfg.params, &sched, ctx.cfg.scan.guard_fraction)?;
    Ok((sched, set))
}

fn write_enumeration_csv(path: &Path, set: &IntegerSetReport) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["n", "margin", "guard"]).map_err(io)?;
    for ((n, m), g) in set.elements.iter().zip(&set.margins).zip(&set.guards) {
        w.write_record([n.to_string(), format!("{m:e}"), format!("{g:e}")]).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

fn cmd_enumerate(ctx: &Ctx, name: &str, n: u64) -> Result<Outcome, CliError> {
    let (_, set) = enumerate_set(ctx, n)?;
    write_enumeration_csv(&ctx.path("enumerate.csv"), &set)?;
    let report_path = ctx.write_report(name, "enumerate.json", &set)?;

    let observed = GoldenEnumerate {
        scan_bound: n,
        fingerprint: set.fingerprint.clone(),
        first_element: set.elements.first().copied(),
        count: set.elements.len(),
    };
    let (ok, note) = golden_check(ctx, |g| &mut g.enumerate, observed)?;
    let margins = set.margins.iter().copied();
    let min = margins.clone().fold(f64::INFINITY, f64::min);
    let max = margins.fold(f64::NEG_INFINITY, f64::max);
    let summary = if set.elements.is_empty() {
        format!("S_ℕ ∩ [1, {n}] is empty{note}")
    } else {
        format!(
            "{} elements in [{}, {}], margins in [{min:e}, {max:e}]{note}",
            set.elements.len(),
            set.elements[0],
            set.elements[set.elements.len() - 1]
        )
    };
    Ok(Outcome { ok, summary, report_path })
}

/// Records or compares a golden entry. Entries for other scan bounds or
/// schedules are left alone and not compared.
fn golden_check<T, F>(ctx: &Ctx, slot: F, observed: T) -> Result<(bool, String), CliError>
where
    T: PartialEq + Clone + std::fmt::Debug + GoldenKey,
    F: Fn(&mut Golden) -> &mut Option<T>,
{
    let path = &ctx.cfg.output.golden;
    let mut golden = Golden::load(path)?;
    if ctx.record {
        *slot(&mut golden) = Some(observed);
        golden.save(path)?;
        return Ok((true, format!("; recorded to {}", path.display())));
    }
    match slot(&mut golden).as_ref() {
        Some(g) if g.key() == observed.key() => {
            if *g == observed {
                Ok((true, "; matches golden".into()))
            } else {
                Ok((false, format!("; golden mismatch: expected {g:?}, got {observed:?}")))
            }
        }
        _ => Ok((true, String::new())),
    }
}

trait GoldenKey {
    fn key(&self) -> (u64, &str);
}

impl GoldenKey for GoldenEnumerate {
    fn key(&self) -> (u64, &str) {
        (self.scan_bound, &self.fingerprint)
    }
}

impl GoldenKey for GoldenAudit {
    fn key(&self) -> (u64, &str) {
        (self.range, &self.fingerprint)
    }
}

#[derive(Serialize)]
struct ColorReport {
    colors: Vec<(u64, u64)>,
}

fn cmd_color(ctx: &Ctx, name: &str, values: &[u64]) -> Result<Outcome, CliError> {
    let sched = ctx.schedule()?;
    let colors = values
        .iter()
        .map(|&n| Ok((n, color_integer(n, &ctx.cfg.params, &sched)?.0)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let summary = colors.iter().map(|(n, c)| format!("{n}: {c}")).collect::<Vec<_>>().join(", ");
    let report_path = ctx.write_report(name, "color.json", &ColorReport { colors })?;
    Ok(Outcome { ok: true, summary, report_path })
}

#[derive(Serialize)]
struct AuditOutput {
    audit: bohrcolor_core::AuditReport,
    colors_used: usize,
    occupancy: std::collections::BTreeMap<u64, u64>,
    differences: Vec<u64>,
}

fn cmd_audit(ctx: &Ctx, name: &str, n: u64) -> Result<Outcome, CliError> {
    let (sched, set) = enumerate_set(ctx, n)?;
    let colorer = IntegerColorer::new(&ctx.cfg.params, &sched);
    let cayley = cayley_audit(n, &set.elements, &colorer)?;
    let audit = cayley.audit;

    let csv_path = ctx.path("audit.csv");
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", csv_path.display()));
    let mut w = csv::Writer::from_path(&csv_path).map_err(io)?;
    w.write_record(["range", "differences", "triples_checked", "violations", "boundary_flags", "colors_used"])
        .map_err(io)?;
    w.write_record([
        n.to_string(),
        set.elements.len().to_string(),
        audit.triples_checked.to_string(),
        audit.violation_count.to_string(),
        audit.boundary_flags.to_string(),
        cayley.colors_used.to_string(),
    ])
    .map_err(io)?;
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;

    let observed = GoldenAudit { range: n, fingerprint: set.fingerprint.clone(), colors_used: cayley.colors_used };
    let (golden_ok, note) = golden_check(ctx, |g| &mut g.audit, observed)?;
    let ok = audit.is_clean() && golden_ok;
    let summary = format!(
        "{} triples over {} differences, {} violations, {} colors, {} boundary flags{note}",
        audit.triples_checked,
        set.elements.len(),
        audit.violation_count,
        cayley.colors_used,
        audit.boundary_flags
    );
    let out =
        AuditOutput { audit, colors_used: cayley.colors_used, occupancy: cayley.occupancy, differences: set.elements };
    let report_path = ctx.write_report(name, "audit.json", &out)?;
    Ok(Outcome { ok, summary, report_path })
}

#[derive(Serialize)]
struct NilbohrEntry {
    name: String,
    required: bool,
    revalidated: bool,
    hit: bohrcolor_core::HitReport,
}

fn cmd_nilbohr(ctx: &Ctx, name: &str, file: Option<&Path>, n: u64) -> Result<Outcome, CliError> {
    let nbhds: Vec<NamedNbhd> = match file {
        Some(f) => {
            let nbhd: NilBohrNbhd = read_json(f)?;
            vec![NamedNbhd { name: f.display().to_string(), nbhd, require_hit: false }]
        }
        None => ctx.cfg.neighborhoods.clone(),
    };
    let (sched, set) = enumerate_set(ctx, n)?;
    let p = &ctx.cfg.params;
    let mut entries = Vec::new();
    for nb in nbhds {
        let hit = nilbohr_hit_in(&nb.nbhd, &set, p.tol)?;
        let revalidated = hit.revalidate(&nb.nbhd, p, &sched)?;
        entries.push(NilbohrEntry { name: nb.name, required: nb.require_hit, revalidated, hit });
    }
    let ok = entries.iter().all(|e| e.revalidated && (!e.required || e.hit.witness.is_some()));
    let summary = entries
        .iter()
        .map(|e| match e.hit.witness {
            Some(w) => format!("{}: hit at n = {w}", e.name),
            None => format!("{}: no hit among {} elements up to {}", e.name, e.hit.candidates, e.hit.search_bound),
        })
        .collect::<Vec<_>>()
        .join("; ");
    let report_path = ctx.write_report(name, "nilbohr.json", &entries)?;
    Ok(Outcome { ok, summary, report_path })
}

#[derive(Serialize)]
struct StatsReport {
    linear: bohrcolor_core::DiscrepancyReport,
    linear_tolerance: f64,
    restricted: Option<bohrcolor_core::DiscrepancyReport>,
    restricted_tolerance: f64,
    density: bohrcolor_core::projection::DensityReport,
    density_min_fraction: f64,
}

/// `{n(√2-1)}` and `{n²(√2-1)}` as neighborhoods, for their phase statistics.
pub fn sqrt2_family(degree: u32) -> NilBohrNbhd {
    let poly = SpecialGenPoly::monomial(degree, std::f64::consts::SQRT_2 - 1.0).expect("finite coefficient");
    NilBohrNbhd::new(vec![poly], 0.5, degree).expect("valid neighborhood")
}

fn cmd_stats(ctx: &Ctx, name: &str) -> Result<Outcome, CliError> {
    let st = &ctx.cfg.stats;
    let sample: Vec<u64> = (1..=st.linear_n).collect();
    let linear = discrepancy(&sqrt2_family(1), &sample, st.bins)?;
    let (sched, set) = enumerate_set(ctx, ctx.cfg.scan.enumerate_n)?;
    let restricted =
        if set.elements.is_empty() { None } else { Some(discrepancy(&sqrt2_family(2), &set.elements, st.bins)?) };
    let density = density(&sched, ctx.cfg.scan.density_n, 1, ctx.cfg.scan.density_cells)?;

    let lin_ok = linear.max_binned() < st.linear_tolerance;
    let res_ok = restricted.as_ref().is_some_and(|r| r.max_binned() < st.restricted_tolerance);
    let den_ok = density.fraction >= ctx.cfg.scan.density_min_fraction;
    let summary = format!(
        "linear discrepancy {:.4} (< {}: {}); restricted {} (< {}: {}); first-coordinate occupancy {:.4} (≥ {}: {})",
        linear.max_binned(),
        st.linear_tolerance,
        pass(lin_ok),
        restricted.as_ref().map_or("n/a".to_string(), |r| format!(
            "{:.4} over {} elements",
            r.max_binned(),
            r.sample_size
        )),
        st.restricted_tolerance,
        pass(res_ok),
        density.fraction,
        ctx.cfg.scan.density_min_fraction,
        pass(den_ok)
    );
    let report = StatsReport {
        linear,
        linear_tolerance: st.linear_tolerance,
        restricted,
        restricted_tolerance: st.restricted_tolerance,
        density,
        density_min_fraction: ctx.cfg.scan.density_min_fraction,
    };
    let report_path = ctx.write_report(name, "stats.json", &report)?;
    Ok(Outcome { ok: lin_ok && res_ok && den_ok, summary, report_path })
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

/// Projection of a single integer, for callers that want the raw point.
pub fn projected(n: u64, cfg: &RunConfig) -> Result<bohrcolor_core::SparsePoint, CliError> {
    let sched = AlphaSchedule::build(&cfg.schedule, &cfg.params)?;
    Ok(project(n, &sched)?)
}
