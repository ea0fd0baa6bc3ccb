//! Command-line front end for the `zetadesk` library.
//!
//! Five subcommands cover the library's pipelines: `count` enumerates
//! points over finite fields, `zeta` reconstructs the counting zeta
//! function and its invariants, `integrate` evaluates gauge volumes with
//! an optional independent interval check, `compare` runs a bundled
//! example pair across a list of primes, and `validate` checks a model
//! file and can echo its canonical form.
//!
//! Output is `text` for humans, `json` for tools (object keys in sorted
//! order, large integers and rationals as decimal strings, so reruns are
//! byte-identical), or `csv` for tables. Exit codes: 0 on success, 1 when
//! a computation gives up (budget, missing chart, failed reconstruction),
//! 2 for input problems (unreadable files, parse errors, unknown names).

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;
use zetadesk::counter::{self, CountError, CountOpts};
use zetadesk::geomdsl::{self, Model, Severity};
use zetadesk::kequiv::{self, PrimeStatus, Relation};
use zetadesk::models;
use zetadesk::padics::{self, PadicError, PadicOpts};
use zetadesk::zetakit::{self, RootSide, DEFAULT_WEIGHT_TOL};

const CACHE_ENV: &str = "ZETADESK_CACHE_DIR";

#[derive(Parser)]
#[command(
    name = "zetadesk",
    version,
    about = "Point counts, zeta functions and p-adic volumes for small models"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Count points of a model over F_{p^k} and its extensions.
    Count(CountArgs),
    /// Reconstruct the zeta function from a tower of counts.
    Zeta(ZetaArgs),
    /// Evaluate the gauge volume of an affine model at a prime.
    Integrate(IntegrateArgs),
    /// Compare both sides of a bundled example pair across primes.
    Compare(CompareArgs),
    /// Parse and check a model, optionally echoing its canonical form.
    Validate(ValidateArgs),
}

/// Where a model comes from: a file on disk or the bundled set.
#[derive(Args)]
struct ModelSource {
    /// Path to a model file.
    #[arg(long, value_name = "FILE", conflicts_with = "example")]
    model: Option<PathBuf>,
    /// Bundled model name (see the library's models module; e.g. gm,
    /// ell, conifold_res1).
    #[arg(long, value_name = "NAME")]
    example: Option<String>,
}

impl ModelSource {
    fn load(&self) -> Result<Model, CliError> {
        match (&self.model, &self.example) {
            (Some(path), None) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
                let mut m = geomdsl::parse_model(&text)
                    .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
                if m.name.is_empty() {
                    m.name = path
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default();
                }
                Ok(m)
            }
            (None, Some(name)) => models::load(name)
                .ok_or_else(|| CliError::input(format!("no bundled model named '{name}'"))),
            _ => Err(CliError::input("pass exactly one of --model or --example")),
        }
    }
}

#[derive(Args)]
struct CountArgs {
    #[command(flatten)]
    src: ModelSource,
    /// Prime of the base field.
    #[arg(long)]
    p: u64,
    /// Degree of the base field over F_p.
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Count over F_{q^r} for r = 1..=rmax.
    #[arg(long, default_value_t = 1)]
    rmax: u32,
    /// Enumeration step budget.
    #[arg(long)]
    budget: Option<u64>,
    /// Directory for the count cache (also read from ZETADESK_CACHE_DIR).
    #[arg(long, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Also scan the base field for singular points.
    #[arg(long)]
    smooth: bool,
}

#[derive(Args)]
struct ZetaArgs {
    #[command(flatten)]
    src: ModelSource,
    #[arg(long)]
    p: u64,
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Depth of the count tower feeding the reconstruction.
    #[arg(long, default_value_t = 6)]
    rmax: u32,
    /// Use the curve-shaped reconstruction (denominator (1-t)(1-qt));
    /// needs rmax at least twice the genus.
    #[arg(long)]
    curve: bool,
    /// Report Betti numbers (requires a pure classification).
    #[arg(long)]
    betti: bool,
    /// Report the curve Hodge diamond determined by the genus.
    #[arg(long)]
    hodge_curve: bool,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct IntegrateArgs {
    #[command(flatten)]
    src: ModelSource,
    #[arg(long)]
    p: u64,
    /// Also bracket the volume with the independent cell oracle.
    #[arg(long)]
    bounds: bool,
    /// Working precision of the cell oracle.
    #[arg(long, default_value_t = padics::DEFAULT_PRECISION)]
    level: u32,
    /// Cell budget for the oracle.
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args)]
struct CompareArgs {
    /// Pair name: conifold_flop, blowup_control, curve_pair or
    /// curve_mismatch.
    #[arg(long)]
    pair: String,
    /// Primes to compare at.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2u64, 3, 5, 7, 11])]
    primes: Vec<u64>,
    #[arg(long, default_value_t = 2)]
    rmax: u32,
    /// Also infer curve Hodge diamonds at each good prime.
    #[arg(long)]
    hodge: bool,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    src: ModelSource,
    /// Echo the canonical printed form after the diagnostics.
    #[arg(long)]
    print: bool,
}

// ---------------------------------------------------------------------------
// Errors and exit codes.
// ---------------------------------------------------------------------------

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn input(msg: impl Into<String>) -> CliError {
        CliError { code: 2, message: msg.into() }
    }

    fn compute(msg: impl Into<String>) -> CliError {
        CliError { code: 1, message: msg.into() }
    }
}

impl From<CountError> for CliError {
    fn from(e: CountError) -> CliError {
        match e {
            CountError::InvalidModel { .. } | CountError::Field(_) => {
                CliError::input(e.to_string())
            }
            _ => CliError::compute(e.to_string()),
        }
    }
}

impl From<zetakit::ZetaError> for CliError {
    fn from(e: zetakit::ZetaError) -> CliError {
        CliError::compute(e.to_string())
    }
}

impl From<PadicError> for CliError {
    fn from(e: PadicError) -> CliError {
        match e {
            PadicError::NoUsableChart { .. }
            | PadicError::NonUnitNumerator { .. }
            | PadicError::CellBudget(_) => CliError::compute(e.to_string()),
            _ => CliError::input(e.to_string()),
        }
    }
}

impl From<kequiv::KequivError> for CliError {
    fn from(e: kequiv::KequivError) -> CliError {
        match e {
            kequiv::KequivError::UnknownPair(_) => CliError::input(e.to_string()),
            kequiv::KequivError::Count(inner) => inner.into(),
            kequiv::KequivError::Zeta(inner) => inner.into(),
            kequiv::KequivError::NotSmooth { .. } => CliError::compute(e.to_string()),
        }
    }
}

// ---------------------------------------------------------------------------
// Rendering helpers.
// ---------------------------------------------------------------------------

fn count_opts(budget: Option<u64>, cache_dir: Option<PathBuf>) -> CountOpts {
    let mut opts = CountOpts::default();
    if let Some(b) = budget {
        opts.budget = b;
    }
    opts.cache_dir = cache_dir.or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from));
    opts
}

fn counts_as_strings(counts: &[u128]) -> Vec<String> {
    counts.iter().map(|c| c.to_string()).collect()
}

fn rational_str(r: &num_rational::BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn poly_strings(p: &zetadesk::zetakit::QPoly) -> Vec<String> {
    p.bigint_coeffs()
        .expect("normalized zeta has integer coefficients")
        .iter()
        .map(|c| c.to_string())
        .collect()
}

fn emit_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn csv_escape(cell: &str) -> String {
    if cell.contains(',') || cell.contains('"') || cell.contains('\n') {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

fn emit_csv(header: &[&str], rows: &[Vec<String>]) {
    println!("{}", header.join(","));
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| csv_escape(c)).collect();
        println!("{}", cells.join(","));
    }
}

// ---------------------------------------------------------------------------
// Subcommands.
// ---------------------------------------------------------------------------

fn run_count(args: &CountArgs, format: Format) -> Result<(), CliError> {
    let m = args.src.load()?;
    let opts = count_opts(args.budget, args.cache_dir.clone());
    let table = counter::count_tower(&m, args.p, args.k, args.rmax, &opts)?;
    let smooth = if args.smooth {
        Some(counter::smoothness_scan(&m, args.p, args.k, &opts)?)
    } else {
        None
    };
    match format {
        Format::Json => {
            let mut doc = json!({
                "schema": "zetadesk.count.v1",
                "model": m.name,
                "p": args.p,
                "k": args.k,
                "rmax": args.rmax,
                "counts": counts_as_strings(&table.counts),
            });
            if let Some(s) = &smooth {
                doc["smooth"] = json!({
                    "smooth": s.smooth,
                    "singular_points": s.singular_points,
                });
            }
            emit_json(&doc);
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = table
                .counts
                .iter()
                .enumerate()
                .map(|(i, c)| vec![(i + 1).to_string(), c.to_string()])
                .collect();
            emit_csv(&["r", "count"], &rows);
        }
        Format::Text => {
            println!("model {}  p={} k={}", m.name, args.p, args.k);
            for (i, c) in table.counts.iter().enumerate() {
                println!("N_{} = {}", i + 1, c);
            }
            if let Some(s) = &smooth {
                if s.smooth {
                    println!("smooth over F_{{{}^{}}}", args.p, args.k);
                } else {
                    println!("singular at: {}", s.singular_points.join("; "));
                }
            }
        }
    }
    Ok(())
}

fn run_zeta(args: &ZetaArgs, format: Format) -> Result<(), CliError> {
    let m = args.src.load()?;
    let opts = count_opts(args.budget, args.cache_dir.clone());
    let table = counter::count_tower(&m, args.p, args.k, args.rmax, &opts)?;
    let zeta = if args.curve {
        zetakit::curve_reconstruct(&table)?
    } else {
        let series = zetakit::zeta_from_counts(&table);
        zetakit::rational_reconstruct_auto(&series, zetakit::MIN_GUARD)?
    };
    let class = zetakit::weil_classify(&zeta, DEFAULT_WEIGHT_TOL);
    let betti = if args.betti {
        Some(zetakit::betti_numbers(&class)?)
    } else {
        None
    };
    let hodge = if args.hodge_curve {
        let genus = zetakit::genus_from_zeta(&zeta)?;
        Some((genus, zetakit::curve_hodge(genus)))
    } else {
        None
    };
    match format {
        Format::Json => {
            let eigen: Vec<Value> = class
                .eigenvalues
                .iter()
                .map(|e| {
                    json!({
                        "side": match e.side {
                            RootSide::Numerator => "numerator",
                            RootSide::Denominator => "denominator",
                        },
                        "abs": e.abs,
                        "weight": e.weight,
                        "multiplicity": e.multiplicity,
                        "pure": e.pure,
                        "parity_ok": e.parity_ok,
                    })
                })
                .collect();
            let mut doc = json!({
                "schema": "zetadesk.zeta.v1",
                "model": m.name,
                "p": args.p,
                "k": args.k,
                "q": table.q().to_string(),
                "rmax": args.rmax,
                "counts": counts_as_strings(&table.counts),
                "numerator": poly_strings(&zeta.num),
                "denominator": poly_strings(&zeta.den),
                "zeta": zeta.display(),
                "purity_ok": class.purity_ok,
                "violations": class.violations,
                "eigenvalues": eigen,
            });
            if let Some(b) = &betti {
                doc["betti"] = json!(b);
            }
            if let Some((genus, h)) = &hodge {
                doc["genus"] = json!(genus);
                doc["hodge"] =
                    json!({"h00": h.h00, "h10": h.h10, "h01": h.h01, "h11": h.h11});
            }
            emit_json(&doc);
        }
        Format::Csv => {
            let mut rows = vec![
                vec!["model".to_string(), m.name.clone()],
                vec!["q".to_string(), table.q().to_string()],
                vec!["counts".to_string(), counts_as_strings(&table.counts).join(";")],
                vec!["numerator".to_string(), poly_strings(&zeta.num).join(";")],
                vec!["denominator".to_string(), poly_strings(&zeta.den).join(";")],
                vec!["purity_ok".to_string(), class.purity_ok.to_string()],
            ];
            if let Some(b) = &betti {
                let s: Vec<String> = b.iter().map(|x| x.to_string()).collect();
                rows.push(vec!["betti".to_string(), s.join(";")]);
            }
            if let Some((genus, h)) = &hodge {
                rows.push(vec!["genus".to_string(), genus.to_string()]);
                rows.push(vec![
                    "hodge".to_string(),
                    format!("{};{};{};{}", h.h00, h.h10, h.h01, h.h11),
                ]);
            }
            emit_csv(&["key", "value"], &rows);
        }
        Format::Text => {
            println!("model {}  p={} k={}  q={}", m.name, args.p, args.k, table.q());
            println!("counts: {}", counts_as_strings(&table.counts).join(", "));
            println!("Z(t) = {}", zeta.display());
            for e in &class.eigenvalues {
                let side = match e.side {
                    RootSide::Numerator => "numerator",
                    RootSide::Denominator => "denominator",
                };
                let w = e
                    .weight
                    .map(|w| format!("weight {w}"))
                    .unwrap_or_else(|| "no weight fits".to_string());
                println!(
                    "  {side}: |a| = {:.6}, {w}, multiplicity {}",
                    e.abs, e.multiplicity
                );
            }
            if class.purity_ok {
                println!("purity: ok");
            } else {
                println!("purity: violated ({})", class.violations.join("; "));
            }
            if let Some(b) = &betti {
                let s: Vec<String> = b.iter().map(|x| x.to_string()).collect();
                println!("betti: {}", s.join(", "));
            }
            if let Some((genus, h)) = &hodge {
                println!(
                    "genus {genus}; hodge diamond: h00={} h10={} h01={} h11={}",
                    h.h00, h.h10, h.h01, h.h11
                );
            }
        }
    }
    Ok(())
}

fn run_integrate(args: &IntegrateArgs, format: Format) -> Result<(), CliError> {
    let m = args.src.load()?;
    let g = padics::integrate_gauge(&m, args.p)?;
    let bounds = if args.bounds {
        let mut opts = PadicOpts { precision: args.level, ..PadicOpts::default() };
        if let Some(b) = args.budget {
            opts.max_cells = b;
        }
        let one = geomdsl::Polynomial::constant(m.nvars(), 1.into());
        Some(padics::integrate_abs_on_model(&m, &one, args.p, &opts)?)
    } else {
        None
    };
    match format {
        Format::Json => {
            let mut doc = json!({
                "schema": "zetadesk.integrate.v1",
                "model": m.name,
                "p": args.p,
                "dim": g.dim,
                "value": rational_str(&g.value),
                "disks": g.disks.len(),
            });
            if let Some(b) = &bounds {
                doc["bounds"] = json!({
                    "level": args.level,
                    "lo": rational_str(&b.lo),
                    "hi": rational_str(&b.hi),
                });
            }
            emit_json(&doc);
        }
        Format::Csv => {
            let mut rows = vec![
                vec!["model".to_string(), m.name.clone()],
                vec!["p".to_string(), args.p.to_string()],
                vec!["dim".to_string(), g.dim.to_string()],
                vec!["value".to_string(), rational_str(&g.value)],
                vec!["disks".to_string(), g.disks.len().to_string()],
            ];
            if let Some(b) = &bounds {
                rows.push(vec!["bounds_lo".to_string(), rational_str(&b.lo)]);
                rows.push(vec!["bounds_hi".to_string(), rational_str(&b.hi)]);
            }
            emit_csv(&["key", "value"], &rows);
        }
        Format::Text => {
            println!("model {}  p={}  dim {}", m.name, args.p, g.dim);
            println!(
                "volume = {} over {} residue disks",
                rational_str(&g.value),
                g.disks.len()
            );
            if let Some(b) = &bounds {
                println!(
                    "oracle bracket at level {}: [{}, {}]",
                    args.level,
                    rational_str(&b.lo),
                    rational_str(&b.hi)
                );
            }
        }
    }
    Ok(())
}

fn run_compare(args: &CompareArgs, format: Format) -> Result<(), CliError> {
    let pair = kequiv::example_pair(&args.pair)?;
    let opts = count_opts(args.budget, args.cache_dir.clone());
    let cmp = kequiv::compare_counts(&pair, &args.primes, args.rmax, &opts)?;
    let mut hodge_rows: Vec<(u64, kequiv::HodgeComparison)> = Vec::new();
    if args.hodge {
        for pc in &cmp.primes {
            if matches!(pc.status, PrimeStatus::Counted { .. }) {
                let h = kequiv::infer_equal_hodge_curves(
                    &pair.left,
                    &pair.right,
                    pc.p,
                    args.rmax,
                    &opts,
                )?;
                hodge_rows.push((pc.p, h));
            }
        }
    }
    match format {
        Format::Json => {
            let primes: Vec<Value> = cmp
                .primes
                .iter()
                .map(|pc| match &pc.status {
                    PrimeStatus::Skipped { reason } => json!({
                        "p": pc.p,
                        "status": "skipped",
                        "reason": reason,
                    }),
                    PrimeStatus::Counted { left, right, equal } => json!({
                        "p": pc.p,
                        "status": "counted",
                        "left": counts_as_strings(left),
                        "right": counts_as_strings(right),
                        "equal": equal,
                    }),
                })
                .collect();
            let mut doc = json!({
                "schema": "zetadesk.compare.v1",
                "pair": cmp.pair_id,
                "relation": match cmp.relation {
                    Relation::EqualCounts => "equal_counts",
                    Relation::DifferentCounts => "different_counts",
                },
                "rmax": cmp.r_max,
                "consistent": cmp.consistent,
                "primes": primes,
            });
            if args.hodge {
                let rows: Vec<Value> = hodge_rows
                    .iter()
                    .map(|(p, h)| {
                        json!({
                            "p": p,
                            "left_genus": h.left.genus,
                            "right_genus": h.right.genus,
                            "equal_diamonds": h.equal,
                        })
                    })
                    .collect();
                doc["hodge"] = json!(rows);
            }
            emit_json(&doc);
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = cmp
                .primes
                .iter()
                .map(|pc| match &pc.status {
                    PrimeStatus::Skipped { reason } => vec![
                        pc.p.to_string(),
                        "skipped".to_string(),
                        String::new(),
                        String::new(),
                        reason.clone(),
                    ],
                    PrimeStatus::Counted { left, right, equal } => vec![
                        pc.p.to_string(),
                        "counted".to_string(),
                        counts_as_strings(left).join(";"),
                        counts_as_strings(right).join(";"),
                        equal.to_string(),
                    ],
                })
                .collect();
            emit_csv(&["p", "status", "left", "right", "equal_or_reason"], &rows);
        }
        Format::Text => {
            println!("pair {}  ({})", cmp.pair_id, pair.summary);
            for pc in &cmp.primes {
                match &pc.status {
                    PrimeStatus::Skipped { reason } => {
                        println!("p={}: skipped ({reason})", pc.p);
                    }
                    PrimeStatus::Counted { left, right, equal } => {
                        println!(
                            "p={}: left {} | right {} -> {}",
                            pc.p,
                            counts_as_strings(left).join(", "),
                            counts_as_strings(right).join(", "),
                            if *equal { "equal" } else { "different" }
                        );
                    }
                }
            }
            for (p, h) in &hodge_rows {
                println!(
                    "p={p}: genus {} vs {}, diamonds {}",
                    h.left.genus,
                    h.right.genus,
                    if h.equal { "equal" } else { "different" }
                );
            }
            println!(
                "verdict: {}",
                if cmp.consistent { "consistent with expectation" } else { "INCONSISTENT" }
            );
        }
    }
    Ok(())
}

fn run_validate(args: &ValidateArgs, format: Format) -> Result<(), CliError> {
    let m = args.src.load()?;
    let diagnostics = geomdsl::validate(&m);
    let valid = diagnostics.iter().all(|d| d.severity != Severity::Error);
    match format {
        Format::Json => {
            let diags: Vec<Value> = diagnostics
                .iter()
                .map(|d| {
                    json!({
                        "severity": match d.severity {
                            Severity::Error => "error",
                            Severity::Warning => "warning",
                        },
                        "message": d.message,
                    })
                })
                .collect();
            let mut doc = json!({
                "schema": "zetadesk.validate.v1",
                "model": m.name,
                "valid": valid,
                "diagnostics": diags,
            });
            if args.print {
                doc["canonical"] = json!(geomdsl::print_model(&m));
            }
            emit_json(&doc);
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = diagnostics
                .iter()
                .map(|d| {
                    vec![
                        match d.severity {
                            Severity::Error => "error".to_string(),
                            Severity::Warning => "warning".to_string(),
                        },
                        d.message.clone(),
                    ]
                })
                .collect();
            emit_csv(&["severity", "message"], &rows);
        }
        Format::Text => {
            println!("model {}: {}", m.name, if valid { "valid" } else { "INVALID" });
            for d in &diagnostics {
                let tag = match d.severity {
                    Severity::Error => "error",
                    Severity::Warning => "warning",
                };
                println!("  {tag}: {}", d.message);
            }
            if args.print {
                print!("{}", geomdsl::print_model(&m));
            }
        }
    }
    if valid {
        Ok(())
    } else {
        Err(CliError::input(format!("model '{}' is invalid", m.name)))
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.cmd {
        Cmd::Count(a) => run_count(a, cli.format),
        Cmd::Zeta(a) => run_zeta(a, cli.format),
        Cmd::Integrate(a) => run_integrate(a, cli.format),
        Cmd::Compare(a) => run_compare(a, cli.format),
        Cmd::Validate(a) => run_validate(a, cli.format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
