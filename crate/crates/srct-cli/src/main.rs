//! `srct` — secure exact-repair regenerating codes from the command line.
//!
//! Exit codes: 0 = success / all checks pass, 1 = a verification failure
//! was found, 2 = usage error (bad flags, invalid parameters, malformed
//! input files).

use clap::{Parser, Subcommand, ValueEnum};
use srct_core::coeffverify::{verify_sweep, SweepMode};
use srct_core::entoracle::{check_inequality_catalog, check_sdss, check_symmetry, SymmetryConfig};
use srct_core::exactfield::{is_prime, rat_str};
use srct_core::layeredcode::{
    achieved_point, build_layered_code, deserialize_code, encode_state, repair_node, secure_point,
    secure_precode_with_ladder, serialize_code, CodeError, DEFAULT_MAX_RETRIES, DEFAULT_PRIME,
    DEFAULT_PRIME_LADDER,
};
use srct_core::regioncalc::{ell_hat, ell_hat_kd, ell_star, region_report, SystemParams};
use std::path::PathBuf;
use std::process::ExitCode;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "srct",
    version,
    about = "Construct and verify secure exact-repair regenerating codes, \
             compute storage-bandwidth tradeoff bounds, and certify the \
             coefficient identities behind them"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum CoeffMode {
    Kd,
    Kld,
}

#[derive(Subcommand)]
enum Command {
    /// Region verdict for one parameter tuple (n, k, d, ell)
    Region {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        d: u64,
        #[arg(long)]
        ell: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: OutputFormat,
    },
    /// Wiretap-node thresholds ell_hat and ell_star for fixed (k, d)
    Thresholds {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        d: u64,
    },
    /// Membership and consistency sweep over all valid tuples with d <= d_max
    Sweep {
        #[arg(long = "d-max")]
        d_max: u64,
        /// Write the CSV table here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a verified secure layered code and write its JSON document
    Construct {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        ell: usize,
        #[arg(long, default_value_t = DEFAULT_PRIME)]
        prime: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_RETRIES)]
        retries: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify a code document: storage properties, symmetry, inequalities
    Check {
        #[arg(long)]
        code: PathBuf,
        /// Exhaustive symmetry check covers subsets up to this size
        #[arg(long = "symmetry-size", default_value_t = 2)]
        symmetry_size: usize,
        #[arg(long, default_value_t = 1234)]
        seed: u64,
    },
    /// Simulate the repair of one node on a code document
    Repair {
        #[arg(long)]
        code: PathBuf,
        /// Node to fail (1-based)
        #[arg(long)]
        fail: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Certify coefficient families over a parameter sweep
    VerifyCoeffs {
        #[arg(long, value_enum)]
        mode: CoeffMode,
        #[arg(long)]
        bound: u64,
        /// Write the coefficient CSV here
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn verification_failure(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("verification failure: {msg}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Command::Region { n, k, d, ell, format } => cmd_region(n, k, d, ell, format),
        Command::Thresholds { k, d } => cmd_thresholds(k, d),
        Command::Sweep { d_max, out } => cmd_sweep(d_max, out),
        Command::Construct {
            n,
            ell,
            prime,
            seed,
            retries,
            out,
        } => cmd_construct(n, ell, prime, seed, retries, out),
        Command::Check {
            code,
            symmetry_size,
            seed,
        } => cmd_check(code, symmetry_size, seed),
        Command::Repair { code, fail, seed } => cmd_repair(code, fail, seed),
        Command::VerifyCoeffs { mode, bound, out } => cmd_verify_coeffs(mode, bound, out),
    }
}

fn cmd_region(n: u64, k: u64, d: u64, ell: u64, format: OutputFormat) -> ExitCode {
    let params = match SystemParams::new(n, k, d, ell) {
        Ok(p) => p,
        Err(e) => return usage_error(e),
    };
    let verdict = match region_report(&params) {
        Ok(v) => v,
        Err(e) => return usage_error(e),
    };
    match format {
        OutputFormat::Json => {
            println!(
                "{}",
                serde_json::to_string_pretty(&verdict.to_json()).expect("serializable")
            );
        }
        OutputFormat::Csv => {
            println!("d,k,ell,gamma,in_ps,ell_hat,ell_star,single_corner");
            println!(
                "{},{},{},{},{},{},{},{}",
                d, k, ell, verdict.gamma, verdict.in_ps, verdict.ell_hat, verdict.ell_star,
                verdict.single_corner
            );
        }
    }
    ExitCode::SUCCESS
}

fn cmd_thresholds(k: u64, d: u64) -> ExitCode {
    if k < 2 || k > d {
        return usage_error(format!("need 2 <= k <= d, got (k={k}, d={d})"));
    }
    let eh = if k == d {
        ell_hat_kd(d)
    } else {
        match ell_hat(k, d) {
            Ok(v) => v,
            Err(e) => return usage_error(e),
        }
    };
    let es = match ell_star(k, d) {
        Ok(v) => v,
        Err(e) => return usage_error(e),
    };
    let doc = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "k": k,
        "d": d,
        "ell_hat": eh,
        "ell_star": es,
        "gap": es.saturating_sub(eh),
    });
    println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
    ExitCode::SUCCESS
}

fn cmd_sweep(d_max: u64, out: Option<PathBuf>) -> ExitCode {
    if d_max < 3 {
        return usage_error(format!("--d-max must be at least 3, got {d_max}"));
    }
    let report = match srct_core::regioncalc::sweep_consistency(d_max) {
        Ok(r) => r,
        Err(e) => return usage_error(e),
    };
    let csv = report.to_csv();
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, csv) {
                return usage_error(format!("cannot write {}: {e}", path.display()));
            }
            let doc = serde_json::json!({
                "schema_version": SCHEMA_VERSION,
                "d_max": d_max,
                "rows": report.rows.len(),
                "counterexamples": report.counterexamples,
                "largest_gap": report.largest_gap.map(|(k, d, gap)| {
                    serde_json::json!({"k": k, "d": d, "gap": gap})
                }),
                "csv": path.display().to_string(),
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
        }
        None => print!("{csv}"),
    }
    if report.counterexamples.is_empty() {
        ExitCode::SUCCESS
    } else {
        verification_failure(format!(
            "{} sweep counterexamples",
            report.counterexamples.len()
        ))
    }
}

fn prime_ladder_from_env(start: u64) -> Result<Vec<u64>, String> {
    let mut ladder: Vec<u64> = DEFAULT_PRIME_LADDER.to_vec();
    if let Ok(cap) = std::env::var("SRCT_MAX_PRIME") {
        let cap: u64 = cap
            .parse()
            .map_err(|_| format!("SRCT_MAX_PRIME must be an integer, got {cap:?}"))?;
        if start > cap {
            return Err(format!("--prime {start} exceeds SRCT_MAX_PRIME={cap}"));
        }
        ladder.retain(|&p| p <= cap);
    }
    Ok(ladder)
}

fn cmd_construct(
    n: usize,
    ell: usize,
    prime: u64,
    seed: u64,
    retries: u32,
    out: PathBuf,
) -> ExitCode {
    if n < 4 {
        return usage_error(format!("--n must be at least 4, got {n}"));
    }
    if !is_prime(prime) {
        return usage_error(format!("--prime {prime} is not prime"));
    }
    if ell == 0 || ell + 3 > n {
        return usage_error(CodeError::InvalidEll { n, ell });
    }
    let ladder = match prime_ladder_from_env(prime) {
        Ok(l) => l,
        Err(e) => return usage_error(e),
    };
    let base = match build_layered_code(n, prime) {
        Ok(b) => b,
        Err(e) => return usage_error(e),
    };
    let (code, info) = match secure_precode_with_ladder(&base, ell, seed, retries, &ladder) {
        Ok(ok) => ok,
        Err(e @ CodeError::SecrecyUnachievable { .. }) => return verification_failure(e),
        Err(e) => return usage_error(e),
    };
    if let Err(e) = std::fs::write(&out, serialize_code(&code)) {
        return usage_error(format!("cannot write {}: {e}", out.display()));
    }
    let point = achieved_point(&code).expect("secure codes have B_s > 0");
    let doc = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "n": n,
        "ell": ell,
        "prime": info.prime,
        "seed": seed,
        "attempts": info.attempts,
        "B_s": code.b_s(),
        "alpha": code.alpha(),
        "beta": code.beta(),
        "point": {
            "alpha": rat_str(&point.alpha_bar),
            "beta": rat_str(&point.beta_bar),
        },
        "out": out.display().to_string(),
    });
    println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
    ExitCode::SUCCESS
}

fn load_code(path: &PathBuf) -> Result<srct_core::LinearStorageCode, ExitCode> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage_error(format!("cannot read {}: {e}", path.display())))?;
    deserialize_code(&text).map_err(usage_error)
}

fn cmd_check(path: PathBuf, symmetry_size: usize, seed: u64) -> ExitCode {
    let code = match load_code(&path) {
        Ok(c) => c,
        Err(status) => return status,
    };
    let sdss = match check_sdss(&code) {
        Ok(r) => r,
        Err(e) => return usage_error(e),
    };
    let symmetry = match check_symmetry(
        &code,
        &SymmetryConfig {
            subset_size_limit: symmetry_size,
            seed,
            ..SymmetryConfig::default()
        },
    ) {
        Ok(r) => r,
        Err(e) => return usage_error(e),
    };
    let catalog = if code.ell() >= 1 {
        match check_inequality_catalog(&code) {
            Ok(r) => Some(r),
            Err(e) => return usage_error(e),
        }
    } else {
        None
    };

    // achieved point against the closed forms and the corner point
    let point = achieved_point(&code).expect("validated codes have B_s > 0");
    let formula = secure_point(code.n(), code.ell()).expect("validated dimensions");
    let point_matches = point == formula;
    let corner = srct_core::regioncalc::corner_point(
        code.k() as u64,
        code.d() as u64,
        code.ell().max(1) as u64,
    )
    .expect("validated dimensions");
    let at_or_above_corner = point.alpha_bar >= corner.alpha_bar;

    let catalog_pass = catalog.as_ref().map(|c| c.pass()).unwrap_or(true);
    let pass = sdss.pass() && symmetry.pass() && catalog_pass && point_matches;

    let doc = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "code": {
            "n": code.n(),
            "ell": code.ell(),
            "p": code.p(),
            "B_s": code.b_s(),
            "T": code.t(),
            "alpha": code.alpha(),
            "beta": code.beta(),
        },
        "sdss": sdss.to_json(),
        "symmetry": symmetry.to_json(),
        "catalog": catalog.as_ref().map(|c| c.to_json()),
        "achieved_point": {
            "alpha": rat_str(&point.alpha_bar),
            "beta": rat_str(&point.beta_bar),
            "matches_formula": point_matches,
            "corner_alpha": rat_str(&corner.alpha_bar),
            "corner_beta": rat_str(&corner.beta_bar),
            "at_or_above_corner": at_or_above_corner,
        },
        "pass": pass,
    });
    println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
    if pass {
        ExitCode::SUCCESS
    } else {
        verification_failure("one or more checks failed; see report")
    }
}

fn cmd_repair(path: PathBuf, fail: usize, seed: u64) -> ExitCode {
    let code = match load_code(&path) {
        Ok(c) => c,
        Err(status) => return status,
    };
    if fail == 0 || fail > code.n() {
        return usage_error(format!(
            "--fail must name a node in 1..={}, got {fail}",
            code.n()
        ));
    }
    let state = match encode_state(&code, seed) {
        Ok(s) => s,
        Err(e) => return usage_error(e),
    };
    let outcome = match repair_node(&code, &state, fail) {
        Ok(o) => o,
        Err(e) => return usage_error(e),
    };
    let matches = outcome.recovered == state.node_symbols[fail - 1];
    let doc = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "failed_node": fail,
        "seed": seed,
        "downloaded_symbols": outcome.downloaded_symbols,
        "expected_download": code.d() * code.beta(),
        "match": matches,
    });
    println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
    if matches {
        ExitCode::SUCCESS
    } else {
        verification_failure("regenerated content does not match the failed node")
    }
}

fn cmd_verify_coeffs(mode: CoeffMode, bound: u64, out: Option<PathBuf>) -> ExitCode {
    if bound < 5 {
        return usage_error(format!("--bound must be at least 5, got {bound}"));
    }
    let mode = match mode {
        CoeffMode::Kd => SweepMode::Kd,
        CoeffMode::Kld => SweepMode::Kld,
    };
    let report = match verify_sweep(mode, bound) {
        Ok(r) => r,
        Err(e) => return usage_error(e),
    };
    if let Some(path) = &out {
        if let Err(e) = std::fs::write(path, &report.csv) {
            return usage_error(format!("cannot write {}: {e}", path.display()));
        }
    }
    let doc = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "mode": mode.to_string(),
        "bound": bound,
        "tuples_checked": report.tuples_checked,
        "counterexamples": report.counterexamples,
        "csv": out.map(|p| p.display().to_string()),
    });
    println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
    if report.pass() {
        ExitCode::SUCCESS
    } else {
        verification_failure(format!(
            "{} coefficient counterexamples",
            report.counterexamples.len()
        ))
    }
}
