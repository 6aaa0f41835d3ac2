//! The `qbent` command-line front end.
//!
//! Every subcommand writes exactly one report document to standard output
//! (JSON by default; CSV for the table commands; a text summary with
//! `--format text`) and keeps diagnostics on standard error. Reports are
//! byte-identical across reruns with the same arguments and seed,
//! regardless of `--threads`; `--timing` adds the one field that varies.
//!
//! Exit codes: 0 — the invoked claim verified, or witnesses found where
//! expected; 1 — a claim refuted (including conjecture counterexamples);
//! 2 — usage or capacity errors.

use std::io::Write;
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::boolfn::BoolFunc;
use crate::error::{Error, Result};
use crate::gf2::BitMatrix;
use crate::qtransform::{
    self, is_q_bent, is_q_nearly_bent, is_q_plateaued, q_coeff, q_spectrum, second_moments,
    stabilizer, SpectrumMode,
};
use crate::verify::{
    self, conjecture_scan, published_rho, search_q_nearly_bent, verify_theorem, ClaimParams,
    FuncEcho, SampleSpec, SearchConfig, VerificationReport,
};

/// Version of the report payload layout, bumped on any change.
pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Debug, Parser)]
#[command(
    name = "qbent",
    version,
    about = "Exact q-transform analysis of Boolean functions over GL(n,F2)",
    after_help = "Functions are given as --anf \"x1*x2+x3\" or --tt-hex 1E plus --n; \
matrices as --matrix \"110;010;001\" (rows joined by ';', coordinate 1 first). \
The QBENT_MAX_N environment variable may lower (never raise) the full-enumeration cap."
)]
struct Cli {
    /// Output format (csv is available for table1/table2 only)
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads for the search commands (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Include wall-clock timing in the report (varies between runs)
    #[arg(long, global = true, action = ArgAction::SetTrue)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Args)]
struct FuncArgs {
    /// Algebraic normal form, e.g. "x1*x2+x3"
    #[arg(long, value_name = "EXPR", conflicts_with = "tt_hex")]
    anf: Option<String>,
    /// Truth-table hex, f(0) first as the most significant bit
    #[arg(long = "tt-hex", value_name = "HEX")]
    tt_hex: Option<String>,
}

#[derive(Debug, Args)]
struct QArgs {
    /// ANF of q, e.g. "x1*x2+x3"
    #[arg(long = "q-anf", value_name = "EXPR", conflicts_with = "q_tt_hex")]
    q_anf: Option<String>,
    /// Truth-table hex of q
    #[arg(long = "q-tt-hex", value_name = "HEX")]
    q_tt_hex: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the bound rho: the least integer r with r^2(2^n-1) >= 2^(2n)-I_q^2
    Rho {
        #[arg(long)]
        n: usize,
        /// Weight of q (reflected to 2^n - wt when above 2^(n-1))
        #[arg(long)]
        wt: u64,
    },
    /// One q-transform coefficient W_q(f)(A), checked along both
    /// computation paths
    Coeff {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        f: FuncArgs,
        #[command(flatten)]
        q: QArgs,
        /// Matrix A as rows joined by ';', e.g. "110;010;001"
        #[arg(long, value_name = "ROWS")]
        matrix: String,
    },
    /// Histogram of q-transform coefficients over GL_n (full or sampled)
    Spectrum {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        f: FuncArgs,
        #[command(flatten)]
        q: QArgs,
        /// Sample this many matrices instead of full enumeration
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Is every Walsh coefficient of f of magnitude 2^(n/2)?
    CheckBent {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        f: FuncArgs,
    },
    /// Is f q-bent: |W_q(f)(A)| = 2^(n/2) on all of GL_n and at the zero
    /// matrix? (No q-bent functions exist for balanced non-affine q.)
    CheckQBent {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        f: FuncArgs,
        #[command(flatten)]
        q: QArgs,
    },
    /// Is f q-nearly bent: f balanced and |W_q(f)(A)| <= rho on all of GL_n?
    CheckNearlyBent {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        f: FuncArgs,
        #[command(flatten)]
        q: QArgs,
    },
    /// Is the full GL_n spectrum of f contained in {0, +-lambda}?
    CheckPlateaued {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        f: FuncArgs,
        #[command(flatten)]
        q: QArgs,
    },
    /// Stabilizer subgroup of q under composition, and its orbit size
    Stabilizer {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        f: FuncArgs,
    },
    /// Exact second moments of the q-transform and the two moment
    /// identities (sum rule and the weighted generalization of Parseval)
    Moments {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        f: FuncArgs,
        #[command(flatten)]
        q: QArgs,
    },
    /// Classify every balanced f against one q; lists all q-nearly bent
    /// witnesses with degrees
    Search {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        f: FuncArgs,
        /// Also examine candidates with f(0) = 1
        #[arg(long, action = ArgAction::SetTrue)]
        no_fix_zero: bool,
        /// Evaluate every matrix instead of stopping at the first violation
        #[arg(long, action = ArgAction::SetTrue)]
        no_early_abort: bool,
        /// Cap on matrices scanned per candidate (partial certification)
        #[arg(long)]
        max_matrices: Option<u64>,
    },
    /// Verify a named claim: thm3 (weight-1 q: every balanced f is
    /// q-nearly bent), thm4 (wt 2-3: none exist), thm5 (wt 4: no
    /// non-affine), thm6 (even n, large weight: none), corollary
    /// (balanced q, even n: none), plateaued-n3 (weight-2 f are
    /// q-plateaued with lambda=4), noqbent-n4 (no q-bent functions)
    Verify {
        /// Claim id: thm3 | thm4 | thm5 | thm6 | corollary | plateaued-n3 | noqbent-n4
        #[arg(long)]
        claim: String,
        #[arg(long)]
        n: Option<usize>,
        /// Sample count for the claim's sampled population
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use the exhaustive population where sampling is the default
        #[arg(long, action = ArgAction::SetTrue)]
        exhaustive: bool,
        #[arg(long, action = ArgAction::SetTrue)]
        no_fix_zero: bool,
        #[arg(long, action = ArgAction::SetTrue)]
        no_early_abort: bool,
    },
    /// Recompute every cell of the published small-weight table; the
    /// (n=4, wt=7) cell computes rho=5 against the printed 2
    Table1 {
        /// Print the published cell value beside each computed one
        #[arg(long, action = ArgAction::SetTrue)]
        paper_values: bool,
        /// q-samples per spot-checked cell
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Recompute the published balanced-weight table for odd n; the n=9
    /// row computes rho=23 against the printed 24
    Table2 {
        /// Largest (odd) n to include
        #[arg(long, default_value_t = 17)]
        max_n: usize,
        #[arg(long, action = ArgAction::SetTrue)]
        paper_values: bool,
    },
    /// Scan (n, wt) cells for counterexamples to the conjecture that no
    /// non-affine balanced f is q-nearly bent for non-affine q of weight
    /// 2..=2^(n-1); the parity screen runs first
    Conjecture {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        wt_min: u64,
        /// Defaults to 2^(n-1)
        #[arg(long)]
        wt_max: Option<u64>,
        /// Sample this many q per weight instead of exhausting
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, action = ArgAction::SetTrue)]
        no_fix_zero: bool,
        #[arg(long, action = ArgAction::SetTrue)]
        no_early_abort: bool,
    },
    /// Convert a truth table to its algebraic normal form
    Anf {
        #[arg(long)]
        n: usize,
        #[arg(long = "tt-hex", value_name = "HEX")]
        tt_hex: String,
    },
    /// Parse an ANF expression and print its truth table
    Parse {
        #[arg(long)]
        n: usize,
        #[arg(long, value_name = "EXPR")]
        anf: String,
    },
}

/// Report envelope: one document per invocation on standard output.
#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: &'static str,
    pub command: String,
    pub inputs: Value,
    pub result: Value,
    pub discrepancies: Vec<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
}

/// Parse argv and run; returns the process exit code. The report document
/// goes to `out`, diagnostics to `err`.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                return 2;
            }
            let _ = write!(out, "{rendered}");
            return 0;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    if cli.format == Format::Csv
        && !matches!(cli.command, Command::Table1 { .. } | Command::Table2 { .. })
    {
        return Err(Error::Usage {
            msg: "csv output is available for table1 and table2 only".into(),
        });
    }
    let started = Instant::now();
    let outcome = match &cli.threads {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(*k)
                .build()
                .map_err(|e| Error::Usage {
                    msg: format!("could not build a {k}-thread pool: {e}"),
                })?;
            pool.install(|| dispatch(&cli.command))
        }
        None => dispatch(&cli.command),
    }?;
    let mut report = outcome.report;
    if cli.timing {
        report.timing_ms = Some(started.elapsed().as_millis() as u64);
    }
    render(&cli, &report, out)?;
    Ok(outcome.exit_code)
}

struct Outcome {
    report: Report,
    exit_code: i32,
}

fn parse_func(anf: &Option<String>, hex: &Option<String>, n: usize, which: &str) -> Result<BoolFunc> {
    match (anf, hex) {
        (Some(expr), None) => BoolFunc::parse_anf(expr, n),
        (None, Some(h)) => BoolFunc::from_tt_hex(h, n),
        _ => Err(Error::Usage {
            msg: format!("{which} requires exactly one of an ANF expression or a truth-table hex"),
        }),
    }
}

fn f_input(args: &FuncArgs, n: usize) -> Result<BoolFunc> {
    parse_func(&args.anf, &args.tt_hex, n, "f (--anf / --tt-hex)")
}

fn q_input(args: &QArgs, n: usize) -> Result<BoolFunc> {
    parse_func(&args.q_anf, &args.q_tt_hex, n, "q (--q-anf / --q-tt-hex)")
}

fn report(command: &str, inputs: Value, result: Value) -> Report {
    Report {
        schema_version: SCHEMA_VERSION,
        command: command.into(),
        inputs,
        result,
        discrepancies: Vec::new(),
        timing_ms: None,
    }
}

fn verification_outcome(command: &str, inputs: Value, vr: VerificationReport) -> Outcome {
    let exit_code = if vr.refuted() { 1 } else { 0 };
    let mut rep = report(command, inputs, serde_json::to_value(&vr).expect("serializable"));
    if let Some(d) = vr.verdict.details.get("discrepancies").and_then(Value::as_array) {
        rep.discrepancies = d.clone();
    }
    Outcome {
        report: rep,
        exit_code,
    }
}

fn dispatch(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Rho { n, wt } => {
            let params = qtransform::rho(*n, *wt)?;
            let mut rep = report(
                "rho",
                json!({ "n": n, "wt": wt }),
                serde_json::to_value(params).expect("serializable"),
            );
            if let Some(printed) = published_rho(*n, *wt) {
                if !printed.contains(&params.rho) {
                    rep.discrepancies.push(json!({
                        "kind": "published-value-mismatch",
                        "cell": { "n": n, "wt_q": params.wt_q },
                        "computed": params.rho,
                        "printed": printed,
                    }));
                }
            }
            Ok(Outcome {
                report: rep,
                exit_code: 0,
            })
        }
        Command::Coeff { n, f, q, matrix } => {
            let f = f_input(f, *n)?;
            let q = q_input(q, *n)?;
            let a = BitMatrix::parse(matrix)?;
            let w = q_coeff(&f, &q, &a)?;
            // Cross-check the other computation path before reporting.
            let direct = qtransform::q_coeff_with_threshold(&f, &q, &a, 0)?;
            debug_assert_eq!(w, direct);
            let rep = report(
                "coeff",
                json!({ "n": n, "f": FuncEcho::of(&f), "q": FuncEcho::of(&q), "matrix": a }),
                json!({ "w": w, "paths_agree": w == direct }),
            );
            Ok(Outcome {
                report: rep,
                exit_code: 0,
            })
        }
        Command::Spectrum {
            n,
            f,
            q,
            samples,
            seed,
        } => {
            let f = f_input(f, *n)?;
            let q = q_input(q, *n)?;
            let mode = match samples {
                Some(count) => SpectrumMode::Sampled {
                    count: *count,
                    seed: *seed,
                },
                None => SpectrumMode::Full,
            };
            let spec = q_spectrum(&f, &q, mode)?;
            let rho = qtransform::rho(*n, q.weight()).ok();
            let rep = report(
                "spectrum",
                json!({ "n": n, "f": FuncEcho::of(&f), "q": FuncEcho::of(&q), "mode": mode }),
                json!({
                    "histogram": histogram_json(&spec.histogram),
                    "max_abs": spec.max_abs,
                    "witness_max": spec.witness_max,
                    "witness_rho": spec.witness_rho,
                    "zero_coeff": spec.zero_coeff,
                    "rho": rho,
                }),
            );
            Ok(Outcome {
                report: rep,
                exit_code: 0,
            })
        }
        Command::CheckBent { n, f } => {
            let f = f_input(f, *n)?;
            let bent = f.is_bent();
            let magnitudes = if *n <= 10 {
                let mut map = std::collections::BTreeMap::new();
                for w in f.walsh_spectrum() {
                    *map.entry(w.unsigned_abs()).or_insert(0u64) += 1;
                }
                Some(map)
            } else {
                None
            };
            let rep = report(
                "check-bent",
                json!({ "n": n, "f": FuncEcho::of(&f) }),
                json!({ "is_bent": bent, "spectrum_magnitudes": magnitudes }),
            );
            Ok(Outcome {
                report: rep,
                exit_code: 0,
            })
        }
        Command::CheckQBent { n, f, q } => {
            let f = f_input(f, *n)?;
            let q = q_input(q, *n)?;
            let verdict = is_q_bent(&f, &q)?;
            let rep = report(
                "check-q-bent",
                json!({ "n": n, "f": FuncEcho::of(&f), "q": FuncEcho::of(&q) }),
                serde_json::to_value(&verdict).expect("serializable"),
            );
            Ok(Outcome {
                report: rep,
                exit_code: 0,
            })
        }
        Command::CheckNearlyBent { n, f, q } => {
            let f = f_input(f, *n)?;
            let q = q_input(q, *n)?;
            let verdict = is_q_nearly_bent(&f, &q)?;
            let rep = report(
                "check-nearly-bent",
                json!({ "n": n, "f": FuncEcho::of(&f), "q": FuncEcho::of(&q) }),
                serde_json::to_value(&verdict).expect("serializable"),
            );
            Ok(Outcome {
                report: rep,
                exit_code: 0,
            })
        }
        Command::CheckPlateaued { n, f, q } => {
            let f = f_input(f, *n)?;
            let q = q_input(q, *n)?;
            let status = is_q_plateaued(&f, &q)?;
            let rep = report(
                "check-plateaued",
                json!({ "n": n, "f": FuncEcho::of(&f), "q": FuncEcho::of(&q) }),
                serde_json::to_value(&status).expect("serializable"),
            );
            Ok(Outcome {
                report: rep,
                exit_code: 0,
            })
        }
        Command::Stabilizer { n, f } => {
            let q = f_input(f, *n)?;
            let stab = stabilizer(&q)?;
            let rep = report(
                "stabilizer",
                json!({ "n": n, "q": FuncEcho::of(&q) }),
                serde_json::to_value(&stab).expect("serializable"),
            );
            Ok(Outcome {
                report: rep,
                exit_code: 0,
            })
        }
        Command::Moments { n, f, q } => {
            let f = f_input(f, *n)?;
            let q = q_input(q, *n)?;
            let m = second_moments(&f, &q)?;
            let rep = report(
                "moments",
                json!({ "n": n, "f": FuncEcho::of(&f), "q": FuncEcho::of(&q) }),
                serde_json::to_value(&m).expect("serializable"),
            );
            Ok(Outcome {
                report: rep,
                exit_code: 0,
            })
        }
        Command::Search {
            n,
            f,
            no_fix_zero,
            no_early_abort,
            max_matrices,
        } => {
            let q = f_input(f, *n)?;
            let cfg = SearchConfig {
                fix_zero: !no_fix_zero,
                early_abort: !no_early_abort,
                sample_q: None,
                max_matrices: *max_matrices,
            };
            let vr = search_q_nearly_bent(&q, &cfg)?;
            let inputs = json!({ "n": n, "q": FuncEcho::of(&q), "config": cfg });
            Ok(verification_outcome("search", inputs, vr))
        }
        Command::Verify {
            claim,
            n,
            samples,
            seed,
            exhaustive,
            no_fix_zero,
            no_early_abort,
        } => {
            let params = ClaimParams {
                n: *n,
                samples: *samples,
                seed: *seed,
                exhaustive: *exhaustive,
                cfg: SearchConfig {
                    fix_zero: !no_fix_zero,
                    early_abort: !no_early_abort,
                    sample_q: None,
                    max_matrices: None,
                },
            };
            let vr = verify_theorem(claim, &params)?;
            let inputs = json!({
                "claim": claim,
                "n": n,
                "samples": samples,
                "seed": seed,
                "exhaustive": exhaustive,
            });
            Ok(verification_outcome("verify", inputs, vr))
        }
        Command::Table1 {
            paper_values,
            samples,
            seed,
        } => {
            let params = ClaimParams {
                samples: *samples,
                seed: *seed,
                ..ClaimParams::default()
            };
            let vr = verify::table1(&params)?;
            let inputs = json!({ "paper_values": paper_values, "samples": samples, "seed": seed });
            Ok(verification_outcome("table1", inputs, vr))
        }
        Command::Table2 { max_n, paper_values } => {
            let vr = verify::table2(*max_n, &ClaimParams::default())?;
            let inputs = json!({ "max_n": max_n, "paper_values": paper_values });
            Ok(verification_outcome("table2", inputs, vr))
        }
        Command::Conjecture {
            n,
            wt_min,
            wt_max,
            samples,
            seed,
            no_fix_zero,
            no_early_abort,
        } => {
            let hi = wt_max.unwrap_or(1 << (n - 1));
            let cfg = SearchConfig {
                fix_zero: !no_fix_zero,
                early_abort: !no_early_abort,
                sample_q: samples.map(|count| SampleSpec { count, seed: *seed }),
                max_matrices: None,
            };
            let vr = conjecture_scan(*n, *wt_min..=hi, &cfg)?;
            let inputs = json!({ "n": n, "wt_min": wt_min, "wt_max": hi, "config": cfg });
            Ok(verification_outcome("conjecture", inputs, vr))
        }
        Command::Anf { n, tt_hex } => {
            let f = BoolFunc::from_tt_hex(tt_hex, *n)?;
            let rep = report(
                "anf",
                json!({ "n": n, "tt_hex": tt_hex }),
                serde_json::to_value(FuncEcho::of(&f)).expect("serializable"),
            );
            Ok(Outcome {
                report: rep,
                exit_code: 0,
            })
        }
        Command::Parse { n, anf } => {
            let f = BoolFunc::parse_anf(anf, *n)?;
            let rep = report(
                "parse",
                json!({ "n": n, "anf": anf }),
                serde_json::to_value(FuncEcho::of(&f)).expect("serializable"),
            );
            Ok(Outcome {
                report: rep,
                exit_code: 0,
            })
        }
    }
}

fn histogram_json(h: &std::collections::BTreeMap<i64, u64>) -> Value {
    Value::Array(
        h.iter()
            .map(|(w, count)| json!({ "w": w, "count": count }))
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// Rendering

fn render(cli: &Cli, rep: &Report, out: &mut dyn Write) -> Result<()> {
    let write_err = |e: std::io::Error| Error::Usage {
        msg: format!("could not write report: {e}"),
    };
    match cli.format {
        Format::Json => {
            let doc = serde_json::to_string_pretty(rep).expect("serializable");
            writeln!(out, "{doc}").map_err(write_err)
        }
        Format::Csv => render_table_csv(cli, rep, out).map_err(write_err),
        Format::Text => render_text(cli, rep, out).map_err(write_err),
    }
}

fn csv_quote(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => {
            if s.contains([',', '"', '\n']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.clone()
            }
        }
        Value::Array(items) => {
            let joined = items
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join("|");
            csv_quote(&Value::String(joined))
        }
        other => other.to_string(),
    }
}

fn render_table_csv(cli: &Cli, rep: &Report, out: &mut dyn Write) -> std::io::Result<()> {
    let paper_values = matches!(
        cli.command,
        Command::Table1 {
            paper_values: true,
            ..
        } | Command::Table2 {
            paper_values: true,
            ..
        }
    );
    let mut header = vec![
        "table", "n", "wt_q", "rho_computed", "rho_exact", "screen", "consistent",
    ];
    if paper_values {
        header.extend(["rho_printed", "printed_answer", "rho_matches"]);
    }
    writeln!(out, "{}", header.join(","))?;
    let cells = rep.result["verdict"]["details"]["cells"]
        .as_array()
        .cloned()
        .unwrap_or_default();
    for cell in cells {
        let mut row = vec![
            rep.command.clone(),
            csv_quote(&cell["n"]),
            csv_quote(&cell["wt_q"]),
            csv_quote(&cell["rho_computed"]),
            csv_quote(&cell["rho_exact"]),
            csv_quote(&cell["screen"]),
            csv_quote(&cell["consistent"]),
        ];
        if paper_values {
            row.push(csv_quote(&cell["rho_printed"]));
            row.push(csv_quote(&cell["printed_answer"]));
            row.push(csv_quote(&cell["rho_matches"]));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

fn render_text(cli: &Cli, rep: &Report, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "command: {}", rep.command)?;
    match &cli.command {
        Command::Table1 { paper_values, .. } | Command::Table2 { paper_values, .. } => {
            let cells = rep.result["verdict"]["details"]["cells"]
                .as_array()
                .cloned()
                .unwrap_or_default();
            for cell in cells {
                let mut line = format!(
                    "n={:<2} wt={:<6} rho={:<4} screen={}",
                    cell["n"], cell["wt_q"], cell["rho_computed"], cell["screen"]
                );
                if *paper_values {
                    line.push_str(&format!(
                        " printed={} answer={}",
                        cell["rho_printed"], cell["printed_answer"]
                    ));
                }
                if cell["rho_matches"] == Value::Bool(false) {
                    line.push_str("  [MISMATCH]");
                }
                writeln!(out, "{line}")?;
            }
            writeln!(out, "verdict: {}", rep.result["verdict"]["kind"])?;
        }
        _ => {
            // Compact generic rendering: inputs, then the result document.
            writeln!(out, "inputs: {}", rep.inputs)?;
            let result = serde_json::to_string_pretty(&rep.result).expect("serializable");
            writeln!(out, "{result}")?;
        }
    }
    if !rep.discrepancies.is_empty() {
        writeln!(out, "discrepancies:")?;
        for d in &rep.discrepancies {
            writeln!(out, "  {d}")?;
        }
    }
    if let Some(ms) = rep.timing_ms {
        writeln!(out, "timing_ms: {ms}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("qbent").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    fn run_json(args: &[&str]) -> (i32, Value) {
        let (code, out, err) = run_capture(args);
        let doc: Value = serde_json::from_str(&out)
            .unwrap_or_else(|e| panic!("bad JSON ({e}): out={out} err={err}"));
        (code, doc)
    }

    #[test]
    fn rho_flags_published_mismatch() {
        let (code, doc) = run_json(&["rho", "--n", "4", "--wt", "7"]);
        assert_eq!(code, 0);
        assert_eq!(doc["result"]["rho"], 5);
        assert_eq!(doc["discrepancies"][0]["printed"], json!([2]));
        // Matching cells carry no discrepancy.
        let (_, doc) = run_json(&["rho", "--n", "6", "--wt", "4"]);
        assert_eq!(doc["result"]["rho"], 4);
        assert!(doc["discrepancies"].as_array().unwrap().is_empty());
    }

    #[test]
    fn stabilizer_command() {
        let (code, doc) = run_json(&["stabilizer", "--anf", "x1*x2+x3", "--n", "3"]);
        assert_eq!(code, 0);
        assert_eq!(doc["result"]["order"], 6);
        assert_eq!(doc["result"]["orbit_size"], 28);
        assert_eq!(doc["result"]["matrices"].as_array().unwrap().len(), 6);
    }

    #[test]
    fn verify_thm3_exits_zero() {
        let (code, doc) = run_json(&["verify", "--claim", "thm3", "--n", "3"]);
        assert_eq!(code, 0);
        assert_eq!(doc["result"]["verdict"]["kind"], "FoundWitnesses");
    }

    #[test]
    fn coeff_and_parse_roundtrip() {
        let (code, doc) = run_json(&[
            "coeff",
            "--n",
            "3",
            "--tt-hex",
            "0F",
            "--q-anf",
            "x1*x2+x3",
            "--matrix",
            "100;010;001",
        ]);
        assert_eq!(code, 0);
        assert_eq!(doc["result"]["paths_agree"], true);
        // The echoed function re-parses to the same table through either
        // rendering.
        let hex = doc["inputs"]["f"]["tt_hex"].as_str().unwrap();
        let anf = doc["inputs"]["f"]["anf"].as_str().unwrap();
        let by_hex = BoolFunc::from_tt_hex(hex, 3).unwrap();
        let by_anf = BoolFunc::parse_anf(anf, 3).unwrap();
        assert_eq!(by_hex, by_anf);
    }

    #[test]
    fn malformed_inputs_exit_two() {
        let (code, _, err) = run_capture(&["parse", "--anf", "x1*+x2", "--n", "3"]);
        assert_eq!(code, 2);
        assert!(err.contains("syntax error"));
        let (code, _, err) = run_capture(&["rho", "--n", "40", "--wt", "1"]);
        assert_eq!(code, 2);
        assert!(err.contains("out of range"));
        let (code, _, _) = run_capture(&["spectrum", "--n", "3", "--anf", "x1"]);
        assert_eq!(code, 2);
        // csv is rejected outside the table commands
        let (code, _, err) = run_capture(&["--format", "csv", "rho", "--n", "4", "--wt", "4"]);
        assert_eq!(code, 2);
        assert!(err.contains("csv"));
    }

    #[test]
    fn table_csv_has_row_per_cell() {
        let (code, out, _) = run_capture(&["--format", "csv", "table2", "--max-n", "17"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.trim().lines().collect();
        assert_eq!(lines.len(), 1 + 8);
        assert!(lines[0].starts_with("table,n,wt_q,rho_computed"));
        // --paper-values adds the printed columns.
        let (_, out2, _) = run_capture(&[
            "--format",
            "csv",
            "table2",
            "--max-n",
            "17",
            "--paper-values",
        ]);
        assert!(out2.lines().next().unwrap().contains("rho_printed"));
    }

    #[test]
    fn reports_hide_timing_by_default() {
        let (_, out, _) = run_capture(&["rho", "--n", "5", "--wt", "5"]);
        assert!(!out.contains("timing_ms"));
        let (_, out, _) = run_capture(&["--timing", "rho", "--n", "5", "--wt", "5"]);
        assert!(out.contains("timing_ms"));
    }

    #[test]
    fn help_names_the_claims() {
        let (code, out, _) = run_capture(&["verify", "--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("thm3"));
        assert!(out.contains("plateaued-n3"));
        assert!(out.contains("noqbent-n4"));
    }
}
