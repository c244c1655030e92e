use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fbst::asymptotics::qq_confidence;
use fbst::error::FbstError;
use fbst::pipeline::{
    run_calibration, run_consistency_study, run_invariance_check, run_test,
};
use fbst::spec::TestSpec;

#[derive(Parser)]
#[command(name = "fbst", version, about = "e-values and the Full Bayesian Significance Test")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// Path to the JSON test specification
    #[arg(long)]
    spec: PathBuf,
    /// Write the report here (atomically) in addition to stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the seed in the spec's sampling block
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for replicate-level parallelism (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct StudyArgs {
    /// Comma-separated sample sizes, e.g. 50,200,1000
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<u64>,
    /// True parameter used to simulate replicates, comma-separated
    #[arg(long, value_delimiter = ',', required = true)]
    theta0: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    replicates: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline for one spec and emit an EvalReport
    Test {
        #[command(flatten)]
        common: Common,
    },
    /// Empirical critical levels c(n) over a sample-size grid
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        study: StudyArgs,
        /// Significance level for the critical quantile
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Simulation study of median ev_bar and KS uniformity across n
    Consistency {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        study: StudyArgs,
    },
    /// Recompute the e-value under a library reparameterization and compare
    Invariance {
        #[command(flatten)]
        common: Common,
        /// Map name: identity | affine | log | log_odds | stick_breaking
        #[arg(long)]
        map: String,
    },
    /// Print a QQ(t, h, c) confidence-transform table
    Qq {
        #[arg(long)]
        t: u32,
        #[arg(long, value_delimiter = ',', required = true)]
        h: Vec<u32>,
        /// Evidence values to transform; default is a 21-point grid on [0,1]
        #[arg(long, value_delimiter = ',')]
        c: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

fn atomic_write(path: &Path, contents: &str) -> Result<(), FbstError> {
    let tmp = path.with_extension(format!(
        "tmp.{}",
        std::process::id()
    ));
    let io = |e: std::io::Error| FbstError::InvalidSpec(format!("cannot write {}: {e}", path.display()));
    std::fs::write(&tmp, contents).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

fn emit(out: &Option<PathBuf>, body: &str) -> Result<(), FbstError> {
    let body = if body.ends_with('\n') {
        body.to_string()
    } else {
        format!("{body}\n")
    };
    if let Some(path) = out {
        atomic_write(path, &body)?;
    }
    print!("{body}");
    Ok(())
}

fn load_spec(common: &Common) -> Result<TestSpec, FbstError> {
    let raw = std::fs::read_to_string(&common.spec)
        .map_err(|e| FbstError::InvalidSpec(format!("cannot read {}: {e}", common.spec.display())))?;
    let mut spec = TestSpec::from_json(&raw)?;
    if let Some(seed) = common.seed {
        spec.sampling.seed = seed;
    }
    if let Some(k) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| FbstError::InvalidSpec(format!("thread pool: {e}")))?;
    }
    Ok(spec)
}

fn report_csv(result: &fbst::pipeline::ReportResult) -> String {
    let flat = serde_json::to_value(result).expect("report serializes");
    let mut out = String::from("field,value\n");
    if let serde_json::Value::Object(map) = flat {
        for (k, v) in map {
            let v = match v {
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            };
            out.push_str(&format!("{k},{}\n", v.replace(',', ";")));
        }
    }
    out
}

fn run(cli: Cli) -> Result<(), FbstError> {
    match cli.command {
        Command::Test { common } => {
            let spec = load_spec(&common)?;
            let out = run_test(&spec)?;
            if let (Some(path), Some(curve)) = (&spec.output.w_curve_csv, &out.w_curve) {
                let mut csv = String::from("v,w\n");
                for (v, w) in curve {
                    csv.push_str(&format!("{v},{w}\n"));
                }
                atomic_write(Path::new(path), &csv)?;
            }
            let body = match common.format {
                Format::Json => out.report.to_json_pretty(),
                Format::Csv => report_csv(&out.report.result),
            };
            emit(&common.out, &body)
        }
        Command::Calibrate { common, study, alpha } => {
            let spec = load_spec(&common)?;
            let table = run_calibration(
                &spec,
                &study.grid,
                &study.theta0,
                study.replicates,
                alpha,
                spec.sampling.seed,
            )?;
            let body = match common.format {
                Format::Csv => table.to_csv(),
                Format::Json => {
                    let rows: Vec<serde_json::Value> = table
                        .rows
                        .iter()
                        .map(|r| {
                            serde_json::json!({
                                "n": r.n,
                                "c_n": r.critical_level,
                                "replicates": r.replicates,
                                "seed": r.seed,
                            })
                        })
                        .collect();
                    serde_json::to_string_pretty(&rows).expect("rows serialize")
                }
            };
            emit(&common.out, &body)
        }
        Command::Consistency { common, study } => {
            let spec = load_spec(&common)?;
            let result = run_consistency_study(
                &spec,
                &study.grid,
                &study.theta0,
                study.replicates,
                spec.sampling.seed,
            )?;
            let body = match common.format {
                Format::Csv => result.to_csv(),
                Format::Json => serde_json::to_string_pretty(&result).expect("rows serialize"),
            };
            emit(&common.out, &body)
        }
        Command::Invariance { common, map } => {
            let spec = load_spec(&common)?;
            let report = run_invariance_check(&spec, &map)?;
            let body = match common.format {
                Format::Json => serde_json::to_string_pretty(&report).expect("report serializes"),
                Format::Csv => format!(
                    "map,ev_base,ev_transformed,delta_ev,tolerance,pass\n{},{},{},{},{},{}\n",
                    report.map,
                    report.base.result.ev,
                    report.transformed.result.ev,
                    report.delta_ev,
                    report.tolerance,
                    report.pass
                ),
            };
            emit(&common.out, &body)
        }
        Command::Qq { t, h, c, out, format } => {
            let cs: Vec<f64> = c.unwrap_or_else(|| (0..=20).map(|i| i as f64 / 20.0).collect());
            let mut rows = Vec::new();
            for &hh in &h {
                for &cc in &cs {
                    rows.push((t, hh, cc, qq_confidence(t, hh, cc)?));
                }
            }
            let body = match format {
                Format::Csv => {
                    let mut s = String::from("t,h,c,qq\n");
                    for (t, h, c, q) in &rows {
                        s.push_str(&format!("{t},{h},{c},{q}\n"));
                    }
                    s
                }
                Format::Json => {
                    let vals: Vec<serde_json::Value> = rows
                        .iter()
                        .map(|(t, h, c, q)| serde_json::json!({"t": t, "h": h, "c": c, "qq": q}))
                        .collect();
                    serde_json::to_string_pretty(&vals).expect("rows serialize")
                }
            };
            emit(&out, &body)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
