use clap::{Parser, Subcommand, ValueEnum};
use rklfd_core::cmp::{cmp_digital, DigitalSetup};
use rklfd_core::poly::Family;
use rklfd_core::problem::{converge, gamma_profile, price, PricingProblem};
use rklfd_core::stability::{stats_with_reference, Window, DEFAULT_NX, DEFAULT_NY};
use rklfd_core::{Error, SchemeCoefficients};
use serde::Serialize;
use serde_json::Value;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

mod overrides;

#[derive(Parser)]
#[command(name = "rklfd", version, about = "Finite-difference option pricing with RKL super-time-stepping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// Problem config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config field, e.g. `--set time.steps=640`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Rkl,
    Rkc,
}

#[derive(Subcommand)]
enum Command {
    /// Price one problem.
    Price {
        #[command(flatten)]
        common: Common,
        /// Also write the full solution surface as CSV.
        #[arg(long)]
        surface: Option<PathBuf>,
    },
    /// Refinement ladder doubling space and time steps per level.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        levels: u32,
        /// Reference value for the error column.
        #[arg(long)]
        reference: Option<f64>,
    },
    /// Amplification-factor raster and region statistics.
    Stability {
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long)]
        stages: usize,
        #[arg(long, default_value_t = 0.0)]
        shift: f64,
        #[arg(long, default_value_t = DEFAULT_NX)]
        nx: usize,
        #[arg(long, default_value_t = DEFAULT_NY)]
        ny: usize,
        /// `re_min,re_max,im_min,im_max`; automatic when omitted.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        window: Option<Vec<f64>>,
        /// Raster CSV (re, im, damping).
        #[arg(long)]
        raster: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Value, Delta and Gamma along the asset grid.
    Gamma {
        #[command(flatten)]
        common: Common,
    },
    /// One-step digital call values per explicit scheme.
    CmpDigital {
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Config(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => Failure::Config(e.to_string()),
            other => Failure::Solver(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("solver error: {m}");
            ExitCode::from(3)
        }
    }
}

fn load_json(path: Option<&Path>, set: &[String]) -> Result<Option<Value>, Failure> {
    let mut doc = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?
        }
        None if set.is_empty() => return Ok(None),
        None => Value::Object(Default::default()),
    };
    for s in set {
        overrides::apply(&mut doc, s).map_err(Failure::Config)?;
    }
    Ok(Some(doc))
}

fn load_problem(common: &Common) -> Result<PricingProblem, Failure> {
    let doc = load_json(common.config.as_deref(), &common.set)?
        .ok_or_else(|| Failure::Config("--config is required".into()))?;
    Ok(PricingProblem::from_json(&doc.to_string())?)
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(std::fs::File::create(p).map_err(|e| Failure::Solver(format!("{}: {e}", p.display())))?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), Failure> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Solver(e.to_string()))?;
    writeln!(w).map_err(|e| Failure::Solver(e.to_string()))
}

fn write_csv<T: Serialize>(out: Option<&Path>, rows: &[T]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    for r in rows {
        w.serialize(r).map_err(|e| Failure::Solver(e.to_string()))?;
    }
    w.flush().map_err(|e| Failure::Solver(e.to_string()))
}

fn write_records(out: Option<&Path>, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    let err = |e: csv::Error| Failure::Solver(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r.iter().map(|v| format!("{v:?}"))).map_err(err)?;
    }
    w.flush().map_err(|e| Failure::Solver(e.to_string()))
}

#[derive(Serialize)]
struct PriceCsvRow {
    spot: f64,
    variance: Option<f64>,
    price: f64,
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Price { common, surface } => {
            let problem = load_problem(&common)?;
            let outcome = price(&problem)?;
            if let Some(path) = surface {
                let s = &outcome.surface;
                match &s.v {
                    None => write_records(
                        Some(&path),
                        &["x".into(), "value".into()],
                        s.x.iter().zip(&s.values).map(|(x, v)| vec![*x, *v]),
                    )?,
                    Some(vs) => {
                        let nx = s.x.len();
                        write_records(
                            Some(&path),
                            &["x".into(), "v".into(), "value".into()],
                            s.values.iter().enumerate().map(|(k, val)| vec![s.x[k % nx], vs[k / nx], *val]),
                        )?
                    }
                }
            }
            match common.format.unwrap_or(Format::Json) {
                Format::Json => write_json(common.out.as_deref(), &outcome.report),
                Format::Csv => {
                    let rows: Vec<PriceCsvRow> = outcome
                        .report
                        .prices
                        .iter()
                        .map(|p| PriceCsvRow {
                            spot: p.spot,
                            variance: p.variance,
                            price: p.price,
                        })
                        .collect();
                    write_csv(common.out.as_deref(), &rows)
                }
            }
        }
        Command::Converge {
            common,
            levels,
            reference,
        } => {
            let problem = load_problem(&common)?;
            let rows = converge(&problem, levels, reference)?;
            match common.format.unwrap_or(Format::Csv) {
                Format::Csv => write_csv(common.out.as_deref(), &rows),
                Format::Json => write_json(common.out.as_deref(), &rows),
            }
        }
        Command::Stability {
            scheme,
            stages,
            shift,
            nx,
            ny,
            window,
            raster,
            out,
            format,
        } => {
            let family = match scheme {
                SchemeArg::Rkl => Family::Legendre,
                SchemeArg::Rkc => Family::Chebyshev,
            };
            if stages < 2 {
                return Err(Failure::Config("stages: need at least 2".into()));
            }
            if window.as_ref().is_some_and(|w| w.len() != 4) {
                return Err(Failure::Config("window: expected re_min,re_max,im_min,im_max".into()));
            }
            let window = window.map(|w| Window {
                re_min: w[0],
                re_max: w[1],
                im_min: w[2],
                im_max: w[3],
            });
            let c = SchemeCoefficients::new(family, stages, shift).map_err(|e| Failure::Config(e.to_string()))?;
            let (scan, stats) = stats_with_reference(&c, window, nx, ny)?;
            if let Some(path) = raster {
                write_records(
                    Some(&path),
                    &["re".into(), "im".into(), "damping".into()],
                    (0..scan.ny).flat_map(|j| {
                        let scan = &scan;
                        (0..scan.nx).map(move |i| {
                            let z = scan.point(i, j);
                            vec![z.re, z.im, scan.damping[j * scan.nx + i]]
                        })
                    }),
                )?;
            }
            match format.unwrap_or(Format::Json) {
                Format::Json => write_json(out.as_deref(), &stats),
                Format::Csv => write_csv(out.as_deref(), &[stats]),
            }
        }
        Command::Gamma { common } => {
            let problem = load_problem(&common)?;
            let rows = gamma_profile(&problem)?;
            match common.format.unwrap_or(Format::Csv) {
                Format::Csv => write_csv(common.out.as_deref(), &rows),
                Format::Json => write_json(common.out.as_deref(), &rows),
            }
        }
        Command::CmpDigital { common } => {
            let setup: DigitalSetup = match load_json(common.config.as_deref(), &common.set)? {
                Some(doc) => serde_json::from_value(doc).map_err(|e| Failure::Config(e.to_string()))?,
                None => DigitalSetup::default(),
            };
            let table = cmp_digital(&setup)?;
            match common.format.unwrap_or(Format::Csv) {
                Format::Json => write_json(common.out.as_deref(), &table),
                Format::Csv => {
                    let mut header = vec!["x".to_string()];
                    header.extend(table.columns.iter().map(|c| c.label.clone()));
                    header.push("analytic".into());
                    let rows = (0..table.x.len()).map(|i| {
                        let mut r = vec![table.x[i]];
                        r.extend(table.columns.iter().map(|c| c.values[i]));
                        r.push(table.analytic[i]);
                        r
                    });
                    write_records(common.out.as_deref(), &header, rows)
                }
            }
        }
    }
}
