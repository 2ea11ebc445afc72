use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qgeom::quadrature::{fmt17, grid_point};
use qgeom::{validate, BandSelection, Error, ModelSpec};

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "qgeom",
    version,
    about = "Quantum geometry of Bloch-band projectors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON model file; defaults to the built-in two-band model with m0 = 1
    #[arg(long, global = true, value_name = "PATH")]
    model: Option<PathBuf>,

    /// Grid points per axis for zone integrals
    #[arg(long, global = true, default_value_t = 400, value_name = "N")]
    grid: usize,

    /// Angular samples on the fold curve
    #[arg(
        long = "curve-samples",
        global = true,
        default_value_t = 800,
        value_name = "N"
    )]
    curve_samples: usize,

    /// `lower`, `upper`, or a comma-separated list of 1-based band indices
    #[arg(long, global = true, default_value = "lower")]
    band: String,

    /// Output file; standard output when omitted
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Allow the Gauss–Bonnet relations for Chern numbers other than 1
    #[arg(long = "experimental-general-c", global = true)]
    experimental_general_c: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Per-k CSV of det g, λ̄ and K_G
    Fields,
    /// Chern number and its distance from the nearest integer
    Chern,
    /// Quantum-volume report as JSON
    Volume,
    /// Fold-curve samples as CSV
    SingularCurve,
    /// Gauss–Bonnet report as JSON
    GaussBonnet,
    /// Run the invariant suite
    Validate,
}

enum Failure {
    Usage(String),
    Verify(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. }
            | Error::InvalidModel(_)
            | Error::HermiticityPair { .. }
            | Error::BandSelection(_)
            | Error::GridTooSmall(_) => Failure::Usage(e.to_string()),
            other => Failure::Verify(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn parse_band(text: &str, n_bands: usize) -> Result<BandSelection, Failure> {
    match text {
        "lower" => Ok(BandSelection::lower()),
        "upper" => Ok(BandSelection::upper(n_bands)),
        list => {
            let mut idx = Vec::new();
            for part in list.split(',') {
                let one: usize = part
                    .trim()
                    .parse()
                    .map_err(|_| Failure::Usage(format!("bad band index {part:?}")))?;
                if one == 0 {
                    return Err(Failure::Usage("band indices are 1-based".into()));
                }
                idx.push(one - 1);
            }
            Ok(BandSelection::new(idx, n_bands)?)
        }
    }
}

fn load_model(path: Option<&PathBuf>) -> Result<ModelSpec, Failure> {
    match path {
        None => Ok(ModelSpec::two_band(1.0)),
        Some(p) => {
            let bytes =
                std::fs::read(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            Ok(qgeom::parse_model_spec(&bytes)?)
        }
    }
}

fn writer(out: Option<&PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_fields(
    spec: &ModelSpec,
    band: &BandSelection,
    n: usize,
    mut w: impl Write,
) -> Result<(), Failure> {
    if n < qgeom::quadrature::MIN_GRID {
        return Err(Error::GridTooSmall(n).into());
    }
    use rayon::prelude::*;
    let rows: Vec<Vec<qgeom::QGeometryPoint>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| qgeom::geometry_point(spec, band, grid_point(n, i, j)))
                .collect::<qgeom::Result<Vec<_>>>()
        })
        .collect::<qgeom::Result<_>>()?;
    writeln!(w, "kx,ky,det_g,lambda_bar,K_G")?;
    for q in rows.iter().flatten() {
        let kg = q.k_gauss.map(fmt17).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt17(q.k.kx),
            fmt17(q.k.ky),
            fmt17(q.det_g),
            fmt17(q.lambda_bar),
            kg
        )?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if cli.grid < 8 {
        return Err(Failure::Usage(format!(
            "--grid must be at least 8, got {}",
            cli.grid
        )));
    }
    if cli.curve_samples < 64 {
        return Err(Failure::Usage(format!(
            "--curve-samples must be at least 64, got {}",
            cli.curve_samples
        )));
    }
    let spec = load_model(cli.model.as_ref())?;
    let band = parse_band(&cli.band, spec.n_bands())?;
    let out = cli.out.as_ref();

    match cli.command {
        Command::Fields => write_fields(&spec, &band, cli.grid, writer(out)?)?,
        Command::Chern => {
            let c = qgeom::chern_number(&spec, &band, cli.grid)?;
            let mut w = writer(out)?;
            writeln!(w, "{} {:.3e}", c.chern, c.residual)?;
            w.flush()?;
        }
        Command::Volume => {
            let v = qgeom::volume_report(&spec, &band, cli.grid)?;
            let [u, s, m3, m1] = v.in_units_of_2pi();
            let mut json = serde_json::to_value(v).expect("serializable");
            json["in_units_of_2pi"] = serde_json::json!({
                "unsigned_volume": u,
                "signed_volume": s,
                "area_m3": m3,
                "area_m1": m1,
            });
            let mut w = writer(out)?;
            writeln!(
                w,
                "{}",
                serde_json::to_string_pretty(&json).expect("serializable")
            )?;
            w.flush()?;
        }
        Command::SingularCurve => {
            let curve = qgeom::trace_singular_curve(&spec, &band, cli.curve_samples)?;
            let mut w = writer(out)?;
            curve.write_csv(&mut w)?;
            w.flush()?;
            let total = qgeom::singular_line_integral(&curve)?;
            eprintln!("(1/pi) integral of kappa_s ds = {total:.6}");
        }
        Command::GaussBonnet => {
            let r = qgeom::gauss_bonnet_report(
                &spec,
                &band,
                cli.grid,
                cli.curve_samples,
                cli.experimental_general_c,
            )?;
            let mut w = writer(out)?;
            writeln!(
                w,
                "{}",
                serde_json::to_string_pretty(&r).expect("serializable")
            )?;
            w.flush()?;
            eprintln!(
                "C = {}  sum residual = {:.3e}  sub residual = {:.3e}",
                r.chern, r.sum_residual, r.sub_residual
            );
            if !r.verified {
                return Err(Failure::Verify("residual above threshold".into()));
            }
        }
        Command::Validate => {
            let opts = validate::SuiteOptions {
                grid_n: cli.grid.min(128),
                curve_n: cli.curve_samples.min(256),
                ..Default::default()
            };
            let checks = validate::run_suite(&spec, &band, opts);
            let mut w = writer(out)?;
            let mut failed = 0;
            for c in &checks {
                let tag = match c.passed {
                    Some(true) => "PASS",
                    Some(false) => {
                        failed += 1;
                        "FAIL"
                    }
                    None => "SKIP",
                };
                writeln!(w, "{tag}  {}: {}", c.name, c.detail)?;
            }
            w.flush()?;
            if failed > 0 {
                return Err(Failure::Verify(format!("{failed} check(s) failed")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("QGEOM_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
    {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("usage: qgeom <fields|chern|volume|singular-curve|gauss-bonnet|validate> [--model PATH] [--grid N] [--curve-samples N] [--band lower|upper|LIST] [--out PATH] [--experimental-general-c]");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Verify(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(EXIT_VERIFY)
        }
    }
}
