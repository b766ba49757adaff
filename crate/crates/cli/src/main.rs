//! `kfol`: runs the verification suites and writes one JSON check report per
//! line. Exit status is 0 when every report passes, 1 when any fails and 2
//! for invalid input.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use kahler_foliation::catalog::{catalog_export, CatalogExport};
use kahler_foliation::report::{all_pass, to_json_lines};
use kahler_foliation::{
    catalog_checks, example4_checks, nomizu_checks, run_twistor, CheckReport, ComplexPolynomial, Error, FdConfig,
    InfinitesimalModel, NomizuOptions, Scheme, TwistorConfig,
};

#[derive(Parser)]
#[command(name = "kfol", version, about = "Verification suites for complex Riemannian foliations of Kähler manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Chart, O'Neill, curvature, nearly Kähler and Nomizu checks on the twistor fibration.
    VerifyTwistor {
        /// Complex dimension of the projective space (odd, at least 3).
        #[arg(long, default_value_t = 3)]
        complex_dim: usize,
        /// Holomorphic sectional curvature.
        #[arg(long, default_value_t = 4.0)]
        c: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = Scheme::Richardson2Level)]
        scheme: Scheme,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Report file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the infinitesimal model of the first point as JSON.
        #[arg(long)]
        export_model: Option<PathBuf>,
    },
    /// Grid checks on the deformed product built from a polynomial f(z).
    VerifyExample4 {
        /// Polynomial in z with complex coefficients, e.g. "0.3*z^2" or "(1+2i)z - z^3/4".
        #[arg(long)]
        f_spec: String,
        /// Points per side of the grid on [-1, 1]^2.
        #[arg(long, default_value_t = 16)]
        grid: usize,
        /// Tolerance of the Kähler and Riemannian residuals.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Nomizu algebra diagnostics for a serialized infinitesimal model.
    Nomizu {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tables of Hermitian symmetric and type III 3-symmetric spaces, with the overlap verdicts.
    Catalog {
        /// Largest parameter value swept (at least 4).
        #[arg(long, default_value_t = 12)]
        sweep_bound: u32,
        /// Check report file; stdout carries the tables and a verdict line per check.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the tables and verdicts as one JSON document.
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Io(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = subcommand_name(&cli.command);
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n");
            let mut cmd = Cli::command();
            let usage = cmd.find_subcommand_mut(name).map(|c| c.render_usage()).unwrap_or_else(|| Cli::command().render_usage());
            eprintln!("{usage}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn subcommand_name(command: &Command) -> &'static str {
    match command {
        Command::VerifyTwistor { .. } => "verify-twistor",
        Command::VerifyExample4 { .. } => "verify-example4",
        Command::Nomizu { .. } => "nomizu",
        Command::Catalog { .. } => "catalog",
    }
}

fn run(command: Command) -> Result<bool, Failure> {
    match command {
        Command::VerifyTwistor { complex_dim, c, step, scheme, points, seed, out, export_model } => {
            let cfg = TwistorConfig { complex_dim, c, fd: FdConfig { step, scheme, seed }, points };
            cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let run = run_twistor(&cfg).map_err(|e| Failure::Usage(e.to_string()))?;
            if let (Some(path), Some(model)) = (export_model, &run.model) {
                let json = model.to_json().map_err(|e| Failure::Io(e.to_string()))?;
                write_file(&path, &json)?;
            }
            emit(&run.reports, out.as_deref())
        }
        Command::VerifyExample4 { f_spec, grid, tol, out } => {
            let f: ComplexPolynomial = f_spec.parse().map_err(|e: Error| Failure::Usage(format!("--f-spec: {e}")))?;
            if grid == 0 {
                return Err(Failure::Usage("--grid must be positive".into()));
            }
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Failure::Usage("--tol must be positive".into()));
            }
            let reports = match example4_checks(f, grid, tol, &FdConfig::default()) {
                Ok(r) => r,
                Err(e) => vec![CheckReport::verdict("example4", false).with("error", e.to_string())],
            };
            emit(&reports, out.as_deref())
        }
        Command::Nomizu { input, seed, out } => {
            let text = fs::read_to_string(&input).map_err(|e| Failure::Io(format!("{}: {e}", input.display())))?;
            let model =
                InfinitesimalModel::<f64>::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", input.display())))?;
            let reports = nomizu_checks(&model, &NomizuOptions { seed, ..NomizuOptions::default() });
            emit(&reports, out.as_deref())
        }
        Command::Catalog { sweep_bound, out, export } => {
            if sweep_bound < 4 {
                return Err(Failure::Usage("--sweep-bound must be at least 4".into()));
            }
            let doc = catalog_export(sweep_bound);
            if let Some(path) = export {
                let json = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Io(e.to_string()))?;
                write_file(&path, &(json + "\n"))?;
            }
            let reports = catalog_checks(sweep_bound);
            let mut text = render_catalog(&doc);
            for r in &reports {
                let verdict = if r.pass { "PASS" } else { "FAIL" };
                text.push_str(&format!("{verdict} {} residual={}\n", r.check, r.residual));
            }
            if let Some(path) = out {
                write_file(&path, &to_json_lines(&reports))?;
            }
            write_stdout(&text)?;
            Ok(all_pass(&reports))
        }
    }
}

fn emit(reports: &[CheckReport], out: Option<&Path>) -> Result<bool, Failure> {
    let text = to_json_lines(reports);
    match out {
        Some(path) => write_file(path, &text)?,
        None => write_stdout(&text)?,
    }
    Ok(all_pass(reports))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_stdout(text: &str) -> Result<(), Failure> {
    let mut stdout = io::stdout().lock();
    stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).map_err(|e| Failure::Io(e.to_string()))
}

fn render_catalog(doc: &CatalogExport) -> String {
    let mut s = String::from("Hermitian symmetric spaces\n");
    for (k, row) in doc.hermitian_symmetric.iter().enumerate() {
        s.push_str(&format!("  [{k}] {} / {}  ({})\n", row.entry.group_name, row.entry.isotropy_name, row.entry.restrictions));
        for x in &row.instances {
            let n = x.n.map_or("-".to_string(), |n| n.to_string());
            s.push_str(&format!("      n={n:<3} g={:<4} dim G={:<4} dim H={:<4} h={}\n", x.group, x.dim_g, x.dim_h, x.isotropy));
        }
    }
    s.push_str("3-symmetric spaces of type III\n");
    for (k, row) in doc.three_symmetric_type_iii.iter().enumerate() {
        s.push_str(&format!(
            "  [{k}] {} / {}  dim V = {}  ({})\n",
            row.entry.group_name, row.entry.isotropy_name, row.entry.dim_v_formula, row.entry.restrictions
        ));
        for x in &row.instances {
            let n = x.n.map_or("-".to_string(), |n| n.to_string());
            let i = x.i.map_or("-".to_string(), |i| i.to_string());
            s.push_str(&format!(
                "      n={n:<3} i={i:<3} g={:<4} dim G={:<4} dim H={:<4} dim V={:<4} h={}\n",
                x.group, x.dim_g, x.dim_h, x.dim_v, x.isotropy
            ));
        }
    }
    s
}
