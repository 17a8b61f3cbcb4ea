use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use divstokes_bench::output::{report_markdown, write_outputs, Emit, OutputOptions};
use divstokes_bench::run::run_with_progress;
use divstokes_bench::CaseConfig;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EmitArg {
    Csv,
    Md,
    Both,
}

/// Runs a Stokes solver sweep described by a `key = value` config file.
#[derive(Debug, Parser)]
#[command(name = "bench", version)]
struct Cli {
    /// Configuration file.
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = EmitArg::Both)]
    emit: EmitArg,
    /// Write `residuals_<strategy>.dat` with the MINRES residual histories.
    #[arg(long)]
    dump_residuals: bool,
    /// Write the full preconditioned spectra of each analysed level.
    #[arg(long)]
    dump_spectrum: bool,
    /// Worker threads for assembly and SpMV (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: &Cli) -> divstokes_bench::Result<bool> {
    if cli.threads > 0 {
        divstokes::par::init_threads(cli.threads)?;
    }
    let mut config = CaseConfig::from_file(&cli.config)?;
    // a spectrum dump needs the spectral analysis
    config.spectra |= cli.dump_spectrum;
    let out = run_with_progress(&config, |r| {
        let status = match (&r.failure, r.converged) {
            (Some(e), _) => format!("failed: {e}"),
            (None, true) => "converged".into(),
            (None, false) => "not converged".into(),
        };
        eprintln!(
            "{} k'={} h=1/{} {}: {} iterations, {:.2}s, {status}",
            r.case, r.k_prime, r.n_elem, r.strategy, r.iterations, r.seconds
        );
    })?;
    let emit = match cli.emit {
        EmitArg::Csv => Emit::Csv,
        EmitArg::Md => Emit::Markdown,
        EmitArg::Both => Emit::Both,
    };
    let opts = OutputOptions {
        emit,
        dump_residuals: cli.dump_residuals,
        dump_spectrum: cli.dump_spectrum,
    };
    for path in write_outputs(&out, &cli.out, opts)? {
        eprintln!("wrote {}", path.display());
    }
    print!("{}", report_markdown(&out));
    Ok(out.all_converged())
}
