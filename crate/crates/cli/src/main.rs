//! Runs a figure preset or a custom sweep and writes its CSV table, SVG
//! charts and, for convergence runs, per-series traces.
//!
//! Every flag can also be set through an environment variable with the
//! `SPECSHARE_` prefix (`SPECSHARE_SEED`, `SPECSHARE_FAST`, ...); flags
//! win over the environment, which wins over the config file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use specshare::experiment::{load_config, parse_config, run_experiment, PresetName, FAST_REPLICATIONS};
use specshare::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "specshare", version, about = "Spectrum-sharing sweeps: expected rates, profits and optimized policies")]
struct Args {
    /// TOML configuration; missing keys take the default parameters.
    #[arg(long, env = "SPECSHARE_CONFIG")]
    config: Option<PathBuf>,

    /// fig3 .. fig10, or custom (uses the sweep in the config file).
    #[arg(long, env = "SPECSHARE_EXPERIMENT")]
    experiment: Option<String>,

    /// Master seed.
    #[arg(long, env = "SPECSHARE_SEED")]
    seed: Option<u64>,

    /// Optimizer iterations, one sample batch each.
    #[arg(long, env = "SPECSHARE_SAMPLES")]
    samples: Option<usize>,

    #[arg(long, env = "SPECSHARE_REPLICATIONS")]
    replications: Option<usize>,

    #[arg(long, env = "SPECSHARE_OUT", default_value = "results")]
    out: PathBuf,

    /// 100 replications instead of 500, unless --replications is given.
    #[arg(long, env = "SPECSHARE_FAST")]
    fast: bool,
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config { .. } => ExitCode::from(EXIT_CONFIG),
        _ => ExitCode::FAILURE,
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let loaded = match &args.config {
        Some(path) => load_config(path),
        None => parse_config(""),
    };
    let mut loaded = match loaded {
        Ok(l) => l,
        Err(e) => return fail(&e),
    };
    let opts = &mut loaded.options;
    if let Some(name) = &args.experiment {
        match name.parse::<PresetName>() {
            Ok(n) => opts.name = n,
            Err(e) => return fail(&e),
        }
    }
    if let Some(seed) = args.seed {
        opts.seed = seed;
    }
    if args.fast {
        opts.replications = FAST_REPLICATIONS;
    }
    if let Some(r) = args.replications {
        opts.replications = r;
    }
    if let Some(t) = args.samples {
        loaded.scenario.settings.iterations = t;
    }
    let preset = match loaded.preset() {
        Ok(p) => p,
        Err(e) => return fail(&e),
    };

    print!("{}", loaded.echo());
    println!();
    let name = preset.name.as_str();
    eprintln!(
        "running {name}: {} grid points x {} series x {} replications",
        preset.grid.len(),
        preset.series.len(),
        preset.replications
    );
    let output = match run_experiment(&preset) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    if let Err(e) = std::fs::create_dir_all(&args.out)
        .map_err(Error::from)
        .and_then(|_| std::fs::write(args.out.join(format!("{name}_config.toml")), loaded.echo()).map_err(Error::from))
    {
        return fail(&e);
    }
    match output.write(&args.out, name, preset.sweep.as_str()) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Err(e) => return fail(&e),
    }
    if output.table.infeasible_everywhere() {
        eprintln!("no feasible policy at any grid point");
        return ExitCode::from(EXIT_INFEASIBLE);
    }
    ExitCode::SUCCESS
}
