use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use orbitflag_cli::commands::OmegaFlags;
use orbitflag_cli::spec::{self, Overrides};
use orbitflag_cli::{cmd_flags, cmd_omega, cmd_simulate, cmd_slc, cmd_validate, CliError, OutputFormat};

#[derive(Parser)]
#[command(name = "orbitflag", version, about = "Spectral/flag analysis of Lindblad systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// System and run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Output formats (repeatable). Defaults depend on the command.
    #[arg(long, global = true, value_enum)]
    format: Vec<Format>,
    /// Overrides [rng].seed and [plan].seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides [run].resolution.
    #[arg(long, global = true)]
    resolution: Option<usize>,
    /// Worker threads for grid classification (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the invariant battery on the system.
    Validate,
    /// Transfer rates, rate matrices and projected fields per flag.
    Omega {
        #[arg(long, value_enum, default_value = "iota")]
        flags: FlagChoice,
    },
    /// SLC region, boundary candidates and (n = 3) an SVG overlay.
    Slc,
    /// Planned trajectory, reconstruction round trip or book-end transport.
    Simulate,
    /// Print the iota flag set.
    Flags,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlagChoice {
    Iota,
    Identity,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    }
    let path = cli.config.ok_or_else(|| CliError::Validation("--config is required".into()))?;
    let loaded = spec::load_spec_with(&path, &Overrides { seed: cli.seed, resolution: cli.resolution })?;
    let formats: Vec<OutputFormat> = cli
        .format
        .iter()
        .map(|f| match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
            Format::Svg => OutputFormat::Svg,
        })
        .collect();
    match cli.command {
        Command::Validate => {
            let checks = cmd_validate(&loaded)?;
            for c in &checks {
                println!("{c}");
            }
            if let Some(bad) = checks.iter().find(|c| !c.pass) {
                return Err(CliError::Validation(format!("invariant failed: {}", bad.name)));
            }
        }
        Command::Omega { flags } => {
            let source = match flags {
                FlagChoice::Iota => OmegaFlags::Iota,
                FlagChoice::Identity => OmegaFlags::Identity,
            };
            let format = formats.first().copied().unwrap_or(OutputFormat::Csv);
            for p in cmd_omega(&loaded, source, &cli.out_dir, format)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Slc => {
            let formats = if formats.is_empty() {
                let mut f = vec![OutputFormat::Csv];
                if loaded.system.dim() == 3 {
                    f.push(OutputFormat::Svg);
                }
                f
            } else {
                formats
            };
            let s = cmd_slc(&loaded, &cli.out_dir, &formats)?;
            println!(
                "interior {} boundary {} exterior {}; {} candidates (max residual {:e}); {} duplicate fields",
                s.interior, s.boundary, s.exterior, s.candidates, s.max_residual, s.duplicates
            );
            for p in s.files {
                println!("wrote {}", p.display());
            }
        }
        Command::Simulate => {
            let s = cmd_simulate(&loaded, &cli.out_dir)?;
            println!("{}", serde_json::to_string_pretty(&s.report).expect("json"));
            for p in s.files {
                println!("wrote {}", p.display());
            }
        }
        Command::Flags => {
            let dir = if cli.format.is_empty() { None } else { Some(cli.out_dir.as_path()) };
            print!("{}", cmd_flags(&loaded, dir)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
