mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sitewave::scene::{FoliageModel, Lod, CONCRETE, MEDIUM_DRY_EARTH};

use crate::commands::SceneBuildArgs;
use crate::error::{CliError, Failure, Kind};

#[derive(Parser, Debug)]
#[command(name = "sitewave", version, about = "Site-specific outdoor radio coverage prediction")]
struct Cli {
    /// Worker threads (default: all available cores).
    #[arg(long, global = true, env = "SITEWAVE_THREADS")]
    threads: Option<usize>,
    /// Seed for stochastic features. Ray launching is deterministic, so the
    /// current pipeline does not consume it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scene construction from map data.
    Scene {
        #[command(subcommand)]
        command: SceneCommand,
    },
    /// Evaluate the route and/or grid of one scenario.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Compare the route RSS of several scenarios.
    Compare {
        /// Scenario files (at least two), all with routes of equal length.
        #[arg(long = "config", required = true, num_args = 1..)]
        configs: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum SceneCommand {
    /// Extrude OSM buildings onto optional terrain and save the scene JSON.
    Build {
        #[arg(long)]
        osm: PathBuf,
        /// Esri ASCII elevation grid.
        #[arg(long)]
        terrain: Option<PathBuf>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        lod: u8,
        #[arg(long, default_value = CONCRETE)]
        building_material: String,
        #[arg(long, default_value = MEDIUM_DRY_EARTH)]
        terrain_material: String,
        #[arg(long, value_enum, default_value_t = FoliageArg::Generic)]
        foliage_model: FoliageArg,
        /// Output scene file.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum FoliageArg {
    Generic,
    Weissberger,
}

impl From<FoliageArg> for FoliageModel {
    fn from(f: FoliageArg) -> Self {
        match f {
            FoliageArg::Generic => FoliageModel::Generic,
            FoliageArg::Weissberger => FoliageModel::Weissberger,
        }
    }
}

fn execute(cli: Cli) -> Result<String, Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("threads", "must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::new(Kind::Io, format!("thread pool: {e}")))?;
    }
    log::debug!("seed {}", cli.seed);
    match cli.command {
        Command::Scene {
            command:
                SceneCommand::Build {
                    osm,
                    terrain,
                    lod,
                    building_material,
                    terrain_material,
                    foliage_model,
                    out,
                },
        } => {
            for (key, name) in [("building-material", &building_material), ("terrain-material", &terrain_material)] {
                if sitewave::scene::builtin_material(name).is_none() {
                    return Err(CliError::new(Kind::Input, format!("unknown material {name:?}")).at(key).into());
                }
            }
            let options = sitewave::scene::BuildOptions {
                lod: Lod::from_level(lod).expect("clap range"),
                building_material,
                terrain_material,
                foliage_model: foliage_model.into(),
                origin: None,
            };
            commands::scene_build(&SceneBuildArgs {
                osm: &osm,
                terrain: terrain.as_deref(),
                options,
                out: &out,
            })
        }
        Command::Run { config, out_dir } => commands::run(&config, &out_dir),
        Command::Compare { configs, out_dir } => commands::compare(&configs, &out_dir),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let err = CliError::new(Kind::Input, e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(Kind::Input.exit_code() as u8);
        }
    };
    match execute(cli) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            for e in &failure.0 {
                eprintln!("{}", e.to_json());
            }
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
