//! Batch front end: reads a run config, executes one subcommand and writes
//! JSON or CSV artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod table1;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

pub use commands::Output;
pub use config::RunConfig;
pub use error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Null, secular modes, Mathieu parameters and depth.
    Analyze,
    /// Isolines of the total energy in the x-z plane.
    Contour,
    /// Accessible solid angle and per-ray hit map.
    SolidAngle,
    /// Parabolic mirror interception, dipole collection and cavity figures.
    Mirror,
    /// Stray-field compensation and micromotion scans.
    Compensate,
    /// Force, electric and magnetic field sensitivity budget.
    Sense,
    /// Sweep a grounded plane towards the ion.
    Proximity,
    /// Run the three reference traps against their tabulated data.
    Table1,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Contour => "contour",
            Command::SolidAngle => "solid-angle",
            Command::Mirror => "mirror",
            Command::Compensate => "compensate",
            Command::Sense => "sense",
            Command::Proximity => "proximity",
            Command::Table1 => "table1",
        }
    }

    fn default_format(self) -> Format {
        match self {
            Command::Contour | Command::Proximity => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "stylus", version, about = "Surface-probe ion trap modelling")]
pub struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Number of rays for solid-angle estimates.
    #[arg(long, global = true)]
    pub rays: Option<u64>,
    /// Ray-casting seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Boundary mesh refinement level.
    #[arg(long, global = true)]
    pub resolution: Option<u32>,
    /// Artifact format; contour and proximity default to csv.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    /// Load the config and apply command-line overrides.
    pub fn resolve_config(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(d) = &self.out {
            cfg.output.dir = d.clone();
        }
        if let Some(r) = self.rays {
            cfg.raycast.rays = r;
        }
        if let Some(s) = self.seed {
            cfg.raycast.seed = s;
        }
        if let Some(l) = self.resolution {
            cfg.solver.resolution = l;
        }
        cfg.resolved()
    }
}

pub fn execute(command: Command, cfg: &RunConfig) -> CliResult<Output> {
    match command {
        Command::Analyze => commands::analyze_cmd(cfg),
        Command::Contour => commands::contour_cmd(cfg),
        Command::SolidAngle => commands::solid_angle_cmd(cfg),
        Command::Mirror => commands::mirror_cmd(cfg),
        Command::Compensate => commands::compensate_cmd(cfg),
        Command::Sense => commands::sense_cmd(cfg),
        Command::Proximity => commands::proximity_cmd(cfg),
        Command::Table1 => commands::table1_cmd(cfg),
    }
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Write the artifacts of `out` and return their paths. JSON reports embed
/// the resolved config; CSV output gets a `<stem>.config.json` sidecar.
pub fn write_artifacts(command: Command, format: Format, cfg: &RunConfig, out: &Output) -> CliResult<Vec<PathBuf>> {
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
    let mut written = Vec::new();
    match format {
        Format::Json => {
            let p = dir.join(format!("{}.json", command.name()));
            write(&p, &(serde_json::to_string_pretty(&out.json).expect("report serializes") + "\n"))?;
            written.push(p);
        }
        Format::Csv => {
            for (stem, body) in &out.csv {
                let p = dir.join(format!("{stem}.csv"));
                write(&p, body)?;
                written.push(p);
            }
            let p = dir.join(format!("{}.config.json", command.name()));
            write(&p, &(cfg.to_json() + "\n"))?;
            written.push(p);
        }
    }
    Ok(written)
}

/// Full command-line run; returns the text summary.
pub fn run(cli: &Cli) -> CliResult<String> {
    let cfg = cli.resolve_config()?;
    let out = execute(cli.command, &cfg)?;
    let format = cli.format.unwrap_or(cli.command.default_format());
    let written = write_artifacts(cli.command, format, &cfg, &out)?;
    let mut s = out.summary;
    for p in written {
        s.push_str(&format!("wrote {}\n", p.display()));
    }
    Ok(s)
}
