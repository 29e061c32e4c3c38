use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cellgan::Error;

mod commands;

/// Spatially distributed coevolutionary GAN training and its experiments.
#[derive(Debug, Parser)]
#[command(name = "cellgan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one grid with the configured method and backend.
    Run(ConfigArgs),
    /// Success heatmap over initial generator means.
    HeatmapMode(ConfigArgs),
    /// Success heatmap over initial discriminator intervals.
    HeatmapDisc(ConfigArgs),
    /// Every method x grid size x seed on the ring dataset.
    Ablate(ConfigArgs),
    /// Graymap images and text tables from heatmap or ablation JSON files.
    Render(RenderArgs),
    /// Check interaction counters of every configured method against their
    /// closed forms.
    Audit(ConfigArgs),
}

#[derive(Debug, clap::Args)]
struct ConfigArgs {
    /// TOML experiment configuration.
    config: PathBuf,
    /// Overrides `experiment.output_dir`.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct RenderArgs {
    /// JSON files written by `heatmap-mode`, `heatmap-disc` or `ablate`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Directory for the rendered files; defaults to each input's directory.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Pixel size of one heatmap cell; defaults to the input's `render.cell_px`.
    #[arg(long)]
    cell_px: Option<usize>,
}

fn dispatch(cli: Cli) -> cellgan::Result<()> {
    match cli.command {
        Command::Run(a) => commands::run(&commands::load(&a.config, a.out)?),
        Command::HeatmapMode(a) => commands::heatmap_mode(&commands::load(&a.config, a.out)?),
        Command::HeatmapDisc(a) => commands::heatmap_disc(&commands::load(&a.config, a.out)?),
        Command::Ablate(a) => commands::ablate(&commands::load(&a.config, a.out)?),
        Command::Render(a) => a
            .inputs
            .iter()
            .try_for_each(|p| commands::render(p, a.out.as_deref(), a.cell_px)),
        Command::Audit(a) => commands::audit(&commands::load(&a.config, a.out)?),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Error::exit_code(&e) as u8)
        }
    }
}
