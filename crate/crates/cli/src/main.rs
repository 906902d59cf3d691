use clap::{Parser, Subcommand};
use surfplan_cli::commands::{self, BenchmarkArgs, ManipMapArgs, PlanArgs, SynthArgs};

/// Surface-constrained, manipulability-aware path planning on point clouds.
#[derive(Parser)]
#[command(name = "surfplan", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a path between two markers on a cloud surface.
    Plan(PlanArgs),
    /// Run the paired-seed planning benchmark over a scene list.
    Benchmark(BenchmarkArgs),
    /// Per-point manipulability map of a cloud for a robot.
    ManipMap(ManipMapArgs),
    /// Generate a synthetic point-cloud scene.
    Synth(SynthArgs),
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan(args) => commands::cmd_plan(args),
        Command::Benchmark(args) => commands::cmd_benchmark(args),
        Command::ManipMap(args) => commands::cmd_manip_map(args),
        Command::Synth(args) => commands::cmd_synth(args),
    };
    match result {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            std::process::ExitCode::from(e.exit_code() as u8)
        }
    }
}
