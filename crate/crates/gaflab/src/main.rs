use clap::{Args, Parser, Subcommand};
use gaflab::config::{parse_config, ExperimentConfig, ExperimentKind};
use gaflab::experiment::{run_experiment, ExperimentError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Numerical laboratory for gradient activation functions.
#[derive(Parser)]
#[command(name = "gaflab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides config and GAFLAB_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override; replaces the config seed list.
    #[arg(long)]
    seed: Option<u64>,
    /// Concurrency limit (experiments here run sequentially).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Suppress the report echo on stdout.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check the definition conditions of an activation on a grid.
    Validate(Common),
    /// Race an activation arm against an identity baseline.
    Race(Common),
    /// Measure saddle-escape displacement.
    Saddle(Common),
    /// Estimate tight Lipschitz/convexity constants and their ratio.
    Curvature(Common),
    /// Export the equivalent loss surface of a transformed field.
    Surface(Common),
    /// Compare an optimality-gap bound against a gradient-descent run.
    Bound(Common),
    /// Train the toy classifier with and without an activation.
    Train(Common),
    /// Record gradient statistics and suggest activation parameters.
    Suggest(Common),
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::Validate(_) => ExperimentKind::Validate,
            Command::Race(_) => ExperimentKind::Race,
            Command::Saddle(_) => ExperimentKind::Saddle,
            Command::Curvature(_) => ExperimentKind::Curvature,
            Command::Surface(_) => ExperimentKind::Surface,
            Command::Bound(_) => ExperimentKind::Bound,
            Command::Train(_) => ExperimentKind::Train,
            Command::Suggest(_) => ExperimentKind::Suggest,
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Validate(c)
            | Command::Race(c)
            | Command::Saddle(c)
            | Command::Curvature(c)
            | Command::Surface(c)
            | Command::Bound(c)
            | Command::Train(c)
            | Command::Suggest(c) => c,
        }
    }
}

/// Fallback configuration when no file is given: a small demonstration
/// setup per subcommand.
fn default_config(kind: ExperimentKind) -> ExperimentConfig {
    let text = match kind {
        ExperimentKind::Validate => {
            "kind = \"validate\"\n[transform]\nvariant = \"gaf\"\nkind = \"arctan\"\nalpha = 0.1\nbeta = 20.0\n"
        }
        ExperimentKind::Race => {
            "kind = \"race\"\n[problem]\nname = \"paper_quadratic\"\n[optimizer]\nkind = \"gd\"\neta = 0.1\n[transform]\nvariant = \"gaf\"\nkind = \"arctan\"\nalpha = 0.1\nbeta = 20.0\n[run]\nw0 = [0.05, 0.05]\ntarget_loss = 1e-8\n"
        }
        ExperimentKind::Saddle => {
            "kind = \"saddle\"\n[optimizer]\nkind = \"gd\"\neta = 0.01\n[transform]\nvariant = \"gaf\"\nkind = \"arctan\"\nalpha = 0.1\nbeta = 20.0\n"
        }
        ExperimentKind::Curvature => {
            "kind = \"curvature\"\n[problem]\nname = \"quartic_well\"\n[transform]\nvariant = \"gaf\"\nkind = \"arctan\"\nalpha = 0.1\nbeta = 20.0\n[region]\nbounds = [[-1.5, 1.5]]\npoints_per_dim = 301\nepsilon0 = 0.05\nepsilon2 = 0.5\n"
        }
        ExperimentKind::Surface => {
            "kind = \"surface\"\n[problem]\nname = \"paper_quadratic\"\n[transform]\nvariant = \"gaf\"\nkind = \"arctan\"\nalpha = 0.1\nbeta = 20.0\n[region]\nbounds = [[-1.0, 1.0], [-1.0, 1.0]]\npoints_per_dim = 21\n[run]\noffset = 1.0\n"
        }
        ExperimentKind::Bound => {
            "kind = \"bound\"\n[problem]\nname = \"paper_quadratic\"\n[region]\nbounds = [[-1.0, 1.0], [-1.0, 1.0]]\npoints_per_dim = 21\n[run]\nw0 = [1.0, 1.0]\nk_max = 200\n"
        }
        ExperimentKind::Train => {
            "kind = \"train\"\nseeds = [0, 1, 2, 3, 4]\n[problem]\nname = \"mlp\"\n[optimizer]\nkind = \"sgdm\"\neta = 0.5\nmomentum = 0.9\nbatch_size = 8\n[transform]\nvariant = \"gaf\"\nkind = \"arctan\"\nalpha = 0.1\nbeta = 20.0\n[run]\nmax_iters = 400\n"
        }
        ExperimentKind::Suggest => {
            "kind = \"suggest\"\n[problem]\nname = \"quartic_well\"\n[run]\nw0 = [1.0]\n"
        }
    };
    parse_config(text).expect("built-in defaults are valid")
}

fn resolve_out(common: &Common, cfg: &ExperimentConfig, kind: ExperimentKind) -> PathBuf {
    if let Some(out) = &common.out {
        return out.clone();
    }
    if let Some(out) = &cfg.out {
        return out.clone();
    }
    let root = std::env::var_os("GAFLAB_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("gaflab_out"));
    root.join(kind.as_str())
}

fn execute(cli: Cli) -> Result<bool, ExperimentError> {
    let kind = cli.command.kind();
    let common = cli.command.common();
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
                path: path.clone(),
                source,
            })?;
            parse_config(&text)?
        }
        None => default_config(kind),
    };
    // flag beats file
    cfg.kind = kind;
    if let Some(seed) = common.seed {
        cfg.seeds = vec![seed];
    }
    let out = resolve_out(common, &cfg, kind);
    let outcome = run_experiment(&cfg, &out)?;
    if !common.quiet {
        print!("{}", outcome.report);
        println!("artifacts in {}", out.display());
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
