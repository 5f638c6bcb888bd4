use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nfhcb::container::StoredCodebook;
use nfhcb::sim::{
    experiment_hierarchy, experiment_lower, run_gain_experiment, run_search_experiment, ExperimentReport, GridSize,
    SimConfig,
};
use nfhcb::{CornerModel, PatternKind};

#[derive(Parser)]
#[command(
    name = "nfhcb",
    version,
    about = "Near-field hierarchical codebooks: build, export, simulate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the lower codebook and store it.
    BuildLower {
        #[command(flatten)]
        sim: SimArgs,
        /// Codebook file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a full hierarchy on top of the lower codebook and store it.
    BuildHierarchy {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, value_enum, default_value_t = Pattern::Deact)]
        pattern: Pattern,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exhaustive-selection gain of the proposed and baseline codebooks.
    GainExp {
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Hierarchical search against the exhaustive oracle.
    SearchExp {
        #[command(flatten)]
        sim: SimArgs,
        /// Only this pattern; all three when omitted.
        #[arg(long, value_enum)]
        pattern: Option<Pattern>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write a stored codebook as CSV or JSON.
    ExportCodebook {
        /// Codebook file from build-lower or build-hierarchy.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
struct SimArgs {
    /// JSON simulation config; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of users.
    #[arg(long)]
    nu: Option<usize>,
    /// Largest user range in metres.
    #[arg(long)]
    rmax: Option<f64>,
    /// Lower-codebook threshold.
    #[arg(long)]
    rho: Option<f64>,
    /// Fixed lower grid as ANGLESxRINGS, e.g. 512x5.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<GridSize>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pattern {
    Deact,
    Bmwss,
    Quadric,
}

impl From<Pattern> for PatternKind {
    fn from(p: Pattern) -> Self {
        match p {
            Pattern::Deact => PatternKind::Deact,
            Pattern::Bmwss => PatternKind::BmwSs,
            Pattern::Quadric => PatternKind::Quadric,
        }
    }
}

fn parse_grid(s: &str) -> Result<GridSize, String> {
    let (a, r) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ANGLESxRINGS, got '{s}'"))?;
    let n_angles = a.trim().parse().map_err(|e| format!("bad angle count '{a}': {e}"))?;
    let n_rings = r.trim().parse().map_err(|e| format!("bad ring count '{r}': {e}"))?;
    Ok(GridSize { n_angles, n_rings })
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

impl SimArgs {
    fn resolve(&self) -> CliResult<SimConfig> {
        let mut sim = match &self.config {
            Some(path) => SimConfig::load(path)?,
            None => SimConfig::default(),
        };
        if let Some(seed) = self.seed {
            sim.seed = seed;
        }
        if let Some(nu) = self.nu {
            sim.n_users = nu;
        }
        if let Some(r) = self.rmax {
            sim.users.r_max = Some(r);
        }
        if let Some(rho) = self.rho {
            sim.rho = rho;
        }
        if self.grid.is_some() {
            sim.lower_grid = self.grid;
        }
        sim.threads = self.threads;
        sim.validate()?;
        Ok(sim)
    }
}

fn write_text(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit(report: &ExperimentReport, output: &OutputArgs) -> CliResult<()> {
    let text = match output.format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    };
    write_text(output.out.as_deref(), &text)
}

fn store(book: &StoredCodebook, out: &Path) -> CliResult<()> {
    book.save(out)?;
    eprintln!("wrote {} ({})", out.display(), book.content_hash());
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::BuildLower { sim, out } => {
            let sim = sim.resolve()?;
            let lower = experiment_lower(&sim)?;
            eprintln!(
                "lower codebook: {} angles x {} rings, worst corner gain {:.4}",
                lower.n_angles(),
                lower.n_rings(),
                lower.worst_corner_gain(CornerModel::Fresnel)
            );
            store(&StoredCodebook::Lower(lower), &out)
        }
        Command::BuildHierarchy { sim, pattern, out } => {
            let sim = sim.resolve()?;
            let lower = experiment_lower(&sim)?;
            let hier = experiment_hierarchy(&sim, &lower, pattern.into())?;
            eprintln!(
                "{} hierarchy: rings per level {:?}",
                hier.config().pattern,
                hier.ring_counts()
            );
            store(&StoredCodebook::Hierarchy(hier), &out)
        }
        Command::GainExp { sim, output } => emit(&run_gain_experiment(&sim.resolve()?)?, &output),
        Command::SearchExp { sim, pattern, output } => {
            let mut sim = sim.resolve()?;
            if let Some(p) = pattern {
                sim.patterns = Some(vec![p.into()]);
            }
            emit(&run_search_experiment(&sim)?, &output)
        }
        Command::ExportCodebook { input, output } => {
            let book = StoredCodebook::load(&input)?;
            let text = match output.format {
                Format::Csv => book.to_csv(),
                Format::Json => book.to_json(),
            };
            write_text(output.out.as_deref(), &text)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nfhcb: error: {e}");
            ExitCode::FAILURE
        }
    }
}
