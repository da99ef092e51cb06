use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use flexeig::io::Strictness;
use flexeig::Error;

mod commands;
mod summary;

#[derive(Parser)]
#[command(
    name = "flexeig",
    version,
    about = "Stiffness-eigenvalue assessment of flexure hinges and compliant mechanisms"
)]
struct Cli {
    /// Report unknown input fields as warnings instead of rejecting the file.
    #[arg(long, global = true)]
    lenient: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CompletionArg {
    Zero,
    MinEnergy,
}

#[derive(Subcommand)]
enum Command {
    /// Natural kinematics, selectivity and accuracy of a model.
    Analyze {
        model: PathBuf,
        /// Reference motion: `rotation:x,y,z:ax,ay,az` or `translation:dx,dy,dz`.
        /// Repeat for a multi-vector reference.
        #[arg(long = "reference")]
        references: Vec<String>,
        /// Pseudo-mobility (defaults to the number of references, or 1).
        #[arg(long)]
        p: Option<usize>,
        #[arg(long, value_enum, default_value = "min-energy")]
        completion: CompletionArg,
        /// Nodal load `NODE:fx,fy,fz,mx,my,mz` for the dominance share. Repeatable.
        #[arg(long = "load")]
        loads: Vec<String>,
        /// Number of eigenvalues listed in the report.
        #[arg(long, default_value_t = flexeig::metrics::DEFAULT_EIGEN_COUNT)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalues and selectivity over a range of notch web thicknesses.
    Sweep {
        model: PathBuf,
        /// Swept parameter; only the web thickness `l` is supported.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// CSV for a `.csv` extension, JSON otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalues and nodal mode shapes for external plotting.
    Modes {
        model: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assessment of an externally supplied stiffness matrix.
    Import {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        dofmap: PathBuf,
        /// Characteristic length (mm) weighting rotational DOFs.
        #[arg(long)]
        lc: Option<f64>,
        #[arg(long)]
        reference_file: Option<PathBuf>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long, default_value_t = flexeig::metrics::DEFAULT_EIGEN_COUNT)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo check that no sampled Rayleigh quotient undercuts λ1.
    Certify {
        model: PathBuf,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes the analysis-space matrix, DOF map, explicit model and reference
    /// of a model, for use with `import`.
    Export {
        model: PathBuf,
        #[arg(long = "model-out")]
        model_out: Option<PathBuf>,
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        dofmap: Option<PathBuf>,
        #[arg(long = "reference")]
        references: Vec<String>,
        #[arg(long, value_enum, default_value = "min-energy")]
        completion: CompletionArg,
        #[arg(long)]
        reference_out: Option<PathBuf>,
    },
}

impl From<CompletionArg> for flexeig::fem::Completion {
    fn from(c: CompletionArg) -> Self {
        match c {
            CompletionArg::Zero => flexeig::fem::Completion::ZeroFill,
            CompletionArg::MinEnergy => flexeig::fem::Completion::MinEnergy,
        }
    }
}

/// Failure with its exit status: 2 for inputs, 3 for numerics.
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_numerical() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

/// Labels an error with the file it came from, unless it already names one.
pub fn in_file(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| {
        let named = matches!(e, Error::Io { .. } | Error::Parse { .. } | Error::Schema { .. });
        let mut f = Failure::from(e);
        if !named {
            f.message = format!("{}: {}", path.display(), f.message);
        }
        f
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let strictness = if cli.lenient {
        Strictness::Lenient
    } else {
        Strictness::Strict
    };
    let result = match cli.command {
        Command::Analyze {
            model,
            references,
            p,
            completion,
            loads,
            count,
            out,
        } => commands::analyze(
            &model,
            &references,
            p,
            completion.into(),
            &loads,
            count,
            out.as_deref(),
            strictness,
        ),
        Command::Sweep {
            model,
            param,
            values,
            out,
        } => commands::sweep(&model, &param, &values, out.as_deref(), strictness),
        Command::Modes { model, count, out } => commands::modes(&model, count, &out, strictness),
        Command::Import {
            matrix,
            dofmap,
            lc,
            reference_file,
            p,
            count,
            out,
        } => commands::import(
            &matrix,
            &dofmap,
            lc,
            reference_file.as_deref(),
            p,
            count,
            out.as_deref(),
            strictness,
        ),
        Command::Certify {
            model,
            samples,
            seed,
            out,
        } => commands::certify(&model, samples, seed, out.as_deref(), strictness),
        Command::Export {
            model,
            model_out,
            matrix,
            dofmap,
            references,
            completion,
            reference_out,
        } => commands::export(
            &model,
            model_out.as_deref(),
            matrix.as_deref(),
            dofmap.as_deref(),
            &references,
            completion.into(),
            reference_out.as_deref(),
            strictness,
        ),
    };
    match result {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
