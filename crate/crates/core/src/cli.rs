//! Command-line front end: `solve`, `generate`, `sweep` and
//! `lowrank-experiment`.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 I/O error,
//! 3 solver did not converge, 4 numerical failure.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::SolverConfig;
use crate::diagnostics::{damping_experiment_on, DampingSettings};
use crate::error::{Error, Result};
use crate::fem::{assemble_hex_cube, Face, Material, MaterialField};
use crate::io::{count_data_lines, read_coordinates, read_matrix_market, write_coordinates, write_matrix_market};
use crate::report::{metrics_table, solve_problem, sweep_csv, RunMetrics};
use crate::sparse::SparseMatrix;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "aspamg", version, about = "Adaptive AMG preconditioned CG for SPD systems")]
struct Cli {
    /// Worker threads for the parallel kernels (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the preconditioner and solve A x = b with PCG.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Print the JSON report instead of the table.
        #[arg(long)]
        json: bool,
        /// Write the solution vector here, one value per line.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Write a generated elasticity problem as Matrix Market plus coordinates.
    Generate {
        #[arg(long, value_enum, default_value = "cube")]
        kind: Shape,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Output directory; receives matrix.mtx and coords.xyz.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Solve repeatedly while one configuration key takes each listed value.
    Sweep {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Write the rows as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare the cycle with and without a low-rank damping update of the
    /// finest smoother.
    LowrankExperiment {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 5.0)]
        alpha: f64,
        #[arg(long, default_value_t = 2000)]
        max_it: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Shape {
    Cube,
    Beam,
}

#[derive(Args, Debug, Clone)]
struct MeshArgs {
    /// Elements along x.
    #[arg(long, default_value_t = 4)]
    nx: usize,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    nz: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    young: f64,
    #[arg(long, default_value_t = 0.3)]
    poisson: f64,
    /// Young's modulus ratio of the half x > L/2 to the rest.
    #[arg(long)]
    stiff_ratio: Option<f64>,
    /// Leave the body unconstrained (singular stiffness).
    #[arg(long)]
    free: bool,
}

#[derive(Args, Debug, Clone)]
struct ProblemArgs {
    /// Matrix Market file to solve.
    #[arg(long, conflicts_with = "generate")]
    matrix: Option<PathBuf>,
    /// Node coordinates matching --matrix, three unknowns per node.
    #[arg(long, requires = "matrix")]
    coords: Option<PathBuf>,
    /// Generate the problem instead of reading it.
    #[arg(long, value_enum)]
    generate: Option<Shape>,
    #[command(flatten)]
    mesh: MeshArgs,
}

#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self, extra: &[String]) -> Result<SolverConfig> {
        let mut overrides = self.set.clone();
        overrides.extend_from_slice(extra);
        match &self.config {
            Some(p) => SolverConfig::load(p, &overrides),
            None => SolverConfig::parse_with_overrides("", &overrides),
        }
    }
}

struct Problem {
    name: String,
    a: SparseMatrix,
    coords: Option<Vec<[f64; 3]>>,
}

fn generate(shape: Shape, m: &MeshArgs) -> Result<(crate::fem::GeneratedProblem, String)> {
    let (nx, ny, nz) = match shape {
        Shape::Cube => (m.nx, m.ny.unwrap_or(m.nx), m.nz.unwrap_or(m.nx)),
        Shape::Beam => {
            let side = (m.nx / 4).max(1);
            (m.nx, m.ny.unwrap_or(side), m.nz.unwrap_or(side))
        }
    };
    let base = Material::new(m.young, m.poisson)?;
    let field = match m.stiff_ratio {
        Some(r) => MaterialField::SplitX {
            left: base,
            right: Material::new(m.young * r, m.poisson)?,
        },
        None => MaterialField::Uniform(base),
    };
    let clamp = (!m.free).then_some(Face::XMin);
    let p = assemble_hex_cube(nx, ny, nz, 1.0, &field, clamp)?;
    let kind = match shape {
        Shape::Cube => "cube",
        Shape::Beam => "beam",
    };
    Ok((p, format!("{kind} {nx}x{ny}x{nz}")))
}

fn load_problem(args: &ProblemArgs) -> Result<Problem> {
    if let Some(path) = &args.matrix {
        let a = read_matrix_market(path)?;
        let coords = match &args.coords {
            Some(c) => {
                let n_nodes = count_data_lines(c)?;
                if 3 * n_nodes != a.n_rows() {
                    return Err(Error::Config(format!(
                        "{} holds {n_nodes} nodes but the matrix has {} rows",
                        c.display(),
                        a.n_rows()
                    )));
                }
                Some(read_coordinates(c, n_nodes)?)
            }
            None => None,
        };
        return Ok(Problem {
            name: path.display().to_string(),
            a,
            coords,
        });
    }
    let Some(shape) = args.generate else {
        return Err(Error::Config("give either --matrix or --generate".into()));
    };
    let (p, name) = generate(shape, &args.mesh)?;
    Ok(Problem {
        name,
        coords: Some(p.free_coordinates()),
        a: p.stiffness,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Maps a library error to the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::InvalidMaterial(_) => EXIT_CONFIG,
        Error::Io { .. }
        | Error::MatrixMarket { .. }
        | Error::Coordinates { .. }
        | Error::Serialize(_) => EXIT_IO,
        _ => EXIT_NUMERICAL,
    }
}

fn execute(command: Command) -> Result<(String, i32)> {
    match command {
        Command::Solve {
            problem,
            config,
            report,
            json,
            solution,
        } => {
            let cfg = config.load(&[])?;
            let p = load_problem(&problem)?;
            let b = vec![1.0; p.a.n_rows()];
            let (x, summary) = solve_problem(&p.name, &p.a, p.coords.as_deref(), &b, &cfg)?;
            let text = summary.to_json()?;
            if let Some(path) = report {
                write_text(&path, &text)?;
            }
            if let Some(path) = solution {
                let body: String = x.iter().map(|v| format!("{v:e}\n")).collect();
                write_text(&path, &body)?;
            }
            let out = if json { text + "\n" } else { summary.table() };
            let code = if summary.converged { EXIT_OK } else { EXIT_NOT_CONVERGED };
            Ok((out, code))
        }
        Command::Generate { kind, mesh, out_dir } => {
            let (p, name) = generate(kind, &mesh)?;
            fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
            let mtx = out_dir.join("matrix.mtx");
            let xyz = out_dir.join("coords.xyz");
            write_matrix_market(&mtx, &p.stiffness)?;
            write_coordinates(&xyz, &p.free_coordinates())?;
            Ok((
                format!(
                    "{name}: {} rows, {} nonzeros -> {}, {}\n",
                    p.stiffness.n_rows(),
                    p.stiffness.nnz(),
                    mtx.display(),
                    xyz.display()
                ),
                EXIT_OK,
            ))
        }
        Command::Sweep {
            problem,
            config,
            param,
            values,
            csv,
        } => {
            let p = load_problem(&problem)?;
            let b = vec![1.0; p.a.n_rows()];
            let mut rows: Vec<(String, RunMetrics)> = Vec::new();
            let mut all_converged = true;
            for v in &values {
                let cfg = config.load(&[format!("{param}={v}")])?;
                let (_, s) = solve_problem(&p.name, &p.a, p.coords.as_deref(), &b, &cfg)?;
                all_converged &= s.converged;
                rows.push((v.clone(), s.metrics));
            }
            if let Some(path) = csv {
                write_text(&path, &sweep_csv(&param, &rows)?)?;
            }
            let code = if all_converged { EXIT_OK } else { EXIT_NOT_CONVERGED };
            Ok((format!("{}\n{}", p.name, metrics_table(&param, &rows)), code))
        }
        Command::LowrankExperiment {
            problem,
            config,
            k,
            alpha,
            max_it,
            report,
        } => {
            let cfg = config.load(&[])?;
            let p = load_problem(&problem)?;
            let settings = DampingSettings {
                k,
                alpha,
                rel_tol: cfg.rel_tol,
                max_it,
                seed: cfg.seed,
                ..DampingSettings::default()
            };
            let r = damping_experiment_on(&p.a, p.coords.as_deref(), &cfg.hierarchy(), &settings)?;
            let text = serde_json::to_string_pretty(&r).map_err(|e| Error::Serialize(e.to_string()))?;
            if let Some(path) = report {
                write_text(&path, &text)?;
            }
            let code = if r.baseline_converged && r.updated_converged {
                EXIT_OK
            } else {
                EXIT_NOT_CONVERGED
            };
            Ok((text + "\n", code))
        }
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// text meant for stdout, the text meant for stderr and the exit code.
pub fn run_captured<I, T>(args: I) -> (String, String, i32)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => (text, String::new(), EXIT_OK),
                _ => (String::new(), text, EXIT_CONFIG),
            };
        }
    };
    let outcome = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(cli.command)),
            Err(e) => Err(Error::Config(format!("cannot start {n} threads: {e}"))),
        },
        None => execute(cli.command),
    };
    match outcome {
        Ok((out, code)) => (out, String::new(), code),
        Err(e) => (String::new(), format!("error: {e}\n"), exit_code(&e)),
    }
}

/// Runs the command line and prints its output; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let (out, err, code) = run_captured(args);
    print!("{out}");
    eprint!("{err}");
    code
}
