//! `bearloc`: command-line front end for localizability checks, direct and
//! distributed localization, and bearing-error sensitivity experiments.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use bearloc::io::{self, IoError};
use bearloc::linalg::{self, RankTolerance};
use bearloc::localizability::check_algebraic;
use bearloc::nalgebra::{DMatrix, DVector};
use bearloc::sensitivity::{evaluate, ErrorSpec, PerturbationScenario, SensitivityReport};
use bearloc::solver::{default_initial_estimate, simulate_model, FlowModel, Termination};
use bearloc::{
    bearing_laplacian, classify, is_ibr, measured_network, rigidity_matrix, solve_direct, validate, BearingLaplacian,
    FlowConfig, LocalizabilityError, MeasuredNetwork, NetworkSpec, StepSize, Tolerances, Verdict,
};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

const EXIT_OK: u8 = 0;
const EXIT_INPUT: u8 = 1;
const EXIT_INTERNAL: u8 = 2;
const EXIT_NOT_LOCALIZABLE: u8 = 3;
const EXIT_NEAR_SINGULAR: u8 = 4;
const EXIT_STEP_LIMIT: u8 = 5;

#[derive(Parser)]
#[command(name = "bearloc", version, about = "Bearing-based sensor network localization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the followers are uniquely localizable.
    Check(CheckArgs),
    /// Recover follower positions by a direct linear solve.
    Solve(CommonArgs),
    /// Run the distributed gradient flow and record its trajectory.
    Simulate(SimulateArgs),
    /// Evaluate bearing-error scenarios against the perturbation bounds.
    Perturb(PerturbArgs),
    /// Dump the spectra of the bearing Laplacian and rigidity matrix.
    Rigidity(CheckArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Network JSON file.
    #[arg(long)]
    input: PathBuf,
    /// Directory for output files; created if missing.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Absolute rank threshold (default: order * eps * largest eigenvalue).
    #[arg(long)]
    tol_rank: Option<f64>,
    /// Absolute threshold on lambda_min(B_ff).
    #[arg(long)]
    tol_loc: Option<f64>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Write the assembled matrices as CSV into the output directory.
    #[arg(long)]
    emit_matrices: bool,
}

#[derive(Args)]
struct ErrorArgs {
    /// Draw each bearing error angle uniformly from [0, max_angle] radians.
    /// `perturb` accepts a comma-separated list, one scenario per value.
    #[arg(long, value_delimiter = ',')]
    max_angle: Vec<f64>,
    /// CSV with header `tail,head,angle` giving per-edge error angles.
    #[arg(long, conflicts_with = "max_angle")]
    angles_file: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Euler step size (default: 1 / spectral bound of the follower block).
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    max_steps: usize,
    /// Stop when the velocity's infinity norm drops below this.
    #[arg(long, default_value_t = 1e-10)]
    conv_tol: f64,
    /// Record every n-th step in the trajectory.
    #[arg(long, default_value_t = 1)]
    record_every: usize,
    #[command(flatten)]
    errors: ErrorArgs,
}

#[derive(Args)]
struct PerturbArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    errors: ErrorArgs,
}

#[derive(Debug)]
enum Failure {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Input(e.into())
    }
}

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Input(e.into())
}

fn internal<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Internal(e.into())
}

#[derive(Serialize)]
struct RequestedTolerances {
    rank: Option<f64>,
    loc: Option<f64>,
    convergence: Option<f64>,
}

/// Common wrapper of every JSON output.
#[derive(Serialize)]
struct Output<'a, T: Serialize> {
    command: &'a str,
    input: String,
    input_sha256: String,
    seed: u64,
    tolerances: RequestedTolerances,
    result: T,
}

struct Loaded {
    spec: NetworkSpec,
    digest: String,
}

impl CommonArgs {
    fn load(&self) -> Result<Loaded, Failure> {
        let bytes = fs::read(&self.input)
            .with_context(|| format!("reading {}", self.input.display()))
            .map_err(Failure::Input)?;
        let text = String::from_utf8(bytes.clone()).map_err(input)?;
        Ok(Loaded {
            spec: io::parse_network(&text)?,
            digest: hex::encode(Sha256::digest(&bytes)),
        })
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances {
            rank: self.tol_rank.map_or(RankTolerance::Auto, RankTolerance::Absolute),
            loc: self.tol_loc,
        }
    }

    fn emit<T: Serialize>(
        &self,
        command: &str,
        loaded: &Loaded,
        convergence: Option<f64>,
        result: T,
    ) -> Result<(), Failure> {
        let out = Output {
            command,
            input: self.input.display().to_string(),
            input_sha256: loaded.digest.clone(),
            seed: self.seed,
            tolerances: RequestedTolerances {
                rank: self.tol_rank,
                loc: self.tol_loc,
                convergence,
            },
            result,
        };
        let text = serde_json::to_string_pretty(&out).map_err(internal)?;
        // A closed stdout (e.g. piped into `head`) is not an error.
        let _ = writeln!(std::io::stdout().lock(), "{text}");
        if let Some(dir) = self.out_dir()? {
            fs::write(dir.join(format!("{command}.json")), text + "\n").map_err(input)?;
        }
        Ok(())
    }

    fn out_dir(&self) -> Result<Option<&Path>, Failure> {
        match &self.out {
            Some(dir) => {
                fs::create_dir_all(dir)
                    .with_context(|| format!("creating {}", dir.display()))
                    .map_err(Failure::Input)?;
                Ok(Some(dir))
            }
            None => Ok(None),
        }
    }

    fn write_matrix(&self, name: &str, m: &DMatrix<f64>) -> Result<(), Failure> {
        let dir = self
            .out_dir()?
            .ok_or_else(|| Failure::Input(anyhow!("--emit-matrices requires --out")))?;
        let file = fs::File::create(dir.join(name)).map_err(input)?;
        io::write_matrix_csv(file, m)?;
        Ok(())
    }
}

fn measured(spec: &NetworkSpec) -> Result<(MeasuredNetwork, BearingLaplacian), Failure> {
    let m = measured_network(spec).map_err(input)?;
    let b = BearingLaplacian::from_measurements(&m).map_err(internal)?;
    Ok((m, b))
}

fn by_id(ids: &[String], d: usize, x: &DVector<f64>) -> Vec<NodeValue> {
    ids.iter()
        .enumerate()
        .map(|(k, id)| NodeValue {
            id: id.clone(),
            value: x.rows(k * d, d).iter().copied().collect(),
        })
        .collect()
}

#[derive(Serialize)]
struct NodeValue {
    id: String,
    value: Vec<f64>,
}

fn cmd_check(args: &CheckArgs) -> Result<u8, Failure> {
    let c = &args.common;
    let loaded = c.load()?;
    let net = validate(&loaded.spec).map_err(input)?;
    let report = match classify(&net, c.tolerances()) {
        Ok(r) => r,
        Err(e @ LocalizabilityError::TooFewAnchors { .. }) => return Err(input(e)),
        Err(e) => return Err(internal(e)),
    };
    if args.emit_matrices {
        let b = bearing_laplacian(&net).map_err(internal)?;
        c.write_matrix("B.csv", b.matrix())?;
        c.write_matrix("B_ff.csv", &b.block_ff())?;
        c.write_matrix("B_fa.csv", &b.block_fa())?;
    }
    let code = match report.verdict {
        Verdict::Localizable => EXIT_OK,
        Verdict::NotLocalizable => EXIT_NOT_LOCALIZABLE,
        Verdict::NearSingular => EXIT_NEAR_SINGULAR,
    };
    #[derive(Serialize)]
    struct CheckResult<'a> {
        node_order: &'a [String],
        #[serde(flatten)]
        report: bearloc::LocalizabilityReport,
    }
    c.emit(
        "check",
        &loaded,
        None,
        CheckResult {
            node_order: net.index().ids(),
            report,
        },
    )?;
    Ok(code)
}

#[derive(Serialize)]
struct EdgeResidual {
    tail: String,
    head: String,
    residual: f64,
}

fn cmd_solve(c: &CommonArgs) -> Result<u8, Failure> {
    let loaded = c.load()?;
    let (m, b) = measured(&loaded.spec)?;
    let alg = check_algebraic(&b, c.tol_loc);

    #[derive(Serialize)]
    struct SolveResult {
        localizable: bool,
        lambda_min_bff: f64,
        lambda_max_bff: f64,
        loc_tolerance: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        condition_estimate: Option<f64>,
        ill_conditioned: bool,
        positions: Vec<NodeValue>,
        residuals: Vec<EdgeResidual>,
        max_residual: Option<f64>,
        error_norm: Option<f64>,
    }
    let mut result = SolveResult {
        localizable: alg.localizable,
        lambda_min_bff: alg.lambda_min,
        lambda_max_bff: alg.lambda_max,
        loc_tolerance: alg.tolerance,
        condition_estimate: None,
        ill_conditioned: false,
        positions: Vec::new(),
        residuals: Vec::new(),
        max_residual: None,
        error_norm: None,
    };
    let solution = if alg.localizable {
        solve_direct(&b, &m.anchor_positions).ok()
    } else {
        None
    };
    let Some(sol) = solution else {
        result.localizable = false;
        c.emit("solve", &loaded, None, result)?;
        return Ok(EXIT_NOT_LOCALIZABLE);
    };
    if sol.ill_conditioned {
        eprintln!(
            "warning: B_ff is ill-conditioned (estimate {:e})",
            sol.condition_estimate
        );
    }
    let d = m.dimension;
    let mut all = m.anchor_positions.as_slice().to_vec();
    all.extend(sol.followers.iter());
    let stacked = DVector::from_vec(all);
    let residuals = b.edge_residuals(&stacked);
    result.condition_estimate = Some(sol.condition_estimate);
    result.ill_conditioned = sol.ill_conditioned;
    result.positions = by_id(m.index.ids(), d, &stacked);
    result.max_residual = Some(residuals.iter().copied().fold(0.0, f64::max));
    result.residuals = b
        .edges()
        .iter()
        .zip(residuals)
        .map(|(e, r)| EdgeResidual {
            tail: m.index.id(e.tail).to_string(),
            head: m.index.id(e.head).to_string(),
            residual: r,
        })
        .collect();
    result.error_norm = m.follower_truth.as_ref().map(|t| (&sol.followers - t).norm());
    c.emit("solve", &loaded, None, result)?;
    Ok(EXIT_OK)
}

impl ErrorArgs {
    /// Error specs to evaluate; empty when no perturbation was requested.
    fn specs(&self, seed: u64) -> Result<Vec<(Option<f64>, ErrorSpec)>, Failure> {
        if let Some(path) = &self.angles_file {
            let file = fs::File::open(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(Failure::Input)?;
            let angles = io::read_angles(file)?;
            return Ok(vec![(None, ErrorSpec::PerEdge { angles, seed })]);
        }
        self.max_angle
            .iter()
            .map(|&max_angle| {
                if !(0.0..=std::f64::consts::PI).contains(&max_angle) {
                    return Err(Failure::Input(anyhow!("--max-angle {max_angle} outside [0, pi]")));
                }
                Ok((Some(max_angle), ErrorSpec::Random { max_angle, seed }))
            })
            .collect()
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<u8, Failure> {
    let c = &args.common;
    let loaded = c.load()?;
    let (m, b) = measured(&loaded.spec)?;
    let pa = &m.anchor_positions;
    let specs = args.errors.specs(c.seed)?;
    if specs.len() > 1 {
        return Err(Failure::Input(anyhow!("simulate takes a single --max-angle")));
    }
    let scenario = match specs.first() {
        Some((_, spec)) => Some(PerturbationScenario::new(&b, spec).map_err(input)?),
        None => None,
    };
    let model = match &scenario {
        Some(s) => s.flow_model(pa),
        None => FlowModel::from_laplacian(&b, pa),
    };
    let config = FlowConfig {
        step_size: args.step.map_or(StepSize::Auto, StepSize::Fixed),
        max_steps: args.max_steps,
        convergence_tol: args.conv_tol,
        record_every: args.record_every,
        ..Default::default()
    };
    let x0 = default_initial_estimate(m.dimension, pa, m.n_followers(), c.seed);
    let traj = simulate_model(&model, &x0, &config, m.follower_truth.as_ref()).map_err(input)?;
    if let Some(dir) = c.out_dir()? {
        let file = fs::File::create(dir.join("trajectory.csv")).map_err(input)?;
        io::write_trajectory_csv(file, &traj, m.index.follower_ids(), m.dimension)?;
    }

    #[derive(Serialize)]
    struct SimulateResult {
        converged: bool,
        termination: Termination,
        steps: usize,
        step_size: f64,
        records: usize,
        final_velocity_inf_norm: f64,
        final_error: Option<f64>,
        final_estimate: Vec<NodeValue>,
        perturbed: bool,
        epsilon: Option<f64>,
    }
    let last = traj.final_record();
    let result = SimulateResult {
        converged: traj.converged(),
        termination: traj.termination,
        steps: traj.steps,
        step_size: traj.step_size,
        records: traj.records.len(),
        final_velocity_inf_norm: last.velocity_inf_norm,
        final_error: last.error_norm,
        final_estimate: by_id(m.index.follower_ids(), m.dimension, &last.estimate),
        perturbed: scenario.is_some(),
        epsilon: scenario.as_ref().map(|s| s.epsilon()),
    };
    c.emit("simulate", &loaded, Some(args.conv_tol), result)?;
    Ok(if traj.converged() { EXIT_OK } else { EXIT_STEP_LIMIT })
}

fn cmd_perturb(args: &PerturbArgs) -> Result<u8, Failure> {
    let c = &args.common;
    let loaded = c.load()?;
    let (m, b) = measured(&loaded.spec)?;
    let specs = args.errors.specs(c.seed)?;
    if specs.is_empty() {
        return Err(Failure::Input(anyhow!("perturb needs --max-angle or --angles-file")));
    }
    let alg = check_algebraic(&b, c.tol_loc);

    #[derive(Serialize)]
    struct Row {
        max_angle: Option<f64>,
        #[serde(flatten)]
        report: SensitivityReport,
    }
    #[derive(Serialize)]
    struct PerturbResult {
        localizable: bool,
        lambda_min_bff: f64,
        rows: Vec<Row>,
    }
    let mut result = PerturbResult {
        localizable: alg.localizable,
        lambda_min_bff: alg.lambda_min,
        rows: Vec::new(),
    };
    if !alg.localizable {
        c.emit("perturb", &loaded, None, result)?;
        return Ok(EXIT_NOT_LOCALIZABLE);
    }
    for (max_angle, spec) in specs {
        let scenario = PerturbationScenario::new(&b, &spec).map_err(input)?;
        let report = evaluate(&scenario, &b, &m.anchor_positions, m.follower_truth.as_ref());
        result.rows.push(Row { max_angle, report });
    }
    c.emit("perturb", &loaded, None, result)?;
    Ok(EXIT_OK)
}

fn cmd_rigidity(args: &CheckArgs) -> Result<u8, Failure> {
    let c = &args.common;
    let loaded = c.load()?;
    let net = validate(&loaded.spec).map_err(input)?;
    let policy = c.tolerances().rank;
    let b = bearing_laplacian(&net).map_err(internal)?;
    let summary = b.spectral_summary(policy).map_err(internal)?;
    let r = rigidity_matrix(&net).map_err(internal)?;
    let (rank_r, tol_r) = linalg::numeric_rank(&r.matrix, policy);
    let evidence = is_ibr(&net, policy).map_err(internal)?;
    if args.emit_matrices {
        c.write_matrix("B.csv", b.matrix())?;
        c.write_matrix("R_B.csv", &r.matrix)?;
    }

    #[derive(Serialize)]
    struct Laplacian {
        order: usize,
        eigenvalues: Vec<f64>,
        rank: usize,
        nullity: usize,
        tolerance: f64,
        /// Columns of an orthonormal null-space basis.
        null_basis: Vec<Vec<f64>>,
    }
    #[derive(Serialize)]
    struct Rigidity {
        rows: usize,
        cols: usize,
        singular_values: Vec<f64>,
        rank: usize,
        tolerance: f64,
    }
    #[derive(Serialize)]
    struct RigidityResult<'a> {
        node_order: &'a [String],
        laplacian: Laplacian,
        rigidity_matrix: Rigidity,
        ibr: bearloc::rigidity::IbrEvidence,
    }
    let result = RigidityResult {
        node_order: net.index().ids(),
        laplacian: Laplacian {
            order: summary.order(),
            rank: summary.rank,
            nullity: summary.nullity(),
            tolerance: summary.tolerance,
            null_basis: summary
                .null_basis
                .column_iter()
                .map(|col| col.iter().copied().collect())
                .collect(),
            eigenvalues: summary.eigenvalues,
        },
        rigidity_matrix: Rigidity {
            rows: r.matrix.nrows(),
            cols: r.matrix.ncols(),
            singular_values: linalg::singular_values(&r.matrix),
            rank: rank_r,
            tolerance: tol_r,
        },
        ibr: evidence,
    };
    c.emit("rigidity", &loaded, None, result)?;
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Perturb(a) => cmd_perturb(a),
        Command::Rigidity(a) => cmd_rigidity(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
