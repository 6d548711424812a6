//! Follower position recovery: direct solve of `B_ff x = -B_fa p_a`, the
//! distributed gradient flow discretized with explicit Euler, and linear
//! propagation of anchor-position errors.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::unit_projector;
use crate::linalg;
use crate::localizability::check_algebraic;
use crate::network::diameter;
use crate::rigidity::BearingLaplacian;

/// Condition-number estimate above which a direct solve is flagged.
pub const ILL_CONDITIONED: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("B_ff is singular (lambda_min = {lambda_min:e}, tolerance {tolerance:e})")]
    SingularSystem { lambda_min: f64, tolerance: f64 },
    #[error("step size {step} times lambda_max {bound} is not below 2")]
    StepTooLarge { step: f64, bound: f64 },
    #[error("initial estimate has length {found}, expected {expected}")]
    BadInitialEstimate { expected: usize, found: usize },
    #[error("flow has no stable step size (spectral bound {bound})")]
    DegenerateFlow { bound: f64 },
}

/// Result of [`solve_direct`].
#[derive(Debug, Clone, PartialEq)]
pub struct DirectSolution {
    /// Stacked follower positions in internal order.
    pub followers: DVector<f64>,
    /// `|B_ff x + B_fa p_a|`.
    pub residual: f64,
    /// `lambda_max(B_ff) / lambda_min(B_ff)`.
    pub condition_estimate: f64,
    pub ill_conditioned: bool,
}

/// Solves `B_ff x = -B_fa p_a` by Cholesky factorization.
pub fn solve_direct(b: &BearingLaplacian, anchors: &DVector<f64>) -> Result<DirectSolution, SolverError> {
    let alg = check_algebraic(b, None);
    if !alg.localizable {
        return Err(SolverError::SingularSystem {
            lambda_min: alg.lambda_min,
            tolerance: alg.tolerance,
        });
    }
    let ff = b.block_ff();
    let rhs = -(b.block_fa() * anchors);
    let chol = ff.clone().cholesky().ok_or(SolverError::SingularSystem {
        lambda_min: alg.lambda_min,
        tolerance: alg.tolerance,
    })?;
    let x = chol.solve(&rhs);
    let residual = (&ff * &x - &rhs).norm();
    let condition_estimate = alg.lambda_max / alg.lambda_min;
    Ok(DirectSolution {
        followers: x,
        residual,
        condition_estimate,
        ill_conditioned: condition_estimate > ILL_CONDITIONED,
    })
}

/// `-B_ff^{-1} B_fa dp_a`: the follower error induced by anchor errors.
pub fn anchor_error_propagation(
    b: &BearingLaplacian,
    anchor_error: &DVector<f64>,
) -> Result<DVector<f64>, SolverError> {
    Ok(solve_direct(b, anchor_error)?.followers)
}

/// One neighbour term of a follower's update: the neighbour's internal index
/// and the projector weighting the relative estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTerm {
    pub node: usize,
    pub projector: DMatrix<f64>,
}

/// Linear flow `x' = -(K x + C p_a)` over stacked follower estimates, kept
/// both as assembled blocks and as per-follower neighbour lists.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowModel {
    dimension: usize,
    n_anchors: usize,
    block_ff: DMatrix<f64>,
    block_fa: DMatrix<f64>,
    anchors: DVector<f64>,
    /// Indexed by follower (0-based among followers).
    neighbors: Vec<Vec<NeighborTerm>>,
    symmetric: bool,
}

impl FlowModel {
    /// The accurate-bearing flow from the Laplacian's own bearings.
    pub fn from_laplacian(b: &BearingLaplacian, anchors: &DVector<f64>) -> Self {
        let na = b.n_anchors();
        let mut neighbors = vec![Vec::new(); b.n_followers()];
        for e in b.edges() {
            let p = unit_projector(&e.direction);
            if e.tail >= na {
                neighbors[e.tail - na].push(NeighborTerm {
                    node: e.head,
                    projector: p.clone(),
                });
            }
            if e.head >= na {
                neighbors[e.head - na].push(NeighborTerm {
                    node: e.tail,
                    projector: p,
                });
            }
        }
        Self {
            dimension: b.dimension(),
            n_anchors: na,
            block_ff: b.block_ff(),
            block_fa: b.block_fa(),
            anchors: anchors.clone(),
            neighbors,
            symmetric: true,
        }
    }

    /// A flow from explicitly supplied (possibly nonsymmetric) blocks and the
    /// matching per-follower neighbour terms.
    pub fn from_parts(
        dimension: usize,
        block_ff: DMatrix<f64>,
        block_fa: DMatrix<f64>,
        anchors: DVector<f64>,
        neighbors: Vec<Vec<NeighborTerm>>,
        symmetric: bool,
    ) -> Self {
        Self {
            dimension,
            n_anchors: anchors.len() / dimension,
            block_ff,
            block_fa,
            anchors,
            neighbors,
            symmetric,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn n_followers(&self) -> usize {
        self.neighbors.len()
    }

    pub fn block_ff(&self) -> &DMatrix<f64> {
        &self.block_ff
    }

    pub fn block_fa(&self) -> &DMatrix<f64> {
        &self.block_fa
    }

    pub fn anchors(&self) -> &DVector<f64> {
        &self.anchors
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `lambda_max(K)` for symmetric `K`, otherwise `sigma_max(K)`.
    pub fn spectral_bound(&self) -> f64 {
        if self.symmetric {
            linalg::symmetric_eigenvalues(&self.block_ff)
                .last()
                .copied()
                .unwrap_or(0.0)
        } else {
            linalg::spectral_norm(&self.block_ff)
        }
    }

    /// Velocity from the assembled blocks.
    pub fn velocity(&self, x: &DVector<f64>) -> DVector<f64> {
        -(&self.block_ff * x + &self.block_fa * &self.anchors)
    }

    /// Velocity computed follower by follower from neighbour estimates only:
    /// `v_i = -sum_j P_ij (x_i - x_j)`.
    pub fn velocity_edgewise(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = self.dimension;
        let na = self.n_anchors;
        let estimate = |node: usize| -> DVector<f64> {
            if node < na {
                self.anchors.rows(node * d, d).into_owned()
            } else {
                x.rows((node - na) * d, d).into_owned()
            }
        };
        let mut v = DVector::zeros(x.len());
        for (f, terms) in self.neighbors.iter().enumerate() {
            let xi = x.rows(f * d, d).into_owned();
            let mut vi = DVector::zeros(d);
            for t in terms {
                vi -= &t.projector * (&xi - estimate(t.node));
            }
            v.rows_mut(f * d, d).copy_from(&vi);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSize {
    /// `1 / spectral bound`.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateForm {
    Matrix,
    Edgewise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub step_size: StepSize,
    pub max_steps: usize,
    /// Threshold on the infinity norm of the velocity.
    pub convergence_tol: f64,
    pub record_every: usize,
    pub form: UpdateForm,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            step_size: StepSize::Auto,
            max_steps: 1_000_000,
            convergence_tol: 1e-10,
            record_every: 1,
            form: UpdateForm::Matrix,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub step: usize,
    pub time: f64,
    pub estimate: DVector<f64>,
    pub velocity_inf_norm: f64,
    pub error_norm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    StepLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrajectory {
    pub records: Vec<FlowRecord>,
    pub termination: Termination,
    pub step_size: f64,
    pub steps: usize,
}

impl FlowTrajectory {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn final_record(&self) -> &FlowRecord {
        self.records.last().expect("trajectory always has a record")
    }

    pub fn final_estimate(&self) -> &DVector<f64> {
        &self.final_record().estimate
    }
}

/// Default initial estimate: every follower at the anchors' centroid plus
/// uniform noise in `[-D, D]` per coordinate, `D` the anchors' diameter
/// (1 when fewer than two anchors).
pub fn default_initial_estimate(
    dimension: usize,
    anchors: &DVector<f64>,
    n_followers: usize,
    seed: u64,
) -> DVector<f64> {
    let d = dimension;
    let na = anchors.len() / d;
    let points: Vec<DVector<f64>> = (0..na).map(|i| anchors.rows(i * d, d).into_owned()).collect();
    let centroid = if na == 0 {
        DVector::zeros(d)
    } else {
        points.iter().fold(DVector::zeros(d), |a, p| a + p) / na as f64
    };
    let spread = match diameter(&points) {
        x if x > 0.0 => x,
        _ => 1.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DVector::from_iterator(
        d * n_followers,
        (0..d * n_followers).map(|k| centroid[k % d] + rng.random_range(-spread..=spread)),
    )
}

/// Simulates the accurate-bearing gradient flow of `b`.
pub fn simulate_flow(
    b: &BearingLaplacian,
    anchors: &DVector<f64>,
    initial: &DVector<f64>,
    config: &FlowConfig,
    truth: Option<&DVector<f64>>,
) -> Result<FlowTrajectory, SolverError> {
    simulate_model(&FlowModel::from_laplacian(b, anchors), initial, config, truth)
}

/// Explicit-Euler iteration `x <- x + h v(x)` until the velocity's infinity
/// norm drops below the tolerance or `max_steps` updates have been taken.
pub fn simulate_model(
    model: &FlowModel,
    initial: &DVector<f64>,
    config: &FlowConfig,
    truth: Option<&DVector<f64>>,
) -> Result<FlowTrajectory, SolverError> {
    let expected = model.dimension * model.n_followers();
    if initial.len() != expected {
        return Err(SolverError::BadInitialEstimate {
            expected,
            found: initial.len(),
        });
    }
    let bound = model.spectral_bound();
    let h = match config.step_size {
        StepSize::Auto => {
            if bound.is_nan() || bound <= 0.0 {
                return Err(SolverError::DegenerateFlow { bound });
            }
            1.0 / bound
        }
        StepSize::Fixed(h) => {
            if h.is_nan() || h <= 0.0 || h * bound >= 2.0 {
                return Err(SolverError::StepTooLarge { step: h, bound });
            }
            h
        }
    };
    let record_every = config.record_every.max(1);
    let velocity = |x: &DVector<f64>| match config.form {
        UpdateForm::Matrix => model.velocity(x),
        UpdateForm::Edgewise => model.velocity_edgewise(x),
    };
    let record = |step: usize, x: &DVector<f64>, v: &DVector<f64>| FlowRecord {
        step,
        time: step as f64 * h,
        estimate: x.clone(),
        velocity_inf_norm: v.amax(),
        error_norm: truth.map(|t| (x - t).norm()),
    };

    let mut x = initial.clone();
    let mut records = Vec::new();
    let mut step = 0;
    let termination = loop {
        let v = velocity(&x);
        let done = v.amax() < config.convergence_tol;
        if done || step >= config.max_steps || step % record_every == 0 {
            records.push(record(step, &x, &v));
        }
        if done {
            break Termination::Converged;
        }
        if step >= config.max_steps {
            break Termination::StepLimit;
        }
        x += v * h;
        step += 1;
    };
    Ok(FlowTrajectory {
        records,
        termination,
        step_size: h,
        steps: step,
    })
}
