//! Bearing-error sensitivity: perturbed Laplacian blocks built from measured
//! bearings, the total error `eps`, perturbation-norm and stability checks,
//! the closed-form error bound, and the perturbed solve.

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::geometry::{self, angle_unchecked, unit_projector, GeometryError};
use crate::linalg;
use crate::localizability::{check_algebraic, default_loc_tolerance};
use crate::network::{measured_network, NetworkSpec, ValidationErrors};
use crate::rigidity::{BearingLaplacian, RigidityError};
use crate::solver::{FlowModel, NeighborTerm};

#[derive(Debug, thiserror::Error)]
pub enum SensitivityError {
    #[error(transparent)]
    Invalid(#[from] ValidationErrors),
    #[error(transparent)]
    Rigidity(#[from] RigidityError),
    #[error("no directed edge {tail} -> {head} with a follower tail")]
    UnknownEdge { tail: String, head: String },
    #[error("angle {angle} for edge {tail} -> {head} is outside [0, pi]")]
    InvalidAngle { tail: String, head: String, angle: f64 },
    #[error("perturbed block is singular (sigma_min = {sigma_min:e})")]
    SingularPerturbedSystem { sigma_min: f64 },
}

/// `|P_x - P_y|` in the spectral norm.
pub fn projector_distance(x: &DVector<f64>, y: &DVector<f64>) -> Result<f64, GeometryError> {
    Ok(linalg::spectral_norm(
        &(geometry::projector(x)? - geometry::projector(y)?),
    ))
}

/// Error angle for one directed edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeAngle {
    pub tail: String,
    pub head: String,
    pub angle: f64,
}

/// How measured bearings deviate from the true ones. Every variant rotates
/// each follower-tail bearing within a seeded random plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ErrorSpec {
    /// Listed edges get the given angle, unlisted ones are exact.
    PerEdge { angles: Vec<EdgeAngle>, seed: u64 },
    /// Same angle on every directed follower-tail edge.
    Uniform { angle: f64, seed: u64 },
    /// Angle `u * max_angle` with `u` uniform on `[0, 1)`, per edge.
    Random { max_angle: f64, seed: u64 },
}

impl ErrorSpec {
    pub fn seed(&self) -> u64 {
        match *self {
            ErrorSpec::PerEdge { seed, .. } | ErrorSpec::Uniform { seed, .. } | ErrorSpec::Random { seed, .. } => seed,
        }
    }

    pub fn exact() -> Self {
        ErrorSpec::Uniform { angle: 0.0, seed: 0 }
    }
}

/// True and measured bearing of a directed edge from a follower.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedMeasurement {
    pub tail: usize,
    pub head: usize,
    pub truth: DVector<f64>,
    pub measured: DVector<f64>,
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationScenario {
    dimension: usize,
    n_anchors: usize,
    n_followers: usize,
    measurements: Vec<DirectedMeasurement>,
    epsilon: f64,
    block_ff: DMatrix<f64>,
    block_fa: DMatrix<f64>,
    delta_ff: DMatrix<f64>,
    delta_fa: DMatrix<f64>,
    seed: u64,
}

/// Builds a scenario from a network file's contents.
pub fn build_scenario(spec: &NetworkSpec, error: &ErrorSpec) -> Result<PerturbationScenario, SensitivityError> {
    let b = BearingLaplacian::from_measurements(&measured_network(spec)?)?;
    PerturbationScenario::new(&b, error)
}

impl PerturbationScenario {
    /// Draws measured bearings for every directed edge `(i, j)` with `i` a
    /// follower, independently for `(i, j)` and `(j, i)`, and assembles the
    /// follower rows of the perturbed Laplacian.
    pub fn new(b: &BearingLaplacian, error: &ErrorSpec) -> Result<Self, SensitivityError> {
        let d = b.dimension();
        let na = b.n_anchors();
        let nf = b.n_followers();
        let index = b.index();

        let mut directed: Vec<(usize, usize, DVector<f64>)> = Vec::new();
        for e in b.edges() {
            if e.tail >= na {
                directed.push((e.tail, e.head, e.direction.clone()));
            }
            if e.head >= na {
                directed.push((e.head, e.tail, -&e.direction));
            }
        }
        directed.sort_by_key(|&(i, j, _)| (i, j));

        let mut listed = std::collections::HashMap::new();
        if let ErrorSpec::PerEdge { angles, .. } = error {
            for a in angles {
                let key = (index.index_of(&a.tail), index.index_of(&a.head));
                let found = match key {
                    (Some(i), Some(j)) => directed.iter().any(|&(t, h, _)| t == i && h == j).then_some((i, j)),
                    _ => None,
                };
                let Some(key) = found else {
                    return Err(SensitivityError::UnknownEdge {
                        tail: a.tail.clone(),
                        head: a.head.clone(),
                    });
                };
                if !(0.0..=std::f64::consts::PI).contains(&a.angle) {
                    return Err(SensitivityError::InvalidAngle {
                        tail: a.tail.clone(),
                        head: a.head.clone(),
                        angle: a.angle,
                    });
                }
                listed.insert(key, a.angle);
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(error.seed());
        let mut measurements = Vec::with_capacity(directed.len());
        for (i, j, g) in directed {
            let angle = match error {
                ErrorSpec::PerEdge { .. } => listed.get(&(i, j)).copied().unwrap_or(0.0),
                ErrorSpec::Uniform { angle, .. } => *angle,
                ErrorSpec::Random { max_angle, .. } => rng.random::<f64>() * max_angle,
            };
            let measured = geometry::perturb_bearing_with(&g, angle, &mut rng);
            let angle = angle_unchecked(&g, &measured);
            measurements.push(DirectedMeasurement {
                tail: i,
                head: j,
                truth: g,
                measured,
                angle,
            });
        }

        let mut block_ff = DMatrix::zeros(d * nf, d * nf);
        let mut block_fa = DMatrix::zeros(d * nf, d * na);
        for m in &measurements {
            let p = unit_projector(&m.measured);
            let r = (m.tail - na) * d;
            let mut diag = block_ff.view_mut((r, r), (d, d));
            diag += &p;
            if m.head >= na {
                let mut off = block_ff.view_mut((r, (m.head - na) * d), (d, d));
                off -= &p;
            } else {
                let mut off = block_fa.view_mut((r, m.head * d), (d, d));
                off -= &p;
            }
        }
        let epsilon = 2.0 * measurements.iter().map(|m| m.angle.sin()).sum::<f64>();
        let delta_ff = &block_ff - b.block_ff();
        let delta_fa = &block_fa - b.block_fa();
        Ok(Self {
            dimension: d,
            n_anchors: na,
            n_followers: nf,
            measurements,
            epsilon,
            block_ff,
            block_fa,
            delta_ff,
            delta_fa,
            seed: error.seed(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn measurements(&self) -> &[DirectedMeasurement] {
        &self.measurements
    }

    /// `2 * sum over follower-tail edges of sin(theta)`.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn block_ff(&self) -> &DMatrix<f64> {
        &self.block_ff
    }

    pub fn block_fa(&self) -> &DMatrix<f64> {
        &self.block_fa
    }

    pub fn delta_ff(&self) -> &DMatrix<f64> {
        &self.delta_ff
    }

    pub fn delta_fa(&self) -> &DMatrix<f64> {
        &self.delta_fa
    }

    pub fn delta_norms(&self) -> DeltaNorms {
        let ff = linalg::spectral_norm(&self.delta_ff);
        let fa = linalg::spectral_norm(&self.delta_fa);
        DeltaNorms {
            delta_ff: ff,
            delta_fa: fa,
            ff_within_bound: ff <= self.epsilon,
            fa_within_bound: fa <= self.epsilon / 2.0,
        }
    }

    /// Eigenvalues of the (generally nonsymmetric) perturbed follower block.
    pub fn eigenvalues(&self) -> Vec<Complex<f64>> {
        if self.block_ff.nrows() == 0 {
            return Vec::new();
        }
        self.block_ff.complex_eigenvalues().iter().copied().collect()
    }

    /// The perturbed flow `x' = -(B~_ff x + B~_fa p_a)`.
    pub fn flow_model(&self, anchors: &DVector<f64>) -> FlowModel {
        let na = self.n_anchors;
        let mut neighbors = vec![Vec::new(); self.n_followers];
        for m in &self.measurements {
            neighbors[m.tail - na].push(NeighborTerm {
                node: m.head,
                projector: unit_projector(&m.measured),
            });
        }
        FlowModel::from_parts(
            self.dimension,
            self.block_ff.clone(),
            self.block_fa.clone(),
            anchors.clone(),
            neighbors,
            false,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaNorms {
    pub delta_ff: f64,
    pub delta_fa: f64,
    pub ff_within_bound: bool,
    pub fa_within_bound: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityCheck {
    /// `eps < lambda_min(B_ff)`.
    pub sufficient_condition_met: bool,
    /// Every eigenvalue of `B~_ff` has real part above the tolerance.
    pub actually_stable: bool,
    /// `lambda_min(B_ff) - eps`.
    pub margin: f64,
    pub lambda_min: f64,
    pub min_real_part: f64,
    pub tolerance: f64,
}

pub fn stability_check(scenario: &PerturbationScenario, b: &BearingLaplacian) -> StabilityCheck {
    let alg = check_algebraic(b, None);
    let tolerance = default_loc_tolerance(b.block_ff().nrows(), alg.lambda_max);
    let min_real_part = scenario
        .eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::INFINITY, f64::min);
    StabilityCheck {
        sufficient_condition_met: scenario.epsilon < alg.lambda_min,
        actually_stable: min_real_part > tolerance,
        margin: alg.lambda_min - scenario.epsilon,
        lambda_min: alg.lambda_min,
        min_real_part,
        tolerance,
    }
}

/// Upper bound on the final localization error, when it applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorBound {
    Value(f64),
    Inapplicable,
}

impl ErrorBound {
    pub fn value(self) -> Option<f64> {
        match self {
            ErrorBound::Value(v) => Some(v),
            ErrorBound::Inapplicable => None,
        }
    }
}

impl Serialize for ErrorBound {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ErrorBound::Value(v) => s.serialize_f64(*v),
            ErrorBound::Inapplicable => s.serialize_str("inapplicable"),
        }
    }
}

/// `eps / (lambda_min - eps) * (|p_a| / 2 + |p_f|)` when `eps < lambda_min`.
pub fn error_bound(
    scenario: &PerturbationScenario,
    b: &BearingLaplacian,
    anchors: &DVector<f64>,
    followers: &DVector<f64>,
) -> ErrorBound {
    let lambda_min = check_algebraic(b, None).lambda_min;
    let eps = scenario.epsilon;
    if eps < lambda_min {
        ErrorBound::Value(eps / (lambda_min - eps) * (0.5 * anchors.norm() + followers.norm()))
    } else {
        ErrorBound::Inapplicable
    }
}

/// `-B~_ff^{-1} B~_fa p_a` by LU factorization.
pub fn perturbed_solve(
    scenario: &PerturbationScenario,
    anchors: &DVector<f64>,
) -> Result<DVector<f64>, SensitivityError> {
    let k = &scenario.block_ff;
    let s = linalg::singular_values(k);
    let sigma_max = s.first().copied().unwrap_or(0.0);
    let sigma_min = s.last().copied().unwrap_or(0.0);
    if sigma_min.is_nan() || sigma_min <= k.nrows() as f64 * f64::EPSILON * sigma_max {
        return Err(SensitivityError::SingularPerturbedSystem { sigma_min });
    }
    let rhs = -(&scenario.block_fa * anchors);
    k.clone()
        .lu()
        .solve(&rhs)
        .ok_or(SensitivityError::SingularPerturbedSystem { sigma_min })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeError {
    pub tail: String,
    pub head: String,
    pub angle: f64,
    pub measured: Vec<f64>,
}

/// Everything a perturbation experiment reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub seed: u64,
    pub epsilon: f64,
    pub lambda_min: f64,
    pub margin: f64,
    pub delta_norms: DeltaNorms,
    pub stability: StabilityCheck,
    pub bound: ErrorBound,
    /// `None` when the perturbed block is singular.
    pub estimate: Option<Vec<f64>>,
    /// `None` without ground truth or estimate.
    pub realized_error: Option<f64>,
    pub bound_holds: Option<bool>,
    pub edges: Vec<EdgeError>,
}

/// Evaluates every check of a scenario; `truth` holds the stacked follower
/// positions when known.
pub fn evaluate(
    scenario: &PerturbationScenario,
    b: &BearingLaplacian,
    anchors: &DVector<f64>,
    truth: Option<&DVector<f64>>,
) -> SensitivityReport {
    let stability = stability_check(scenario, b);
    let estimate = perturbed_solve(scenario, anchors).ok();
    let bound = match truth {
        Some(t) => error_bound(scenario, b, anchors, t),
        None => ErrorBound::Inapplicable,
    };
    let realized_error = match (truth, &estimate) {
        (Some(t), Some(x)) => Some((x - t).norm()),
        _ => None,
    };
    let bound_holds = match (bound, realized_error) {
        (ErrorBound::Value(v), Some(r)) => Some(r <= v),
        _ => None,
    };
    let index = b.index();
    SensitivityReport {
        seed: scenario.seed,
        epsilon: scenario.epsilon,
        lambda_min: stability.lambda_min,
        margin: stability.margin,
        delta_norms: scenario.delta_norms(),
        stability,
        bound,
        estimate: estimate.map(|x| x.iter().copied().collect()),
        realized_error,
        bound_holds,
        edges: scenario
            .measurements
            .iter()
            .map(|m| EdgeError {
                tail: index.id(m.tail).to_string(),
                head: index.id(m.head).to_string(),
                angle: m.angle,
                measured: m.measured.iter().copied().collect(),
            })
            .collect(),
    }
}
