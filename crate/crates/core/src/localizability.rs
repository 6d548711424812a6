//! Localizability classification.
//!
//! Two equivalent exact-arithmetic tests are run side by side: nonsingularity
//! of the follower block `B_ff`, and the absence of a nonzero bearing-preserving
//! motion that leaves every anchor fixed. Rigidity-based sufficient conditions
//! (rigidity of the network or of its anchor-augmented version) and the
//! anchor-count lower bound are evaluated as supporting evidence, and every
//! applicable condition is cross-checked.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, LinalgError, RankTolerance, SpectralSummary};
use crate::network::Network;
use crate::rigidity::{self, bearing_laplacian, BearingLaplacian, IbrEvidence, RigidityError};

/// Width of the near-singular guard band above the localizability tolerance.
pub const NEAR_SINGULAR_FACTOR: f64 = 1e3;

/// Smallest singular value of the anchor rows of the null basis below which
/// those rows are treated as rank deficient (`sqrt(2^-52)`).
pub const ANCHOR_BLOCK_TOLERANCE: f64 = 1.490_116_119_384_765_6e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LocalizabilityError {
    #[error("at least two anchors are required, found {n_anchors}")]
    TooFewAnchors { n_anchors: usize },
    #[error(transparent)]
    Rigidity(#[from] RigidityError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(
        "localizability conditions disagree outside the near-singular band \
         (algebraic {algebraic}, rigidity {rigidity}, augmented rigidity {augmented:?}, \
         lambda_min(B_ff) = {lambda_min:e})"
    )]
    InternalInconsistency {
        algebraic: bool,
        rigidity: bool,
        augmented: Option<bool>,
        lambda_min: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Localizable,
    NotLocalizable,
    NearSingular,
}

/// Numeric thresholds; `None` selects the scale-aware default.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Tolerances {
    pub rank: RankTolerance,
    pub loc: Option<f64>,
}

/// Default localizability tolerance `d n_f * 2^-52 * lambda_max(B_ff)`.
pub fn default_loc_tolerance(order: usize, lambda_max: f64) -> f64 {
    order as f64 * f64::EPSILON * lambda_max.max(0.0)
}

/// Result of the `B_ff` nonsingularity test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlgebraicCheck {
    pub localizable: bool,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub tolerance: f64,
}

pub fn check_algebraic(b: &BearingLaplacian, loc_tolerance: Option<f64>) -> AlgebraicCheck {
    let ff = b.block_ff();
    let eig = linalg::symmetric_eigenvalues(&ff);
    let lambda_min = eig.first().copied().unwrap_or(0.0);
    let lambda_max = eig.last().copied().unwrap_or(0.0);
    let tolerance = loc_tolerance.unwrap_or_else(|| default_loc_tolerance(ff.nrows(), lambda_max));
    AlgebraicCheck {
        localizable: lambda_min > tolerance,
        lambda_min,
        lambda_max,
        tolerance,
    }
}

/// Result of the anchor-involvement test on the null space of `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidityCheck {
    pub localizable: bool,
    /// Smallest singular value of the anchor rows `N_a` of the null basis.
    pub anchor_block_sigma_min: f64,
    /// Unit follower motion in `Null(B)` with zero anchor part.
    pub witness: Option<DVector<f64>>,
}

/// Localizable iff the anchor rows of the null basis have full column rank.
/// Otherwise a right null vector `x` of `N_a` yields the witness `N x`.
pub fn check_rigidity(b: &BearingLaplacian, summary: &SpectralSummary) -> RigidityCheck {
    let n = &summary.null_basis;
    let k = n.ncols();
    if k == 0 {
        return RigidityCheck {
            localizable: true,
            anchor_block_sigma_min: 1.0,
            witness: None,
        };
    }
    let rows_a = b.dimension() * b.n_anchors();
    // Zero-pad so the SVD exposes all k right singular vectors.
    let mut na = DMatrix::zeros(rows_a.max(k), k);
    na.view_mut((0, 0), (rows_a, k)).copy_from(&n.view((0, 0), (rows_a, k)));
    let svd = na.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (idx, sigma_min) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("k > 0");
    if sigma_min > ANCHOR_BLOCK_TOLERANCE {
        return RigidityCheck {
            localizable: true,
            anchor_block_sigma_min: sigma_min,
            witness: None,
        };
    }
    let x = v_t.row(idx).transpose();
    let mut motion = n * x;
    motion.rows_mut(0, rows_a).fill(0.0);
    let norm = motion.norm();
    motion /= norm;
    RigidityCheck {
        localizable: false,
        anchor_block_sigma_min: sigma_min,
        witness: Some(motion),
    }
}

/// Necessary anchor count `dim Null(B) / d`.
pub fn anchor_lower_bound(summary: &SpectralSummary, dimension: usize) -> f64 {
    summary.nullity() as f64 / dimension as f64
}

/// Rigidity of the anchor-augmented network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AugmentedCheck {
    pub ibr_augmented: bool,
    /// Whether the sufficient condition certifies localizability.
    pub sufficient_verdict: bool,
    /// With exactly two anchors the condition is also necessary.
    pub equivalence_applies: bool,
    pub evidence: IbrEvidence,
}

pub fn check_augmented_ibr(network: &Network, policy: RankTolerance) -> Result<AugmentedCheck, LocalizabilityError> {
    let n_anchors = network.n_anchors();
    if n_anchors < 2 {
        return Err(LocalizabilityError::TooFewAnchors { n_anchors });
    }
    let evidence = rigidity::is_ibr(&network.augment_anchors(), policy)?;
    Ok(AugmentedCheck {
        ibr_augmented: evidence.ibr,
        sufficient_verdict: evidence.ibr,
        equivalence_applies: n_anchors == 2,
        evidence,
    })
}

/// Displacement of one follower in a witness motion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeDisplacement {
    pub id: String,
    pub displacement: Vec<f64>,
}

/// Thresholds actually applied, for reproducibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AppliedTolerances {
    pub rank_laplacian: f64,
    pub rank_rigidity_matrix: f64,
    pub loc: f64,
    pub near_singular_upper: f64,
    pub anchor_block: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizabilityReport {
    pub verdict: Verdict,
    pub dimension: usize,
    pub n_nodes: usize,
    pub n_anchors: usize,
    pub lambda_min_bff: f64,
    pub lambda_max_bff: f64,
    pub rank_b: usize,
    pub rank_rigidity_matrix: usize,
    pub nullity_b: usize,
    pub required_ibr_rank: usize,
    pub anchor_lower_bound: f64,
    pub anchor_bound_satisfied: bool,
    pub ibr_g: bool,
    pub ibr_augmented: bool,
    pub augmented_equivalence_applies: bool,
    pub algebraic_localizable: bool,
    pub rigidity_localizable: bool,
    pub anchor_block_sigma_min: f64,
    pub condition_agreement: bool,
    pub tolerances: AppliedTolerances,
    pub reasons: Vec<String>,
    /// Follower-only bearing-preserving motion, keyed by follower id.
    pub witness: Option<Vec<NodeDisplacement>>,
    /// The same witness stacked in internal order (anchors first, zero).
    #[serde(skip)]
    pub witness_vector: Option<DVector<f64>>,
}

/// Runs every applicable localizability condition and cross-checks them.
pub fn classify(network: &Network, tol: Tolerances) -> Result<LocalizabilityReport, LocalizabilityError> {
    let b = bearing_laplacian(network)?;
    classify_with(network, &b, tol)
}

/// [`classify`] with a prebuilt Laplacian of `network`.
pub fn classify_with(
    network: &Network,
    b: &BearingLaplacian,
    tol: Tolerances,
) -> Result<LocalizabilityReport, LocalizabilityError> {
    let d = network.dimension();
    let n_anchors = network.n_anchors();
    let summary = b.spectral_summary(tol.rank)?;
    let r = rigidity::rigidity_matrix(network)?;
    let (rank_rb, rank_rb_tol) = linalg::numeric_rank(&r.matrix, tol.rank);
    let ibr_g = rigidity::ibr_from_ranks(network, summary.rank, rank_rb)?;
    let ibr_aug = if n_anchors >= 2 {
        rigidity::is_ibr(&network.augment_anchors(), tol.rank)?
    } else {
        // No anchor pairs to add: the augmented network is the network itself.
        ibr_g
    };

    let alg = check_algebraic(b, tol.loc);
    let rig = check_rigidity(b, &summary);
    let lower = anchor_lower_bound(&summary, d);
    let near_upper = NEAR_SINGULAR_FACTOR * alg.tolerance;

    let verdict = if !alg.localizable {
        Verdict::NotLocalizable
    } else if alg.lambda_min <= near_upper {
        Verdict::NearSingular
    } else {
        Verdict::Localizable
    };

    let equivalence_applies = n_anchors == 2;
    let condition_agreement =
        alg.localizable == rig.localizable && (!equivalence_applies || alg.localizable == ibr_aug.ibr);
    if !condition_agreement && verdict != Verdict::NearSingular {
        return Err(LocalizabilityError::InternalInconsistency {
            algebraic: alg.localizable,
            rigidity: rig.localizable,
            augmented: equivalence_applies.then_some(ibr_aug.ibr),
            lambda_min: alg.lambda_min,
        });
    }

    let mut reasons = Vec::new();
    if n_anchors < 2 {
        reasons.push(format!(
            "only {n_anchors} anchor(s): every localizable network needs at least two"
        ));
    }
    if (n_anchors as f64) < lower {
        reasons.push(format!(
            "anchor count {n_anchors} below the null-space bound dim Null(B)/d = {lower}"
        ));
    }
    match verdict {
        Verdict::NotLocalizable => {
            reasons.push("B_ff is singular: some bearing-preserving motion moves only followers".to_string())
        }
        Verdict::NearSingular => reasons.push(format!(
            "lambda_min(B_ff) = {:e} lies within {NEAR_SINGULAR_FACTOR:e} of the tolerance {:e}",
            alg.lambda_min, alg.tolerance
        )),
        Verdict::Localizable => reasons.push("B_ff is nonsingular".to_string()),
    }
    if ibr_g.ibr && n_anchors >= 2 {
        reasons.push("network is infinitesimally bearing rigid with at least two anchors".into());
    } else if ibr_aug.ibr && n_anchors >= 2 {
        reasons.push("anchor-augmented network is infinitesimally bearing rigid".into());
    }

    let witness_vector = match verdict {
        Verdict::NotLocalizable => rig.witness.clone(),
        _ => None,
    };
    let witness = witness_vector.as_ref().map(|w| {
        (n_anchors..network.n_nodes())
            .map(|i| NodeDisplacement {
                id: network.index().id(i).to_string(),
                displacement: w.rows(i * d, d).iter().copied().collect(),
            })
            .collect()
    });

    Ok(LocalizabilityReport {
        verdict,
        dimension: d,
        n_nodes: network.n_nodes(),
        n_anchors,
        lambda_min_bff: alg.lambda_min,
        lambda_max_bff: alg.lambda_max,
        rank_b: summary.rank,
        rank_rigidity_matrix: rank_rb,
        nullity_b: summary.nullity(),
        required_ibr_rank: ibr_g.required_rank,
        anchor_lower_bound: lower,
        anchor_bound_satisfied: n_anchors as f64 >= lower,
        ibr_g: ibr_g.ibr,
        ibr_augmented: ibr_aug.ibr,
        augmented_equivalence_applies: equivalence_applies,
        algebraic_localizable: alg.localizable,
        rigidity_localizable: rig.localizable,
        anchor_block_sigma_min: rig.anchor_block_sigma_min,
        condition_agreement,
        tolerances: AppliedTolerances {
            rank_laplacian: summary.tolerance,
            rank_rigidity_matrix: rank_rb_tol,
            loc: alg.tolerance,
            near_singular_upper: near_upper,
            anchor_block: ANCHOR_BLOCK_TOLERANCE,
        },
        reasons,
        witness,
        witness_vector,
    })
}
