//! Bearings, orthogonal projectors and the residuals of the bearing and
//! projected-bearing constraint systems.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::network::{collocation_tolerance, Network, StackedPosition};

/// Unit-norm deviation accepted by [`angle_between`].
pub const UNIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("points are collocated (distance {distance:e})")]
    CollocatedNodes { distance: f64 },
    #[error("projector of a zero vector")]
    ZeroVector,
    #[error("vector is not unit norm (norm {norm})")]
    NotUnit { norm: f64 },
    #[error("estimates of nodes {tail} and {head} coincide")]
    CollocatedEstimates { tail: usize, head: usize },
}

/// Unit vector from `from` toward `to`.
pub fn bearing(from: &DVector<f64>, to: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
    let e = to - from;
    let distance = e.norm();
    let scale = from.amax().max(to.amax());
    if distance <= collocation_tolerance(scale) {
        return Err(GeometryError::CollocatedNodes { distance });
    }
    Ok(e / distance)
}

/// `I - x x^T / |x|^2`, the projector onto the orthogonal complement of `x`.
pub fn projector(x: &DVector<f64>) -> Result<DMatrix<f64>, GeometryError> {
    let norm = x.norm();
    if norm.is_nan() || norm <= collocation_tolerance(0.0) {
        return Err(GeometryError::ZeroVector);
    }
    Ok(unit_projector(&(x / norm)))
}

/// Projector for an already normalized direction.
pub(crate) fn unit_projector(g: &DVector<f64>) -> DMatrix<f64> {
    let d = g.len();
    DMatrix::identity(d, d) - g * g.transpose()
}

/// Angle in `[0, pi]` between two unit vectors.
///
/// Evaluated as `atan2(|g_perp|, <g, h>)`, which agrees with the arccosine
/// of the clamped inner product but keeps full precision near `0` and `pi`.
pub fn angle_between(g: &DVector<f64>, h: &DVector<f64>) -> Result<f64, GeometryError> {
    for v in [g, h] {
        let norm = v.norm();
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(GeometryError::NotUnit { norm });
        }
    }
    Ok(angle_unchecked(g, h))
}

pub(crate) fn angle_unchecked(g: &DVector<f64>, h: &DVector<f64>) -> f64 {
    let c = g.dot(h);
    let perp = h - g * c;
    perp.norm().atan2(c).clamp(0.0, std::f64::consts::PI)
}

/// Rotates `g` by exactly `angle` inside the plane spanned by `g` and a
/// random unit direction orthogonal to it.
pub fn perturb_bearing_with<R: Rng + ?Sized>(g: &DVector<f64>, angle: f64, rng: &mut R) -> DVector<f64> {
    let d = g.len();
    let g = g / g.norm();
    let u = loop {
        let r = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let r = &r - &g * g.dot(&r);
        // Re-orthogonalize once; the first pass can leave O(eps) leakage.
        let r = &r - &g * g.dot(&r);
        let n = r.norm();
        if n > 1e-8 {
            break r / n;
        }
    };
    let out = &g * angle.cos() + u * angle.sin();
    let n = out.norm();
    out / n
}

/// Seeded form of [`perturb_bearing_with`].
pub fn perturb_bearing(g: &DVector<f64>, angle: f64, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perturb_bearing_with(g, angle, &mut rng)
}

/// Residual of one edge constraint, keyed by internal node indices.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeResidual {
    pub tail: usize,
    pub head: usize,
    pub value: f64,
}

/// Per-constraint residuals of an estimate.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Residuals {
    pub edges: Vec<EdgeResidual>,
    /// `(anchor index, |p_hat_i - p_i|)`.
    pub anchors: Vec<(usize, f64)>,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.value)
            .chain(self.anchors.iter().map(|a| a.1))
            .fold(0.0, f64::max)
    }
}

fn anchor_residuals(network: &Network, estimate: &StackedPosition) -> Vec<(usize, f64)> {
    (0..network.n_anchors())
        .map(|i| (i, (estimate.node(i) - network.position(i)).norm()))
        .collect()
}

/// Residuals of the bearing equations: per edge `|unit(p_hat_j - p_hat_i) - g_ij|`
/// and per anchor `|p_hat_i - p_i|`.
pub fn nonlinear_residual(network: &Network, estimate: &StackedPosition) -> Result<Residuals, GeometryError> {
    let mut edges = Vec::with_capacity(network.edges().len());
    for &(i, j) in network.edges() {
        let g = bearing(network.position(i), network.position(j))?;
        let g_hat = bearing(&estimate.node(i).into_owned(), &estimate.node(j).into_owned())
            .map_err(|_| GeometryError::CollocatedEstimates { tail: i, head: j })?;
        edges.push(EdgeResidual {
            tail: i,
            head: j,
            value: (g_hat - g).norm(),
        });
    }
    Ok(Residuals {
        edges,
        anchors: anchor_residuals(network, estimate),
    })
}

/// Residuals of the projected (linear) equations: per edge
/// `|P_{g_ij} (p_hat_j - p_hat_i)|` and per anchor `|p_hat_i - p_i|`.
pub fn linear_residual(network: &Network, estimate: &StackedPosition) -> Residuals {
    let edges = network
        .edges()
        .iter()
        .map(|&(i, j)| {
            let g =
                bearing(network.position(i), network.position(j)).expect("validated network has no collocated nodes");
            let diff = estimate.node(j) - estimate.node(i);
            let perp = &diff - &g * g.dot(&diff);
            EdgeResidual {
                tail: i,
                head: j,
                value: perp.norm(),
            }
        })
        .collect();
    Residuals {
        edges,
        anchors: anchor_residuals(network, estimate),
    }
}
