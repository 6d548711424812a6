//! Bearing rigidity matrix, bearing Laplacian and infinitesimal bearing
//! rigidity.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::geometry::{self, unit_projector, GeometryError};
use crate::linalg::{self, LinalgError, RankTolerance, SpectralSummary};
use crate::network::{IndexMap, MeasuredEdge, MeasuredNetwork, Network, StackedPosition};

/// Allowed max-entry deviation of `B` from `R^T R`, relative to `max(1, |B|_max)`.
pub const FACTORIZATION_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RigidityError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("bearing Laplacian does not factor as R^T R (deviation {deviation:e})")]
    FactorizationMismatch { deviation: f64 },
    #[error(
        "rank of the bearing Laplacian ({laplacian}) differs from the rank of the rigidity \
         matrix ({rigidity_matrix}); the configuration is numerically ambiguous"
    )]
    RankDisagreement { laplacian: usize, rigidity_matrix: usize },
}

/// Jacobian of the stacked bearing function, `dm x dn`, with block rows in
/// the order of [`Network::edges`].
#[derive(Debug, Clone, PartialEq)]
pub struct RigidityMatrix {
    pub matrix: DMatrix<f64>,
    pub edges: Vec<(usize, usize)>,
}

/// Builds the bearing rigidity matrix: block row `k` carries `-P_gk/|e_k|`
/// at the tail and `+P_gk/|e_k|` at the head.
pub fn rigidity_matrix(network: &Network) -> Result<RigidityMatrix, RigidityError> {
    let d = network.dimension();
    let n = network.n_nodes();
    let edges = network.edges().to_vec();
    let mut matrix = DMatrix::zeros(d * edges.len(), d * n);
    for (k, &(i, j)) in edges.iter().enumerate() {
        let e = network.position(j) - network.position(i);
        let g = geometry::bearing(network.position(i), network.position(j))?;
        let block = unit_projector(&g) / e.norm();
        matrix.view_mut((k * d, i * d), (d, d)).copy_from(&(-&block));
        matrix.view_mut((k * d, j * d), (d, d)).copy_from(&block);
    }
    Ok(RigidityMatrix { matrix, edges })
}

/// The matrix-weighted Laplacian whose edge weights are the bearing
/// projectors, with anchor rows/columns leading.
#[derive(Debug, Clone, PartialEq)]
pub struct BearingLaplacian {
    dimension: usize,
    index: IndexMap,
    matrix: DMatrix<f64>,
    edges: Vec<MeasuredEdge>,
}

/// Assembles the bearing Laplacian from the network's own positions.
pub fn bearing_laplacian(network: &Network) -> Result<BearingLaplacian, RigidityError> {
    BearingLaplacian::from_measurements(&network.measurements())
}

impl BearingLaplacian {
    /// Assembles `B` from one bearing per undirected edge and checks the
    /// factorization `B = R^T R` with `R = diag(P_gk) (H kron I_d)`.
    pub fn from_measurements(m: &MeasuredNetwork) -> Result<Self, RigidityError> {
        let d = m.dimension;
        let n = m.n_nodes();
        let mut matrix = DMatrix::zeros(d * n, d * n);
        for e in &m.edges {
            let p = unit_projector(&e.direction);
            let (i, j) = (e.tail, e.head);
            let mut add = |r: usize, c: usize, sign: f64| {
                let mut v = matrix.view_mut((r * d, c * d), (d, d));
                v += &p * sign;
            };
            add(i, i, 1.0);
            add(j, j, 1.0);
            add(i, j, -1.0);
            add(j, i, -1.0);
        }
        let laplacian = Self {
            dimension: d,
            index: m.index.clone(),
            matrix,
            edges: m.edges.clone(),
        };
        let deviation = laplacian.factorization_deviation();
        if deviation > FACTORIZATION_TOLERANCE {
            return Err(RigidityError::FactorizationMismatch { deviation });
        }
        Ok(laplacian)
    }

    /// `R = diag(P_gk) (H kron I_d)`, the length-free rigidity factor.
    pub fn projected_incidence(&self) -> DMatrix<f64> {
        let d = self.dimension;
        let mut r = DMatrix::zeros(d * self.edges.len(), d * self.n_nodes());
        for (k, e) in self.edges.iter().enumerate() {
            let p = unit_projector(&e.direction);
            r.view_mut((k * d, e.tail * d), (d, d)).copy_from(&(-&p));
            r.view_mut((k * d, e.head * d), (d, d)).copy_from(&p);
        }
        r
    }

    fn factorization_deviation(&self) -> f64 {
        let r = self.projected_incidence();
        let rtr = r.transpose() * &r;
        (&self.matrix - rtr).amax() / self.matrix.amax().max(1.0)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn index(&self) -> &IndexMap {
        &self.index
    }

    pub fn edges(&self) -> &[MeasuredEdge] {
        &self.edges
    }

    pub fn n_nodes(&self) -> usize {
        self.index.len()
    }

    pub fn n_anchors(&self) -> usize {
        self.index.n_anchors()
    }

    pub fn n_followers(&self) -> usize {
        self.index.n_followers()
    }

    fn split(&self) -> usize {
        self.dimension * self.n_anchors()
    }

    pub fn block_aa(&self) -> DMatrix<f64> {
        let a = self.split();
        self.matrix.view((0, 0), (a, a)).into_owned()
    }

    pub fn block_af(&self) -> DMatrix<f64> {
        let a = self.split();
        let f = self.matrix.nrows() - a;
        self.matrix.view((0, a), (a, f)).into_owned()
    }

    pub fn block_fa(&self) -> DMatrix<f64> {
        let a = self.split();
        let f = self.matrix.nrows() - a;
        self.matrix.view((a, 0), (f, a)).into_owned()
    }

    pub fn block_ff(&self) -> DMatrix<f64> {
        let a = self.split();
        let f = self.matrix.nrows() - a;
        self.matrix.view((a, a), (f, f)).into_owned()
    }

    /// Eigen-summary of the whole Laplacian.
    pub fn spectral_summary(&self, policy: RankTolerance) -> Result<SpectralSummary, LinalgError> {
        linalg::spectral_summary(&self.matrix, policy)
    }

    /// Per-edge `|P_g (p_head - p_tail)|` for a stacked estimate, in edge order.
    pub fn edge_residuals(&self, p: &DVector<f64>) -> Vec<f64> {
        let d = self.dimension;
        self.edges
            .iter()
            .map(|e| {
                let diff = p.rows(e.head * d, d) - p.rows(e.tail * d, d);
                (&diff - &e.direction * e.direction.dot(&diff)).norm()
            })
            .collect()
    }

    /// `p^T B p` for a stacked estimate.
    pub fn quadratic_form(&self, p: &DVector<f64>) -> f64 {
        p.dot(&(&self.matrix * p))
    }
}

/// Rank evidence for infinitesimal bearing rigidity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IbrEvidence {
    pub ibr: bool,
    pub rank_laplacian: usize,
    pub rank_rigidity_matrix: usize,
    /// `dn - d - 1`.
    pub required_rank: usize,
}

/// Decides infinitesimal bearing rigidity from both the Laplacian and the
/// rigidity matrix; their ranks must agree.
pub fn is_ibr(network: &Network, policy: RankTolerance) -> Result<IbrEvidence, RigidityError> {
    let b = bearing_laplacian(network)?;
    let summary = b.spectral_summary(policy)?;
    let r = rigidity_matrix(network)?;
    let (rank_rb, _) = linalg::numeric_rank(&r.matrix, policy);
    ibr_from_ranks(network, summary.rank, rank_rb)
}

pub(crate) fn ibr_from_ranks(
    network: &Network,
    rank_laplacian: usize,
    rank_rigidity_matrix: usize,
) -> Result<IbrEvidence, RigidityError> {
    if rank_laplacian != rank_rigidity_matrix {
        return Err(RigidityError::RankDisagreement {
            laplacian: rank_laplacian,
            rigidity_matrix: rank_rigidity_matrix,
        });
    }
    let d = network.dimension();
    let n = network.n_nodes();
    let required_rank = (d * n).saturating_sub(d + 1);
    Ok(IbrEvidence {
        ibr: n >= 2 && rank_laplacian == required_rank,
        rank_laplacian,
        rank_rigidity_matrix,
        required_rank,
    })
}

/// Orthonormal basis of the translations and the scaling of the whole
/// network (`dn x (d+1)`). The scaling column is the mean-centred stacked
/// position.
pub fn trivial_motion_space(network: &Network) -> DMatrix<f64> {
    let d = network.dimension();
    let n = network.n_nodes();
    let mut basis = DMatrix::zeros(d * n, d + 1);
    let w = 1.0 / (n as f64).sqrt();
    for k in 0..d {
        for i in 0..n {
            basis[(i * d + k, k)] = w;
        }
    }
    let mean = network.positions().iter().fold(DVector::zeros(d), |acc, p| acc + p) / n as f64;
    let mut scale = DVector::zeros(d * n);
    for (i, p) in network.positions().iter().enumerate() {
        scale.rows_mut(i * d, d).copy_from(&(p - &mean));
    }
    // Centring already removes the translation components; one more
    // projection cleans up rounding.
    for k in 0..d {
        let t = basis.column(k).into_owned();
        scale -= &t * t.dot(&scale);
    }
    let norm = scale.norm();
    basis.set_column(d, &(scale / norm));
    basis
}

/// Edge-wise least-squares cost `1/2 sum_i sum_{j in N_i} |P_gij (p_i - p_j)|^2`
/// of an estimate, using the network's true bearings.
pub fn quadratic_cost(network: &Network, estimate: &StackedPosition) -> f64 {
    let mut total = 0.0;
    for i in 0..network.n_nodes() {
        for &j in network.neighbors(i) {
            let g = geometry::bearing(network.position(i), network.position(j))
                .expect("validated network has no collocated nodes");
            let diff = estimate.node(i) - estimate.node(j);
            let perp = &diff - &g * g.dot(&diff);
            total += perp.norm_squared();
        }
    }
    0.5 * total
}
