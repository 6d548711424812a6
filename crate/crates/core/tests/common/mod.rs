//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use bearloc::NetworkSpec;
use nalgebra::{DMatrix, DVector};

/// Positions in spec order and edges as spec-order index pairs.
pub fn raw(spec: &NetworkSpec) -> (Vec<DVector<f64>>, Vec<(usize, usize)>) {
    let pos: Vec<DVector<f64>> = spec
        .nodes
        .iter()
        .map(|n| DVector::from_vec(n.position.clone().unwrap()))
        .collect();
    let idx = |id: &str| spec.nodes.iter().position(|n| n.id == id).unwrap();
    let edges = spec
        .undirected_edges()
        .into_iter()
        .map(|(a, b)| (idx(&a), idx(&b)))
        .collect();
    (pos, edges)
}

/// `B = Hbar^T diag(P_k) Hbar` with `Hbar = H kron I_d`, assembled with
/// explicit Kronecker products in spec node order.
pub fn laplacian(pos: &[DVector<f64>], edges: &[(usize, usize)]) -> DMatrix<f64> {
    let d = pos[0].len();
    let n = pos.len();
    let m = edges.len();
    let mut h = DMatrix::zeros(m, n);
    for (k, &(i, j)) in edges.iter().enumerate() {
        h[(k, i)] = -1.0;
        h[(k, j)] = 1.0;
    }
    let hbar = h.kronecker(&DMatrix::<f64>::identity(d, d));
    let mut w = DMatrix::zeros(d * m, d * m);
    for (k, &(i, j)) in edges.iter().enumerate() {
        let e = &pos[j] - &pos[i];
        let g = &e / e.norm();
        let p = DMatrix::identity(d, d) - &g * g.transpose();
        w.view_mut((k * d, k * d), (d, d)).copy_from(&p);
    }
    hbar.transpose() * w * hbar
}

/// Count of eigenvalues above `rel * largest`.
pub fn rank(m: &DMatrix<f64>, rel: f64) -> usize {
    let s = m.clone().singular_values();
    let top = s.max();
    s.iter().filter(|&&x| x > rel * top).count()
}

/// Anchor-first permutation of spec order, as the library orders nodes.
pub fn anchor_first(spec: &NetworkSpec) -> Vec<usize> {
    let mut order: Vec<usize> = (0..spec.nodes.len()).filter(|&k| spec.nodes[k].anchor).collect();
    order.extend((0..spec.nodes.len()).filter(|&k| !spec.nodes[k].anchor));
    order
}

/// Follower block of `B` and the stacked anchor/follower truth, computed
/// from spec order.
pub fn blocks(spec: &NetworkSpec) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>, DVector<f64>) {
    let (pos, edges) = raw(spec);
    let d = spec.dimension;
    let b = laplacian(&pos, &edges);
    let order = anchor_first(spec);
    let na = spec.nodes.iter().filter(|n| n.anchor).count();
    let pick = |rows: &[usize], cols: &[usize]| {
        let mut out = DMatrix::zeros(d * rows.len(), d * cols.len());
        for (r, &i) in rows.iter().enumerate() {
            for (c, &j) in cols.iter().enumerate() {
                out.view_mut((r * d, c * d), (d, d))
                    .copy_from(&b.view((i * d, j * d), (d, d)));
            }
        }
        out
    };
    let (a, f) = order.split_at(na);
    let stack = |ids: &[usize]| DVector::from_iterator(d * ids.len(), ids.iter().flat_map(|&i| pos[i].iter().copied()));
    (pick(f, f), pick(f, a), stack(a), stack(f))
}
