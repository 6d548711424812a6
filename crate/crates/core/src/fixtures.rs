//! Reference networks with known localizability, plus a seeded random
//! network generator.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::network::NetworkSpec;

/// A named reference network and its expected verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: &'static str,
    pub spec: NetworkSpec,
    pub localizable: bool,
}

fn build(dimension: usize, nodes: &[(&str, &[f64])], anchors: &[&str], edges: &[(&str, &str)]) -> NetworkSpec {
    NetworkSpec::from_parts(
        dimension,
        nodes
            .iter()
            .map(|&(id, p)| (id.to_string(), p.to_vec(), anchors.contains(&id)))
            .collect(),
        edges.iter().map(|&(a, b)| (a.to_string(), b.to_string())),
    )
}

const SQUARE: [(&str, &[f64]); 4] = [
    ("1", &[0.0, 0.0]),
    ("2", &[0.0, -3.0]),
    ("3", &[3.0, -3.0]),
    ("4", &[3.0, 0.0]),
];
const CYCLE4: [(&str, &str); 4] = [("1", "2"), ("2", "3"), ("3", "4"), ("4", "1")];

/// A 3x3 square on a 4-cycle with anchors 1 and 2; not localizable.
pub fn square() -> NetworkSpec {
    build(2, &SQUARE, &["1", "2"], &CYCLE4)
}

/// Estimates of [`square`] that satisfy every bearing constraint: the truth
/// and two rectangles with nodes 3 and 4 moved to `x = 2` and `x = -2`.
pub fn square_estimates() -> [NetworkSpec; 3] {
    let moved = |x: f64| {
        build(
            2,
            &[
                ("1", &[0.0, 0.0]),
                ("2", &[0.0, -3.0]),
                ("3", &[x, -3.0]),
                ("4", &[x, 0.0]),
            ],
            &["1", "2"],
            &CYCLE4,
        )
    };
    [square(), moved(2.0), moved(-2.0)]
}

const COLLINEAR: [(&str, &[f64]); 3] = [("1", &[0.0, 0.0]), ("2", &[5.0, 0.0]), ("3", &[2.5, 0.0])];
const TRIANGLE3: [(&str, &str); 3] = [("1", "2"), ("2", "3"), ("1", "3")];

const SQUARE4: [(&str, &[f64]); 4] = [
    ("1", &[0.0, 0.0]),
    ("2", &[4.0, 0.0]),
    ("3", &[4.0, -4.0]),
    ("4", &[0.0, -4.0]),
];

const NESTED: [(&str, &[f64]); 6] = [
    ("1", &[0.0, 3.0]),
    ("2", &[-2.598_076_211_353_316, -1.5]),
    ("3", &[2.598_076_211_353_316, -1.5]),
    ("4", &[0.0, 1.5]),
    ("5", &[-1.299_038_105_676_658, -0.75]),
    ("6", &[1.299_038_105_676_658, -0.75]),
];
const NESTED_EDGES: [(&str, &str); 9] = [
    ("1", "2"),
    ("2", "3"),
    ("3", "1"),
    ("4", "5"),
    ("5", "6"),
    ("6", "4"),
    ("1", "4"),
    ("2", "5"),
    ("3", "6"),
];

const RECT: [(&str, &[f64]); 6] = [
    ("1", &[0.0, 0.0]),
    ("2", &[5.0, 0.0]),
    ("3", &[5.0, 4.0]),
    ("4", &[0.0, 4.0]),
    ("5", &[5.0 / 3.0, 2.0]),
    ("6", &[10.0 / 3.0, 2.0]),
];
const RECT_EDGES: [(&str, &str); 9] = [
    ("1", "2"),
    ("2", "3"),
    ("3", "4"),
    ("4", "1"),
    ("1", "5"),
    ("5", "4"),
    ("2", "6"),
    ("6", "3"),
    ("5", "6"),
];

const PRISM: [(&str, &[f64]); 6] = [
    ("1", &[0.0, -1.0, 1.0]),
    ("2", &[2.0, 1.0, 1.0]),
    ("3", &[-2.0, 1.0, 1.0]),
    ("4", &[0.0, -1.0, 0.0]),
    ("5", &[2.0, 1.0, 0.0]),
    ("6", &[-2.0, 1.0, 0.0]),
];
const PRISM_EDGES: [(&str, &str); 9] = NESTED_EDGES;

const CUBE: [(&str, &[f64]); 8] = [
    ("1", &[0.0, 1.0, 0.0]),
    ("2", &[1.0, 1.0, 0.0]),
    ("3", &[1.0, 0.0, 0.0]),
    ("4", &[0.0, 0.0, 0.0]),
    ("5", &[0.0, 1.0, 1.0]),
    ("6", &[1.0, 1.0, 1.0]),
    ("7", &[1.0, 0.0, 1.0]),
    ("8", &[0.0, 0.0, 1.0]),
];
const CUBE_EDGES: [(&str, &str); 12] = [
    ("1", "2"),
    ("2", "3"),
    ("3", "4"),
    ("4", "1"),
    ("5", "6"),
    ("6", "7"),
    ("7", "8"),
    ("8", "5"),
    ("1", "5"),
    ("2", "6"),
    ("3", "7"),
    ("4", "8"),
];

/// Unit cube with all twelve edges and anchors at opposite corners 4 and 6.
pub fn unit_cube() -> NetworkSpec {
    build(3, &CUBE, &["4", "6"], &CUBE_EDGES)
}

/// Reference networks that are not localizable.
pub fn non_localizable() -> Vec<Fixture> {
    let f = |name, spec| Fixture {
        name,
        spec,
        localizable: false,
    };
    vec![
        f("square", square()),
        f("collinear", build(2, &COLLINEAR, &["1", "2"], &TRIANGLE3)),
        f("square-cycle", build(2, &SQUARE4, &["3", "4"], &CYCLE4)),
        f("nested-triangles", build(2, &NESTED, &["1", "2", "3"], &NESTED_EDGES)),
        f("rectangle-chain", build(2, &RECT, &["1", "2"], &RECT_EDGES)),
        f("prism", build(3, &PRISM, &["5", "6"], &PRISM_EDGES)),
        f("cube-adjacent-anchors", build(3, &CUBE, &["3", "4"], &CUBE_EDGES)),
    ]
}

/// Reference networks that are localizable.
pub fn localizable() -> Vec<Fixture> {
    let f = |name, spec| Fixture {
        name,
        spec,
        localizable: true,
    };
    let mut braced = CYCLE4.to_vec();
    braced.push(("2", "4"));
    let hexagon: Vec<(String, Vec<f64>)> = (0..6)
        .map(|k| {
            let a = std::f64::consts::FRAC_PI_3 * k as f64;
            ((k + 1).to_string(), vec![2.0 * a.cos(), 2.0 * a.sin(), 0.0])
        })
        .chain(std::iter::once(("7".to_string(), vec![0.0, 0.0, 3.0])))
        .collect();
    let hex_nodes: Vec<(&str, &[f64])> = hexagon.iter().map(|(id, p)| (id.as_str(), p.as_slice())).collect();
    let hex_edges: Vec<(String, String)> = (1..=6)
        .map(|k| (k.to_string(), (k % 6 + 1).to_string()))
        .chain((1..=6).map(|k| (k.to_string(), "7".to_string())))
        .collect();
    let hex_edges: Vec<(&str, &str)> = hex_edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    vec![
        f(
            "triangle",
            build(
                2,
                &[("1", &[0.0, 0.0]), ("2", &[4.0, 0.0]), ("3", &[2.0, 3.0])],
                &["1", "2"],
                &TRIANGLE3,
            ),
        ),
        f("braced-square", build(2, &SQUARE4, &["3", "4"], &braced)),
        f(
            "nested-triangles-inner-anchor",
            build(2, &NESTED, &["1", "2", "6"], &NESTED_EDGES),
        ),
        f(
            "rectangle-chain-diagonal-anchors",
            build(2, &RECT, &["1", "6"], &RECT_EDGES),
        ),
        f("prism-split-anchors", build(3, &PRISM, &["2", "6"], &PRISM_EDGES)),
        f("cube", unit_cube()),
        f(
            "collinear-anchors",
            build(
                2,
                &[
                    ("1", &[1.0, 0.0]),
                    ("2", &[4.0, 0.0]),
                    ("3", &[4.0, 4.0]),
                    ("4", &[8.0, 0.0]),
                    ("6", &[8.0, 4.0]),
                ],
                &["1", "2", "4"],
                &[("1", "3"), ("3", "2"), ("2", "1"), ("2", "4"), ("4", "6"), ("6", "3")],
            ),
        ),
        f("hexagonal-pyramid", build(3, &hex_nodes, &["1", "2"], &hex_edges)),
    ]
}

/// Parameters of [`random_network`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomNetwork {
    pub dimension: usize,
    pub n_nodes: usize,
    pub n_anchors: usize,
    /// Probability of each non-tree edge.
    pub edge_probability: f64,
    /// Coordinates are uniform in `[-scale, scale]`.
    pub scale: f64,
}

/// A random connected network: a random spanning tree plus independent
/// extra edges, with a uniformly random anchor subset. Node ids are `n0`,
/// `n1`, ...
pub fn random_network<R: Rng + ?Sized>(rng: &mut R, cfg: RandomNetwork) -> NetworkSpec {
    let n = cfg.n_nodes;
    let positions: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..cfg.dimension)
                .map(|_| rng.random_range(-cfg.scale..=cfg.scale))
                .collect()
        })
        .collect();
    let mut edges = Vec::new();
    for k in 1..n {
        edges.push((rng.random_range(0..k), k));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !edges.contains(&(i, j)) && !edges.contains(&(j, i)) && rng.random_bool(cfg.edge_probability) {
                edges.push((i, j));
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let anchors = &order[..cfg.n_anchors.min(n)];
    NetworkSpec::from_parts(
        cfg.dimension,
        positions
            .into_iter()
            .enumerate()
            .map(|(k, p)| (format!("n{k}"), p, anchors.contains(&k)))
            .collect(),
        edges.into_iter().map(|(a, b)| (format!("n{a}"), format!("n{b}"))),
    )
}
