use serde::{Deserialize, Serialize};

/// Supported isoparametric element kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementKind {
    /// 2 nodes: −1, 1.
    LineLinear,
    /// 3 nodes: −1, 1, 0.
    LineQuadratic,
    /// 4 corners counter-clockwise.
    QuadBilinear,
    /// 9 nodes: corners, mid-edges (bottom, right, top, left), centre.
    QuadQuadratic,
    /// 8 nodes: bottom face counter-clockwise, then top face.
    HexTrilinear,
}

const LINE2: [[f64; 3]; 2] = [[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]];
const LINE3: [[f64; 3]; 3] = [[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
const QUAD4: [[f64; 3]; 4] = [
    [-1.0, -1.0, 0.0],
    [1.0, -1.0, 0.0],
    [1.0, 1.0, 0.0],
    [-1.0, 1.0, 0.0],
];
const QUAD9: [[f64; 3]; 9] = [
    [-1.0, -1.0, 0.0],
    [1.0, -1.0, 0.0],
    [1.0, 1.0, 0.0],
    [-1.0, 1.0, 0.0],
    [0.0, -1.0, 0.0],
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [-1.0, 0.0, 0.0],
    [0.0, 0.0, 0.0],
];
const HEX8: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

impl ElementKind {
    pub fn dim(self) -> usize {
        match self {
            ElementKind::LineLinear | ElementKind::LineQuadratic => 1,
            ElementKind::QuadBilinear | ElementKind::QuadQuadratic => 2,
            ElementKind::HexTrilinear => 3,
        }
    }

    /// Polynomial order per parent direction.
    pub fn order(self) -> usize {
        match self {
            ElementKind::LineQuadratic | ElementKind::QuadQuadratic => 2,
            _ => 1,
        }
    }

    pub fn node_count(self) -> usize {
        self.parent_nodes().len()
    }

    /// Parent coordinates of the nodes, padded to three components.
    pub fn parent_nodes(self) -> &'static [[f64; 3]] {
        match self {
            ElementKind::LineLinear => &LINE2,
            ElementKind::LineQuadratic => &LINE3,
            ElementKind::QuadBilinear => &QUAD4,
            ElementKind::QuadQuadratic => &QUAD9,
            ElementKind::HexTrilinear => &HEX8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementKind::LineLinear => "line-linear",
            ElementKind::LineQuadratic => "line-quadratic",
            ElementKind::QuadBilinear => "quad-bilinear",
            ElementKind::QuadQuadratic => "quad-quadratic",
            ElementKind::HexTrilinear => "hex-trilinear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            ElementKind::LineLinear,
            ElementKind::LineQuadratic,
            ElementKind::QuadBilinear,
            ElementKind::QuadQuadratic,
            ElementKind::HexTrilinear,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }

    /// Shape function values and parent derivatives at `xi`.
    ///
    /// `n[a]` is the value of node `a`; `dn[a][j]` its derivative along parent axis `j`.
    pub fn shape(self, xi: &[f64], n: &mut [f64], dn: &mut [[f64; 3]]) {
        let d = self.dim();
        let order = self.order();
        for (a, node) in self.parent_nodes().iter().enumerate() {
            let mut val = [0.0; 3];
            let mut der = [0.0; 3];
            for j in 0..d {
                let (v, dv) = lagrange_1d(order, node[j], xi[j]);
                val[j] = v;
                der[j] = dv;
            }
            let mut prod = 1.0;
            for v in val.iter().take(d) {
                prod *= v;
            }
            n[a] = prod;
            for j in 0..d {
                let mut g = der[j];
                for (k, v) in val.iter().enumerate().take(d) {
                    if k != j {
                        g *= v;
                    }
                }
                dn[a][j] = g;
            }
        }
    }
}

/// 1D Lagrange basis on nodes {−1, 1} (order 1) or {−1, 0, 1} (order 2),
/// for the node located at `node`, evaluated at `t`.
fn lagrange_1d(order: usize, node: f64, t: f64) -> (f64, f64) {
    if order == 1 {
        (0.5 * (1.0 + node * t), 0.5 * node)
    } else if node == 0.0 {
        (1.0 - t * t, -2.0 * t)
    } else {
        (0.5 * t * (t + node), t + 0.5 * node)
    }
}
