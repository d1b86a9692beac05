use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::element::ElementKind;
use super::gauss::gauss_legendre;
use crate::error::{Error, Result};

/// On-disk mesh description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshFile {
    pub dim: usize,
    pub element_kind: ElementKind,
    pub gauss_per_dir: usize,
    pub nodes: Vec<Vec<f64>>,
    pub elements: Vec<Vec<usize>>,
}

/// Finite element mesh with precomputed adjacency and element bounding data.
#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    kind: ElementKind,
    gauss_per_dir: usize,
    nodes: Vec<f64>,
    elements: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
    centroids: Vec<f64>,
    radii: Vec<f64>,
    bbox: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Mesh {
    pub fn new(
        kind: ElementKind,
        gauss_per_dir: usize,
        nodes: Vec<f64>,
        elements: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let dim = kind.dim();
        if gauss_per_dir == 0 {
            return Err(Error::param("gauss_per_dir", "must be at least 1"));
        }
        if !nodes.len().is_multiple_of(dim) {
            return Err(Error::input("node coordinate array length is not a multiple of dim"));
        }
        if nodes.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("node coordinates must be finite"));
        }
        let n_nodes = nodes.len() / dim;
        let arity = kind.node_count();
        for (e, conn) in elements.iter().enumerate() {
            if conn.len() != arity {
                return Err(Error::input(format!(
                    "element {e} has {} nodes, {} expects {arity}",
                    conn.len(),
                    kind.name()
                )));
            }
            if let Some(bad) = conn.iter().find(|&&i| i >= n_nodes) {
                return Err(Error::input(format!(
                    "element {e} references node {bad} but the mesh has {n_nodes} nodes"
                )));
            }
        }
        let mut mesh = Mesh {
            dim,
            kind,
            gauss_per_dir,
            nodes,
            elements,
            neighbors: Vec::new(),
            centroids: Vec::new(),
            radii: Vec::new(),
            bbox: Vec::new(),
        };
        mesh.build_adjacency();
        mesh.build_bounds();
        Ok(mesh)
    }

    pub fn from_file_data(f: MeshFile) -> Result<Self> {
        if f.dim != f.element_kind.dim() {
            return Err(Error::input(format!(
                "dim {} does not match element kind {}",
                f.dim,
                f.element_kind.name()
            )));
        }
        let mut nodes = Vec::with_capacity(f.nodes.len() * f.dim);
        for (i, n) in f.nodes.iter().enumerate() {
            if n.len() != f.dim {
                return Err(Error::input(format!("node {i} has {} coordinates", n.len())));
            }
            nodes.extend_from_slice(n);
        }
        Mesh::new(f.element_kind, f.gauss_per_dir, nodes, f.elements)
    }

    pub fn to_file_data(&self) -> MeshFile {
        MeshFile {
            dim: self.dim,
            element_kind: self.kind,
            gauss_per_dir: self.gauss_per_dir,
            nodes: self.nodes.chunks(self.dim).map(|c| c.to_vec()).collect(),
            elements: self.elements.clone(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Mesh::from_file_data(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_file_data())?;
        std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    /// Structured mesh of the box `lo..hi` with `divisions[i]` elements along axis `i`.
    ///
    /// Nodes and elements are numbered with the first axis running fastest.
    pub fn structured(
        kind: ElementKind,
        lo: &[f64],
        hi: &[f64],
        divisions: &[usize],
        gauss_per_dir: usize,
    ) -> Result<Self> {
        let d = kind.dim();
        if lo.len() != d || hi.len() != d || divisions.len() != d {
            return Err(Error::input(format!(
                "{} needs {d} box ranges and {d} division counts",
                kind.name()
            )));
        }
        if divisions.contains(&0) {
            return Err(Error::param("divisions", "must be positive"));
        }
        if lo.iter().zip(hi).any(|(a, b)| !(b > a)) {
            return Err(Error::param("box", "each range needs lo < hi"));
        }
        let ord = kind.order();
        let npd: Vec<usize> = divisions.iter().map(|n| ord * n + 1).collect();
        let total: usize = npd.iter().product();
        let mut nodes = Vec::with_capacity(total * d);
        for idx in 0..total {
            let mut rem = idx;
            for j in 0..d {
                let k = rem % npd[j];
                rem /= npd[j];
                nodes.push(lo[j] + (hi[j] - lo[j]) * k as f64 / (npd[j] - 1) as f64);
            }
        }
        let n_el: usize = divisions.iter().product();
        let mut elements = Vec::with_capacity(n_el);
        for e in 0..n_el {
            let mut rem = e;
            let mut base = [0usize; 3];
            for j in 0..d {
                base[j] = rem % divisions[j];
                rem /= divisions[j];
            }
            let conn = kind
                .parent_nodes()
                .iter()
                .map(|p| {
                    let mut gidx = 0;
                    let mut stride = 1;
                    for j in 0..d {
                        let local = ((p[j] + 1.0) * 0.5 * ord as f64).round() as usize;
                        gidx += (ord * base[j] + local) * stride;
                        stride *= npd[j];
                    }
                    gidx
                })
                .collect();
            elements.push(conn);
        }
        Mesh::new(kind, gauss_per_dir, nodes, elements)
    }

    fn build_adjacency(&mut self) {
        let n_nodes = self.node_count();
        let mut node_elems: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
        for (e, conn) in self.elements.iter().enumerate() {
            for &a in conn {
                node_elems[a].push(e);
            }
        }
        self.neighbors = self
            .elements
            .iter()
            .enumerate()
            .map(|(e, conn)| {
                let set: BTreeSet<usize> = conn
                    .iter()
                    .flat_map(|&a| node_elems[a].iter().copied())
                    .filter(|&o| o != e)
                    .collect();
                set.into_iter().collect()
            })
            .collect();
    }

    fn build_bounds(&mut self) {
        let d = self.dim;
        for conn in &self.elements {
            let mut c = vec![0.0; d];
            let mut lo = vec![f64::INFINITY; d];
            let mut hi = vec![f64::NEG_INFINITY; d];
            for &a in conn {
                let x = self.node(a);
                for j in 0..d {
                    c[j] += x[j] / conn.len() as f64;
                    lo[j] = lo[j].min(x[j]);
                    hi[j] = hi[j].max(x[j]);
                }
            }
            let r = conn
                .iter()
                .map(|&a| dist(self.node(a), &c))
                .fold(0.0, f64::max);
            self.centroids.extend_from_slice(&c);
            self.radii.push(r);
            self.bbox.push((lo, hi));
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn kind(&self) -> ElementKind {
        self.kind
    }
    pub fn gauss_per_dir(&self) -> usize {
        self.gauss_per_dir
    }
    /// Gauss points per element.
    pub fn points_per_element(&self) -> usize {
        self.gauss_per_dir.pow(self.dim as u32)
    }
    pub fn node_count(&self) -> usize {
        self.nodes.len() / self.dim
    }
    pub fn element_count(&self) -> usize {
        self.elements.len()
    }
    pub fn node(&self, a: usize) -> &[f64] {
        &self.nodes[a * self.dim..(a + 1) * self.dim]
    }
    pub fn element(&self, e: usize) -> &[usize] {
        &self.elements[e]
    }
    pub fn neighbors(&self, e: usize) -> &[usize] {
        &self.neighbors[e]
    }
    /// Mean of the element's nodes.
    pub fn centroid(&self, e: usize) -> &[f64] {
        &self.centroids[e * self.dim..(e + 1) * self.dim]
    }
    /// Largest node distance from the centroid.
    pub fn circumradius(&self, e: usize) -> f64 {
        self.radii[e]
    }
    pub fn bounding_box(&self, e: usize) -> (&[f64], &[f64]) {
        let (lo, hi) = &self.bbox[e];
        (lo, hi)
    }

    /// Physical coordinates and Jacobian `J[i][j] = ∂x_i/∂ξ_j` at parent point `xi`.
    pub fn map(&self, e: usize, xi: &[f64]) -> ([f64; 3], [[f64; 3]; 3]) {
        let nn = self.kind.node_count();
        let mut n = [0.0; 9];
        let mut dn = [[0.0; 3]; 9];
        self.kind.shape(xi, &mut n[..nn], &mut dn[..nn]);
        let d = self.dim;
        let mut x = [0.0; 3];
        let mut jac = [[0.0; 3]; 3];
        for (a, &node) in self.elements[e].iter().enumerate() {
            let xa = self.node(node);
            for i in 0..d {
                x[i] += n[a] * xa[i];
                for j in 0..d {
                    jac[i][j] += dn[a][j] * xa[i];
                }
            }
        }
        (x, jac)
    }

    /// Physical Gauss points and weights of every element.
    pub fn gauss_field(&self) -> Result<GaussField> {
        let d = self.dim;
        let q = self.gauss_per_dir;
        let (gx, gw) = gauss_legendre(q);
        let r = self.points_per_element();
        let ne = self.element_count();
        let mut points = Vec::with_capacity(ne * r * d);
        let mut weights = Vec::with_capacity(ne * r);
        let mut owner = Vec::with_capacity(ne * r);
        let mut offsets = Vec::with_capacity(ne + 1);
        for e in 0..ne {
            offsets.push(weights.len());
            for g in 0..r {
                let mut rem = g;
                let mut xi = [0.0; 3];
                let mut wp = 1.0;
                for j in 0..d {
                    let k = rem % q;
                    rem /= q;
                    xi[j] = gx[k];
                    wp *= gw[k];
                }
                let (x, jac) = self.map(e, &xi[..d]);
                let det = det(&jac, d);
                if !(det > 0.0) {
                    return Err(Error::Geometry {
                        element: e,
                        reason: format!("non-positive Jacobian determinant {det:.3e} at Gauss point {g}"),
                    });
                }
                points.extend_from_slice(&x[..d]);
                weights.push(wp * det);
                owner.push(e);
            }
        }
        offsets.push(weights.len());
        Ok(GaussField {
            dim: d,
            points,
            weights,
            owner,
            offsets,
        })
    }
}

/// Physical Gauss points `X_FE`, weights `W_FE` and their owning elements.
#[derive(Debug, Clone)]
pub struct GaussField {
    pub dim: usize,
    /// Row-major `M × d` coordinates.
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub owner: Vec<usize>,
    /// Gauss rows of element `e` are `offsets[e]..offsets[e + 1]`.
    pub offsets: Vec<usize>,
}

impl GaussField {
    pub fn len(&self) -> usize {
        self.weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
    pub fn point(&self, g: usize) -> &[f64] {
        &self.points[g * self.dim..(g + 1) * self.dim]
    }
    pub fn element_rows(&self, e: usize) -> std::ops::Range<usize> {
        self.offsets[e]..self.offsets[e + 1]
    }
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub(crate) fn det(j: &[[f64; 3]; 3], d: usize) -> f64 {
    match d {
        1 => j[0][0],
        2 => j[0][0] * j[1][1] - j[0][1] * j[1][0],
        _ => {
            j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
                - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
                + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0])
        }
    }
}

/// Solve `J·x = b` for `d ≤ 3` by Cramer's rule; `None` when singular.
pub(crate) fn solve_small(j: &[[f64; 3]; 3], b: &[f64; 3], d: usize) -> Option<[f64; 3]> {
    let dt = det(j, d);
    if dt == 0.0 || !dt.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for k in 0..d {
        let mut m = *j;
        for i in 0..d {
            m[i][k] = b[i];
        }
        out[k] = det(&m, d) / dt;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_line_element_gauss_points() {
        let m = Mesh::new(ElementKind::LineLinear, 2, vec![-1.0, 1.0], vec![vec![0, 1]]).unwrap();
        let f = m.gauss_field().unwrap();
        assert!((f.points[0] + 0.5773502691896258).abs() < 1e-15);
        assert!((f.points[1] - 0.5773502691896258).abs() < 1e-15);
        assert!((f.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn structured_square_area() {
        let m = Mesh::structured(ElementKind::QuadBilinear, &[-1.0, -1.0], &[1.0, 1.0], &[20, 20], 2)
            .unwrap();
        let f = m.gauss_field().unwrap();
        assert!((f.total_weight() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn inverted_element_is_reported() {
        let m = Mesh::new(
            ElementKind::QuadBilinear,
            2,
            vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0],
            vec![vec![0, 3, 2, 1]],
        )
        .unwrap();
        match m.gauss_field() {
            Err(Error::Geometry { element, .. }) => assert_eq!(element, 0),
            other => panic!("expected geometry error, got {other:?}"),
        }
    }

    #[test]
    fn neighbors_are_symmetric() {
        let m = Mesh::structured(ElementKind::QuadQuadratic, &[0.0, 0.0], &[1.0, 2.0], &[3, 4], 3)
            .unwrap();
        for e in 0..m.element_count() {
            for &o in m.neighbors(e) {
                assert!(m.neighbors(o).contains(&e));
            }
        }
    }
}
