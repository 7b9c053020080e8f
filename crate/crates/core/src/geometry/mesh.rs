//! Mesh representation shared by contour (airfoil) and triangulated
//! (FEM) shapes. 2D shapes store a zero third coordinate so one type
//! serves both tasks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Shape discretization: vertices, symmetric directed edges, optional
/// triangle faces, and optional node/edge attribute blocks filled in by
/// [`crate::geometry::build_features`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Mesh<T> {
    pub vertices: Vec<[T; 3]>,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faces: Option<Vec<[usize; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_attrs: Option<Vec<Vec<T>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_attrs: Option<Vec<Vec<T>>>,
}

impl<T: Scalar> Mesh<T> {
    pub fn new(vertices: Vec<[T; 3]>, edges: Vec<[usize; 2]>) -> Self {
        Self { vertices, edges, faces: None, node_attrs: None, edge_attrs: None }
    }

    /// Builds a closed 2D contour mesh from an ordered vertex loop.
    /// Edges are stored in both directions: the forward cycle first,
    /// then the reversed copies.
    pub fn contour(vertices: Vec<[T; 3]>) -> Self {
        let n = vertices.len();
        let mut edges = Vec::with_capacity(2 * n);
        for i in 0..n {
            edges.push([i, (i + 1) % n]);
        }
        for i in 0..n {
            edges.push([(i + 1) % n, i]);
        }
        Self::new(vertices, edges)
    }

    /// Builds a triangulated mesh; the edge set is the symmetric closure
    /// of all unique triangle sides.
    pub fn triangulated(vertices: Vec<[T; 3]>, faces: Vec<[usize; 3]>) -> Self {
        let mut seen = std::collections::BTreeSet::new();
        for f in &faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                seen.insert((a.min(b), a.max(b)));
            }
        }
        let mut edges = Vec::with_capacity(2 * seen.len());
        for &(a, b) in &seen {
            edges.push([a, b]);
            edges.push([b, a]);
        }
        let mut mesh = Self::new(vertices, edges);
        mesh.faces = Some(faces);
        mesh
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Checks edge indices and edge-set symmetry.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        let mut set = std::collections::BTreeSet::new();
        for e in &self.edges {
            if e[0] >= n || e[1] >= n {
                return Err(Error::Geometry(format!(
                    "edge ({}, {}) references a vertex outside 0..{n}",
                    e[0], e[1]
                )));
            }
            set.insert((e[0], e[1]));
        }
        for &(a, b) in &set {
            if !set.contains(&(b, a)) {
                return Err(Error::Geometry(format!("edge ({a}, {b}) has no reverse")));
            }
        }
        Ok(())
    }

    /// Extracts the single closed vertex cycle of a contour mesh,
    /// canonicalized to counter-clockwise orientation and starting at
    /// the lowest vertex index on the loop.
    ///
    /// Fails if the edge set is not one closed cycle visiting every
    /// vertex exactly once.
    pub fn contour_cycle(&self) -> Result<Vec<usize>> {
        self.validate()?;
        let n = self.vertices.len();
        if n < 3 {
            return Err(Error::Geometry("contour needs at least 3 vertices".into()));
        }
        // Undirected neighbor lists; a simple cycle has exactly two.
        let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in &self.edges {
            if !nbrs[e[0]].contains(&e[1]) {
                nbrs[e[0]].push(e[1]);
            }
        }
        for (i, nb) in nbrs.iter().enumerate() {
            if nb.len() != 2 {
                return Err(Error::Geometry(format!(
                    "vertex {i} has {} distinct neighbors; contour requires 2",
                    nb.len()
                )));
            }
        }
        let mut cycle = Vec::with_capacity(n);
        let mut prev = usize::MAX;
        let mut cur = 0usize;
        loop {
            cycle.push(cur);
            let next = if nbrs[cur][0] != prev { nbrs[cur][0] } else { nbrs[cur][1] };
            prev = cur;
            cur = next;
            if cur == 0 {
                break;
            }
            if cycle.len() > n {
                return Err(Error::Geometry("edge set is not a single cycle".into()));
            }
        }
        if cycle.len() != n {
            return Err(Error::Geometry(format!(
                "cycle visits {} of {n} vertices; disconnected contour",
                cycle.len()
            )));
        }
        if signed_area(&self.vertices, &cycle) < T::zero() {
            cycle[1..].reverse();
        }
        Ok(cycle)
    }
}

/// Twice the shoelace sum would be the usual convention; here we return
/// the signed area itself (positive for counter-clockwise loops).
pub fn signed_area<T: Scalar>(vertices: &[[T; 3]], cycle: &[usize]) -> T {
    let n = cycle.len();
    let mut acc = T::zero();
    for i in 0..n {
        let a = vertices[cycle[i]];
        let b = vertices[cycle[(i + 1) % n]];
        acc += a[0] * b[1] - b[0] * a[1];
    }
    acc * T::half()
}

/// Outward normal of the directed contour edge `a -> b` times the edge
/// length, for a counter-clockwise contour: `(dy, -dx)`.
pub fn outward_normal_scaled<T: Scalar>(a: [T; 3], b: [T; 3]) -> [T; 2] {
    [b[1] - a[1], -(b[0] - a[0])]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Mesh<f64> {
        Mesh::contour(vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
        ])
    }

    #[test]
    fn contour_cycle_is_ccw_from_vertex_zero() {
        let cycle = square().contour_cycle().unwrap();
        assert_eq!(cycle, vec![0, 1, 2, 3]);
    }

    #[test]
    fn clockwise_input_is_canonicalized() {
        let cw = Mesh::contour(vec![
            [0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [1.0, 1.0, 0.0],
            [1.0, 0.0, 0.0],
        ]);
        let cycle = cw.contour_cycle().unwrap();
        assert_eq!(cycle[0], 0);
        assert!(signed_area(&cw.vertices, &cycle) > 0.0);
    }

    #[test]
    fn broken_cycle_is_rejected() {
        let mut mesh = square();
        mesh.edges.retain(|e| !(e[0] == 0 && e[1] == 1) && !(e[0] == 1 && e[1] == 0));
        assert!(mesh.contour_cycle().is_err());
    }

    #[test]
    fn asymmetric_edges_are_rejected() {
        let mut mesh = square();
        mesh.edges.pop();
        assert!(mesh.validate().is_err());
    }

    #[test]
    fn outward_normal_of_left_face_points_left() {
        // CCW square: left face runs from (0,1) down to (0,0).
        let n = outward_normal_scaled([0.0, 1.0, 0.0], [0.0, 0.0, 0.0]);
        assert_eq!(n, [-1.0, 0.0]);
    }

    #[test]
    fn json_schema_round_trips() {
        let mesh = square();
        let json = serde_json::to_string(&mesh).unwrap();
        assert!(json.contains("\"vertices\""));
        assert!(json.contains("\"edges\""));
        assert!(!json.contains("faces"), "optional empty fields stay absent");
        let back: Mesh<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, mesh);
    }
}
