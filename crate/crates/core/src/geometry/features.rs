//! Graph feature construction for the surrogate.
//!
//! Node attributes concatenate raw xyz coordinates with sinusoidal
//! encodings `sin(a x), sin(a y), sin(a z)` for integer frequencies
//! `a = 1..=A`; edge attributes are coordinate differences.

use crate::error::Result;
use crate::geometry::Mesh;
use crate::scalar::Scalar;

/// Node-attribute dimension for a given sinusoid count.
pub fn node_attr_dim(sinusoids: usize) -> usize {
    3 + 3 * sinusoids
}

/// Edge-attribute dimension (always coordinate differences).
pub const EDGE_ATTR_DIM: usize = 3;

/// Populates `node_attrs` and `edge_attrs` in place. Idempotent for a
/// fixed `(mesh, sinusoids)` pair since attributes are recomputed from
/// coordinates.
pub fn build_features<T: Scalar>(mesh: &mut Mesh<T>, sinusoids: usize) -> Result<()> {
    mesh.validate()?;
    let node_attrs = mesh
        .vertices
        .iter()
        .map(|v| {
            let mut attrs = Vec::with_capacity(node_attr_dim(sinusoids));
            attrs.extend_from_slice(v);
            for a in 1..=sinusoids {
                let freq = T::from_usize(a);
                attrs.push((freq * v[0]).sin());
                attrs.push((freq * v[1]).sin());
                attrs.push((freq * v[2]).sin());
            }
            attrs
        })
        .collect();
    let edge_attrs = mesh
        .edges
        .iter()
        .map(|e| {
            let (a, b) = (mesh.vertices[e[0]], mesh.vertices[e[1]]);
            vec![b[0] - a[0], b[1] - a[1], b[2] - a[2]]
        })
        .collect();
    mesh.node_attrs = Some(node_attrs);
    mesh.edge_attrs = Some(edge_attrs);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tri() -> Mesh<f64> {
        Mesh::contour(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.3, 0.8, 0.0]])
    }

    #[test]
    fn zero_sinusoids_is_raw_coordinates() {
        let mut mesh = tri();
        build_features(&mut mesh, 0).unwrap();
        let attrs = mesh.node_attrs.as_ref().unwrap();
        assert_eq!(attrs[1].len(), 3);
        assert_eq!(attrs[1], vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn origin_vertex_has_zero_sinusoids() {
        let mut mesh = tri();
        build_features(&mut mesh, 4).unwrap();
        let attrs = &mesh.node_attrs.as_ref().unwrap()[0];
        assert_eq!(attrs.len(), 15);
        assert!(attrs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn edge_attrs_are_antisymmetric() {
        let mut mesh = tri();
        build_features(&mut mesh, 2).unwrap();
        let edge_attrs = mesh.edge_attrs.as_ref().unwrap();
        for (i, e) in mesh.edges.iter().enumerate() {
            let rev = mesh.edges.iter().position(|r| r[0] == e[1] && r[1] == e[0]).unwrap();
            for c in 0..3 {
                assert_relative_eq!(edge_attrs[i][c], -edge_attrs[rev][c], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn idempotent_for_fixed_inputs() {
        let mut mesh = tri();
        build_features(&mut mesh, 3).unwrap();
        let first = mesh.clone();
        build_features(&mut mesh, 3).unwrap();
        assert_eq!(mesh, first);
    }
}
