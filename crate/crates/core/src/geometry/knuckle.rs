//! Desk-scale 2D knuckle: a ring with a handle attached at the top.
//!
//! The part is meshed with a structured triangulation — an annulus plus
//! a handle grid that conforms to the outer ring nodes in the top
//! sector. Nine directional RBF controls sit around the ring/handle
//! joint, the fragile region whose shape the optimizer tunes.

use crate::geometry::Mesh;
use crate::scalar::Scalar;

/// Base knuckle mesh plus everything a task needs to wire it up:
/// control points (with displacement directions), fixed inner-circle
/// nodes and handle-tip nodes.
#[derive(Debug, Clone)]
pub struct KnucklePreset<T> {
    pub mesh: Mesh<T>,
    pub controls: Vec<[T; 2]>,
    pub directions: Vec<[T; 2]>,
    pub fixed: Vec<usize>,
    pub tip: Vec<usize>,
    /// Gaussian kernel width for the RBF parameterizer.
    pub rbf_width: T,
}

/// Builds the standard knuckle: inner radius 0.45, outer 0.85, handle
/// reaching y = 2.4, about 170 nodes.
pub fn knuckle_preset<T: Scalar>() -> KnucklePreset<T> {
    let f = T::from_f64;
    let n_theta = 48usize;
    let n_ring_layers = 2usize; // radial element layers
    let r_inner = 0.45f64;
    let r_outer = 0.85f64;
    let y_tip = 2.4f64;
    let handle_rows = 6usize;
    // Handle occupies the sector around 90 degrees: columns are the
    // outer-ring nodes whose sector index falls in [10, 14] for
    // n_theta = 48 (75..105 degrees).
    let col_lo = 10usize;
    let col_hi = 14usize;

    let mut vertices: Vec<[T; 3]> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    // Annulus nodes: layer-major, node(layer, k) at radius
    // r_inner + layer * dr and angle 2 pi k / n_theta.
    let dr = (r_outer - r_inner) / n_ring_layers as f64;
    let idx = |layer: usize, k: usize| layer * n_theta + (k % n_theta);
    for layer in 0..=n_ring_layers {
        let r = r_inner + dr * layer as f64;
        for k in 0..n_theta {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n_theta as f64;
            vertices.push([f(r * th.cos()), f(r * th.sin()), T::zero()]);
        }
    }
    for layer in 0..n_ring_layers {
        for k in 0..n_theta {
            let (a, b) = (idx(layer, k), idx(layer, k + 1));
            let (c, d) = (idx(layer + 1, k), idx(layer + 1, k + 1));
            // Split each quad along the a-d diagonal; (theta, r) -> (x, y)
            // reverses orientation, so the CCW order is a, d, b.
            faces.push([a, d, b]);
            faces.push([a, c, d]);
        }
    }

    // Handle columns share the outer-ring nodes col_lo..=col_hi.
    let base_cols: Vec<usize> = (col_lo..=col_hi).map(|k| idx(n_ring_layers, k)).collect();
    let n_cols = base_cols.len();
    let mut handle_rows_idx: Vec<Vec<usize>> = vec![base_cols.clone()];
    for row in 1..=handle_rows {
        let mut this_row = Vec::with_capacity(n_cols);
        for &b in &base_cols {
            let bx = vertices[b][0].as_f64();
            let by = vertices[b][1].as_f64();
            let y = by + (y_tip - by) * row as f64 / handle_rows as f64;
            this_row.push(vertices.len());
            vertices.push([f(bx), f(y), T::zero()]);
        }
        handle_rows_idx.push(this_row);
    }
    for row in 0..handle_rows {
        for c in 0..n_cols - 1 {
            let a = handle_rows_idx[row][c];
            let b = handle_rows_idx[row][c + 1];
            let cc = handle_rows_idx[row + 1][c];
            let d = handle_rows_idx[row + 1][c + 1];
            // Columns run with decreasing x (angles increase past 90deg),
            // so (a -> b) points -x and (a, cc) points +y; keep CCW.
            faces.push([a, cc, b]);
            faces.push([b, cc, d]);
        }
    }

    let fixed: Vec<usize> = (0..n_theta).collect();
    let tip = handle_rows_idx[handle_rows].clone();

    // Nine directional controls around the joint: shoulders on the ring,
    // lower handle flanks, and the joint corners; each displaces along
    // an outward direction so positive latents add material.
    let joint_y = r_outer * (75.0f64.to_radians().sin());
    let half_w = r_outer * (75.0f64.to_radians().cos());
    let mk = |x: f64, y: f64| [f(x), f(y)];
    let controls = vec![
        mk(half_w, joint_y),                     // right joint corner
        mk(-half_w, joint_y),                    // left joint corner
        mk(half_w, joint_y + 0.35),              // right handle flank, low
        mk(-half_w, joint_y + 0.35),             // left handle flank, low
        mk(half_w, joint_y + 0.75),              // right handle flank, mid
        mk(-half_w, joint_y + 0.75),             // left handle flank, mid
        mk(r_outer * 0.94, r_outer * 0.48),      // right ring shoulder
        mk(-r_outer * 0.94, r_outer * 0.48),     // left ring shoulder
        mk(0.0, r_outer),                        // joint center, outward
    ];
    let directions = vec![
        mk(1.0, 0.2),
        mk(-1.0, 0.2),
        mk(1.0, 0.0),
        mk(-1.0, 0.0),
        mk(1.0, 0.0),
        mk(-1.0, 0.0),
        mk(0.8, 0.6),
        mk(-0.8, 0.6),
        mk(0.0, 1.0),
    ];

    let mesh = Mesh::triangulated(vertices, faces);
    KnucklePreset { mesh, controls, directions, fixed, tip, rbf_width: f(0.35) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_is_valid_and_positively_oriented() {
        let preset: KnucklePreset<f64> = knuckle_preset();
        preset.mesh.validate().unwrap();
        let faces = preset.mesh.faces.as_ref().unwrap();
        for face in faces {
            let [a, b, c] = face.map(|i| preset.mesh.vertices[i]);
            let area2 = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            assert!(area2 > 0.0, "inverted face {face:?}");
        }
    }

    #[test]
    fn fixed_and_tip_nodes_are_where_expected() {
        let preset: KnucklePreset<f64> = knuckle_preset();
        for &i in &preset.fixed {
            let v = preset.mesh.vertices[i];
            let r = (v[0] * v[0] + v[1] * v[1]).sqrt();
            assert!((r - 0.45).abs() < 1e-12);
        }
        for &i in &preset.tip {
            assert!((preset.mesh.vertices[i][1] - 2.4).abs() < 1e-12);
        }
        assert_eq!(preset.controls.len(), 9);
        assert_eq!(preset.directions.len(), 9);
    }

    #[test]
    fn size_is_desk_scale() {
        let preset: KnucklePreset<f64> = knuckle_preset();
        let n = preset.mesh.vertex_count();
        assert!((120..400).contains(&n), "vertex count {n}");
    }
}
