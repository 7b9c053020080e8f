//! Shape parameterizations, mesh representation and graph features.

mod features;
mod knuckle;
mod latent;
mod mesh;
pub mod naca;
pub mod rbf;
mod parameterizer;

pub use features::{build_features, node_attr_dim, EDGE_ATTR_DIM};
pub use knuckle::{knuckle_preset, KnucklePreset};
pub use latent::LatentVector;
pub use mesh::{outward_normal_scaled, signed_area, Mesh};
pub use parameterizer::Parameterizer;

use crate::scalar::Scalar;

/// Closed circle contour with `n` vertices, vertex 0 on the +x axis,
/// counter-clockwise. Used as a panel-method verification shape.
pub fn circle_contour<T: Scalar>(n: usize, radius: T) -> Mesh<T> {
    let vertices = (0..n)
        .map(|k| {
            let th = T::two() * T::PI() * T::from_usize(k) / T::from_usize(n);
            [radius * th.cos(), radius * th.sin(), T::zero()]
        })
        .collect();
    Mesh::contour(vertices)
}
