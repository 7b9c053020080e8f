//! NACA 4-digit airfoil contours with analytic latent Jacobians.
//!
//! The latent vector is `(m, p, t)`: maximum camber, camber position and
//! thickness, all as chord fractions. Contours are cosine-spaced in the
//! chordwise coordinate and use the closed-trailing-edge thickness
//! polynomial so the loop closes exactly.

use crate::error::{Error, Result};
use crate::geometry::{LatentVector, Mesh};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Validity box for the 4-digit family: m in [0, 0.09], p in [0.1, 0.9],
/// t in [0.06, 0.30].
pub fn naca_bounds<T: Scalar>() -> Vec<(T, T)> {
    vec![
        (T::zero(), T::from_f64(0.09)),
        (T::from_f64(0.1), T::from_f64(0.9)),
        (T::from_f64(0.06), T::from_f64(0.30)),
    ]
}

/// Thickness distribution shape (closed trailing edge), without the
/// `5 t` factor.
pub fn thickness_poly<T: Scalar>(x: T) -> T {
    let c = [0.2969, -0.1260, -0.3516, 0.2843, -0.1036].map(T::from_f64);
    c[0] * x.sqrt() + x * (c[1] + x * (c[2] + x * (c[3] + x * c[4])))
}

/// Half-thickness normal to the camber line at chord station `x`.
pub fn half_thickness<T: Scalar>(t: T, x: T) -> T {
    T::from_f64(5.0) * t * thickness_poly(x)
}

/// Camber line value divided by `m`, so `m = 0` needs no special case.
fn camber_ratio<T: Scalar>(p: T, x: T) -> T {
    if x <= p {
        (T::two() * p * x - x * x) / (p * p)
    } else {
        let q = T::one() - p;
        ((T::one() - T::two() * p) + T::two() * p * x - x * x) / (q * q)
    }
}

/// Camber slope dy_c/dx divided by `m`.
fn slope_ratio<T: Scalar>(p: T, x: T) -> T {
    if x <= p {
        T::two() * (p - x) / (p * p)
    } else {
        let q = T::one() - p;
        T::two() * (p - x) / (q * q)
    }
}

/// d(y_c)/dp at fixed (m, x).
fn camber_dp<T: Scalar>(m: T, p: T, x: T) -> T {
    if x <= p {
        T::two() * m * x * (x - p) / (p * p * p)
    } else {
        let q = T::one() - p;
        T::two() * m * (T::one() - x) * (x - p) / (q * q * q)
    }
}

/// d(slope)/dp at fixed (m, x).
fn slope_dp<T: Scalar>(m: T, p: T, x: T) -> T {
    if x <= p {
        T::two() * m * (T::two() * x - p) / (p * p * p)
    } else {
        let q = T::one() - p;
        T::two() * m * (T::one() + p - T::two() * x) / (q * q * q)
    }
}

fn check_inputs<T: Scalar>(z: &LatentVector<T>, n_panels: usize) -> Result<(T, T, T)> {
    if n_panels < 16 || n_panels % 2 != 0 {
        return Err(Error::Config(format!(
            "n_panels must be even and >= 16, got {n_panels}"
        )));
    }
    if z.dim() != 3 {
        return Err(Error::Config(format!("NACA latent must have dim 3, got {}", z.dim())));
    }
    for (i, (&v, (lo, hi))) in z.values.iter().zip(naca_bounds::<T>()).enumerate() {
        if v < lo || v > hi {
            return Err(Error::Bounds(format!(
                "NACA parameter {i} = {v} outside [{lo}, {hi}]"
            )));
        }
    }
    Ok((z.values[0], z.values[1], z.values[2]))
}

/// Chordwise station of contour vertex `k`: cosine spacing over the full
/// loop, so `k = 0` is the trailing edge and `k = n/2` the leading edge.
fn station<T: Scalar>(k: usize, n: usize) -> T {
    let phi = T::two() * T::PI() * T::from_usize(k) / T::from_usize(n);
    (T::one() + phi.cos()) * T::half()
}

/// Builds the closed 4-digit contour with `n_panels` vertices.
///
/// Vertices run counter-clockwise: trailing edge, upper surface, leading
/// edge, lower surface. Thickness is applied perpendicular to the camber
/// line.
pub fn naca_contour<T: Scalar>(z: &LatentVector<T>, n_panels: usize) -> Result<Mesh<T>> {
    let (m, p, t) = check_inputs(z, n_panels)?;
    let mut vertices = Vec::with_capacity(n_panels);
    for k in 0..n_panels {
        let x = station::<T>(k, n_panels);
        let yc = m * camber_ratio(p, x);
        let g = m * slope_ratio(p, x);
        let inv = (T::one() + g * g).sqrt().recip();
        let (sin_t, cos_t) = (g * inv, inv);
        let yt = half_thickness(t, x);
        // k in (0, n/2) is the upper surface; the rest is lower.
        let upper = k > 0 && k < n_panels / 2;
        let sign = if upper { T::one() } else { -T::one() };
        vertices.push([x - sign * yt * sin_t, yc + sign * yt * cos_t, T::zero()]);
    }
    // TE and LE stations JSON-exact: thickness and camber vanish there,
    // so vertex 0 is (1, 0) and vertex n/2 is (0, 0) up to roundoff.
    Ok(Mesh::contour(vertices))
}

/// Analytic Jacobian of the vertex coordinates with respect to
/// `(m, p, t)`, laid out as a `(3 |V|) x 3` matrix with row `3 i + c`
/// holding coordinate `c` of vertex `i`.
pub fn naca_jacobian<T: Scalar>(z: &LatentVector<T>, n_panels: usize) -> Result<DenseMatrix<T>> {
    let (m, p, t) = check_inputs(z, n_panels)?;
    let mut jac = DenseMatrix::zeros(3 * n_panels, 3);
    for k in 0..n_panels {
        let x = station::<T>(k, n_panels);
        let g = m * slope_ratio(p, x);
        let inv = (T::one() + g * g).sqrt().recip();
        let (sin_t, cos_t) = (g * inv, inv);
        // d(sin)/dg = cos^3, d(cos)/dg = -sin cos^2.
        let dsin_dg = cos_t * cos_t * cos_t;
        let dcos_dg = -sin_t * cos_t * cos_t;
        let yt = half_thickness(t, x);
        let yt_dt = T::from_f64(5.0) * thickness_poly(x);
        let (yc_dm, g_dm) = (camber_ratio(p, x), slope_ratio(p, x));
        let (yc_dp, g_dp) = (camber_dp(m, p, x), slope_dp(m, p, x));
        let upper = k > 0 && k < n_panels / 2;
        let sign = if upper { T::one() } else { -T::one() };
        // X = x - sign yt sin, Y = yc + sign yt cos.
        jac.set(3 * k, 0, -sign * yt * dsin_dg * g_dm);
        jac.set(3 * k + 1, 0, yc_dm + sign * yt * dcos_dg * g_dm);
        jac.set(3 * k, 1, -sign * yt * dsin_dg * g_dp);
        jac.set(3 * k + 1, 1, yc_dp + sign * yt * dcos_dg * g_dp);
        jac.set(3 * k, 2, -sign * yt_dt * sin_t);
        jac.set(3 * k + 1, 2, sign * yt_dt * cos_t);
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn latent(m: f64, p: f64, t: f64) -> LatentVector<f64> {
        LatentVector::new(vec![m, p, t], naca_bounds()).unwrap()
    }

    /// Independent evaluation of the published thickness polynomial,
    /// written out term by term rather than through `thickness_poly`.
    fn oracle_half_thickness(t: f64, x: f64) -> f64 {
        5.0 * t
            * (0.2969 * x.sqrt() - 0.1260 * x - 0.3516 * x * x + 0.2843 * x * x * x
                - 0.1036 * x * x * x * x)
    }

    #[test]
    fn half_thickness_matches_polynomial_oracle() {
        // Frozen from the oracle at x = 0.3, t = 0.12.
        let expected = oracle_half_thickness(0.12, 0.3);
        assert_relative_eq!(expected, 0.060007060394, epsilon = 1e-9);
        assert!((half_thickness(0.12, 0.3) - expected).abs() < 1e-4);
    }

    #[test]
    fn zero_camber_is_mirror_symmetric() {
        let mesh = naca_contour(&latent(0.0, 0.4, 0.12), 64).unwrap();
        for k in 1..32 {
            let up = mesh.vertices[k];
            let lo = mesh.vertices[64 - k];
            assert_relative_eq!(up[0], lo[0], epsilon = 1e-12);
            assert_relative_eq!(up[1], -lo[1], epsilon = 1e-12);
        }
    }

    #[test]
    fn contour_is_closed_with_fixed_edge_count() {
        let mesh = naca_contour(&latent(0.02, 0.4, 0.12), 48).unwrap();
        assert_eq!(mesh.vertex_count(), 48);
        let cycle = mesh.contour_cycle().unwrap();
        assert_eq!(cycle.len(), 48);
        // Trailing edge is a single shared vertex at (1, 0).
        assert_relative_eq!(mesh.vertices[0][0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(mesh.vertices[0][1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn topology_depends_only_on_panel_count() {
        let a = naca_contour(&latent(0.0, 0.2, 0.06), 32).unwrap();
        let b = naca_contour(&latent(0.09, 0.9, 0.30), 32).unwrap();
        assert_eq!(a.edges, b.edges);
    }

    #[test]
    fn determinism_is_bitwise() {
        let a = naca_contour(&latent(0.031, 0.43, 0.17), 64).unwrap();
        let b = naca_contour(&latent(0.031, 0.43, 0.17), 64).unwrap();
        assert_eq!(a.vertices, b.vertices);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(matches!(naca_contour(&latent(0.0, 0.4, 0.12), 17), Err(Error::Config(_))));
        assert!(matches!(naca_contour(&latent(0.0, 0.4, 0.12), 8), Err(Error::Config(_))));
        let wide = LatentVector::clamped(vec![0.2, 0.4, 0.12], vec![(0.0, 1.0); 3]);
        assert!(matches!(naca_contour(&wide, 32), Err(Error::Bounds(_))));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        // 5 fixed in-bounds points; step 1e-6, rel err < 1e-5 per column.
        let cases = [
            (0.02, 0.40, 0.12),
            (0.05, 0.25, 0.09),
            (0.08, 0.62, 0.21),
            (0.01, 0.81, 0.28),
            (0.045, 0.50, 0.15),
        ];
        let n = 32;
        for (m, p, t) in cases {
            let jac = naca_jacobian(&latent(m, p, t), n).unwrap();
            let h = 1e-6;
            for col in 0..3 {
                let mut zp = [m, p, t];
                let mut zm = [m, p, t];
                zp[col] += h;
                zm[col] -= h;
                let vp = naca_contour(&latent(zp[0], zp[1], zp[2]), n).unwrap().vertices;
                let vm = naca_contour(&latent(zm[0], zm[1], zm[2]), n).unwrap().vertices;
                let mut num = 0.0f64;
                let mut den = 0.0f64;
                for k in 0..n {
                    for c in 0..2 {
                        let fd = (vp[k][c] - vm[k][c]) / (2.0 * h);
                        let an = jac.get(3 * k + c, col);
                        num += (fd - an) * (fd - an);
                        den += fd * fd;
                    }
                }
                let rel = (num / den.max(1e-30)).sqrt();
                assert!(rel < 1e-5, "column {col} rel err {rel} at ({m},{p},{t})");
            }
        }
    }

    #[test]
    fn jacobian_has_no_zero_columns() {
        let jac = naca_jacobian(&latent(0.03, 0.4, 0.12), 32).unwrap();
        for col in 0..3 {
            let norm: f64 = (0..jac.rows()).map(|r| jac.get(r, col).abs()).sum();
            assert!(norm > 1e-6, "column {col} is all zero");
        }
    }
}
