//! 2D potential-flow solver: vortex panels with linearly varying
//! strength and a Kutta condition at the trailing edge.
//!
//! The contour is split into panels between consecutive cycle vertices.
//! Vortex strength is stored at panel endpoints and varies linearly
//! along each panel; the trailing-edge vertex is duplicated internally
//! so the Kutta condition `gamma_first + gamma_last = 0` closes a square
//! system together with one flow-tangency equation per panel midpoint.
//!
//! Sign convention: positive strength is counter-clockwise circulation.

use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::linalg::{lu_solve, DenseMatrix};
use crate::physics::functionals::Functional;
use crate::physics::sample::{FieldSample, TaskKind};
use crate::scalar::Scalar;

struct Panel<T> {
    start: [T; 2],
    len: T,
    /// Unit tangent.
    tx: T,
    ty: T,
}

impl<T: Scalar> Panel<T> {
    fn new(a: [T; 3], b: [T; 3]) -> Result<Self> {
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = (dx * dx + dy * dy).sqrt();
        if len <= T::from_f64(1e-12) {
            return Err(Error::Singular("degenerate zero-length panel".into()));
        }
        Ok(Self { start: [a[0], a[1]], len, tx: dx / len, ty: dy / len })
    }

    fn midpoint(&self) -> [T; 2] {
        let h = self.len * T::half();
        [self.start[0] + h * self.tx, self.start[1] + h * self.ty]
    }

    /// Outward unit normal for a counter-clockwise contour.
    fn normal(&self) -> [T; 2] {
        [self.ty, -self.tx]
    }

    /// Velocity induced at `p` by this panel carrying unit vortex
    /// strength at one endpoint, decaying linearly to zero at the other:
    /// returns `(va, vb)` for the start- and end-node shape functions.
    ///
    /// Exactly on the panel the principal value is returned (the
    /// tangential jump is excluded); callers add the one-sided jump when
    /// they need a surface velocity.
    fn shape_velocities(&self, p: [T; 2]) -> ([T; 2], [T; 2]) {
        let twopi = T::two() * T::PI();
        // Panel-local coordinates: x along the tangent, z along the left
        // normal.
        let (rx, ry) = (p[0] - self.start[0], p[1] - self.start[1]);
        let x = rx * self.tx + ry * self.ty;
        let z = -rx * self.ty + ry * self.tx;
        let len = self.len;
        let (r1s, r2s) = (x * x + z * z, (x - len) * (x - len) + z * z);
        if r1s == T::zero() || r2s == T::zero() {
            // Evaluation exactly at a panel endpoint is never needed by
            // the solver; return zero rather than NaN.
            return ([T::zero(); 2], [T::zero(); 2]);
        }
        // Subtended angle and log distance ratio; both finite for any
        // point off the endpoints.
        let beta = z.atan2(x - len) - z.atan2(x);
        let j0 = T::half() * (r1s / r2s).ln();
        let j1 = -len + z * beta + x * j0;
        // u = -(gamma1 beta + m (x beta - z j0)) / 2pi,
        // w = (gamma1 j0 + m j1) / 2pi, with m the strength slope.
        let lin = (x * beta - z * j0) / len;
        let ua = -(beta - lin) / twopi;
        let wa = (j0 - j1 / len) / twopi;
        let ub = -lin / twopi;
        let wb = (j1 / len) / twopi;
        // Back to global coordinates: v = u t + w n_left.
        let (nx, ny) = (-self.ty, self.tx);
        (
            [ua * self.tx + wa * nx, ua * self.ty + wa * ny],
            [ub * self.tx + wb * nx, ub * self.ty + wb * ny],
        )
    }
}

fn check_no_self_intersection<T: Scalar>(pts: &[[T; 2]]) -> Result<()> {
    let n = pts.len();
    let seg = |i: usize| (pts[i], pts[(i + 1) % n]);
    let orient = |a: [T; 2], b: [T; 2], c: [T; 2]| {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    };
    for i in 0..n {
        for j in i + 1..n {
            // Skip adjacent segments (they share an endpoint).
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (a, b) = seg(i);
            let (c, d) = seg(j);
            let (o1, o2) = (orient(a, b, c), orient(a, b, d));
            let (o3, o4) = (orient(c, d, a), orient(c, d, b));
            if ((o1 > T::zero()) != (o2 > T::zero()))
                && ((o3 > T::zero()) != (o4 > T::zero()))
                && o1 != T::zero()
                && o2 != T::zero()
                && o3 != T::zero()
                && o4 != T::zero()
            {
                return Err(Error::Geometry(format!(
                    "contour is self-intersecting (segments {i} and {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Solves the potential flow around a closed contour at angle of attack
/// `alpha` and freestream speed `v_inf`.
///
/// Returns a [`FieldSample`] carrying the pressure coefficient as a node
/// field (each node averages its two adjacent panel midpoints) and the
/// lift coefficient — the pressure-integral `R(field)` of the airfoil
/// task — as performance.
pub fn panel_solve<T: Scalar>(contour: &Mesh<T>, alpha: T, v_inf: T) -> Result<FieldSample<T>> {
    if v_inf <= T::zero() {
        return Err(Error::Config("freestream speed must be positive".into()));
    }
    let cycle = contour.contour_cycle()?;
    let n = cycle.len();
    if n < 16 {
        return Err(Error::Geometry(format!("need at least 16 panels, got {n}")));
    }
    let pts: Vec<[T; 2]> = cycle
        .iter()
        .map(|&i| [contour.vertices[i][0], contour.vertices[i][1]])
        .collect();
    check_no_self_intersection(&pts)?;
    let panels: Vec<Panel<T>> = (0..n)
        .map(|i| {
            Panel::new(
                contour.vertices[cycle[i]],
                contour.vertices[cycle[(i + 1) % n]],
            )
        })
        .collect::<Result<_>>()?;

    // Unknowns: endpoint strengths gamma_0..gamma_n, where node n is the
    // duplicated trailing-edge node (cycle vertex 0).
    let freestream = [v_inf * alpha.cos(), v_inf * alpha.sin()];
    let mut a = DenseMatrix::zeros(n + 1, n + 1);
    let mut rhs = vec![T::zero(); n + 1];
    for (i, pi) in panels.iter().enumerate() {
        let m = pi.midpoint();
        let nrm = pi.normal();
        for (j, pj) in panels.iter().enumerate() {
            let (va, vb) = if i == j {
                // Self influence: principal value has no normal jump and
                // only the linear-strength term survives.
                let inv = (T::two() * T::PI()).recip();
                let nl = [-pj.ty, pj.tx];
                ([nl[0] * inv, nl[1] * inv], [-nl[0] * inv, -nl[1] * inv])
            } else {
                pj.shape_velocities(m)
            };
            a.add_at(i, j, va[0] * nrm[0] + va[1] * nrm[1]);
            a.add_at(i, j + 1, vb[0] * nrm[0] + vb[1] * nrm[1]);
        }
        rhs[i] = -(freestream[0] * nrm[0] + freestream[1] * nrm[1]);
    }
    // Kutta condition at the trailing edge.
    a.set(n, 0, T::one());
    a.set(n, n, T::one());
    let gamma = lu_solve(a, rhs)
        .map_err(|_| Error::Singular("singular influence matrix".into()))?;

    // Surface pressure at panel midpoints, exterior side.
    let mut cp_panel = Vec::with_capacity(n);
    for (i, pi) in panels.iter().enumerate() {
        let m = pi.midpoint();
        let mut v = freestream;
        for (j, pj) in panels.iter().enumerate() {
            if i == j {
                continue;
            }
            let (va, vb) = pj.shape_velocities(m);
            v[0] += va[0] * gamma[j] + vb[0] * gamma[j + 1];
            v[1] += va[1] * gamma[j] + vb[1] * gamma[j + 1];
        }
        // Own panel: principal-value normal term is zero at the midpoint
        // by symmetry; the exterior tangential limit adds +gamma_mid/2
        // along the tangent (the interior of a CCW contour lies on the
        // left, so the flow side is the right).
        let gmid = (gamma[i] + gamma[i + 1]) * T::half();
        v[0] += gmid * T::half() * pi.tx;
        v[1] += gmid * T::half() * pi.ty;
        let speed2 = v[0] * v[0] + v[1] * v[1];
        cp_panel.push(T::one() - speed2 / (v_inf * v_inf));
    }

    // Node field: average the two panel midpoints adjacent to each node.
    let mut field = vec![T::zero(); contour.vertex_count()];
    for i in 0..n {
        let node = cycle[(i + 1) % n]; // node between panel i and i+1
        field[node] = (cp_panel[i] + cp_panel[(i + 1) % n]) * T::half();
    }

    let functional = Functional::AirfoilLift { alpha };
    let performance = functional.eval(contour, &field)?;
    Ok(FieldSample {
        mesh: contour.clone(),
        field,
        performance,
        task: TaskKind::AirfoilLift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::naca::{naca_bounds, naca_contour};
    use crate::geometry::{circle_contour, LatentVector};
    use approx::assert_relative_eq;

    /// Quadrature oracle: integrate the point-vortex kernel along the
    /// panel with the linear shape functions.
    fn quadrature_shape_velocities(
        panel: &Panel<f64>,
        p: [f64; 2],
        steps: usize,
    ) -> ([f64; 2], [f64; 2]) {
        let mut va = [0.0; 2];
        let mut vb = [0.0; 2];
        for s in 0..steps {
            let t = (s as f64 + 0.5) / steps as f64;
            let q = [
                panel.start[0] + t * panel.len * panel.tx,
                panel.start[1] + t * panel.len * panel.ty,
            ];
            let (dx, dy) = (p[0] - q[0], p[1] - q[1]);
            let r2 = dx * dx + dy * dy;
            let ds = panel.len / steps as f64;
            // CCW point vortex: v = gamma/(2 pi r^2) (-dy, dx).
            let k = ds / (2.0 * std::f64::consts::PI * r2);
            va[0] += (1.0 - t) * k * (-dy);
            va[1] += (1.0 - t) * k * dx;
            vb[0] += t * k * (-dy);
            vb[1] += t * k * dx;
        }
        (va, vb)
    }

    #[test]
    fn induced_velocity_matches_quadrature() {
        let panel = Panel::new([0.1, -0.2, 0.0], [0.9, 0.3, 0.0]).unwrap();
        for p in [[0.5, 0.7], [-0.4, 0.1], [1.3, -0.6], [0.5, 0.049]] {
            let (va, vb) = panel.shape_velocities(p);
            let (qa, qb) = quadrature_shape_velocities(&panel, p, 200_000);
            for c in 0..2 {
                assert_relative_eq!(va[c], qa[c], epsilon = 1e-6, max_relative = 1e-5);
                assert_relative_eq!(vb[c], qb[c], epsilon = 1e-6, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn cylinder_pressure_matches_potential_flow() {
        // 128-panel circle at alpha = 0: Cp(theta) = 1 - 4 sin^2(theta).
        let mesh = circle_contour::<f64>(128, 0.5);
        let sample = panel_solve(&mesh, 0.0, 1.0).unwrap();
        let mut max_err = 0.0f64;
        for (k, v) in mesh.vertices.iter().enumerate() {
            let theta = v[1].atan2(v[0]);
            let exact = 1.0 - 4.0 * theta.sin() * theta.sin();
            max_err = max_err.max((sample.field[k] - exact).abs());
        }
        assert!(max_err < 0.05, "max Cp error {max_err}");
    }

    #[test]
    fn symmetric_airfoil_has_zero_lift() {
        let z = LatentVector::<f64>::new(vec![0.0, 0.4, 0.12], naca_bounds()).unwrap();
        let mesh = naca_contour(&z, 96).unwrap();
        let sample = panel_solve(&mesh, 0.0, 1.0).unwrap();
        assert!(sample.performance.abs() < 1e-6, "Cl = {}", sample.performance);
    }

    #[test]
    fn lift_slope_is_positive() {
        let z = LatentVector::new(vec![0.02, 0.4, 0.12], naca_bounds()).unwrap();
        let mesh = naca_contour(&z, 96).unwrap();
        let cl0 = panel_solve(&mesh, 0.0, 1.0).unwrap().performance;
        let cl4 = panel_solve(&mesh, 4.0f64.to_radians(), 1.0).unwrap().performance;
        assert!(cl4 > cl0, "Cl(4deg) = {cl4} <= Cl(0) = {cl0}");
        assert!(cl0 > 0.0, "cambered foil should lift at alpha = 0, got {cl0}");
    }

    #[test]
    fn solver_is_deterministic() {
        let z = LatentVector::new(vec![0.03, 0.5, 0.15], naca_bounds()).unwrap();
        let mesh = naca_contour(&z, 64).unwrap();
        let a = panel_solve(&mesh, 0.05, 1.0).unwrap();
        let b = panel_solve(&mesh, 0.05, 1.0).unwrap();
        assert_eq!(a.field, b.field);
        assert_eq!(a.performance, b.performance);
    }

    #[test]
    fn self_intersection_is_rejected() {
        // {24/7} star polygon: every edge crosses others.
        let pts: Vec<[f64; 3]> = (0..24)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * ((k * 7) % 24) as f64 / 24.0;
                [th.cos(), th.sin(), 0.0]
            })
            .collect();
        let mesh = Mesh::contour(pts);
        match panel_solve(&mesh, 0.0, 1.0) {
            Err(Error::Geometry(_)) => {}
            other => panic!("expected geometry error, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_panel_is_rejected() {
        let mut pts: Vec<[f64; 3]> = (0..24)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / 24.0;
                [th.cos(), th.sin(), 0.0]
            })
            .collect();
        pts[5] = pts[4]; // zero-length panel
        let mesh = Mesh::contour(pts);
        assert!(matches!(panel_solve(&mesh, 0.0, 1.0), Err(Error::Singular(_))));
    }
}
