//! Linear plane-stress FEM on constant-strain triangles with a direct
//! dense solve. Meshes here are a few hundred vertices, which keeps the
//! stiffness matrix comfortably dense.

use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::linalg::{lu_solve, DenseMatrix};
use crate::physics::sample::{FieldSample, LoadCase, TaskKind};
use crate::scalar::Scalar;

/// Plane-stress von Mises equivalent:
/// `sqrt(sxx^2 - sxx syy + syy^2 + 3 txy^2)`.
pub fn von_mises<T: Scalar>(sxx: T, syy: T, txy: T) -> T {
    (sxx * sxx - sxx * syy + syy * syy + T::from_f64(3.0) * txy * txy).sqrt()
}

struct Triangle<T> {
    nodes: [usize; 3],
    area: T,
    /// Shape-function gradient coefficients: b_i = y_j - y_k,
    /// c_i = x_k - x_j.
    b: [T; 3],
    c: [T; 3],
}

fn triangles<T: Scalar>(mesh: &Mesh<T>) -> Result<Vec<Triangle<T>>> {
    let faces = mesh
        .faces
        .as_ref()
        .ok_or_else(|| Error::Geometry("FEM requires a triangulated mesh".into()))?;
    faces
        .iter()
        .map(|f| {
            let [i, j, k] = *f;
            let (p, q, r) = (mesh.vertices[i], mesh.vertices[j], mesh.vertices[k]);
            let area2 = (q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]);
            if area2 <= T::zero() {
                return Err(Error::Geometry(format!(
                    "inverted or degenerate triangle ({i}, {j}, {k})"
                )));
            }
            Ok(Triangle {
                nodes: [i, j, k],
                area: area2 * T::half(),
                b: [q[1] - r[1], r[1] - p[1], p[1] - q[1]],
                c: [r[0] - q[0], p[0] - r[0], q[0] - p[0]],
            })
        })
        .collect()
}

/// Solves for nodal displacements under the given load case.
pub fn fem_displacements<T: Scalar>(mesh: &Mesh<T>, case: &LoadCase<T>) -> Result<Vec<[T; 2]>> {
    let n = mesh.vertex_count();
    case.validate(n)?;
    let tris = triangles(mesh)?;
    let e = case.youngs_modulus;
    let nu = case.poisson_ratio;
    let d0 = e / (T::one() - nu * nu);
    // Plane-stress constitutive rows: [d0, d0 nu, 0; d0 nu, d0, 0; 0, 0, dg].
    let dg = d0 * (T::one() - nu) * T::half();

    let mut k = DenseMatrix::zeros(2 * n, 2 * n);
    for tri in &tris {
        let inv2a = (T::two() * tri.area).recip();
        // B rows scaled by 1/(2A); Ke = A * B^T D B.
        for a in 0..3 {
            for bidx in 0..3 {
                let (ba, ca) = (tri.b[a] * inv2a, tri.c[a] * inv2a);
                let (bb, cb) = (tri.b[bidx] * inv2a, tri.c[bidx] * inv2a);
                // 2x2 block coupling node a and node b.
                let kxx = tri.area * (d0 * ba * bb + dg * ca * cb);
                let kxy = tri.area * (d0 * nu * ba * cb + dg * ca * bb);
                let kyx = tri.area * (d0 * nu * ca * bb + dg * ba * cb);
                let kyy = tri.area * (d0 * ca * cb + dg * ba * bb);
                let (ia, ib) = (tri.nodes[a], tri.nodes[bidx]);
                k.add_at(2 * ia, 2 * ib, kxx);
                k.add_at(2 * ia, 2 * ib + 1, kxy);
                k.add_at(2 * ia + 1, 2 * ib, kyx);
                k.add_at(2 * ia + 1, 2 * ib + 1, kyy);
            }
        }
    }

    let mut f = vec![T::zero(); 2 * n];
    for (i, load) in case.loads.iter().enumerate() {
        f[2 * i] = load[0];
        f[2 * i + 1] = load[1];
    }

    // Dirichlet rows/columns: zero out and put 1 on the diagonal. The
    // diagonal unit keeps the matrix well scaled because loads are zeroed
    // on those rows too.
    for &v in &case.fixed_vertex_ids {
        for dof in [2 * v, 2 * v + 1] {
            for c in 0..2 * n {
                k.set(dof, c, T::zero());
                k.set(c, dof, T::zero());
            }
            k.set(dof, dof, T::one());
            f[dof] = T::zero();
        }
    }

    let u = lu_solve(k, f)
        .map_err(|_| Error::Constraint("singular stiffness matrix (under-constrained)".into()))?;
    Ok((0..n).map(|i| [u[2 * i], u[2 * i + 1]]).collect())
}

/// Per-element plane stress `(sxx, syy, txy)` from nodal displacements.
fn element_stresses<T: Scalar>(
    tris: &[Triangle<T>],
    case: &LoadCase<T>,
    u: &[[T; 2]],
) -> Vec<[T; 3]> {
    let e = case.youngs_modulus;
    let nu = case.poisson_ratio;
    let d0 = e / (T::one() - nu * nu);
    let dg = d0 * (T::one() - nu) * T::half();
    tris.iter()
        .map(|tri| {
            let inv2a = (T::two() * tri.area).recip();
            let mut exx = T::zero();
            let mut eyy = T::zero();
            let mut gxy = T::zero();
            for a in 0..3 {
                let (ux, uy) = (u[tri.nodes[a]][0], u[tri.nodes[a]][1]);
                exx += tri.b[a] * inv2a * ux;
                eyy += tri.c[a] * inv2a * uy;
                gxy += tri.c[a] * inv2a * ux + tri.b[a] * inv2a * uy;
            }
            [d0 * (exx + nu * eyy), d0 * (nu * exx + eyy), dg * gxy]
        })
        .collect()
}

/// Plane-stress solve returning nodal von Mises stress (element values
/// averaged per node with area weights) and the maximum as performance.
pub fn fem_plane_stress<T: Scalar>(mesh: &Mesh<T>, case: &LoadCase<T>) -> Result<FieldSample<T>> {
    let u = fem_displacements(mesh, case)?;
    let tris = triangles(mesh)?;
    let stresses = element_stresses(&tris, case, &u);
    let n = mesh.vertex_count();
    let mut weighted = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    for (tri, s) in tris.iter().zip(&stresses) {
        let vm = von_mises(s[0], s[1], s[2]);
        for &node in &tri.nodes {
            weighted[node] += tri.area * vm;
            weights[node] += tri.area;
        }
    }
    let field: Vec<T> = weighted
        .iter()
        .zip(&weights)
        .map(|(&w, &a)| if a > T::zero() { w / a } else { T::zero() })
        .collect();
    let performance = field.iter().copied().fold(T::neg_infinity(), T::max);
    Ok(FieldSample { mesh: mesh.clone(), field, performance, task: TaskKind::MaxStress })
}
