//! P1 finite-element forms: stiffness, volume mass, boundary mass and the
//! discrete trace.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::Mesh;

/// Assembled bilinear forms of one mesh.
///
/// Boundary quantities are indexed by position in [`Mesh::boundary_nodes`].
#[derive(Debug, Clone)]
pub struct FormSet {
    /// `∫∇u·∇v`.
    pub stiffness: DMatrix<f64>,
    /// `∫uv` over the domain.
    pub mass: DMatrix<f64>,
    /// `∫uv` over the boundary.
    pub boundary_mass: DMatrix<f64>,
    /// 0/1 restriction to boundary nodes (`nb × n`).
    pub trace: DMatrix<f64>,
    pub boundary_nodes: Vec<usize>,
    pub interior_nodes: Vec<usize>,
}

impl FormSet {
    pub fn num_nodes(&self) -> usize {
        self.stiffness.nrows()
    }

    pub fn num_boundary(&self) -> usize {
        self.boundary_nodes.len()
    }

    /// Boundary values of a nodal vector.
    pub fn restrict(&self, u: &nalgebra::DVector<f64>) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(self.boundary_nodes.len(), self.boundary_nodes.iter().map(|&i| u[i]))
    }
}

/// Exact P1 integration of all forms.
///
/// Fails with [`Error::DegenerateTriangle`] on a triangle with non-positive
/// area.
pub fn assemble_forms(mesh: &Mesh) -> Result<FormSet> {
    let n = mesh.num_nodes();
    let nodes = mesh.nodes();
    let mut stiffness = DMatrix::zeros(n, n);
    let mut mass = DMatrix::zeros(n, n);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_signed_area(t);
        if !(area > 0.0) {
            return Err(Error::DegenerateTriangle { index: t, area });
        }
        // ∇λ_k = rot90(p_{k+2} − p_{k+1}) / 2|T|
        let mut grad = [[0.0; 2]; 3];
        for k in 0..3 {
            let a = nodes[tri[(k + 1) % 3]];
            let b = nodes[tri[(k + 2) % 3]];
            grad[k] = [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)];
        }
        for k in 0..3 {
            for l in 0..3 {
                let (i, j) = (tri[k], tri[l]);
                stiffness[(i, j)] += area * (grad[k][0] * grad[l][0] + grad[k][1] * grad[l][1]);
                mass[(i, j)] += area / 12.0 * if k == l { 2.0 } else { 1.0 };
            }
        }
    }

    let boundary_nodes = mesh.boundary_nodes().to_vec();
    let nb = boundary_nodes.len();
    let mut local = vec![usize::MAX; n];
    for (k, &i) in boundary_nodes.iter().enumerate() {
        local[i] = k;
    }
    let mut boundary_mass = DMatrix::zeros(nb, nb);
    for &edge in mesh.boundary_edges() {
        let len = mesh.edge_length(edge);
        let (a, b) = (local[edge[0]], local[edge[1]]);
        boundary_mass[(a, a)] += len / 3.0;
        boundary_mass[(b, b)] += len / 3.0;
        boundary_mass[(a, b)] += len / 6.0;
        boundary_mass[(b, a)] += len / 6.0;
    }
    let mut trace = DMatrix::zeros(nb, n);
    for (k, &i) in boundary_nodes.iter().enumerate() {
        trace[(k, i)] = 1.0;
    }
    let interior_nodes = (0..n).filter(|&i| local[i] == usize::MAX).collect();
    Ok(FormSet {
        stiffness,
        mass,
        boundary_mass,
        trace,
        boundary_nodes,
        interior_nodes,
    })
}

/// Gram of the ∂-inner product, `S = A + RᵀMbR`.
pub fn partial_gram(forms: &FormSet) -> DMatrix<f64> {
    let mut s = forms.stiffness.clone();
    for (a, &i) in forms.boundary_nodes.iter().enumerate() {
        for (b, &j) in forms.boundary_nodes.iter().enumerate() {
            s[(i, j)] += forms.boundary_mass[(a, b)];
        }
    }
    s
}
