//! Discrete trace, lift, solution and conormal operators, and the compact
//! self-adjoint core operator built from them.
//!
//! Three spaces carry the nodal vectors: `H∂` (Gram `S = A + RᵀMbR`), `L2Ω`
//! (Gram `M`) and `L2∂` (Gram `Mb`, boundary nodes only).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::assembly::{partial_gram, FormSet};
use crate::error::{Error, Result};
use crate::hilbert::{fractional_power, orthogonal_projector, pseudo_inverse, HilbertSpace, Operator, Space};
use crate::sampling;
use crate::tolerances;

/// The three inner-product spaces of one mesh.
#[derive(Debug, Clone)]
pub struct Spaces {
    pub h_partial: Space,
    pub l2_omega: Space,
    pub l2_boundary: Space,
}

pub fn build_spaces(forms: &FormSet) -> Result<Spaces> {
    Ok(Spaces {
        h_partial: HilbertSpace::new("H_partial", partial_gram(forms))?,
        l2_omega: HilbertSpace::new("L2_omega", forms.mass.clone())?,
        l2_boundary: HilbertSpace::new("L2_boundary", forms.boundary_mass.clone())?,
    })
}

/// Forms, spaces and cached factorizations for the boundary-value solves.
pub struct Discretization {
    pub forms: FormSet,
    pub spaces: Spaces,
    interior: Option<Cholesky<f64, Dyn>>,
    a_ib: DMatrix<f64>,
    stiffness_norm: f64,
    mass_norm: f64,
}

impl std::fmt::Debug for Discretization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Discretization")
            .field("nodes", &self.forms.num_nodes())
            .field("boundary", &self.forms.num_boundary())
            .finish()
    }
}

fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl Discretization {
    pub fn new(forms: FormSet) -> Result<Self> {
        let spaces = build_spaces(&forms)?;
        let ii = &forms.interior_nodes;
        let interior = if ii.is_empty() {
            None
        } else {
            Some(
                Cholesky::new(submatrix(&forms.stiffness, ii, ii)).ok_or_else(|| Error::NotSpd {
                    what: "interior stiffness block".into(),
                })?,
            )
        };
        let a_ib = submatrix(&forms.stiffness, ii, &forms.boundary_nodes);
        let stiffness_norm = inf_norm(&forms.stiffness);
        let mass_norm = inf_norm(&forms.mass);
        Ok(Self {
            forms,
            spaces,
            interior,
            a_ib,
            stiffness_norm,
            mass_norm,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.forms.num_nodes()
    }

    pub fn num_boundary(&self) -> usize {
        self.forms.num_boundary()
    }

    fn interior_solve(&self, rhs: DMatrix<f64>) -> DMatrix<f64> {
        match &self.interior {
            Some(c) => c.solve(&rhs),
            None => rhs,
        }
    }

    fn scatter_interior(&self, vals: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        for (k, &i) in self.forms.interior_nodes.iter().enumerate() {
            out.row_mut(i).copy_from(&vals.row(k));
        }
    }

    /// Robin solution with boundary datum: `S z = RᵀMb g`, column-wise.
    pub fn gamma_star_solve_many(&self, g: &DMatrix<f64>) -> DMatrix<f64> {
        let mbg = &self.forms.boundary_mass * g;
        self.spaces.h_partial.solve(&(self.forms.trace.transpose() * mbg))
    }

    pub fn gamma_star_solve(&self, g: &DVector<f64>) -> DVector<f64> {
        col(self.gamma_star_solve_many(&as_matrix(g)))
    }

    /// Robin solution with volume source: `S u = M f`.
    pub fn e_star_solve_many(&self, f: &DMatrix<f64>) -> DMatrix<f64> {
        self.spaces.h_partial.solve(&(&self.forms.mass * f))
    }

    pub fn e_star_solve(&self, f: &DVector<f64>) -> DVector<f64> {
        col(self.e_star_solve_many(&as_matrix(f)))
    }

    /// Poisson solution with zero boundary values: `A_II u_I = (M f)_I`.
    pub fn dirichlet_poisson_solve_many(&self, f: &DMatrix<f64>) -> DMatrix<f64> {
        let mf = &self.forms.mass * f;
        let rhs = DMatrix::from_fn(self.forms.interior_nodes.len(), f.ncols(), |k, j| {
            mf[(self.forms.interior_nodes[k], j)]
        });
        let ui = self.interior_solve(rhs);
        let mut u = DMatrix::zeros(self.num_nodes(), f.ncols());
        self.scatter_interior(&ui, &mut u);
        u
    }

    pub fn dirichlet_poisson_solve(&self, f: &DVector<f64>) -> DVector<f64> {
        col(self.dirichlet_poisson_solve_many(&as_matrix(f)))
    }

    /// `E*f − E₀*f`: discretely harmonic, with the trace of `E*f`.
    pub fn harmonic_part(&self, f: &DVector<f64>) -> DVector<f64> {
        self.e_star_solve(f) - self.dirichlet_poisson_solve(f)
    }

    /// Discrete harmonic extension of boundary values, column-wise.
    pub fn harmonic_lift_many(&self, g: &DMatrix<f64>) -> DMatrix<f64> {
        let ui = self.interior_solve(-(&self.a_ib * g));
        let mut u = DMatrix::zeros(self.num_nodes(), g.ncols());
        self.scatter_interior(&ui, &mut u);
        for (k, &i) in self.forms.boundary_nodes.iter().enumerate() {
            u.row_mut(i).copy_from(&g.row(k));
        }
        u
    }

    pub fn harmonic_lift(&self, g: &DVector<f64>) -> DVector<f64> {
        col(self.harmonic_lift_many(&as_matrix(g)))
    }

    /// Largest interior row of `A u − M f`, relative to `‖A‖‖u‖ + ‖M‖‖f‖`
    /// (max norms).
    pub fn interior_residual(&self, u: &DVector<f64>, f: &DVector<f64>) -> f64 {
        let r = &self.forms.stiffness * u - &self.forms.mass * f;
        let worst = self
            .forms
            .interior_nodes
            .iter()
            .map(|&i| r[i].abs())
            .fold(0.0, f64::max);
        let scale = self.stiffness_norm * u.amax() + self.mass_norm * f.amax();
        if scale == 0.0 {
            worst
        } else {
            worst / scale
        }
    }

    /// Variational conormal derivative `Mb d = R(A u − M f)` of a solution of
    /// the interior equations.
    pub fn conormal_derivative(&self, u: &DVector<f64>, f: &DVector<f64>) -> Result<DVector<f64>> {
        let residual = self.interior_residual(u, f);
        if residual > 1e-8 {
            return Err(Error::InconsistentData(format!(
                "interior equations violated (relative residual {residual:e})"
            )));
        }
        Ok(self.conormal_unchecked(u, f))
    }

    fn conormal_unchecked(&self, u: &DVector<f64>, f: &DVector<f64>) -> DVector<f64> {
        let r = &self.forms.stiffness * u - &self.forms.mass * f;
        let rb = self.forms.restrict(&r);
        self.spaces.l2_boundary.solve(&as_matrix(&rb)).column(0).into_owned()
    }

    /// `K*f = −∂_ν E₀*f`.
    pub fn k_star_apply(&self, f: &DVector<f64>) -> DVector<f64> {
        -self.conormal_unchecked(&self.dirichlet_poisson_solve(f), f)
    }

    /// Matrix of `K*`, `Mb⁻¹ R (M − A E₀*)`.
    pub fn k_star_matrix(&self) -> DMatrix<f64> {
        let n = self.num_nodes();
        let e0 = self.dirichlet_poisson_solve_many(&DMatrix::identity(n, n));
        let r = &self.forms.mass - &self.forms.stiffness * e0;
        let rb = &self.forms.trace * r;
        self.spaces.l2_boundary.solve(&rb)
    }

    /// Largest relative interior row of `A·u` over the columns of `u`.
    pub fn harmonicity_residual(&self, u: &DMatrix<f64>) -> f64 {
        let au = &self.forms.stiffness * u;
        let mut worst: f64 = 0.0;
        for j in 0..u.ncols() {
            let scale = self.stiffness_norm * u.column(j).amax();
            if scale == 0.0 {
                continue;
            }
            for &i in &self.forms.interior_nodes {
                worst = worst.max(au[(i, j)].abs() / scale);
            }
        }
        worst
    }
}

fn as_matrix(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

fn col(m: DMatrix<f64>) -> DVector<f64> {
    m.column(0).into_owned()
}

/// All operators of one mesh, including the core `C = Γ₀*K*`.
#[derive(Debug)]
pub struct OperatorSuite {
    pub disc: Discretization,
    pub rank_tol: f64,
    /// `Γ: H∂ → L2∂`.
    pub gamma: Operator,
    pub gamma_star: Operator,
    /// `E*, E₀*, E₁*: L2Ω → H∂`.
    pub e_star: Operator,
    pub e0_star: Operator,
    pub e1_star: Operator,
    /// `K: L2∂ → L2Ω`, the harmonic lift.
    pub k: Operator,
    /// `K*: L2Ω → L2∂`, through the conormal derivative.
    pub k_star: Operator,
    /// `F₁ = E₁†: L2Ω → H∂`.
    pub f1: Operator,
    /// `Γ₀* = F₁*(I+F₁F₁*)^{-1/2}Γ*: L2∂ → L2Ω`.
    pub gamma0_star: Operator,
    /// `C = Γ₀*K*` on `L2Ω`.
    pub core: Operator,
    /// `(I+F₁*F₁)^{-1/2}P_H`, the second formula for the core.
    pub core_alt: Operator,
    pub harmonic_projector: Operator,
    /// Columns span the discrete harmonic functions (the lift of each boundary hat).
    pub harmonic_basis: DMatrix<f64>,
    /// `‖C − C′‖` in the M-induced operator norm.
    pub structural_residual: f64,
    pub core_self_adjoint_residual: f64,
}

/// Builds every operator and the core; rejects the result when the two core
/// formulas differ by more than [`tolerances::STRUCTURAL_HARD`].
pub fn build_core(disc: Discretization, rank_tol: f64) -> Result<OperatorSuite> {
    let Spaces {
        h_partial: h,
        l2_omega: l2,
        l2_boundary: lb,
    } = disc.spaces.clone();
    let n = disc.num_nodes();
    let nb = disc.num_boundary();

    let gamma = Operator::new(disc.forms.trace.clone(), h.clone(), lb.clone())?;
    let gamma_star = gamma.adjoint();
    let eye = DMatrix::identity(n, n);
    let e_star = Operator::new(disc.e_star_solve_many(&eye), l2.clone(), h.clone())?;
    let e0_star = Operator::new(disc.dirichlet_poisson_solve_many(&eye), l2.clone(), h.clone())?;
    let e1_star = e_star.sub(&e0_star)?;
    let harmonic_basis = disc.harmonic_lift_many(&DMatrix::identity(nb, nb));
    let k = Operator::new(harmonic_basis.clone(), lb.clone(), l2.clone())?;
    let k_star = Operator::new(disc.k_star_matrix(), l2.clone(), lb.clone())?;

    let f1 = pseudo_inverse(&e1_star.adjoint(), rank_tol)?;
    let f1_s = f1.adjoint();
    let root_h = fractional_power(&f1.compose(&f1_s)?.plus_identity()?, -0.5)?;
    let gamma0_star = f1_s.compose(&root_h)?.compose(&gamma_star)?;
    let core = gamma0_star.compose(&k_star)?;

    let harmonic_projector = orthogonal_projector(&harmonic_basis, &l2, rank_tol)?;
    let root_l2 = fractional_power(&f1_s.compose(&f1)?.plus_identity()?, -0.5)?;
    let core_alt = root_l2.compose(&harmonic_projector)?;

    let structural_residual = core.sub(&core_alt)?.norm();
    if !(structural_residual <= tolerances::STRUCTURAL_HARD) {
        return Err(Error::Consistency {
            what: "core operator formulas",
            residual: structural_residual,
            limit: tolerances::STRUCTURAL_HARD,
        });
    }
    let core_self_adjoint_residual = core.sub(&core.adjoint())?.norm();

    Ok(OperatorSuite {
        disc,
        rank_tol,
        gamma,
        gamma_star,
        e_star,
        e0_star,
        e1_star,
        k,
        k_star,
        f1,
        gamma0_star,
        core,
        core_alt,
        harmonic_projector,
        harmonic_basis,
        structural_residual,
        core_self_adjoint_residual,
    })
}

impl OperatorSuite {
    pub fn spaces(&self) -> &Spaces {
        &self.disc.spaces
    }

    /// `‖E₁* − Γ*K*‖` in the operator norm `L2Ω → H∂`.
    pub fn harmonic_factorization_residual(&self) -> Result<f64> {
        Ok(self.e1_star.sub(&self.gamma_star.compose(&self.k_star)?)?.norm())
    }

    /// `‖K − (K*)*‖`: the conormal route to `K*` against the lift.
    pub fn k_adjoint_residual(&self) -> f64 {
        self.k
            .sub(&self.k_star.adjoint())
            .map(|d| d.norm())
            .unwrap_or(f64::INFINITY)
    }

    /// `Γ₀ = (Γ₀*)*: L2Ω → L2∂`.
    pub fn gamma0(&self) -> Operator {
        self.gamma0_star.adjoint()
    }
}

/// Largest `‖∂_ν u⁰‖_{L2∂} / ‖f‖_{L2Ω}` over smooth random sources, `u⁰` the
/// zero-trace Poisson solution.
///
/// The sources are interpolants of fixed random cosine sums so that the same
/// functions are sampled at every refinement.
pub fn rellich_ratio(
    mesh: &crate::geometry::Mesh,
    disc: &Discretization,
    sample_count: usize,
    rng: &mut impl Rng,
) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count.max(1) {
        let f = sampling::smooth_field(mesh, rng);
        let nf = disc.spaces.l2_omega.norm(&f);
        if nf == 0.0 {
            continue;
        }
        let d = disc.k_star_apply(&f);
        worst = worst.max(disc.spaces.l2_boundary.norm(&d) / nf);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_forms;
    use crate::geometry::{generate_structured_mesh, Domain, Mesh};
    use crate::hilbert::DEFAULT_RANK_TOL;
    use crate::sampling::{rng, uniform_vector};

    fn disc(domain: Domain, n: usize) -> (Mesh, Discretization) {
        let mesh = generate_structured_mesh(domain, n);
        let d = Discretization::new(assemble_forms(&mesh).unwrap()).unwrap();
        (mesh, d)
    }

    fn suite(domain: Domain, n: usize) -> (Mesh, OperatorSuite) {
        let (mesh, d) = disc(domain, n);
        (mesh, build_core(d, DEFAULT_RANK_TOL).unwrap())
    }

    #[test]
    fn space_norms_of_constants() {
        let (mesh, d) = disc(Domain::LShape, 4);
        let one = DVector::from_element(mesh.num_nodes(), 1.0);
        assert!((d.spaces.h_partial.norm(&one).powi(2) - 4.0).abs() < 1e-12);
        assert!((d.spaces.l2_omega.norm(&one).powi(2) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn robin_solves() {
        let (mesh, d) = disc(Domain::UnitSquare, 4);
        let nb = mesh.num_boundary_nodes();
        let z = d.gamma_star_solve(&DVector::from_element(nb, 2.5));
        assert!((z.add_scalar(-2.5)).amax() < 1e-12);
        assert_eq!(d.e_star_solve(&DVector::zeros(mesh.num_nodes())).amax(), 0.0);

        let mut r = rng(1);
        let g = uniform_vector(nb, &mut r);
        let v = uniform_vector(mesh.num_nodes(), &mut r);
        let lhs = d.spaces.h_partial.inner(&d.gamma_star_solve(&g), &v);
        let rhs = d.spaces.l2_boundary.inner(&g, &d.forms.restrict(&v));
        assert!((lhs - rhs).abs() < 1e-12);

        let f = uniform_vector(mesh.num_nodes(), &mut r);
        let lhs = d.spaces.h_partial.inner(&d.e_star_solve(&f), &v);
        let rhs = d.spaces.l2_omega.inner(&f, &v);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn robin_residual_for_linear_trace_shrinks() {
        // the Robin solution with datum x|∂Ω is not x itself; its discrete
        // distance to the refined solution decreases with h
        let (fine_mesh, fine) = disc(Domain::UnitSquare, 32);
        let zf = fine.gamma_star_solve(&DVector::from_vec(fine_mesh.interpolate_boundary(|x, _| x)));
        let errs: Vec<f64> = [4, 8, 16]
            .iter()
            .map(|&n| {
                let (mesh, d) = disc(Domain::UnitSquare, n);
                let g = DVector::from_vec(mesh.interpolate_boundary(|x, _| x));
                let z = d.gamma_star_solve(&g);
                // compare at the shared corner and center nodes
                let pick = |m: &Mesh, v: &DVector<f64>, p: [f64; 2]| {
                    let i = m
                        .nodes()
                        .iter()
                        .position(|q| (q[0] - p[0]).abs() + (q[1] - p[1]).abs() < 1e-12)
                        .unwrap();
                    v[i]
                };
                [[0.5, 0.5], [0.0, 0.0], [0.5, 0.0]]
                    .iter()
                    .map(|&p| (pick(&mesh, &z, p) - pick(&fine_mesh, &zf, p)).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
    }

    #[test]
    fn dirichlet_solve_basics() {
        let (mesh, d) = disc(Domain::LShape, 4);
        let n = mesh.num_nodes();
        assert_eq!(d.dirichlet_poisson_solve(&DVector::zeros(n)).amax(), 0.0);
        let f = uniform_vector(n, &mut rng(2));
        let u = d.dirichlet_poisson_solve(&f);
        assert_eq!(d.forms.restrict(&u).amax(), 0.0);
        assert!(d.interior_residual(&u, &f) < 1e-13);
    }

    #[test]
    fn manufactured_dirichlet_order() {
        use std::f64::consts::PI;
        let errs: Vec<f64> = [8, 16, 32]
            .iter()
            .map(|&n| {
                let (mesh, d) = disc(Domain::UnitSquare, n);
                let f = DVector::from_vec(mesh.interpolate(|x, y| 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin()));
                let exact = DVector::from_vec(mesh.interpolate(|x, y| (PI * x).sin() * (PI * y).sin()));
                d.spaces.l2_omega.norm(&(d.dirichlet_poisson_solve(&f) - exact))
            })
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.8, "{errs:?}");
        }
    }

    #[test]
    fn harmonic_part_properties() {
        let (mesh, d) = disc(Domain::UnitSquare, 6);
        let f = uniform_vector(mesh.num_nodes(), &mut rng(3));
        let u1 = d.harmonic_part(&f);
        assert!(d.harmonicity_residual(&DMatrix::from_column_slice(u1.len(), 1, u1.as_slice())) < 1e-10);
        assert_eq!(d.forms.restrict(&u1), d.forms.restrict(&d.e_star_solve(&f)));
        assert_eq!(d.harmonic_part(&DVector::zeros(mesh.num_nodes())).amax(), 0.0);
    }

    #[test]
    fn harmonic_lift_examples() {
        let (mesh, d) = disc(Domain::LShape, 6);
        let nb = mesh.num_boundary_nodes();
        let one = d.harmonic_lift(&DVector::from_element(nb, 1.0));
        assert!(one.add_scalar(-1.0).amax() < 1e-12);
        let x = d.harmonic_lift(&DVector::from_vec(mesh.interpolate_boundary(|x, _| x)));
        assert!((x - DVector::from_vec(mesh.interpolate(|x, _| x))).amax() < 1e-12);
    }

    #[test]
    fn harmonic_lift_is_minimal_norm_extension() {
        let (mesh, d) = disc(Domain::UnitSquare, 4);
        let gamma = Operator::new(
            d.forms.trace.clone(),
            d.spaces.h_partial.clone(),
            d.spaces.l2_boundary.clone(),
        )
        .unwrap();
        let pinv = pseudo_inverse(&gamma, DEFAULT_RANK_TOL).unwrap();
        let mut r = rng(4);
        for _ in 0..5 {
            let g = uniform_vector(mesh.num_boundary_nodes(), &mut r);
            let lift = d.harmonic_lift(&g);
            assert!(d.spaces.h_partial.norm(&(&lift - pinv.apply(&g))) <= 1e-9);
            assert!((d.forms.restrict(&lift) - &g).amax() <= 1e-10);
        }
    }

    #[test]
    fn conormal_of_constant_vanishes() {
        let (mesh, d) = disc(Domain::UnitSquare, 4);
        let n = mesh.num_nodes();
        let dn = d
            .conormal_derivative(&DVector::from_element(n, 3.0), &DVector::zeros(n))
            .unwrap();
        assert!(dn.amax() < 1e-12);
    }

    #[test]
    fn conormal_rejects_non_solution() {
        let (mesh, d) = disc(Domain::UnitSquare, 4);
        let n = mesh.num_nodes();
        let u = uniform_vector(n, &mut rng(5));
        assert!(matches!(
            d.conormal_derivative(&u, &DVector::zeros(n)),
            Err(Error::InconsistentData(_))
        ));
    }

    #[test]
    fn conormal_of_x_recovers_normal() {
        // L² projection of ν_x onto continuous P1 traces: corner effects decay
        // away from the corners, so compare at nodes at distance ≥ 1/4 from them
        let mut errs = Vec::new();
        for n in [8, 16, 32] {
            let (mesh, d) = disc(Domain::UnitSquare, n);
            let x = DVector::from_vec(mesh.interpolate(|x, _| x));
            let dn = d.conormal_derivative(&x, &DVector::zeros(mesh.num_nodes())).unwrap();
            let mut worst: f64 = 0.0;
            for (k, &i) in mesh.boundary_nodes().iter().enumerate() {
                let [px, py] = mesh.nodes()[i];
                let corner_dist = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
                    .iter()
                    .map(|c: &[f64; 2]| (px - c[0]).hypot(py - c[1]))
                    .fold(f64::INFINITY, f64::min);
                if corner_dist < 0.25 {
                    continue;
                }
                let nx = if px == 0.0 {
                    -1.0
                } else if px == 1.0 {
                    1.0
                } else {
                    0.0
                };
                worst = worst.max((dn[k] - nx).abs());
            }
            errs.push(worst);
        }
        assert!(errs[2] < errs[0] && errs[2] < 1e-3, "{errs:?}");
    }

    #[test]
    fn green_identity() {
        let (mesh, d) = disc(Domain::LShape, 4);
        let n = mesh.num_nodes();
        let mut r = rng(6);
        let f = uniform_vector(n, &mut r);
        let u = d.dirichlet_poisson_solve(&f);
        let dn = d.conormal_derivative(&u, &f).unwrap();
        for _ in 0..5 {
            let v = uniform_vector(n, &mut r);
            let lhs = u.dot(&(&d.forms.stiffness * &v));
            let rhs = d.spaces.l2_omega.inner(&f, &v) + d.spaces.l2_boundary.inner(&dn, &d.forms.restrict(&v));
            assert!((lhs - rhs).abs() <= 1e-10, "{lhs} {rhs}");
        }
    }

    #[test]
    fn k_star_pairing_and_harmonic_factorization() {
        let (mesh, s) = suite(Domain::UnitSquare, 4);
        let mut r = rng(7);
        assert_eq!(s.disc.k_star_apply(&DVector::zeros(mesh.num_nodes())).amax(), 0.0);
        for _ in 0..5 {
            let g = uniform_vector(mesh.num_boundary_nodes(), &mut r);
            let f = uniform_vector(mesh.num_nodes(), &mut r);
            let lhs = s.spaces().l2_omega.inner(&s.disc.harmonic_lift(&g), &f);
            let rhs = s.spaces().l2_boundary.inner(&g, &s.disc.k_star_apply(&f));
            assert!((lhs - rhs).abs() <= 1e-9);
        }
        assert!(s.harmonic_factorization_residual().unwrap() <= 1e-9);
        assert!(s.k_adjoint_residual() <= 1e-9);
    }

    #[test]
    fn core_structure_small() {
        let (_, s) = suite(Domain::UnitSquare, 4);
        assert!(s.structural_residual <= 1e-8, "{}", s.structural_residual);
        assert!(s.core_self_adjoint_residual <= 1e-8);
        assert!(s.disc.harmonicity_residual(&s.harmonic_basis) <= 1e-10);
        // eigenvalues on the harmonic subspace in (0, 1]
        let l = s.core.compose(&s.harmonic_projector).unwrap();
        let ev = l.singular_values();
        let nb = s.disc.num_boundary();
        assert!(ev[0] <= 1.0 + 1e-12 && ev[nb - 1] > 0.0);
    }

    #[test]
    fn lift_and_gamma0_injective() {
        let (_, s) = suite(Domain::LShape, 4);
        let nb = s.disc.num_boundary();
        let right_inverse = s.gamma.compose(&s.gamma_star).unwrap();
        assert!(right_inverse.rank(1e-12) == nb);
        let g_lift = (&s.disc.forms.trace * &s.harmonic_basis - DMatrix::<f64>::identity(nb, nb)).amax();
        assert!(g_lift <= 1e-10);
        assert!(*s.k.singular_values().last().unwrap() > 0.0);
        assert!(s.gamma0_star.singular_values()[nb - 1] > 0.0);
        // range(F₁) is discretely harmonic
        assert!(s.disc.harmonicity_residual(s.f1.matrix()) <= 1e-8);
    }

    #[test]
    fn rellich_ratio_is_stable() {
        let ratios: Vec<f64> = [8, 16, 32]
            .iter()
            .map(|&n| {
                let (mesh, d) = disc(Domain::UnitSquare, n);
                rellich_ratio(&mesh, &d, 10, &mut rng(9))
            })
            .collect();
        let max = ratios.iter().copied().fold(0.0, f64::max);
        let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min > 0.0 && max / min < 2.0, "{ratios:?}");
    }
}
