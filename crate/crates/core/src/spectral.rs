//! Spectrum of the core operator and the eigen-expansion scale `H_s`.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::dense;
use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::hilbert::Space;
use crate::operators::OperatorSuite;
use crate::sampling;
use crate::tolerances;

/// Eigenpairs `(κₙ², φₙ)` of the core operator on the harmonic subspace.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// `κₙ`, nonincreasing.
    pub kappa: Vec<f64>,
    /// Raw eigenvalues `κₙ²` (may carry round-off below zero).
    pub kappa_squared: Vec<f64>,
    /// Columns are the M-orthonormal modes `φₙ`.
    pub modes: DMatrix<f64>,
    pub space: Space,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    /// `⟨v, φₙ⟩_M` for every mode.
    pub fn coefficients(&self, v: &DVector<f64>) -> DVector<f64> {
        self.modes.tr_mul(&(self.space.gram() * v))
    }

    /// Index ranges of eigenvalue clusters (consecutive relative gaps below
    /// [`tolerances::CLUSTER_GAP`]).
    pub fn clusters(&self) -> Vec<Range<usize>> {
        clusters(&self.kappa_squared)
    }

    /// `‖ΦᵀMΦ − I‖_max`.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.space.cross_gram(&self.modes, &self.modes);
        (g - DMatrix::identity(self.len(), self.len())).amax()
    }

    /// `maxₙ ‖Cφₙ − κₙ²φₙ‖_M`.
    pub fn eigen_residual(&self, suite: &OperatorSuite) -> f64 {
        let cphi = suite.core.matrix() * &self.modes;
        (0..self.len())
            .map(|k| {
                let r = cphi.column(k) - self.modes.column(k) * self.kappa_squared[k];
                self.space.norm(&r)
            })
            .fold(0.0, f64::max)
    }
}

pub(crate) fn clusters(values: &[f64]) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=values.len() {
        let split = k == values.len() || {
            let (a, b) = (values[k - 1], values[k]);
            (a - b).abs() > tolerances::CLUSTER_GAP * a.abs().max(b.abs())
        };
        if split {
            out.push(start..k);
            start = k;
        }
    }
    out
}

/// Solves the M-symmetric eigenproblem of the core on the harmonic subspace.
///
/// The core is reduced to the harmonic basis `H`, whitened with the Cholesky
/// factor of `HᵀMH`, symmetrized and diagonalized. Modes are sorted by
/// decreasing eigenvalue, signed so that their largest-magnitude entry is
/// positive; ties inside a cluster are ordered lexicographically.
pub fn eigendecompose_core(suite: &OperatorSuite) -> Result<EigenSystem> {
    let l2 = suite.spaces().l2_omega.clone();
    let h = &suite.harmonic_basis;
    let gh = l2.cross_gram(h, h);
    let chol = gh.cholesky().ok_or_else(|| Error::NotSpd {
        what: "harmonic basis Gram".into(),
    })?;
    let l = chol.l();
    let projected = l2.cross_gram(h, &(suite.core.matrix() * h));
    // L⁻¹ (HᵀMCH) L⁻ᵀ
    let left = l.solve_lower_triangular(&projected).expect("invertible factor");
    let whitened = l
        .solve_lower_triangular(&left.transpose())
        .expect("invertible factor")
        .transpose();
    let (values, vectors) = dense::sym_eigen(&whitened)?;
    let coeffs = l.tr_solve_lower_triangular(&vectors).expect("invertible factor");
    let mut modes = h * coeffs;
    for mut c in modes.column_iter_mut() {
        let imax = c.iamax();
        if c[imax] < 0.0 {
            c.neg_mut();
        }
    }

    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let sorted: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    for r in clusters(&sorted) {
        order[r].sort_by(|&a, &b| {
            let (ca, cb) = (modes.column(a), modes.column(b));
            ca.iter()
                .zip(cb.iter())
                .map(|(x, y)| y.total_cmp(x))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
    }
    let kappa_squared: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    if let Some(&min) = kappa_squared.last() {
        if min < -tolerances::NEGATIVE_EIGENVALUE {
            return Err(Error::NegativeEigenvalue {
                what: "core operator",
                value: min,
            });
        }
    }
    modes = DMatrix::from_columns(&order.iter().map(|&k| modes.column(k)).collect::<Vec<_>>());
    Ok(EigenSystem {
        kappa: kappa_squared.iter().map(|&l| l.max(0.0).sqrt()).collect(),
        kappa_squared,
        modes,
        space: l2,
    })
}

/// `(Σₙ κₙ^{-4s} ⟨v, φₙ⟩²_M)^{1/2}` for `v` in the harmonic span and
/// `s ∈ [0, 1]`.
pub fn hs_norm(v: &DVector<f64>, s: f64, eig: &EigenSystem) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidArgument(format!("s = {s} outside [0, 1]")));
    }
    let c = eig.coefficients(v);
    let norm_v = eig.space.norm(v);
    if norm_v > 0.0 {
        let residual = eig.space.norm(&(v - &eig.modes * &c)) / norm_v;
        if residual > tolerances::HARMONIC_SPAN {
            return Err(Error::InconsistentData(format!(
                "vector is not in the harmonic span (relative residual {residual:e})"
            )));
        }
    }
    let sum: f64 = c.iter().zip(&eig.kappa).map(|(c, k)| k.powf(-4.0 * s) * c * c).sum();
    Ok(sum.sqrt())
}

/// Range of `hs_norm(v, 1) / ‖v‖_{H∂}` over harmonic `v` lifted from smooth
/// random boundary data.
pub fn h1_equivalence_check(
    mesh: &Mesh,
    suite: &OperatorSuite,
    eig: &EigenSystem,
    sample_count: usize,
    rng: &mut impl Rng,
) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for _ in 0..sample_count.max(1) {
        let f = sampling::smooth_field(mesh, rng);
        let v = suite.disc.harmonic_lift(&suite.disc.forms.restrict(&f));
        let nv = suite.spaces().h_partial.norm(&v);
        if nv == 0.0 {
            continue;
        }
        let r = hs_norm(&v, 1.0, eig)? / nv;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_forms;
    use crate::geometry::{generate_structured_mesh, Domain};
    use crate::hilbert::DEFAULT_RANK_TOL;
    use crate::operators::{build_core, Discretization};
    use crate::sampling::{rng, uniform_vector};

    fn setup(domain: Domain, n: usize) -> (Mesh, OperatorSuite, EigenSystem) {
        let mesh = generate_structured_mesh(domain, n);
        let d = Discretization::new(assemble_forms(&mesh).unwrap()).unwrap();
        let s = build_core(d, DEFAULT_RANK_TOL).unwrap();
        let e = eigendecompose_core(&s).unwrap();
        (mesh, s, e)
    }

    #[test]
    fn counts_and_range() {
        let (mesh, _, e) = setup(Domain::UnitSquare, 2);
        assert_eq!(e.len(), mesh.num_boundary_nodes());
        assert!(e.kappa_squared.iter().all(|&l| l > 0.0 && l <= 1.0));
        assert!(e.kappa.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn residuals_small() {
        let (_, s, e) = setup(Domain::UnitSquare, 4);
        assert!(e.eigen_residual(&s) <= 1e-9);
        assert!(e.orthonormality_residual() <= 1e-9);
    }

    #[test]
    fn sign_convention() {
        let (_, _, e) = setup(Domain::LShape, 4);
        for c in e.modes.column_iter() {
            assert!(c[c.iamax()] > 0.0);
        }
    }

    #[test]
    fn clusters_group_close_values() {
        let c = clusters(&[1.0, 1.0 - 1e-12, 0.5, 0.25, 0.25]);
        assert_eq!(c, vec![0..2, 2..3, 3..5]);
    }

    #[test]
    fn hs_norm_examples() {
        let (mesh, s, e) = setup(Domain::UnitSquare, 4);
        let g = uniform_vector(mesh.num_boundary_nodes(), &mut rng(1));
        let v = s.disc.harmonic_lift(&g);
        assert!((hs_norm(&v, 0.0, &e).unwrap() - e.space.norm(&v)).abs() <= 1e-9);
        let phi = e.modes.column(0).into_owned();
        for sv in [0.0, 0.5, 1.0] {
            assert!((hs_norm(&phi, sv, &e).unwrap() - e.kappa[0].powf(-2.0 * sv)).abs() < 1e-9);
        }
        let (a, b, c) = (
            hs_norm(&v, 0.0, &e).unwrap(),
            hs_norm(&v, 0.5, &e).unwrap(),
            hs_norm(&v, 1.0, &e).unwrap(),
        );
        assert!(a <= b && b <= c);
        assert!(b * b <= a * c * (1.0 + 1e-12));
        assert!(hs_norm(&v, 1.5, &e).is_err());
        let rough = uniform_vector(mesh.num_nodes(), &mut rng(2));
        assert!(matches!(hs_norm(&rough, 0.5, &e), Err(Error::InconsistentData(_))));
    }

    #[test]
    fn hs_norm_s1_is_m_plus_s_norm() {
        // for harmonic v, F₁v = v in H∂, so ‖v‖²_{H_1} = ‖v‖²_M + ‖v‖²_S
        let (mesh, s, e) = setup(Domain::LShape, 4);
        let v = s
            .disc
            .harmonic_lift(&uniform_vector(mesh.num_boundary_nodes(), &mut rng(3)));
        let want = (s.spaces().l2_omega.norm(&v).powi(2) + s.spaces().h_partial.norm(&v).powi(2)).sqrt();
        assert!((hs_norm(&v, 1.0, &e).unwrap() - want).abs() <= 1e-8 * want);
    }

    #[test]
    fn h1_equivalence_is_bounded() {
        let (mesh, s, e) = setup(Domain::UnitSquare, 8);
        let (lo, hi) = h1_equivalence_check(&mesh, &s, &e, 50, &mut rng(4)).unwrap();
        assert!(lo > 0.0 && lo <= hi && hi.is_finite());
        let one = DVector::from_element(mesh.num_nodes(), 1.0);
        assert!(hs_norm(&one, 1.0, &e).unwrap().is_finite());
    }
}
