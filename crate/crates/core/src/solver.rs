//! Very weak Dirichlet solves by expansion in the boundary bases, and the
//! `H^{1/2}` regularity sandwich.

use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::operators::Discretization;
use crate::riesz::{riesz_bounds, RieszBasisPair};
use crate::sampling;
use crate::spectral::EigenSystem;
use crate::tolerances;

/// `v = Σ_{n≤N} cₙκₙφₙ` with `cₙ = ⟨g, gₙ⟩_{Mb}`.
#[derive(Debug, Clone)]
pub struct VeryWeakSolution {
    pub coefficients: DVector<f64>,
    pub n_used: usize,
    pub field: DVector<f64>,
    /// `(Σ_{n≤N} cₙ²)^{1/2}`.
    pub h_half_norm: f64,
}

pub fn very_weak_solve(
    g: &DVector<f64>,
    truncation: usize,
    pair: &RieszBasisPair,
    eig: &EigenSystem,
) -> Result<VeryWeakSolution> {
    if truncation == 0 || truncation > pair.len() {
        return Err(Error::Truncation {
            requested: truncation,
            available: pair.len(),
        });
    }
    if g.len() != pair.boundary_space.dim() {
        return Err(Error::Dimension(format!(
            "boundary datum has {} entries, expected {}",
            g.len(),
            pair.boundary_space.dim()
        )));
    }
    let coefficients = pair.analysis_g(g);
    let mut field = DVector::zeros(eig.modes.nrows());
    for k in 0..truncation {
        field.axpy(coefficients[k] * pair.kappa[k], &eig.modes.column(k), 1.0);
    }
    let h_half_norm = coefficients.rows(0, truncation).norm();
    Ok(VeryWeakSolution {
        coefficients,
        n_used: truncation,
        field,
        h_half_norm,
    })
}

/// Largest `|vᵀMf + gᵀR(Au − Mf)|` over zero-trace Poisson solutions `u` for
/// random sources `f`: the discrete `−∫vΔu + ∫g∂_νu`.
pub fn weak_form_residual(
    v: &VeryWeakSolution,
    g: &DVector<f64>,
    disc: &Discretization,
    test_count: usize,
    rng: &mut impl Rng,
) -> f64 {
    let forms = &disc.forms;
    let mut worst: f64 = 0.0;
    for _ in 0..test_count.max(1) {
        let f = sampling::uniform_vector(disc.num_nodes(), rng);
        let u = disc.dirichlet_poisson_solve(&f);
        let mf = &forms.mass * &f;
        let flux = forms.restrict(&(&forms.stiffness * &u - &mf));
        let r = v.field.dot(&mf) + g.dot(&flux);
        worst = worst.max(r.abs());
    }
    worst
}

/// Regularity sandwich `√a_G ‖g‖ ≤ ‖v‖_{H_{1/2}} ≤ √b_G ‖g‖` for one datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularityReport {
    pub norm_g: f64,
    pub norm_v_half: f64,
    pub sqrt_a: f64,
    pub sqrt_b: f64,
    /// `‖v‖_{H_{1/2}} − √a_G‖g‖`.
    pub slack_low: f64,
    /// `√b_G‖g‖ − ‖v‖_{H_{1/2}}`.
    pub slack_high: f64,
    #[serde(rename = "N_used")]
    pub n_used: usize,
    /// `Σ κₙ^{-2} cₙ²`, the squared `H_1` norm of the solution.
    #[serde(skip)]
    pub s_one_sum: f64,
}

impl RegularityReport {
    pub fn holds(&self) -> bool {
        self.slack_low >= -tolerances::SANDWICH && self.slack_high >= -tolerances::SANDWICH
    }
}

pub fn regularity_report(g: &DVector<f64>, pair: &RieszBasisPair, eig: &EigenSystem) -> Result<RegularityReport> {
    let sol = very_weak_solve(g, pair.len(), pair, eig)?;
    let bounds = riesz_bounds(&pair.g_cols, &pair.boundary_space);
    Ok(regularity_from(g, &sol, bounds.a, bounds.b, pair))
}

/// As [`regularity_report`], with precomputed Riesz bounds `(a_G, b_G)`.
pub fn regularity_from(
    g: &DVector<f64>,
    sol: &VeryWeakSolution,
    a: f64,
    b: f64,
    pair: &RieszBasisPair,
) -> RegularityReport {
    let norm_g = pair.boundary_space.norm(g);
    let (sqrt_a, sqrt_b) = (a.sqrt(), b.sqrt());
    let s_one_sum = sol
        .coefficients
        .iter()
        .zip(&pair.kappa)
        .take(sol.n_used)
        .map(|(c, k)| c * c / (k * k))
        .sum();
    RegularityReport {
        norm_g,
        norm_v_half: sol.h_half_norm,
        sqrt_a,
        sqrt_b,
        slack_low: sol.h_half_norm - sqrt_a * norm_g,
        slack_high: sqrt_b * norm_g - sol.h_half_norm,
        n_used: sol.n_used,
        s_one_sum,
    }
}

/// `sign(x − 1/2)` on the edge `y = 0`, zero elsewhere on the boundary.
pub fn step_datum(mesh: &Mesh) -> DVector<f64> {
    DVector::from_vec(mesh.interpolate_boundary(|x, y| {
        if y == 0.0 {
            if x > 0.5 {
                1.0
            } else if x < 0.5 {
                -1.0
            } else {
                0.0
            }
        } else {
            0.0
        }
    }))
}
