//! Every per-level check of a built [`Pipeline`], with its threshold.
//!
//! This is what `riesz-trace run` writes to `residuals.json` and what a sweep
//! aggregates. Each random check draws from its own stream derived from the
//! seed, so adding or reordering checks leaves the others unchanged.

use nalgebra::DVector;

use crate::error::Result;
use crate::operators::rellich_ratio;
use crate::pipeline::Pipeline;
use crate::riesz::{verify_bases, RieszBounds};
use crate::sampling;
use crate::solver::{regularity_from, step_datum, very_weak_solve, weak_form_residual, RegularityReport};
use crate::spectral::{h1_equivalence_check, hs_norm};
use crate::tolerances as tol;

/// One named residual and the threshold it is held to.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    /// `true` when `value ≤ limit` is required, `false` for `value ≥ limit`.
    pub upper: bool,
}

impl Check {
    pub fn at_most(name: &'static str, value: f64, limit: f64) -> Self {
        Self {
            name,
            value,
            limit,
            upper: true,
        }
    }

    pub fn at_least(name: &'static str, value: f64, limit: f64) -> Self {
        Self {
            name,
            value,
            limit,
            upper: false,
        }
    }

    /// NaN never passes.
    pub fn passed(&self) -> bool {
        if self.upper {
            self.value <= self.limit
        } else {
            self.value >= self.limit
        }
    }
}

/// Sample counts of the randomized checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    pub seed: u64,
    /// Random boundary data for the sandwich; samples for Bessel sums and
    /// expansions.
    pub samples: usize,
    /// Random data for the weak-form and full-truncation checks.
    pub data_count: usize,
    /// Zero-trace tests per datum in the weak-form check.
    pub weak_tests: usize,
    /// Smooth fields behind the Rellich ratio and the `H¹` equivalence range.
    pub field_samples: usize,
}

impl CheckOptions {
    pub fn new(seed: u64, samples: usize) -> Self {
        Self {
            seed,
            samples,
            data_count: 10,
            weak_tests: 20,
            field_samples: 20,
        }
    }
}

/// Checks and recorded quantities of one level.
#[derive(Debug, Clone)]
pub struct LevelReport {
    pub num_nodes: usize,
    pub num_boundary: usize,
    pub modes: usize,
    pub kappa_max: f64,
    pub kappa_min: f64,
    pub checks: Vec<Check>,
    pub bounds_g: RieszBounds,
    pub bounds_y: RieszBounds,
    /// Entrywise biorthogonality, meaningful only without degenerate clusters.
    pub biorthogonality_entrywise: f64,
    pub rellich: f64,
    /// Range of `‖v‖_{H₁} / ‖v‖_{H∂}` over lifted smooth data.
    pub h1_range: (f64, f64),
    /// Sandwich report of the step datum `sign(x − 1/2)` on `y = 0`.
    pub step: RegularityReport,
    /// `Σ cₙ²` of the step datum (the squared `H_{1/2}` norm).
    pub step_half_sum: f64,
}

impl LevelReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

/// Stream offsets, one per randomized check.
mod stream {
    pub const BASES: u64 = 1;
    pub const SANDWICH: u64 = 2;
    pub const WEAK_FORM: u64 = 3;
    pub const TRUNCATION: u64 = 4;
    pub const PARSEVAL: u64 = 5;
    pub const RELLICH: u64 = 6;
    pub const H1: u64 = 7;
}

fn rng_seed(opts: &CheckOptions, offset: u64) -> u64 {
    opts.seed.wrapping_add(offset.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn rng_for(opts: &CheckOptions, offset: u64) -> rand_chacha::ChaCha8Rng {
    sampling::rng(rng_seed(opts, offset))
}

pub fn evaluate_level(p: &Pipeline, opts: &CheckOptions) -> Result<LevelReport> {
    let suite = &p.suite;
    let disc = &suite.disc;
    let (eig, pair) = (&p.eigen, &p.pair);
    let l2 = &suite.spaces().l2_omega;
    let nb = disc.num_boundary();
    let mut checks = vec![
        Check::at_most("structural_identity", suite.structural_residual, tol::STRUCTURAL),
        Check::at_most(
            "core_self_adjoint",
            suite.core_self_adjoint_residual,
            tol::CORE_SELF_ADJOINT,
        ),
        Check::at_most(
            "harmonic_factorization",
            suite.harmonic_factorization_residual()?,
            tol::HARMONIC_FACTORIZATION,
        ),
        Check::at_most("k_adjoint", suite.k_adjoint_residual(), tol::K_ADJOINT),
        Check::at_most(
            "harmonic_rows",
            disc.harmonicity_residual(&suite.harmonic_basis),
            tol::HARMONIC_ROWS,
        ),
        Check::at_most(
            "mode_orthonormality",
            eig.orthonormality_residual(),
            tol::MODE_ORTHONORMALITY,
        ),
        Check::at_most("eigen_residual", eig.eigen_residual(suite), tol::EIGEN_RESIDUAL),
    ];

    let bases = verify_bases(pair, suite, eig, opts.samples, rng_seed(opts, stream::BASES))?;
    checks.push(Check::at_most(
        "biorthogonality",
        bases.biorthogonality.cluster_blocked,
        tol::BIORTHOGONALITY,
    ));
    checks.push(Check::at_most(
        "basis_relations",
        bases.basis_relations,
        tol::BASIS_RELATIONS,
    ));
    checks.push(Check::at_most("minimality", bases.minimality, tol::BIORTHOGONALITY));
    checks.push(Check::at_least("riesz_lower_g", bases.bounds_g.a, f64::MIN_POSITIVE));
    checks.push(Check::at_least("riesz_lower_y", bases.bounds_y.a, f64::MIN_POSITIVE));
    checks.push(Check::at_most(
        "bessel_excess_g",
        bases.bessel_g - bases.bounds_g.b,
        tol::BESSEL,
    ));
    checks.push(Check::at_most(
        "bessel_excess_y",
        bases.bessel_y - bases.bounds_y.b,
        tol::BESSEL,
    ));
    checks.push(Check::at_most("scaled_family", bases.scaled_family, tol::SCALED_FAMILY));
    let rec = &bases.reconstruction;
    checks.push(Check::at_most("synthesis_y_analysis_g", rec.sy_ag, tol::RECONSTRUCTION));
    checks.push(Check::at_most("synthesis_g_analysis_y", rec.sg_ay, tol::RECONSTRUCTION));
    checks.push(Check::at_most("analysis_y_k_star", rec.ay_kstar, tol::COEFFICIENT_MAPS));
    checks.push(Check::at_most(
        "analysis_g_gamma0",
        rec.ag_gamma0,
        tol::COEFFICIENT_MAPS,
    ));
    checks.push(Check::at_most(
        "gamma0_factorization",
        rec.gamma0_factor,
        tol::RECONSTRUCTION,
    ));
    checks.push(Check::at_most(
        "gamma0_factorization_alt",
        rec.gamma0_factor_alt,
        tol::RECONSTRUCTION,
    ));
    checks.push(Check::at_most(
        "k_star_factorization",
        rec.kstar_factor,
        tol::RECONSTRUCTION,
    ));
    checks.push(Check::at_most(
        "k_star_factorization_alt",
        rec.kstar_factor_alt,
        tol::RECONSTRUCTION,
    ));
    checks.push(Check::at_most("expansions", rec.expansion_max(), tol::RECONSTRUCTION));
    checks.push(Check::at_least(
        "riesz_chain",
        if bases.chain.holds() { 1.0 } else { 0.0 },
        1.0,
    ));

    // regularity sandwich and the two H_{1/2} evaluations
    let mut rng = rng_for(opts, stream::SANDWICH);
    let (mut min_slack, mut half_gap) = (f64::INFINITY, 0.0_f64);
    for _ in 0..opts.samples {
        let g = sampling::uniform_vector(nb, &mut rng);
        let sol = very_weak_solve(&g, pair.len(), pair, eig)?;
        let rep = regularity_from(&g, &sol, bases.bounds_g.a, bases.bounds_g.b, pair);
        min_slack = min_slack.min(rep.slack_low).min(rep.slack_high);
        let lifted = hs_norm(&disc.harmonic_lift(&g), 0.5, eig)?;
        half_gap = half_gap.max((lifted - sol.h_half_norm).abs());
    }
    checks.push(Check::at_least("sandwich_slack", min_slack, -tol::SANDWICH));
    checks.push(Check::at_most(
        "half_norm_agreement",
        half_gap,
        tol::HALF_NORM_AGREEMENT,
    ));

    let mut rng = rng_for(opts, stream::WEAK_FORM);
    let mut weak: f64 = 0.0;
    for _ in 0..opts.data_count {
        let g = sampling::uniform_vector(nb, &mut rng);
        let sol = very_weak_solve(&g, pair.len(), pair, eig)?;
        weak = weak.max(weak_form_residual(&sol, &g, disc, opts.weak_tests, &mut rng));
    }
    checks.push(Check::at_most("weak_form", weak, tol::WEAK_FORM));

    let mesh = &p.mesh;
    let mut data = vec![
        DVector::from_element(nb, 1.0),
        DVector::from_vec(mesh.interpolate_boundary(|x, _| x)),
        DVector::from_vec(mesh.interpolate_boundary(|_, y| y)),
    ];
    let mut rng = rng_for(opts, stream::TRUNCATION);
    data.extend((0..opts.data_count).map(|_| sampling::uniform_vector(nb, &mut rng)));
    let mut trunc: f64 = 0.0;
    let mut right_inverse: f64 = 0.0;
    for g in &data {
        let lift = disc.harmonic_lift(g);
        let sol = very_weak_solve(g, pair.len(), pair, eig)?;
        trunc = trunc.max(l2.norm(&(&sol.field - &lift)));
        right_inverse = right_inverse.max((disc.forms.restrict(&lift) - g).amax());
    }
    checks.push(Check::at_most("full_truncation", trunc, tol::FULL_TRUNCATION));
    checks.push(Check::at_most(
        "lift_right_inverse",
        right_inverse,
        tol::LIFT_RIGHT_INVERSE,
    ));

    let mut rng = rng_for(opts, stream::PARSEVAL);
    let mut parseval: f64 = 0.0;
    for _ in 0..opts.data_count {
        let v = disc.harmonic_lift(&sampling::uniform_vector(nb, &mut rng));
        let nv2 = l2.inner(&v, &v);
        parseval = parseval.max((nv2 - eig.coefficients(&v).norm_squared()).abs() / nv2);
    }
    checks.push(Check::at_most("parseval", parseval, tol::PARSEVAL));

    let g = step_datum(mesh);
    let sol = very_weak_solve(&g, pair.len(), pair, eig)?;
    let step = regularity_from(&g, &sol, bases.bounds_g.a, bases.bounds_g.b, pair);
    checks.push(Check::at_least(
        "step_sandwich_slack",
        step.slack_low.min(step.slack_high),
        -tol::SANDWICH,
    ));
    let step_half_sum = sol.coefficients.norm_squared();

    let rellich = rellich_ratio(mesh, disc, opts.field_samples, &mut rng_for(opts, stream::RELLICH));
    let h1_range = h1_equivalence_check(mesh, suite, eig, opts.field_samples, &mut rng_for(opts, stream::H1))?;

    Ok(LevelReport {
        num_nodes: disc.num_nodes(),
        num_boundary: nb,
        modes: eig.len(),
        kappa_max: eig.kappa.first().copied().unwrap_or(f64::NAN),
        kappa_min: eig.kappa.last().copied().unwrap_or(f64::NAN),
        checks,
        bounds_g: bases.bounds_g,
        bounds_y: bases.bounds_y,
        biorthogonality_entrywise: bases.biorthogonality.entrywise,
        rellich,
        h1_range,
        step,
        step_half_sum,
    })
}
