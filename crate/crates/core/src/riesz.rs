//! The biorthogonal boundary bases `gₙ = K*φₙ/κₙ` and `yₙ = Γ₀φₙ/κₙ`, and
//! their verification suite.
//!
//! Coefficient-space maps use the plain Euclidean `ℓ²(N)`: the analysis
//! operator of a family `X` is `A_X x = (⟨x, xₙ⟩)ₙ` and its synthesis
//! operator is `S_X c = Σ cₙxₙ`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::dense;
use crate::error::{Error, Result};
use crate::hilbert::{HilbertSpace, Operator, Space};
use crate::operators::OperatorSuite;
use crate::sampling;
use crate::spectral::{clusters, EigenSystem};
use crate::tolerances;

/// Boundary coefficient columns of `(gₙ)` and `(yₙ)`.
#[derive(Debug, Clone)]
pub struct RieszBasisPair {
    pub g_cols: DMatrix<f64>,
    pub y_cols: DMatrix<f64>,
    pub kappa: Vec<f64>,
    pub boundary_space: Space,
}

impl RieszBasisPair {
    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    /// `A_G g = (⟨g, gₙ⟩_{Mb})ₙ`.
    pub fn analysis_g(&self, g: &DVector<f64>) -> DVector<f64> {
        self.g_cols.tr_mul(&(self.boundary_space.gram() * g))
    }

    /// `A_Y g = (⟨g, yₙ⟩_{Mb})ₙ`.
    pub fn analysis_y(&self, g: &DVector<f64>) -> DVector<f64> {
        self.y_cols.tr_mul(&(self.boundary_space.gram() * g))
    }

    /// `⟨gₙ, yₘ⟩_{Mb}`.
    pub fn cross_gram(&self) -> DMatrix<f64> {
        self.boundary_space.cross_gram(&self.g_cols, &self.y_cols)
    }
}

fn scale_columns(m: &DMatrix<f64>, s: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (mut c, &f) in out.column_iter_mut().zip(s) {
        c *= f;
    }
    out
}

/// Builds both bases from the modes; fails on `κₙ ≤` [`tolerances::KAPPA_FLOOR`].
pub fn build_bases(suite: &OperatorSuite, eig: &EigenSystem) -> Result<RieszBasisPair> {
    if let Some((index, &kappa)) = eig
        .kappa
        .iter()
        .enumerate()
        .find(|(_, &k)| !(k > tolerances::KAPPA_FLOOR))
    {
        return Err(Error::RankCollapse { index, kappa });
    }
    let inv: Vec<f64> = eig.kappa.iter().map(|k| 1.0 / k).collect();
    let g_cols = scale_columns(&(suite.k_star.matrix() * &eig.modes), &inv);
    let y_cols = scale_columns(&(suite.gamma0().matrix() * &eig.modes), &inv);
    Ok(RieszBasisPair {
        g_cols,
        y_cols,
        kappa: eig.kappa.clone(),
        boundary_space: suite.spaces().l2_boundary.clone(),
    })
}

/// `maxₙ max(‖Γ₀*gₙ − κₙφₙ‖_M, ‖Kyₙ − κₙφₙ‖_M)`.
pub fn basis_relation_residual(pair: &RieszBasisPair, suite: &OperatorSuite, eig: &EigenSystem) -> f64 {
    let target = scale_columns(&eig.modes, &pair.kappa);
    let a = suite.gamma0_star.matrix() * &pair.g_cols - &target;
    let b = suite.k.matrix() * &pair.y_cols - &target;
    let l2 = &suite.spaces().l2_omega;
    (0..pair.len())
        .map(|k| {
            l2.norm(&a.column(k).into_owned())
                .max(l2.norm(&b.column(k).into_owned()))
        })
        .fold(0.0, f64::max)
}

/// Extreme eigenvalues of the Gram of a family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RieszBounds {
    pub a: f64,
    pub b: f64,
    /// The family spans its space and `a > 0`.
    pub riesz: bool,
}

/// Optimal Riesz bounds of the columns in `space`: the extreme eigenvalues of
/// `Gᵢⱼ = ⟨xᵢ, xⱼ⟩`.
pub fn riesz_bounds(cols: &DMatrix<f64>, space: &Space) -> RieszBounds {
    if cols.ncols() == 0 {
        return RieszBounds {
            a: 0.0,
            b: 0.0,
            riesz: false,
        };
    }
    let ev = match dense::sym_eigenvalues(&space.cross_gram(cols, cols)) {
        Ok(ev) => ev,
        Err(_) => {
            return RieszBounds {
                a: 0.0,
                b: f64::NAN,
                riesz: false,
            }
        }
    };
    let b = ev[ev.len() - 1];
    let a = ev[0].max(0.0);
    let spans = cols.ncols() == space.dim();
    let positive = a > 1e-14 * b;
    RieszBounds {
        a: if positive { a } else { 0.0 },
        b,
        riesz: spans && positive,
    }
}

/// Largest sampled Bessel sum `Σₙ ⟨x, xₙ⟩²` over random unit `x`.
pub fn bessel_check(cols: &DMatrix<f64>, space: &Space, sample_count: usize, rng: &mut impl Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count.max(1) {
        let x = sampling::uniform_vector(space.dim(), rng);
        let nx = space.norm(&x);
        if nx == 0.0 {
            continue;
        }
        let c = cols.tr_mul(&(space.gram() * (x / nx)));
        worst = worst.max(c.norm_squared());
    }
    worst
}

/// Biorthogonality deviations of the cross-Gram `⟨gₙ, yₘ⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biorthogonality {
    /// `max |⟨gₙ, yₘ⟩ − δₙₘ|`.
    pub entrywise: f64,
    /// Off-cluster entries against zero and singular values of each
    /// diagonal cluster block against one; invariant under rotations inside
    /// degenerate clusters.
    pub cluster_blocked: f64,
}

pub fn biorthogonality(pair: &RieszBasisPair) -> Biorthogonality {
    let x = pair.cross_gram();
    let n = pair.len();
    let entrywise = (&x - DMatrix::identity(n, n)).amax();
    let k2: Vec<f64> = pair.kappa.iter().map(|k| k * k).collect();
    let mut cluster_blocked: f64 = 0.0;
    let cl = clusters(&k2);
    let mut owner = vec![0; n];
    for (c, r) in cl.iter().enumerate() {
        for i in r.clone() {
            owner[i] = c;
        }
        let block = x.view((r.start, r.start), (r.len(), r.len())).into_owned();
        for s in dense::singular_values(&block).unwrap_or_else(|_| vec![f64::INFINITY]) {
            cluster_blocked = cluster_blocked.max((s - 1.0).abs());
        }
    }
    for i in 0..n {
        for j in 0..n {
            if owner[i] != owner[j] {
                cluster_blocked = cluster_blocked.max(x[(i, j)].abs());
            }
        }
    }
    Biorthogonality {
        entrywise,
        cluster_blocked,
    }
}

/// `maxⱼ |dist(gⱼ, span{gₖ : k ≠ j}) · ‖yⱼ‖ − 1|`.
///
/// For a complete biorthogonal pair the distance of `gⱼ` to the span of the
/// other vectors is exactly `1/‖yⱼ‖`, so every `gⱼ` lies outside that span.
pub fn minimality_residual(pair: &RieszBasisPair) -> f64 {
    let space = &pair.boundary_space;
    let n = pair.len();
    if n < 2 {
        return 0.0;
    }
    let w = space.factor().tr_mul(&pair.g_cols);
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let others = w.clone().remove_column(j);
        let target = w.column(j).into_owned();
        let qr = others.qr();
        let q = qr.q();
        let resid = &target - &q * q.tr_mul(&target);
        let ny = space.norm(&pair.y_cols.column(j).into_owned());
        worst = worst.max((resid.norm() * ny - 1.0).abs());
    }
    worst
}

/// Operator-identity and sampled-expansion residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    /// `‖S_Y A_G − I‖`.
    pub sy_ag: f64,
    /// `‖S_G A_Y − I‖`.
    pub sg_ay: f64,
    /// `‖A_Y K* − M_κ A_Φ‖`.
    pub ay_kstar: f64,
    /// `‖A_G Γ₀ − M_κ A_Φ‖`.
    pub ag_gamma0: f64,
    /// `‖Γ₀ − S_Y A_Y K*‖`.
    pub gamma0_factor: f64,
    /// `‖Γ₀ − S_Y A_G Γ₀‖`.
    pub gamma0_factor_alt: f64,
    /// `‖K* − S_G A_G Γ₀‖`.
    pub kstar_factor: f64,
    /// `‖K* − S_G A_Y K*‖`.
    pub kstar_factor_alt: f64,
    /// `g − Σ⟨g, gₙ⟩yₙ` for `g ≡ 1`, relative.
    pub constant_expansion: f64,
    /// Sampled relative residuals of both expansions.
    pub expansion_g: f64,
    pub expansion_y: f64,
}

impl ReconstructionReport {
    pub fn operator_max(&self) -> f64 {
        [
            self.sy_ag,
            self.sg_ay,
            self.ay_kstar,
            self.ag_gamma0,
            self.gamma0_factor,
            self.gamma0_factor_alt,
            self.kstar_factor,
            self.kstar_factor_alt,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn expansion_max(&self) -> f64 {
        self.constant_expansion.max(self.expansion_g).max(self.expansion_y)
    }
}

pub fn reconstruction_check(
    pair: &RieszBasisPair,
    suite: &OperatorSuite,
    eig: &EigenSystem,
    sample_count: usize,
    rng: &mut impl Rng,
) -> Result<ReconstructionReport> {
    let lb = pair.boundary_space.clone();
    let l2 = suite.spaces().l2_omega.clone();
    let coef = HilbertSpace::euclidean("coefficients", pair.len());
    let op = |m: DMatrix<f64>, dom: &Space, cod: &Space| Operator::new(m, dom.clone(), cod.clone());

    let a_g = op(pair.g_cols.transpose() * lb.gram(), &lb, &coef)?;
    let a_y = op(pair.y_cols.transpose() * lb.gram(), &lb, &coef)?;
    let s_g = op(pair.g_cols.clone(), &coef, &lb)?;
    let s_y = op(pair.y_cols.clone(), &coef, &lb)?;
    let a_phi = op(eig.modes.transpose() * l2.gram(), &l2, &coef)?;
    let m_kappa = op(
        DMatrix::from_diagonal(&DVector::from_row_slice(&pair.kappa)),
        &coef,
        &coef,
    )?;
    let gamma0 = suite.gamma0();
    let k_star = &suite.k_star;
    let id_b = Operator::identity(&lb);

    let dist = |x: &Operator, y: &Operator| -> Result<f64> { Ok(x.sub(y)?.norm()) };
    let kphi = m_kappa.compose(&a_phi)?;
    let report_ops = (
        dist(&s_y.compose(&a_g)?, &id_b)?,
        dist(&s_g.compose(&a_y)?, &id_b)?,
        dist(&a_y.compose(k_star)?, &kphi)?,
        dist(&a_g.compose(&gamma0)?, &kphi)?,
        dist(&gamma0, &s_y.compose(&a_y)?.compose(k_star)?)?,
        dist(&gamma0, &s_y.compose(&a_g)?.compose(&gamma0)?)?,
        dist(k_star, &s_g.compose(&a_g)?.compose(&gamma0)?)?,
        dist(k_star, &s_g.compose(&a_y)?.compose(k_star)?)?,
    );

    let expand = |g: &DVector<f64>| -> (f64, f64) {
        let ng = lb.norm(g);
        let rg = g - &pair.y_cols * pair.analysis_g(g);
        let ry = g - &pair.g_cols * pair.analysis_y(g);
        (lb.norm(&rg) / ng, lb.norm(&ry) / ng)
    };
    let (c1, c2) = expand(&DVector::from_element(lb.dim(), 1.0));
    let mut expansion_g: f64 = 0.0;
    let mut expansion_y: f64 = 0.0;
    for _ in 0..sample_count.max(1) {
        let g = sampling::uniform_vector(lb.dim(), rng);
        let (a, b) = expand(&g);
        expansion_g = expansion_g.max(a);
        expansion_y = expansion_y.max(b);
    }
    Ok(ReconstructionReport {
        sy_ag: report_ops.0,
        sg_ay: report_ops.1,
        ay_kstar: report_ops.2,
        ag_gamma0: report_ops.3,
        gamma0_factor: report_ops.4,
        gamma0_factor_alt: report_ops.5,
        kstar_factor: report_ops.6,
        kstar_factor_alt: report_ops.7,
        constant_expansion: c1.max(c2),
        expansion_g,
        expansion_y,
    })
}

/// Hypotheses and conclusion of the complete-Bessel-biorthogonal criterion
/// for Riesz bases, each checked on its own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RieszChain {
    pub g_complete: bool,
    pub g_bessel: bool,
    pub y_complete: bool,
    pub y_bessel: bool,
    pub biorthogonal: bool,
    pub g_riesz: bool,
    pub y_riesz: bool,
}

impl RieszChain {
    pub fn holds(&self) -> bool {
        let hyp = self.g_complete && self.g_bessel && self.y_complete && self.y_bessel && self.biorthogonal;
        hyp && self.g_riesz && self.y_riesz
    }
}

/// Everything the verification suite measures about one basis pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RieszReport {
    pub seed: u64,
    pub biorthogonality: Biorthogonality,
    pub basis_relations: f64,
    pub minimality: f64,
    pub bounds_g: RieszBounds,
    pub bounds_y: RieszBounds,
    pub bessel_g: f64,
    pub bessel_y: f64,
    /// `|bounds(κₙgₙ) − eig(D G D)|` with `D = diag κ`.
    pub scaled_family: f64,
    pub reconstruction: ReconstructionReport,
    pub chain: RieszChain,
}

fn rank(cols: &DMatrix<f64>, space: &Space) -> usize {
    let s = dense::singular_values(&space.factor().tr_mul(cols)).unwrap_or_default();
    let max = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&v| v > 1e-12 * max).count()
}

/// Runs the full suite with the given seed.
pub fn verify_bases(
    pair: &RieszBasisPair,
    suite: &OperatorSuite,
    eig: &EigenSystem,
    sample_count: usize,
    seed: u64,
) -> Result<RieszReport> {
    let mut rng = sampling::rng(seed);
    let lb = &pair.boundary_space;
    let bounds_g = riesz_bounds(&pair.g_cols, lb);
    let bounds_y = riesz_bounds(&pair.y_cols, lb);
    let bessel_g = bessel_check(&pair.g_cols, lb, sample_count, &mut rng);
    let bessel_y = bessel_check(&pair.y_cols, lb, sample_count, &mut rng);

    let scaled = scale_columns(&pair.g_cols, &pair.kappa);
    let direct = riesz_bounds(&scaled, lb);
    let g = lb.cross_gram(&pair.g_cols, &pair.g_cols);
    let d = DMatrix::from_diagonal(&DVector::from_row_slice(&pair.kappa));
    let dgd = &d * g * &d;
    let ev = dense::sym_eigenvalues(&dgd)?;
    let scaled_family = (direct.b - ev[ev.len() - 1])
        .abs()
        .max((direct.a - ev[0].max(0.0)).abs());

    let biorth = biorthogonality(pair);
    let n = lb.dim();
    let chain = RieszChain {
        g_complete: rank(&pair.g_cols, lb) == n,
        g_bessel: bessel_g.is_finite() && bessel_g <= bounds_g.b + tolerances::BESSEL,
        y_complete: rank(&pair.y_cols, lb) == n,
        y_bessel: bessel_y.is_finite() && bessel_y <= bounds_y.b + tolerances::BESSEL,
        biorthogonal: biorth.cluster_blocked <= tolerances::BIORTHOGONALITY,
        g_riesz: bounds_g.riesz,
        y_riesz: bounds_y.riesz,
    };
    Ok(RieszReport {
        seed,
        biorthogonality: biorth,
        basis_relations: basis_relation_residual(pair, suite, eig),
        minimality: minimality_residual(pair),
        bounds_g,
        bounds_y,
        bessel_g,
        bessel_y,
        scaled_family,
        reconstruction: reconstruction_check(pair, suite, eig, sample_count, &mut rng)?,
        chain,
    })
}
