//! Finite-dimensional operator algebra over inner-product spaces with SPD Gram
//! matrices.
//!
//! Every computation that depends on the inner products goes through the
//! Cholesky factors `G = L Lᵀ` of the Grams: an operator `A: H₁ → H₂` is
//! *whitened* to `Ã = L₂ᵀ A L₁⁻ᵀ`, which acts between Euclidean spaces, and
//! Euclidean results are mapped back. Adjoints, Moore-Penrose inverses and
//! fractional powers are therefore the ones of the weighted spaces.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::dense;
use crate::error::{Error, Result};
use crate::sampling;

/// Default singular value cut-off, relative to the largest singular value.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Relative Gram-norm asymmetry tolerated before taking fractional powers.
pub const SELF_ADJOINT_TOL: f64 = 1e-8;

/// Relative asymmetry tolerated in a Gram matrix.
const GRAM_SYMMETRY_TOL: f64 = 1e-12;

/// A finite-dimensional inner-product space `(ℝᵈ, xᵀGy)`.
pub struct HilbertSpace {
    name: String,
    gram: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    l: DMatrix<f64>,
}

/// Shared handle to a [`HilbertSpace`]; operators refer to their domain and
/// codomain through it.
pub type Space = Arc<HilbertSpace>;

impl std::fmt::Debug for HilbertSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HilbertSpace")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .finish()
    }
}

impl HilbertSpace {
    pub fn new(name: impl Into<String>, gram: DMatrix<f64>) -> Result<Space> {
        let name = name.into();
        if !gram.is_square() || gram.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "Gram of `{name}` is {}x{}",
                gram.nrows(),
                gram.ncols()
            )));
        }
        let scale = gram.amax();
        let asym = (&gram - gram.transpose()).amax();
        if !scale.is_finite() || asym > GRAM_SYMMETRY_TOL * scale {
            return Err(Error::NotSpd {
                what: format!("Gram of `{name}` (asymmetry {asym:e})"),
            });
        }
        let sym = (&gram + gram.transpose()) * 0.5;
        let chol = Cholesky::new(sym.clone()).ok_or_else(|| Error::NotSpd {
            what: format!("Gram of `{name}`"),
        })?;
        let l = chol.l();
        Ok(Arc::new(Self {
            name,
            gram: sym,
            chol,
            l,
        }))
    }

    /// `ℝᵈ` with the identity Gram.
    pub fn euclidean(name: impl Into<String>, dim: usize) -> Space {
        Self::new(name, DMatrix::identity(dim, dim)).expect("identity is SPD")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Lower Cholesky factor `L` with `G = L Lᵀ`.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(&(&self.gram * y))
    }

    pub fn norm(&self, x: &DVector<f64>) -> f64 {
        self.inner(x, x).max(0.0).sqrt()
    }

    /// Column-wise Gram products `Xᵀ G Y`.
    pub fn cross_gram(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
        x.transpose() * (&self.gram * y)
    }

    /// `G⁻¹ · rhs`.
    pub fn solve(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(rhs)
    }

    /// `Lᵀ · m`: coordinates in which this space's inner product is Euclidean.
    fn whiten(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.l.tr_mul(m)
    }

    /// `L⁻ᵀ · m`, the inverse of [`Self::whiten`].
    fn unwhiten(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.l
            .tr_solve_lower_triangular(m)
            .expect("Cholesky factor is invertible")
    }

    /// `m · L⁻ᵀ`.
    fn unwhiten_right(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.l
            .solve_lower_triangular(&m.transpose())
            .expect("Cholesky factor is invertible")
            .transpose()
    }

    /// `m · Lᵀ`.
    fn whiten_right(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        m * self.l.transpose()
    }
}

/// `true` when both handles describe the same inner-product space.
pub fn same_space(a: &Space, b: &Space) -> bool {
    Arc::ptr_eq(a, b) || (a.dim() == b.dim() && a.gram == b.gram)
}

/// A linear map between two [`HilbertSpace`]s, stored as a dense matrix of
/// size `cod.dim × dom.dim`.
#[derive(Debug, Clone)]
pub struct Operator {
    matrix: DMatrix<f64>,
    dom: Space,
    cod: Space,
}

impl Operator {
    pub fn new(matrix: DMatrix<f64>, dom: Space, cod: Space) -> Result<Self> {
        if matrix.shape() != (cod.dim(), dom.dim()) {
            return Err(Error::Dimension(format!(
                "matrix is {}x{} but `{}` -> `{}` needs {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                dom.name(),
                cod.name(),
                cod.dim(),
                dom.dim()
            )));
        }
        Ok(Self { matrix, dom, cod })
    }

    pub fn identity(space: &Space) -> Self {
        let d = space.dim();
        Self {
            matrix: DMatrix::identity(d, d),
            dom: space.clone(),
            cod: space.clone(),
        }
    }

    pub fn zero(dom: &Space, cod: &Space) -> Self {
        Self {
            matrix: DMatrix::zeros(cod.dim(), dom.dim()),
            dom: dom.clone(),
            cod: cod.clone(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn dom(&self) -> &Space {
        &self.dom
    }

    pub fn cod(&self) -> &Space {
        &self.cod
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    /// `self ∘ rhs`.
    pub fn compose(&self, rhs: &Operator) -> Result<Operator> {
        if !same_space(&self.dom, &rhs.cod) {
            return Err(Error::Dimension(format!(
                "cannot compose `{}`->`{}` after `{}`->`{}`",
                self.dom.name(),
                self.cod.name(),
                rhs.dom.name(),
                rhs.cod.name()
            )));
        }
        Ok(Operator {
            matrix: &self.matrix * &rhs.matrix,
            dom: rhs.dom.clone(),
            cod: self.cod.clone(),
        })
    }

    fn check_same_shape(&self, other: &Operator) -> Result<()> {
        if same_space(&self.dom, &other.dom) && same_space(&self.cod, &other.cod) {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "operators act between different spaces (`{}`->`{}` vs `{}`->`{}`)",
                self.dom.name(),
                self.cod.name(),
                other.dom.name(),
                other.cod.name()
            )))
        }
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_same_shape(other)?;
        Ok(Operator {
            matrix: &self.matrix + &other.matrix,
            ..self.clone()
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.check_same_shape(other)?;
        Ok(Operator {
            matrix: &self.matrix - &other.matrix,
            ..self.clone()
        })
    }

    pub fn scale(&self, c: f64) -> Operator {
        Operator {
            matrix: &self.matrix * c,
            ..self.clone()
        }
    }

    /// `I + self`, for operators from a space to itself.
    pub fn plus_identity(&self) -> Result<Operator> {
        self.check_endomorphism()?;
        let mut m = self.matrix.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += 1.0;
        }
        Ok(Operator {
            matrix: m,
            ..self.clone()
        })
    }

    fn check_endomorphism(&self) -> Result<()> {
        if same_space(&self.dom, &self.cod) {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "operator `{}`->`{}` does not map a space to itself",
                self.dom.name(),
                self.cod.name()
            )))
        }
    }

    /// Matrix of the operator in orthonormal coordinates: `L_codᵀ A L_dom⁻ᵀ`.
    pub fn whitened(&self) -> DMatrix<f64> {
        self.dom.unwhiten_right(&self.cod.whiten(&self.matrix))
    }

    /// Inverse of [`Operator::whitened`]: `A = L_cod⁻ᵀ Ã L_domᵀ`.
    pub fn from_whitened(w: &DMatrix<f64>, dom: &Space, cod: &Space) -> Result<Operator> {
        let m = cod.unwhiten(&dom.whiten_right(w));
        Operator::new(m, dom.clone(), cod.clone())
    }

    /// Operator norm induced by the domain and codomain inner products.
    pub fn norm(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    /// The Hilbert adjoint, `G_dom⁻¹ Aᵀ G_cod`.
    pub fn adjoint(&self) -> Operator {
        let m = self.dom.solve(&(self.matrix.transpose() * self.cod.gram()));
        Operator {
            matrix: m,
            dom: self.cod.clone(),
            cod: self.dom.clone(),
        }
    }

    /// `‖A − A*‖ / ‖A‖` in the Gram norm (0 for the zero operator).
    pub fn self_adjoint_residual(&self) -> Result<f64> {
        self.check_endomorphism()?;
        let w = self.whitened();
        let scale = w.norm();
        if scale == 0.0 {
            return Ok(0.0);
        }
        Ok((&w - w.transpose()).norm() / scale)
    }

    /// Singular values of the whitened matrix, in decreasing order.
    ///
    /// Returns infinities if the SVD fails to converge, so that any threshold
    /// comparison on the result fails.
    pub fn singular_values(&self) -> Vec<f64> {
        let w = self.whitened();
        dense::singular_values(&w).unwrap_or_else(|_| vec![f64::INFINITY; w.nrows().min(w.ncols())])
    }

    /// Numerical rank with singular values `≤ rank_tol · σ_max` treated as zero.
    pub fn rank(&self, rank_tol: f64) -> usize {
        let s = self.singular_values();
        let Some(&max) = s.first() else { return 0 };
        if max == 0.0 {
            return 0;
        }
        s.iter().filter(|&&v| v > rank_tol * max).count()
    }
}

/// Free-function form of [`Operator::adjoint`].
pub fn adjoint(op: &Operator) -> Operator {
    op.adjoint()
}

/// Moore-Penrose inverse with respect to the Gram inner products: the SVD of
/// the whitened matrix is truncated at `rank_tol · σ_max` and inverted.
pub fn pseudo_inverse(op: &Operator, rank_tol: f64) -> Result<Operator> {
    if !(rank_tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("rank_tol must be >= 0, got {rank_tol}")));
    }
    let w = op.whitened();
    let (m, n) = w.shape();
    if m == 0 || n == 0 {
        return Ok(Operator::zero(op.cod(), op.dom()));
    }
    let svd = dense::svd(&w)?;
    let smax = svd.s[0];
    let kept = svd.s.iter().take_while(|&&s| smax > 0.0 && s > rank_tol * smax).count();
    let mut v = svd.v.columns(0, kept).into_owned();
    for (k, mut c) in v.column_iter_mut().enumerate() {
        c /= svd.s[k];
    }
    let pinv = v * svd.u.columns(0, kept).transpose();
    Operator::from_whitened(&pinv, op.cod(), op.dom())
}

/// `op^s` for a self-adjoint operator, through its eigendecomposition in the
/// Gram inner product.
///
/// Negative eigenvalues are only allowed for integer `s`; a zero eigenvalue
/// (up to `1e-12` relative to the spectral radius) is rejected when `s < 0`.
pub fn fractional_power(op: &Operator, s: f64) -> Result<Operator> {
    let residual = op.self_adjoint_residual()?;
    if residual > SELF_ADJOINT_TOL {
        return Err(Error::NotSelfAdjoint { residual });
    }
    let (values, q) = dense::sym_eigen(&op.whitened())?;
    let radius = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let zero_tol = 1e-12 * radius;
    let integer = s.fract() == 0.0;
    let mut mapped = DVector::from_vec(values);
    for lam in mapped.iter_mut() {
        let l = *lam;
        if s < 0.0 && l.abs() <= zero_tol {
            return Err(Error::FractionalPower {
                power: s,
                reason: format!("zero eigenvalue {l:e}"),
            });
        }
        *lam = if integer {
            l.powi(s as i32)
        } else if l < -zero_tol {
            return Err(Error::FractionalPower {
                power: s,
                reason: format!("negative eigenvalue {l:e}"),
            });
        } else {
            l.max(0.0).powf(s)
        };
    }
    let recomposed = &q * DMatrix::from_diagonal(&mapped) * q.transpose();
    Operator::from_whitened(&recomposed, op.dom(), op.cod())
}

/// `T_B = B(I+B*B)^{-1/2} + A*(I+B*B)^{-1/2}` for `B = A†`.
///
/// `T_B` is the Moore-Penrose inverse of `B*(I+BB*)^{-1/2}` and its adjoint
/// is `T_{B*} = t_operator(A*, B*)`.
pub fn t_operator(a: &Operator, b: &Operator) -> Result<Operator> {
    if !same_space(b.dom(), a.cod()) || !same_space(b.cod(), a.dom()) {
        return Err(Error::Dimension("t_operator needs b: cod(a) -> dom(a)".to_string()));
    }
    let root = fractional_power(&b.adjoint().compose(b)?.plus_identity()?, -0.5)?;
    b.compose(&root)?.add(&a.adjoint().compose(&root)?)
}

/// Orthogonal projector (in `space`'s inner product) onto the span of the
/// columns of `basis`.
///
/// Fails when the column Gram `XᵀGX` has condition number beyond `1/rank_tol`.
pub fn orthogonal_projector(basis: &DMatrix<f64>, space: &Space, rank_tol: f64) -> Result<Operator> {
    if basis.nrows() != space.dim() {
        return Err(Error::Dimension(format!(
            "basis has {} rows, space `{}` has dimension {}",
            basis.nrows(),
            space.name(),
            space.dim()
        )));
    }
    let k = basis.ncols();
    if k == 0 {
        return Ok(Operator::zero(space, space));
    }
    if k > space.dim() {
        return Err(Error::RankDeficient(format!(
            "{k} columns in a space of dimension {}",
            space.dim()
        )));
    }
    let svd = dense::svd(&space.whiten(basis))?;
    let (smax, smin) = (svd.s[0], svd.s[k - 1]);
    if smax == 0.0 || (smin / smax).powi(2) <= rank_tol {
        return Err(Error::RankDeficient(format!(
            "{k} columns with column-Gram condition {:e}",
            (smax / smin).powi(2)
        )));
    }
    let q = svd.u.columns(0, k);
    Operator::from_whitened(&(q * q.transpose()), space, space)
}

/// Residuals of the Moore-Penrose identity suite for `A` and `B = A†`.
///
/// Operator residuals are Gram-induced operator norms; the two norm
/// identities are maxima over sampled unit vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MpReport {
    /// `ABA − A`, `BAB − B`, `AB − (AB)*`, `BA − (BA)*`.
    pub penrose: [f64; 4],
    /// `A(I+A*A)⁻¹ = B*(I+BB*)⁻¹`.
    pub item1: f64,
    /// `(I+A*A)⁻¹ + (I+BB*)⁻¹ = I + P_N(B*)`.
    pub item2: f64,
    /// `A*(I+AA*)⁻¹ = B(I+B*B)⁻¹`.
    pub item3: f64,
    /// `(I+AA*)⁻¹ + (I+B*B)⁻¹ = I + P_N(A*)`.
    pub item4: f64,
    /// `(I+AA*)⁻¹ + (I+B*B)⁻¹ = I`, evaluated only when `A*` is injective.
    pub item5: Option<f64>,
    /// `N(A*(I+AA*)^{-1/2}) = N(A*) = N(B)`, as distances between null-space projectors.
    pub item6: f64,
    /// `‖x‖² = ‖B*(I+BB*)^{-1/2}x‖² + ‖(I+BB*)^{-1/2}x‖²` for all x.
    pub pythagoras_all: f64,
    /// `‖x‖² = ‖(I+BB*)^{-1/2}x‖² + ‖(I+A*A)^{-1/2}x‖²` for x in R(B).
    pub pythagoras_range: f64,
    /// With `X = B*(I+BB*)^{-1/2}`: `TXT − T`, `XTX − X`, `TX − P_R(B)`,
    /// `XT − P_R(B*)`, `B(I+B*B)^{-1/2}T_{B*} − P_R(B)`, `T_{B*}B(I+B*B)^{-1/2} − P_R(B*)`.
    pub t_penrose: [f64; 6],
    /// `(T_B)* − T_{B*}`.
    pub t_adjoint: f64,
    /// `A − (I+B*B)^{-1/2} T_{B*}`.
    pub decomposition: f64,
    pub a_star_injective: bool,
    pub rank: usize,
}

impl MpReport {
    /// Named residuals in a fixed order.
    pub fn entries(&self) -> Vec<(String, f64)> {
        let mut v = Vec::new();
        for (i, r) in self.penrose.iter().enumerate() {
            v.push((format!("penrose_{}", i + 1), *r));
        }
        v.push(("resolvent_1".into(), self.item1));
        v.push(("resolvent_2".into(), self.item2));
        v.push(("resolvent_3".into(), self.item3));
        v.push(("resolvent_4".into(), self.item4));
        if let Some(r) = self.item5 {
            v.push(("resolvent_5".into(), r));
        }
        v.push(("resolvent_6".into(), self.item6));
        v.push(("pythagoras_all".into(), self.pythagoras_all));
        v.push(("pythagoras_range".into(), self.pythagoras_range));
        for (i, r) in self.t_penrose.iter().enumerate() {
            v.push((format!("t_penrose_{}", i + 1), *r));
        }
        v.push(("t_adjoint".into(), self.t_adjoint));
        v.push(("decomposition".into(), self.decomposition));
        v
    }

    /// Names of every possible entry, in the order of [`MpReport::entries`].
    pub fn entry_names() -> Vec<String> {
        let mut v: Vec<String> = (1..=4).map(|i| format!("penrose_{i}")).collect();
        v.extend((1..=6).map(|i| format!("resolvent_{i}")));
        v.extend(["pythagoras_all".into(), "pythagoras_range".into()]);
        v.extend((1..=6).map(|i| format!("t_penrose_{i}")));
        v.extend(["t_adjoint".into(), "decomposition".into()]);
        v
    }

    pub fn max_residual(&self) -> f64 {
        self.entries().into_iter().map(|(_, r)| r).fold(0.0, f64::max)
    }
}

/// Runs the identity suite with [`sampling::DEFAULT_SEED`] and 16 samples for
/// the norm identities.
pub fn verify_mp_identities(a: &Operator, rank_tol: f64) -> Result<MpReport> {
    let mut rng = sampling::rng(sampling::DEFAULT_SEED);
    verify_mp_identities_with(a, rank_tol, 16, &mut rng)
}

pub fn verify_mp_identities_with(a: &Operator, rank_tol: f64, samples: usize, rng: &mut impl Rng) -> Result<MpReport> {
    let h1 = a.dom().clone();
    let h2 = a.cod().clone();
    let b = pseudo_inverse(a, rank_tol)?;
    let a_s = a.adjoint();
    let b_s = b.adjoint();
    let i1 = Operator::identity(&h1);
    let i2 = Operator::identity(&h2);
    let diff = |x: &Operator, y: &Operator| -> Result<f64> { Ok(x.sub(y)?.norm()) };

    let ab = a.compose(&b)?;
    let ba = b.compose(a)?;
    let penrose = [
        diff(&ab.compose(a)?, a)?,
        diff(&ba.compose(&b)?, &b)?,
        diff(&ab, &ab.adjoint())?,
        diff(&ba, &ba.adjoint())?,
    ];

    let inv = |x: &Operator| fractional_power(&x.plus_identity()?, -1.0);
    let inv_half = |x: &Operator| fractional_power(&x.plus_identity()?, -0.5);
    let ata = a_s.compose(a)?;
    let aat = a.compose(&a_s)?;
    let bbt = b.compose(&b_s)?;
    let btb = b_s.compose(&b)?;
    let (ata_inv, aat_inv, bbt_inv, btb_inv) = (inv(&ata)?, inv(&aat)?, inv(&bbt)?, inv(&btb)?);

    // P_R(B) = BA on H1, P_R(A) = AB on H2.
    let p_null_bs = i1.sub(&ba)?;
    let p_null_as = i2.sub(&ab)?;

    let item1 = diff(&a.compose(&ata_inv)?, &b_s.compose(&bbt_inv)?)?;
    let item2 = diff(&ata_inv.add(&bbt_inv)?, &i1.add(&p_null_bs)?)?;
    let item3 = diff(&a_s.compose(&aat_inv)?, &b.compose(&btb_inv)?)?;
    let sum4 = aat_inv.add(&btb_inv)?;
    let item4 = diff(&sum4, &i2.add(&p_null_as)?)?;
    let rank = a.rank(rank_tol);
    let a_star_injective = rank == h2.dim();
    let item5 = if a_star_injective {
        Some(diff(&sum4, &i2)?)
    } else {
        None
    };

    let null_projector = |x: &Operator| -> Result<Operator> {
        let xp = pseudo_inverse(x, rank_tol)?;
        Operator::identity(x.dom()).sub(&xp.compose(x)?)
    };
    let aat_inv_half = inv_half(&aat)?;
    let n1 = null_projector(&a_s.compose(&aat_inv_half)?)?;
    let n2 = null_projector(&a_s)?;
    let n3 = null_projector(&b)?;
    let item6 = diff(&n1, &n2)?.max(diff(&n2, &n3)?);

    let bbt_inv_half = inv_half(&bbt)?;
    let ata_inv_half = inv_half(&ata)?;
    let btb_inv_half = inv_half(&btb)?;
    let x_op = b_s.compose(&bbt_inv_half)?;
    let mut pythagoras_all: f64 = 0.0;
    let mut pythagoras_range: f64 = 0.0;
    for _ in 0..samples {
        let x = unit_sample(&h1, rng);
        let r = 1.0 - h2.norm(&x_op.apply(&x)).powi(2) - h1.norm(&bbt_inv_half.apply(&x)).powi(2);
        pythagoras_all = pythagoras_all.max(r.abs());

        let y = unit_sample(&h2, rng);
        let bx = b.apply(&y);
        let nb = h1.norm(&bx);
        if nb > 1e-12 * b.norm().max(f64::MIN_POSITIVE) {
            let x = bx / nb;
            let r = 1.0 - h1.norm(&bbt_inv_half.apply(&x)).powi(2) - h1.norm(&ata_inv_half.apply(&x)).powi(2);
            pythagoras_range = pythagoras_range.max(r.abs());
        }
    }

    let t_b = t_operator(a, &b)?;
    let t_bs = t_operator(&a_s, &b_s)?;
    let p_range_b = ba.clone();
    let p_range_bs = ab.clone();
    let txt = t_b.compose(&x_op)?.compose(&t_b)?;
    let xtx = x_op.compose(&t_b)?.compose(&x_op)?;
    let t_penrose = [
        diff(&txt, &t_b)?,
        diff(&xtx, &x_op)?,
        diff(&t_b.compose(&x_op)?, &p_range_b)?,
        diff(&x_op.compose(&t_b)?, &p_range_bs)?,
        diff(&b.compose(&btb_inv_half)?.compose(&t_bs)?, &p_range_b)?,
        diff(&t_bs.compose(&b.compose(&btb_inv_half)?)?, &p_range_bs)?,
    ];
    let t_adjoint = diff(&t_b.adjoint(), &t_bs)?;
    let decomposition = diff(a, &btb_inv_half.compose(&t_bs)?)?;

    Ok(MpReport {
        penrose,
        item1,
        item2,
        item3,
        item4,
        item5,
        item6,
        pythagoras_all,
        pythagoras_range,
        t_penrose,
        t_adjoint,
        decomposition,
        a_star_injective,
        rank,
    })
}

fn unit_sample(space: &Space, rng: &mut impl Rng) -> DVector<f64> {
    loop {
        let x = sampling::uniform_vector(space.dim(), rng);
        let n = space.norm(&x);
        if n > 1e-3 {
            return x / n;
        }
    }
}

/// Seeded random operator for the identity suite: dimensions in `1..=8`,
/// random SPD Grams on both sides, full rank on even `case` and a random
/// deficient rank (possibly zero) on odd `case`.
///
/// The nonzero singular values (in the Hilbert norms) are drawn from
/// `[1/4, 2]`, so residuals reflect the identities and not the conditioning.
pub fn random_mp_operator(case: usize, rng: &mut impl Rng) -> Result<Operator> {
    let d1 = rng.random_range(1..=8);
    let d2 = rng.random_range(1..=8);
    let full = d1.min(d2);
    let rank = if case % 2 == 0 { full } else { rng.random_range(0..full) };
    let h1 = HilbertSpace::new("h1", sampling::random_spd(d1, rng))?;
    let h2 = HilbertSpace::new("h2", sampling::random_spd(d2, rng))?;
    let u = sampling::uniform_matrix(d2, d2, rng).qr().q();
    let v = sampling::uniform_matrix(d1, d1, rng).qr().q();
    let s = DVector::from_fn(rank, |_, _| rng.random_range(0.25..2.0));
    let w = u.columns(0, rank) * DMatrix::from_diagonal(&s) * v.columns(0, rank).transpose();
    Operator::from_whitened(&w, &h1, &h2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_matrix_with_rank, random_spd, rng};

    fn space(name: &str, d: usize, r: &mut impl Rng) -> Space {
        HilbertSpace::new(name, random_spd(d, r)).unwrap()
    }

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.amax()
    }

    #[test]
    fn rejects_non_spd_gram() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(HilbertSpace::new("g", g), Err(Error::NotSpd { .. })));
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(HilbertSpace::new("g", g), Err(Error::NotSpd { .. })));
    }

    #[test]
    fn whitening_round_trip() {
        let mut r = rng(1);
        let (h1, h2) = (space("h1", 4, &mut r), space("h2", 3, &mut r));
        let a = Operator::new(random_matrix_with_rank(3, 4, 3, &mut r), h1.clone(), h2.clone()).unwrap();
        let back = Operator::from_whitened(&a.whitened(), &h1, &h2).unwrap();
        assert!(max_abs(&(back.matrix() - a.matrix())) < 1e-12);
    }

    #[test]
    fn adjoint_of_identity_and_plain_transpose() {
        let mut r = rng(2);
        let h = space("h", 4, &mut r);
        let id = Operator::identity(&h);
        assert!(max_abs(&(id.adjoint().matrix() - id.matrix())) < 1e-12);

        let e3 = HilbertSpace::euclidean("e3", 3);
        let e4 = HilbertSpace::euclidean("e4", 4);
        let m = random_matrix_with_rank(3, 4, 3, &mut r);
        let a = Operator::new(m.clone(), e4, e3).unwrap();
        assert_eq!(a.adjoint().matrix(), &m.transpose());
    }

    #[test]
    fn adjoint_pairing() {
        let mut r = rng(3);
        let (h1, h2) = (space("h1", 4, &mut r), space("h2", 3, &mut r));
        let a = Operator::new(random_matrix_with_rank(3, 4, 3, &mut r), h1.clone(), h2.clone()).unwrap();
        let a_s = a.adjoint();
        for _ in 0..20 {
            let x = sampling::uniform_vector(4, &mut r);
            let y = sampling::uniform_vector(3, &mut r);
            let lhs = h2.inner(&a.apply(&x), &y);
            let rhs = h1.inner(&x, &a_s.apply(&y));
            assert!((lhs - rhs).abs() <= 1e-12, "{lhs} vs {rhs}");
        }
        let back = a_s.adjoint();
        assert!(max_abs(&(back.matrix() - a.matrix())) < 1e-12);
    }

    #[test]
    fn pseudo_inverse_examples() {
        let e2 = HilbertSpace::euclidean("e2", 2);
        let id = Operator::identity(&e2);
        assert!(max_abs(&(pseudo_inverse(&id, 1e-12).unwrap().matrix() - id.matrix())) < 1e-15);

        let e3 = HilbertSpace::euclidean("e3", 3);
        let z = Operator::zero(&e2, &e3);
        let zp = pseudo_inverse(&z, 1e-12).unwrap();
        assert_eq!(zp.matrix().shape(), (2, 3));
        assert_eq!(zp.matrix().amax(), 0.0);

        let d = Operator::new(
            DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.0])),
            e2.clone(),
            e2.clone(),
        )
        .unwrap();
        let dp = pseudo_inverse(&d, 1e-12).unwrap();
        let want = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.0]));
        assert!(max_abs(&(dp.matrix() - want)) < 1e-15);

        assert!(pseudo_inverse(&d, -1.0).is_err());
    }

    #[test]
    fn pseudo_inverse_is_involutive_on_full_rank() {
        let mut r = rng(4);
        let (h1, h2) = (space("h1", 3, &mut r), space("h2", 5, &mut r));
        let a = Operator::new(random_matrix_with_rank(5, 3, 3, &mut r), h1, h2).unwrap();
        let app = pseudo_inverse(&pseudo_inverse(&a, DEFAULT_RANK_TOL).unwrap(), DEFAULT_RANK_TOL).unwrap();
        assert!(app.sub(&a).unwrap().norm() < 1e-10);
    }

    #[test]
    fn range_and_null_space_orthogonality() {
        let mut r = rng(5);
        let (h1, h2) = (space("h1", 5, &mut r), space("h2", 4, &mut r));
        let a = Operator::new(random_matrix_with_rank(4, 5, 2, &mut r), h1.clone(), h2.clone()).unwrap();
        let b = pseudo_inverse(&a, DEFAULT_RANK_TOL).unwrap();
        // null(A) is spanned by (I - BA); range(B) must be h1-orthogonal to it
        let null_a = Operator::identity(&h1).sub(&b.compose(&a).unwrap()).unwrap();
        let cross = h1.cross_gram(b.matrix(), null_a.matrix());
        assert!(cross.amax() < 1e-10);
        // null(B) = null(A*): projectors agree
        let proj = |x: &Operator| {
            let xp = pseudo_inverse(x, DEFAULT_RANK_TOL).unwrap();
            Operator::identity(x.dom()).sub(&xp.compose(x).unwrap()).unwrap()
        };
        assert!(proj(&b).sub(&proj(&a.adjoint())).unwrap().norm() < 1e-10);
    }

    #[test]
    fn fractional_power_examples() {
        let mut r = rng(6);
        let h = space("h", 4, &mut r);
        let id = Operator::identity(&h);
        for s in [-1.0, -0.5, 0.25, 2.0] {
            let p = fractional_power(&id, s).unwrap();
            assert!(p.sub(&id).unwrap().norm() < 1e-12);
        }
        let e1 = HilbertSpace::euclidean("e1", 1);
        let four = Operator::new(DMatrix::from_element(1, 1, 4.0), e1.clone(), e1).unwrap();
        assert!((fractional_power(&four, 0.5).unwrap().matrix()[(0, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn square_root_recomposes() {
        let mut r = rng(7);
        let h = space("h", 5, &mut r);
        // P = C*C + I is self-adjoint positive in h
        let c = Operator::new(random_matrix_with_rank(5, 5, 5, &mut r), h.clone(), h.clone()).unwrap();
        let p = c.adjoint().compose(&c).unwrap().plus_identity().unwrap();
        let root = fractional_power(&p, 0.5).unwrap();
        assert!(root.compose(&root).unwrap().sub(&p).unwrap().norm() < 1e-10 * p.norm());
    }

    #[test]
    fn fractional_power_errors() {
        let e2 = HilbertSpace::euclidean("e2", 2);
        let mk = |m: &[f64]| Operator::new(DMatrix::from_row_slice(2, 2, m), e2.clone(), e2.clone()).unwrap();
        assert!(matches!(
            fractional_power(&mk(&[1.0, 1.0, 0.0, 1.0]), 0.5),
            Err(Error::NotSelfAdjoint { .. })
        ));
        assert!(matches!(
            fractional_power(&mk(&[1.0, 0.0, 0.0, -1.0]), 0.5),
            Err(Error::FractionalPower { .. })
        ));
        assert!(matches!(
            fractional_power(&mk(&[1.0, 0.0, 0.0, 0.0]), -0.5),
            Err(Error::FractionalPower { .. })
        ));
        // integer powers of indefinite operators are fine
        let sq = fractional_power(&mk(&[1.0, 0.0, 0.0, -3.0]), 2.0).unwrap();
        assert!((sq.matrix()[(1, 1)] - 9.0).abs() < 1e-12);
    }

    #[test]
    fn t_operator_identity_case() {
        let mut r = rng(8);
        let h = space("h", 3, &mut r);
        let id = Operator::identity(&h);
        let t = t_operator(&id, &id).unwrap();
        assert!(t.sub(&id.scale(2f64.sqrt())).unwrap().norm() < 1e-12);
    }

    #[test]
    fn t_operator_penrose_and_adjoint() {
        let mut r = rng(9);
        let (h1, h2) = (space("h1", 4, &mut r), space("h2", 4, &mut r));
        let a = Operator::new(random_matrix_with_rank(4, 4, 4, &mut r), h1, h2).unwrap();
        let b = pseudo_inverse(&a, DEFAULT_RANK_TOL).unwrap();
        let t = t_operator(&a, &b).unwrap();
        let bs = b.adjoint();
        let x = bs
            .compose(&fractional_power(&b.compose(&bs).unwrap().plus_identity().unwrap(), -0.5).unwrap())
            .unwrap();
        let txt = t.compose(&x).unwrap().compose(&t).unwrap();
        assert!(txt.sub(&t).unwrap().norm() <= 1e-10);
        let t_bs = t_operator(&a.adjoint(), &bs).unwrap();
        assert!(t.adjoint().sub(&t_bs).unwrap().norm() <= 1e-10);
    }

    #[test]
    fn projector_examples() {
        let mut r = rng(10);
        let e3 = HilbertSpace::euclidean("e3", 3);
        let full = orthogonal_projector(&DMatrix::identity(3, 3), &e3, DEFAULT_RANK_TOL).unwrap();
        assert!(full.sub(&Operator::identity(&e3)).unwrap().norm() < 1e-12);
        let e1 = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let p = orthogonal_projector(&e1, &e3, DEFAULT_RANK_TOL).unwrap();
        let want = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 0.0]));
        assert!((p.matrix() - want).amax() < 1e-15);

        let h = space("h", 5, &mut r);
        let basis = random_matrix_with_rank(5, 2, 2, &mut r);
        let p = orthogonal_projector(&basis, &h, DEFAULT_RANK_TOL).unwrap();
        assert!(p.compose(&p).unwrap().sub(&p).unwrap().norm() <= 1e-11);
        assert!(p.self_adjoint_residual().unwrap() <= 1e-11);
        assert!((p.matrix() * &basis - &basis).amax() < 1e-11);

        let dup = DMatrix::from_columns(&[basis.column(0).into_owned(), basis.column(0).into_owned()]);
        assert!(matches!(
            orthogonal_projector(&dup, &h, DEFAULT_RANK_TOL),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn random_mp_operators_cover_both_regimes() {
        let mut r = rng(21);
        let (mut full, mut deficient) = (0, 0);
        for case in 0..40 {
            let a = random_mp_operator(case, &mut r).unwrap();
            let min = a.dom().dim().min(a.cod().dim());
            assert!(a.dom().dim() <= 8 && a.cod().dim() <= 8);
            if a.rank(DEFAULT_RANK_TOL) == min {
                full += 1;
            } else {
                deficient += 1;
            }
            let rep = verify_mp_identities_with(&a, DEFAULT_RANK_TOL, 8, &mut r).unwrap();
            assert!(rep.max_residual() <= 1e-9, "case {case}: {rep:?}");
        }
        assert!(full >= 20 && deficient >= 15, "{full} full, {deficient} deficient");
    }

    #[test]
    fn mp_suite_identity() {
        let e3 = HilbertSpace::euclidean("e3", 3);
        let rep = verify_mp_identities(&Operator::identity(&e3), DEFAULT_RANK_TOL).unwrap();
        assert!(rep.max_residual() < 1e-14, "{rep:?}");
        assert!(rep.a_star_injective);
    }

    #[test]
    fn mp_suite_full_rank_euclidean() {
        let mut r = rng(11);
        let (h1, h2) = (HilbertSpace::euclidean("e3", 3), HilbertSpace::euclidean("e5", 5));
        let a = Operator::new(random_matrix_with_rank(5, 3, 3, &mut r), h1, h2).unwrap();
        let rep = verify_mp_identities(&a, DEFAULT_RANK_TOL).unwrap();
        assert!(rep.max_residual() <= 1e-10, "{rep:?}");
        assert!(!rep.a_star_injective);
    }

    #[test]
    fn mp_suite_rank_deficient_weighted() {
        let mut r = rng(12);
        let (h1, h2) = (space("h1", 6, &mut r), space("h2", 6, &mut r));
        let a = Operator::new(random_matrix_with_rank(6, 6, 3, &mut r), h1, h2).unwrap();
        let rep = verify_mp_identities(&a, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(rep.rank, 3);
        assert!(rep.max_residual() <= 1e-9, "{rep:?}");
    }

    #[test]
    fn item5_needs_injective_adjoint() {
        let mut r = rng(13);
        let (h1, h2) = (space("h1", 4, &mut r), space("h2", 4, &mut r));
        let a = Operator::new(random_matrix_with_rank(4, 4, 2, &mut r), h1, h2.clone()).unwrap();
        let b = pseudo_inverse(&a, DEFAULT_RANK_TOL).unwrap();
        let inv = |x: &Operator| fractional_power(&x.plus_identity().unwrap(), -1.0).unwrap();
        let sum = inv(&a.compose(&a.adjoint()).unwrap())
            .add(&inv(&b.adjoint().compose(&b).unwrap()))
            .unwrap();
        // with a nontrivial N(A*) the sum exceeds I by the null projector (norm 1)
        let dropped = sum.sub(&Operator::identity(&h2)).unwrap().norm();
        assert!((dropped - 1.0).abs() < 1e-9, "{dropped}");
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]

        #[test]
        fn identity_suite_on_seeded_operators(seed in proptest::num::u64::ANY, case in 0usize..2) {
            let mut r = rng(seed);
            let a = random_mp_operator(case, &mut r).unwrap();
            let rep = verify_mp_identities_with(&a, DEFAULT_RANK_TOL, 4, &mut r).unwrap();
            proptest::prop_assert!(rep.max_residual() <= 1e-9, "{:?}", rep);
            let b = pseudo_inverse(&a, DEFAULT_RANK_TOL).unwrap();
            proptest::prop_assert_eq!(b.rank(DEFAULT_RANK_TOL), rep.rank);
        }
    }
}
