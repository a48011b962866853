//! Thresholds for the hard invariants checked by the pipeline.
//!
//! A run passes only if every checked residual is at or below its threshold.

/// `‖C − C′‖` between the two formulas for the core operator.
pub const STRUCTURAL: f64 = 1e-8;
/// Beyond this the core operator is rejected outright.
pub const STRUCTURAL_HARD: f64 = 1e-6;
/// M-self-adjointness of the core operator.
pub const CORE_SELF_ADJOINT: f64 = 1e-8;
/// `‖E₁* − Γ*K*‖`.
pub const HARMONIC_FACTORIZATION: f64 = 1e-9;
/// `⟨Kg, f⟩ − ⟨g, K*f⟩` pairing.
pub const K_ADJOINT: f64 = 1e-9;
/// Interior rows of `A·u` for discretely harmonic `u`, relative to `‖A‖‖u‖`.
pub const HARMONIC_ROWS: f64 = 1e-10;
/// Right-inverse property of the harmonic lift.
pub const LIFT_RIGHT_INVERSE: f64 = 1e-10;
/// Harmonic lift against the pseudo-inverse of the trace, in the S norm.
pub const LIFT_VS_PINV: f64 = 1e-9;
/// M-orthonormality of the modes.
pub const MODE_ORTHONORMALITY: f64 = 1e-9;
/// Per-mode eigen-residual `‖Cφ − κ²φ‖_M`.
pub const EIGEN_RESIDUAL: f64 = 1e-8;
/// Eigenvalues of the core below `-NEGATIVE_EIGENVALUE` are an error.
pub const NEGATIVE_EIGENVALUE: f64 = 1e-10;
/// `κ` below this is a rank collapse.
pub const KAPPA_FLOOR: f64 = 1e-12;
/// Relative gap grouping eigenvalues into one cluster.
pub const CLUSTER_GAP: f64 = 1e-8;
/// `⟨gₙ, yₘ⟩ − δₙₘ`.
pub const BIORTHOGONALITY: f64 = 1e-8;
/// `Γ₀*gₙ = κₙφₙ = Kyₙ`.
pub const BASIS_RELATIONS: f64 = 1e-8;
/// Expansions and the analysis/synthesis factorizations.
pub const RECONSTRUCTION: f64 = 1e-8;
/// `A_Y K* = M_κ A_Φ = A_G Γ₀`.
pub const COEFFICIENT_MAPS: f64 = 1e-9;
/// Sampled Bessel sums against the upper Riesz bound.
pub const BESSEL: f64 = 1e-9;
/// Riesz bounds of a scaled family against the scaled Gram.
pub const SCALED_FAMILY: f64 = 1e-10;
/// Two evaluations of the `H_{1/2}` norm.
pub const HALF_NORM_AGREEMENT: f64 = 1e-9;
/// Slack allowed in the regularity sandwich.
pub const SANDWICH: f64 = 1e-9;
/// Weak-form residual against zero-trace tests.
pub const WEAK_FORM: f64 = 1e-7;
/// Full-truncation expansion against the harmonic lift, in the M norm.
pub const FULL_TRUNCATION: f64 = 1e-8;
/// Parseval identity on the harmonic span.
pub const PARSEVAL: f64 = 1e-9;
/// Membership of a vector in the harmonic span (relative projection residual).
pub const HARMONIC_SPAN: f64 = 1e-8;
/// Area and perimeter conservation.
pub const GEOMETRY: f64 = 1e-12;

/// Every residual of the Moore-Penrose identity suite.
pub const MOORE_PENROSE: f64 = 1e-9;
