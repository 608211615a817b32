//! Numerical and exact checks of how the Hadamard parametrix, the causal
//! propagator and Wick powers of the conformally coupled scalar field
//! transform under conformal embeddings.
//!
//! The layers build on each other: [`exprgeom`] (metrics from expressions and
//! their curvature), [`confmap`] (conformal embeddings and test functions),
//! [`worldfn`] (Synge's world function and the van Vleck determinant),
//! [`hadamard`] (the parametrix coefficients), [`propagator`] (retarded,
//! advanced and causal propagators on conformally flat charts), [`covcheck`]
//! (coincidence limits and covariance reports), [`wickalg`] (the field
//! algebra in exact arithmetic) and [`harness`] (catalogs, suites and
//! reports).

pub mod confmap;
pub mod covcheck;
pub mod error;
pub mod exprgeom;
pub mod hadamard;
pub mod harness;
pub mod jet;
pub mod linalg;
pub mod propagator;
pub mod quad;
pub mod scalar;
pub mod wickalg;
pub mod worldfn;

pub use confmap::{check_wave_conformal_law, ConformalEmbedding, TestFunction};
pub use covcheck::{alpha, b_kernel, Checker, CovarianceReport, LimitProbe};
pub use error::{Error, Result};
pub use exprgeom::{curvature, parse_expr, scalar_curvature, CoordBox, CurvatureBundle, Expr, Spacetime};
pub use hadamard::{HadamardConfig, HadamardKernel};
pub use harness::{catalog_load, run_suite, Catalog, RunConfig, RunReport, Suite};
pub use propagator::{causal_propagator_apply, symplectic_form, PropagatorConfig};
pub use scalar::Real;
pub use wickalg::{normal_form, wick_expand, AlgebraElement, PairingExpansion};
pub use worldfn::{geodesic_bvp, WorldFunctionData};

/// A point in chart coordinates.
pub type Point = [f64; 4];
/// A tangent vector in chart coordinates.
pub type Vector = linalg::Vec4<f64>;
/// A metric or other rank-two tensor in chart coordinates.
pub type Matrix = linalg::Mat4<f64>;
/// Curvature evaluated in plain floats.
pub type Curvature = CurvatureBundle<f64>;
