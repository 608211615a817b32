//! Expression language and chart-based differential geometry.

pub mod curvature;
pub mod expr;
pub mod parser;
pub mod spacetime;
pub mod tape;
pub mod wave;

pub use curvature::{curvature, curvature_at, scalar_curvature, CurvatureBundle, SignConvention};
pub use expr::{Expr, Func};
pub use parser::{parse_expr, parse_expr_with, Params};
pub use spacetime::{sym_index, CoordBox, MetricDerivs, Spacetime};
pub use wave::{box_from_derivs, wave_from_derivs, wave_operator_apply};
