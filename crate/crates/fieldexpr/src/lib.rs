//! Small symbolic expression engine for chart-local tensor fields.
//!
//! Expressions are immutable DAGs over named coordinates, parameters and
//! intermediate definitions held by a [`Chart`]. The engine provides exact
//! differentiation with respect to coordinates, complex IEEE evaluation with
//! domain checks, a plain-text grammar with round-trip printing, seeded
//! sampling of chart points subject to guard expressions, and a
//! scale-relative probabilistic zero test for fields.
//!
//! Simplification is deliberately limited to constant folding and the
//! obvious 0/1/conjugation identities: expressions stay close to what was
//! written, and correctness is checked numerically downstream.

mod chart;
mod error;
mod expr;
mod parser;

pub use chart::{
    zero_verdict, Chart, ChartBuilder, CoordSpec, ParamSpec, PointSample, ZeroVerdict,
};
pub use error::{ExprError, Result};
pub use expr::{C64, DiffCtx, EvalCtx, Expr, Func, Node};
pub use parser::parse_expr;
