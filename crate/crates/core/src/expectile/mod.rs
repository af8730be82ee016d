//! The expectile loss family, error laws and the expectile-index equation.

pub mod diagnostics;
pub mod law;
pub mod loss;
pub mod tau;

pub use diagnostics::{check_assumptions, DiagnosticsReport};
pub use law::{solve_tau_for_law, ErrorLaw};
pub use loss::{g, h, rho};
pub use tau::{estimate_tau_empirical, standardize};
