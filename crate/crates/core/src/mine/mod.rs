//! Neural estimation of mutual information.
//!
//! A [`StatisticsNetwork`] `T(x, y)` is trained to maximize the
//! Donsker-Varadhan lower bound
//!
//! ```text
//! I(X; Y) >= E_joint[T] - log E_marginal[exp T]
//! ```
//!
//! where marginal samples pair each `x` with a `y` from another row. Entropy
//! is estimated as `I(X; X)`.

mod estimator;
mod network;

pub use estimator::{
    dv_objective, estimate_entropy, estimate_mi, mi_report, objective_value, CurvePoint,
    MiReport, MiReportEntry, MineConfig, MineEstimate, Objective,
};
pub use network::{Adam, Dense, Gradients, StatisticsNetwork, LEAKY_SLOPE};
