//! Shared numeric engine: quadrature, root finding, regression and
//! goodness-of-fit utilities. Everything here is pure and reentrant.

pub mod gof;
pub mod quadrature;
pub mod regression;
pub mod roots;

pub use gof::{
    chi_square_gof, chi_square_homogeneity, dispersion_index, mean_and_se, poisson_gof, poisson_pmf, GofResult,
};
pub use quadrature::{integrate, integrate_2d, integrate_semi_infinite, QuadratureResult, Tolerance};
pub use regression::{ols, ols_loglog, LineFit};
pub use roots::bisect_monotone;
