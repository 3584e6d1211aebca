//! Numerical laboratory for weighted isoperimetric problems.
//!
//! Two families of radial densities are covered: log-convex weights `e^{w(|x|)}`
//! with `w` even and convex, and negative powers `|x|^p`. The crate provides
//! quadrature on spheres, real spherical harmonics, star-shaped set models,
//! weighted perimeter and volume, the isoperimetric profile, and a set of
//! experiments that probe stability of the isoperimetric inequality for these
//! densities. Every experiment produces an [`ExperimentReport`] carrying its
//! own error budgets and pass/fail verdicts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod harmonics;
pub mod measures;
pub mod negpower;
pub mod penalized;
pub mod profile;
pub mod quadrature;
pub mod report;
pub mod runner;
pub mod shapes;
pub mod stability;
pub mod weights;

pub use error::{LabError, Result};
pub use report::ExperimentReport;

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let mut omega = if n.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = if n.is_multiple_of(2) { 2 } else { 3 };
    while k <= n {
        omega *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    omega
}

/// Surface measure `n ω_n` of the unit sphere `S^{n-1}`.
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-15);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-14);
    }
}
