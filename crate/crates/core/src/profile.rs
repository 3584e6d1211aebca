//! The isoperimetric profile `Φ(s) = |B_s|_w`, its inverse `Ψ`, and the
//! radius solve for translated balls.

use crate::error::{LabError, Result};
use crate::measures::{offcenter_perimeter, offcenter_volume, AxisymmetricRules};
use crate::quadrature::{integrate_adaptive, ADAPTIVE_REL_TOL};
use crate::report::{ExperimentReport, Table};
use crate::unit_sphere_area;
use crate::weights::ConvexProfile;

const TABLE_STEP: f64 = 0.05;
const TABLE_POINTS: usize = 61;
const MAX_DOUBLINGS: usize = 60;

#[derive(Debug, Clone)]
pub struct Profile {
    pub w: ConvexProfile,
    pub n: usize,
    /// `(s, Φ(s))` on a uniform grid, truncated where `Φ` stops being finite.
    table: Vec<(f64, f64)>,
}

impl Profile {
    pub fn new(w: ConvexProfile, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(LabError::UnsupportedDimension {
                n,
                hint: "profiles need n >= 2",
            });
        }
        let mut p = Self {
            w,
            n,
            table: Vec::with_capacity(TABLE_POINTS),
        };
        for k in 0..TABLE_POINTS {
            let s = k as f64 * TABLE_STEP;
            let v = p.phi(s);
            if !v.is_finite() {
                break;
            }
            p.table.push((s, v));
        }
        Ok(p)
    }

    pub fn table(&self) -> &[(f64, f64)] {
        &self.table
    }

    /// `Φ(s) = n ω_n ∫_0^s t^{n−1} e^{w(t)} dt`.
    pub fn phi(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let k = self.n as i32 - 1;
        let (v, _) = integrate_adaptive(
            |t| t.powi(k) * self.w.w(t).exp(),
            0.0,
            s,
            &self.w.breakpoints(),
            ADAPTIVE_REL_TOL,
        );
        unit_sphere_area(self.n) * v
    }

    /// `Φ'(s) = n ω_n s^{n−1} e^{w(s)}`.
    pub fn phi_derivative(&self, s: f64) -> f64 {
        unit_sphere_area(self.n) * s.powi(self.n as i32 - 1) * self.w.w(s).exp()
    }

    fn bracket(&self, t: f64) -> Result<(f64, f64)> {
        let idx = self.table.partition_point(|(_, v)| *v < t);
        if idx == 0 {
            return Ok((0.0, 0.0));
        }
        if idx < self.table.len() {
            return Ok((self.table[idx - 1].0, self.table[idx].0));
        }
        let (mut lo, mut hi) = match self.table.last() {
            Some((s, _)) => (*s, (2.0 * s).max(1.0)),
            None => (0.0, 1.0),
        };
        for _ in 0..MAX_DOUBLINGS {
            let v = self.phi(hi);
            if !(v < t) {
                return Ok((lo, hi));
            }
            lo = hi;
            hi *= 2.0;
        }
        Err(LabError::Solver(format!(
            "no bracket for Φ(s) = {t:e}: Φ({lo:e}) is still below the target"
        )))
    }

    /// `Ψ(t) = Φ^{-1}(t)`: bisection to a 1e−3 bracket, then safeguarded Newton.
    pub fn psi(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(LabError::Argument(format!("Ψ needs a finite t >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let (mut lo, mut hi) = self.bracket(t)?;
        while hi - lo > 1e-3 * hi.max(1e-300) {
            let mid = 0.5 * (lo + hi);
            if self.phi(mid) < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut s = 0.5 * (lo + hi);
        for _ in 0..100 {
            let f = self.phi(s) - t;
            if f == 0.0 {
                return Ok(s);
            }
            if f < 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let d = self.phi_derivative(s);
            let mut next = s - f / d;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() <= 1e-15 * s {
                return Ok(next);
            }
            s = next;
        }
        let residual = (self.phi(s) - t).abs() / t;
        if residual < 1e-12 {
            Ok(s)
        } else {
            Err(LabError::Solver(format!(
                "Ψ({t:e}) did not converge: s = {s:e}, relative residual {residual:.3e}, bracket [{lo:e}, {hi:e}]"
            )))
        }
    }

    /// `Ψ'(t) = 1 / (n ω_n Ψ^{n−1} e^{w(Ψ)})`.
    pub fn psi_derivative(&self, t: f64) -> Result<f64> {
        Ok(1.0 / self.phi_derivative(self.psi(t)?))
    }

    /// Radius of the centered ball of weighted volume `m`.
    pub fn radius_for_mass(&self, m: f64) -> Result<f64> {
        if !(m > 0.0) {
            return Err(LabError::Argument(format!("mass must be positive, got {m}")));
        }
        self.psi(m)
    }

    /// `R_0 = r + 4 Ψ(1)`.
    pub fn truncation_radius(&self, r: f64) -> Result<f64> {
        Ok(r + 4.0 * self.psi(1.0)?)
    }
}

/// Checks `t ≤ n ω_n Ψ(t)^n e^{w(Ψ(t))}` at every sample.
pub fn check_profile_inequality(profile: &Profile, t_samples: &[f64]) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("profile-inequality");
    report.param("weight", profile.w.name());
    report.param("n", profile.n);
    let mut table = Table::new("profile_inequality", &["t", "psi", "bound", "ratio"]);
    let area = unit_sphere_area(profile.n);
    let mut min_ratio = f64::INFINITY;
    let mut all = true;
    for &t in t_samples {
        if !(t > 0.0) {
            return Err(LabError::Argument(format!("samples must be positive, got {t}")));
        }
        let s = profile.psi(t)?;
        let bound = area * s.powi(profile.n as i32) * profile.w.w(s).exp();
        let ratio = bound / t;
        all &= t <= bound;
        min_ratio = min_ratio.min(ratio);
        table.push(vec![t, s, bound, ratio]);
    }
    report.scalar("min_ratio", min_ratio, None);
    report.scalar("samples", t_samples.len() as f64, None);
    report.table(table);
    report.verdict(
        "inequality_holds",
        all,
        format!("min bound/t over samples = {min_ratio:.6}"),
    );
    Ok(report)
}

/// Radius `ρ(ε)` with `|B_ρ(ε e_1)|_w = |B_r|_w`.
///
/// The target is evaluated by the same axisymmetric quadrature at `ε = 0`, so
/// the solve is exact at `ε = 0` and consistent in `ε` for differencing.
/// Negative `ε` translates along the negative axis.
pub fn rho_of_eps(w: &ConvexProfile, r: f64, n: usize, eps: f64, rules: &AxisymmetricRules) -> Result<f64> {
    if !(r > 0.0) || !eps.is_finite() {
        return Err(LabError::Argument(format!(
            "rho_of_eps needs r > 0 and a finite eps, got r={r}, eps={eps}"
        )));
    }
    if eps == 0.0 || matches!(w, ConvexProfile::Zero) {
        return Ok(r);
    }
    let target = offcenter_volume(w, 0.0, r, n, rules)?;
    let f = |rho: f64| -> Result<f64> { Ok(offcenter_volume(w, eps, rho, n, rules)? - target) };

    let (mut lo, mut hi) = (0.5 * r, 2.0 * r);
    let (mut flo, mut fhi) = (f(lo)?, f(hi)?);
    let mut tries = 0;
    while flo > 0.0 || fhi < 0.0 {
        if tries == 20 {
            return Err(LabError::Solver(format!(
                "no bracket for rho(eps={eps}) around r={r}: f({lo:e}) = {flo:e}, f({hi:e}) = {fhi:e}"
            )));
        }
        if flo > 0.0 {
            lo *= 0.5;
            flo = f(lo)?;
        }
        if fhi < 0.0 {
            hi *= 2.0;
            fhi = f(hi)?;
        }
        tries += 1;
    }
    while hi - lo > 1e-3 * r {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut rho = 0.5 * (lo + hi);
    for _ in 0..100 {
        let v = f(rho)?;
        if v == 0.0 {
            return Ok(rho);
        }
        if v < 0.0 {
            lo = rho;
        } else {
            hi = rho;
        }
        let d = offcenter_perimeter(w, eps, rho, n, rules)?;
        let mut next = rho - v / d;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - rho).abs() <= 2.0 * f64::EPSILON * rho {
            rho = next;
            break;
        }
        rho = next;
    }
    let residual = f(rho)?.abs() / target;
    if residual > 1e-12 {
        return Err(LabError::Solver(format!(
            "rho(eps={eps}) residual {residual:.3e} exceeds 1e-12"
        )));
    }
    Ok(rho)
}

/// `ρ''(0) = −(r/n) N / D` with
/// `N = ∫_{B_r} e^w (w'² + w'' + (n−1) w'/|x|)` and
/// `D = n |B_r|_w + ∫_{B_r} e^w |x| w'`, each by radial quadrature.
pub fn rho_second_derivative(w: &ConvexProfile, r: f64, n: usize) -> Result<f64> {
    if !(r > 0.0) {
        return Err(LabError::Argument(format!("radius must be positive, got {r}")));
    }
    let m = n as f64;
    let k = n as i32 - 1;
    let breaks = w.breakpoints();
    let area = unit_sphere_area(n);
    let quad = |f: &dyn Fn(f64) -> f64| area * integrate_adaptive(f, 0.0, r, &breaks, ADAPTIVE_REL_TOL).0;
    let num = quad(&|s| {
        let j = w.jet(s);
        let radial = if s > 0.0 { (m - 1.0) * j[1] / s } else { (m - 1.0) * j[2] };
        s.powi(k) * j[0].exp() * (j[1] * j[1] + j[2] + radial)
    });
    let vol = quad(&|s| s.powi(k) * w.w(s).exp());
    let moment = quad(&|s| s.powi(k + 1) * w.w(s).exp() * w.dw(s));
    Ok(-(r / m) * num / (m * vol + moment))
}

/// Second derivative at `ε = 0` of `ε ↦ P_w(B_{ρ(ε)}(ε e_1))`:
/// `P_w(B_r) [ρ''(0) ((n−1)/r + w'(r)) + (w'² + w'' + (n−1) w'/r)/n]`.
pub fn translated_perimeter_second_derivative(w: &ConvexProfile, r: f64, n: usize) -> Result<f64> {
    let m = n as f64;
    let rho2 = rho_second_derivative(w, r, n)?;
    let j = w.jet(r);
    let perim = unit_sphere_area(n) * r.powi(n as i32 - 1) * j[0].exp();
    Ok(perim * (rho2 * ((m - 1.0) / r + j[1]) + (j[1] * j[1] + j[2] + (m - 1.0) * j[1] / r) / m))
}
