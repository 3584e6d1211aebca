//! Set models: nearly spherical sets, off-center balls, ellipsoids and the
//! ball-union counterexample.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::harmonics::{synthesize, HarmonicCoefficients, Synthesis};
use crate::quadrature::SphereRule;
use crate::unit_ball_volume;

/// `{ r x (1 + u(x)) : x ∈ S^{n-1} }` with `u` stored as harmonic coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearlySphericalSet {
    pub n: usize,
    pub radius: f64,
    pub u: HarmonicCoefficients,
}

impl NearlySphericalSet {
    pub fn new(radius: f64, u: HarmonicCoefficients) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(LabError::Argument(format!(
                "reference radius must be positive, got {radius}"
            )));
        }
        Ok(Self {
            n: u.n,
            radius,
            u,
        })
    }

    /// The centered ball `B_r`.
    pub fn ball(n: usize, radius: f64, max_degree: usize) -> Result<Self> {
        Self::new(radius, HarmonicCoefficients::zeros(n, max_degree)?)
    }

    /// `u` and `∇_τ u` at the rule nodes.
    pub fn sample(&self, rule: &SphereRule) -> Result<Synthesis> {
        if rule.n != self.n {
            return Err(LabError::Argument(format!(
                "rule dimension {} does not match set dimension {}",
                rule.n, self.n
            )));
        }
        Ok(synthesize(&self.u, &rule.nodes))
    }
}

/// Node-wise boundary data of a nearly spherical set.
#[derive(Debug, Clone)]
pub struct SurfaceElements {
    /// `r (1 + u(x_j))`.
    pub radii: Vec<f64>,
    /// Tangential Jacobian `r^{n-1} (1+u)^{n-2} √((1+u)² + |∇_τ u|²)`.
    pub jacobians: Vec<f64>,
    pub samples: Synthesis,
}

pub fn surface_elements_nearly_spherical(
    set: &NearlySphericalSet,
    rule: &SphereRule,
) -> Result<SurfaceElements> {
    let samples = set.sample(rule)?;
    let n = set.n as i32;
    let r = set.radius;
    let mut radii = Vec::with_capacity(rule.len());
    let mut jacobians = Vec::with_capacity(rule.len());
    for (j, u) in samples.values.iter().enumerate() {
        let one_u = 1.0 + u;
        if one_u <= 0.0 {
            return Err(LabError::DegenerateShape(format!(
                "1 + u = {one_u} at node {j}"
            )));
        }
        radii.push(r * one_u);
        let g2 = samples.grad_norm_sq(j);
        jacobians.push(r.powi(n - 1) * one_u.powi(n - 2) * (one_u * one_u + g2).sqrt());
    }
    Ok(SurfaceElements {
        radii,
        jacobians,
        samples,
    })
}

/// Sampled `(sup |u|, sup |∇_τ u|)`.
pub fn sample_w1inf(set: &NearlySphericalSet, rule: &SphereRule) -> Result<(f64, f64)> {
    let s = set.sample(rule)?;
    Ok((s.sup_abs(), s.sup_grad()))
}

/// `B_ρ(ε e_1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffCenterBall {
    pub n: usize,
    pub offset: f64,
    pub radius: f64,
}

impl OffCenterBall {
    pub fn new(n: usize, offset: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !(offset >= 0.0) || n < 2 {
            return Err(LabError::Argument(format!(
                "off-center ball needs n >= 2, offset >= 0, radius > 0 (got n={n}, {offset}, {radius})"
            )));
        }
        Ok(Self { n, offset, radius })
    }

    pub fn is_star_shaped_about_origin(&self) -> bool {
        self.offset < self.radius
    }

    /// Distance from the origin to the boundary along a direction making angle
    /// `θ` with `e_1` (requires `ε < ρ`).
    pub fn radial_function(&self, cos_theta: f64) -> f64 {
        let (e, r) = (self.offset, self.radius);
        let sin2 = (1.0 - cos_theta * cos_theta).max(0.0);
        e * cos_theta + (r * r - e * e * sin2).sqrt()
    }
}

/// Axis-aligned ellipsoid centered at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub semi_axes: Vec<f64>,
}

impl Ellipsoid {
    pub fn new(semi_axes: Vec<f64>) -> Result<Self> {
        if semi_axes.len() < 2 || semi_axes.iter().any(|a| !(*a > 0.0)) {
            return Err(LabError::Argument(format!(
                "ellipsoid needs at least two positive semi-axes, got {semi_axes:?}"
            )));
        }
        Ok(Self { semi_axes })
    }

    pub fn n(&self) -> usize {
        self.semi_axes.len()
    }

    /// `|S^{-1} x|` for a unit vector `x`.
    fn inverse_norm(&self, x: &[f64; 3]) -> f64 {
        self.semi_axes
            .iter()
            .zip(x)
            .map(|(a, xi)| (xi / a) * (xi / a))
            .sum::<f64>()
            .sqrt()
    }

    /// Radial graph `R(x) = 1 / |S^{-1} x|`.
    pub fn radial_function(&self, x: &[f64; 3]) -> f64 {
        1.0 / self.inverse_norm(x)
    }

    /// Area element of `x ↦ S x` at a unit vector: `det S · |S^{-1} x|`.
    pub fn area_element(&self, x: &[f64; 3]) -> f64 {
        self.semi_axes.iter().product::<f64>() * self.inverse_norm(x)
    }

    /// Boundary point `S x`.
    pub fn boundary_point(&self, x: &[f64; 3]) -> [f64; 3] {
        let mut y = [0.0; 3];
        for (d, a) in self.semi_axes.iter().enumerate() {
            y[d] = a * x[d];
        }
        y
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            semi_axes: self.semi_axes.iter().map(|a| a * factor).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn center_norm(&self) -> f64 {
        self.center.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let d2: f64 = self.center.iter().zip(x).map(|(c, y)| (c - y) * (c - y)).sum();
        d2 < self.radius * self.radius
    }
}

/// Parameters of the ball-union construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleParams {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    pub r: f64,
    pub count: usize,
    pub seed: u64,
    pub pool_size: usize,
}

impl CounterexampleParams {
    pub const DEFAULT_COUNT: usize = 200;
    pub const DEFAULT_POOL: usize = 200_000;

    pub fn new(n: usize, p: f64, alpha: f64, r: f64) -> Self {
        Self {
            n,
            p,
            alpha,
            r,
            count: Self::DEFAULT_COUNT,
            seed: 0,
            pool_size: Self::DEFAULT_POOL,
        }
    }

    /// Smallest admissible `α`: the perimeter series needs `n − 1 + p/α > 0`.
    pub fn alpha_lower_bound(n: usize, p: f64) -> f64 {
        (-p / (n as f64 - 1.0)).max(1.0)
    }

    /// Exponent `n − 1 + p/α` of the perimeter upper bound.
    pub fn perimeter_exponent(&self) -> f64 {
        self.n as f64 - 1.0 + self.p / self.alpha
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n as f64;
        if self.n < 2 {
            return Err(LabError::Argument(format!("n must be >= 2, got {}", self.n)));
        }
        if !(self.p < -n - 1.0) {
            return Err(LabError::Argument(format!(
                "p must satisfy p < -n-1 = {}, got {}",
                -n - 1.0,
                self.p
            )));
        }
        let lb = Self::alpha_lower_bound(self.n, self.p);
        if !(self.alpha > lb) {
            return Err(LabError::Argument(format!(
                "alpha must exceed max(1, -p/(n-1)) = {lb}, got {}",
                self.alpha
            )));
        }
        if !(self.r > 0.0 && self.r < 2f64.powf(-self.alpha)) {
            return Err(LabError::Argument(format!(
                "r must lie in (0, 2^-alpha) = (0, {:e}), got {:e}",
                2f64.powf(-self.alpha),
                self.r
            )));
        }
        if self.count == 0 {
            return Err(LabError::Argument("ball count N must be at least 1".into()));
        }
        Ok(())
    }

    /// `r_i = r 2^{-i/n}`.
    pub fn radius_at(&self, i: usize) -> f64 {
        self.r * 2f64.powf(-(i as f64) / self.n as f64)
    }
}

/// Finite truncation `⋃_{i<N} B_{r_i}(q_i)` of the counterexample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallUnion {
    pub params: CounterexampleParams,
    pub balls: Vec<Ball>,
    /// Index `h_i` of the candidate chosen for each ball.
    pub selection: Vec<usize>,
    /// Number of candidates generated.
    pub candidates_generated: usize,
    /// Whether `|q_i|^α > 2^α r_i` holds for every ball.
    pub condition_holds: bool,
    /// `Σ_{i≥N} ω_n r_i^n`, the volume of the omitted balls.
    pub volume_tail: f64,
}

impl BallUnion {
    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.balls.iter().any(|b| b.contains(x))
    }

    /// Sum of the stored ball volumes.
    pub fn volume_sum(&self) -> f64 {
        let omega = unit_ball_volume(self.n());
        self.balls
            .iter()
            .map(|b| omega * b.radius.powi(self.n() as i32))
            .sum()
    }

    /// Bound `Σ_{i≥0} ω_n r_i^n = 2 ω_n r^n` on the volume of the infinite union.
    pub fn volume_bound(&self) -> f64 {
        2.0 * unit_ball_volume(self.n()) * self.params.r.powi(self.n() as i32)
    }
}

fn uniform_in_unit_ball(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 < 1.0 && r2 > 0.0 {
            return x;
        }
    }
}

/// Builds the first `N` balls of the counterexample union.
///
/// Candidates `p_h` are a seeded uniform sample of `B_1`. Ball `i` takes the
/// first unused candidate with `|p_h|^α > 2^α r_i`.
pub fn build_counterexample(params: CounterexampleParams) -> Result<BallUnion> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut pool: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut used: Vec<bool> = Vec::new();
    let mut first_unused = 0usize;
    let mut balls = Vec::with_capacity(params.count);
    let mut selection = Vec::with_capacity(params.count);
    let mut condition_holds = true;

    for i in 0..params.count {
        let r_i = params.radius_at(i);
        // |q|^α > 2^α r_i  ⇔  |q| > 2 r_i^{1/α}
        let threshold = 2.0 * r_i.powf(1.0 / params.alpha);
        let mut h = first_unused;
        let chosen = loop {
            if h == pool.len() {
                if pool.len() >= params.pool_size {
                    return Err(LabError::PoolExhausted {
                        selected: i,
                        requested: params.count,
                        pool: params.pool_size,
                    });
                }
                let x = uniform_in_unit_ball(&mut rng, params.n);
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                pool.push((x, norm));
                used.push(false);
            }
            if !used[h] && pool[h].1 > threshold {
                break h;
            }
            h += 1;
        };
        used[chosen] = true;
        while first_unused < used.len() && used[first_unused] {
            first_unused += 1;
        }
        let (center, norm) = pool[chosen].clone();
        condition_holds &= norm.powf(params.alpha) > 2f64.powf(params.alpha) * r_i;
        balls.push(Ball { center, radius: r_i });
        selection.push(chosen);
    }

    let omega = unit_ball_volume(params.n);
    let volume_tail = omega * params.r.powi(params.n as i32) * 2f64.powf(1.0 - params.count as f64);
    Ok(BallUnion {
        params,
        balls,
        selection,
        candidates_generated: pool.len(),
        condition_holds,
        volume_tail,
    })
}

/// Tagged union used when shapes are stored in configs or reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Shape {
    NearlySpherical(NearlySphericalSet),
    OffCenterBall(OffCenterBall),
    Ellipsoid(Ellipsoid),
    BallUnion(BallUnion),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::build_sphere_rule;
    use std::f64::consts::PI;

    #[test]
    fn flat_set_has_unit_jacobian() {
        let rule = build_sphere_rule(2, 64).unwrap();
        let set = NearlySphericalSet::ball(2, 1.0, 4).unwrap();
        let el = surface_elements_nearly_spherical(&set, &rule).unwrap();
        assert!(el.jacobians.iter().all(|j| (j - 1.0).abs() < 1e-15));
        let perim = rule.integrate_values(&el.jacobians).unwrap();
        assert!((perim - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn constant_perturbation_is_rescaled_sphere() {
        for n in [2, 3] {
            let rule = build_sphere_rule(n, 32).unwrap();
            let c = 0.2;
            let a0 = c * crate::unit_sphere_area(n).sqrt();
            let u = HarmonicCoefficients::single(n, 3, 0, 1, a0).unwrap();
            let set = NearlySphericalSet::new(1.5, u).unwrap();
            let el = surface_elements_nearly_spherical(&set, &rule).unwrap();
            let expect = (1.5f64 * (1.0 + c)).powi(n as i32 - 1);
            assert!(el.jacobians.iter().all(|j| (j - expect).abs() < 1e-12));
            let perim = rule.integrate_values(&el.jacobians).unwrap();
            let ball = crate::unit_sphere_area(n) * expect;
            assert!((perim - ball).abs() < 1e-12 * ball);
        }
    }

    #[test]
    fn euclidean_perimeter_matches_polar_arclength() {
        let rule = build_sphere_rule(2, 256).unwrap();
        let amp = 0.05;
        let u = HarmonicCoefficients::single(2, 4, 2, 1, amp).unwrap();
        let set = NearlySphericalSet::new(1.0, u).unwrap();
        let el = surface_elements_nearly_spherical(&set, &rule).unwrap();
        let perim = rule.integrate_values(&el.jacobians).unwrap();
        // ρ(θ) = 1 + a cos 2θ / √π; oracle: composite Simpson on ∫√(ρ² + ρ'²) dθ
        let c = amp / PI.sqrt();
        let g = |t: f64| {
            let rho = 1.0 + c * (2.0 * t).cos();
            let drho = -2.0 * c * (2.0 * t).sin();
            (rho * rho + drho * drho).sqrt()
        };
        let m = 20000;
        let h = 2.0 * PI / m as f64;
        let mut s = g(0.0) + g(2.0 * PI);
        for i in 1..m {
            s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let oracle = s * h / 3.0;
        assert!((perim - oracle).abs() < 1e-10, "{perim} vs {oracle}");
    }

    #[test]
    fn degenerate_shape_is_rejected() {
        let rule = build_sphere_rule(2, 64).unwrap();
        let u = HarmonicCoefficients::single(2, 2, 1, 1, -2.0).unwrap();
        let set = NearlySphericalSet::new(1.0, u).unwrap();
        assert!(matches!(
            surface_elements_nearly_spherical(&set, &rule),
            Err(LabError::DegenerateShape(_))
        ));
    }

    #[test]
    fn w1inf_examples() {
        let rule = build_sphere_rule(2, 256).unwrap();
        let set = NearlySphericalSet::ball(2, 1.0, 3).unwrap();
        assert_eq!(sample_w1inf(&set, &rule).unwrap(), (0.0, 0.0));

        let a0 = 0.3 * (2.0 * PI).sqrt();
        let u = HarmonicCoefficients::single(2, 3, 0, 1, a0).unwrap();
        let (su, sg) = sample_w1inf(&NearlySphericalSet::new(1.0, u).unwrap(), &rule).unwrap();
        assert!((su - 0.3).abs() < 1e-15 && sg == 0.0);

        let u = HarmonicCoefficients::single(2, 3, 1, 1, 0.1).unwrap();
        let (su, sg) = sample_w1inf(&NearlySphericalSet::new(1.0, u).unwrap(), &rule).unwrap();
        let expect = 0.1 / PI.sqrt();
        assert!((su - expect).abs() < 1e-14);
        assert!((sg - expect).abs() < 1e-14);
    }

    #[test]
    fn ellipsoid_with_equal_axes_is_ball() {
        let e = Ellipsoid::new(vec![2.0, 2.0, 2.0]).unwrap();
        let x = [0.6, 0.0, 0.8];
        assert!((e.radial_function(&x) - 2.0).abs() < 1e-15);
        assert!((e.area_element(&x) - 4.0).abs() < 1e-14);
        assert!(Ellipsoid::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn off_center_radial_function() {
        let b = OffCenterBall::new(2, 0.1, 1.0).unwrap();
        assert!((b.radial_function(1.0) - 1.1).abs() < 1e-15);
        assert!((b.radial_function(-1.0) - 0.9).abs() < 1e-15);
        assert!(b.is_star_shaped_about_origin());
        assert!(!OffCenterBall::new(2, 1.5, 1.0).unwrap().is_star_shaped_about_origin());
    }

    fn params() -> CounterexampleParams {
        let mut p = CounterexampleParams::new(2, -4.0, 8.0, 1e-3);
        p.seed = 42;
        p
    }

    #[test]
    fn counterexample_condition_holds_for_every_ball() {
        let u = build_counterexample(params()).unwrap();
        assert_eq!(u.balls.len(), 200);
        assert!(u.condition_holds);
        let a = u.params.alpha;
        for b in &u.balls {
            assert!(b.center_norm().powf(a) > 2f64.powf(a) * b.radius);
            assert!(b.center_norm() < 1.0);
        }
    }

    #[test]
    fn counterexample_boundary_stays_away_from_origin() {
        let u = build_counterexample(params()).unwrap();
        let a = u.params.alpha;
        for b in &u.balls {
            let floor = b.radius.powf(1.0 / a);
            for k in 0..64 {
                let t = 2.0 * PI * k as f64 / 64.0;
                let x = [b.center[0] + b.radius * t.cos(), b.center[1] + b.radius * t.sin()];
                assert!((x[0] * x[0] + x[1] * x[1]).sqrt() >= floor);
            }
        }
    }

    #[test]
    fn counterexample_volume_bound() {
        let u = build_counterexample(params()).unwrap();
        let total = u.volume_sum() + u.volume_tail;
        assert!((total - u.volume_bound()).abs() < 1e-12 * u.volume_bound());
        assert!(u.volume_sum() <= u.volume_bound() * (1.0 + 1e-14));
    }

    #[test]
    fn counterexample_is_deterministic() {
        let a = build_counterexample(params()).unwrap();
        let b = build_counterexample(params()).unwrap();
        assert_eq!(a, b);
        let mut other = params();
        other.seed = 43;
        assert_ne!(a.balls, build_counterexample(other).unwrap().balls);
    }

    #[test]
    fn counterexample_parameter_validation() {
        let mut p = params();
        p.alpha = 3.0; // -p/(n-1) = 4
        assert!(p.validate().is_err());
        let mut p = params();
        p.r = 0.01; // >= 2^-8
        assert!(p.validate().is_err());
        let mut p = params();
        p.p = -2.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn counterexample_pool_exhaustion() {
        let mut p = params();
        p.pool_size = 10;
        assert!(matches!(
            build_counterexample(p),
            Err(LabError::PoolExhausted { .. })
        ));
    }

    #[test]
    fn shape_serde_roundtrip() {
        let s = Shape::OffCenterBall(OffCenterBall::new(3, 0.1, 1.0).unwrap());
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"type\":\"off-center-ball\""));
        let back: Shape = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
    }
}
