//! Quadrature on `S^{n-1}` and on radial intervals.
//!
//! * `n = 2`: equispaced angles, spectrally accurate for periodic integrands.
//! * `n = 3`: Gauss–Legendre in `cos θ` times equispaced `φ`.
//! * Radial: Gauss–Legendre, fixed order or adaptive bisection.
//!
//! Every reduction is a sequential compensated sum in node order, so results
//! do not depend on thread scheduling.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{LabError, Result};
use crate::unit_sphere_area;

/// Default number of nodes on the circle.
pub const DEFAULT_RESOLUTION_2D: usize = 256;
/// Default number of `cos θ` nodes for `S²` (the `φ` direction gets twice as many).
pub const DEFAULT_RESOLUTION_3D: usize = 64;
/// Relative tolerance of the adaptive radial integrator.
pub const ADAPTIVE_REL_TOL: f64 = 1e-12;

pub fn default_resolution(n: usize) -> usize {
    if n == 2 {
        DEFAULT_RESOLUTION_2D
    } else {
        DEFAULT_RESOLUTION_3D
    }
}

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct Summation {
    sum: f64,
    comp: f64,
}

impl Summation {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for Summation {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Summation::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn compute(order: usize) -> Self {
        let m = order;
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        for i in 0..m.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(m, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Cached rule of the given order.
    pub fn of_order(order: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard
            .entry(order)
            .or_insert_with(|| Arc::new(GaussLegendre::compute(order)))
            .clone()
    }

    /// `∫_a^b f` with this rule mapped to `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut s = Summation::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s.add(w * f(mid + half * x));
        }
        half * s.value()
    }
}

/// `(P_m(x), P_m'(x))` by the three-term recurrence.
fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature nodes and weights on the unit sphere `S^{n-1}`, `n ∈ {2, 3}`.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub n: usize,
    /// Unit vectors; the unused third component is zero when `n = 2`.
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub resolution: usize,
    coarse: OnceLock<Box<SphereRule>>,
}

/// Builds the product rule described in the module docs.
pub fn build_sphere_rule(n: usize, resolution: usize) -> Result<SphereRule> {
    SphereRule::new(n, resolution)
}

impl SphereRule {
    pub fn new(n: usize, resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(LabError::Argument(format!(
                "sphere rule resolution must be at least 2, got {resolution}"
            )));
        }
        let (nodes, weights) = match n {
            2 => {
                let w = 2.0 * PI / resolution as f64;
                let nodes = (0..resolution)
                    .map(|j| {
                        let t = 2.0 * PI * j as f64 / resolution as f64;
                        [t.cos(), t.sin(), 0.0]
                    })
                    .collect();
                (nodes, vec![w; resolution])
            }
            3 => {
                let gl = GaussLegendre::of_order(resolution);
                let nphi = 2 * resolution;
                let dphi = 2.0 * PI / nphi as f64;
                let mut nodes = Vec::with_capacity(resolution * nphi);
                let mut weights = Vec::with_capacity(resolution * nphi);
                for (z, wz) in gl.nodes.iter().zip(&gl.weights) {
                    let s = (1.0 - z * z).max(0.0).sqrt();
                    for k in 0..nphi {
                        let phi = dphi * k as f64;
                        nodes.push([s * phi.cos(), s * phi.sin(), *z]);
                        weights.push(wz * dphi);
                    }
                }
                (nodes, weights)
            }
            _ => {
                return Err(LabError::UnsupportedDimension {
                    n,
                    hint: "full sphere rules exist for n = 2, 3; use the axisymmetric operations",
                })
            }
        };
        Ok(Self {
            n,
            nodes,
            weights,
            resolution,
            coarse: OnceLock::new(),
        })
    }

    pub fn with_default_resolution(n: usize) -> Result<Self> {
        Self::new(n, default_resolution(n))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Companion rule at half resolution, used for error estimates.
    pub fn coarse(&self) -> &SphereRule {
        self.coarse.get_or_init(|| {
            Box::new(SphereRule::new(self.n, (self.resolution / 2).max(2)).expect("valid rule"))
        })
    }

    /// `Σ w_j f(x_j)`, failing on non-finite integrand values.
    pub fn integrate(&self, mut f: impl FnMut(&[f64; 3]) -> f64) -> Result<f64> {
        let mut s = Summation::default();
        for (index, (x, w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let value = f(x);
            if !value.is_finite() {
                return Err(LabError::Integrand { index, value });
            }
            s.add(w * value);
        }
        Ok(s.value())
    }

    /// `Σ w_j v_j` for node-wise values.
    pub fn integrate_values(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(LabError::Argument(format!(
                "{} values for a rule with {} nodes",
                values.len(),
                self.len()
            )));
        }
        let mut s = Summation::default();
        for (index, (v, w)) in values.iter().zip(&self.weights).enumerate() {
            if !v.is_finite() {
                return Err(LabError::Integrand { index, value: *v });
            }
            s.add(w * v);
        }
        Ok(s.value())
    }

    /// Value on this rule and `|fine − coarse|` as its error estimate.
    pub fn integrate_with_error(
        &self,
        mut f: impl FnMut(&[f64; 3]) -> f64,
    ) -> Result<(f64, f64)> {
        let fine = self.integrate(&mut f)?;
        let coarse = self.coarse().integrate(&mut f)?;
        Ok((fine, (fine - coarse).abs()))
    }

    /// Total measure `n ω_n` of the sphere.
    pub fn total_measure(&self) -> f64 {
        unit_sphere_area(self.n)
    }
}

/// Free-function form of [`SphereRule::integrate`].
pub fn integrate_sphere(rule: &SphereRule, f: impl FnMut(&[f64; 3]) -> f64) -> Result<f64> {
    rule.integrate(f)
}

/// Gauss–Legendre rule on `[a, b]`.
#[derive(Debug, Clone)]
pub struct RadialRule {
    pub a: f64,
    pub b: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

pub fn build_radial_rule(a: f64, b: f64, order: usize) -> Result<RadialRule> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(LabError::Argument(format!(
            "radial rule needs a < b, got [{a}, {b}]"
        )));
    }
    if order < 2 {
        return Err(LabError::Argument(format!(
            "radial rule order must be at least 2, got {order}"
        )));
    }
    let gl = GaussLegendre::of_order(order);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    Ok(RadialRule {
        a,
        b,
        nodes: gl.nodes.iter().map(|x| mid + half * x).collect(),
        weights: gl.weights.iter().map(|w| half * w).collect(),
        order,
    })
}

impl RadialRule {
    /// Largest polynomial degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        2 * self.order - 1
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(*x))
            .collect::<Summation>()
            .value()
    }

    /// Adaptive bisection on this rule's interval; see [`integrate_adaptive`].
    pub fn integrate_adaptive(&self, f: impl FnMut(f64) -> f64) -> (f64, f64) {
        integrate_adaptive(f, self.a, self.b, &[], ADAPTIVE_REL_TOL)
    }
}

const PANEL_ORDER: usize = 20;
const MAX_DEPTH: usize = 40;

/// Adaptive Gauss–Legendre integration of `f` over `[a, b]`.
///
/// The interval is first split at every breakpoint inside it. A panel is
/// accepted when its two halves agree with the whole to `rel_tol` relative
/// (with an absolute floor scaled by the initial estimate). Returns the value
/// and the accumulated disagreement as an error estimate.
pub fn integrate_adaptive(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    rel_tol: f64,
) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts = vec![lo];
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&t| t > lo && t < hi)
        .collect();
    inner.sort_by(|x, y| x.total_cmp(y));
    cuts.extend(inner);
    cuts.push(hi);

    let gl = GaussLegendre::of_order(PANEL_ORDER);
    let scale = cuts
        .windows(2)
        .map(|w| gl.integrate(w[0], w[1], &mut f).abs())
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);

    let mut total = Summation::default();
    let mut error = 0.0;
    for w in cuts.windows(2) {
        let whole = gl.integrate(w[0], w[1], &mut f);
        let (v, e) = refine(&gl, &mut f, w[0], w[1], whole, rel_tol, scale, 0);
        total.add(v);
        error += e;
    }
    (sign * total.value(), error)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    gl: &GaussLegendre,
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    rel_tol: f64,
    scale: f64,
    depth: usize,
) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let left = gl.integrate(a, mid, &mut *f);
    let right = gl.integrate(mid, b, &mut *f);
    let diff = (left + right - whole).abs();
    if diff <= rel_tol * (left + right).abs().max(1e-3 * scale) || depth >= MAX_DEPTH {
        return (left + right, diff);
    }
    let (l, el) = refine(gl, f, a, mid, left, rel_tol, scale, depth + 1);
    let (r, er) = refine(gl, f, mid, b, right, rel_tol, scale, depth + 1);
    (l + r, el + er)
}

/// Fixed-order Gauss–Legendre on `[a, b]` split at breakpoints.
pub fn integrate_split(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    order: usize,
) -> f64 {
    let gl = GaussLegendre::of_order(order);
    let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut s = Summation::default();
    let mut start = lo;
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&t| t > lo && t < hi)
        .collect();
    inner.sort_by(|x, y| x.total_cmp(y));
    for cut in inner.into_iter().chain(std::iter::once(hi)) {
        s.add(gl.integrate(start, cut, &mut f));
        start = cut;
    }
    sign * s.value()
}
