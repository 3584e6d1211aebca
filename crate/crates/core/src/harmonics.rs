//! Real spherical harmonics on `S¹` and `S²`.
//!
//! Each basis function is evaluated through a polynomial extension `F` that
//! agrees with `Y_{k,i}` on the sphere, so the tangential gradient is
//! `∇F − (∇F·x) x` and stays regular at the poles.
//!
//! Index convention for degree `k`: `i = 1` is the zonal / cosine-free mode
//! (`m = 0`), `i = 2m` carries `cos(mφ)` and `i = 2m + 1` carries `sin(mφ)`.
//! On the circle `i = 1` is `cos(kθ)` and `i = 2` is `sin(kθ)` for `k ≥ 1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::quadrature::SphereRule;

/// Default truncation degree.
pub const DEFAULT_MAX_DEGREE: usize = 16;

/// Number `G(n, k)` of independent harmonics of degree `k` on `S^{n-1}`.
pub fn multiplicity(n: usize, k: usize) -> usize {
    match n {
        2 => {
            if k == 0 {
                1
            } else {
                2
            }
        }
        3 => 2 * k + 1,
        _ => {
            // dim of harmonic homogeneous polynomials of degree k in n variables
            let binom = |a: usize, b: usize| -> usize {
                if b > a {
                    return 0;
                }
                (0..b).fold(1usize, |acc, j| acc * (a - j) / (j + 1))
            };
            binom(n + k - 1, k) - if k >= 2 { binom(n + k - 3, k - 2) } else { 0 }
        }
    }
}

/// Laplace–Beltrami eigenvalue `k(k + n − 2)`.
pub fn eigenvalue(n: usize, k: usize) -> f64 {
    (k * (k + n - 2)) as f64
}

fn offset(n: usize, k: usize) -> usize {
    match n {
        2 => {
            if k == 0 {
                0
            } else {
                2 * k - 1
            }
        }
        _ => k * k,
    }
}

fn basis_count(n: usize, max_degree: usize) -> usize {
    offset(n, max_degree + 1)
}

fn check_dimension(n: usize) -> Result<()> {
    if n == 2 || n == 3 {
        Ok(())
    } else {
        Err(LabError::UnsupportedDimension {
            n,
            hint: "harmonic bases exist for n = 2, 3 only",
        })
    }
}

/// Truncated expansion `Σ a_{k,i} Y_{k,i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicCoefficients {
    pub n: usize,
    pub max_degree: usize,
    coeffs: Vec<f64>,
}

impl HarmonicCoefficients {
    pub fn zeros(n: usize, max_degree: usize) -> Result<Self> {
        check_dimension(n)?;
        Ok(Self {
            n,
            max_degree,
            coeffs: vec![0.0; basis_count(n, max_degree)],
        })
    }

    /// Coefficients from a flat vector in index order.
    pub fn from_vec(n: usize, max_degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_dimension(n)?;
        if coeffs.len() != basis_count(n, max_degree) {
            return Err(LabError::Argument(format!(
                "expected {} coefficients for degree {max_degree}, got {}",
                basis_count(n, max_degree),
                coeffs.len()
            )));
        }
        Ok(Self {
            n,
            max_degree,
            coeffs,
        })
    }

    /// A single mode `value · Y_{k,i}`.
    pub fn single(n: usize, max_degree: usize, k: usize, i: usize, value: f64) -> Result<Self> {
        let mut c = Self::zeros(n, max_degree)?;
        c.set(k, i, value)?;
        Ok(c)
    }

    pub fn index(&self, k: usize, i: usize) -> Result<usize> {
        if k > self.max_degree || i == 0 || i > multiplicity(self.n, k) {
            return Err(LabError::Argument(format!(
                "harmonic index (k={k}, i={i}) out of range for n={}, K={}",
                self.n, self.max_degree
            )));
        }
        Ok(offset(self.n, k) + i - 1)
    }

    pub fn get(&self, k: usize, i: usize) -> Result<f64> {
        Ok(self.coeffs[self.index(k, i)?])
    }

    pub fn set(&mut self, k: usize, i: usize, value: f64) -> Result<()> {
        let idx = self.index(k, i)?;
        self.coeffs[idx] = value;
        Ok(())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// Iterates `(k, i, a_{k,i})`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..=self.max_degree).flat_map(move |k| {
            (1..=multiplicity(self.n, k)).map(move |i| (k, i, self.coeffs[offset(self.n, k) + i - 1]))
        })
    }

    /// Degree of each flat coefficient slot.
    pub fn degrees(&self) -> Vec<usize> {
        self.iter().map(|(k, _, _)| k).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= factor);
        out
    }

    /// Same expansion with a different truncation degree (zero padded or cut).
    pub fn with_max_degree(&self, max_degree: usize) -> Self {
        let mut out = Self::zeros(self.n, max_degree).expect("dimension already checked");
        let m = out.coeffs.len().min(self.coeffs.len());
        out.coeffs[..m].copy_from_slice(&self.coeffs[..m]);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }
}

/// Evaluates every basis function of degree `≤ max_degree` at `x`, with
/// tangential gradients when `grads` is given.
pub fn eval_all(
    n: usize,
    max_degree: usize,
    x: &[f64; 3],
    values: &mut [f64],
    mut grads: Option<&mut [[f64; 3]]>,
) {
    let count = basis_count(n, max_degree);
    debug_assert!(values.len() >= count);
    let kmax = max_degree;

    // powers (x + i y)^m = c[m] + i s[m]
    let mut c = vec![0.0; kmax + 1];
    let mut s = vec![0.0; kmax + 1];
    c[0] = 1.0;
    for m in 1..=kmax {
        c[m] = c[m - 1] * x[0] - s[m - 1] * x[1];
        s[m] = c[m - 1] * x[1] + s[m - 1] * x[0];
    }

    let mut push = |idx: usize, val: f64, g: [f64; 3], grads: &mut Option<&mut [[f64; 3]]>| {
        values[idx] = val;
        if let Some(gs) = grads.as_deref_mut() {
            let dot = g[0] * x[0] + g[1] * x[1] + g[2] * x[2];
            gs[idx] = [g[0] - dot * x[0], g[1] - dot * x[1], g[2] - dot * x[2]];
        }
    };

    match n {
        2 => {
            push(0, 1.0 / (2.0 * PI).sqrt(), [0.0; 3], &mut grads);
            let norm = 1.0 / PI.sqrt();
            for k in 1..=kmax {
                let kf = k as f64;
                let gc = [kf * c[k - 1] * norm, -kf * s[k - 1] * norm, 0.0];
                let gs = [kf * s[k - 1] * norm, kf * c[k - 1] * norm, 0.0];
                push(offset(2, k), c[k] * norm, gc, &mut grads);
                push(offset(2, k) + 1, s[k] * norm, gs, &mut grads);
            }
        }
        3 => {
            let z = x[2];
            // q[l] = d^m P_l / dz^m for fixed m, dq its z-derivative
            let mut q = vec![0.0; kmax + 1];
            let mut dq = vec![0.0; kmax + 1];
            let mut double_factorial = 1.0;
            for m in 0..=kmax {
                if m > 0 {
                    double_factorial *= (2 * m - 1) as f64;
                }
                q[m] = double_factorial;
                dq[m] = 0.0;
                if m < kmax {
                    q[m + 1] = (2 * m + 1) as f64 * z * q[m];
                    dq[m + 1] = (2 * m + 1) as f64 * q[m];
                }
                for l in (m + 2)..=kmax {
                    let a = (2 * l - 1) as f64;
                    let b = (l + m - 1) as f64;
                    let d = (l - m) as f64;
                    q[l] = (a * z * q[l - 1] - b * q[l - 2]) / d;
                    dq[l] = (a * (q[l - 1] + z * dq[l - 1]) - b * dq[l - 2]) / d;
                }
                let mf = m as f64;
                for l in m..=kmax {
                    // (l - m)! / (l + m)!
                    let ratio: f64 = ((l - m + 1)..=(l + m)).fold(1.0, |acc, j| acc / j as f64);
                    let mut norm = ((2 * l + 1) as f64 / (4.0 * PI) * ratio).sqrt();
                    if m == 0 {
                        let val = norm * q[l];
                        push(offset(3, l), val, [0.0, 0.0, norm * dq[l]], &mut grads);
                    } else {
                        norm *= std::f64::consts::SQRT_2;
                        let (cm1, sm1) = (c[m - 1], s[m - 1]);
                        let gc = [
                            norm * q[l] * mf * cm1,
                            -norm * q[l] * mf * sm1,
                            norm * dq[l] * c[m],
                        ];
                        let gs = [
                            norm * q[l] * mf * sm1,
                            norm * q[l] * mf * cm1,
                            norm * dq[l] * s[m],
                        ];
                        push(offset(3, l) + 2 * m - 1, norm * q[l] * c[m], gc, &mut grads);
                        push(offset(3, l) + 2 * m, norm * q[l] * s[m], gs, &mut grads);
                    }
                }
            }
        }
        _ => unreachable!("dimension checked by callers"),
    }
}

/// `Y_{k,i}(x)` for a unit vector `x` (third component ignored when `n = 2`).
pub fn basis_eval(n: usize, k: usize, i: usize, x: &[f64; 3]) -> Result<f64> {
    Ok(basis_eval_with_gradient(n, k, i, x)?.0)
}

/// `Y_{k,i}(x)` and its tangential gradient.
pub fn basis_eval_with_gradient(
    n: usize,
    k: usize,
    i: usize,
    x: &[f64; 3],
) -> Result<(f64, [f64; 3])> {
    check_dimension(n)?;
    if i == 0 || i > multiplicity(n, k) {
        return Err(LabError::Argument(format!(
            "basis index i={i} out of range 1..={} for n={n}, k={k}",
            multiplicity(n, k)
        )));
    }
    let count = basis_count(n, k);
    let mut values = vec![0.0; count];
    let mut grads = vec![[0.0; 3]; count];
    eval_all(n, k, x, &mut values, Some(&mut grads));
    let idx = offset(n, k) + i - 1;
    Ok((values[idx], grads[idx]))
}

/// Coefficients of `u` by quadrature inner products `a_{k,i} = ∫ u Y_{k,i}`.
pub fn analyze(rule: &SphereRule, samples: &[f64], max_degree: usize) -> Result<HarmonicCoefficients> {
    check_dimension(rule.n)?;
    if rule.resolution < 4 * max_degree {
        return Err(LabError::Accuracy(format!(
            "resolution {} too low for degree {max_degree} (need at least {})",
            rule.resolution,
            4 * max_degree
        )));
    }
    if samples.len() != rule.len() {
        return Err(LabError::Argument(format!(
            "{} samples for a rule with {} nodes",
            samples.len(),
            rule.len()
        )));
    }
    let count = basis_count(rule.n, max_degree);
    let mut acc = vec![crate::quadrature::Summation::default(); count];
    let mut values = vec![0.0; count];
    for ((x, w), u) in rule.nodes.iter().zip(&rule.weights).zip(samples) {
        if !u.is_finite() {
            return Err(LabError::Argument(format!("non-finite sample {u}")));
        }
        eval_all(rule.n, max_degree, x, &mut values, None);
        for (a, y) in acc.iter_mut().zip(&values) {
            a.add(w * u * y);
        }
    }
    HarmonicCoefficients::from_vec(rule.n, max_degree, acc.iter().map(|s| s.value()).collect())
}

/// Point values and tangential gradients of a synthesized function.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 3]>,
}

impl Synthesis {
    pub fn grad_norm_sq(&self, j: usize) -> f64 {
        let g = self.gradients[j];
        g[0] * g[0] + g[1] * g[1] + g[2] * g[2]
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_grad(&self) -> f64 {
        (0..self.values.len()).fold(0.0, |m, j| m.max(self.grad_norm_sq(j).sqrt()))
    }
}

/// Evaluates `u = Σ a_{k,i} Y_{k,i}` and `∇_τ u` at each point.
pub fn synthesize(coeffs: &HarmonicCoefficients, points: &[[f64; 3]]) -> Synthesis {
    let count = coeffs.coeffs.len();
    let mut values = vec![0.0; count];
    let mut grads = vec![[0.0; 3]; count];
    let mut out_v = Vec::with_capacity(points.len());
    let mut out_g = Vec::with_capacity(points.len());
    for x in points {
        eval_all(coeffs.n, coeffs.max_degree, x, &mut values, Some(&mut grads));
        let mut u = 0.0;
        let mut g = [0.0; 3];
        for ((a, y), gy) in coeffs.coeffs.iter().zip(&values).zip(&grads) {
            if *a != 0.0 {
                u += a * y;
                g[0] += a * gy[0];
                g[1] += a * gy[1];
                g[2] += a * gy[2];
            }
        }
        out_v.push(u);
        out_g.push(g);
    }
    Synthesis {
        values: out_v,
        gradients: out_g,
    }
}

/// `(‖u‖²_{L²}, ‖∇_τ u‖²_{L²})` from the coefficients.
pub fn sobolev_norms(coeffs: &HarmonicCoefficients) -> (f64, f64) {
    let mut l2 = 0.0;
    let mut grad = 0.0;
    for (k, _, a) in coeffs.iter() {
        l2 += a * a;
        grad += eigenvalue(coeffs.n, k) * a * a;
    }
    (l2, grad)
}

/// Unit vector with polar angle `theta` from `e_3` and azimuth `phi`.
pub fn spherical_point(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::build_sphere_rule;
    use crate::unit_sphere_area;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_coeffs(n: usize, k: usize, seed: u64) -> HarmonicCoefficients {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = HarmonicCoefficients::zeros(n, k).unwrap();
        for v in c.as_mut_slice() {
            *v = rng.gen_range(-1.0..1.0);
        }
        c
    }

    #[test]
    fn multiplicities() {
        assert_eq!(multiplicity(2, 0), 1);
        assert_eq!(multiplicity(2, 5), 2);
        assert_eq!(multiplicity(3, 4), 9);
        assert_eq!(multiplicity(4, 2), 9);
        for k in 0..6 {
            assert_eq!(multiplicity(3, k), {
                let b = |a: usize, b: usize| (0..b).fold(1usize, |acc, j| acc * (a - j) / (j + 1));
                b(k + 2, k) - if k >= 2 { b(k, k - 2) } else { 0 }
            });
        }
    }

    #[test]
    fn basis_examples() {
        let x = [0.3f64.cos(), 0.3f64.sin(), 0.0];
        assert!((basis_eval(2, 0, 1, &x).unwrap() - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
        let y = spherical_point(0.7, 2.1);
        assert!((basis_eval(3, 0, 1, &y).unwrap() - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        let e1 = [1.0, 0.0, 0.0];
        assert!((basis_eval(2, 1, 1, &e1).unwrap() - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert!(matches!(basis_eval(2, 1, 3, &e1), Err(LabError::Argument(_))));
        assert!(matches!(basis_eval(3, 2, 6, &e1), Err(LabError::Argument(_))));
        assert!(matches!(basis_eval(2, 0, 0, &e1), Err(LabError::Argument(_))));
    }

    #[test]
    fn low_degree_closed_forms_on_sphere() {
        let x = spherical_point(1.1, -0.4);
        let c1 = (3.0 / (4.0 * PI)).sqrt();
        assert!((basis_eval(3, 1, 1, &x).unwrap() - c1 * x[2]).abs() < 1e-14);
        assert!((basis_eval(3, 1, 2, &x).unwrap() - c1 * x[0]).abs() < 1e-14);
        assert!((basis_eval(3, 1, 3, &x).unwrap() - c1 * x[1]).abs() < 1e-14);
        let c20 = (5.0 / (16.0 * PI)).sqrt();
        let y20 = c20 * (3.0 * x[2] * x[2] - 1.0);
        assert!((basis_eval(3, 2, 1, &x).unwrap() - y20).abs() < 1e-14);
    }

    #[test]
    fn gram_matrix_is_identity() {
        for (n, res, k) in [(2, 64, 16), (3, 64, 16)] {
            let rule = build_sphere_rule(n, res).unwrap();
            let count = basis_count(n, k);
            let mut gram = vec![0.0; count * count];
            let mut values = vec![0.0; count];
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                eval_all(n, k, x, &mut values, None);
                for a in 0..count {
                    for b in 0..count {
                        gram[a * count + b] += w * values[a] * values[b];
                    }
                }
            }
            for a in 0..count {
                for b in 0..count {
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!(
                        (gram[a * count + b] - expect).abs() < 1e-10,
                        "n={n} ({a},{b}) = {}",
                        gram[a * count + b]
                    );
                }
            }
        }
    }

    #[test]
    fn analyze_single_mode_and_constant() {
        let rule = build_sphere_rule(2, 64).unwrap();
        let y21: Vec<f64> = rule
            .nodes
            .iter()
            .map(|x| basis_eval(2, 2, 1, x).unwrap())
            .collect();
        let a = analyze(&rule, &y21, 8).unwrap();
        for (k, i, v) in a.iter() {
            let expect = if (k, i) == (2, 1) { 1.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-10);
        }
        for n in [2, 3] {
            let rule = build_sphere_rule(n, 32).unwrap();
            let samples = vec![0.7; rule.len()];
            let a = analyze(&rule, &samples, 4).unwrap();
            let expect = 0.7 * unit_sphere_area(n).sqrt();
            for (k, _, v) in a.iter() {
                if k == 0 {
                    assert!((v - expect).abs() < 1e-12);
                } else {
                    assert!(v.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn analyze_rejects_low_resolution() {
        let rule = build_sphere_rule(2, 16).unwrap();
        let s = vec![0.0; rule.len()];
        assert!(matches!(analyze(&rule, &s, 5), Err(LabError::Accuracy(_))));
    }

    #[test]
    fn round_trip_bandlimited() {
        for (n, res) in [(2, 64), (3, 48)] {
            let rule = build_sphere_rule(n, res).unwrap();
            let c = random_coeffs(n, 10, 7);
            let s = synthesize(&c, &rule.nodes);
            let back = analyze(&rule, &s.values, 10).unwrap();
            for (a, b) in c.as_slice().iter().zip(back.as_slice()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn synthesis_examples() {
        let c = HarmonicCoefficients::single(2, 3, 1, 1, 1.0).unwrap();
        let pts: Vec<[f64; 3]> = (0..7)
            .map(|j| {
                let t = j as f64 * 0.9;
                [t.cos(), t.sin(), 0.0]
            })
            .collect();
        let s = synthesize(&c, &pts);
        for (j, v) in s.values.iter().enumerate() {
            assert!((v - (j as f64 * 0.9).cos() / PI.sqrt()).abs() < 1e-14);
        }
        let zero = HarmonicCoefficients::zeros(3, 4).unwrap();
        let s = synthesize(&zero, &[[0.0, 0.0, 1.0]]);
        assert_eq!(s.values, vec![0.0]);
    }

    /// Tangential gradient by finite differences along two tangent great circles.
    fn fd_tangential_gradient(c: &HarmonicCoefficients, x: [f64; 3], t1: [f64; 3], t2: [f64; 3]) -> [f64; 3] {
        let h = 1e-5;
        let along = |t: [f64; 3]| {
            let p = |s: f64| {
                [
                    x[0] * s.cos() + t[0] * s.sin(),
                    x[1] * s.cos() + t[1] * s.sin(),
                    x[2] * s.cos() + t[2] * s.sin(),
                ]
            };
            let v = synthesize(c, &[p(h), p(-h)]).values;
            (v[0] - v[1]) / (2.0 * h)
        };
        let (d1, d2) = (along(t1), along(t2));
        [
            d1 * t1[0] + d2 * t2[0],
            d1 * t1[1] + d2 * t2[1],
            d1 * t1[2] + d2 * t2[2],
        ]
    }

    #[test]
    fn gradient_at_pole_matches_finite_differences() {
        let c = HarmonicCoefficients::single(3, 2, 1, 2, 1.0).unwrap();
        let pole = [0.0, 0.0, 1.0];
        let g = synthesize(&c, &[pole]).gradients[0];
        let fd = fd_tangential_gradient(&c, pole, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        for d in 0..3 {
            assert!((g[d] - fd[d]).abs() < 1e-6, "{g:?} vs {fd:?}");
        }
        assert!((g[0] - (3.0 / (4.0 * PI)).sqrt()).abs() < 1e-12);

        let c = random_coeffs(3, 6, 3);
        let x = spherical_point(0.8, 1.9);
        let e_theta = [0.8f64.cos() * 1.9f64.cos(), 0.8f64.cos() * 1.9f64.sin(), -0.8f64.sin()];
        let e_phi = [-1.9f64.sin(), 1.9f64.cos(), 0.0];
        let g = synthesize(&c, &[x]).gradients[0];
        let fd = fd_tangential_gradient(&c, x, e_theta, e_phi);
        for d in 0..3 {
            assert!((g[d] - fd[d]).abs() < 1e-6);
        }
    }

    #[test]
    fn sobolev_examples() {
        let c = HarmonicCoefficients::single(3, 4, 2, 1, 0.1).unwrap();
        let (l2, g) = sobolev_norms(&c);
        assert!((l2 - 0.01).abs() < 1e-15);
        assert!((g - 0.06).abs() < 1e-15);
        let c = HarmonicCoefficients::single(2, 4, 3, 1, 1.0).unwrap();
        assert_eq!(sobolev_norms(&c).1, 9.0);
    }

    #[test]
    fn parseval_for_both_norms() {
        for (n, res) in [(2, 128), (3, 48)] {
            let rule = build_sphere_rule(n, res).unwrap();
            let c = random_coeffs(n, 8, 11);
            let s = synthesize(&c, &rule.nodes);
            let l2q = rule.integrate_values(&s.values.iter().map(|v| v * v).collect::<Vec<_>>()).unwrap();
            let gq = rule
                .integrate_values(&(0..rule.len()).map(|j| s.grad_norm_sq(j)).collect::<Vec<_>>())
                .unwrap();
            let (l2, g) = sobolev_norms(&c);
            assert!((l2 - l2q).abs() < 1e-8 * l2);
            assert!((g - gq).abs() < 1e-8 * g);
        }
    }

    #[test]
    fn serde_roundtrip() {
        let c = random_coeffs(3, 3, 5);
        let s = serde_json::to_string(&c).unwrap();
        let back: HarmonicCoefficients = serde_json::from_str(&s).unwrap();
        assert_eq!(c, back);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn poincare_on_mean_zero(coeffs in proptest::collection::vec(-1.0f64..1.0, 25), n in 2usize..=3) {
                let k = if n == 2 { 12 } else { 4 };
                let mut c = HarmonicCoefficients::from_vec(n, k, coeffs[..basis_count(n, k)].to_vec()).unwrap();
                c.set(0, 1, 0.0).unwrap();
                let (l2, g) = sobolev_norms(&c);
                prop_assert!(g >= (n as f64 - 1.0) * l2 - 1e-12);
            }
        }
    }
}
