//! Limit constants and limit laws for FPP on `G(n, λ/n)`.
//!
//! Notation: `α = λ − 1` is the Malthusian parameter of the Poisson(λ)
//! continuous-time branching process, `γ = 1/α`, `β = λγ`. `W` is the almost sure
//! limit of `N(t)e^{−αt}` where the root dies at time zero leaving `Poi(λ)`
//! children, so `E[W] = λ`; `W_λ` is `W` conditioned to be positive.

use serde::Serialize;

use crate::bp;
use crate::error::{domain, Error, Result};
use crate::randomness::RngStream;

/// Euler–Mascheroni constant, the mean of the standard Gumbel law.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Bisection on a sign change of `f` over `[lo, hi]` down to bracket width `width`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One Newton step, kept only if it reduces the residual.
fn newton_polish(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, x: f64) -> f64 {
    let fx = f(x);
    let d = df(x);
    if d == 0.0 || !d.is_finite() {
        return x;
    }
    let y = x - fx / d;
    if y.is_finite() && f(y).abs() < fx.abs() {
        y
    } else {
        x
    }
}

/// Smallest non-negative root of `p = exp(−λ(1 − p))`.
pub fn extinction_probability(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain(format!("offspring mean must be positive, got {lambda}"));
    }
    if lambda <= 1.0 {
        return Ok(1.0);
    }
    let g = |p: f64| (-lambda * (1.0 - p)).exp();
    let mut p = 0.0;
    for _ in 0..1_000_000 {
        let next = g(p);
        if (next - p).abs() <= 1e-16 {
            p = next;
            break;
        }
        p = next;
    }
    let f = |p: f64| p - g(p);
    let df = |p: f64| 1.0 - lambda * g(p);
    Ok(newton_polish(f, df, p))
}

/// The conjugate point `y ≠ x` with `y e^{−y} = x e^{−x}` (for `x ≠ 1`).
pub fn dual_parameter(x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) || x == 1.0 {
        return domain(format!("dual parameter needs x > 0, x != 1, got {x}"));
    }
    let target = x * (-x).exp();
    let g = |y: f64| y * (-y).exp() - target;
    let dg = |y: f64| (1.0 - y) * (-y).exp();
    let y = if x > 1.0 {
        bisect(g, 0.0, 1.0, 1e-13)
    } else {
        let mut hi = 2.0;
        while g(hi) > 0.0 {
            hi *= 2.0;
        }
        bisect(g, 1.0, hi, 1e-13 * hi)
    };
    Ok(newton_polish(g, dg, y))
}

/// Positive root of `θ − λ + λe^{−θ} = 0`.
pub fn theta_star(lambda: f64) -> Result<f64> {
    if !(lambda > 1.0 && lambda.is_finite()) {
        return domain(format!("theta* needs λ > 1, got {lambda}"));
    }
    let h = |t: f64| t + lambda * (-t).exp_m1();
    let dh = |t: f64| 1.0 - lambda * (-t).exp();
    let t = bisect(h, 1e-9, 2.0 * lambda, 1e-13);
    Ok(newton_polish(h, dh, t))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitConstants {
    pub lambda: f64,
    pub beta: f64,
    pub gamma: f64,
    pub p_lambda: f64,
    pub mu_lambda: f64,
    pub theta_star: f64,
    pub c_lambda: f64,
    pub d_lambda: f64,
}

impl LimitConstants {
    /// The literal `2 / log|μ_λ|`, which is negative; `c_lambda` uses its absolute value.
    pub fn raw_path_term(&self) -> f64 {
        2.0 / self.mu_lambda.abs().ln()
    }

    /// The adopted positive excess `2 / |log μ_λ|` shared by `c` and `d`.
    pub fn path_term(&self) -> f64 {
        2.0 / self.mu_lambda.ln().abs()
    }
}

pub fn constants(lambda: f64) -> Result<LimitConstants> {
    if !(lambda > 1.0 && lambda.is_finite()) {
        return domain(format!("limit constants need λ > 1, got {lambda}"));
    }
    let gamma = 1.0 / (lambda - 1.0);
    let beta = lambda * gamma;
    let mu = dual_parameter(lambda)?;
    let term = 2.0 / mu.ln().abs();
    // d ≥ 1, so c = d − 1 and d − c = 1 are exact in floating point
    // (c + 1 − c is not).
    let d = gamma + term + 1.0;
    Ok(LimitConstants {
        lambda,
        beta,
        gamma,
        p_lambda: extinction_probability(lambda)?,
        mu_lambda: mu,
        theta_star: theta_star(lambda)?,
        c_lambda: d - 1.0,
        d_lambda: d,
    })
}

/// Number of log-spaced interior nodes of the default φ grid.
pub const PHI_GRID_NODES: usize = 4096;

/// `t = 0` followed by [`PHI_GRID_NODES`] log-spaced points on `[1e-4, 50]`.
pub fn default_phi_grid() -> Vec<f64> {
    let (a, b) = (1e-4f64.ln(), 50f64.ln());
    let k = PHI_GRID_NODES;
    std::iter::once(0.0)
        .chain((0..k).map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp()))
        .collect()
}

/// The Laplace transform `φ(t) = E[e^{−tW}]` tabulated on a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhiGrid {
    pub lambda: f64,
    pub t_values: Vec<f64>,
    pub phi_values: Vec<f64>,
    pub iterations: usize,
    /// Sup-norm distance between the last two iterates.
    pub residual: f64,
}

impl PhiGrid {
    /// φ at `t`, interpolating linearly in `log t` between interior nodes and
    /// linearly in `t` on the first cell.
    pub fn eval(&self, t: f64) -> f64 {
        let ts = &self.t_values;
        let ps = &self.phi_values;
        if t <= 0.0 {
            return 1.0;
        }
        if t >= ts[ts.len() - 1] {
            return ps[ps.len() - 1];
        }
        let k = ts.partition_point(|&x| x <= t);
        let (t0, t1) = (ts[k - 1], ts[k]);
        let w = if t0 == 0.0 {
            t / t1
        } else {
            (t / t0).ln() / (t1 / t0).ln()
        };
        ps[k - 1] + w * (ps[k] - ps[k - 1])
    }

    /// Sup-norm of `Tφ − φ` for the tabulated φ.
    pub fn self_consistency_residual(&self) -> f64 {
        let quad = PhiQuadrature::new(self.lambda, &self.t_values);
        let next = phi_map(self.lambda, &quad, &self.t_values, &self.phi_values);
        sup_diff(&next, &self.phi_values)
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, |m, d| if d.is_nan() { f64::INFINITY } else { m.max(d) })
}

/// Quadrature weights for `∫ [1 − φ(u)] u^{γ−1} du` over each grid cell.
///
/// With `s = log u` the integrand is `[1 − φ(e^s)] e^{γs}`. On each cell past the
/// first, `1 − φ` is interpolated by the cubic through four neighbouring nodes
/// and the product with `e^{γs}` is integrated exactly. On the first cell
/// `[0, t₁]`, `1 − φ` is the cubic in `u` through the origin and the first three
/// nodes; a cruder rule there biases the slope at 0, which the iteration then
/// carries along the neutral direction `t ↦ φ(ct)`.
struct PhiQuadrature {
    gamma: f64,
    /// Nodes used near the origin; see [`origin_stencil`].
    origin: [usize; 3],
    /// Weights of the origin nodes for the first cell.
    first: [f64; 3],
    /// For cell `k ≥ 2`: first stencil node and the four node weights.
    cells: Vec<(usize, [f64; 4])>,
}

impl PhiQuadrature {
    fn new(lambda: f64, ts: &[f64]) -> Self {
        let gamma = 1.0 / (lambda - 1.0);
        let last = ts.len() - 1;
        let mut cells = vec![(0, [0.0; 4]); ts.len()];
        for k in 2..=last {
            let first = (k - 2).clamp(1, last - 3);
            let s0 = ts[k - 1].ln();
            let h = ts[k].ln() - s0;
            let xs: [f64; 4] = std::array::from_fn(|i| ts[first + i].ln() - s0);
            let moments = exp_moments(gamma, h);
            let scale = (gamma * s0).exp();
            let mut w = [0.0; 4];
            for (i, wi) in w.iter_mut().enumerate() {
                let coef = lagrange_coefficients(&xs, i);
                *wi = scale * coef.iter().zip(&moments).map(|(c, m)| c * m).sum::<f64>();
            }
            cells[k] = (first, w);
        }
        let origin = origin_stencil(ts);
        let xs = origin_nodes(ts, &origin);
        let first = std::array::from_fn(|i| {
            let coef = lagrange_coefficients(&xs, i + 1);
            ts[1].powf(gamma)
                * coef
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c / (gamma + j as f64))
                    .sum::<f64>()
        });
        Self {
            gamma,
            origin,
            first,
            cells,
        }
    }
}

/// Three nodes for the cubic through the origin: node 1 and the first nodes at
/// or beyond `2t₁` and `4t₁`. Adjacent nodes of a fine log grid are too close
/// for a well-conditioned fit.
fn origin_stencil(ts: &[f64]) -> [usize; 3] {
    let last = ts.len() - 1;
    let at_least = |x: f64, after: usize| {
        (after + 1..=last)
            .find(|&k| ts[k] >= x)
            .unwrap_or(last)
            .min(last - (2 - after.min(2)))
    };
    let a = at_least(2.0 * ts[1], 1).max(2);
    let b = at_least(4.0 * ts[1], a).max(a + 1);
    [1, a, b]
}

/// `[0, 1, t_a/t₁, t_b/t₁]` for the origin stencil.
fn origin_nodes(ts: &[f64], origin: &[usize; 3]) -> [f64; 4] {
    [0.0, 1.0, ts[origin[1]] / ts[1], ts[origin[2]] / ts[1]]
}

/// `∫_0^h x^j e^{γx} dx` for `j = 0..4`.
fn exp_moments(gamma: f64, h: f64) -> [f64; 4] {
    let e = (gamma * h).exp();
    if gamma * h < 1e-3 {
        // Series in γ avoids cancellation.
        return std::array::from_fn(|j| {
            let mut term = h.powi(j as i32 + 1) / (j as f64 + 1.0);
            let mut sum = term;
            for r in 1..8 {
                term *= gamma * h * (j + r) as f64 / ((j + r + 1) as f64 * r as f64);
                sum += term;
            }
            sum
        });
    }
    let mut m = [0.0; 4];
    m[0] = (e - 1.0) / gamma;
    for j in 1..4 {
        m[j] = (h.powi(j as i32) * e - j as f64 * m[j - 1]) / gamma;
    }
    m
}

/// Monomial coefficients of the `i`-th Lagrange basis polynomial on `xs`.
fn lagrange_coefficients(xs: &[f64; 4], i: usize) -> [f64; 4] {
    let mut c = [1.0, 0.0, 0.0, 0.0];
    let mut deg = 0;
    let mut denom = 1.0;
    for (j, &xj) in xs.iter().enumerate() {
        if j == i {
            continue;
        }
        for d in (0..=deg).rev() {
            c[d + 1] += c[d];
            c[d] *= -xj;
        }
        deg += 1;
        denom *= xs[i] - xj;
    }
    c.map(|v| v / denom)
}

/// One application of `φ ↦ exp(−λ∫_0^∞ [1 − φ(t e^{−αx})] e^{−x} dx)` on the grid.
///
/// With `u = t e^{−αx}` the integral becomes `γ t^{−γ} ∫_0^t [1 − φ(u)] u^{γ−1} du`.
fn phi_map(lambda: f64, quad: &PhiQuadrature, ts: &[f64], phi: &[f64]) -> Vec<f64> {
    let gamma = quad.gamma;
    let mut out = vec![1.0; ts.len()];
    let mut integral = 0.0;
    for k in 1..ts.len() {
        if k == 1 {
            integral = (0..3)
                .map(|i| quad.first[i] * (1.0 - phi[quad.origin[i]]))
                .sum::<f64>();
        } else {
            let (first, w) = &quad.cells[k];
            integral += (0..4).map(|i| w[i] * (1.0 - phi[first + i])).sum::<f64>();
        }
        out[k] = (-lambda * gamma * ts[k].powf(-gamma) * integral).exp();
    }
    out
}

/// Rescales `φ ↦ φ(c·)` so that its slope at 0, read off the cubic through the
/// origin and the first three nodes, is `−mean`. Uses `φ(ct) ≈ φ(t) + (c − 1) t φ'(t)`,
/// which is all that is needed since `c → 1` along the iteration.
fn pin_mean(mean: f64, quad: &PhiQuadrature, ts: &[f64], phi: &mut [f64]) {
    let xs = origin_nodes(ts, &quad.origin);
    let slope: f64 = (0..3)
        .map(|i| (1.0 - phi[quad.origin[i]]) * lagrange_coefficients(&xs, i + 1)[1])
        .sum::<f64>()
        / ts[1];
    let c = mean / slope;
    let last = ts.len() - 1;
    let s = |k: usize| ts[k].ln();
    let d: Vec<f64> = (1..=last)
        .map(|k| {
            let (a, b) = (k.saturating_sub(1).max(1), (k + 1).min(last));
            (phi[b] - phi[a]) / (s(b) - s(a))
        })
        .collect();
    for k in 1..=last {
        phi[k] += (c - 1.0) * d[k - 1];
    }
}

/// Sup-norm change between iterates below which [`solve_phi`] stops.
pub const PHI_TOLERANCE: f64 = 1e-12;

/// Solves the functional equation for `φ` by fixed-point iteration.
///
/// The equation fixes `φ` only up to `t ↦ φ(ct)`, which is the mean of `W`. The
/// exact map preserves the mean; the discretised one drifts slowly, so every
/// iterate is pinned back to mean `λ`.
pub fn solve_phi(lambda: f64, grid: &[f64], max_iterations: usize) -> Result<PhiGrid> {
    if !(lambda > 1.0 && lambda.is_finite()) {
        return domain(format!("phi solver needs λ > 1, got {lambda}"));
    }
    if grid.len() < 5 || grid[0] != 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return domain("phi grid must start at 0 and be strictly increasing");
    }
    if grid[grid.len() - 1] < 50.0 {
        return domain("phi grid must extend to t >= 50");
    }
    let p = extinction_probability(lambda)?;
    let rate = lambda / (1.0 - p);
    let mut phi: Vec<f64> = grid
        .iter()
        .map(|&t| p + (1.0 - p) * (-rate * t).exp())
        .collect();
    let quad = PhiQuadrature::new(lambda, grid);
    let mut residual = f64::INFINITY;
    for it in 1..=max_iterations {
        let mut next = phi_map(lambda, &quad, grid, &phi);
        pin_mean(lambda, &quad, grid, &mut next);
        residual = sup_diff(&next, &phi);
        phi = next;
        if residual < PHI_TOLERANCE {
            return Ok(PhiGrid {
                lambda,
                t_values: grid.to_vec(),
                phi_values: phi,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iterations,
        residual,
    })
}

/// Draws `X = −γ log(γW⁽¹⁾) − γ log(γW⁽²⁾) + γ log E` with `W⁽ⁱ⁾ ~ W_λ`.
pub fn sample_limit_x(lambda: f64, stream: &mut RngStream) -> Result<f64> {
    sample_limit_x_with(lambda, bp::DEFAULT_W_SPLITS, stream)
}

/// As [`sample_limit_x`] with an explicit branching-process run length.
pub fn sample_limit_x_with(lambda: f64, splits: usize, stream: &mut RngStream) -> Result<f64> {
    if !(lambda > 1.0 && lambda.is_finite()) {
        return domain(format!("limit variable needs λ > 1, got {lambda}"));
    }
    let gamma = 1.0 / (lambda - 1.0);
    let w1 = bp::sample_w_lambda(lambda, splits, stream)?;
    let w2 = bp::sample_w_lambda(lambda, splits, stream)?;
    let e = stream.exp1();
    Ok(-gamma * (gamma * w1).ln() - gamma * (gamma * w2).ln() + gamma * e.ln())
}

/// Standard Gumbel draw `−log E`.
pub fn sample_gumbel(stream: &mut RngStream) -> f64 {
    -stream.exp1().ln()
}

/// Draws `M₁ + M₂ − M₃` for independent standard Gumbel `Mᵢ`.
pub fn sample_dense_limit(stream: &mut RngStream) -> f64 {
    let m1 = sample_gumbel(stream);
    let m2 = sample_gumbel(stream);
    let m3 = sample_gumbel(stream);
    m1 + m2 - m3
}

/// Threshold below which the `β_n log n` centering is reported as replaceable by `log n`.
pub const DENSE_CENTERING_THRESHOLD: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DenseCentering {
    pub beta_n: f64,
    pub discriminant: f64,
    pub replaceable: bool,
}

/// `β_n = λ_n/(λ_n − 1)` and the discriminant `(β_n − 1)√(log n)`.
///
/// `n` is real so that astronomically large graphs can be described.
pub fn dense_centering_report(lambda_n: f64, n: f64) -> Result<DenseCentering> {
    if !(lambda_n > 1.0 && lambda_n.is_finite()) {
        return domain(format!("dense centering needs λ_n > 1, got {lambda_n}"));
    }
    if !(n > 1.0) {
        return domain(format!("dense centering needs n > 1, got {n}"));
    }
    let beta_n = lambda_n / (lambda_n - 1.0);
    let discriminant = (beta_n - 1.0) * n.ln().sqrt();
    Ok(DenseCentering {
        beta_n,
        discriminant,
        replaceable: discriminant < DENSE_CENTERING_THRESHOLD,
    })
}
