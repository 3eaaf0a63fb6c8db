//! Self-contained numerical kernel: special functions, adaptive quadrature,
//! bisection root finding and small dense linear solves.
//!
//! Every routine is a pure function of its inputs, so all of them are safe to
//! call concurrently from any number of workers.

use std::fmt;

/// Euler-Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Maximum recursion depth for the adaptive quadrature.
const MAX_QUAD_DEPTH: u32 = 60;

/// Convergence control for the iterative routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Relative tolerance, must be positive.
    pub rel: f64,
    /// Absolute tolerance, must be nonnegative.
    pub abs: f64,
    /// Iteration/subdivision budget, at least one.
    pub max_iter: usize,
}

impl Tolerance {
    pub fn new(rel: f64, abs: f64, max_iter: usize) -> Result<Self, NumericsError> {
        if !(rel > 0.0) || !(abs >= 0.0) || max_iter == 0 {
            return Err(NumericsError::Domain {
                op: "Tolerance::new",
                detail: format!("rel > 0, abs >= 0, max_iter >= 1 required; got ({rel}, {abs}, {max_iter})"),
            });
        }
        Ok(Self { rel, abs, max_iter })
    }

    /// Tight default for quadrature-backed quantities.
    pub fn quadrature() -> Self {
        Self { rel: 1e-12, abs: 1e-15, max_iter: 400_000 }
    }

    /// Default for scalar root finding.
    pub fn root() -> Self {
        Self { rel: 1e-13, abs: 1e-13, max_iter: 300 }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::quadrature()
    }
}

/// Errors raised by the numerical kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum NumericsError {
    /// An argument is outside the supported domain.
    Domain { op: &'static str, detail: String },
    /// The endpoints passed to `bisect` do not bracket a root.
    Bracket { f_lo: f64, f_hi: f64 },
    /// The iteration/subdivision budget was exhausted.
    NoConvergence { op: &'static str, iterations: usize },
    /// A pivot underflowed the matrix scale during elimination.
    Singular { pivot: f64, scale: f64 },
    /// Matrix/vector dimensions disagree.
    Dimension { expected: usize, got: usize },
}

impl fmt::Display for NumericsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Domain { op, detail } => write!(f, "{op}: domain error: {detail}"),
            Self::Bracket { f_lo, f_hi } => {
                write!(f, "bisect: endpoints do not bracket a root (f(lo)={f_lo}, f(hi)={f_hi})")
            }
            Self::NoConvergence { op, iterations } => {
                write!(f, "{op}: no convergence after {iterations} iterations")
            }
            Self::Singular { pivot, scale } => {
                write!(f, "solve_linear: singular system (pivot {pivot:e} vs scale {scale:e})")
            }
            Self::Dimension { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
        }
    }
}

impl std::error::Error for NumericsError {}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

/// Exponential integral Ei(z) for negative arguments.
///
/// Ei(z) = -∫_{-z}^∞ e^{-t}/t dt, defined here only on z < 0 which is the
/// branch the secrecy-rate expectations need.
pub fn exp_integral_ei(z: f64) -> Result<f64, NumericsError> {
    if !(z < 0.0) {
        return Err(NumericsError::Domain {
            op: "exp_integral_ei",
            detail: format!("requires z < 0, got {z}"),
        });
    }
    Ok(-expint_e1(-z))
}

/// Exponentially scaled variant e^x * Ei(-x) for x > 0.
///
/// Stays finite for large x where e^x overflows and Ei(-x) underflows; the
/// closed-form Rayleigh expectation needs it at small transmit powers.
pub fn ei_exp_scaled(x: f64) -> Result<f64, NumericsError> {
    if !(x > 0.0) {
        return Err(NumericsError::Domain {
            op: "ei_exp_scaled",
            detail: format!("requires x > 0, got {x}"),
        });
    }
    if x >= 600.0 {
        // Asymptotic tail: e^x Ei(-x) = -(1/x)(1 - 1/x + 2!/x^2 - 3!/x^3 + ...).
        let inv = 1.0 / x;
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 0..10 {
            sum += term;
            term *= -(k as f64 + 1.0) * inv;
        }
        return Ok(-inv * sum);
    }
    if x <= 1.0 {
        return Ok(-x.exp() * e1_series(x));
    }
    // The Lentz fraction computes E1(x) = e^{-x} * h, so the scaled value is -h.
    Ok(-e1_contfrac_scaled(x))
}

/// E1(x) = -Ei(-x) for x > 0.
fn expint_e1(x: f64) -> f64 {
    if x <= 1.0 {
        e1_series(x)
    } else {
        (-x).exp() * e1_contfrac_scaled(x)
    }
}

/// Power series for E1 on (0, 1]: -gamma - ln x + sum_k (-1)^{k+1} x^k/(k k!).
fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut pow = 1.0; // x^k / k!
    let mut sign = 1.0;
    for k in 1..=40 {
        let kf = k as f64;
        pow *= x / kf;
        let contrib = sign * pow / kf;
        sum += contrib;
        if contrib.abs() < 1e-18 * sum.abs().max(1e-30) {
            break;
        }
        sign = -sign;
    }
    -EULER_GAMMA - x.ln() + sum
}

/// Modified Lentz continued fraction for e^x E1(x), x >= 1.
fn e1_contfrac_scaled(x: f64) -> f64 {
    const FPMIN: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=400 {
        let a = -(i as f64) * (i as f64);
        b += 2.0;
        d = a * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + a / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Lanczos approximation coefficients (g = 7, 9 terms).
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the approximation accurate near zero.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Γ(x) for x > 0.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// Upper incomplete gamma function Γ(m, z) = ∫_z^∞ e^{-t} t^{m-1} dt.
///
/// Defined for m >= 1 and z >= 0; `gamma_upper(m, 0)` equals Γ(m).
pub fn gamma_upper(m: f64, z: f64) -> Result<f64, NumericsError> {
    if !(m >= 1.0) || !(z >= 0.0) {
        return Err(NumericsError::Domain {
            op: "gamma_upper",
            detail: format!("requires m >= 1 and z >= 0, got ({m}, {z})"),
        });
    }
    if z == 0.0 {
        return Ok(gamma(m));
    }
    if z < m + 1.0 {
        // Series for the regularized lower tail, then complement.
        let p = lower_series(m, z);
        Ok(gamma(m) * (1.0 - p))
    } else {
        // Continued fraction for the upper tail directly.
        let log_pref = -z + m * z.ln();
        Ok(log_pref.exp() * upper_contfrac(m, z))
    }
}

/// Regularized lower incomplete gamma P(m, z) = γ(m, z)/Γ(m).
pub fn gamma_lower_regularized(m: f64, z: f64) -> Result<f64, NumericsError> {
    if !(m >= 1.0) || !(z >= 0.0) {
        return Err(NumericsError::Domain {
            op: "gamma_lower_regularized",
            detail: format!("requires m >= 1 and z >= 0, got ({m}, {z})"),
        });
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z < m + 1.0 {
        Ok(lower_series(m, z))
    } else {
        let log_pref = -z + m * z.ln() - ln_gamma(m);
        Ok(1.0 - log_pref.exp() * upper_contfrac(m, z))
    }
}

/// Series for P(m, z), valid for z < m + 1.
fn lower_series(m: f64, z: f64) -> f64 {
    let mut ap = m;
    let mut del = 1.0 / m;
    let mut sum = del;
    for _ in 0..500 {
        ap += 1.0;
        del *= z / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    let log_pref = -z + m * z.ln() - ln_gamma(m);
    sum * log_pref.exp()
}

/// Lentz continued fraction for Γ(m, z) e^{z} z^{-m}, valid for z >= m + 1.
fn upper_contfrac(m: f64, z: f64) -> f64 {
    const FPMIN: f64 = 1e-300;
    let mut b = z + 1.0 - m;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=500 {
        let an = -(i as f64) * (i as f64 - m);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

/// Adaptive Simpson quadrature of `f` on [lo, hi].
///
/// `hi` may be `f64::INFINITY`; the semi-infinite domain is mapped onto [0, 1)
/// with the monotone change of variable x = lo + t/(1-t). Integrands against
/// rapidly decaying densities may instead be truncated by the caller at a
/// high quantile, which is usually cheaper.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: &Tolerance) -> Result<f64, NumericsError> {
    if !lo.is_finite() || hi.is_nan() {
        return Err(NumericsError::Domain {
            op: "integrate",
            detail: format!("bad interval [{lo}, {hi}]"),
        });
    }
    if hi == lo {
        return Ok(0.0);
    }
    if hi < lo {
        return Err(NumericsError::Domain {
            op: "integrate",
            detail: format!("requires lo <= hi, got [{lo}, {hi}]"),
        });
    }
    if hi.is_infinite() {
        let g = move |t: f64| {
            if t >= 1.0 {
                return 0.0;
            }
            let u = 1.0 - t;
            f(lo + t / u) / (u * u)
        };
        adaptive_simpson(&g, 0.0, 1.0, tol)
    } else {
        adaptive_simpson(&f, lo, hi, tol)
    }
}

fn simpson(width: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    width / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: &Tolerance) -> Result<f64, NumericsError> {
    // Seed with a fixed composite pass so narrow features away from the
    // midpoint are still seen before refinement starts.
    const PANELS: usize = 16;
    let w = (b - a) / PANELS as f64;
    let mut coarse = 0.0;
    let mut panels = Vec::with_capacity(PANELS);
    for i in 0..PANELS {
        let pa = a + i as f64 * w;
        let pb = if i + 1 == PANELS { b } else { a + (i + 1) as f64 * w };
        let pm = 0.5 * (pa + pb);
        let (fa, fm, fb) = (f(pa), f(pm), f(pb));
        let s = simpson(pb - pa, fa, fm, fb);
        coarse += s;
        panels.push((pa, fa, pm, fm, pb, fb, s));
    }
    let eps_total = tol.abs.max(tol.rel * coarse.abs()).max(1e-307);
    let mut budget = tol.max_iter;
    let mut total = 0.0;
    for (pa, fa, pm, fm, pb, fb, s) in panels {
        total += simpson_step(f, pa, fa, pm, fm, pb, fb, s, eps_total / PANELS as f64, 0, &mut budget, tol)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
    budget: &mut usize,
    tol: &Tolerance,
) -> Result<f64, NumericsError> {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(m - a, fa, flm, fm);
    let right = simpson(b - m, fm, frm, fb);
    let delta = left + right - whole;
    // Richardson halving estimate: the composite pair is 15x more accurate
    // than the single panel.
    if delta.abs() <= 15.0 * eps || depth >= MAX_QUAD_DEPTH {
        if depth >= MAX_QUAD_DEPTH && delta.abs() > 15.0 * eps {
            return Err(NumericsError::NoConvergence { op: "integrate", iterations: tol.max_iter - *budget });
        }
        return Ok(left + right + delta / 15.0);
    }
    if *budget == 0 {
        return Err(NumericsError::NoConvergence { op: "integrate", iterations: tol.max_iter });
    }
    *budget -= 1;
    let half = 0.5 * eps;
    let l = simpson_step(f, a, fa, lm, flm, m, fm, left, half, depth + 1, budget, tol)?;
    let r = simpson_step(f, m, fm, rm, frm, b, fb, right, half, depth + 1, budget, tol)?;
    Ok(l + r)
}

// ---------------------------------------------------------------------------
// Root finding
// ---------------------------------------------------------------------------

/// Bisection on a monotone (or at least sign-changing) function.
///
/// Returns x with |f(x)| <= tol.abs or bracket width <= tol.rel * |x|.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: &Tolerance) -> Result<f64, NumericsError> {
    if !lo.is_finite() || !hi.is_finite() || hi <= lo {
        return Err(NumericsError::Domain {
            op: "bisect",
            detail: format!("bad bracket [{lo}, {hi}]"),
        });
    }
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    if fa == 0.0 {
        return Ok(a);
    }
    let fb = f(b);
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(NumericsError::Bracket { f_lo: fa, f_hi: fb });
    }
    for _ in 0..tol.max_iter {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            // The bracket collapsed to machine resolution.
            return Ok(mid);
        }
        let fm = f(mid);
        if fm.abs() <= tol.abs {
            return Ok(mid);
        }
        if fa * fm <= 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
        if b - a <= tol.rel * mid.abs() {
            return Ok(0.5 * (a + b));
        }
    }
    Err(NumericsError::NoConvergence { op: "bisect", iterations: tol.max_iter })
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

/// Relative pivot threshold below which elimination reports singularity.
const PIVOT_FLOOR: f64 = 1e-13;

/// Solves A x = b by Gaussian elimination with partial pivoting.
///
/// `a` is the n*n matrix in row-major order with n = b.len().
pub fn solve_linear(a: &[f64], b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    let n = b.len();
    if a.len() != n * n {
        return Err(NumericsError::Dimension { expected: n * n, got: a.len() });
    }
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return Err(NumericsError::Singular { pivot: 0.0, scale });
    }
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_val = m[col * n + col].abs();
        for r in col + 1..n {
            let v = m[r * n + col].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = r;
            }
        }
        if pivot_val <= PIVOT_FLOOR * scale {
            return Err(NumericsError::Singular { pivot: pivot_val, scale });
        }
        if pivot_row != col {
            for k in col..n {
                m.swap(col * n + k, pivot_row * n + k);
            }
            x.swap(col, pivot_row);
        }
        let pivot = m[col * n + col];
        for r in col + 1..n {
            let factor = m[r * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            m[r * n + col] = 0.0;
            for k in col + 1..n {
                m[r * n + k] -= factor * m[col * n + k];
            }
            x[r] -= factor * x[col];
        }
    }
    for row in (0..n).rev() {
        let mut acc = x[row];
        for k in row + 1..n {
            acc -= m[row * n + k] * x[k];
        }
        x[row] = acc / m[row * n + row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn assert_close(got: f64, want: f64, rel: f64, abs: f64) {
        let err = (got - want).abs();
        let bound = abs.max(rel * want.abs());
        assert!(err <= bound, "got {got}, want {want} (err {err:e} > bound {bound:e})");
    }

    /// Independent oracle: Ei(z) for z < 0 by quadrature of the defining
    /// integral -∫_{-z}^∞ e^{-t}/t dt with an exponentially safe cutoff.
    fn ei_by_quadrature(z: f64) -> f64 {
        let x = -z;
        let tol = Tolerance { rel: 1e-13, abs: 1e-30, max_iter: 400_000 };
        let cutoff = x + 60.0;
        -integrate(|t| (-t).exp() / t, x, cutoff, &tol).unwrap()
    }

    #[test]
    fn ei_matches_defining_integral() {
        for &z in &[-0.05, -0.3, -1.0, -2.0, -4.0, -5.5, -6.0, -8.0, -10.0, -20.0] {
            let direct = exp_integral_ei(z).unwrap();
            let oracle = ei_by_quadrature(z);
            assert_close(direct, oracle, 1e-10, 1e-300);
        }
    }

    #[test]
    fn ei_frozen_values() {
        // Values frozen from the quadrature oracle above.
        assert_close(exp_integral_ei(-1.0).unwrap(), -0.219_383_934_395_520_27, 1e-12, 0.0);
        assert_close(exp_integral_ei(-10.0).unwrap(), -4.156_968_929_685_32e-6, 1e-10, 0.0);
    }

    #[test]
    fn ei_diverges_at_zero() {
        assert!(exp_integral_ei(-1e-8).unwrap().abs() > 17.0);
    }

    #[test]
    fn ei_rejects_nonnegative() {
        assert!(matches!(exp_integral_ei(0.0), Err(NumericsError::Domain { .. })));
        assert!(matches!(exp_integral_ei(1.0), Err(NumericsError::Domain { .. })));
        assert!(matches!(exp_integral_ei(f64::NAN), Err(NumericsError::Domain { .. })));
    }

    #[test]
    fn ei_exp_scaled_consistent() {
        for &x in &[0.1, 0.5, 1.0, 3.0, 10.0, 50.0, 400.0] {
            let scaled = ei_exp_scaled(x).unwrap();
            let direct = x.exp() * exp_integral_ei(-x).unwrap();
            assert_close(scaled, direct, 1e-11, 1e-300);
        }
        // Far tail stays finite and close to -1/x.
        let far = ei_exp_scaled(1e6).unwrap();
        assert_close(far, -1e-6, 1e-5, 0.0);
    }

    #[test]
    fn gamma_upper_m1_is_exponential() {
        for &z in &[0.0, 0.3, 1.0, 2.5, 7.0, 20.0] {
            assert_close(gamma_upper(1.0, z).unwrap(), (-z).exp(), 1e-12, 1e-300);
        }
    }

    #[test]
    fn gamma_upper_at_zero_is_gamma() {
        assert_close(gamma_upper(5.0, 0.0).unwrap(), 24.0, 1e-12, 0.0);
        for m in 1..=5 {
            let want = (1..m).map(|k| k as f64).product::<f64>().max(1.0);
            assert_close(gamma_upper(m as f64, 0.0).unwrap(), want, 1e-12, 0.0);
        }
    }

    #[test]
    fn gamma_upper_matches_quadrature() {
        // Γ(5, 5) frozen from the defining integral.
        let tol = Tolerance { rel: 1e-13, abs: 1e-18, max_iter: 400_000 };
        let oracle = integrate(|t| (-t).exp() * t.powi(4), 5.0, 5.0 + 120.0, &tol).unwrap();
        assert_close(gamma_upper(5.0, 5.0).unwrap(), oracle, 1e-11, 0.0);
        assert_close(gamma_upper(5.0, 5.0).unwrap(), 10.571_838_841_565_098, 1e-10, 0.0);
    }

    #[test]
    fn gamma_upper_strictly_decreasing_in_z() {
        for m in 1..=5 {
            let m = m as f64;
            let mut prev = gamma_upper(m, 0.0).unwrap();
            let mut z = 0.25;
            while z <= 20.0 {
                let cur = gamma_upper(m, z).unwrap();
                assert!(cur < prev, "gamma_upper({m}, {z}) not decreasing");
                prev = cur;
                z += 0.25;
            }
        }
    }

    #[test]
    fn gamma_lower_regularized_complements() {
        for &(m, z) in &[(1.0, 0.5), (2.0, 3.0), (3.5, 1.25), (5.0, 9.0)] {
            let p = gamma_lower_regularized(m, z).unwrap();
            let q = gamma_upper(m, z).unwrap() / gamma(m);
            assert_close(p + q, 1.0, 1e-12, 0.0);
        }
    }

    #[test]
    fn integrate_unit_exponential() {
        let tol = Tolerance::quadrature();
        let got = integrate(|x| (-x).exp(), 0.0, f64::INFINITY, &tol).unwrap();
        assert_close(got, 1.0, 1e-10, 0.0);
    }

    #[test]
    fn integrate_linear() {
        let got = integrate(|x| x, 0.0, 1.0, &Tolerance::quadrature()).unwrap();
        assert_close(got, 0.5, 1e-13, 0.0);
    }

    #[test]
    fn integrate_log_kernel_cross_checks_ei() {
        // ∫_0^∞ ln(1+x) e^{-x} dx = -e * Ei(-1).
        let tol = Tolerance::quadrature();
        let got = integrate(|x| x.ln_1p() * (-x).exp(), 0.0, f64::INFINITY, &tol).unwrap();
        let want = -1.0f64.exp() * exp_integral_ei(-1.0).unwrap();
        assert_close(got, want, 1e-10, 0.0);
        assert_close(got, 0.596_347_362_323_194, 1e-9, 0.0);
    }

    #[test]
    fn integrate_rejects_reversed_interval() {
        assert!(integrate(|x| x, 1.0, 0.0, &Tolerance::quadrature()).is_err());
    }

    #[test]
    fn bisect_linear() {
        let tol = Tolerance { rel: 1e-13, abs: 1e-12, max_iter: 200 };
        let got = bisect(|x| x - 2.0, 0.0, 5.0, &tol).unwrap();
        assert_close(got, 2.0, 1e-12, 1e-12);
    }

    #[test]
    fn bisect_exponential_inverse() {
        let tol = Tolerance { rel: 1e-14, abs: 1e-15, max_iter: 300 };
        let got = bisect(|x| (-x).exp() - 0.5, 0.0, 5.0, &tol).unwrap();
        assert_close(got, std::f64::consts::LN_2, 1e-12, 0.0);
    }

    #[test]
    fn bisect_odd_root() {
        let tol = Tolerance { rel: 1e-13, abs: 1e-13, max_iter: 300 };
        let got = bisect(|x| x * x * x, -1.0, 2.0, &tol).unwrap();
        assert!(got.abs() < 1e-4, "root {got} too far from 0");
    }

    #[test]
    fn bisect_rejects_bad_bracket() {
        let tol = Tolerance::root();
        assert!(matches!(
            bisect(|x| x + 10.0, 0.0, 1.0, &tol),
            Err(NumericsError::Bracket { .. })
        ));
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let b = vec![3.0, -1.0, 7.0];
        let id = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        assert_eq!(solve_linear(&id, &b).unwrap(), b);

        let a = vec![2.0, 0.0, 0.0, 4.0];
        let got = solve_linear(&a, &[2.0, 4.0]).unwrap();
        assert_close(got[0], 1.0, 1e-14, 0.0);
        assert_close(got[1], 1.0, 1e-14, 0.0);
    }

    #[test]
    fn solve_recovers_random_solutions() {
        // 100 random diagonally dominant systems; residual must hold.
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for trial in 0..100 {
            let n = if trial == 0 { 50 } else { 3 + (trial % 20) };
            let mut a = vec![0.0; n * n];
            for (i, v) in a.iter_mut().enumerate() {
                *v = rng.gen_range(-1.0..1.0);
                if i % (n + 1) == 0 {
                    *v += n as f64;
                }
            }
            let x_true: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let mut b = vec![0.0; n];
            for r in 0..n {
                b[r] = (0..n).map(|c| a[r * n + c] * x_true[c]).sum();
            }
            let x = solve_linear(&a, &b).unwrap();
            let b_inf = b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
            for r in 0..n {
                let resid: f64 = (0..n).map(|c| a[r * n + c] * x[c]).sum::<f64>() - b[r];
                assert!(resid.abs() <= 1e-9 * (1.0 + b_inf), "residual {resid:e} too large");
            }
            if n == 50 {
                for (xi, ti) in x.iter().zip(&x_true) {
                    assert_close(*xi, *ti, 1e-8, 1e-8);
                }
            }
        }
    }

    #[test]
    fn solve_reports_singular() {
        let a = vec![1.0, 2.0, 2.0, 4.0];
        assert!(matches!(solve_linear(&a, &[1.0, 2.0]), Err(NumericsError::Singular { .. })));
    }

    #[test]
    fn tolerance_validation() {
        assert!(Tolerance::new(1e-9, 0.0, 10).is_ok());
        assert!(Tolerance::new(0.0, 0.0, 10).is_err());
        assert!(Tolerance::new(1e-9, -1.0, 10).is_err());
        assert!(Tolerance::new(1e-9, 0.0, 0).is_err());
    }
}
