//! Independent numerical oracles for the test suites.
//!
//! Nothing here depends on the library under test. The routines use different
//! algorithms from the library (adaptive Simpson instead of Gauss–Kronrod,
//! Illinois root search instead of bisection, a finite-difference PDE solve
//! instead of Monte Carlo).

/// Recursive adaptive Simpson quadrature with Richardson correction.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// `E[Z^k e^{cZ}]` for a Pareto(shape, scale) law conditioned on `Z ≤ d`,
/// integrated in `z` on a geometric partition to relative tolerance `tol`.
pub fn truncated_pareto_moment(shape: f64, scale: f64, d: f64, c: f64, k: i32, tol: f64) -> f64 {
    let rough = pareto_pieces(shape, scale, d, c, k, 1e-6);
    pareto_pieces(shape, scale, d, c, k, tol * rough.abs())
}

fn pareto_pieces(shape: f64, scale: f64, d: f64, c: f64, k: i32, tol: f64) -> f64 {
    let mass = 1.0 - (scale / d).powf(shape);
    let density = |z: f64| shape * scale.powf(shape) / z.powf(shape + 1.0) / mass;
    let pieces = 64;
    let ratio = (d / scale).powf(1.0 / pieces as f64);
    let mut total = 0.0;
    let mut lo = scale;
    for _ in 0..pieces {
        let hi = lo * ratio;
        let f = |z: f64| z.powi(k) * (c * z).exp() * density(z);
        total += simpson(&f, lo, hi.min(d), tol / pieces as f64);
        lo = hi;
    }
    total
}

/// Closed-form `E[Z^k]` of the truncated Pareto law.
pub fn truncated_pareto_raw_moment(shape: f64, scale: f64, d: f64, k: f64) -> f64 {
    let mass = 1.0 - (scale / d).powf(shape);
    shape * scale.powf(shape) * (d.powf(k - shape) - scale.powf(k - shape)) / (k - shape) / mass
}

/// Expected-value principle with `Exp(ζ)` claims:
/// `u*(t) = max(0, 1 − (ζ/η)(1 − (1+θ)^{−1/2}) e^{−R(T−t)})` and the time
/// `t₀` at which the expression reaches zero.
pub fn evp_exponential(zeta: f64, eta: f64, rate: f64, horizon: f64, theta: f64, t: f64) -> (f64, f64) {
    let k = zeta / eta * (1.0 - (1.0 + theta).powf(-0.5));
    let u = 1.0 - k * (-(rate * (horizon - t))).exp();
    let t0 = horizon - k.ln() / rate;
    (u.max(0.0), t0)
}

/// Root in `(0, 1)` of `(ζ + 4θ'u)(ζ − a(1−u))² = ζ³`, the first-order
/// condition of the variance principle for `Exp(ζ)` claims, with
/// `a = ηe^{R(T−t)}` and `θ' = θ` (variance) or `θ(1 + T_qλ)` (intensity-adjusted).
pub fn variance_foc_root(zeta: f64, a: f64, theta_eff: f64) -> f64 {
    let h = |u: f64| (zeta + 4.0 * theta_eff * u) * (zeta - a * (1.0 - u)).powi(2) - zeta.powi(3);
    illinois(h, 0.0, 1.0, 1e-15)
}

/// Illinois false-position root search on a sign-changing bracket.
pub fn illinois<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let (mut fa, mut fb) = (f(a), f(b));
    assert!(fa * fb <= 0.0, "root not bracketed: f({a}) = {fa}, f({b}) = {fb}");
    for _ in 0..500 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c);
        if fc == 0.0 {
            return c;
        }
        if fc * fb < 0.0 {
            a = b;
            fa = fb;
        } else {
            fa *= 0.5;
        }
        b = c;
        fb = fc;
        if (b - a).abs() < tol {
            return b;
        }
    }
    b
}

/// Solves `g_τ = (R − ½σ²)g_x + ½σ²g_xx − ½θ²` in `x = ln p`, `τ = T − t`,
/// `g(τ=0) = 0`, by Crank–Nicolson on `[ln p_lo, ln p_hi]` with Dirichlet
/// boundaries `g = −½θ(p_b)²τ` from frozen coefficients. Returns `g` at
/// `(τ = horizon, p)` and `∂g/∂p` there.
pub struct CnSolution {
    pub g: f64,
    pub dg_dp: f64,
}

pub fn crank_nicolson_g<S, Q>(
    sigma: S,
    sharpe: Q,
    rate: f64,
    horizon: f64,
    p: f64,
    p_range: (f64, f64),
    n_x: usize,
    n_tau: usize,
) -> CnSolution
where
    S: Fn(f64) -> f64,
    Q: Fn(f64) -> f64,
{
    let (x_lo, x_hi) = (p_range.0.ln(), p_range.1.ln());
    let dx = (x_hi - x_lo) / n_x as f64;
    let dtau = horizon / n_tau as f64;
    let xs: Vec<f64> = (0..=n_x).map(|i| x_lo + i as f64 * dx).collect();
    let s2: Vec<f64> = xs.iter().map(|&x| sigma(x.exp()).powi(2)).collect();
    let src: Vec<f64> = xs.iter().map(|&x| -0.5 * sharpe(x.exp()).powi(2)).collect();
    // L g_i = l_i g_{i-1} + d_i g_i + r_i g_{i+1}
    let l: Vec<f64> = (0..=n_x).map(|i| 0.5 * s2[i] / (dx * dx) - (rate - 0.5 * s2[i]) / (2.0 * dx)).collect();
    let d: Vec<f64> = (0..=n_x).map(|i| -s2[i] / (dx * dx)).collect();
    let r: Vec<f64> = (0..=n_x).map(|i| 0.5 * s2[i] / (dx * dx) + (rate - 0.5 * s2[i]) / (2.0 * dx)).collect();
    let mut g = vec![0.0; n_x + 1];
    let m = n_x - 1;
    let (mut a, mut b, mut c, mut rhs) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    for step in 1..=n_tau {
        let tau = step as f64 * dtau;
        let g_lo = src[0] * tau;
        let g_hi = src[n_x] * tau;
        for k in 0..m {
            let i = k + 1;
            let explicit = g[i] + 0.5 * dtau * (l[i] * g[i - 1] + d[i] * g[i] + r[i] * g[i + 1]);
            rhs[k] = explicit + dtau * src[i];
            a[k] = -0.5 * dtau * l[i];
            b[k] = 1.0 - 0.5 * dtau * d[i];
            c[k] = -0.5 * dtau * r[i];
        }
        rhs[0] -= a[0] * g_lo;
        rhs[m - 1] -= c[m - 1] * g_hi;
        let interior = thomas(&a, &b, &c, &rhs);
        g[0] = g_lo;
        g[n_x] = g_hi;
        g[1..n_x].copy_from_slice(&interior);
    }
    let x = p.ln();
    let j = (((x - x_lo) / dx).floor() as usize).clamp(1, n_x - 2);
    // Quadratic through nodes j-1, j, j+1 (or j, j+1, j+2 when closer).
    let j = if x - xs[j] > 0.5 * dx { j + 1 } else { j };
    let s = (x - xs[j]) / dx;
    let (gm, g0, gp) = (g[j - 1], g[j], g[j + 1]);
    let value = g0 + 0.5 * s * (gp - gm) + 0.5 * s * s * (gp - 2.0 * g0 + gm);
    let dg_dx = ((gp - gm) / 2.0 + s * (gp - 2.0 * g0 + gm)) / dx;
    CnSolution { g: value, dg_dp: dg_dx / p }
}

fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let den = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / den;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Crank–Nicolson value with a Richardson error estimate from a solve on a
/// grid refined by two in both directions: `(g_fine, |g_fine − g_coarse|/3)`.
pub fn crank_nicolson_g_with_error<S, Q>(sigma: S, sharpe: Q, rate: f64, horizon: f64, p: f64, p_range: (f64, f64), n_x: usize, n_tau: usize) -> (CnSolution, f64, f64)
where
    S: Fn(f64) -> f64 + Copy,
    Q: Fn(f64) -> f64 + Copy,
{
    let coarse = crank_nicolson_g(sigma, sharpe, rate, horizon, p, p_range, n_x, n_tau);
    let fine = crank_nicolson_g(sigma, sharpe, rate, horizon, p, p_range, 2 * n_x, 2 * n_tau);
    let err_g = (fine.g - coarse.g).abs() / 3.0;
    let err_d = (fine.dg_dp - coarse.dg_dp).abs() / 3.0;
    (fine, err_g, err_d)
}
