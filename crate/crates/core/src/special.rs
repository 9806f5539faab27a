//! Modified Bessel functions of order 0 and 1 in the forms the Rice
//! likelihood needs, and Gauss–Legendre rules.

use std::f64::consts::PI;

/// Switch point between the power series and the asymptotic expansion.
const ASYMPTOTIC_FROM: f64 = 25.0;

fn series_i0_i1(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let mut t0 = 1.0;
    let mut t1 = 0.5 * x;
    let (mut s0, mut s1) = (t0, t1);
    for k in 1..500 {
        let kf = k as f64;
        t0 *= q / (kf * kf);
        t1 *= q / (kf * (kf + 1.0));
        s0 += t0;
        s1 += t1;
        if t0 < s0 * 1e-17 && t1 < s1 * 1e-17 {
            break;
        }
    }
    (s0, s1)
}

/// Sum of the Hankel expansion of `e^{−x}·√(2πx)·I_ν(x)`.
fn asymptotic_sum(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (k as f64 * 8.0 * x);
        if term.abs() >= prev {
            break;
        }
        sum += term;
        prev = term.abs();
        if prev < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `ln I₀(x)` for `x ≥ 0`, finite for any finite argument.
pub fn ln_i0(x: f64) -> f64 {
    let x = x.abs();
    if x < ASYMPTOTIC_FROM {
        series_i0_i1(x).0.ln()
    } else {
        x - 0.5 * (2.0 * PI * x).ln() + asymptotic_sum(0.0, x).ln()
    }
}

/// `I₁(x)/I₀(x)` for `x ≥ 0`.
pub fn i1_over_i0(x: f64) -> f64 {
    if x < ASYMPTOTIC_FROM {
        let (i0, i1) = series_i0_i1(x);
        i1 / i0
    } else {
        asymptotic_sum(1.0, x) / asymptotic_sum(0.0, x)
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> GaussLegendre {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// `∫_a^b f`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = 0.5 * (b - a);
        let m = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(m + h * x))
            .sum::<f64>()
            * h
    }
}

/// `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `e^{−x}·I_ν(x)` from the periodic integral, trapezoid rule.
    fn scaled_bessel_trapezoid(nu: f64, x: f64, n: usize) -> f64 {
        let h = PI / n as f64;
        let mut s = 0.0;
        for k in 0..=n {
            let t = k as f64 * h;
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            s += w * (x * (t.cos() - 1.0)).exp() * (nu * t).cos();
        }
        s * h / PI
    }

    #[test]
    fn ln_i0_matches_integral_across_branches() {
        for &x in &[0.0f64, 1e-3, 0.5, 3.0, 10.0, 24.9, 25.1, 60.0, 500.0, 1e4] {
            let n = (200.0 + 40.0 * x.sqrt() * 10.0) as usize;
            let oracle = scaled_bessel_trapezoid(0.0, x, n).ln() + x;
            let got = ln_i0(x);
            assert!(
                (got - oracle).abs() <= 1e-12 * oracle.abs().max(1.0),
                "x={x}: {got} vs {oracle}"
            );
        }
    }

    #[test]
    fn ratio_matches_integral_across_branches() {
        for &x in &[1e-3f64, 0.5, 3.0, 10.0, 24.9, 25.1, 60.0, 500.0, 1e4] {
            let n = (200.0 + 400.0 * x.sqrt()) as usize;
            let oracle = scaled_bessel_trapezoid(1.0, x, n) / scaled_bessel_trapezoid(0.0, x, n);
            let got = i1_over_i0(x);
            assert!((got - oracle).abs() < 1e-12, "x={x}: {got} vs {oracle}");
        }
    }

    #[test]
    fn frozen_high_precision_values() {
        // 40-digit reference values.
        let cases = [
            (1.0, 0.235_914_358_507_178_65),
            (30.0, 27.384_701_433_171_936),
            (1e4, 9_994.475_903_781_432),
        ];
        for (x, want) in cases {
            let got = ln_i0(x);
            assert!((got - want).abs() <= 1e-10 * want, "x={x}: {got} vs {want}");
        }
        assert!((i1_over_i0(2.0) - 0.697_774_657_964_007_98).abs() < 1e-14);
        assert!((i1_over_i0(50.0) - 0.989_948_967_378_497_75).abs() < 1e-14);
        assert_eq!(i1_over_i0(0.0), 0.0);
        assert_eq!(ln_i0(0.0), 0.0);
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let gl = GaussLegendre::new(200);
        let s: f64 = gl.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-13);
        let v = gl.integrate(0.0, 2.0, |x| x.powi(7) - 3.0 * x * x);
        assert!((v - (32.0 - 8.0)).abs() < 1e-11);
        let g = gl.integrate(0.0, PI, f64::sin);
        assert!((g - 2.0).abs() < 1e-13);
    }
}
