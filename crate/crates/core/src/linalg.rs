//! Dense vector helpers. Dimensions here are small (d is a few hundred at most).

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `ln cosh(x)` without overflow for large `|x|`.
pub fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `1 / cosh²(x)`, returning 0 instead of NaN far in the tails.
pub fn sech2(x: f64) -> f64 {
    let a = x.abs();
    if a > 350.0 {
        return 0.0;
    }
    let e = (-2.0 * a).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

/// `tanh(x) − tanh(y)` with full relative accuracy when `x ≈ y` or both saturate.
pub fn tanh_diff(x: f64, y: f64) -> f64 {
    tanh_step(y, x - y)
}

/// `tanh(y + h) − tanh(y)`, exact in relative terms even when `y + h` rounds to `y`.
///
/// Uses `sinh(h) / (cosh(y+h) cosh(y))` rescaled by `e^{−|y+h|−|y|}`.
pub fn tanh_step(y: f64, h: f64) -> f64 {
    let x = y + h;
    if h.abs() > 300.0 {
        return x.tanh() - y.tanh();
    }
    let (ax, ay) = (x.abs(), y.abs());
    2.0 * (-h - ax - ay).exp() * (2.0 * h).exp_m1() / ((1.0 + (-2.0 * ax).exp()) * (1.0 + (-2.0 * ay).exp()))
}
