//! Exponential integrals.
//!
//! `Ei(x)` for x > 0 is summed from its power series up to x = 40 (all terms
//! positive, no cancellation) and from the asymptotic series beyond. `E₁(y)`
//! for y > 0 uses the power series for y ≤ 1 and a continued fraction
//! (modified Lentz) otherwise; `Ei(x) = −E₁(−x)` for x < 0.
//!
//! The scaled forms `e^{−x}Ei(x)` and `e^{y}E₁(y)` avoid overflow and are
//! what the spectral densities actually need.

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_LIMIT: f64 = 40.0;

/// Exponential integral Ei(x). `Ei(0) = −∞`.
pub fn ei(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else if x < 0.0 {
        -e1(-x)
    } else if x <= SERIES_LIMIT {
        ei_series(x)
    } else {
        ei_asymptotic_scaled(x) * x.exp()
    }
}

/// `e^{−x}·Ei(x)`, finite for all x ≠ 0.
pub fn ei_scaled(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else if x < 0.0 {
        -e1_scaled(-x)
    } else if x <= SERIES_LIMIT {
        ei_series(x) * (-x).exp()
    } else {
        ei_asymptotic_scaled(x)
    }
}

fn ei_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..500 {
        let kf = k as f64;
        term *= x / kf;
        let add = term / kf;
        sum += add;
        if add < 1e-17 * sum.abs() {
            break;
        }
    }
    EULER_GAMMA + x.ln() + sum
}

/// e^{−x}Ei(x) ≈ (1/x)·Σ k!/x^k, truncated at the smallest term.
fn ei_asymptotic_scaled(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let next = term * k as f64 / x;
        if next > term || next < 1e-18 {
            break;
        }
        term = next;
        sum += term;
    }
    sum / x
}

/// Exponential integral E₁(y) for y > 0.
pub fn e1(y: f64) -> f64 {
    assert!(y > 0.0, "E1 requires a positive argument, got {y}");
    if y <= 1.0 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..100 {
            let kf = k as f64;
            term *= -y / kf;
            let add = term / kf;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - y.ln() - sum
    } else {
        e1_scaled(y) * (-y).exp()
    }
}

/// `e^{y}·E₁(y)` for y > 0.
pub fn e1_scaled(y: f64) -> f64 {
    assert!(y > 0.0, "E1 requires a positive argument, got {y}");
    if y <= 1.0 {
        return e1(y) * y.exp();
    }
    const TINY: f64 = 1e-300;
    let mut b = y + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}
