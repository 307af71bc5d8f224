//! Special functions for the distribution CDFs.

use libm::{erfc, lgamma};

pub fn ln_beta(a: f64, b: f64) -> f64 {
    lgamma(a) + lgamma(b) - lgamma(a + b)
}

/// Regularized incomplete beta `I_x(a, b)` with `y = 1 − x` supplied by the
/// caller, so that arguments close to 1 keep full relative precision.
pub fn beta_reg(a: f64, b: f64, x: f64, y: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    // the continued fraction converges quickly for x < (a+1)/(a+b+2)
    if x * (a + b + 2.0) < a + 1.0 {
        front(a, b, x, y) * beta_cf(a, b, x) / a
    } else {
        1.0 - front(b, a, y, x) * beta_cf(b, a, y) / b
    }
}

/// Upper tail `1 − I_x(a, b) = I_y(b, a)`, computed without cancellation.
pub fn beta_reg_complement(a: f64, b: f64, x: f64, y: f64) -> f64 {
    beta_reg(b, a, y, x)
}

fn front(a: f64, b: f64, x: f64, y: f64) -> f64 {
    (a * x.ln() + b * y.ln() - ln_beta(a, b)).exp()
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=1000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Student t upper tail `P(T > t)`.
pub fn student_t_sf(t: f64, nu: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 0.0 } else { 1.0 };
    }
    let t2 = t * t;
    let x = nu / (nu + t2);
    let y = t2 / (nu + t2);
    let half_tail = 0.5 * beta_reg(nu / 2.0, 0.5, x, y);
    if t >= 0.0 {
        half_tail
    } else {
        1.0 - half_tail
    }
}

pub fn student_t_cdf(t: f64, nu: f64) -> f64 {
    student_t_sf(-t, nu)
}

/// Log of the Student t normalizing constant.
pub fn student_t_ln_norm(nu: f64) -> f64 {
    lgamma((nu + 1.0) / 2.0) - lgamma(nu / 2.0) - 0.5 * (nu * std::f64::consts::PI).ln()
}

pub fn student_t_pdf_with(t: f64, nu: f64, ln_norm: f64) -> f64 {
    (ln_norm - 0.5 * (nu + 1.0) * (t * t / nu).ln_1p()).exp()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}
