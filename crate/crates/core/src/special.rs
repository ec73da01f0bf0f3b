//! Special functions needed by the phase-noise model.

/// Ratio `I₁(x)/I₀(x)` of modified Bessel functions of the first kind.
///
/// Evaluated with the Gauss continued fraction
/// `I₁/I₀ = 1/(2/x + 1/(4/x + 1/(6/x + …)))` using the modified Lentz
/// algorithm. No individual Bessel value is formed, so there is no overflow
/// for large arguments (`I₀(10⁴)` alone is about `10^4341`).
pub fn bessel_i1_over_i0(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x < 0.0 {
        return -bessel_i1_over_i0(-x);
    }
    if x.is_infinite() {
        return 1.0;
    }
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let inv = 1.0 / x;
    // f = b0 + a1/(b1 + a2/(b2 + ...)) with b_j = 2j/x, a_j = 1; the ratio is 1/f.
    let mut f = 2.0 * inv;
    let mut c = f;
    let mut d = 0.0;
    for j in 2..2_000_000u64 {
        let b = 2.0 * j as f64 * inv;
        d += b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + 1.0 / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    1.0 / f
}

/// Normalized sinc, `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        let px = std::f64::consts::PI * x;
        1.0 - px * px / 6.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// `sin(x)/x`, with the removable singularity at zero filled in.
pub fn sin_over(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}
