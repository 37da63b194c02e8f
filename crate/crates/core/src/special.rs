//! Exponentially scaled modified Bessel function of order zero.

/// Switch point between the power series and the large-argument expansion.
const SERIES_LIMIT: f64 = 30.0;

/// `exp(-|x|) * I0(x)`.
///
/// The scaled form stays finite for any concentration, which matters because
/// the von Mises kernel uses `I0(h^-2)` and `h` shrinks with the sample size.
pub fn bessel_i0e(x: f64) -> f64 {
    let x = x.abs();
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= SERIES_LIMIT {
        // sum_k ((x/2)^2)^k / (k!)^2, all terms positive
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term <= f64::EPSILON * 0.25 * sum {
                break;
            }
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        // I0(x) ~ e^x / sqrt(2 pi x) * sum_k [(2k-1)!!]^2 / (k! (8x)^k)
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            let next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
            if next >= term || next <= f64::EPSILON * 0.25 * sum {
                sum += next;
                break;
            }
            term = next;
            sum += term;
            k += 1.0;
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

/// Unscaled `I0(x)`; overflows past `x ≈ 713`.
pub fn bessel_i0(x: f64) -> f64 {
    bessel_i0e(x) * x.abs().exp()
}
