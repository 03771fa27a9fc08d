use crate::error::{domain, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// Natural logarithm of the gamma function for positive arguments (Lanczos, g = 7).
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(format!("log_gamma requires a finite x > 0, got {x}")));
    }
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x < 0.5 {
        // Γ(x) = Γ(x + 1) / x keeps the Lanczos sum in its accurate range.
        return ln_gamma_unchecked(x + 1.0) - x.ln();
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    HALF_LN_TWO_PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Γ(x) for x > 0, via `exp(log_gamma)`.
pub fn gamma(x: f64) -> Result<f64> {
    log_gamma(x).map(f64::exp)
}

/// ln B(a, b) = ln Γ(a) + ln Γ(b) − ln Γ(a + b).
pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    Ok(log_gamma(a)? + log_gamma(b)? - log_gamma(a + b)?)
}
