//! Deterministic number formatting for report files.
//!
//! Probabilities are printed in scientific notation ("1.61E-02" style, two-digit
//! exponent), everything else with a fixed number of significant digits. All
//! output paths go through these helpers so that report files are byte-stable.

/// Scientific notation with `sig` significant digits and a sign + two-digit
/// exponent, e.g. `sci(0.0161, 3)` is `"1.61E-02"`.
pub fn sci(x: f64, sig: usize) -> String {
    assert!(sig >= 1);
    if x == 0.0 {
        return format!("0.{}E+00", "0".repeat(sig - 1));
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".to_string()
        } else if x > 0.0 {
            "Inf".to_string()
        } else {
            "-Inf".to_string()
        };
    }
    let neg = x < 0.0;
    let mut v = x.abs();
    let mut e = v.log10().floor() as i32;
    // Renormalise in case of log10 edge cases right at a power of ten.
    v /= 10f64.powi(e);
    if v >= 10.0 {
        v /= 10.0;
        e += 1;
    } else if v < 1.0 {
        v *= 10.0;
        e -= 1;
    }
    let mut mantissa = format!("{:.*}", sig - 1, v);
    // Rounding can push the mantissa to 10.000...
    if mantissa.starts_with("10") {
        e += 1;
        mantissa = format!("{:.*}", sig - 1, 1.0);
    }
    format!(
        "{}{}E{}{:02}",
        if neg { "-" } else { "" },
        mantissa,
        if e < 0 { "-" } else { "+" },
        e.abs()
    )
}

/// Fixed formatting with `sig` significant digits, plain decimal notation.
///
/// Falls back to scientific notation when the magnitude would make a plain
/// rendering unreadable (|x| >= 1e7 or 0 < |x| < 1e-4).
pub fn fixed_sig(x: f64, sig: usize) -> String {
    assert!(sig >= 1);
    if x == 0.0 {
        return format!("{:.*}", sig - 1, 0.0);
    }
    if !x.is_finite() {
        return sci(x, sig);
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..7).contains(&mag) {
        return sci(x, sig);
    }
    let decimals = (sig as i32 - 1 - mag).max(0) as usize;
    format!("{:.*}", decimals, x)
}
