//! Number formatting shared by CSV writers.

pub const SIGNIFICANT_DIGITS: usize = 6;

/// Plain decimal notation with `SIGNIFICANT_DIGITS` significant digits.
pub fn format_sig(v: f64) -> String {
    format_sig_n(v, SIGNIFICANT_DIGITS)
}

pub fn format_sig_n(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return format!("{:.*}", digits.saturating_sub(1), 0.0);
    }
    // scientific formatting rounds once; reuse its exponent so that carries
    // such as 9.999999 → 10.0000 keep the digit count
    let sci = format!("{:.*e}", digits.saturating_sub(1), v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    let rounded: f64 = format!("{mantissa}e{exp}").parse().expect("valid float");
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    format!("{rounded:.decimals$}")
}

/// Optional cell: empty when absent.
pub fn format_opt(v: Option<f64>) -> String {
    v.map(format_sig).unwrap_or_default()
}
