//! Fixed decimal formatting for CSV reports.

/// `%g`-style rendering with 6 significant digits.
///
/// Plain notation is used for decimal exponents in `[-4, 6)`, scientific
/// (`1.5e-07`) otherwise; trailing zeros are stripped. The output depends
/// only on the value, never on locale or platform.
pub fn fmt_g6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.5e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(&format!("{:.*}", decimals, v))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    }
}

/// Empty cell for absent values.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_g6).unwrap_or_default()
}

fn trim_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}
