//! Fixed-point decimal text with round-half-away-from-zero.
//!
//! `format!("{:.N}")` rounds exact ties to even. An `f64` sits exactly on a
//! tie at `N` fractional digits only when it is an odd multiple of
//! `2^-(N+1)`, so those values take an integer path and everything else goes
//! through the standard formatter.

pub fn format_fixed(value: f64, digits: u32) -> String {
    let text = if is_tie(value, digits) {
        let scaled = (value.abs() * 10f64.powi(digits as i32)).trunc() + 1.0;
        let int = format!("{scaled:.0}");
        let digits = digits as usize;
        let padded = format!("{int:0>width$}", width = digits + 1);
        let (whole, frac) = padded.split_at(padded.len() - digits);
        let sign = if value < 0.0 { "-" } else { "" };
        if digits == 0 {
            format!("{sign}{whole}")
        } else {
            format!("{sign}{whole}.{frac}")
        }
    } else {
        format!("{value:.prec$}", prec = digits as usize)
    };
    strip_negative_zero(text)
}

/// Value of the decimal text `format_fixed(value, digits)` would produce.
pub fn snap(value: f64, digits: u32) -> f64 {
    format_fixed(value, digits)
        .parse()
        .expect("fixed-point text is always a valid float")
}

fn is_tie(value: f64, digits: u32) -> bool {
    if !value.is_finite() {
        return false;
    }
    let scaled = value * 2f64.powi(digits as i32 + 1);
    scaled.abs() < 2f64.powi(52) && scaled.fract() == 0.0 && (scaled.abs() % 2.0) == 1.0
}

fn strip_negative_zero(text: String) -> String {
    match text.strip_prefix('-') {
        Some(rest) if rest.chars().all(|c| c == '0' || c == '.') => rest.to_string(),
        _ => text,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_half_away_from_zero() {
        assert_eq!(format_fixed(0.03125, 4), "0.0313");
        assert_eq!(format_fixed(-0.03125, 4), "-0.0313");
        assert_eq!(format_fixed(2.5, 0), "3");
        assert_eq!(format_fixed(0.0078125, 6), "0.007813");
        assert_eq!(format_fixed(1.5 / 128.0, 6), "0.011719");
    }

    #[test]
    fn ordinary_values() {
        assert_eq!(format_fixed(0.1234567, 6), "0.123457");
        assert_eq!(format_fixed(2.2, 4), "2.2000");
        assert_eq!(format_fixed(-10.0, 4), "-10.0000");
        assert_eq!(format_fixed(11.0, 4), "11.0000");
    }

    #[test]
    fn no_negative_zero() {
        assert_eq!(format_fixed(-0.0, 4), "0.0000");
        assert_eq!(format_fixed(-0.00001, 4), "0.0000");
    }

    #[test]
    fn snap_is_idempotent() {
        for i in 0..=255 {
            let v = -10.0 + 20.0 * f64::from(i) / 255.0;
            let s = snap(v, 4);
            assert_eq!(snap(s, 4), s);
            assert!((s - v).abs() <= 5e-5 + 1e-12);
        }
    }
}
