//! Number formatting and run fingerprints shared by the report writers.

use sha2::{Digest, Sha256};

/// Format with 6 significant digits, `%g` style.
pub fn fmt_sig(x: f64) -> String {
    fmt_sig_n(x, 6)
}

pub fn fmt_sig_n(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    // Round first so that e.g. 999999.7 moves to the next decade.
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -4 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        return format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Short hex digest used to tag outputs with the configuration that produced them.
pub fn fingerprint(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    hex::encode(&digest[..8])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_sig(0.788_4), "0.7884");
        assert_eq!(fmt_sig(69.314_718_056), "69.3147");
        assert_eq!(fmt_sig(-1.0), "-1");
        assert_eq!(fmt_sig(1234567.0), "1.23457e+06");
        assert_eq!(fmt_sig(0.000_012_345_67), "1.23457e-05");
        assert_eq!(fmt_sig(999_999.7), "1e+06");
        assert_eq!(fmt_sig(0.0), "0");
    }
}
