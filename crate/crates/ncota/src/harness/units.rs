//! Parsing of unit-bearing config values ("20 dBm", "5 MHz", "2 km") into
//! SI base quantities. Numbers must carry a unit; the split point is found
//! by taking the longest prefix that parses as a float, so both "5 MHz" and
//! "5MHz" work.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum UnitError {
    #[error("'{0}' has no parsable numeric part")]
    NoNumber(String),
    #[error("'{text}' uses unit '{unit}', expected one of: {expected}")]
    WrongUnit { text: String, unit: String, expected: &'static str },
    #[error("'{0}' must carry a unit ({1})")]
    MissingUnit(String, &'static str),
}

fn split_value(text: &str) -> Result<(f64, &str), UnitError> {
    let trimmed = text.trim();
    let mut best: Option<(f64, usize)> = None;
    for (idx, _) in trimmed.char_indices().skip(1) {
        if let Ok(v) = trimmed[..idx].trim_end().parse::<f64>() {
            best = Some((v, idx));
        }
    }
    if let Ok(v) = trimmed.parse::<f64>() {
        best = Some((v, trimmed.len()));
    }
    match best {
        Some((value, idx)) => Ok((value, trimmed[idx..].trim())),
        None => Err(UnitError::NoNumber(text.to_string())),
    }
}

fn convert(
    text: &str,
    table: &[(&str, fn(f64) -> f64)],
    expected: &'static str,
) -> Result<f64, UnitError> {
    let (value, unit) = split_value(text)?;
    if unit.is_empty() {
        return Err(UnitError::MissingUnit(text.to_string(), expected));
    }
    for (name, f) in table {
        if unit.eq_ignore_ascii_case(name) {
            return Ok(f(value));
        }
    }
    Err(UnitError::WrongUnit { text: text.to_string(), unit: unit.to_string(), expected })
}

fn dbm_to_watts(x: f64) -> f64 {
    10f64.powf((x - 30.0) / 10.0)
}

/// Power in watts. Accepts W, mW, kW, dBm, dBW.
pub fn parse_power_watts(text: &str) -> Result<f64, UnitError> {
    convert(
        text,
        &[
            ("W", |x| x),
            ("mW", |x| x * 1e-3),
            ("uW", |x| x * 1e-6),
            ("kW", |x| x * 1e3),
            ("dBm", dbm_to_watts),
            ("dBmW", dbm_to_watts),
            ("dBW", |x| 10f64.powf(x / 10.0)),
        ],
        "W, mW, uW, kW, dBm, dBW",
    )
}

/// Noise power spectral density in W/Hz (equivalently joules). Accepts
/// dBm/Hz, dBmW/Hz, W/Hz, J.
pub fn parse_noise_density(text: &str) -> Result<f64, UnitError> {
    convert(
        text,
        &[
            ("dBm/Hz", dbm_to_watts),
            ("dBmW/Hz", dbm_to_watts),
            ("W/Hz", |x| x),
            ("J", |x| x),
        ],
        "dBm/Hz, dBmW/Hz, W/Hz, J",
    )
}

/// Frequency in hertz. Accepts Hz, kHz, MHz, GHz.
pub fn parse_frequency_hz(text: &str) -> Result<f64, UnitError> {
    convert(
        text,
        &[
            ("Hz", |x| x),
            ("kHz", |x| x * 1e3),
            ("MHz", |x| x * 1e6),
            ("GHz", |x| x * 1e9),
        ],
        "Hz, kHz, MHz, GHz",
    )
}

/// Distance in meters. Accepts m, km, cm.
pub fn parse_distance_m(text: &str) -> Result<f64, UnitError> {
    convert(
        text,
        &[("m", |x| x), ("km", |x| x * 1e3), ("cm", |x| x * 1e-2)],
        "m, km, cm",
    )
}

/// Duration in seconds. Accepts s, ms, us (µs), ns, min.
pub fn parse_duration_s(text: &str) -> Result<f64, UnitError> {
    convert(
        text,
        &[
            ("s", |x| x),
            ("ms", |x| x * 1e-3),
            ("us", |x| x * 1e-6),
            ("µs", |x| x * 1e-6),
            ("ns", |x| x * 1e-9),
            ("min", |x| x * 60.0),
        ],
        "s, ms, us, ns, min",
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_conversions() {
        // 20 dBm = 100 mW.
        assert!((parse_power_watts("20 dBm").unwrap() - 0.1).abs() < 1e-15);
        assert!((parse_power_watts("100 mW").unwrap() - 0.1).abs() < 1e-15);
        // -173 dBm/Hz ≈ 5.0119e-21 W/Hz.
        let n0 = parse_noise_density("-173 dBm/Hz").unwrap();
        assert!((n0 - 5.011_872_336_272_715e-21).abs() < 1e-32);
        assert_eq!(parse_frequency_hz("5 MHz").unwrap(), 5e6);
        assert_eq!(parse_frequency_hz("3 GHz").unwrap(), 3e9);
        assert_eq!(parse_distance_m("2 km").unwrap(), 2e3);
        assert_eq!(parse_duration_s("2 ms").unwrap(), 2e-3);
        // 30 · 1e-6 is one ulp off the decimal literal.
        assert!((parse_duration_s("30 us").unwrap() - 3e-5).abs() < 1e-19);
    }

    #[test]
    fn tolerates_missing_space_and_mixed_case() {
        assert_eq!(parse_frequency_hz("5MHz").unwrap(), 5e6);
        assert_eq!(parse_frequency_hz("5 mhz").unwrap(), 5e6);
        assert!((parse_power_watts("-3dbm").unwrap() - 10f64.powf(-3.3)).abs() < 1e-18);
    }

    #[test]
    fn scientific_notation_numbers_split_correctly() {
        assert_eq!(parse_frequency_hz("2e3 Hz").unwrap(), 2e3);
        assert_eq!(parse_duration_s("1.5e-4 s").unwrap(), 1.5e-4);
    }

    #[test]
    fn rejects_bare_numbers_and_unknown_units() {
        assert!(matches!(parse_power_watts("20"), Err(UnitError::MissingUnit(..))));
        assert!(matches!(
            parse_frequency_hz("5 parsec"),
            Err(UnitError::WrongUnit { .. })
        ));
        assert!(matches!(parse_distance_m("fast"), Err(UnitError::NoNumber(..))));
    }
}
