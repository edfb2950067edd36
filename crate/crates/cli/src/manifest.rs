//! Output headers and number formatting shared by every command.

use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub parameters: Value,
    pub seed: Option<u64>,
    pub generator: &'static str,
    pub version: &'static str,
    pub timestamp: String,
    pub schema_version: u32,
}

impl RunManifest {
    pub fn new(command: &'static str, parameters: Value, seed: Option<u64>) -> Self {
        Self {
            command,
            parameters,
            seed,
            generator: coverplace::catalog::GENERATOR_ID,
            version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            schema_version: SCHEMA_VERSION,
        }
    }

    /// Single-line JSON, suitable for a `#` or `\` comment header.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }
}

/// Decimal rendering with 12 significant digits and no trailing zeros.
pub fn sig12(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..12).contains(&exp) {
        return format!("{v:.11e}");
    }
    let decimals = (11 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(sig12(0.6875), "0.6875");
        assert_eq!(sig12(0.795245), "0.795245");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(2.0 / 3.0), "0.666666666667");
        assert_eq!(sig12(12.5), "12.5");
        assert_eq!(sig12(1e-7), "1.00000000000e-7");
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(-0.25), "-0.25");
    }
}
