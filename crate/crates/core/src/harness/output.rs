use std::path::Path;

use crate::analysis::SecurityCurve;
use crate::protocol::RoundRecord;
use crate::Result;

/// Shortest decimal form of `x` rounded to 12 significant digits.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    rounded.to_string()
}

/// Rounds every float in a JSON document to 12 significant digits.
pub(crate) fn round_floats(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Number(n) if n.is_f64() => {
            let x: f64 = format_float(n.as_f64().expect("f64 number")).parse().expect("rounded float parses");
            serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}

pub fn write_rounds_csv(path: &Path, records: &[RoundRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "alice", "bob", "outcome", "bit", "t_s", "t_r", "pol_sent", "pol_basis", "pol_result"])?;
    let opt = |x: Option<String>| x.unwrap_or_default();
    for r in records {
        w.write_record([
            r.index.to_string(),
            r.alice.label().to_owned(),
            r.bob.label().to_owned(),
            r.outcome.label().to_owned(),
            opt(r.sifted_bit.map(|b| b.to_string())),
            r.send_tick.to_string(),
            opt(r.receive_tick.map(|t| t.to_string())),
            r.sent_pol.label().to_owned(),
            opt(r.bob_pol.map(|(b, _)| b.label().to_owned())),
            opt(r.bob_pol.map(|(_, s)| s.label().to_owned())),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curve_csv(path: &Path, curve: &SecurityCurve<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["theta", "V", "e", "I_E", "I_AB", "K"])?;
    for p in &curve.points {
        w.write_record(
            [p.theta, p.visibility, p.error_rate, p.eve_info, p.bob_info, p.key_rate].map(format_float),
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_float(0.5), "0.5");
        assert_eq!(format_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_float(2.0 / 3.0), "0.666666666667");
        assert_eq!(format_float(-0.0), "0");
        assert_eq!(format_float(123_456_789.123_456_8), "123456789.123");
        assert_eq!(format_float(1e-20 / 3.0), "0.00000000000000000000333333333333");
    }
}
