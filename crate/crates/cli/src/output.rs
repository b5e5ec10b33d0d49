use std::io::Write;
use std::path::Path;

/// 17 significant digits, '.' decimal point, no locale.
pub fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn emit(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e-300, 6.02e23, -0.0] {
            let s = float(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
            assert!(!s.contains(','));
        }
        assert_eq!(float(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn csv_quotes_fields_with_commas() {
        let text = csv_text(&["a", "b"], &[vec!["1".into(), "{\"x\":1,\"y\":2}".into()]]).unwrap();
        assert_eq!(text, "a,b\n1,\"{\"\"x\"\":1,\"\"y\"\":2}\"\n");
    }
}
