//! Numeric flag values: plain numbers or products and quotients with `pi`,
//! such as `pi/32`, `2*pi` or `0.1/4`. Ladders are comma-separated.

#[derive(Debug, Clone, PartialEq)]
pub struct Ladder(pub Vec<f64>);

fn factor(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("pi") {
        return Ok(std::f64::consts::PI);
    }
    s.parse::<f64>().map_err(|_| format!("not a number: '{s}'"))
}

/// Parses `f1 * f2 / f3 ...`, evaluated left to right.
pub fn number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty value".into());
    }
    let mut value = 1.0;
    let mut op = '*';
    let mut start = 0;
    for (i, c) in s.char_indices().chain(std::iter::once((s.len(), '*'))) {
        if (c == '*' || c == '/') && i > start {
            let f = factor(&s[start..i])?;
            value = if op == '*' { value * f } else { value / f };
            op = c;
            start = i + 1;
        } else if c == '*' || c == '/' {
            return Err(format!("malformed expression '{s}'"));
        }
    }
    if !value.is_finite() {
        return Err(format!("'{s}' is not finite"));
    }
    Ok(value)
}

pub fn ladder(s: &str) -> Result<Ladder, String> {
    s.split(',').map(number).collect::<Result<Vec<_>, _>>().map(Ladder)
}

/// `table3` or `3`.
pub fn table_id(s: &str) -> Result<u8, String> {
    let digits = s.trim().trim_start_matches("table");
    match digits.parse::<u8>() {
        Ok(n) if (1..=8).contains(&n) => Ok(n),
        _ => Err(format!("unknown preset '{s}'; expected table1 .. table8")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn expressions() {
        assert_eq!(number("0.5").unwrap(), 0.5);
        assert_eq!(number("pi/32").unwrap(), PI / 32.0);
        assert_eq!(number("2*pi").unwrap(), 2.0 * PI);
        assert_eq!(number("0.1/4/4").unwrap(), 0.1 / 16.0);
        assert!(number("pi//2").is_err());
        assert!(number("x").is_err());
        assert_eq!(ladder("1, 1/2,0.25").unwrap(), Ladder(vec![1.0, 0.5, 0.25]));
    }

    #[test]
    fn presets() {
        assert_eq!(table_id("table2").unwrap(), 2);
        assert_eq!(table_id("8").unwrap(), 8);
        assert!(table_id("table9").is_err());
    }
}
