use crate::EvalError;

const UNIT_SUFFIXES: [&str; 3] = ["seconds", "sec", "s"];

fn is_separator(c: char) -> bool {
    c.is_whitespace() || matches!(c, ',' | ';' | '[' | ']' | '(' | ')')
}

/// Pull timestamps out of free-form model output. Tokens are split on
/// whitespace, commas, semicolons and brackets; a trailing `s`, `sec` or
/// `seconds` is dropped. Anything that is not a finite non-negative number is
/// skipped.
pub fn parse_prediction_output(text: &str) -> Result<Vec<f64>, EvalError> {
    let mut out = Vec::new();
    for token in text.split(is_separator).filter(|t| !t.is_empty()) {
        let token = token.trim_end_matches('.');
        let lower = token.to_ascii_lowercase();
        let number = UNIT_SUFFIXES
            .iter()
            .find_map(|u| lower.strip_suffix(u))
            .unwrap_or(&lower);
        if number.is_empty() || !number.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
            continue;
        }
        if let Ok(v) = number.parse::<f64>() {
            if v.is_finite() && v >= 0.0 {
                out.push(v);
            }
        }
    }
    if out.is_empty() {
        Err(EvalError::NoTimestampsFound)
    } else {
        Ok(out)
    }
}
