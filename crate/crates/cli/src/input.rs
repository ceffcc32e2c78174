use std::fmt;
use std::fs;
use std::path::Path;

/// A problem with the input file, located by line where possible.
#[derive(Debug)]
pub struct InputError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Reads one decimal value per line. Blank lines are skipped. Values must
/// lie in (0,1), or in [0,1] when `allow_boundary` is set.
pub fn read_values(path: &Path, allow_boundary: bool) -> Result<Vec<f64>, InputError> {
    let text = fs::read_to_string(path).map_err(|e| InputError {
        line: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_values(&text, allow_boundary)
}

pub fn parse_values(text: &str, allow_boundary: bool) -> Result<Vec<f64>, InputError> {
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let token = raw.trim();
        if token.is_empty() {
            continue;
        }
        let v: f64 = token.parse().map_err(|_| InputError {
            line: Some(line),
            message: format!("cannot parse {token:?} as a number"),
        })?;
        let ok = if allow_boundary {
            (0.0..=1.0).contains(&v)
        } else {
            v > 0.0 && v < 1.0
        };
        if !ok {
            let hint = if !allow_boundary && (v == 0.0 || v == 1.0) {
                " (use --clamp EPS to admit 0 and 1)"
            } else {
                ""
            };
            return Err(InputError {
                line: Some(line),
                message: format!("value {token} lies outside (0,1){hint}"),
            });
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(InputError {
            line: None,
            message: "input contains no values".into(),
        });
    }
    Ok(values)
}
