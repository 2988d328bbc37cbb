//! Examples, datasets, and the CSV dataset format.
//!
//! The file format is a header row `x1,...,xn,y` followed by one example per
//! row. Floats are written with Rust's shortest round-trip formatting, so a
//! written dataset parses back bit-for-bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub x: Vec<f64>,
    pub y: f64,
}

impl Example {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Example { x, y }
    }
}

/// An ordered, non-empty collection of examples sharing one input dimension.
///
/// Ordering is stable; shard assignment depends on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    examples: Vec<Example>,
    n: usize,
}

impl Dataset {
    pub fn new(examples: Vec<Example>) -> Result<Self> {
        let first = examples
            .first()
            .ok_or_else(|| Error::invalid("dataset must contain at least one example"))?;
        let n = first.x.len();
        if n == 0 {
            return Err(Error::invalid("input dimension must be at least 1"));
        }
        for (i, ex) in examples.iter().enumerate() {
            if ex.x.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: ex.x.len(),
                });
            }
            if !ex.y.is_finite() || ex.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("example {i} has a non-finite component")));
            }
        }
        Ok(Dataset { examples, n })
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    /// Input dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Example count.
    pub fn m(&self) -> usize {
        self.examples.len()
    }

    pub fn into_examples(self) -> Vec<Example> {
        self.examples
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for j in 1..=self.n {
            let _ = write!(out, "x{j},");
        }
        out.push_str("y\n");
        for ex in &self.examples {
            for v in &ex.x {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{}", ex.y);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_csv(&text, path)
    }

    /// Parses CSV text. `origin` is only used in error messages.
    pub fn parse_csv(text: &str, origin: &Path) -> Result<Self> {
        let parse_err = |line: u64, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };

        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());

        let headers = reader
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .clone();
        let arity = headers.len();
        if arity < 2 {
            return Err(parse_err(1, "header needs at least one input column and `y`".into()));
        }
        for (j, name) in headers.iter().take(arity - 1).enumerate() {
            if name != format!("x{}", j + 1) {
                return Err(parse_err(1, format!("expected column `x{}`, found `{name}`", j + 1)));
            }
        }
        if &headers[arity - 1] != "y" {
            return Err(parse_err(1, format!("last column must be `y`, found `{}`", &headers[arity - 1])));
        }

        let mut examples = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_err(line, e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != arity {
                return Err(parse_err(
                    line,
                    format!("expected {arity} fields, found {}", record.len()),
                ));
            }
            let mut values = Vec::with_capacity(arity);
            for field in record.iter() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| parse_err(line, format!("`{field}` is not a number")))?;
                values.push(v);
            }
            let y = values.pop().expect("arity >= 2");
            examples.push(Example::new(values, y));
        }
        Dataset::new(examples).map_err(|e| parse_err(0, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin() -> &'static Path {
        Path::new("inline.csv")
    }

    #[test]
    fn rejects_empty_and_ragged() {
        assert!(Dataset::new(vec![]).is_err());
        let ragged = vec![Example::new(vec![1.0], 0.0), Example::new(vec![1.0, 2.0], 0.0)];
        assert!(matches!(
            Dataset::new(ragged),
            Err(Error::DimensionMismatch { expected: 1, actual: 2 })
        ));
        assert!(Dataset::new(vec![Example::new(vec![f64::NAN], 0.0)]).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let data = Dataset::new(vec![
            Example::new(vec![0.1, -1.0 / 3.0], 2.5e-17),
            Example::new(vec![1e300, 0.0], -7.0),
        ])
        .unwrap();
        let text = data.to_csv_string();
        assert!(text.starts_with("x1,x2,y\n"));
        assert_eq!(Dataset::parse_csv(&text, origin()).unwrap(), data);
    }

    #[test]
    fn csv_rejects_wrong_arity() {
        let err = Dataset::parse_csv("x1,y\n1,2\n3,4,5\n", origin()).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("expected 2 fields"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_rejects_bad_header_and_values() {
        assert!(Dataset::parse_csv("a,y\n1,2\n", origin()).is_err());
        assert!(Dataset::parse_csv("x1,z\n1,2\n", origin()).is_err());
        assert!(Dataset::parse_csv("x1,y\n1,abc\n", origin()).is_err());
        assert!(Dataset::parse_csv("x1,y\n", origin()).is_err());
    }
}
