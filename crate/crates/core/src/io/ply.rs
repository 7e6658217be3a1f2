//! Minimal ASCII PLY for point clouds: one `vertex` element with scalar
//! properties. Floats are written in Rust's shortest round-trip form, so
//! write → read is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyType {
    Double,
    UChar,
    Int,
}

impl PlyType {
    fn name(self) -> &'static str {
        match self {
            PlyType::Double => "double",
            PlyType::UChar => "uchar",
            PlyType::Int => "int",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "double" | "float64" | "float" | "float32" => Some(PlyType::Double),
            "uchar" | "uint8" => Some(PlyType::UChar),
            "int" | "int32" | "uint" | "uint32" => Some(PlyType::Int),
            _ => None,
        }
    }
}

/// A table of vertex rows, each value held as f64.
#[derive(Debug, Clone, PartialEq)]
pub struct PlyTable {
    pub properties: Vec<(String, PlyType)>,
    pub rows: Vec<Vec<f64>>,
}

impl PlyTable {
    pub fn new(properties: &[(&str, PlyType)]) -> Self {
        PlyTable {
            properties: properties.iter().map(|(n, t)| (n.to_string(), *t)).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.properties.iter().position(|(n, _)| n == name)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("ply\nformat ascii 1.0\n");
        let _ = writeln!(s, "element vertex {}", self.rows.len());
        for (name, ty) in &self.properties {
            let _ = writeln!(s, "property {} {}", ty.name(), name);
        }
        s.push_str("end_header\n");
        for row in &self.rows {
            for (i, (v, (_, ty))) in row.iter().zip(&self.properties).enumerate() {
                if i > 0 {
                    s.push(' ');
                }
                match ty {
                    PlyType::Double => {
                        let _ = write!(s, "{v}");
                    }
                    PlyType::UChar | PlyType::Int => {
                        let _ = write!(s, "{}", *v as i64);
                    }
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let err = |line: usize, msg: String| Error::parse(path, line, msg);
        if !matches!(lines.next(), Some((_, "ply"))) {
            return Err(err(1, "missing 'ply' magic".into()));
        }
        let mut count: Option<usize> = None;
        let mut properties = Vec::new();
        let mut last_line = 1;
        let mut ended = false;
        for (n, line) in lines.by_ref() {
            last_line = n;
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks.as_slice() {
                ["format", "ascii", _] => {}
                ["format", other, ..] => return Err(err(n, format!("unsupported format {other}"))),
                ["comment", ..] | [] => {}
                ["element", "vertex", c] => {
                    count = Some(c.parse().map_err(|_| err(n, format!("bad vertex count {c:?}")))?);
                }
                ["element", other, ..] => return Err(err(n, format!("unsupported element {other}"))),
                ["property", ty, name] => {
                    let ty = PlyType::parse(ty).ok_or_else(|| err(n, format!("unsupported property type {ty}")))?;
                    properties.push((name.to_string(), ty));
                }
                ["end_header"] => {
                    ended = true;
                    break;
                }
                _ => return Err(err(n, format!("unexpected header line {line:?}"))),
            }
        }
        if !ended {
            return Err(err(last_line + 1, "header is not terminated by end_header".into()));
        }
        let count = count.ok_or_else(|| err(last_line, "no vertex element declared".into()))?;
        let mut rows = Vec::with_capacity(count);
        for _ in 0..count {
            let Some((n, line)) = lines.next() else {
                return Err(err(
                    last_line + 1,
                    format!("truncated: expected {count} vertices, found {}", rows.len()),
                ));
            };
            last_line = n;
            let vals: Vec<&str> = line.split_whitespace().collect();
            if vals.len() != properties.len() {
                return Err(err(n, format!("expected {} values, found {}", properties.len(), vals.len())));
            }
            let row = vals
                .iter()
                .map(|v| v.parse::<f64>().map_err(|_| err(n, format!("bad number {v:?}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(PlyTable { properties, rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PlyTable {
        let mut t = PlyTable::new(&[("x", PlyType::Double), ("y", PlyType::Double), ("label", PlyType::UChar)]);
        t.rows.push(vec![0.1, -2.5e-17, 3.0]);
        t.rows.push(vec![1.0 / 3.0, 7.0, 5.0]);
        t
    }

    #[test]
    fn text_round_trip_is_exact() {
        let t = sample();
        let back = PlyTable::parse(&t.to_text(), Path::new("mem.ply")).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn truncated_body_names_the_line() {
        let text = sample().to_text();
        let cut: String = text.lines().take(7).map(|l| format!("{l}\n")).collect();
        match PlyTable::parse(&cut, Path::new("cut.ply")) {
            Err(Error::ParseError { file, line, message }) => {
                assert_eq!(file, Path::new("cut.ply"));
                assert_eq!(line, 8);
                assert!(message.contains("truncated"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rows() {
        let bad = "ply\nformat ascii 1.0\nelement vertex 1\nproperty double x\nend_header\nabc\n";
        assert!(matches!(PlyTable::parse(bad, Path::new("b.ply")), Err(Error::ParseError { line: 6, .. })));
        assert!(matches!(PlyTable::parse("nope", Path::new("b.ply")), Err(Error::ParseError { line: 1, .. })));
        let bin = "ply\nformat binary_little_endian 1.0\nend_header\n";
        assert!(PlyTable::parse(bin, Path::new("b.ply")).is_err());
    }
}
