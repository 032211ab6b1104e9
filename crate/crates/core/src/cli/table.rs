//! CSV result tables with `#`-prefixed provenance lines.

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Real(f64),
    Int(i64),
    Text(String),
    /// Written as an empty field (e.g. an undefined phase).
    Missing,
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Real(x) => Some(*x),
            Value::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Value::Real(x) => format_real(*x),
            Value::Int(i) => i.to_string(),
            Value::Text(s) => s.clone(),
            Value::Missing => String::new(),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Real(x)
    }
}

impl From<usize> for Value {
    fn from(i: usize) -> Self {
        Value::Int(i as i64)
    }
}

impl From<Option<f64>> for Value {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Value::Missing, Value::Real)
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

/// 17 significant digits: enough for every `f64` to parse back bit-exact.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    provenance: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
}

impl ResultTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { provenance: Vec::new(), columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    /// Adds a `# ...` line above the header.
    pub fn note(&mut self, line: impl Into<String>) -> &mut Self {
        self.provenance.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    /// Numeric contents of one column; non-numeric cells become `NaN`.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k].as_f64().unwrap_or(f64::NAN)).collect())
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for line in &self.provenance {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Value::render))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory cannot fail");
        buf
    }

    /// Parses a table written by [`ResultTable::write`]. Fields that parse
    /// as integers come back as `Int`, other numbers as `Real`.
    pub fn read<R: Read>(input: R) -> Result<Self, csv::Error> {
        let mut reader = std::io::BufReader::new(input);
        let mut provenance = Vec::new();
        let mut body = Vec::new();
        let mut line = String::new();
        loop {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                break;
            }
            match line.strip_prefix('#') {
                Some(rest) if body.is_empty() => provenance.push(rest.trim().to_string()),
                _ => body.extend_from_slice(line.as_bytes()),
            }
        }
        let mut r = csv::ReaderBuilder::new().from_reader(body.as_slice());
        let columns = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec?.iter().map(parse_field).collect());
        }
        Ok(Self { provenance, columns, rows })
    }
}

fn parse_field(s: &str) -> Value {
    if s.is_empty() {
        Value::Missing
    } else if let Ok(i) = s.parse::<i64>() {
        Value::Int(i)
    } else if let Ok(x) = s.parse::<f64>() {
        Value::Real(x)
    } else {
        Value::Text(s.to_string())
    }
}

/// Column names for a complex quantity stored as two reals.
pub fn complex_columns(name: &str) -> [String; 2] {
    [format!("{name}_re"), format!("{name}_im")]
}

pub fn complex_values(z: Complex64) -> [Value; 2] {
    [Value::Real(z.re), Value::Real(z.im)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout() {
        let mut t = ResultTable::new(["site", "population", "phase"]);
        t.note("toporouter test");
        t.push(vec![Value::Text("a1".into()), 0.5.into(), Value::Missing]);
        let s = String::from_utf8(t.to_bytes()).unwrap();
        assert_eq!(s, "# toporouter test\nsite,population,phase\na1,5.0000000000000000e-1,\n");
        assert_eq!(ResultTable::read(s.as_bytes()).unwrap(), t);
    }

    proptest! {
        #[test]
        fn reals_round_trip_bit_exact(xs in proptest::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..20)) {
            let mut t = ResultTable::new(["x"]);
            for &x in &xs {
                t.push(vec![Value::Real(x)]);
            }
            let back = ResultTable::read(t.to_bytes().as_slice()).unwrap();
            let got = back.column("x").unwrap();
            for (a, b) in xs.iter().zip(&got) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
