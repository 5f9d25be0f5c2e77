use std::io;

use garnier_core::exactalg::{RationalExpr, Scalar};
use serde_json::ser::Formatter;
use serde_json::{json, Map, Value};

/// Outcome of one subcommand: a verdict, a JSON body and text lines.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub passed: bool,
    pub body: Map<String, Value>,
    pub lines: Vec<String>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Report { command, passed: true, body: Map::new(), lines: Vec::new() }
    }

    pub fn set(&mut self, key: &str, v: impl Into<Value>) {
        self.body.insert(key.to_string(), v.into());
    }

    pub fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    /// `serde_json::Map` is ordered by key, so output is canonical.
    pub fn to_json(&self) -> String {
        let mut m = self.body.clone();
        m.insert("schema".into(), json!(1));
        m.insert("command".into(), json!(self.command));
        m.insert("passed".into(), json!(self.passed));
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, InlineArrays::default());
        serde::Serialize::serialize(&Value::Object(m), &mut ser).expect("JSON values always serialize");
        buf.push(b'\n');
        String::from_utf8(buf).expect("serde_json writes UTF-8")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for l in &self.lines {
            s.push_str(l);
            s.push('\n');
        }
        s.push_str(&format!("{}: {}\n", self.command, if self.passed { "PASS" } else { "FAIL" }));
        s
    }
}

/// Indented objects, arrays on one line: `"index": [2,1,1,0]`.
#[derive(Default)]
struct InlineArrays {
    depth: usize,
    in_array: usize,
}

impl InlineArrays {
    fn newline<W: ?Sized + io::Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(b"\n")?;
        for _ in 0..self.depth {
            w.write_all(b"  ")?;
        }
        Ok(())
    }
}

impl Formatter for InlineArrays {
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.in_array += 1;
        w.write_all(b"[")
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.in_array -= 1;
        w.write_all(b"]")
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        if self.in_array == 0 {
            self.depth += 1;
        }
        w.write_all(b"{")
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        if self.in_array == 0 {
            self.depth -= 1;
            self.newline(w)?;
        }
        w.write_all(b"}")
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if !first {
            w.write_all(b",")?;
        }
        if self.in_array == 0 {
            self.newline(w)
        } else if first {
            Ok(())
        } else {
            w.write_all(b" ")
        }
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        w.write_all(b": ")
    }
}

/// Integers become JSON numbers, other rationals strings like `"1/2"`.
pub fn scalar(s: &Scalar) -> Value {
    match s.to_i64() {
        Some(n) if s.is_integer() => json!(n),
        _ => json!(s.to_string()),
    }
}

pub fn expr(e: &RationalExpr) -> Value {
    match e.as_constant() {
        Some(c) => scalar(&c),
        None => json!(e.to_string()),
    }
}

pub fn exprs<'a>(es: impl IntoIterator<Item = &'a RationalExpr>) -> Value {
    Value::Array(es.into_iter().map(expr).collect())
}

pub fn complex(z: num_complex::Complex64) -> Value {
    json!([z.re, z.im])
}
