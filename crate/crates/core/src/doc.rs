//! Writer for the TOML document family shared by model files, tensor files
//! and reports. Output layout is fixed (see `docs/FORMATS.md`) so equal
//! values always serialize to identical bytes.

use std::fmt::Write as _;

/// Shortest decimal that reparses to the same `f64` (Rust's `{:?}` form),
/// which is always a valid TOML float for finite input.
pub(crate) fn fmt_f64(v: f64) -> String {
    debug_assert!(v.is_finite());
    format!("{v:?}")
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 || c as u32 == 0x7f => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn key(k: &str) -> String {
    let bare = !k.is_empty()
        && k
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    if bare {
        k.to_string()
    } else {
        quote(k)
    }
}

#[derive(Debug, Default)]
pub(crate) struct DocWriter {
    buf: String,
}

impl DocWriter {
    pub fn new() -> Self {
        DocWriter::default()
    }

    pub fn str(&mut self, k: &str, v: &str) -> &mut Self {
        let _ = writeln!(self.buf, "{} = {}", key(k), quote(v));
        self
    }

    pub fn int(&mut self, k: &str, v: i64) -> &mut Self {
        let _ = writeln!(self.buf, "{} = {v}", key(k));
        self
    }

    pub fn uint(&mut self, k: &str, v: usize) -> &mut Self {
        let _ = writeln!(self.buf, "{} = {v}", key(k));
        self
    }

    pub fn bool(&mut self, k: &str, v: bool) -> &mut Self {
        let _ = writeln!(self.buf, "{} = {v}", key(k));
        self
    }

    pub fn float(&mut self, k: &str, v: f64) -> &mut Self {
        let _ = writeln!(self.buf, "{} = {}", key(k), fmt_f64(v));
        self
    }

    pub fn floats(&mut self, k: &str, vs: &[f64]) -> &mut Self {
        let items: Vec<String> = vs.iter().map(|&v| fmt_f64(v)).collect();
        let _ = writeln!(self.buf, "{} = [{}]", key(k), items.join(", "));
        self
    }

    pub fn uints(&mut self, k: &str, vs: &[usize]) -> &mut Self {
        let items: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(self.buf, "{} = [{}]", key(k), items.join(", "));
        self
    }

    pub fn strs(&mut self, k: &str, vs: &[String]) -> &mut Self {
        let items: Vec<String> = vs.iter().map(|v| quote(v)).collect();
        let _ = writeln!(self.buf, "{} = [{}]", key(k), items.join(", "));
        self
    }

    pub fn table(&mut self, name: &str) -> &mut Self {
        let _ = writeln!(self.buf, "\n[{}]", key(name));
        self
    }

    pub fn array_table(&mut self, name: &str) -> &mut Self {
        let _ = writeln!(self.buf, "\n[[{}]]", key(name));
        self
    }

    pub fn finish(&mut self) -> String {
        std::mem::take(&mut self.buf)
    }
}
