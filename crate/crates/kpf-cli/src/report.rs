//! Deterministic report emission: a hand-rolled JSON builder with insertion
//! order preserved and every float printed as 17 significant decimal digits,
//! so identical runs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use kpf_core::C64;

use crate::error::CliError;

/// 17 significant digits round-trip every f64 exactly and keep the text
/// deterministic across runs.
pub fn fmt_f64(v: f64) -> String {
    format!("{:.16e}", v)
}

fn escape_into(buf: &mut String, s: &str) {
    for ch in s.chars() {
        match ch {
            '"' => buf.push_str("\\\""),
            '\\' => buf.push_str("\\\\"),
            '\n' => buf.push_str("\\n"),
            '\r' => buf.push_str("\\r"),
            '\t' => buf.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                buf.push_str(&format!("\\u{:04x}", c as u32));
            }
            c => buf.push(c),
        }
    }
}

/// Flat JSON object builder. Fields appear in call order; no timestamps or
/// other run-varying content may enter a report.
pub struct JsonReport {
    buf: String,
    empty: bool,
}

impl JsonReport {
    pub fn new(command: &str) -> Self {
        let mut r = JsonReport {
            buf: String::from("{"),
            empty: true,
        };
        r.field_str("command", command);
        r
    }

    fn key(&mut self, k: &str) {
        if !self.empty {
            self.buf.push(',');
        }
        self.empty = false;
        self.buf.push('"');
        escape_into(&mut self.buf, k);
        self.buf.push_str("\":");
    }

    pub fn field_str(&mut self, k: &str, v: &str) {
        self.key(k);
        self.buf.push('"');
        escape_into(&mut self.buf, v);
        self.buf.push('"');
    }

    pub fn field_num(&mut self, k: &str, v: f64) {
        self.key(k);
        self.buf.push_str(&fmt_f64(v));
    }

    pub fn field_int(&mut self, k: &str, v: u64) {
        self.key(k);
        self.buf.push_str(&v.to_string());
    }

    pub fn field_bool(&mut self, k: &str, v: bool) {
        self.key(k);
        self.buf.push_str(if v { "true" } else { "false" });
    }

    pub fn field_opt_num(&mut self, k: &str, v: Option<f64>) {
        self.key(k);
        match v {
            Some(x) => self.buf.push_str(&fmt_f64(x)),
            None => self.buf.push_str("null"),
        }
    }

    pub fn field_complex(&mut self, k: &str, v: C64) {
        self.key(k);
        self.buf.push_str(&complex_obj(v));
    }

    pub fn field_num_list(&mut self, k: &str, vs: &[f64]) {
        self.key(k);
        self.buf.push('[');
        for (i, v) in vs.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            self.buf.push_str(&fmt_f64(*v));
        }
        self.buf.push(']');
    }

    pub fn field_complex_list(&mut self, k: &str, vs: &[C64]) {
        self.key(k);
        self.buf.push('[');
        for (i, v) in vs.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            self.buf.push_str(&complex_obj(*v));
        }
        self.buf.push(']');
    }

    /// Row-major nested array of a real matrix.
    pub fn field_matrix(&mut self, k: &str, m: &nalgebra::DMatrix<f64>) {
        self.key(k);
        self.buf.push('[');
        for i in 0..m.nrows() {
            if i > 0 {
                self.buf.push(',');
            }
            self.buf.push('[');
            for j in 0..m.ncols() {
                if j > 0 {
                    self.buf.push(',');
                }
                self.buf.push_str(&fmt_f64(m[(i, j)]));
            }
            self.buf.push(']');
        }
        self.buf.push(']');
    }

    pub fn finish(mut self) -> String {
        self.buf.push_str("}\n");
        self.buf
    }
}

fn complex_obj(v: C64) -> String {
    format!("{{\"re\":{},\"im\":{}}}", fmt_f64(v.re), fmt_f64(v.im))
}

/// Write the report to `<out>/report.json` and echo the exact bytes on
/// stdout so scripted runs can consume either.
pub fn emit(out_dir: &Path, json: String) -> Result<PathBuf, CliError> {
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::new(format!("cannot create output directory {}: {e}", out_dir.display())))?;
    let path = out_dir.join("report.json");
    fs::write(&path, &json)
        .map_err(|e| CliError::new(format!("cannot write {}: {e}", path.display())))?;
    print!("{json}");
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_significant_digits() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(-0.5), "-5.0000000000000000e-1");
        let v = 0.1f64;
        let round_trip: f64 = fmt_f64(v).parse().unwrap();
        assert_eq!(round_trip, v);
    }

    #[test]
    fn fields_keep_insertion_order() {
        let mut r = JsonReport::new("demo");
        r.field_int("n", 3);
        r.field_bool("pass", true);
        r.field_opt_num("residual", None);
        let s = r.finish();
        assert_eq!(
            s,
            "{\"command\":\"demo\",\"n\":3,\"pass\":true,\"residual\":null}\n"
        );
    }

    #[test]
    fn strings_are_escaped() {
        let mut r = JsonReport::new("demo");
        r.field_str("path", "a\"b\\c");
        let s = r.finish();
        assert!(s.contains("a\\\"b\\\\c"));
    }
}
