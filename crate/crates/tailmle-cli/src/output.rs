//! Machine-readable output: an ordered JSON writer and CSV helpers.
//!
//! Floats are rendered with 17 significant digits (`{:.16e}`), which
//! round-trips every f64 exactly; non-finite values become JSON `null` and
//! empty CSV cells, so NaN/inf never appear in output.

/// JSON value with insertion-ordered object keys.
pub enum Json {
    Null,
    Bool(bool),
    Int(u64),
    Float(f64),
    Str(String),
    Array(Vec<Json>),
    Object(Vec<(&'static str, Json)>),
}

/// 17-significant-digit rendering; exact round-trip for every finite f64.
pub fn float17(x: f64) -> String {
    format!("{x:.16e}")
}

fn escape_into(s: &str, out: &mut String) {
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
}

impl Json {
    pub fn float_or_null(x: f64) -> Json {
        if x.is_finite() {
            Json::Float(x)
        } else {
            Json::Null
        }
    }

    pub fn pair(values: (f64, f64)) -> Json {
        Json::Array(vec![Json::float_or_null(values.0), Json::float_or_null(values.1)])
    }

    fn render_into(&self, out: &mut String, indent: usize) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(v) => out.push_str(&v.to_string()),
            Json::Float(x) => {
                if x.is_finite() {
                    out.push_str(&float17(*x));
                } else {
                    out.push_str("null");
                }
            }
            Json::Str(s) => escape_into(s, out),
            Json::Array(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    newline_indent(out, indent + 1);
                    item.render_into(out, indent + 1);
                }
                newline_indent(out, indent);
                out.push(']');
            }
            Json::Object(fields) => {
                if fields.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push('{');
                for (i, (key, value)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    newline_indent(out, indent + 1);
                    escape_into(key, out);
                    out.push_str(": ");
                    value.render_into(out, indent + 1);
                }
                newline_indent(out, indent);
                out.push('}');
            }
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0);
        out.push('\n');
        out
    }
}

fn newline_indent(out: &mut String, indent: usize) {
    out.push('\n');
    for _ in 0..indent {
        out.push_str("  ");
    }
}

/// CSV cell for an optional float: 17-significant-digit rendering, empty
/// when absent or non-finite.
pub fn csv_float(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => float17(v),
        _ => String::new(),
    }
}

/// Quotes a CSV field if it contains separators, quotes or newlines.
pub fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
