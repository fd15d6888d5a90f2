//! Artifact writing: 17-significant-digit floats, a hand-rolled JSON
//! emitter so the digit policy holds in JSON too, and the summary file.

use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::Path;

/// 17 significant digits; round-trips f64 exactly.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{:.16e}", x)
    } else {
        "null".to_string()
    }
}

/// One named check in the summary; checks whose name starts with
/// "flagged:" are informational and never affect the exit status.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            pass,
            value,
            tolerance,
        }
    }

    pub fn flagged(name: &str, pass: bool, value: f64, tolerance: f64) -> Self {
        Check::new(format!("flagged:{name}"), pass, value, tolerance)
    }

    pub fn is_flagged(&self) -> bool {
        self.name.starts_with("flagged:")
    }
}

pub fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Minimal JSON value tree with the float policy baked in.
#[derive(Debug, Clone)]
pub enum Json {
    Num(f64),
    Int(i64),
    Bool(bool),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(String, Json)>),
}

impl Json {
    pub fn render(&self, out: &mut String) {
        match self {
            Json::Num(x) => out.push_str(&fmt17(*x)),
            Json::Int(i) => out.push_str(&i.to_string()),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Str(s) => {
                out.push('"');
                out.push_str(&escape(s));
                out.push('"');
            }
            Json::Arr(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.render(out);
                }
                out.push(']');
            }
            Json::Obj(fields) => {
                out.push('{');
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('"');
                    out.push_str(&escape(k));
                    out.push_str("\":");
                    v.render(out);
                }
                out.push('}');
            }
        }
    }

    pub fn to_string_rendered(&self) -> String {
        let mut s = String::new();
        self.render(&mut s);
        s.push('\n');
        s
    }
}

pub fn config_hash(raw_config: &str, seed: u64, epsilons: Option<&[f64]>) -> String {
    let mut hasher = Sha256::new();
    hasher.update(raw_config.as_bytes());
    hasher.update(seed.to_le_bytes());
    if let Some(eps) = epsilons {
        for e in eps {
            hasher.update(e.to_le_bytes());
        }
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_summary(
    out_dir: &Path,
    config_hash: &str,
    checks: &[Check],
) -> std::io::Result<()> {
    let checks_json = Json::Arr(
        checks
            .iter()
            .map(|c| {
                Json::Obj(vec![
                    ("name".into(), Json::Str(c.name.clone())),
                    ("pass".into(), Json::Bool(c.pass)),
                    ("value".into(), Json::Num(c.value)),
                    ("tolerance".into(), Json::Num(c.tolerance)),
                ])
            })
            .collect(),
    );
    let summary = Json::Obj(vec![
        ("version".into(), Json::Str(env!("CARGO_PKG_VERSION").into())),
        ("config_hash".into(), Json::Str(config_hash.into())),
        ("checks".into(), checks_json),
    ]);
    write_text(out_dir, "summary.json", &summary.to_string_rendered())
}

pub fn write_text(out_dir: &Path, name: &str, text: &str) -> std::io::Result<()> {
    fs::create_dir_all(out_dir)?;
    let mut f = fs::File::create(out_dir.join(name))?;
    f.write_all(text.as_bytes())
}

/// CSV with all floats at 17 significant digits.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            text: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|v| fmt17(*v)).collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn row_mixed(&mut self, prefix: &[String], values: &[f64]) {
        let mut cells = prefix.to_vec();
        cells.extend(values.iter().map(|v| fmt17(*v)));
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}
