//! Report files under the output directory and the pass/fail summary.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct Summary {
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn check(&mut self, name: impl AsRef<str>, passed: bool, detail: impl Into<String>) {
        let c = Check {
            name: name.as_ref().to_string(),
            passed,
            detail: detail.into(),
        };
        eprintln!("qpmsa: {} {}", if passed { "PASS" } else { "FAIL" }, c.name);
        self.checks.push(c);
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
        }
        let failed = self.failed().count();
        s.push_str(&format!("{} checks, {failed} failed\n", self.checks.len()));
        s
    }
}

/// Writes the report files. Every JSON report carries the run manifest.
pub struct Output {
    dir: PathBuf,
    manifest: Value,
    docs: BTreeMap<String, Value>,
}

impl Output {
    pub fn create(dir: PathBuf, manifest: Value) -> Result<Self, CliError> {
        fs::create_dir_all(&dir)?;
        Ok(Output {
            dir,
            manifest,
            docs: BTreeMap::new(),
        })
    }

    /// The payload last written under `name`, or an empty object.
    pub fn read_json(&self, name: &str) -> Value {
        self.docs.get(name).cloned().unwrap_or_else(|| Value::Object(Map::new()))
    }

    pub fn write_json(&mut self, name: &str, payload: &Value) -> Result<(), CliError> {
        let mut doc = Map::new();
        doc.insert("manifest".into(), self.manifest.clone());
        match payload {
            Value::Object(m) => doc.extend(m.clone()),
            other => {
                doc.insert("data".into(), other.clone());
            }
        }
        let text = serde_json::to_string_pretty(&Value::Object(doc))?;
        fs::write(self.dir.join(name), text + "\n")?;
        self.docs.insert(name.to_string(), payload.clone());
        Ok(())
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let file = fs::File::create(self.dir.join(name))?;
        qpmsa::export::write_csv(file, rows)?;
        self.docs.insert(name.to_string(), Value::Null);
        Ok(())
    }

    /// Writes manifest.json, listing every report, and summary.txt.
    pub fn finish(self, summary: &Summary) -> Result<(), CliError> {
        let mut files: Vec<&String> = self.docs.keys().collect();
        files.sort();
        let mut manifest = self.manifest.clone();
        manifest["files"] = json!(files);
        manifest["checks"] = json!(summary.checks);
        fs::write(self.dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
        fs::write(self.dir.join("summary.txt"), summary.text())?;
        Ok(())
    }
}
