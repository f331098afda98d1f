use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use super::HarnessError;

/// One checked invariant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub id: String,
    pub invariant: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(id: &str, invariant: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            id: id.to_string(),
            invariant: invariant.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

/// A list of assertions that cannot be empty.
#[derive(Clone, Debug, PartialEq)]
pub struct Assertions {
    first: Assertion,
    rest: Vec<Assertion>,
}

impl Assertions {
    pub fn new(first: Assertion) -> Self {
        Self {
            first,
            rest: Vec::new(),
        }
    }

    pub fn push(&mut self, a: Assertion) {
        self.rest.push(a);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Assertion> {
        std::iter::once(&self.first).chain(&self.rest)
    }

    pub fn len(&self) -> usize {
        1 + self.rest.len()
    }

    /// Always false; present for symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn all_passed(&self) -> bool {
        self.iter().all(|a| a.passed)
    }

    pub fn into_vec(self) -> Vec<Assertion> {
        let mut v = Vec::with_capacity(1 + self.rest.len());
        v.push(self.first);
        v.extend(self.rest);
        v
    }
}

/// What a recipe hands back before the report is assembled.
#[derive(Debug)]
pub struct Outcome {
    pub assertions: Assertions,
    pub summaries: BTreeMap<String, Value>,
}

impl Outcome {
    pub fn new(assertions: Assertions) -> Self {
        Self {
            assertions,
            summaries: BTreeMap::new(),
        }
    }

    pub fn summary<T: Serialize>(&mut self, key: &str, value: T) {
        let v = serde_json::to_value(value).expect("summary serializes");
        self.summaries.insert(key.to_string(), v);
    }
}

/// Contents of `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub experiment: String,
    pub seed: u64,
    pub parallel: bool,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
    pub summaries: BTreeMap<String, Value>,
    /// Files written next to the report, relative to the run directory.
    pub files: Vec<String>,
}

impl RunReport {
    pub fn failed(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.passed)
    }
}

/// Collects output files under one directory and remembers their names.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: PathBuf) -> Result<Self, HarnessError> {
        std::fs::create_dir_all(&root).map_err(|source| HarnessError::Io {
            path: root.clone(),
            source,
        })?;
        Ok(Self {
            root,
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn open(&mut self, name: &str) -> Result<(BufWriter<File>, PathBuf), HarnessError> {
        let path = self.root.join(name);
        let f = File::create(&path).map_err(|source| HarnessError::Io {
            path: path.clone(),
            source,
        })?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok((BufWriter::new(f), path))
    }

    /// Writes `header` then one record per row; an empty `rows` gives a header-only file.
    pub fn write_csv<T: Serialize>(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[T],
    ) -> Result<(), HarnessError> {
        let (w, path) = self.open(name)?;
        let io = |e: csv::Error| HarnessError::Io {
            path: path.clone(),
            source: e.into(),
        };
        let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        wr.write_record(header).map_err(io)?;
        for r in rows {
            wr.serialize(r).map_err(io)?;
        }
        wr.flush()
            .map_err(|source| HarnessError::Io { path, source })
    }

    /// Hands a buffered writer to `f`, for types with their own CSV layout.
    pub fn write_with<F>(&mut self, name: &str, f: F) -> Result<(), HarnessError>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let (mut w, path) = self.open(name)?;
        f(&mut w)
            .and_then(|_| w.flush())
            .map_err(|source| HarnessError::Io { path, source })
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), HarnessError> {
        self.write_with(name, |w| w.write_all(text.as_bytes()))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), HarnessError> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")
        })
    }
}
