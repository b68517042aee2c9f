use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use jetblend_core::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// A mathematical verdict came out negative.
    Negative,
    /// Input validation failed.
    Invalid,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Negative => 1,
            Status::Invalid => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub status: Status,
    pub stdout: Vec<u8>,
    pub stderr: String,
    pub files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outcome {
    pub fn new(status: Status) -> Self {
        Outcome { status, stdout: Vec::new(), stderr: String::new(), files: Vec::new() }
    }

    pub fn ok_text(text: String) -> Self {
        let mut o = Outcome::new(Status::Ok);
        o.stdout = text.into_bytes();
        o
    }

    pub fn failure(status: Status, message: String) -> Self {
        let mut o = Outcome::new(status);
        o.stderr = message;
        o
    }

    pub fn json(mut self, value: &serde_json::Value) -> Self {
        self.stdout = to_json_bytes(value);
        self
    }

    pub fn file(mut self, path: PathBuf, bytes: Vec<u8>) -> Self {
        self.files.push((path, bytes));
        self
    }

    /// Writes every file atomically, then stdout and stderr.
    pub fn commit(&self) -> anyhow::Result<()> {
        for (path, bytes) in &self.files {
            write_atomic(path, bytes)?;
        }
        std::io::stdout().write_all(&self.stdout)?;
        if !self.stderr.is_empty() {
            let msg = self.stderr.trim_end();
            if self.status == Status::Ok {
                eprintln!("{msg}");
            } else {
                eprintln!("error: {msg}");
            }
        }
        Ok(())
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn to_json_bytes(value: &serde_json::Value) -> Vec<u8> {
    // serde_json's default map is ordered by key
    let mut s = serde_json::to_string_pretty(value).expect("values serialize");
    s.push('\n');
    s.into_bytes()
}

fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path.file_name().with_context(|| format!("{} has no file name", path.display()))?;
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

/// Exit status for a core error: verdict-like errors are negative, the rest
/// are validation failures.
pub fn status_of(e: &Error) -> Status {
    match e {
        Error::NotInA | Error::SearchExhausted { .. } => Status::Negative,
        _ => Status::Invalid,
    }
}

impl From<Error> for Outcome {
    fn from(e: Error) -> Self {
        Outcome::failure(status_of(&e), e.to_string())
    }
}
