use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

/// Failure classes mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) | CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<semiclassical::Error> for CliError {
    fn from(e: semiclassical::Error) -> Self {
        use semiclassical::Error as E;
        match e {
            E::InvalidIndex(_)
            | E::InvalidInput(_)
            | E::UnknownName(_)
            | E::MissingValue(_)
            | E::MissingMoment(_)
            | E::DuplicateName(_)
            | E::ChartMismatch(_)
            | E::NoPairs
            | E::DegreeTooLarge(_)
            | E::SmoothnessRequired(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Parameter map read from `--config`: TOML for `.toml` files, JSON otherwise.
pub fn load_config(path: Option<&Path>) -> CliResult<Map<String, Value>> {
    let Some(path) = path else {
        return Ok(Map::new());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let value: Value = if path.extension().is_some_and(|x| x == "toml") {
        let t: toml::Table = toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::to_value(t).map_err(|e| CliError::Usage(e.to_string()))?
    } else {
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
    };
    match value {
        Value::Object(m) => Ok(m),
        _ => Err(CliError::Usage(format!("{}: expected a table of parameters", path.display()))),
    }
}

/// Overlays command-line values on the file map and deserializes the result.
pub fn resolve<T: DeserializeOwned>(mut base: Map<String, Value>, flags: Vec<(&str, Option<Value>)>) -> CliResult<T> {
    for (k, v) in flags {
        if let Some(v) = v {
            base.insert(k.to_string(), v);
        }
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn opt<T: Serialize>(v: Option<T>) -> Option<Value> {
    v.map(|x| serde_json::to_value(x).expect("flag values serialize"))
}

/// Where results go: files under `--out`, or a single JSON document on stdout.
pub struct Sink {
    pub out: Option<PathBuf>,
    pub subcommand: &'static str,
    pub seed: u64,
    pub tol: Option<f64>,
    files: Vec<String>,
}

impl Sink {
    pub fn new(out: Option<PathBuf>, subcommand: &'static str, seed: u64, tol: Option<f64>) -> CliResult<Self> {
        if let Some(dir) = &out {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        }
        Ok(Sink {
            out,
            subcommand,
            seed,
            tol,
            files: Vec::new(),
        })
    }

    /// Writes `name` under the output directory; a no-op without `--out`.
    pub fn file(&mut self, name: &str, contents: &str) -> CliResult<()> {
        if let Some(dir) = &self.out {
            let path = dir.join(name);
            fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            self.files.push(name.to_string());
        }
        Ok(())
    }

    /// Plain-text result: stdout gets the text alone, the manifest goes to
    /// `--out` when given.
    pub fn finish_text<C: Serialize>(mut self, config: &C, name: &str, text: &str) -> CliResult<()> {
        if self.out.is_some() {
            self.file(name, &format!("{text}\n"))?;
            let config = serde_json::to_value(config).expect("configs serialize");
            let manifest = self.manifest(&config, &Value::Null);
            self.file("manifest.json", &serde_json::to_string_pretty(&manifest).expect("json values serialize"))?;
        }
        emit(text);
        Ok(())
    }

    pub fn csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> CliResult<()> {
        if self.out.is_none() {
            return Ok(());
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        self.file(name, &String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    fn manifest(&self, config: &Value, tolerances: &Value) -> Value {
        json!({
            "tool": "semicl",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": self.subcommand,
            "config": config,
            "seed": self.seed,
            "tol": self.tol,
            "tolerances": tolerances,
            "parallel": cfg!(feature = "parallel"),
            "outputs": self.files,
        })
    }

    /// Emits the result and the manifest. With `--out` both land in files
    /// and stdout gets the result; otherwise stdout carries both.
    pub fn finish<C: Serialize, R: Serialize>(mut self, config: &C, tolerances: Value, result: &R) -> CliResult<()> {
        let config = serde_json::to_value(config).expect("configs serialize");
        let result = serde_json::to_value(result).expect("results serialize");
        let pretty = |v: &Value| serde_json::to_string_pretty(v).expect("json values serialize");
        if self.out.is_some() {
            self.file("result.json", &pretty(&result))?;
            let manifest = self.manifest(&config, &tolerances);
            self.file("manifest.json", &pretty(&manifest))?;
            emit(&pretty(&result));
        } else {
            let manifest = self.manifest(&config, &tolerances);
            emit(&pretty(&json!({ "result": result, "manifest": manifest })));
        }
        Ok(())
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}
