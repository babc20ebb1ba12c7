//! JSON-lines run records and the serialized sink they are written through.

use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::{Cell, Decay, Method};

/// Bumped whenever a field changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the file JSON-lines records are appended to.
pub const METRICS_ENV: &str = "GPCA_METRICS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Xavier,
    Gpcanet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: Method,
    #[serde(flatten)]
    pub cell: Cell,
    pub lr: f64,
    #[serde(rename = "T")]
    pub t: usize,
    pub epochs: usize,
    pub patience: Option<usize>,
    pub row_normalize: bool,
    pub init: InitKind,
    #[serde(default)]
    pub decay: Decay,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema: u32,
    pub run_id: String,
    pub command: String,
    pub dataset: String,
    pub config: RunConfig,
    pub seed: u64,
    pub ok: bool,
    pub error: Option<String>,
    pub val_acc: Option<f64>,
    pub test_acc: Option<f64>,
    pub train_acc: Option<f64>,
    pub best_epoch: Option<usize>,
    pub epochs_run: Option<usize>,
    pub wall_time_s: f64,
}

impl RunRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }
}

/// Deterministic identifier of a (config, seed) pair.
pub fn run_id(cfg: &RunConfig, seed: u64) -> String {
    let c = &cfg.cell;
    let init = match cfg.init {
        InitKind::Xavier => "xavier",
        InitKind::Gpcanet => "gpcanet",
    };
    let decay = match cfg.decay {
        Decay::Decoupled => "",
        Decay::L2 => "l2",
    };
    format!(
        "{}-L{}-h{}-a{}-b{}-do{}-wd{}{}-{}-s{}",
        cfg.method, c.layers, c.hidden, c.alpha, c.beta, c.dropout, c.weight_decay, decay, init, seed
    )
}

/// One writer shared by every run; whole lines are written under a lock.
pub struct Sink {
    out: Mutex<Box<dyn Write + Send>>,
    target: String,
}

impl Sink {
    /// `$GPCA_METRICS` when set, stdout otherwise.
    pub fn from_env() -> Result<Sink> {
        match std::env::var_os(METRICS_ENV) {
            Some(p) if !p.is_empty() => Sink::append_to(Path::new(&p)),
            _ => Ok(Sink::stdout()),
        }
    }

    pub fn stdout() -> Sink {
        Sink {
            out: Mutex::new(Box::new(io::stdout())),
            target: "stdout".into(),
        }
    }

    pub fn append_to(path: &Path) -> Result<Sink> {
        let f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .with_context(|| format!("opening metrics sink {}", path.display()))?;
        Ok(Sink {
            out: Mutex::new(Box::new(f)),
            target: PathBuf::from(path).display().to_string(),
        })
    }

    /// In-memory sink, for tests.
    pub fn buffer(buf: std::sync::Arc<Mutex<Vec<u8>>>) -> Sink {
        struct Shared(std::sync::Arc<Mutex<Vec<u8>>>);
        impl Write for Shared {
            fn write(&mut self, b: &[u8]) -> io::Result<usize> {
                self.0.lock().unwrap().extend_from_slice(b);
                Ok(b.len())
            }
            fn flush(&mut self) -> io::Result<()> {
                Ok(())
            }
        }
        Sink {
            out: Mutex::new(Box::new(Shared(buf))),
            target: "buffer".into(),
        }
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn write(&self, rec: &RunRecord) -> Result<()> {
        let mut line = rec.to_line();
        line.push('\n');
        let mut out = self.out.lock().unwrap();
        out.write_all(line.as_bytes())?;
        out.flush()?;
        Ok(())
    }
}
