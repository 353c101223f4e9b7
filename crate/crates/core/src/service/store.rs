//! Flat-file persistence for uploaded controllers and experiment results.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::builder::BuildConfig;
use crate::error::{Error, Result};
use crate::ingest::{
    determinization_warning, metadata_objective, parse_controller_csv, parse_domain_knowledge,
    parse_metadata, parse_strategy_json,
};
use crate::model::{Controller, TreeStats};
use crate::simulate::Transitions;

/// Names under which the parts of an upload are stored.
pub const CSV_FILE: &str = "controller.csv";
pub const STRATEGY_FILE: &str = "strategy.json";
pub const METADATA_FILE: &str = "metadata.json";
pub const DK_FILE: &str = "dk.txt";
pub const TRANSITIONS_FILE: &str = "transitions.json";

const PARTS: [&str; 5] = [
    CSV_FILE,
    STRATEGY_FILE,
    METADATA_FILE,
    DK_FILE,
    TRANSITIONS_FILE,
];

pub fn content_hash(parts: &[(&str, &str)]) -> String {
    let mut h = Sha256::new();
    for (name, text) in parts {
        h.update(name.as_bytes());
        h.update([0]);
        h.update((text.len() as u64).to_le_bytes());
        h.update(text.as_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

/// A parsed upload.
#[derive(Debug)]
pub struct StoredController {
    pub id: String,
    pub controller: Controller,
    pub objective: Option<String>,
    /// Domain-knowledge template lines, comments and blanks removed.
    pub templates: Vec<String>,
    pub transitions: Option<Transitions>,
}

impl StoredController {
    /// Parses the upload parts keyed by their stored file names.
    pub fn parse(id: String, files: &HashMap<String, String>) -> Result<Self> {
        let (meta, objective) = match files.get(METADATA_FILE) {
            Some(text) => (Some(parse_metadata(text)?), metadata_objective(text)?),
            None => (None, None),
        };
        let controller = match (files.get(CSV_FILE), files.get(STRATEGY_FILE)) {
            (Some(csv), None) => parse_controller_csv(csv, meta.as_deref())?,
            (None, Some(json)) => parse_strategy_json(json, meta.as_deref())?,
            _ => {
                return Err(Error::InvalidConfig(
                    "upload exactly one of `csv` and `strategy`".into(),
                ))
            }
        };
        let mut templates = Vec::new();
        if let Some(dk) = files.get(DK_FILE) {
            parse_domain_knowledge(dk)?;
            templates = dk
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string)
                .collect();
        }
        let transitions = files
            .get(TRANSITIONS_FILE)
            .map(|t| Transitions::parse(t, controller.variables()))
            .transpose()?;
        Ok(StoredController {
            id,
            controller,
            objective,
            templates,
            transitions,
        })
    }

    /// The request config with the uploaded templates prepended.
    pub fn effective_config(&self, config: &BuildConfig) -> BuildConfig {
        let mut config = config.clone();
        if !self.templates.is_empty() {
            let mut templates = self.templates.clone();
            templates.append(&mut config.templates);
            config.templates = templates;
        }
        config
    }

    pub fn warnings(&self, config: &BuildConfig) -> Vec<String> {
        determinization_warning(self.objective.as_deref(), config.determinizer)
            .into_iter()
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Job {
    Build,
    Retrain { source: String, node_id: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: String,
    pub detail: String,
}

impl From<&Error> for ErrorBody {
    fn from(err: &Error) -> Self {
        ErrorBody {
            kind: err.kind().to_string(),
            detail: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment_id: String,
    pub controller_id: String,
    pub job: Job,
    pub config: BuildConfig,
    pub fingerprint: String,
    pub status: Status,
    #[serde(default)]
    pub stats: Option<TreeStats>,
    #[serde(default)]
    pub exact: Option<bool>,
    #[serde(default)]
    pub time_ms: Option<f64>,
    #[serde(default)]
    pub error: Option<ErrorBody>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// On-disk layout: `controllers/<id>/<part>` and
/// `experiments/<id>.json` plus `experiments/<id>.tree.json`.
#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    controllers: Mutex<HashMap<String, Arc<StoredController>>>,
}

impl Store {
    pub fn open(root: &Path) -> Result<Self> {
        fs::create_dir_all(root.join("controllers"))?;
        fs::create_dir_all(root.join("experiments"))?;
        Ok(Store {
            root: root.to_path_buf(),
            controllers: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Parses and persists an upload; returns its content-hash id.
    pub fn put_controller(&self, files: HashMap<String, String>) -> Result<Arc<StoredController>> {
        let mut parts: Vec<(&str, &str)> = files
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect();
        parts.sort();
        let id = content_hash(&parts);
        let stored = Arc::new(StoredController::parse(id.clone(), &files)?);
        let dir = self.root.join("controllers").join(&id);
        fs::create_dir_all(&dir)?;
        for (name, text) in &files {
            fs::write(dir.join(name), text)?;
        }
        self.controllers
            .lock()
            .expect("store lock")
            .insert(id, stored.clone());
        Ok(stored)
    }

    pub fn controller(&self, id: &str) -> Result<Option<Arc<StoredController>>> {
        if let Some(c) = self.controllers.lock().expect("store lock").get(id) {
            return Ok(Some(c.clone()));
        }
        if !is_id(id) {
            return Ok(None);
        }
        let dir = self.root.join("controllers").join(id);
        if !dir.is_dir() {
            return Ok(None);
        }
        let mut files = HashMap::new();
        for name in PARTS {
            let path = dir.join(name);
            if path.exists() {
                files.insert(name.to_string(), fs::read_to_string(path)?);
            }
        }
        let stored = Arc::new(StoredController::parse(id.to_string(), &files)?);
        self.controllers
            .lock()
            .expect("store lock")
            .insert(id.to_string(), stored.clone());
        Ok(Some(stored))
    }

    fn experiment_path(&self, id: &str, suffix: &str) -> PathBuf {
        self.root.join("experiments").join(format!("{id}{suffix}"))
    }

    pub fn save_experiment(&self, record: &ExperimentRecord) -> Result<()> {
        let path = self.experiment_path(&record.experiment_id, ".json");
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(record)?)?;
        fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn save_tree(&self, id: &str, json: &str) -> Result<()> {
        fs::write(self.experiment_path(id, ".tree.json"), json)?;
        Ok(())
    }

    pub fn load_tree(&self, id: &str) -> Result<Option<String>> {
        let path = self.experiment_path(id, ".tree.json");
        if is_id(id) && path.exists() {
            Ok(Some(fs::read_to_string(path)?))
        } else {
            Ok(None)
        }
    }

    pub fn load_experiments(&self) -> Result<Vec<ExperimentRecord>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(self.root.join("experiments"))? {
            let path = entry?.path();
            let name = path
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or_default();
            if name.ends_with(".json") && !name.ends_with(".tree.json") {
                out.push(serde_json::from_slice(&fs::read(&path)?)?);
            }
        }
        out.sort_by(|a: &ExperimentRecord, b| a.experiment_id.cmp(&b.experiment_id));
        Ok(out)
    }
}

fn is_id(id: &str) -> bool {
    !id.is_empty() && id.bytes().all(|b| b.is_ascii_hexdigit())
}
