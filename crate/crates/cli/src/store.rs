//! Durable design and modal-model records, one text file per id.
//!
//! Ids are the first 8 bytes of the SHA-256 of the document text, in hex.
//! A design keeps its id across `PUT` edits; its revision is the hash of the
//! current text. Files are written to a temporary name and renamed, so an
//! interrupted write never leaves a partial record.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use acouforge_core::design::{from_document, to_document};
use acouforge_core::modal::{ModalModel, ModelDocument};
use acouforge_core::FilterDesign;
use anyhow::{bail, Context};
use sha2::{Digest, Sha256};

pub fn content_id(text: &str) -> String {
    Sha256::digest(text.as_bytes())[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn is_id(s: &str) -> bool {
    s.len() == 16
        && s.bytes()
            .all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase())
}

#[derive(Debug, Clone)]
pub struct StoredDesign {
    pub id: String,
    pub design: FilterDesign,
    pub text: String,
    pub revision: String,
}

pub struct Store {
    root: PathBuf,
    designs: RwLock<BTreeMap<String, StoredDesign>>,
    models: RwLock<BTreeMap<String, ModalModel>>,
    writer: Mutex<()>,
}

const DESIGN_EXT: &str = "design";
const MODEL_EXT: &str = "model";

impl Store {
    /// Opens (creating if needed) the store at `root` and loads every
    /// readable record. Unreadable records are skipped with a warning.
    pub fn open(root: impl Into<PathBuf>) -> anyhow::Result<Self> {
        let root = root.into();
        for sub in ["designs", "models"] {
            let dir = root.join(sub);
            fs::create_dir_all(&dir)
                .with_context(|| format!("cannot create store directory {}", dir.display()))?;
            let probe = dir.join(".write-probe");
            fs::write(&probe, b"")
                .with_context(|| format!("store directory {} is not writable", dir.display()))?;
            fs::remove_file(&probe)?;
        }
        let mut designs = BTreeMap::new();
        for (id, text) in load_dir(&root.join("designs"), DESIGN_EXT)? {
            match from_document::<FilterDesign>(&text) {
                Ok(design) if design.validate().is_empty() => {
                    let revision = content_id(&text);
                    designs.insert(
                        id.clone(),
                        StoredDesign {
                            id,
                            design,
                            text,
                            revision,
                        },
                    );
                }
                Ok(_) => log::warn!("skipping design {id}: fails validation"),
                Err(e) => log::warn!("skipping design {id}: {e}"),
            }
        }
        let mut models = BTreeMap::new();
        for (id, text) in load_dir(&root.join("models"), MODEL_EXT)? {
            let parsed = from_document::<ModelDocument>(&text)
                .map_err(|e| e.to_string())
                .and_then(|d| ModalModel::try_from(d).map_err(|e| e.to_string()));
            match parsed {
                Ok(m) => {
                    models.insert(id, m);
                }
                Err(e) => log::warn!("skipping model {id}: {e}"),
            }
        }
        log::info!(
            "store {}: {} designs, {} models",
            root.display(),
            designs.len(),
            models.len()
        );
        Ok(Self {
            root,
            designs: RwLock::new(designs),
            models: RwLock::new(models),
            writer: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Stores a new design; identical documents share an id.
    pub fn create_design(&self, design: &FilterDesign) -> anyhow::Result<StoredDesign> {
        let text = to_document(design);
        let id = content_id(&text);
        if let Some(existing) = self.design(&id) {
            return Ok(existing);
        }
        self.write_design(&id, design, text)
    }

    /// Replaces the document behind an existing id.
    pub fn replace_design(
        &self,
        id: &str,
        design: &FilterDesign,
    ) -> anyhow::Result<Option<StoredDesign>> {
        if self.design(id).is_none() {
            return Ok(None);
        }
        self.write_design(id, design, to_document(design)).map(Some)
    }

    fn write_design(
        &self,
        id: &str,
        design: &FilterDesign,
        text: String,
    ) -> anyhow::Result<StoredDesign> {
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        write_atomic(&self.root.join("designs"), id, DESIGN_EXT, &text)?;
        let stored = StoredDesign {
            id: id.to_string(),
            design: design.clone(),
            revision: content_id(&text),
            text,
        };
        self.designs
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id.to_string(), stored.clone());
        Ok(stored)
    }

    pub fn design(&self, id: &str) -> Option<StoredDesign> {
        self.designs
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
    }

    pub fn create_model(&self, model: &ModalModel) -> anyhow::Result<String> {
        let text = to_document(&ModelDocument::from(model));
        let id = content_id(&text);
        if self.model(&id).is_some() {
            return Ok(id);
        }
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        write_atomic(&self.root.join("models"), &id, MODEL_EXT, &text)?;
        self.models
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id.clone(), model.clone());
        Ok(id)
    }

    pub fn model(&self, id: &str) -> Option<ModalModel> {
        self.models
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
    }
}

fn load_dir(dir: &Path, ext: &str) -> anyhow::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("cannot read {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some(ext) {
            continue;
        }
        let Some(id) = path
            .file_stem()
            .and_then(|s| s.to_str())
            .filter(|s| is_id(s))
        else {
            log::warn!("skipping {}: not an id-named record", path.display());
            continue;
        };
        match fs::read_to_string(&path) {
            Ok(text) => out.push((id.to_string(), text)),
            Err(e) => log::warn!("skipping {}: {e}", path.display()),
        }
    }
    out.sort();
    Ok(out)
}

fn write_atomic(dir: &Path, id: &str, ext: &str, text: &str) -> anyhow::Result<()> {
    if !is_id(id) {
        bail!("invalid record id {id}");
    }
    let tmp = dir.join(format!(".{id}.{ext}.tmp"));
    let mut f =
        fs::File::create(&tmp).with_context(|| format!("cannot write {}", tmp.display()))?;
    f.write_all(text.as_bytes())?;
    f.sync_all()?;
    fs::rename(&tmp, dir.join(format!("{id}.{ext}")))?;
    Ok(())
}
