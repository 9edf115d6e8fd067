//! Session directories: a JSON manifest referencing per-tool WAV files, an
//! optional force CSV, the parameter log and the full session log.
//!
//! ```text
//! session/
//!   manifest.json
//!   raw_<tool>.wav     3 channels x, y, z (m/s²)
//!   post_<tool>.wav    1 channel, actuator drive
//!   force.csv          timestamp,fx,fy,fz (N)
//!   params.csv         parameter changes
//!   log.json           full processing log
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::csv_series::{read_force_csv, write_force_csv};
use super::wav::{read_mono_wav, read_tri_wav, read_wav, write_mono_wav, write_tri_wav};
use crate::error::{Error, Result};
use crate::session::{Marker, Session, SessionLog, ToolRecording};
use crate::signal::SignalKind;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFiles {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceFile {
    pub path: String,
    pub rate: f64,
}

/// Schema: `docs/manifest.schema.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionManifest {
    pub version: u32,
    pub rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_size: Option<usize>,
    pub channels: Vec<ChannelFiles>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force: Option<ForceFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<String>,
    #[serde(default)]
    pub markers: Vec<Marker>,
    /// Wall-clock start, when the caller supplies one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at: Option<String>,
}

impl SessionManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Self = serde_json::from_str(&text).map_err(|e| Error::schema(&path, e.to_string()))?;
        if manifest.version != MANIFEST_VERSION {
            return Err(Error::schema(
                &path,
                format!("unsupported version {}", manifest.version),
            ));
        }
        Ok(manifest)
    }

    /// Checks that every referenced file exists and agrees with the
    /// manifest's rates.
    pub fn validate(&self, dir: &Path) -> Result<()> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let exists = |rel: &str| -> Result<PathBuf> {
            let p = dir.join(rel);
            if p.is_file() {
                Ok(p)
            } else {
                Err(Error::schema(
                    &manifest_path,
                    format!("referenced file {rel} does not exist"),
                ))
            }
        };
        for ch in &self.channels {
            for rel in ch.raw.iter().chain(&ch.post) {
                let wav = read_wav(&exists(rel)?)?;
                if wav.rate as f64 != self.rate {
                    return Err(Error::schema(
                        &manifest_path,
                        format!("{rel} is {} Hz but the manifest says {} Hz", wav.rate, self.rate),
                    ));
                }
            }
        }
        if let Some(force) = &self.force {
            let imported = read_force_csv(&exists(&force.path)?)?;
            if imported.series.rate() != force.rate {
                return Err(Error::schema(
                    &manifest_path,
                    format!(
                        "{} is {} Hz but the manifest says {} Hz",
                        force.path,
                        imported.series.rate(),
                        force.rate
                    ),
                ));
            }
        }
        for rel in self.params.iter().chain(&self.log).chain(&self.events) {
            exists(rel)?;
        }
        Ok(())
    }
}

/// Extra artifacts written alongside a session.
#[derive(Debug, Clone, Default)]
pub struct SessionExtras {
    /// Ground-truth event table (CSV text).
    pub events_csv: Option<String>,
    pub started_at: Option<String>,
}

/// Writes `session` into `dir` (created if needed). Output is
/// byte-for-byte deterministic for identical input.
pub fn write_session(dir: &Path, session: &Session, extras: &SessionExtras) -> Result<SessionManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut channels = Vec::new();
    for tool in &session.tools {
        let mut files = ChannelFiles {
            id: tool.id.clone(),
            raw: None,
            post: None,
        };
        if let Some(raw) = &tool.raw {
            let name = format!("raw_{}.wav", tool.id);
            write_tri_wav(raw, &dir.join(&name))?;
            files.raw = Some(name);
        }
        if let Some(post) = &tool.post {
            let name = format!("post_{}.wav", tool.id);
            write_mono_wav(post, &dir.join(&name))?;
            files.post = Some(name);
        }
        channels.push(files);
    }
    let force = match &session.force {
        Some(f) => {
            write_force_csv(f, &dir.join("force.csv"))?;
            Some(ForceFile {
                path: "force.csv".into(),
                rate: f.rate(),
            })
        }
        None => None,
    };
    let write_text = |name: &str, text: &str| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))
    };
    write_text("params.csv", &session.log.params_csv())?;
    write_text("log.json", &serde_json::to_string_pretty(&session.log)?)?;
    let events = match &extras.events_csv {
        Some(text) => {
            write_text("events.csv", text)?;
            Some("events.csv".to_string())
        }
        None => None,
    };
    let manifest = SessionManifest {
        version: MANIFEST_VERSION,
        rate: session.rate,
        block_size: (session.log.block_size > 0).then_some(session.log.block_size),
        channels,
        force,
        params: Some("params.csv".into()),
        log: Some("log.json".into()),
        events,
        markers: session.log.markers.clone(),
        started_at: extras.started_at.clone(),
    };
    write_text(MANIFEST_FILE, &serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Loads and validates a session directory.
pub fn read_session(dir: &Path) -> Result<Session> {
    let manifest = SessionManifest::load(dir)?;
    manifest.validate(dir)?;
    let mut tools = Vec::new();
    for ch in &manifest.channels {
        tools.push(ToolRecording {
            id: ch.id.clone(),
            raw: ch
                .raw
                .as_ref()
                .map(|rel| read_tri_wav(&dir.join(rel), SignalKind::Acceleration))
                .transpose()?,
            post: ch.post.as_ref().map(|rel| read_mono_wav(&dir.join(rel))).transpose()?,
        });
    }
    let force = manifest
        .force
        .as_ref()
        .map(|f| read_force_csv(&dir.join(&f.path)).map(|imp| imp.series))
        .transpose()?;
    let mut log = match &manifest.log {
        Some(rel) => {
            let p = dir.join(rel);
            let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            serde_json::from_str::<SessionLog>(&text).map_err(|e| Error::schema(&p, e.to_string()))?
        }
        None => SessionLog::default(),
    };
    log.rate = manifest.rate;
    log.markers = manifest.markers.clone();
    Ok(Session {
        rate: manifest.rate,
        tools,
        force,
        log,
    })
}
