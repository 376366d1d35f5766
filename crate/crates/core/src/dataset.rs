//! On-disk dataset records and the manifest.
//!
//! ```text
//! root/manifest.jsonl
//! root/<id>/first_frame.png
//! root/<id>/frames/frame_%04d.png
//! root/<id>/control/control.fpct     (optional)
//! root/<id>/states.jsonl
//! root/<id>/prompt.txt
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::CameraModel;
use crate::encode::{encode_prompt, read_fpct, write_fpct, BlobParams, ControlTensor, EncodeError};
use crate::image::RgbImage;
use crate::pipeline::ObjectState;
use crate::scene::{contains_wind_keyword, AblationConfig, PlanEntry, Scenario, TextPrompt};
use crate::types::{ForcePrompt, VideoDims};

pub const SCHEMA_VERSION: u32 = 1;
pub const GENERATOR_VERSION: &str = concat!("forceforge ", env!("CARGO_PKG_VERSION"));
pub const MANIFEST: &str = "manifest.jsonl";
pub const CONTROL_FILE: &str = "control.fpct";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Manifest {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("record {id}: {reason}")]
    Invalid { id: String, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

/// Paths relative to the dataset root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordPaths {
    pub first_frame: String,
    pub frames: String,
    pub states: String,
    pub prompt: String,
    #[serde(default)]
    pub control: Option<String>,
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub schema_version: u32,
    pub id: String,
    pub scenario: Scenario,
    pub record_index: u64,
    pub master_seed: u64,
    pub seed: u64,
    pub force: ForcePrompt,
    pub camera: CameraModel,
    pub prompt: TextPrompt,
    pub paths: RecordPaths,
    pub dims: VideoDims,
    pub blob: BlobParams,
    pub ablation: AblationConfig,
    pub generator_version: String,
}

impl VideoRecord {
    pub fn id_for(scenario: Scenario, record_index: u64) -> String {
        format!("{}_{record_index:06}", scenario.name())
    }

    pub fn from_plan(entry: &PlanEntry, master_seed: u64, camera: CameraModel, blob: BlobParams, materialize_control: bool) -> Self {
        let id = Self::id_for(entry.scenario(), entry.record_index);
        let paths = RecordPaths {
            first_frame: format!("{id}/first_frame.png"),
            frames: format!("{id}/frames"),
            states: format!("{id}/states.jsonl"),
            prompt: format!("{id}/prompt.txt"),
            control: materialize_control.then(|| format!("{id}/control")),
        };
        Self {
            schema_version: SCHEMA_VERSION,
            id,
            scenario: entry.scenario(),
            record_index: entry.record_index,
            master_seed,
            seed: entry.seed,
            force: entry.force,
            camera,
            prompt: entry.prompt.clone(),
            paths,
            dims: entry.dims,
            blob,
            ablation: entry.ablation,
            generator_version: GENERATOR_VERSION.to_string(),
        }
    }

    /// Regenerates the control tensor from the stored parameters.
    pub fn control_tensor(&self) -> Result<ControlTensor, EncodeError> {
        encode_prompt(&self.force, &self.dims, &self.blob)
    }

    pub fn frame_name(index: usize) -> String {
        format!("frame_{index:04}.png")
    }

    pub fn manifest_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }
}

/// Everything stored next to a manifest line.
#[derive(Debug, Clone, Copy)]
pub struct RecordContent<'a> {
    pub frames: &'a [RgbImage],
    pub states: &'a [ObjectState],
    pub control: Option<&'a ControlTensor>,
}

fn write_tree(record: &VideoRecord, content: &RecordContent, dir: &Path) -> Result<(), DatasetError> {
    if content.frames.len() != record.dims.frames() as usize {
        return Err(DatasetError::Invalid {
            id: record.id.clone(),
            reason: format!("{} frames for a {}-frame clip", content.frames.len(), record.dims.frames()),
        });
    }
    let frames = dir.join("frames");
    fs::create_dir_all(&frames).map_err(io_err(&frames))?;
    for (i, f) in content.frames.iter().enumerate() {
        let p = frames.join(VideoRecord::frame_name(i));
        f.save_png(&p).map_err(io_err(&p))?;
    }
    let first = dir.join("first_frame.png");
    content.frames[0].save_png(&first).map_err(io_err(&first))?;

    let states = dir.join("states.jsonl");
    let mut buf = Vec::new();
    for s in content.states {
        serde_json::to_writer(&mut buf, s).expect("states always serialize");
        buf.push(b'\n');
    }
    fs::write(&states, buf).map_err(io_err(&states))?;

    let prompt = dir.join("prompt.txt");
    fs::write(&prompt, format!("{}\n", record.prompt.text)).map_err(io_err(&prompt))?;

    if record.paths.control.is_some() {
        let control = dir.join("control");
        fs::create_dir_all(&control).map_err(io_err(&control))?;
        let tensor = match content.control {
            Some(t) => t.clone(),
            None => record.control_tensor()?,
        };
        write_fpct(&tensor, &control.join(CONTROL_FILE))?;
    }
    Ok(())
}

/// Writes `root/<id>/` atomically: the tree is built in a scratch
/// directory, then renamed over any previous version. Returns the manifest
/// line but does not touch the manifest.
pub fn write_record_files(record: &VideoRecord, content: &RecordContent, root: &Path) -> Result<String, DatasetError> {
    fs::create_dir_all(root).map_err(io_err(root))?;
    let scratch = root.join(format!(".{}.partial", record.id));
    if scratch.exists() {
        fs::remove_dir_all(&scratch).map_err(io_err(&scratch))?;
    }
    if let Err(e) = write_tree(record, content, &scratch) {
        let _ = fs::remove_dir_all(&scratch);
        return Err(e);
    }
    let dest = root.join(&record.id);
    if dest.exists() {
        fs::remove_dir_all(&dest).map_err(io_err(&dest))?;
    }
    fs::rename(&scratch, &dest).map_err(io_err(&dest))?;
    Ok(record.manifest_line())
}

/// Adds manifest lines, replacing existing lines with the same id. Lines
/// stay sorted by id; the file is swapped in atomically.
pub fn upsert_manifest(root: &Path, lines: &[String]) -> Result<(), DatasetError> {
    let path = root.join(MANIFEST);
    let mut all: Vec<(String, String)> = Vec::new();
    if path.exists() {
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            all.push((line_id(line).map_err(|source| DatasetError::Manifest { path: path.clone(), line: i + 1, source })?, line.to_string()));
        }
    }
    for line in lines {
        let id = line_id(line).map_err(|source| DatasetError::Manifest { path: path.clone(), line: 0, source })?;
        all.retain(|(existing, _)| *existing != id);
        all.push((id, line.clone()));
    }
    all.sort_by(|a, b| a.0.cmp(&b.0));
    let scratch = root.join(format!(".{MANIFEST}.partial"));
    let mut f = fs::File::create(&scratch).map_err(io_err(&scratch))?;
    for (_, line) in &all {
        writeln!(f, "{line}").map_err(io_err(&scratch))?;
    }
    f.sync_all().map_err(io_err(&scratch))?;
    fs::rename(&scratch, &path).map_err(io_err(&path))
}

fn line_id(line: &str) -> Result<String, serde_json::Error> {
    #[derive(Deserialize)]
    struct Id {
        id: String,
    }
    serde_json::from_str::<Id>(line).map(|i| i.id)
}

/// Writes one record and registers it in the manifest.
pub fn write_record(record: &VideoRecord, content: &RecordContent, root: &Path) -> Result<String, DatasetError> {
    let line = write_record_files(record, content, root)?;
    upsert_manifest(root, std::slice::from_ref(&line))?;
    Ok(line)
}

pub fn read_manifest(root: &Path) -> Result<Vec<VideoRecord>, DatasetError> {
    let path = root.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|source| DatasetError::Manifest { path: path.clone(), line: i + 1, source }))
        .collect()
}

pub fn read_states(path: &Path) -> Result<Vec<ObjectState>, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|source| DatasetError::Manifest { path: path.to_path_buf(), line: i + 1, source }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub id: Option<String>,
    pub path: Option<PathBuf>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub records_checked: usize,
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Checks every manifest record against the files on disk. Only an
/// unreadable manifest is an error; everything else becomes a finding.
pub fn validate_dataset(root: &Path) -> Result<ValidationReport, DatasetError> {
    let path = root.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let mut report = ValidationReport::default();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        match serde_json::from_str::<VideoRecord>(line) {
            Ok(record) => {
                report.records_checked += 1;
                report.findings.extend(check_record(root, &record));
            }
            Err(e) => report.findings.push(Finding {
                id: line_id(line).ok(),
                path: Some(path.clone()),
                message: format!("line {}: {e}", i + 1),
            }),
        }
    }
    Ok(report)
}

fn check_record(root: &Path, r: &VideoRecord) -> Vec<Finding> {
    let mut out = Vec::new();
    let mut find = |path: Option<PathBuf>, message: String| out.push(Finding { id: Some(r.id.clone()), path, message });

    if r.schema_version != SCHEMA_VERSION {
        find(None, format!("schema version {} (expected {SCHEMA_VERSION})", r.schema_version));
    }
    for p in [&r.paths.first_frame, &r.paths.states, &r.paths.prompt] {
        let full = root.join(p);
        if !full.is_file() {
            find(Some(full), "missing file".into());
        }
    }

    let frames_dir = root.join(&r.paths.frames);
    let expected: Vec<String> = (0..r.dims.frames() as usize).map(VideoRecord::frame_name).collect();
    for name in &expected {
        let p = frames_dir.join(name);
        if !p.is_file() {
            find(Some(p), "missing frame".into());
        }
    }
    if let Ok(entries) = fs::read_dir(&frames_dir) {
        let mut extra: Vec<PathBuf> = entries
            .filter_map(|e| e.ok())
            .filter(|e| !expected.iter().any(|n| e.file_name() == n.as_str()))
            .map(|e| e.path())
            .collect();
        extra.sort();
        for p in extra {
            find(Some(p), "unexpected file in frames".into());
        }
    }

    let first = root.join(&r.paths.first_frame);
    let frame0 = frames_dir.join(&expected[0]);
    if first.is_file() && frame0.is_file() {
        match RgbImage::load_png(&first) {
            Ok(img) if (img.width(), img.height()) != (r.dims.width(), r.dims.height()) => find(
                Some(first.clone()),
                format!("first frame is {}x{}, expected {}x{}", img.width(), img.height(), r.dims.width(), r.dims.height()),
            ),
            Ok(_) => {
                if fs::read(&first).ok() != fs::read(&frame0).ok() {
                    find(Some(first.clone()), "first frame differs from frame 0".into());
                }
            }
            Err(e) => find(Some(first.clone()), format!("unreadable: {e}")),
        }
    }

    let prompt = root.join(&r.paths.prompt);
    if let Ok(text) = fs::read_to_string(&prompt) {
        if text.trim_end_matches('\n') != r.prompt.text {
            find(Some(prompt), "prompt text differs from manifest".into());
        }
    }
    if contains_wind_keyword(&r.prompt.text) != r.prompt.contains_keywords {
        find(None, "keyword flag disagrees with prompt text".into());
    }

    if let Some(control) = &r.paths.control {
        let p = root.join(control).join(CONTROL_FILE);
        match (read_fpct(&p, r.dims.fps()), r.control_tensor()) {
            (Ok(stored), Ok(fresh)) => {
                if stored.dims() != fresh.dims() || stored.max_abs_diff(&fresh) != 0.0 {
                    find(Some(p), "control tensor does not match its parameters".into());
                }
            }
            (Err(e), _) => find(Some(p), format!("unreadable control tensor: {e}")),
            (_, Err(e)) => find(None, format!("cannot regenerate control tensor: {e}")),
        }
    }
    out
}
