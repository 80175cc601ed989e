use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;

pub const CURSOR_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputMark {
    pub path: PathBuf,
    pub bytes: u64,
}

/// Progress checkpoint: everything before `next_ordinal` is durable in the
/// outputs, whose committed lengths are recorded alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cursor {
    pub version: u32,
    pub input: PathBuf,
    pub next_ordinal: u64,
    pub outputs: Vec<OutputMark>,
    pub summary: serde_json::Value,
}

impl Cursor {
    pub fn load(path: &Path) -> Result<Option<Self>, PipelineError> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(PipelineError::io(path, e)),
        };
        let cursor: Cursor = serde_json::from_str(&text)
            .map_err(|e| PipelineError::Cursor(format!("{}: {e}", path.display())))?;
        if cursor.version != CURSOR_VERSION {
            return Err(PipelineError::Cursor(format!(
                "unsupported cursor version {}",
                cursor.version
            )));
        }
        Ok(Some(cursor))
    }

    /// Writes via a temporary file and rename so a crash never leaves a
    /// partial cursor behind.
    pub fn store(&self, path: &Path) -> Result<(), PipelineError> {
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        let body = serde_json::to_vec_pretty(self).expect("cursor serializes");
        let mut file = File::create(&tmp).map_err(|e| PipelineError::io(&tmp, e))?;
        file.write_all(&body)
            .and_then(|()| file.sync_all())
            .map_err(|e| PipelineError::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| PipelineError::io(path, e))
    }
}

/// Append-only JSONL outputs that can be rolled back to a checkpoint.
pub struct Outputs {
    files: Vec<(PathBuf, BufWriter<File>)>,
}

impl Outputs {
    /// Opens every path; with `marks`, files are truncated to the marked
    /// lengths and appended to, otherwise they start empty.
    pub fn open(paths: &[PathBuf], marks: Option<&[OutputMark]>) -> Result<Self, PipelineError> {
        let mut files = Vec::with_capacity(paths.len());
        for path in paths {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
            }
            let mark = marks.and_then(|m| m.iter().find(|m| &m.path == path));
            let file = match (marks, mark) {
                (Some(_), Some(mark)) => {
                    let mut f = OpenOptions::new()
                        .write(true)
                        .create(true)
                        .truncate(false)
                        .open(path)
                        .map_err(|e| PipelineError::io(path, e))?;
                    let len = f.metadata().map_err(|e| PipelineError::io(path, e))?.len();
                    if len < mark.bytes {
                        return Err(PipelineError::Cursor(format!(
                            "{} is shorter than its checkpoint ({len} < {})",
                            path.display(),
                            mark.bytes
                        )));
                    }
                    f.set_len(mark.bytes)
                        .and_then(|()| f.seek(SeekFrom::End(0)).map(drop))
                        .map_err(|e| PipelineError::io(path, e))?;
                    f
                }
                (Some(_), None) => {
                    return Err(PipelineError::Cursor(format!(
                        "cursor has no checkpoint for {}",
                        path.display()
                    )))
                }
                (None, _) => File::create(path).map_err(|e| PipelineError::io(path, e))?,
            };
            files.push((path.clone(), BufWriter::with_capacity(1 << 16, file)));
        }
        Ok(Self { files })
    }

    pub fn write_json<T: Serialize>(
        &mut self,
        index: usize,
        value: &T,
    ) -> Result<(), PipelineError> {
        let (path, writer) = &mut self.files[index];
        serde_json::to_writer(&mut *writer, value)
            .map_err(std::io::Error::from)
            .and_then(|()| writer.write_all(b"\n"))
            .map_err(|e| PipelineError::io(path, e))
    }

    /// Flushes everything and returns the committed lengths.
    pub fn commit(&mut self) -> Result<Vec<OutputMark>, PipelineError> {
        self.files
            .iter_mut()
            .map(|(path, writer)| {
                writer.flush().map_err(|e| PipelineError::io(path, e))?;
                let bytes = writer
                    .get_mut()
                    .stream_position()
                    .map_err(|e| PipelineError::io(path, e))?;
                Ok(OutputMark {
                    path: path.clone(),
                    bytes,
                })
            })
            .collect()
    }
}
