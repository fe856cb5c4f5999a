//! Document input: NDJSON or whole-file JSON arrays, plus partitioning into
//! batches for parallel discovery.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use crate::json::JsonValue;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("I/O error reading {source_name}: {error}")]
    Io { source_name: String, error: io::Error },
    #[error("{source_name}:{line}: {message}")]
    Parse { source_name: String, line: usize, message: String },
}

impl IngestError {
    /// Parse errors are skipped and counted; I/O errors abort the read.
    pub fn is_fatal(&self) -> bool {
        matches!(self, IngestError::Io { .. })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InputFormat {
    #[default]
    Ndjson,
    JsonArray,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    Stdin,
    Path(PathBuf),
}

impl Source {
    pub fn name(&self) -> String {
        match self {
            Source::Stdin => "<stdin>".to_owned(),
            Source::Path(p) => p.display().to_string(),
        }
    }
}

enum Pending {
    Lines(Box<dyn BufRead + Send>),
    Array(std::vec::IntoIter<JsonValue>),
    Done,
}

/// Iterator over the documents of one source, in source order.
///
/// Each item is either a document or a per-line error. Parse errors are
/// counted in [`DocumentStream::failed`] and iteration continues.
pub struct DocumentStream {
    source_name: String,
    pending: Pending,
    line: usize,
    yielded: usize,
    failed: usize,
    warnings: Vec<String>,
}

impl DocumentStream {
    pub fn from_reader<R: Read + Send + 'static>(reader: R, format: InputFormat, source_name: &str) -> DocumentStream {
        let mut stream = DocumentStream {
            source_name: source_name.to_owned(),
            pending: Pending::Done,
            line: 0,
            yielded: 0,
            failed: 0,
            warnings: Vec::new(),
        };
        let mut reader = BufReader::new(reader);
        match format {
            InputFormat::Ndjson => stream.pending = Pending::Lines(Box::new(reader)),
            InputFormat::JsonArray => {
                let mut text = String::new();
                match reader.read_to_string(&mut text) {
                    Ok(_) => stream.pending = stream.parse_array(strip_bom(&text)),
                    Err(error) => {
                        // Surfaced on the first call to next().
                        stream.pending = Pending::Lines(Box::new(FailingReader(Some(error))));
                    }
                }
            }
        }
        stream
    }

    fn parse_array(&mut self, text: &str) -> Pending {
        if text.trim().is_empty() {
            return Pending::Done;
        }
        match JsonValue::parse(text) {
            Ok((JsonValue::Arr(items), warnings)) => {
                self.warnings.extend(warnings);
                Pending::Array(items.into_iter())
            }
            Ok((other, warnings)) => {
                self.warnings.extend(warnings);
                Pending::Array(vec![other].into_iter())
            }
            Err(e) => {
                self.failed += 1;
                self.warnings.push(format!("{}: {}", self.source_name, e.message));
                Pending::Done
            }
        }
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    /// Documents yielded so far.
    pub fn yielded(&self) -> usize {
        self.yielded
    }

    /// Lines (or whole files, in array mode) that failed to parse.
    pub fn failed(&self) -> usize {
        self.failed
    }

    /// Non-fatal diagnostics such as duplicate object keys.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn take_warnings(&mut self) -> Vec<String> {
        std::mem::take(&mut self.warnings)
    }
}

impl Iterator for DocumentStream {
    type Item = Result<JsonValue, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        match &mut self.pending {
            Pending::Done => None,
            Pending::Array(items) => {
                let doc = items.next()?;
                self.yielded += 1;
                Some(Ok(doc))
            }
            Pending::Lines(reader) => {
                let mut buf = String::new();
                loop {
                    buf.clear();
                    match reader.read_line(&mut buf) {
                        Ok(0) => {
                            self.pending = Pending::Done;
                            return None;
                        }
                        Ok(_) => {
                            self.line += 1;
                            let text = if self.line == 1 { strip_bom(&buf) } else { &buf };
                            if text.trim().is_empty() {
                                continue;
                            }
                            return Some(match JsonValue::parse(text) {
                                Ok((doc, warnings)) => {
                                    let line = self.line;
                                    let name = &self.source_name;
                                    self.warnings.extend(warnings.into_iter().map(|w| format!("{name}:{line}: {w}")));
                                    self.yielded += 1;
                                    Ok(doc)
                                }
                                Err(e) => {
                                    self.failed += 1;
                                    Err(IngestError::Parse {
                                        source_name: self.source_name.clone(),
                                        line: self.line,
                                        message: e.message,
                                    })
                                }
                            });
                        }
                        Err(error) => {
                            self.pending = Pending::Done;
                            return Some(Err(IngestError::Io { source_name: self.source_name.clone(), error }));
                        }
                    }
                }
            }
        }
    }
}

struct FailingReader(Option<io::Error>);

impl Read for FailingReader {
    fn read(&mut self, _: &mut [u8]) -> io::Result<usize> {
        Err(self.0.take().unwrap_or_else(|| io::Error::other("read failed")))
    }
}

impl BufRead for FailingReader {
    fn fill_buf(&mut self) -> io::Result<&[u8]> {
        Err(self.0.take().unwrap_or_else(|| io::Error::other("read failed")))
    }

    fn consume(&mut self, _: usize) {}
}

fn strip_bom(text: &str) -> &str {
    text.strip_prefix('\u{feff}').unwrap_or(text)
}

/// Opens a source for reading.
pub fn read_documents(source: &Source, format: InputFormat) -> Result<DocumentStream, IngestError> {
    match source {
        Source::Stdin => Ok(DocumentStream::from_reader(io::stdin(), format, "<stdin>")),
        Source::Path(path) => open_path(path, format),
    }
}

fn open_path(path: &Path, format: InputFormat) -> Result<DocumentStream, IngestError> {
    let file = File::open(path).map_err(|error| IngestError::Io { source_name: path.display().to_string(), error })?;
    Ok(DocumentStream::from_reader(file, format, &path.display().to_string()))
}

/// Splits documents into `workers` contiguous batches whose sizes differ by
/// at most one (larger batches first). `workers` below 1 is treated as 1.
pub fn partition<T>(docs: Vec<T>, workers: usize) -> Vec<Vec<T>> {
    let workers = workers.max(1);
    let base = docs.len() / workers;
    let extra = docs.len() % workers;
    let mut batches = Vec::with_capacity(workers);
    let mut iter = docs.into_iter();
    for i in 0..workers {
        let size = base + usize::from(i < extra);
        batches.push(iter.by_ref().take(size).collect());
    }
    batches
}

/// Round-robin partitioning for streams of unknown length.
pub fn partition_round_robin<T, I: IntoIterator<Item = T>>(docs: I, workers: usize) -> Vec<Vec<T>> {
    let workers = workers.max(1);
    let mut batches: Vec<Vec<T>> = (0..workers).map(|_| Vec::new()).collect();
    for (i, doc) in docs.into_iter().enumerate() {
        batches[i % workers].push(doc);
    }
    batches
}
