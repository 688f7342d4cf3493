//! Durable append-only record log backing service state.
//!
//! Each record is a u32 big-endian length followed by the record bytes. A
//! file-backed log syncs after every append, so state that was acknowledged
//! survives a crash; replaying the log rebuilds in-memory state, which is
//! how serial counters stay unique across restarts.

use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Mutex;

/// Record sink + source. Appends must be atomic with respect to each other.
pub trait RecordLog: Send + Sync {
    fn append(&self, record: &[u8]) -> io::Result<()>;
    fn read_all(&self) -> io::Result<Vec<Vec<u8>>>;
}

/// Volatile log for tests and in-process simulations.
#[derive(Default)]
pub struct MemLog {
    records: Mutex<Vec<Vec<u8>>>,
}

impl MemLog {
    pub fn new() -> Self {
        MemLog::default()
    }
}

impl RecordLog for MemLog {
    fn append(&self, record: &[u8]) -> io::Result<()> {
        self.records.lock().unwrap_or_else(|e| e.into_inner()).push(record.to_vec());
        Ok(())
    }

    fn read_all(&self) -> io::Result<Vec<Vec<u8>>> {
        Ok(self.records.lock().unwrap_or_else(|e| e.into_inner()).clone())
    }
}

/// File-backed log with write-ahead durability (flush + fsync per append).
pub struct FileLog {
    writer: Mutex<BufWriter<File>>,
    path: std::path::PathBuf,
}

impl FileLog {
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(FileLog { writer: Mutex::new(BufWriter::new(file)), path })
    }
}

impl RecordLog for FileLog {
    fn append(&self, record: &[u8]) -> io::Result<()> {
        let len = u32::try_from(record.len())
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "record too large"))?;
        let mut writer = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        writer.write_all(&len.to_be_bytes())?;
        writer.write_all(record)?;
        writer.flush()?;
        writer.get_ref().sync_data()
    }

    fn read_all(&self) -> io::Result<Vec<Vec<u8>>> {
        let mut bytes = Vec::new();
        File::open(&self.path)?.read_to_end(&mut bytes)?;
        let mut records = Vec::new();
        let mut pos = 0;
        while pos + 4 <= bytes.len() {
            let len = u32::from_be_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
            pos += 4;
            if pos + len > bytes.len() {
                // Torn tail from an interrupted append: everything before it
                // was synced and is kept.
                break;
            }
            records.push(bytes[pos..pos + len].to_vec());
            pos += len;
        }
        Ok(records)
    }
}
