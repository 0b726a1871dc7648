//! File-backed persistence for the social store.
//!
//! The store file is JSON lines: an optional snapshot (entity lines) followed
//! by the events appended since. Writes are serialized behind one lock and
//! each write appends its events before returning. Compaction rewrites the
//! file as a fresh snapshot through a temporary file and an atomic rename.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use scholarlib_core::{Entity, Store};
use tracing::{info, warn};

use crate::dump::{self, Line};
use crate::error::{GatewayError, Result};

pub const DEFAULT_DB_PATH: &str = "./scholarlib.db";
const DEFAULT_COMPACT_AFTER: usize = 50_000;

struct LogFile {
    path: PathBuf,
    out: BufWriter<File>,
    events_since_snapshot: usize,
}

pub struct Db {
    state: RwLock<Store>,
    log: Mutex<Option<LogFile>>,
    compact_after: usize,
}

fn corruption(path: &Path, what: impl std::fmt::Display) -> GatewayError {
    GatewayError::StoreCorruption(format!("{}: {what}", path.display()))
}

/// Replay a store file into memory. Returns the store and the number of
/// event lines read; a torn final line (crash mid-append) is ignored.
fn load(path: &Path) -> Result<(Store, usize, bool)> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((Store::new(), 0, false)),
        Err(e) => return Err(corruption(path, e)),
    };
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let complete = text.ends_with('\n');
    let mut snapshot = Vec::new();
    let mut store: Option<Store> = None;
    let mut events = 0;
    let mut torn = false;
    for (n, line) in lines.iter().enumerate() {
        let parsed = match dump::parse_line(line) {
            Ok(p) => p,
            Err(_) if n + 1 == lines.len() && !complete => {
                warn!("ignoring torn last line of {}", path.display());
                torn = true;
                break;
            }
            Err(e) => return Err(corruption(path, format!("line {}: {e}", n + 1))),
        };
        match parsed {
            Line::Entity(e) if store.is_none() => snapshot.push(e),
            Line::Entity(_) => return Err(corruption(path, format!("line {}: entity after events", n + 1))),
            Line::Event(ev) => {
                let s = match store.as_mut() {
                    Some(s) => s,
                    None => store.insert(restore(path, std::mem::take(&mut snapshot))?),
                };
                s.apply(&ev).map_err(|e| corruption(path, format!("line {}: {e}", n + 1)))?;
                events += 1;
            }
        }
    }
    let mut store = match store {
        Some(s) => s,
        None => restore(path, snapshot)?,
    };
    store.take_journal();
    Ok((store, events, torn))
}

fn restore(path: &Path, snapshot: Vec<Entity>) -> Result<Store> {
    if snapshot.is_empty() {
        Ok(Store::new())
    } else {
        Store::from_entities(snapshot).map_err(|e| corruption(path, e))
    }
}

fn open_append(path: &Path) -> Result<BufWriter<File>> {
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map(BufWriter::new)
        .map_err(|e| corruption(path, format!("cannot open for writing: {e}")))
}

fn write_snapshot(path: &Path, store: &Store) -> std::io::Result<()> {
    let tmp = path.with_extension("db.tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(dump::encode_entities(&store.entities()).as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

impl Db {
    /// Open (or create) the store file at `path`. Refuses to start on an
    /// unreadable, unwritable or inconsistent file.
    pub fn open(path: impl AsRef<Path>) -> Result<Db> {
        let path = path.as_ref().to_path_buf();
        let (store, events, torn) = load(&path)?;
        if torn {
            write_snapshot(&path, &store).map_err(|e| corruption(&path, e))?;
        }
        let out = open_append(&path)?;
        info!(path = %path.display(), users = store.users().count(), "store opened");
        Ok(Db {
            state: RwLock::new(store),
            log: Mutex::new(Some(LogFile { path, out, events_since_snapshot: if torn { 0 } else { events } })),
            compact_after: DEFAULT_COMPACT_AFTER,
        })
    }

    /// A store that is never written to disk.
    pub fn in_memory() -> Db {
        Db { state: RwLock::new(Store::new()), log: Mutex::new(None), compact_after: usize::MAX }
    }

    pub fn with_compaction_threshold(mut self, events: usize) -> Db {
        self.compact_after = events.max(1);
        self
    }

    pub fn read<T>(&self, f: impl FnOnce(&Store) -> T) -> T {
        f(&self.state.read().expect("store lock poisoned"))
    }

    /// Run a mutation and persist the events it recorded before returning.
    /// Domain errors leave the store untouched.
    pub fn write<T>(&self, f: impl FnOnce(&mut Store) -> scholarlib_core::Result<T>) -> Result<T> {
        let mut log = self.log.lock().expect("log lock poisoned");
        let mut state = self.state.write().expect("store lock poisoned");
        let result = f(&mut state);
        let events = state.take_journal();
        if events.is_empty() {
            return Ok(result?);
        }
        if let Some(file) = log.as_mut() {
            let appended = events
                .iter()
                .try_for_each(|e| file.out.write_all(dump::encode_event(e).as_bytes()))
                .and_then(|_| file.out.flush());
            if let Err(e) = appended {
                // memory ran ahead of the file; fall back to what is on disk
                warn!("append failed, reloading store: {e}");
                if let Ok((store, _, _)) = load(&file.path) {
                    *state = store;
                }
                return Err(e.into());
            }
            file.events_since_snapshot += events.len();
            if file.events_since_snapshot >= self.compact_after {
                Self::compact_locked(file, &state)?;
            }
        }
        Ok(result?)
    }

    fn compact_locked(file: &mut LogFile, store: &Store) -> Result<()> {
        file.out.flush()?;
        write_snapshot(&file.path, store)?;
        file.out = open_append(&file.path)?;
        file.events_since_snapshot = 0;
        Ok(())
    }

    /// Rewrite the store file as a single snapshot.
    pub fn compact(&self) -> Result<()> {
        let mut log = self.log.lock().expect("log lock poisoned");
        let state = self.state.read().expect("store lock poisoned");
        match log.as_mut() {
            Some(file) => Self::compact_locked(file, &state),
            None => Ok(()),
        }
    }

    /// Flush and compact; called on graceful shutdown.
    pub fn flush(&self) -> Result<()> {
        self.compact()
    }

    /// Canonical JSON-lines export of the whole store.
    pub fn export(&self) -> String {
        self.read(|s| dump::encode_entities(&s.entities()))
    }

    /// Replace the whole store with the contents of an export dump.
    pub fn import(&self, dump_text: &str) -> Result<usize> {
        let entities = dump::parse_dump(dump_text)?;
        let count = entities.len();
        let store = Store::from_entities(entities).map_err(|e| GatewayError::StoreCorruption(e.to_string()))?;
        let mut log = self.log.lock().expect("log lock poisoned");
        let mut state = self.state.write().expect("store lock poisoned");
        *state = store;
        if let Some(file) = log.as_mut() {
            Self::compact_locked(file, &state)?;
        }
        Ok(count)
    }

    pub fn path(&self) -> Option<PathBuf> {
        self.log.lock().expect("log lock poisoned").as_ref().map(|f| f.path.clone())
    }
}
