//! Direct process dispatch for validated commands.
//!
//! The child is spawned from argv with no shell interpretation anywhere.
//! Output tails are bounded, a configurable timeout kills the child on
//! expiry, and each run leaves a `run.json` record in its work directory.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::validate::ValidatedCommand;

const TAIL_BYTES: usize = 4096;

#[derive(Debug, thiserror::Error)]
pub enum ExecutionError {
    #[error("binary not found: {0}")]
    BinaryMissing(String),
    #[error("spawn failed: {0}")]
    Spawn(std::io::Error),
    #[error("workdir error: {0}")]
    Workdir(std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub exit_code: i32,
    pub timed_out: bool,
    pub stdout_tail: String,
    pub stderr_tail: String,
    pub duration_secs: f64,
    /// Files that appeared in the work directory during the run.
    pub outputs: Vec<PathBuf>,
    pub dry_run: bool,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub dry_run: bool,
    pub timeout: Duration,
    /// Binary path override per program name; otherwise PATH lookup.
    pub binaries: std::collections::BTreeMap<String, PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            dry_run: false,
            timeout: Duration::from_secs(300),
            binaries: Default::default(),
        }
    }
}

fn list_files(dir: &Path) -> std::io::Result<BTreeSet<PathBuf>> {
    let mut set = BTreeSet::new();
    for entry in std::fs::read_dir(dir)? {
        set.insert(entry?.path());
    }
    Ok(set)
}

fn tail_reader(mut source: impl Read + Send + 'static) -> std::thread::JoinHandle<String> {
    std::thread::spawn(move || {
        let mut data = Vec::new();
        let _ = source.read_to_end(&mut data);
        let start = data.len().saturating_sub(TAIL_BYTES);
        String::from_utf8_lossy(&data[start..]).into_owned()
    })
}

/// Runs a validated command inside `workdir`. Timeouts and non-zero exits
/// are results, not errors; only a missing binary or spawn failure is.
pub fn execute(
    cmd: &ValidatedCommand,
    workdir: &Path,
    options: &RunOptions,
) -> Result<ExecutionResult, ExecutionError> {
    if options.dry_run {
        return Ok(ExecutionResult {
            exit_code: 0,
            timed_out: false,
            stdout_tail: String::new(),
            stderr_tail: String::new(),
            duration_secs: 0.0,
            outputs: Vec::new(),
            dry_run: true,
        });
    }
    std::fs::create_dir_all(workdir).map_err(ExecutionError::Workdir)?;
    let before = list_files(workdir).map_err(ExecutionError::Workdir)?;

    let binary: PathBuf = options
        .binaries
        .get(cmd.program.name())
        .cloned()
        .unwrap_or_else(|| PathBuf::from(cmd.program.name()));
    let start = Instant::now();
    let mut child = Command::new(&binary)
        .args(&cmd.argv[1..])
        .current_dir(workdir)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                ExecutionError::BinaryMissing(binary.display().to_string())
            } else {
                ExecutionError::Spawn(e)
            }
        })?;

    let stdout = tail_reader(child.stdout.take().expect("stdout piped"));
    let stderr = tail_reader(child.stderr.take().expect("stderr piped"));

    let mut timed_out = false;
    let status = loop {
        match child.try_wait().map_err(ExecutionError::Spawn)? {
            Some(status) => break status,
            None if start.elapsed() >= options.timeout => {
                timed_out = true;
                let _ = child.kill();
                break child.wait().map_err(ExecutionError::Spawn)?;
            }
            None => std::thread::sleep(Duration::from_millis(20)),
        }
    };
    let duration_secs = start.elapsed().as_secs_f64();
    let stdout_tail = stdout.join().unwrap_or_default();
    let stderr_tail = stderr.join().unwrap_or_default();

    let after = list_files(workdir).map_err(ExecutionError::Workdir)?;
    let outputs: Vec<PathBuf> = after.difference(&before).cloned().collect();

    let result = ExecutionResult {
        exit_code: status.code().unwrap_or(-1),
        timed_out,
        stdout_tail,
        stderr_tail,
        duration_secs,
        outputs,
        dry_run: false,
    };
    write_run_record(cmd, &result, workdir);
    Ok(result)
}

#[derive(Serialize)]
struct RunRecord<'a> {
    argv: &'a [String],
    exit_code: i32,
    timed_out: bool,
    duration_secs: f64,
    outputs: &'a [PathBuf],
}

fn write_run_record(cmd: &ValidatedCommand, result: &ExecutionResult, workdir: &Path) {
    let record = RunRecord {
        argv: &cmd.argv,
        exit_code: result.exit_code,
        timed_out: result.timed_out,
        duration_secs: result.duration_secs,
        outputs: &result.outputs,
    };
    if let Ok(json) = serde_json::to_string_pretty(&record) {
        let _ = std::fs::write(workdir.join("run.json"), json);
    }
}
