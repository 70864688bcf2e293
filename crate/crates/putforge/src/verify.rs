//! Reproducibility protocol: compile every PUT with a matrix of system C
//! compilers and flag sets, replay the recorded trigger and non-trigger
//! inputs, and run an undefined-behavior-sanitized build.
//!
//! A PUT passes when every config compiles with zero warnings, the trigger
//! aborts, the non-trigger (when one exists) exits 0, and the sanitizer
//! reports nothing beyond the seeded bug itself. An out-of-bounds bug that
//! neither aborts nor runs under a sanitizer is inconclusive, not a pass: a
//! silent wild write proves nothing.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifest::{self, Manifest};
use crate::model::BugKind;

/// Environment variable listing compiler commands, comma-separated.
pub const CC_LIST_ENV: &str = "PUTFORGE_CC_LIST";

/// Default wall-clock limit per compile or run.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompilerConfig {
    pub command: String,
    pub flags: Vec<String>,
    /// True for the undefined-behavior-instrumented config.
    pub sanitizer: bool,
}

impl CompilerConfig {
    pub fn label(&self) -> String {
        format!("{} {}", self.command, self.flags.join(" "))
    }
}

fn compiler_works(command: &str) -> bool {
    Command::new(command)
        .arg("--version")
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

/// Resolves the compiler command list: an explicit list wins, then the
/// `PUTFORGE_CC_LIST` environment variable, then probing for `gcc` and
/// `clang` (falling back to `cc`). A value of the form `@path` names a file
/// with one command per line.
pub fn discover_compilers(explicit: Option<&str>) -> Vec<String> {
    let listed = explicit
        .map(str::to_string)
        .or_else(|| std::env::var(CC_LIST_ENV).ok());
    let candidates: Vec<String> = match listed {
        Some(list) => {
            let text = match list.strip_prefix('@') {
                Some(path) => std::fs::read_to_string(path).unwrap_or_default(),
                None => list.replace(',', "\n"),
            };
            text.lines()
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect()
        }
        None => {
            let mut found: Vec<String> = ["gcc", "clang"]
                .iter()
                .filter(|c| compiler_works(c))
                .map(|c| c.to_string())
                .collect();
            if found.is_empty() && compiler_works("cc") {
                found.push("cc".into());
            }
            return found;
        }
    };
    candidates
        .into_iter()
        .filter(|c| compiler_works(c))
        .collect()
}

/// Builds the flag matrix: `-O0 -Wall` and `-O1 -Wall` per compiler, plus
/// one sanitized config (`-fsanitize=undefined`) on the LLVM compiler when
/// present, otherwise on the first one.
pub fn build_configs(commands: &[String]) -> Vec<CompilerConfig> {
    let mut configs = Vec::new();
    for command in commands {
        for opt in ["-O0", "-O1"] {
            configs.push(CompilerConfig {
                command: command.clone(),
                flags: vec![opt.into(), "-Wall".into()],
                sanitizer: false,
            });
        }
    }
    if let Some(command) = commands
        .iter()
        .find(|c| c.contains("clang"))
        .or_else(|| commands.first())
    {
        configs.push(CompilerConfig {
            command: command.clone(),
            flags: vec!["-O0".into(), "-Wall".into(), "-fsanitize=undefined".into()],
            sanitizer: true,
        });
    }
    configs
}

/// Classified result of one binary run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RunOutcome {
    /// Killed by an abort-class signal, or an assertion diagnostic with a
    /// nonzero exit. A plain nonzero exit does not count.
    Abort,
    CleanExit,
    Timeout,
    Other(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConfigReport {
    pub config: String,
    pub compile_ok: bool,
    pub warning_count: u64,
    pub trigger_outcome: Option<RunOutcome>,
    pub non_trigger_outcome: Option<RunOutcome>,
    /// `runtime error:` diagnostics seen across both runs; only present for
    /// the sanitized config.
    pub sanitizer_findings: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PutVerdict {
    Pass,
    /// Nothing failed, but the bug could not be positively confirmed (an
    /// out-of-bounds write that stayed silent without a sanitizer).
    Inconclusive,
    Fail,
    /// No compiler available.
    Skipped,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PutReport {
    pub index: usize,
    pub source_path: String,
    pub verdict: PutVerdict,
    pub reasons: Vec<String>,
    pub configs: Vec<ConfigReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerificationReport {
    pub batch: String,
    pub configs: Vec<String>,
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
    pub skipped: usize,
    pub puts: Vec<PutReport>,
}

impl VerificationReport {
    /// Overall pass: no PUT failed (skips and inconclusives excluded).
    pub fn pass(&self) -> bool {
        self.failed == 0
    }
}

/// Everything the harness needs to know about one PUT.
#[derive(Debug, Clone)]
pub struct PutCase {
    pub index: usize,
    pub source_path: PathBuf,
    pub expected_sha256: Option<String>,
    pub trigger: Vec<String>,
    pub non_trigger: Option<Vec<String>>,
    pub bug_kind: BugKind,
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Manifest(#[from] manifest::ManifestError),
    #[error("cannot create a scratch directory: {0}")]
    Scratch(std::io::Error),
    #[error("cannot write report {path}: {source}")]
    Report {
        path: PathBuf,
        source: std::io::Error,
    },
}

struct RunResult {
    outcome: RunOutcome,
    findings: u64,
}

fn wait_with_timeout(child: &mut std::process::Child, limit: Duration) -> std::io::Result<Option<std::process::ExitStatus>> {
    let start = Instant::now();
    loop {
        if let Some(status) = child.try_wait()? {
            return Ok(Some(status));
        }
        if start.elapsed() > limit {
            let _ = child.kill();
            let _ = child.wait();
            return Ok(None);
        }
        std::thread::sleep(Duration::from_millis(2));
    }
}

fn drain(pipe: Option<impl Read>) -> String {
    let mut text = String::new();
    if let Some(mut pipe) = pipe {
        let mut bytes = Vec::new();
        let _ = pipe.read_to_end(&mut bytes);
        text = String::from_utf8_lossy(&bytes).into_owned();
    }
    text
}

fn run_binary(binary: &Path, args: &[String], limit: Duration) -> RunResult {
    let child = Command::new(binary)
        .args(args)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn();
    let mut child = match child {
        Ok(c) => c,
        Err(e) => {
            return RunResult {
                outcome: RunOutcome::Other(format!("spawn failed: {e}")),
                findings: 0,
            }
        }
    };
    let status = match wait_with_timeout(&mut child, limit) {
        Ok(Some(status)) => status,
        Ok(None) => {
            return RunResult {
                outcome: RunOutcome::Timeout,
                findings: drain(child.stderr.take()).matches("runtime error:").count() as u64,
            }
        }
        Err(e) => {
            return RunResult {
                outcome: RunOutcome::Other(format!("wait failed: {e}")),
                findings: 0,
            }
        }
    };
    let stderr = drain(child.stderr.take());
    let findings = stderr.matches("runtime error:").count() as u64;
    let outcome = classify(status, &stderr);
    RunResult { outcome, findings }
}

fn classify(status: std::process::ExitStatus, stderr: &str) -> RunOutcome {
    #[cfg(unix)]
    {
        use std::os::unix::process::ExitStatusExt;
        if let Some(signal) = status.signal() {
            // SIGTRAP(5), SIGABRT(6), SIGBUS(7), SIGFPE(8), SIGILL(4), SIGSEGV(11)
            if matches!(signal, 4 | 5 | 6 | 7 | 8 | 11) {
                return RunOutcome::Abort;
            }
            return RunOutcome::Other(format!("signal {signal}"));
        }
    }
    match status.code() {
        Some(0) => RunOutcome::CleanExit,
        Some(code) => {
            if stderr.contains("Assertion") || stderr.contains("assert") {
                RunOutcome::Abort
            } else {
                RunOutcome::Other(format!("exit {code}"))
            }
        }
        None => RunOutcome::Other("no exit status".into()),
    }
}

/// Compiles and runs one PUT under every config.
pub fn verify_put(
    case: &PutCase,
    configs: &[CompilerConfig],
    timeout: Duration,
) -> Result<PutReport, VerifyError> {
    let mut reasons = Vec::new();
    let mut reports = Vec::new();

    if configs.is_empty() {
        return Ok(PutReport {
            index: case.index,
            source_path: case.source_path.display().to_string(),
            verdict: PutVerdict::Skipped,
            reasons: vec!["no compiler available".into()],
            configs: reports,
        });
    }

    if let Some(expected) = &case.expected_sha256 {
        match std::fs::read(&case.source_path) {
            Ok(bytes) => {
                let actual = manifest::sha256_hex(&bytes);
                if &actual != expected {
                    reasons.push(format!(
                        "source hash mismatch: manifest records {expected}, file has {actual}"
                    ));
                }
            }
            Err(e) => reasons.push(format!("cannot read source: {e}")),
        }
    }

    let scratch = tempfile::tempdir().map_err(VerifyError::Scratch)?;
    let mut plain_trigger_outcomes: Vec<RunOutcome> = Vec::new();
    let mut any_abort = false;

    if reasons.is_empty() {
        for (i, config) in configs.iter().enumerate() {
            let binary = scratch.path().join(format!("put_{}", i));
            let output = Command::new(&config.command)
                .args(&config.flags)
                .arg("-o")
                .arg(&binary)
                .arg(&case.source_path)
                .stdin(Stdio::null())
                .output();
            let output = match output {
                Ok(o) => o,
                Err(e) => {
                    reasons.push(format!("{}: cannot invoke compiler: {e}", config.label()));
                    reports.push(ConfigReport {
                        config: config.label(),
                        compile_ok: false,
                        warning_count: 0,
                        trigger_outcome: None,
                        non_trigger_outcome: None,
                        sanitizer_findings: None,
                    });
                    continue;
                }
            };
            let stderr = String::from_utf8_lossy(&output.stderr);
            let warning_count = stderr
                .lines()
                .filter(|l| l.contains("warning:"))
                .count() as u64;
            let compile_ok = output.status.success();
            if !compile_ok {
                reasons.push(format!("{}: compilation failed", config.label()));
            }
            if warning_count > 0 {
                reasons.push(format!(
                    "{}: {warning_count} warning(s)",
                    config.label()
                ));
            }

            let mut report = ConfigReport {
                config: config.label(),
                compile_ok,
                warning_count,
                trigger_outcome: None,
                non_trigger_outcome: None,
                sanitizer_findings: config.sanitizer.then_some(0),
            };
            if compile_ok {
                let mut findings = 0;
                let trigger_run = run_binary(&binary, &case.trigger, timeout);
                findings += trigger_run.findings;
                if trigger_run.outcome == RunOutcome::Abort {
                    any_abort = true;
                }
                if config.sanitizer {
                    // The seeded out-of-bounds write is expected to surface
                    // here; anything on the trigger run of an assert bug is
                    // a genuine problem.
                    match case.bug_kind {
                        BugKind::Assert => {
                            if trigger_run.findings > 0 {
                                reasons.push(format!(
                                    "{}: {} undefined-behavior finding(s) on the trigger",
                                    config.label(),
                                    trigger_run.findings
                                ));
                            }
                            if trigger_run.outcome != RunOutcome::Abort {
                                reasons.push(format!(
                                    "{}: trigger did not abort ({:?})",
                                    config.label(),
                                    trigger_run.outcome
                                ));
                            }
                        }
                        BugKind::OutOfBounds => {
                            if trigger_run.findings == 0
                                && trigger_run.outcome != RunOutcome::Abort
                            {
                                reasons.push(format!(
                                    "{}: sanitizer saw neither a finding nor an abort on the trigger",
                                    config.label()
                                ));
                            }
                        }
                    }
                } else {
                    plain_trigger_outcomes.push(trigger_run.outcome.clone());
                    match case.bug_kind {
                        BugKind::Assert => {
                            if trigger_run.outcome != RunOutcome::Abort {
                                reasons.push(format!(
                                    "{}: trigger did not abort ({:?})",
                                    config.label(),
                                    trigger_run.outcome
                                ));
                            }
                        }
                        BugKind::OutOfBounds => {
                            // A silent wild write is legal here; the
                            // sanitized config decides.
                        }
                    }
                }
                report.trigger_outcome = Some(trigger_run.outcome);

                if let Some(non_trigger) = &case.non_trigger {
                    let run = run_binary(&binary, non_trigger, timeout);
                    findings += run.findings;
                    if run.outcome != RunOutcome::CleanExit {
                        reasons.push(format!(
                            "{}: non-trigger did not exit cleanly ({:?})",
                            config.label(),
                            run.outcome
                        ));
                    }
                    if config.sanitizer && run.findings > 0 {
                        reasons.push(format!(
                            "{}: {} undefined-behavior finding(s) on the non-trigger",
                            config.label(),
                            run.findings
                        ));
                    }
                    report.non_trigger_outcome = Some(run.outcome);
                }
                if config.sanitizer {
                    report.sanitizer_findings = Some(findings);
                }
            }
            reports.push(report);
        }
    }

    // Behavioral equivalence across the plain configs.
    if case.bug_kind == BugKind::Assert
        && plain_trigger_outcomes
            .windows(2)
            .any(|w| w[0] != w[1])
    {
        reasons.push("trigger outcome differs between compiler configs".into());
    }

    let has_sanitizer = configs.iter().any(|c| c.sanitizer);
    let verdict = if !reasons.is_empty() {
        PutVerdict::Fail
    } else if case.bug_kind == BugKind::OutOfBounds && !has_sanitizer && !any_abort {
        PutVerdict::Inconclusive
    } else {
        PutVerdict::Pass
    };
    Ok(PutReport {
        index: case.index,
        source_path: case.source_path.display().to_string(),
        verdict,
        reasons,
        configs: reports,
    })
}

fn case_from_record(record: &manifest::Record, dir: &Path) -> Option<PutCase> {
    if !record.is_ok() {
        return None;
    }
    Some(PutCase {
        index: record.index,
        source_path: dir.join(record.source_path.as_ref()?),
        expected_sha256: record.source_sha256.clone(),
        trigger: record.trigger.clone()?,
        non_trigger: record.non_trigger.clone(),
        bug_kind: record.bug_kind?,
    })
}

/// Verifies every ok record of a manifest, fanning out over `jobs` worker
/// threads. Reports are merged in record order regardless of scheduling.
pub fn verify_batch(
    manifest: &Manifest,
    manifest_dir: &Path,
    configs: &[CompilerConfig],
    jobs: usize,
    timeout: Duration,
) -> Result<VerificationReport, VerifyError> {
    let cases: Vec<PutCase> = manifest
        .records
        .iter()
        .filter_map(|r| case_from_record(r, manifest_dir))
        .collect();

    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<PutReport, VerifyError>>>> =
        Mutex::new((0..cases.len()).map(|_| None).collect());
    let workers = jobs.max(1).min(cases.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= cases.len() {
                    break;
                }
                let result = verify_put(&cases[i], configs, timeout);
                slots.lock().unwrap()[i] = Some(result);
            });
        }
    });

    let mut puts = Vec::with_capacity(cases.len());
    for slot in slots.into_inner().unwrap() {
        puts.push(slot.expect("every case processed")?);
    }

    let count = |v: PutVerdict| puts.iter().filter(|p| p.verdict == v).count();
    Ok(VerificationReport {
        batch: manifest.batch.clone(),
        configs: configs.iter().map(|c| c.label()).collect(),
        total: puts.len(),
        passed: count(PutVerdict::Pass),
        failed: count(PutVerdict::Fail),
        inconclusive: count(PutVerdict::Inconclusive),
        skipped: count(PutVerdict::Skipped),
        puts,
    })
}

/// Writes the verification report as JSON next to the manifest.
pub fn write_report(report: &VerificationReport, path: &Path) -> Result<(), VerifyError> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| VerifyError::Report {
        path: path.to_path_buf(),
        source: e,
    })
}
