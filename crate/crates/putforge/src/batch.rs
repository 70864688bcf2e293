//! Named batch recipes and bulk generation.
//!
//! Each batch derives one child seed per PUT from the master seed, so PUTs
//! are independent of generation order; the child seed is split again into a
//! shape stream (random kind choices) and a parameter stream (fresh draws).

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dsl;
use crate::emit::{emit, EmitError, EmitOptions};
use crate::instantiate::{
    instantiate, random_sequence, single_item, ArgvPolicy, InstantiateError, Ranges, Rng,
    RNG_ALGORITHM,
};
use crate::manifest::{self, Manifest, Record, RecordStatus};
use crate::metrics::{self, MetricsError};
use crate::model::{BugKind, Put, SequenceSpec, TransformationKind, ALL_KINDS};
use crate::oracle::{derive_inputs, DeriveError};

/// Size histogram of batch B10: (sequence length, number of PUTs).
pub const B10_HISTOGRAM: [(usize, usize); 9] = [
    (2, 1),
    (3, 4),
    (4, 9),
    (5, 41),
    (6, 44),
    (7, 43),
    (8, 29),
    (9, 20),
    (10, 9),
];

/// A named generation recipe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchPreset {
    /// 10 single-transformation PUTs: each kind with each bug payload.
    B1,
    /// 45 two-transformation PUTs: all unordered pairs of the 10 base
    /// configurations of B1, nested in enumeration order.
    B2,
    /// 200 PUTs of 2 to 10 random transformations with a fixed size
    /// histogram ([`B10_HISTOGRAM`]).
    B10,
    /// 100 PUTs of exactly 100 random transformations.
    B100,
    /// 100 PUTs of exactly 1000 random transformations.
    B1000,
    /// 10 PUTs of sizes 1 to 10, every item the same kind.
    Kind(TransformationKind),
    /// 10 PUTs of sizes 1 to 10 with random kinds.
    Star,
    /// `count` PUTs of `length` random transformations each.
    Custom { count: usize, length: usize },
}

impl BatchPreset {
    pub fn name(&self) -> String {
        match self {
            BatchPreset::B1 => "B1".into(),
            BatchPreset::B2 => "B2".into(),
            BatchPreset::B10 => "B10".into(),
            BatchPreset::B100 => "B100".into(),
            BatchPreset::B1000 => "B1000".into(),
            BatchPreset::Kind(kind) => format!("B_{kind}"),
            BatchPreset::Star => "B_STAR".into(),
            BatchPreset::Custom { .. } => "custom".into(),
        }
    }

    pub fn count(&self) -> usize {
        match self {
            BatchPreset::B1 => 10,
            BatchPreset::B2 => 45,
            BatchPreset::B10 => 200,
            BatchPreset::B100 | BatchPreset::B1000 => 100,
            BatchPreset::Kind(_) | BatchPreset::Star => 10,
            BatchPreset::Custom { count, .. } => *count,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            BatchPreset::B1 => "10 PUTs of 1 transformation (each kind x each bug payload)".into(),
            BatchPreset::B2 => "45 PUTs of 2 transformations (all pairs of the B1 configurations)".into(),
            BatchPreset::B10 => "200 PUTs of 2-10 random transformations (fixed size histogram)".into(),
            BatchPreset::B100 => "100 PUTs of 100 random transformations".into(),
            BatchPreset::B1000 => "100 PUTs of 1000 random transformations".into(),
            BatchPreset::Kind(kind) => format!("10 PUTs of sizes 1-10, all {kind}"),
            BatchPreset::Star => "10 PUTs of sizes 1-10 with random kinds".into(),
            BatchPreset::Custom { count, length } => {
                format!("{count} PUTs of {length} random transformations")
            }
        }
    }

    /// Every named preset, in listing order.
    pub fn all_named() -> Vec<BatchPreset> {
        let mut out = vec![
            BatchPreset::B1,
            BatchPreset::B2,
            BatchPreset::B10,
            BatchPreset::B100,
            BatchPreset::B1000,
        ];
        out.extend(ALL_KINDS.iter().map(|&k| BatchPreset::Kind(k)));
        out.push(BatchPreset::Star);
        out
    }
}

impl std::str::FromStr for BatchPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        for preset in BatchPreset::all_named() {
            if preset.name() == s {
                return Ok(preset);
            }
        }
        if let Some(rest) = s.strip_prefix("custom:") {
            let (count, length) = rest
                .split_once('x')
                .ok_or_else(|| format!("expected custom:<count>x<length>, got `{s}`"))?;
            let count = count
                .parse()
                .map_err(|_| format!("bad count in `{s}`"))?;
            let length = length
                .parse()
                .map_err(|_| format!("bad length in `{s}`"))?;
            if length == 0 {
                return Err("custom length must be at least 1".into());
            }
            return Ok(BatchPreset::Custom { count, length });
        }
        Err(format!(
            "unknown preset `{s}` (try `putforge presets` for the list)"
        ))
    }
}

/// The 10 base configurations of B1: every kind with every bug payload, in
/// catalogue order.
fn base_configurations() -> Vec<(TransformationKind, BugKind)> {
    ALL_KINDS
        .iter()
        .flat_map(|&kind| [(kind, BugKind::Assert), (kind, BugKind::OutOfBounds)])
        .collect()
}

fn shape_rng(child_seed: u64) -> Rng {
    Rng::new(Rng::child_seed(child_seed, 0))
}

fn param_rng(child_seed: u64) -> Rng {
    Rng::new(Rng::child_seed(child_seed, 1))
}

/// Expands a preset into its abstract sequences, one child seed per PUT.
pub fn make_batch(
    preset: &BatchPreset,
    master_seed: u64,
) -> Result<Vec<(SequenceSpec, u64)>, InstantiateError> {
    let child = |i: usize| Rng::child_seed(master_seed, i as u64);
    match preset {
        BatchPreset::B1 => Ok(base_configurations()
            .into_iter()
            .enumerate()
            .map(|(i, (kind, bug))| {
                (
                    SequenceSpec::new(vec![single_item(kind, true, bug)]),
                    child(i),
                )
            })
            .collect()),
        BatchPreset::B2 => {
            let configs = base_configurations();
            let mut out = Vec::with_capacity(45);
            for a in 0..configs.len() {
                for b in (a + 1)..configs.len() {
                    let i = out.len();
                    let (outer_kind, _) = configs[a];
                    let (inner_kind, inner_bug) = configs[b];
                    let seq = SequenceSpec::new(vec![
                        single_item(outer_kind, false, BugKind::Assert),
                        single_item(inner_kind, true, inner_bug),
                    ]);
                    out.push((seq, child(i)));
                }
            }
            Ok(out)
        }
        BatchPreset::B10 => {
            let mut out = Vec::with_capacity(200);
            for &(size, count) in &B10_HISTOGRAM {
                for _ in 0..count {
                    let i = out.len();
                    let seed = child(i);
                    let seq = random_sequence(size, &ALL_KINDS, &mut shape_rng(seed))?;
                    out.push((seq, seed));
                }
            }
            Ok(out)
        }
        BatchPreset::B100 => fixed_size_batch(100, 100, child),
        BatchPreset::B1000 => fixed_size_batch(100, 1000, child),
        BatchPreset::Kind(kind) => (1..=10)
            .map(|size| {
                let seed = child(size - 1);
                let items = (0..size)
                    .map(|j| single_item(*kind, j + 1 == size, BugKind::Assert))
                    .collect();
                Ok((SequenceSpec::new(items), seed))
            })
            .collect(),
        BatchPreset::Star => (1..=10)
            .map(|size| {
                let seed = child(size - 1);
                let seq = random_sequence(size, &ALL_KINDS, &mut shape_rng(seed))?;
                Ok((seq, seed))
            })
            .collect(),
        BatchPreset::Custom { count, length } => fixed_size_batch(*count, *length, child),
    }
}

fn fixed_size_batch(
    count: usize,
    length: usize,
    child: impl Fn(usize) -> u64,
) -> Result<Vec<(SequenceSpec, u64)>, InstantiateError> {
    (0..count)
        .map(|i| {
            let seed = child(i);
            let seq = random_sequence(length, &ALL_KINDS, &mut shape_rng(seed))?;
            Ok((seq, seed))
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum PutError {
    #[error(transparent)]
    Instantiate(#[from] InstantiateError),
    #[error(transparent)]
    Derive(#[from] DeriveError),
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("unprintable sequence: {0}")]
    Print(#[from] dsl::DslError),
}

/// Runs the full pipeline for one sequence: instantiate, derive inputs,
/// emit, measure. The trigger is re-checked through the interpreter as part
/// of derivation.
pub fn build_put(
    spec: &SequenceSpec,
    ranges: &Ranges,
    child_seed: u64,
    policy: ArgvPolicy,
    opts: &EmitOptions,
) -> Result<Put, PutError> {
    let mut rng = param_rng(child_seed);
    let inst = instantiate(spec, ranges, &mut rng, policy)?;
    let derived = derive_inputs(&inst)?;
    let emitted = emit(&inst, opts)?;
    let m = metrics::Metrics {
        cyclomatic: metrics::cyclomatic(&inst),
        path_statements: metrics::path_statements(&inst, &derived.trigger)?,
        transformation_count: inst.items.len() as u64,
    };
    Ok(Put {
        source: emitted.source,
        bug_line: emitted.bug_line,
        trigger: derived.trigger,
        non_trigger: derived.non_trigger,
        metrics: m,
        seed: child_seed,
        spec: spec.clone(),
        bug_kind: emitted.bug_kind,
        argv_arity: inst.argv_arity,
    })
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("cannot create output directory {path}: {source}")]
    CreateDir {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    WriteFile {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Manifest(#[from] manifest::ManifestError),
    #[error(transparent)]
    Shape(#[from] InstantiateError),
}

/// Instantiates, derives, emits, and measures every sequence of a batch,
/// writing `put_<batch>_<index>.c` files plus `manifest.json` under
/// `<out_dir>/<batch>/`. A failing PUT becomes an error record and does not
/// abort the batch. Deterministic per (jobs, ranges, seed).
pub fn generate_records(
    batch_name: &str,
    master_seed: u64,
    jobs: &[(SequenceSpec, u64)],
    ranges: &Ranges,
    out_dir: &Path,
    policy: ArgvPolicy,
    opts: &EmitOptions,
) -> Result<Manifest, BatchError> {
    let dir = out_dir.join(batch_name);
    std::fs::create_dir_all(&dir).map_err(|e| BatchError::CreateDir {
        path: dir.clone(),
        source: e,
    })?;

    let mut records = Vec::with_capacity(jobs.len());
    for (index, (spec, child_seed)) in jobs.iter().enumerate() {
        let spec_text = dsl::print(spec).unwrap_or_else(|_| "<unprintable>".into());
        match build_put(spec, ranges, *child_seed, policy, opts) {
            Ok(put) => {
                let file_name = format!("put_{batch_name}_{index}.c");
                let path = dir.join(&file_name);
                std::fs::write(&path, put.source.as_bytes()).map_err(|e| {
                    BatchError::WriteFile {
                        path: path.clone(),
                        source: e,
                    }
                })?;
                records.push(Record {
                    index,
                    child_seed: *child_seed,
                    spec_text,
                    argv_arity: put.argv_arity,
                    trigger: Some(put.trigger),
                    non_trigger: put.non_trigger,
                    bug_kind: Some(put.bug_kind),
                    bug_line: Some(put.bug_line),
                    source_path: Some(file_name),
                    source_sha256: Some(manifest::sha256_hex(put.source.as_bytes())),
                    metrics: Some(put.metrics),
                    status: RecordStatus::Ok,
                });
            }
            Err(e) => records.push(Record {
                index,
                child_seed: *child_seed,
                spec_text,
                argv_arity: 0,
                trigger: None,
                non_trigger: None,
                bug_kind: None,
                bug_line: None,
                source_path: None,
                source_sha256: None,
                metrics: None,
                status: RecordStatus::Error(e.to_string()),
            }),
        }
    }

    let manifest = Manifest {
        format_version: manifest::FORMAT_VERSION,
        generator_version: env!("CARGO_PKG_VERSION").into(),
        batch: batch_name.to_string(),
        master_seed,
        rng_algorithm: RNG_ALGORITHM.into(),
        ranges: ranges.clone(),
        records,
    };
    manifest::write(&manifest, &dir.join("manifest.json"))?;
    Ok(manifest)
}

/// Generates a whole preset batch under `out_dir`.
pub fn generate_batch(
    preset: &BatchPreset,
    master_seed: u64,
    ranges: &Ranges,
    out_dir: &Path,
    opts: &EmitOptions,
) -> Result<Manifest, BatchError> {
    let jobs = make_batch(preset, master_seed)?;
    generate_records(
        &preset.name(),
        master_seed,
        &jobs,
        ranges,
        out_dir,
        ArgvPolicy::Distinct,
        opts,
    )
}
