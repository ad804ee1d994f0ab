//! Triplet construction, deterministic splits and leakage filtering.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::description::{extract_description, DescriptionKind, LengthBounds};
use super::index::{parse_source, IndexFragment, StructuralIndex};
use super::linking::{identify_test_classes, match_focal_class, match_focal_method, LinkNote, MatchKind};

/// One mined `<description, testcase, method>` record.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triplet {
    pub id: String,
    pub text: String,
    pub testcase: String,
    pub method: String,
    pub focal_class: String,
    pub focal_method: String,
    pub test_method: String,
    pub description_kind: DescriptionKind,
    pub project_id: String,
}

#[derive(Debug, Clone, Copy)]
#[derive(Default)]
pub struct MineOptions {
    pub bounds: LengthBounds,
    /// Parser threads; `None` uses the global pool.
    pub workers: Option<usize>,
}


/// Counters describing what was kept and dropped while mining.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MineReport {
    pub files: usize,
    pub unreadable_files: usize,
    pub partial_files: usize,
    pub test_classes: usize,
    pub unmatched_classes: usize,
    pub ambiguous_classes: usize,
    pub heuristic_disagreements: usize,
    pub test_methods: usize,
    pub unmatched_methods: usize,
    pub ambiguous_overloads: usize,
    pub no_description: usize,
    pub out_of_bounds: usize,
    pub triplets: usize,
}

#[derive(Debug, Clone)]
pub struct MineOutcome {
    pub triplets: Vec<Triplet>,
    pub index: StructuralIndex,
    pub report: MineReport,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    InvalidRatios([f64; 3]),
    #[error("cannot scan {path}: {source}")]
    Scan {
        path: String,
        #[source]
        source: walkdir::Error,
    },
}

fn project_id_of(root: &Path) -> String {
    root.canonicalize()
        .ok()
        .as_deref()
        .unwrap_or(root)
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "project".to_string())
}

/// Lists `.java` files under `root`, sorted by project-relative path.
pub fn java_files(root: &Path) -> Result<Vec<(String, std::path::PathBuf)>, CorpusError> {
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|source| CorpusError::Scan {
            path: root.display().to_string(),
            source,
        })?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|e| e == "java") {
            let rel = entry
                .path()
                .strip_prefix(root)
                .unwrap_or(entry.path())
                .to_string_lossy()
                .replace('\\', "/");
            files.push((rel, entry.path().to_path_buf()));
        }
    }
    files.sort();
    Ok(files)
}

/// Parses every Java file of a project. Unreadable files are skipped with a
/// warning; syntax errors yield partial fragments.
pub fn index_project(
    root: &Path,
    workers: Option<usize>,
    report: &mut MineReport,
) -> Result<StructuralIndex, CorpusError> {
    let files = java_files(root)?;
    let parse_all = || -> Vec<Option<IndexFragment>> {
        files
            .par_iter()
            .map(|(rel, abs)| match std::fs::read_to_string(abs) {
                Ok(content) => Some(parse_source(rel, &content)),
                Err(e) => {
                    log::warn!("skipping unreadable file {}: {e}", abs.display());
                    None
                }
            })
            .collect()
    };
    let parsed = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map(|pool| pool.install(parse_all))
            .unwrap_or_else(|_| parse_all()),
        None => parse_all(),
    };
    report.files += files.len();
    let mut fragments = Vec::with_capacity(parsed.len());
    for frag in parsed {
        match frag {
            Some(f) => {
                if f.partial {
                    report.partial_files += 1;
                }
                fragments.push(f);
            }
            None => report.unreadable_files += 1,
        }
    }
    Ok(StructuralIndex::from_fragments(project_id_of(root), fragments))
}

/// Mines triplets from an already indexed project.
pub fn triplets_from_index(
    index: &StructuralIndex,
    bounds: LengthBounds,
    report: &mut MineReport,
) -> Vec<Triplet> {
    let mut tests = identify_test_classes(index);
    tests.sort_by(|a, b| {
        let (ca, cb) = (index.class(*a), index.class(*b));
        (&ca.file_path, ca.span.start).cmp(&(&cb.file_path, cb.span.start))
    });
    report.test_classes += tests.len();

    let mut triplets = Vec::new();
    let mut seen_ids: HashMap<String, usize> = HashMap::new();
    for test_class in tests {
        let link = match_focal_class(test_class, index);
        for note in &link.notes {
            match note {
                LinkNote::AmbiguousMatch { .. } => report.ambiguous_classes += 1,
                LinkNote::Disagreement { by_path, by_name } => {
                    report.heuristic_disagreements += 1;
                    log::warn!(
                        "{}: path heuristic chose {}, name heuristic chose {}",
                        index.class(test_class).fqn,
                        index.class(*by_path).fqn,
                        index.class(*by_name).fqn
                    );
                }
            }
        }
        let test_info = index.class(test_class);
        let mut test_methods: Vec<_> = test_info
            .methods
            .iter()
            .copied()
            .filter(|&m| index.method(m).is_test())
            .collect();
        test_methods.sort_by_key(|&m| index.method(m).span.start);
        report.test_methods += test_methods.len();

        let Some(focal_class) = link.focal_class.filter(|_| link.match_kind != MatchKind::Unmatched) else {
            report.unmatched_classes += 1;
            report.unmatched_methods += test_methods.len();
            continue;
        };
        for tm in test_methods {
            let test_method = index.method(tm);
            let Some(found) = match_focal_method(test_method, focal_class, index) else {
                report.unmatched_methods += 1;
                continue;
            };
            if found.ambiguous_overload {
                report.ambiguous_overloads += 1;
            }
            let focal = index.method(found.method);
            let (text, kind) = match extract_description(focal, index.source_of_method(found.method)) {
                Ok(d) => d,
                Err(_) => {
                    report.no_description += 1;
                    continue;
                }
            };
            if !bounds.accepts(&text) {
                report.out_of_bounds += 1;
                continue;
            }
            let base_id = format!("{}:{}#{}", index.project_id, test_info.fqn, test_method.name);
            let ordinal = seen_ids.entry(base_id.clone()).or_insert(0);
            *ordinal += 1;
            let id = if *ordinal == 1 {
                base_id
            } else {
                format!("{base_id}~{ordinal}")
            };
            triplets.push(Triplet {
                id,
                text,
                testcase: index.method_text(tm).to_string(),
                method: index.method_text(found.method).to_string(),
                focal_class: index.class(focal_class).name.clone(),
                focal_method: focal.name.clone(),
                test_method: test_method.name.clone(),
                description_kind: kind,
                project_id: index.project_id.clone(),
            });
        }
    }
    report.triplets += triplets.len();
    triplets
}

/// Mines every `<description, testcase, method>` triplet of a project,
/// ordered by test file path then byte offset.
pub fn build_triplets(project_root: &Path, options: &MineOptions) -> Result<MineOutcome, CorpusError> {
    let mut report = MineReport::default();
    let index = index_project(project_root, options.workers, &mut report)?;
    let triplets = triplets_from_index(&index, options.bounds, &mut report);
    Ok(MineOutcome {
        triplets,
        index,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train: Vec<Triplet>,
    pub validation: Vec<Triplet>,
    pub test: Vec<Triplet>,
    pub seed: u64,
    pub ratios: [f64; 3],
}

/// Sizes for `n` records: `floor(n * ratio)` each, leftovers handed out
/// train → validation → test.
pub fn split_sizes(n: usize, ratios: [f64; 3]) -> Result<[usize; 3], CorpusError> {
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(CorpusError::InvalidRatios(ratios));
    }
    // the epsilon keeps 0.29 * 100 from flooring to 28
    let mut sizes = ratios.map(|r| ((n as f64) * r + 1e-9).floor() as usize);
    let mut assigned: usize = sizes.iter().sum();
    while assigned > n {
        // only reachable through the epsilon on pathological inputs
        let i = (0..3).rev().find(|&i| sizes[i] > 0).expect("assigned > 0");
        sizes[i] -= 1;
        assigned -= 1;
    }
    let mut slot = 0;
    while assigned < n {
        sizes[slot % 3] += 1;
        assigned += 1;
        slot += 1;
    }
    Ok(sizes)
}

/// Seeded shuffle followed by a train/validation/test cut.
pub fn split_corpus(triplets: Vec<Triplet>, ratios: [f64; 3], seed: u64) -> Result<CorpusSplit, CorpusError> {
    let [n_train, n_val, _] = split_sizes(triplets.len(), ratios)?;
    let mut shuffled = triplets;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let test = shuffled.split_off(n_train + n_val);
    let validation = shuffled.split_off(n_train);
    Ok(CorpusSplit {
        train: shuffled,
        validation,
        test,
        seed,
        ratios,
    })
}

/// Drops training triplets whose `(focal class, focal method)` pair also
/// occurs in any evaluation project.
pub fn filter_leakage(train: Vec<Triplet>, eval_indexes: &[StructuralIndex]) -> (Vec<Triplet>, usize) {
    let eval_pairs: HashSet<(&str, &str)> = eval_indexes
        .iter()
        .flat_map(|idx| {
            idx.methods
                .iter()
                .map(move |m| (idx.class(m.class).name.as_str(), m.name.as_str()))
        })
        .collect();
    let before = train.len();
    let kept: Vec<Triplet> = train
        .into_iter()
        .filter(|t| !eval_pairs.contains(&(t.focal_class.as_str(), t.focal_method.as_str())))
        .collect();
    let removed = before - kept.len();
    (kept, removed)
}
