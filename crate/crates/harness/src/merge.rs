use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::results::{read_results, write_manifest, write_results, ResultRow};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeSummary {
    pub path: PathBuf,
    pub rows: usize,
    pub duplicates: usize,
    /// Design indices below the configured size with no row.
    pub missing: Vec<usize>,
}

/// Rows of all shards keyed by design index, with the name of the shard
/// that supplied each one. Repeated identical rows are dropped with a
/// warning; repeated rows that differ are an error listing the indices.
pub fn merge_rows(shards: &[PathBuf]) -> Result<(BTreeMap<usize, (ResultRow, String)>, usize)> {
    if shards.is_empty() {
        return Err(HarnessError::Config(
            "merge needs at least one shard".into(),
        ));
    }
    let mut table: BTreeMap<usize, (ResultRow, String)> = BTreeMap::new();
    let mut duplicates = 0;
    let mut conflicts = Vec::new();
    for path in shards {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        for row in read_results(path)? {
            if let Some((prev, prev_name)) = table.get(&row.index) {
                if prev.record() != row.record() {
                    conflicts.push(row.index);
                    continue;
                }
                log::warn!(
                    "row {} appears in both {prev_name} and {name}; keeping the copy from {name}",
                    row.index
                );
                duplicates += 1;
            }
            table.insert(row.index, (row, name.clone()));
        }
    }
    if !conflicts.is_empty() {
        conflicts.sort_unstable();
        conflicts.dedup();
        return Err(HarnessError::Data(format!(
            "conflicting duplicate rows for design indices {conflicts:?}"
        )));
    }
    let mut rows = table.values().map(|(r, _)| r);
    if let Some(first) = rows.next() {
        if let Some(r) = rows.find(|r| r.divergence != first.divergence || r.dgm != first.dgm) {
            return Err(HarnessError::Data(format!(
                "row {} belongs to a different study than row {}",
                r.index, first.index
            )));
        }
    }
    Ok((table, duplicates))
}

/// Merge shard files into one results table sorted by design index.
pub fn cmd_merge(
    cfg: &ExperimentConfig,
    shards: &[PathBuf],
    out: Option<&Path>,
) -> Result<MergeSummary> {
    let (table, duplicates) = merge_rows(shards)?;
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.results_path());
    let rows: Vec<ResultRow> = table.values().map(|(r, _)| r.clone()).collect();
    write_results(&path, &rows)?;
    let missing: Vec<usize> = (0..cfg.design_size)
        .filter(|i| !table.contains_key(i))
        .collect();
    if !missing.is_empty() {
        log::warn!("{} design rows have no result yet", missing.len());
    }
    let mut provenance: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, (_, shard)) in &table {
        provenance.entry(shard.as_str()).or_default().push(*i);
    }
    write_manifest(
        &path,
        &json!({
            "kind": "results",
            "config_hash": cfg.hash(),
            "study": cfg.study_name(),
            "rows": rows.len(),
            "diverged": rows.iter().filter(|r| r.diverged).count(),
            "provenance": provenance,
        }),
    )?;
    log::info!("merged {} rows into {}", rows.len(), path.display());
    Ok(MergeSummary {
        path,
        rows: rows.len(),
        duplicates,
        missing,
    })
}
