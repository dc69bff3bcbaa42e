use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::sample_id::{parse_sample_id, SampleId};
use crate::diagnostics::{self, Diagnostic};
use crate::error::{Error, Result};

/// Source tag given to files sitting directly under the manifest root.
pub const ROOT_TAG: &str = ".";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: SampleId,
    pub path: PathBuf,
    /// First directory component below the root, or [`ROOT_TAG`].
    pub source: String,
    /// Class label in `1..=class_count`.
    pub label: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    entries: Vec<ManifestEntry>,
    class_count: u32,
}

impl DatasetManifest {
    /// Sorts by sample id and checks the manifest invariants.
    pub fn new(mut entries: Vec<ManifestEntry>, class_count: u32) -> Result<Self> {
        entries.sort_by_key(|e| e.id);
        if let Some(w) = entries.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::DuplicateSample(w[0].id.to_string()));
        }
        if let Some(e) = entries
            .iter()
            .find(|e| e.label == 0 || e.label > class_count)
        {
            return Err(Error::Manifest(format!(
                "{} has label {} outside 1..={class_count}",
                e.id, e.label
            )));
        }
        Ok(DatasetManifest {
            entries,
            class_count,
        })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn class_count(&self) -> u32 {
        self.class_count
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn label_of(&self, id: &SampleId) -> Option<u32> {
        self.entries
            .binary_search_by_key(id, |e| e.id)
            .ok()
            .map(|i| self.entries[i].label)
    }

    pub fn subjects(&self) -> BTreeSet<u32> {
        self.entries.iter().map(|e| e.id.subject).collect()
    }

    fn subset(&self, keep: impl Fn(&ManifestEntry) -> bool) -> DatasetManifest {
        DatasetManifest {
            entries: self.entries.iter().filter(|e| keep(e)).cloned().collect(),
            class_count: self.class_count,
        }
    }
}

/// `source_tag old_action new_action` records; `*` matches any source.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum LabelMapping {
    /// Labels are the dense rank of the encountered action ids.
    #[default]
    Identity,
    Table(HashMap<(String, u32), u32>),
}

impl LabelMapping {
    pub fn parse(text: &str) -> Result<Self> {
        let mut table = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |reason: &str| Error::MappingSyntax {
                line: idx + 1,
                reason: reason.to_string(),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [tag, old, new] = fields[..] else {
                return Err(syntax("expected `source_tag old_action new_action`"));
            };
            let old: u32 = old.parse().map_err(|_| syntax("bad old action id"))?;
            let new: u32 = new.parse().map_err(|_| syntax("bad new action id"))?;
            if old == 0 || new == 0 {
                return Err(syntax("action ids start at 1"));
            }
            if table.insert((tag.to_string(), old), new).is_some() {
                return Err(syntax("duplicate record"));
            }
        }
        Ok(LabelMapping::Table(table))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    fn lookup(&self, source: &str, action: u32) -> Option<u32> {
        match self {
            LabelMapping::Identity => Some(action),
            LabelMapping::Table(t) => t
                .get(&(source.to_string(), action))
                .or_else(|| t.get(&("*".to_string(), action)))
                .copied(),
        }
    }
}

/// Scans `root` recursively for convention-named depth files.
///
/// Files in a subdirectory take that directory's name as their source tag,
/// which is what a [`LabelMapping`] keys on when several datasets are merged.
/// Entries come back sorted by sample id whatever the listing order.
pub fn build_manifest(root: &Path, mapping: &LabelMapping) -> Result<DatasetManifest> {
    let mut found = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into())
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy();
        if !name.ends_with("_depth.bin") {
            continue;
        }
        let id = parse_sample_id(&name)?;
        let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
        let source = match rel.components().count() {
            0 | 1 => ROOT_TAG.to_string(),
            _ => rel
                .components()
                .next()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .unwrap_or_else(|| ROOT_TAG.to_string()),
        };
        found.push((id, entry.into_path(), source));
    }
    if found.is_empty() {
        return Err(Error::EmptyDirectory(root.to_path_buf()));
    }

    let mut raw = Vec::with_capacity(found.len());
    for (id, path, source) in found {
        let label = mapping
            .lookup(&source, id.action)
            .ok_or_else(|| Error::MappingGap {
                source_tag: source.clone(),
                action: id.action,
            })?;
        raw.push(ManifestEntry {
            id,
            path,
            source,
            label,
        });
    }

    let distinct: BTreeSet<u32> = raw.iter().map(|e| e.label).collect();
    let class_count = distinct.len() as u32;
    match mapping {
        LabelMapping::Identity => {
            let rank: BTreeMap<u32, u32> = distinct.iter().zip(1..).map(|(&l, r)| (l, r)).collect();
            for e in &mut raw {
                e.label = rank[&e.label];
            }
        }
        LabelMapping::Table(_) => {
            if distinct.iter().copied().ne(1..=class_count) {
                return Err(Error::NonContiguousLabels(distinct.into_iter().collect()));
            }
        }
    }
    DatasetManifest::new(raw, class_count)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitRule {
    /// Odd subject ids train, even subject ids test.
    OddTrain,
    Explicit {
        train: BTreeSet<u32>,
        test: BTreeSet<u32>,
    },
}

impl SplitRule {
    pub fn explicit(
        train: impl IntoIterator<Item = u32>,
        test: impl IntoIterator<Item = u32>,
    ) -> Result<Self> {
        let train: BTreeSet<u32> = train.into_iter().collect();
        let test: BTreeSet<u32> = test.into_iter().collect();
        if let Some(s) = train.intersection(&test).next() {
            return Err(Error::InvalidSplit(format!(
                "subject {s} is in both train and test"
            )));
        }
        Ok(SplitRule::Explicit { train, test })
    }

    /// `odd-train`, or `train=1,3;test=2,4`.
    pub fn parse(text: &str) -> Result<Self> {
        if text == "odd-train" {
            return Ok(SplitRule::OddTrain);
        }
        let bad = || Error::InvalidSplit(format!("cannot parse {text:?}"));
        let (train, test) = text.split_once(';').ok_or_else(bad)?;
        let list = |part: &str, key: &str| -> Result<Vec<u32>> {
            let body = part.trim().strip_prefix(key).ok_or_else(bad)?;
            body.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse().map_err(|_| bad()))
                .collect()
        };
        Self::explicit(list(train, "train=")?, list(test, "test=")?)
    }

    fn is_train(&self, subject: u32) -> Result<bool> {
        match self {
            SplitRule::OddTrain => Ok(subject % 2 == 1),
            SplitRule::Explicit { train, test } => {
                if train.contains(&subject) {
                    Ok(true)
                } else if test.contains(&subject) {
                    Ok(false)
                } else {
                    Err(Error::UnassignedSubject(subject))
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: DatasetManifest,
    pub test: DatasetManifest,
    pub diagnostics: Vec<Diagnostic>,
}

/// Partitions a manifest by subject. An empty side is a diagnostic, not an error.
pub fn split(manifest: &DatasetManifest, rule: &SplitRule) -> Result<Split> {
    if manifest.is_empty() {
        return Err(Error::InvalidSplit("manifest is empty".into()));
    }
    let mut train_subjects = BTreeSet::new();
    for s in manifest.subjects() {
        if rule.is_train(s)? {
            train_subjects.insert(s);
        }
    }
    let train = manifest.subset(|e| train_subjects.contains(&e.id.subject));
    let test = manifest.subset(|e| !train_subjects.contains(&e.id.subject));
    let mut diags = Vec::new();
    if train.is_empty() {
        diags.push(Diagnostic::EmptySplitSide { side: "train" });
    }
    if test.is_empty() {
        diags.push(Diagnostic::EmptySplitSide { side: "test" });
    }
    diagnostics::emit(&diags);
    Ok(Split {
        train,
        test,
        diagnostics: diags,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    path: PathBuf,
    action: u32,
    subject: u32,
    example: u32,
    label: u32,
}

/// Writes the `path,action,subject,example,label` export.
pub fn write_manifest_csv(manifest: &DatasetManifest, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Manifest(e.to_string()))?;
    for e in &manifest.entries {
        w.serialize(CsvRow {
            path: e.path.clone(),
            action: e.id.action,
            subject: e.id.subject,
            example: e.id.example,
            label: e.label,
        })
        .map_err(|e| Error::Manifest(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_manifest_csv(path: &Path) -> Result<DatasetManifest> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Manifest(e.to_string()))?;
    let mut entries = Vec::new();
    for row in r.deserialize::<CsvRow>() {
        let row = row.map_err(|e| Error::Manifest(e.to_string()))?;
        entries.push(ManifestEntry {
            id: SampleId::new(row.action, row.subject, row.example)?,
            path: row.path,
            source: ROOT_TAG.to_string(),
            label: row.label,
        });
    }
    let class_count = entries.iter().map(|e| e.label).max().unwrap_or(0);
    DatasetManifest::new(entries, class_count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth_io::{format_sample_id, write_sequence, DepthSequence, Frame};
    use proptest::prelude::*;

    fn touch(dir: &Path, a: u32, s: u32, e: u32) {
        fs::create_dir_all(dir).unwrap();
        let seq = DepthSequence::new(vec![Frame::zeros(1, 1)]).unwrap();
        let id = SampleId::new(a, s, e).unwrap();
        write_sequence(&seq, &dir.join(format_sample_id(&id))).unwrap();
    }

    fn manifest_of(ids: &[(u32, u32, u32)]) -> DatasetManifest {
        let entries = ids
            .iter()
            .map(|&(a, s, e)| ManifestEntry {
                id: SampleId::new(a, s, e).unwrap(),
                path: PathBuf::new(),
                source: ROOT_TAG.into(),
                label: a,
            })
            .collect();
        let k = ids.iter().map(|t| t.0).max().unwrap_or(0);
        DatasetManifest::new(entries, k).unwrap()
    }

    #[test]
    fn identity_manifest_two_actions() {
        let dir = tempfile::tempdir().unwrap();
        for (a, s) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            touch(dir.path(), a, s, 1);
        }
        let m = build_manifest(dir.path(), &LabelMapping::Identity).unwrap();
        assert_eq!(m.class_count(), 2);
        assert_eq!(m.len(), 4);
        assert!(m.entries().windows(2).all(|w| w[0].id < w[1].id));
    }

    #[test]
    fn identity_compacts_sparse_action_ids() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), 3, 1, 1);
        touch(dir.path(), 7, 1, 1);
        let m = build_manifest(dir.path(), &LabelMapping::Identity).unwrap();
        let labels: Vec<u32> = m.entries().iter().map(|e| e.label).collect();
        assert_eq!(labels, vec![1, 2]);
    }

    #[test]
    fn two_sources_merge_into_one_label() {
        let dir = tempfile::tempdir().unwrap();
        touch(&dir.path().join("A"), 6, 1, 1);
        touch(&dir.path().join("A"), 1, 2, 1);
        touch(&dir.path().join("U"), 3, 25, 1);
        let mapping = LabelMapping::parse(
            "# tag old new\nA 6 6\nA 1 1\nU 3 6\n*  2 2 # unused\n*  3 3\n*  4 4\n* 5 5\n",
        )
        .unwrap();
        let m = build_manifest(dir.path(), &mapping);
        // labels 2..5 are never hit, so the encountered set is {1, 6}
        assert!(matches!(m, Err(Error::NonContiguousLabels(_))));

        let mapping = LabelMapping::parse("A 6 2\nA 1 1\nU 3 2\n").unwrap();
        let m = build_manifest(dir.path(), &mapping).unwrap();
        let from_a = m.entries().iter().find(|e| e.source == "A" && e.id.action == 6);
        let from_u = m.entries().iter().find(|e| e.source == "U");
        assert_eq!(from_a.unwrap().label, 2);
        assert_eq!(from_u.unwrap().label, 2);
    }

    #[test]
    fn combined_label_six_from_two_trees() {
        let dir = tempfile::tempdir().unwrap();
        touch(&dir.path().join("A"), 6, 1, 1);
        touch(&dir.path().join("U"), 3, 25, 1);
        for a in 1..=5 {
            touch(&dir.path().join("A"), a, 2, 1);
        }
        let mut text = String::from("U 3 6\n");
        for a in 1..=6 {
            text.push_str(&format!("A {a} {a}\n"));
        }
        let m = build_manifest(dir.path(), &LabelMapping::parse(&text).unwrap()).unwrap();
        assert_eq!(m.class_count(), 6);
        let six: Vec<_> = m.entries().iter().filter(|e| e.label == 6).collect();
        assert_eq!(six.len(), 2);
        assert_eq!(
            six.iter().map(|e| e.source.as_str()).collect::<BTreeSet<_>>(),
            ["A", "U"].into_iter().collect()
        );
    }

    #[test]
    fn mapping_gap_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), 1, 1, 1);
        touch(dir.path(), 2, 1, 1);
        let mapping = LabelMapping::parse("* 1 1\n").unwrap();
        assert!(matches!(
            build_manifest(dir.path(), &mapping),
            Err(Error::MappingGap { action: 2, .. })
        ));
    }

    #[test]
    fn empty_directory_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            build_manifest(dir.path(), &LabelMapping::Identity),
            Err(Error::EmptyDirectory(_))
        ));
        touch(&dir.path().join("x"), 1, 1, 1);
        touch(&dir.path().join("y"), 1, 1, 1);
        assert!(matches!(
            build_manifest(dir.path(), &LabelMapping::Identity),
            Err(Error::DuplicateSample(_))
        ));
    }

    #[test]
    fn mapping_syntax_errors() {
        assert!(LabelMapping::parse("A 1").is_err());
        assert!(LabelMapping::parse("A x 2").is_err());
        assert!(LabelMapping::parse("A 1 2\nA 1 3").is_err());
    }

    #[test]
    fn odd_train_split() {
        let ids: Vec<_> = (1..=10).map(|s| (1, s, 1)).collect();
        let sp = split(&manifest_of(&ids), &SplitRule::OddTrain).unwrap();
        assert_eq!(
            sp.train.subjects(),
            [1, 3, 5, 7, 9].into_iter().collect::<BTreeSet<_>>()
        );
        assert_eq!(
            sp.test.subjects(),
            [2, 4, 6, 8, 10].into_iter().collect::<BTreeSet<_>>()
        );
        assert!(sp.diagnostics.is_empty());
    }

    #[test]
    fn single_even_subject_gives_empty_train() {
        let sp = split(&manifest_of(&[(1, 2, 1)]), &SplitRule::OddTrain).unwrap();
        assert!(sp.train.is_empty());
        assert_eq!(
            sp.diagnostics,
            vec![Diagnostic::EmptySplitSide { side: "train" }]
        );
    }

    #[test]
    fn explicit_split() {
        let m = manifest_of(&[(1, 1, 1), (1, 2, 1), (2, 1, 2)]);
        let rule = SplitRule::explicit([1], [2]).unwrap();
        let sp = split(&m, &rule).unwrap();
        assert_eq!(sp.train.len(), 2);
        assert_eq!(sp.test.len(), 1);
        assert!(SplitRule::explicit([1], [1]).is_err());
        let rule = SplitRule::explicit([1], [3]).unwrap();
        assert!(matches!(split(&m, &rule), Err(Error::UnassignedSubject(2))));
        assert_eq!(SplitRule::parse("train=1;test=2").unwrap(), SplitRule::explicit([1], [2]).unwrap());
        assert_eq!(SplitRule::parse("odd-train").unwrap(), SplitRule::OddTrain);
    }

    #[test]
    fn csv_export_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        for (a, s) in [(1, 1), (2, 2)] {
            touch(dir.path(), a, s, 1);
        }
        let m = build_manifest(dir.path(), &LabelMapping::Identity).unwrap();
        let out = dir.path().join("manifest.csv");
        write_manifest_csv(&m, &out).unwrap();
        let text = fs::read_to_string(&out).unwrap();
        assert!(text.starts_with("path,action,subject,example,label\n"));
        let back = read_manifest_csv(&out).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.class_count(), 2);
        assert_eq!(back.entries()[1].path, m.entries()[1].path);
    }

    proptest! {
        #[test]
        fn split_is_a_partition(subjects in proptest::collection::btree_set(1u32..40, 1..20)) {
            let ids: Vec<_> = subjects.iter().map(|&s| (1, s, 1)).collect();
            let m = manifest_of(&ids);
            let sp = split(&m, &SplitRule::OddTrain).unwrap();
            prop_assert_eq!(sp.train.len() + sp.test.len(), m.len());
            let tr = sp.train.subjects();
            prop_assert!(tr.is_disjoint(&sp.test.subjects()));
            let mut all: Vec<_> = sp.train.entries().iter().chain(sp.test.entries()).map(|e| e.id).collect();
            all.sort();
            prop_assert_eq!(all, m.entries().iter().map(|e| e.id).collect::<Vec<_>>());
        }
    }
}
