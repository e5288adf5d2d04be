//! Dataset ingestion, stratified k-fold splitting and bootstrap resampling.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::seed;
use crate::{Error, Result};

/// Feature matrix with binary labels in {-1, +1}.
///
/// Features are stored row-major in one flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    feature_names: Vec<String>,
    n_features: usize,
    features: Vec<f64>,
    labels: Vec<i8>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, rows: Vec<Vec<f64>>, labels: Vec<i8>) -> Result<Self> {
        let n_features = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_features) {
            return Err(Error::InvalidDataset(
                "feature matrix is not rectangular".into(),
            ));
        }
        let features = rows.into_iter().flatten().collect();
        let names = (0..n_features).map(|j| format!("f{j}")).collect();
        Self::from_parts(name.into(), names, n_features, features, labels)
    }

    fn from_parts(
        name: String,
        feature_names: Vec<String>,
        n_features: usize,
        features: Vec<f64>,
        labels: Vec<i8>,
    ) -> Result<Self> {
        if features.len() != labels.len() * n_features {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {} feature values with {} features per row",
                labels.len(),
                features.len(),
                n_features
            )));
        }
        if let Some(i) = labels.iter().position(|&y| y != 1 && y != -1) {
            return Err(Error::InvalidDataset(format!(
                "label {} at row {i} is not -1 or +1",
                labels[i]
            )));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite feature value at row {}",
                i / n_features.max(1)
            )));
        }
        Ok(Self {
            name,
            feature_names,
            n_features,
            features,
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn value(&self, i: usize, feature: usize) -> f64 {
        self.features[i * self.n_features + feature]
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> i8 {
        self.labels[i]
    }

    /// Number of (+1, -1) labels.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&y| y == 1).count();
        (pos, self.len() - pos)
    }

    /// Checks the preconditions shared by all training entry points.
    pub fn ensure_trainable(&self) -> Result<()> {
        if self.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "'{}' has {} instances; at least 2 are required",
                self.name,
                self.len()
            )));
        }
        let (pos, neg) = self.class_counts();
        if pos == 0 || neg == 0 {
            return Err(Error::InvalidDataset(format!(
                "'{}' contains a single class",
                self.name
            )));
        }
        Ok(())
    }

    /// Rows selected by `indices`, in that order (duplicates allowed).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            name: self.name.clone(),
            feature_names: self.feature_names.clone(),
            n_features: self.n_features,
            features,
            labels,
        }
    }
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// Purely numeric strings are column indices, anything else a header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Name(n) => f.write_str(n),
            LabelColumn::Index(i) => write!(f, "{i}"),
        }
    }
}

/// Loads a headed, comma-separated file. The dataset is named after the
/// file stem.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &LabelColumn,
    positive_label: &str,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    read_csv(file, &name, label_column, positive_label)
}

/// Parses CSV from any reader. Rows equal to `positive_label` in the label
/// column become +1, the one other value becomes -1.
pub fn read_csv<R: Read>(
    reader: R,
    name: &str,
    label_column: &LabelColumn,
    positive_label: &str,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::Csv("missing header row".into()));
    }
    let label_idx = match label_column {
        LabelColumn::Index(i) if *i < header.len() => *i,
        LabelColumn::Index(i) => return Err(Error::UnknownColumn(i.to_string())),
        LabelColumn::Name(n) => header
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| Error::UnknownColumn(n.clone()))?,
    };
    let n_features = header.len() - 1;
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        for (j, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::MissingValue {
                    row,
                    column: header[j].clone(),
                });
            }
            if j == label_idx {
                raw_labels.push(cell.to_string());
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => features.push(v),
                _ => {
                    return Err(Error::ParseFeature {
                        row,
                        column: header[j].clone(),
                        value: cell.to_string(),
                    })
                }
            }
        }
    }
    if raw_labels.is_empty() {
        return Err(Error::InvalidDataset(format!("'{name}' has no data rows")));
    }

    let mut distinct: BTreeMap<&str, usize> = BTreeMap::new();
    for l in &raw_labels {
        *distinct.entry(l.as_str()).or_default() += 1;
    }
    if distinct.len() != 2 {
        return Err(Error::LabelCardinality {
            found: distinct.len(),
            values: distinct.keys().copied().collect::<Vec<_>>().join(", "),
        });
    }
    if !distinct.contains_key(positive_label) {
        return Err(Error::UnknownPositiveLabel(positive_label.to_string()));
    }
    let labels = raw_labels
        .iter()
        .map(|l| if l == positive_label { 1 } else { -1 })
        .collect();
    Dataset::from_parts(
        name.to_string(),
        feature_names,
        n_features,
        features,
        labels,
    )
}

/// Assignment of every instance to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// (train, test) index lists for `fold`, both ascending.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.assignments.len()).partition(|&i| self.assignments[i] != fold)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified k-fold assignment. Each class is shuffled and dealt round-robin,
/// the second class continuing where the first stopped, so fold sizes differ
/// by at most one and per-fold class counts differ by at most one.
pub fn split_kfold(d: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    let n = d.len();
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!(
            "fold count {k} must satisfy 2 <= k <= {n} (number of instances)"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut assignments = vec![0; n];
    let mut slot = 0;
    for class in [1i8, -1] {
        let mut members: Vec<usize> = (0..n).filter(|&i| d.label(i) == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignments[i] = slot % k;
            slot += 1;
        }
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
    })
}

/// `n` indices drawn uniformly with replacement from `0..n`.
pub fn bootstrap_indices(n: usize, seed: u64) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::InvalidDataset(
            "cannot bootstrap an empty dataset".into(),
        ));
    }
    let mut rng = seed::rng(seed);
    Ok((0..n).map(|_| rng.random_range(0..n)).collect())
}

pub fn bootstrap_sample(d: &Dataset, seed: u64) -> Result<Vec<usize>> {
    bootstrap_indices(d.len(), seed)
}

/// Two isotropic unit-variance Gaussians in the plane, centred at
/// `±separation/2` on both axes. Labels alternate +1, -1, so classes are
/// balanced. Smaller separations mean more overlap.
pub fn two_gaussians(n: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "two_gaussians needs at least 2 instances".into(),
        ));
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = seed::rng(seed);
    let half = separation / 2.0;
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y: i8 = if i % 2 == 0 { 1 } else { -1 };
        let centre = half * f64::from(y);
        rows.push(vec![
            centre + normal.sample(&mut rng),
            centre + normal.sample(&mut rng),
        ]);
        labels.push(y);
    }
    Dataset::new("two_gaussians", rows, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(n: usize) -> Dataset {
        let rows = (0..n).map(|i| vec![i as f64]).collect();
        let labels = (0..n).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect();
        Dataset::new("toy", rows, labels).unwrap()
    }

    fn parse(text: &str) -> Result<Dataset> {
        read_csv(text.as_bytes(), "t", &LabelColumn::Name("y".into()), "yes")
    }

    #[test]
    fn csv_maps_positive_label() {
        let d = parse("a,b,y\n1,2,yes\n3,4,no\n5,6,no\n7.5,-8,yes\n").unwrap();
        assert_eq!(d.labels(), &[1, -1, -1, 1]);
        assert_eq!(d.n_features(), 2);
        assert_eq!(d.row(3), &[7.5, -8.0]);
        assert_eq!(d.feature_names(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn csv_label_by_index() {
        let d = read_csv(
            "y,a\nno,1\nyes,2\n".as_bytes(),
            "t",
            &LabelColumn::Index(0),
            "yes",
        )
        .unwrap();
        assert_eq!(d.labels(), &[-1, 1]);
        assert_eq!(d.row(1), &[2.0]);
    }

    #[test]
    fn csv_rejects_three_labels() {
        let err = parse("a,y\n1,yes\n2,no\n3,maybe\n").unwrap_err();
        assert!(
            matches!(err, Error::LabelCardinality { found: 3, .. }),
            "{err}"
        );
    }

    #[test]
    fn csv_missing_cell_names_row_and_column() {
        let err = parse("a,b,y\n1,2,yes\n3,,no\n").unwrap_err();
        match err {
            Error::MissingValue { row, column } => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn csv_non_numeric_feature() {
        let err = parse("a,y\n1,yes\nabc,no\n").unwrap_err();
        assert!(matches!(err, Error::ParseFeature { row: 2, .. }), "{err}");
        let err = parse("a,y\n1,yes\nNaN,no\n").unwrap_err();
        assert!(matches!(err, Error::ParseFeature { .. }), "{err}");
    }

    #[test]
    fn csv_unknown_positive_label_and_column() {
        assert!(matches!(
            read_csv(
                "a,y\n1,p\n2,q\n".as_bytes(),
                "t",
                &LabelColumn::Name("y".into()),
                "r"
            ),
            Err(Error::UnknownPositiveLabel(_))
        ));
        assert!(matches!(
            read_csv(
                "a,y\n1,p\n2,q\n".as_bytes(),
                "t",
                &LabelColumn::Name("z".into()),
                "p"
            ),
            Err(Error::UnknownColumn(_))
        ));
        assert!(matches!(
            read_csv(
                "a,y\n1,p\n2,q,3\n".as_bytes(),
                "t",
                &LabelColumn::Name("y".into()),
                "p"
            ),
            Err(Error::Csv(_))
        ));
    }

    #[test]
    fn label_column_from_str() {
        assert_eq!("3".parse::<LabelColumn>().unwrap(), LabelColumn::Index(3));
        assert_eq!(
            "label".parse::<LabelColumn>().unwrap(),
            LabelColumn::Name("label".into())
        );
    }

    #[test]
    fn kfold_sizes() {
        let plan = split_kfold(&toy(10), 5, 1).unwrap();
        assert_eq!(plan.fold_sizes(), vec![2; 5]);
        let mut sizes = split_kfold(&toy(11), 5, 1).unwrap().fold_sizes();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(sizes, vec![3, 2, 2, 2, 2]);
    }

    #[test]
    fn kfold_deterministic() {
        let d = toy(37);
        assert_eq!(
            split_kfold(&d, 5, 99).unwrap(),
            split_kfold(&d, 5, 99).unwrap()
        );
        assert_ne!(
            split_kfold(&d, 5, 99).unwrap().assignments,
            split_kfold(&d, 5, 100).unwrap().assignments
        );
    }

    #[test]
    fn kfold_rejects_bad_k() {
        assert!(split_kfold(&toy(4), 5, 0).is_err());
        assert!(split_kfold(&toy(4), 1, 0).is_err());
    }

    #[test]
    fn bootstrap_edge_cases() {
        assert_eq!(bootstrap_indices(1, 5).unwrap(), vec![0]);
        assert!(bootstrap_indices(0, 5).is_err());
        let d = toy(50);
        assert_eq!(
            bootstrap_sample(&d, 3).unwrap(),
            bootstrap_sample(&d, 3).unwrap()
        );
    }

    #[test]
    fn bootstrap_distinct_fraction() {
        // Monte-Carlo: the expected distinct fraction is 1 - (1 - 1/n)^n, close to 1 - 1/e.
        let n = 1000;
        let expected = 1.0 - (1.0 - 1.0 / n as f64).powi(n as i32);
        assert!((expected - (1.0 - (-1.0f64).exp())).abs() < 1e-3);
        let fractions: Vec<f64> = (0..100)
            .map(|seed| {
                let idx = bootstrap_indices(n, seed).unwrap();
                let mut seen = vec![false; n];
                idx.iter().for_each(|&i| seen[i] = true);
                seen.iter().filter(|&&s| s).count() as f64 / n as f64
            })
            .collect();
        let mean = fractions.iter().sum::<f64>() / fractions.len() as f64;
        assert!((mean - expected).abs() < 0.03, "mean {mean}");
        // per-seed standard deviation is about 0.01
        assert!(fractions.iter().all(|f| (f - expected).abs() < 0.05));
    }

    #[test]
    fn synthetic_is_balanced_and_seeded() {
        let a = two_gaussians(200, 2.0, 7).unwrap();
        assert_eq!(a.class_counts(), (100, 100));
        assert_eq!(a, two_gaussians(200, 2.0, 7).unwrap());
        assert_ne!(a, two_gaussians(200, 2.0, 8).unwrap());
    }

    proptest! {
        #[test]
        fn folds_partition_and_stratify(n in 2usize..120, k in 2usize..10, seed in any::<u64>(), pos_every in 1usize..5) {
            prop_assume!(k <= n);
            let rows = (0..n).map(|i| vec![i as f64]).collect();
            let labels: Vec<i8> = (0..n).map(|i| if i % pos_every == 0 { 1 } else { -1 }).collect();
            let d = Dataset::new("p", rows, labels).unwrap();
            let plan = split_kfold(&d, k, seed).unwrap();
            let sizes = plan.fold_sizes();
            prop_assert_eq!(sizes.iter().sum::<usize>(), n);
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            for class in [1i8, -1] {
                let mut per = vec![0usize; k];
                for i in 0..n {
                    if d.label(i) == class { per[plan.assignments[i]] += 1; }
                }
                prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
            }
            let mut seen = vec![0; n];
            for f in 0..k {
                let (train, test) = plan.split(f);
                prop_assert_eq!(train.len() + test.len(), n);
                test.iter().for_each(|&i| seen[i] += 1);
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }

        #[test]
        fn bootstrap_in_range(n in 1usize..500, seed in any::<u64>()) {
            let idx = bootstrap_indices(n, seed).unwrap();
            prop_assert_eq!(idx.len(), n);
            prop_assert!(idx.iter().all(|&i| i < n));
        }
    }
}
