//! Tabular binary-classification data: CSV ingestion with one-hot encoding of
//! categorical columns, seeded train/test splits, and a synthetic generator.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),
    #[error("file has no data rows")]
    Empty,
    #[error("row {row}, column `{column}`: `{cell}` is not numeric but the column was inferred numeric")]
    NonNumeric { row: usize, column: String, cell: String },
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    FractionOutOfRange(f64),
    #[error("dataset has no rows")]
    NoRows,
    #[error("split leaves an empty side ({train} train / {test} test rows)")]
    EmptySide { train: usize, test: usize },
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow { row: usize, found: usize, expected: usize },
}

/// Dense feature matrix with binary labels. Rows are stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<u8>,
    column_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from row vectors. Panics if rows are ragged or the
    /// label count does not match.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<u8>, column_names: Vec<String>) -> Self {
        assert_eq!(rows.len(), labels.len(), "one label per row");
        let width = column_names.len();
        let mut features = Vec::with_capacity(rows.len() * width);
        for row in rows {
            assert_eq!(row.len(), width, "row width must match column count");
            features.extend(row);
        }
        assert!(labels.iter().all(|&l| l <= 1), "labels must be 0 or 1");
        Self { features, labels, column_names }
    }

    pub fn row_count(&self) -> usize {
        self.labels.len()
    }

    pub fn column_count(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.column_count();
        &self.features[i * w..(i + 1) * w]
    }

    pub fn value(&self, row: usize, column: usize) -> f64 {
        self.features[row * self.column_count() + column]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn positive_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn has_both_classes(&self) -> bool {
        let pos = self.positive_count();
        pos > 0 && pos < self.row_count()
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(rows.len() * self.column_count());
        let mut labels = Vec::with_capacity(rows.len());
        for &r in rows {
            features.extend_from_slice(self.row(r));
            labels.push(self.labels[r]);
        }
        Dataset { features, labels, column_names: self.column_names.clone() }
    }

    /// Splits off the trailing `fraction` of rows (rounded) as a holdout set.
    /// Both parts are non-empty whenever there are at least two rows.
    pub fn carve_tail(&self, fraction: f64) -> (Dataset, Dataset) {
        let n = self.row_count();
        let mut tail = (fraction * n as f64).round() as usize;
        if n >= 2 {
            tail = tail.clamp(1, n - 1);
        }
        let head: Vec<usize> = (0..n - tail).collect();
        let rest: Vec<usize> = (n - tail..n).collect();
        (self.select(&head), self.select(&rest))
    }

    /// Reads a CSV file with a header row. See [`Dataset::from_csv_reader`].
    pub fn load_csv(
        path: impl AsRef<Path>,
        label_column: &str,
        positive_label: &str,
        delimiter: u8,
    ) -> Result<Self, DataError> {
        let path = path.as_ref();
        let file =
            std::fs::File::open(path).map_err(|source| DataError::Io { path: path.display().to_string(), source })?;
        Self::from_csv_reader(file, label_column, positive_label, delimiter)
    }

    /// Column types are inferred from the first data row: a cell that parses
    /// as a number makes the column numeric, anything else makes it
    /// categorical. Categorical columns become one indicator column per
    /// category, in order of first appearance, named `column=category`.
    pub fn from_csv_reader<R: std::io::Read>(
        reader: R,
        label_column: &str,
        positive_label: &str,
        delimiter: u8,
    ) -> Result<Self, DataError> {
        let mut reader =
            csv::ReaderBuilder::new().delimiter(delimiter).has_headers(true).flexible(true).from_reader(reader);
        let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let label_idx = header
            .iter()
            .position(|h| h == label_column)
            .ok_or_else(|| DataError::MissingLabelColumn(label_column.to_string()))?;

        let mut records = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() != header.len() {
                return Err(DataError::RaggedRow { row: i + 1, found: record.len(), expected: header.len() });
            }
            records.push(record);
        }
        if records.is_empty() {
            return Err(DataError::Empty);
        }

        enum Column {
            Numeric(Vec<f64>),
            Categorical { categories: Vec<String>, codes: Vec<usize> },
        }

        let mut columns: Vec<(usize, Column)> = Vec::new();
        for (c, name) in header.iter().enumerate() {
            if c == label_idx {
                continue;
            }
            let first = records[0][c].trim();
            let column = if first.parse::<f64>().is_ok() {
                let mut values = Vec::with_capacity(records.len());
                for (r, rec) in records.iter().enumerate() {
                    let cell = rec[c].trim();
                    let v = cell.parse::<f64>().map_err(|_| DataError::NonNumeric {
                        row: r + 1,
                        column: name.clone(),
                        cell: cell.to_string(),
                    })?;
                    values.push(v);
                }
                Column::Numeric(values)
            } else {
                let mut categories: Vec<String> = Vec::new();
                let mut codes = Vec::with_capacity(records.len());
                for rec in &records {
                    let cell = rec[c].trim();
                    let code = match categories.iter().position(|k| k == cell) {
                        Some(code) => code,
                        None => {
                            categories.push(cell.to_string());
                            categories.len() - 1
                        }
                    };
                    codes.push(code);
                }
                Column::Categorical { categories, codes }
            };
            columns.push((c, column));
        }

        let mut column_names = Vec::new();
        for (c, column) in &columns {
            match column {
                Column::Numeric(_) => column_names.push(header[*c].clone()),
                Column::Categorical { categories, .. } => {
                    column_names.extend(categories.iter().map(|k| format!("{}={k}", header[*c])))
                }
            }
        }

        let width = column_names.len();
        let mut features = Vec::with_capacity(records.len() * width);
        for r in 0..records.len() {
            for (_, column) in &columns {
                match column {
                    Column::Numeric(values) => features.push(values[r]),
                    Column::Categorical { categories, codes } => {
                        features.extend((0..categories.len()).map(|k| f64::from(u8::from(k == codes[r]))))
                    }
                }
            }
        }
        let labels = records.iter().map(|rec| u8::from(rec[label_idx].trim() == positive_label)).collect();
        Ok(Self { features, labels, column_names })
    }

    /// Two overlapping Gaussian classes plus pure-noise columns.
    pub fn synthetic(spec: &SyntheticSpec) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let width = spec.informative + spec.noise_features;
        let mut rows = Vec::with_capacity(spec.rows);
        let mut labels = Vec::with_capacity(spec.rows);
        for _ in 0..spec.rows {
            let label = u8::from(rng.gen_bool(spec.positive_rate));
            let shift = if label == 1 { spec.separation / 2.0 } else { -spec.separation / 2.0 };
            let mut row = Vec::with_capacity(width);
            for j in 0..width {
                let z: f64 = StandardNormal.sample(&mut rng);
                // Informative columns get progressively weaker signal.
                let signal = if j < spec.informative { shift / (1.0 + j as f64) } else { 0.0 };
                row.push(z + signal);
            }
            rows.push(row);
            labels.push(label);
        }
        let names = (0..width).map(|j| format!("x{j}")).collect();
        Dataset::from_rows(rows, labels, names)
    }
}

/// Parameters of [`Dataset::synthetic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub rows: usize,
    pub informative: usize,
    pub noise_features: usize,
    /// Distance between class means along the first informative axis.
    pub separation: f64,
    pub positive_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self { rows: 300, informative: 3, noise_features: 2, separation: 1.5, positive_rate: 0.35, seed: 7 }
    }
}

/// Train/test partition of one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub seed: u64,
    pub train_fraction: f64,
}

/// Shuffles the row order with `seed` and cuts after
/// `round(train_fraction × rows)` rows. When `stratified`, each class is
/// shuffled and cut separately, so the train size is the sum of the per-class
/// rounded sizes.
pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64, stratified: bool) -> Result<SplitPair, DataError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::FractionOutOfRange(train_fraction));
    }
    let n = dataset.row_count();
    if n == 0 {
        return Err(DataError::NoRows);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (train_rows, test_rows) = if stratified {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for class in [0u8, 1] {
            let mut rows: Vec<usize> = (0..n).filter(|&i| dataset.labels[i] == class).collect();
            rows.shuffle(&mut rng);
            let cut = (train_fraction * rows.len() as f64).round() as usize;
            train.extend_from_slice(&rows[..cut]);
            test.extend_from_slice(&rows[cut..]);
        }
        train.shuffle(&mut rng);
        test.shuffle(&mut rng);
        (train, test)
    } else {
        let mut rows: Vec<usize> = (0..n).collect();
        rows.shuffle(&mut rng);
        let cut = (train_fraction * n as f64).round() as usize;
        let test = rows.split_off(cut);
        (rows, test)
    };
    if train_rows.is_empty() || test_rows.is_empty() {
        return Err(DataError::EmptySide { train: train_rows.len(), test: test_rows.len() });
    }
    Ok(SplitPair {
        train: dataset.select(&train_rows),
        test: dataset.select(&test_rows),
        train_rows,
        test_rows,
        seed,
        train_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn numbered(n: usize) -> Dataset {
        let rows = (0..n).map(|i| vec![i as f64]).collect();
        let labels = (0..n).map(|i| (i % 2) as u8).collect();
        Dataset::from_rows(rows, labels, vec!["x".into()])
    }

    #[test]
    fn one_hot_encodes_categorical_columns() {
        let text = "color,size,y\nx,1.5,yes\ny,2,no\nx,3,yes\n";
        let ds = Dataset::from_csv_reader(text.as_bytes(), "y", "yes", b',').unwrap();
        assert_eq!(ds.column_names(), ["color=x", "color=y", "size"]);
        assert_eq!(ds.row(0), [1.0, 0.0, 1.5]);
        assert_eq!(ds.row(1), [0.0, 1.0, 2.0]);
        assert_eq!(ds.labels(), [1, 0, 1]);
    }

    #[test]
    fn numeric_file_passes_through() {
        let text = "a;b;label\n1;-2.5;1\n0.25;4;0\n";
        let ds = Dataset::from_csv_reader(text.as_bytes(), "label", "1", b';').unwrap();
        assert_eq!(ds.row(0), [1.0, -2.5]);
        assert_eq!(ds.row(1), [0.25, 4.0]);
        assert_eq!(ds.labels(), [1, 0]);
    }

    #[test]
    fn quoted_fields_follow_rfc4180() {
        let text = "\"job\",\"y\"\n\"admin., \"\"senior\"\"\",\"yes\"\n\"blue-collar\",\"no\"\n";
        let ds = Dataset::from_csv_reader(text.as_bytes(), "y", "yes", b',').unwrap();
        assert_eq!(ds.column_names()[0], "job=admin., \"senior\"");
    }

    #[test]
    fn csv_errors() {
        let missing = Dataset::from_csv_reader("a,b\n1,2\n".as_bytes(), "y", "1", b',');
        assert!(matches!(missing, Err(DataError::MissingLabelColumn(_))));
        let empty = Dataset::from_csv_reader("a,y\n".as_bytes(), "y", "1", b',');
        assert!(matches!(empty, Err(DataError::Empty)));
        let bad = Dataset::from_csv_reader("a,y\n1,1\nabc,0\n".as_bytes(), "y", "1", b',');
        match bad {
            Err(DataError::NonNumeric { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "a");
            }
            other => panic!("unexpected {other:?}"),
        }
        let nofile = Dataset::load_csv("/nonexistent/file.csv", "y", "1", b',');
        assert!(matches!(nofile, Err(DataError::Io { .. })));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ds = numbered(100);
        let s = split(&ds, 0.67, 5, false).unwrap();
        assert_eq!(s.train.row_count(), 67);
        assert_eq!(s.test.row_count(), 33);
        assert_eq!(s, split(&ds, 0.67, 5, false).unwrap());

        let tiny = split(&numbered(3), 0.67, 1, false).unwrap();
        assert_eq!((tiny.train.row_count(), tiny.test.row_count()), (2, 1));
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let ds = numbered(10);
        for f in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(matches!(split(&ds, f, 0, false), Err(DataError::FractionOutOfRange(_))));
        }
    }

    #[test]
    fn resplitting_changes_membership() {
        let ds = numbered(100);
        let first = split(&ds, 0.67, 0, false).unwrap();
        let mut reference = first.train_rows.clone();
        reference.sort_unstable();
        let differs = (1..100u64).any(|seed| {
            let mut rows = split(&ds, 0.67, seed, false).unwrap().train_rows;
            rows.sort_unstable();
            rows != reference
        });
        assert!(differs);
    }

    #[test]
    fn stratified_split_keeps_class_ratio() {
        let ds = numbered(100);
        let s = split(&ds, 0.7, 3, true).unwrap();
        assert_eq!(s.train.positive_count(), 35);
        assert_eq!(s.test.positive_count(), 15);
    }

    #[test]
    fn carve_tail_keeps_both_sides() {
        let (head, tail) = numbered(10).carve_tail(0.2);
        assert_eq!((head.row_count(), tail.row_count()), (8, 2));
        assert_eq!(tail.row(0), [8.0]);
        let (head, tail) = numbered(2).carve_tail(0.01);
        assert_eq!((head.row_count(), tail.row_count()), (1, 1));
    }

    proptest! {
        #[test]
        fn split_partitions_rows(n in 2usize..200, frac in 0.01f64..0.99, seed in any::<u64>()) {
            let ds = numbered(n);
            let cut = (frac * n as f64).round() as usize;
            match split(&ds, frac, seed, false) {
                Ok(s) => {
                    prop_assert_eq!(s.train_rows.len(), cut);
                    let mut all: Vec<usize> = s.train_rows.iter().chain(&s.test_rows).copied().collect();
                    all.sort_unstable();
                    prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
                }
                Err(DataError::EmptySide { .. }) => prop_assert!(cut == 0 || cut == n),
                Err(e) => prop_assert!(false, "unexpected {}", e),
            }
        }

        #[test]
        fn one_hot_groups_have_single_one(cats in prop::collection::vec(0u8..4, 1..30)) {
            let mut text = String::from("c,y\n");
            for c in &cats {
                text.push_str(&format!("k{c},1\n"));
            }
            let ds = Dataset::from_csv_reader(text.as_bytes(), "y", "1", b',').unwrap();
            for r in 0..ds.row_count() {
                prop_assert_eq!(ds.row(r).iter().sum::<f64>(), 1.0);
            }
        }
    }
}
