//! Accuracy with half credit for tied votes, the cross-validation harness,
//! paired t-tests and Friedman average ranks.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::data::{split_kfold, Dataset};
use crate::learners::{train_ensemble, Ensemble, EnsembleSpec};
use crate::pruning::{prune, PruneConfig, PruneMethod};
use crate::seed;
use crate::{Error, Result};

/// `1 - mean err01(vote * label)`: a tied vote counts as half right.
pub fn accuracy(e: &Ensemble, d: &Dataset) -> f64 {
    if d.is_empty() {
        return 0.0;
    }
    let score: f64 = (0..d.len())
        .map(|i| match e.vote(d.row(i)) * d.label(i) {
            1 => 1.0,
            0 => 0.5,
            _ => 0.0,
        })
        .sum();
    score / d.len() as f64
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (divisor `n - 1`); 0 for fewer than two values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Win,
    Tie,
    Loss,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TTest {
    pub outcome: Outcome,
    /// Absent when the differences have zero variance.
    pub t_stat: Option<f64>,
    pub dof: usize,
    pub p_value: Option<f64>,
    pub critical_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Two-tailed Student t critical value at significance `level`.
pub fn t_critical(level: f64, dof: usize) -> Result<f64> {
    Ok(t_dist(dof)?.inverse_cdf(1.0 - level / 2.0))
}

/// Two-tailed p-value of a t statistic.
pub fn t_two_tailed_p(t: f64, dof: usize) -> Result<f64> {
    Ok(2.0 * (1.0 - t_dist(dof)?.cdf(t.abs())))
}

fn t_dist(dof: usize) -> Result<StudentsT> {
    StudentsT::new(0.0, 1.0, dof as f64).map_err(|e| {
        Error::InvalidArgument(format!("t distribution with {dof} degrees of freedom: {e}"))
    })
}

/// Two-tailed paired t-test of `a` against `b`. `Win` means `a` is
/// significantly larger.
pub fn paired_ttest(a: &[f64], b: &[f64], level: f64) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::InvalidArgument(
            "a paired t-test needs at least two pairs".into(),
        ));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "significance level {level} is outside (0, 1)"
        )));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let k = d.len();
    let dof = k - 1;
    let critical_value = t_critical(level, dof)?;
    let m = mean(&d);
    let sd = sample_sd(&d);
    if sd == 0.0 {
        let (outcome, note) = if m == 0.0 {
            (Outcome::Tie, "identical samples")
        } else if m > 0.0 {
            (Outcome::Win, "constant positive difference")
        } else {
            (Outcome::Loss, "constant negative difference")
        };
        return Ok(TTest {
            outcome,
            t_stat: None,
            dof,
            p_value: None,
            critical_value,
            note: Some(note.into()),
        });
    }
    let t = m / (sd / (k as f64).sqrt());
    let p = t_two_tailed_p(t, dof)?;
    let outcome = if p >= level {
        Outcome::Tie
    } else if t > 0.0 {
        Outcome::Win
    } else {
        Outcome::Loss
    };
    Ok(TTest {
        outcome,
        t_stat: Some(t),
        dof,
        p_value: Some(p),
        critical_value,
        note: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FriedmanResult {
    pub avg_ranks: Vec<f64>,
    pub chi_sq: f64,
}

/// Average ranks of methods (columns) across datasets (rows); rank 1 is the
/// highest accuracy and equal values share the mean of their ranks.
pub fn friedman_ranks(table: &[Vec<f64>]) -> Result<FriedmanResult> {
    let n = table.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "Friedman ranks need at least two datasets".into(),
        ));
    }
    let k = table[0].len();
    if k < 2 {
        return Err(Error::InvalidArgument(
            "Friedman ranks need at least two methods".into(),
        ));
    }
    if table.iter().any(|row| row.len() != k) {
        return Err(Error::InvalidArgument(
            "rows of the accuracy table differ in length".into(),
        ));
    }
    if table.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "accuracy table has absent cells; restrict the comparison to complete columns".into(),
        ));
    }
    let mut sums = vec![0.0; k];
    for row in table {
        for (s, r) in sums.iter_mut().zip(row_ranks(row)) {
            *s += r;
        }
    }
    let avg_ranks: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
    let (nf, kf) = (n as f64, k as f64);
    let sq: f64 = avg_ranks.iter().map(|r| r * r).sum();
    let chi_sq = 12.0 * nf / (kf * (kf + 1.0)) * (sq - kf * (kf + 1.0) * (kf + 1.0) / 4.0);
    Ok(FriedmanResult { avg_ranks, chi_sq })
}

/// Descending ranks with averaged ties.
pub fn row_ranks(row: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
    let mut ranks = vec![0.0; row.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && row[order[end]] == row[order[start]] {
            end += 1;
        }
        let shared = (start + 1 + end) as f64 / 2.0;
        for &j in &order[start..end] {
            ranks[j] = shared;
        }
        start = end;
    }
    ranks
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub datasets: Vec<Dataset>,
    pub ensemble: EnsembleSpec,
    pub methods: Vec<PruneConfig>,
    pub folds: usize,
    pub seed: u64,
    pub level: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 folds, got {}",
                self.folds
            )));
        }
        if self.ensemble.size == 0 {
            return Err(Error::InvalidArgument(
                "ensemble size must be at least 1".into(),
            ));
        }
        if self.datasets.is_empty() {
            return Err(Error::InvalidArgument("no datasets given".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("no pruning methods given".into()));
        }
        let mut names: Vec<&str> = self.datasets.iter().map(|d| d.name()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(
                "dataset names must be unique".into(),
            ));
        }
        let mut methods: Vec<PruneMethod> = self.methods.iter().map(|m| m.method).collect();
        methods.sort_unstable();
        if methods.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(
                "each pruning method may appear only once".into(),
            ));
        }
        for m in &self.methods {
            m.validate()?;
        }
        Ok(())
    }
}

/// Per-fold results of one method on one dataset; absent if any fold failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    /// Test accuracy per fold, in percent.
    pub folds: Vec<f64>,
    pub sizes: Vec<usize>,
    pub mean: f64,
    pub sd: f64,
    pub size_mean: f64,
    pub size_sd: f64,
}

impl Cell {
    fn new(folds: Vec<f64>, sizes: Vec<usize>) -> Self {
        let sz: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
        Self {
            mean: mean(&folds),
            sd: sample_sd(&folds),
            size_mean: mean(&sz),
            size_sd: sample_sd(&sz),
            folds,
            sizes,
        }
    }
}

/// Cross-validated accuracies, rows sorted by dataset name and columns by
/// method name.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub datasets: Vec<String>,
    pub methods: Vec<PruneMethod>,
    pub cells: Vec<Vec<Option<Cell>>>,
    /// Why a cell is absent, keyed by (dataset, method).
    pub failures: BTreeMap<(String, PruneMethod), String>,
    pub folds: usize,
}

type FoldOutcome = std::result::Result<(f64, usize), String>;

fn run_fold(
    d: &Dataset,
    cfg: &ExperimentConfig,
    methods: &[PruneConfig],
    fold: usize,
) -> Vec<FoldOutcome> {
    let plan = match split_kfold(
        d,
        cfg.folds,
        seed::derive(cfg.seed, &[seed::hash_str(d.name())]),
    ) {
        Ok(p) => p,
        Err(e) => return vec![Err(e.to_string()); methods.len()],
    };
    let (train_idx, test_idx) = plan.split(fold);
    let train = d.subset(&train_idx);
    let test = d.subset(&test_idx);
    let fold_seed = seed::derive(cfg.seed, &[seed::hash_str(d.name()), fold as u64]);
    let ensemble = match train_ensemble(&train, &cfg.ensemble, fold_seed) {
        Ok(e) => e,
        Err(e) => return vec![Err(format!("fold {fold}: training failed: {e}")); methods.len()],
    };
    methods
        .iter()
        .map(|m| {
            prune(&ensemble, &train, m)
                .map(|r| (100.0 * accuracy(&r.sub_ensemble, &test), r.kept.len()))
                .map_err(|e| format!("fold {fold}: {e}"))
        })
        .collect()
}

/// Train, prune and test every method on every fold of every dataset. Work
/// is spread over a thread pool capped by `DIVPRUNE_THREADS`; results do not
/// depend on the schedule.
pub fn cross_validate(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let mut datasets: Vec<&Dataset> = cfg.datasets.iter().collect();
    datasets.sort_by(|a, b| a.name().cmp(b.name()));
    let mut methods = cfg.methods.clone();
    methods.sort_by(|a, b| a.method.name().cmp(b.method.name()));

    let jobs: Vec<(usize, usize)> = (0..datasets.len())
        .flat_map(|di| (0..cfg.folds).map(move |f| (di, f)))
        .collect();
    let run = || -> Vec<Vec<FoldOutcome>> {
        jobs.par_iter()
            .map(|&(di, f)| run_fold(datasets[di], cfg, &methods, f))
            .collect()
    };
    let outcomes = match worker_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };

    let mut cells = Vec::with_capacity(datasets.len());
    let mut failures = BTreeMap::new();
    for (di, d) in datasets.iter().enumerate() {
        let rows = &outcomes[di * cfg.folds..(di + 1) * cfg.folds];
        let mut row = Vec::with_capacity(methods.len());
        for (mi, m) in methods.iter().enumerate() {
            let mut accs = Vec::with_capacity(cfg.folds);
            let mut sizes = Vec::with_capacity(cfg.folds);
            let mut failure = None;
            for fold in rows {
                match &fold[mi] {
                    Ok((a, s)) => {
                        accs.push(*a);
                        sizes.push(*s);
                    }
                    Err(e) => {
                        failure.get_or_insert_with(|| e.clone());
                    }
                }
            }
            match failure {
                Some(e) => {
                    failures.insert((d.name().to_string(), m.method), e);
                    row.push(None);
                }
                None => row.push(Some(Cell::new(accs, sizes))),
            }
        }
        cells.push(row);
    }
    Ok(ResultTable {
        datasets: datasets.iter().map(|d| d.name().to_string()).collect(),
        methods: methods.iter().map(|m| m.method).collect(),
        cells,
        failures,
        folds: cfg.folds,
    })
}

/// Worker cap from `DIVPRUNE_THREADS`, if set to a positive integer.
pub fn worker_cap() -> Option<usize> {
    std::env::var("DIVPRUNE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct WinTieLoss {
    pub win: usize,
    pub tie: usize,
    pub loss: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub folds: usize,
    pub level: f64,
    pub datasets: Vec<DatasetReport>,
    /// Paired t-test tallies of EPBD against each other method, counted from
    /// EPBD's side.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub epbd_wtl: BTreeMap<String, WinTieLoss>,
    /// Friedman average ranks over the methods with no absent cell.
    pub average_ranks: BTreeMap<String, f64>,
    pub friedman_chi_sq: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub excluded_from_ranking: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetReport {
    pub name: String,
    pub methods: BTreeMap<String, Option<CellReport>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub mean: f64,
    pub sd: f64,
    pub folds: Vec<f64>,
    pub size_mean: f64,
    pub size_sd: f64,
}

impl ResultTable {
    pub fn cell(&self, dataset: &str, method: PruneMethod) -> Option<&Cell> {
        let di = self.datasets.iter().position(|d| d == dataset)?;
        let mi = self.methods.iter().position(|&m| m == method)?;
        self.cells[di][mi].as_ref()
    }

    /// Methods whose column has no absent cell.
    pub fn complete_methods(&self) -> Vec<PruneMethod> {
        (0..self.methods.len())
            .filter(|&mi| self.cells.iter().all(|row| row[mi].is_some()))
            .map(|mi| self.methods[mi])
            .collect()
    }

    /// Friedman ranks over the given methods, which must be complete.
    pub fn friedman(&self, methods: &[PruneMethod]) -> Result<FriedmanResult> {
        let cols: Vec<usize> = methods
            .iter()
            .map(|m| {
                self.methods.iter().position(|x| x == m).ok_or_else(|| {
                    Error::InvalidArgument(format!("method {m} is not in the table"))
                })
            })
            .collect::<Result<_>>()?;
        let table: Vec<Vec<f64>> = self
            .cells
            .iter()
            .map(|row| {
                cols.iter()
                    .map(|&c| row[c].as_ref().map_or(f64::NAN, |cell| cell.mean))
                    .collect()
            })
            .collect();
        friedman_ranks(&table)
    }

    /// One row per dataset, a mean/sd column pair per method; absent cells
    /// are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset");
        for m in &self.methods {
            out.push_str(&format!(",{m}_mean,{m}_sd"));
        }
        out.push('\n');
        for (name, row) in self.datasets.iter().zip(&self.cells) {
            out.push_str(name);
            for cell in row {
                match cell {
                    Some(c) => out.push_str(&format!(",{:.6},{:.6}", c.mean, c.sd)),
                    None => out.push_str(",,"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn report(&self, level: f64) -> Result<Report> {
        let datasets = self
            .datasets
            .iter()
            .zip(&self.cells)
            .map(|(name, row)| DatasetReport {
                name: name.clone(),
                methods: self
                    .methods
                    .iter()
                    .zip(row)
                    .map(|(m, c)| {
                        let cell = c.as_ref().map(|c| CellReport {
                            mean: round6(c.mean),
                            sd: round6(c.sd),
                            folds: c.folds.iter().map(|&v| round6(v)).collect(),
                            size_mean: round6(c.size_mean),
                            size_sd: round6(c.size_sd),
                        });
                        (m.to_string(), cell)
                    })
                    .collect(),
            })
            .collect();

        let mut epbd_wtl = BTreeMap::new();
        if let Some(ei) = self.methods.iter().position(|&m| m == PruneMethod::Epbd) {
            for (mi, m) in self.methods.iter().enumerate() {
                if mi == ei {
                    continue;
                }
                let mut tally = WinTieLoss::default();
                for row in &self.cells {
                    if let (Some(a), Some(b)) = (&row[ei], &row[mi]) {
                        match paired_ttest(&a.folds, &b.folds, level)?.outcome {
                            Outcome::Win => tally.win += 1,
                            Outcome::Tie => tally.tie += 1,
                            Outcome::Loss => tally.loss += 1,
                        }
                    }
                }
                epbd_wtl.insert(m.to_string(), tally);
            }
        }

        let complete = self.complete_methods();
        let excluded_from_ranking = self
            .methods
            .iter()
            .filter(|m| !complete.contains(m))
            .map(|m| m.to_string())
            .collect();
        let (average_ranks, friedman_chi_sq) = if complete.len() >= 2 && self.datasets.len() >= 2 {
            let f = self.friedman(&complete)?;
            (
                complete
                    .iter()
                    .zip(&f.avg_ranks)
                    .map(|(m, &r)| (m.to_string(), round6(r)))
                    .collect(),
                Some(round6(f.chi_sq)),
            )
        } else {
            (BTreeMap::new(), None)
        };

        Ok(Report {
            folds: self.folds,
            level,
            datasets,
            epbd_wtl,
            average_ranks,
            friedman_chi_sq,
            excluded_from_ranking,
            failures: self
                .failures
                .iter()
                .map(|((d, m), e)| format!("{d}/{m}: {e}"))
                .collect(),
        })
    }
}
