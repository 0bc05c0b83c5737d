//! Histogram selection tasks (most common bin, median bin) and an ε-sweep
//! experiment harness comparing permute-and-flip against the exponential
//! mechanism on them. Both tasks have sensitivity 1 under add/remove of a
//! single record, so they use `PrivacyParams::new(ε, 1.0)`.

use std::io;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{error_ratio, expected_error};
use crate::exact::{pmf_exponential, pmf_pf_dp};
use crate::scores::{PrivacyParams, QualityScores};
use crate::{Error, Mechanism, Result};

/// A labelled histogram. Bin order is meaningful: the median task treats the
/// file order as the ordered domain of the underlying values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    labels: Vec<String>,
    counts: Vec<u64>,
}

impl Histogram {
    pub fn new(labels: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        if labels.len() != counts.len() {
            return Err(Error::LengthMismatch(labels.len(), counts.len()));
        }
        if labels.is_empty() {
            return Err(Error::InvalidArgument("histogram has no bins".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate bin label {l:?}")));
            }
        }
        Ok(Self { labels, counts })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Reads a histogram from a CSV file with the exact header `bin,count`.
pub fn load_histogram<P: AsRef<Path>>(path: P) -> Result<Histogram> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())
        .map_err(csv_to_error)?;
    {
        let headers = reader.headers().map_err(csv_to_error)?;
        if headers.len() != 2 || &headers[0] != "bin" || &headers[1] != "count" {
            return Err(Error::Parse {
                line: 1,
                msg: format!(
                    "expected header \"bin,count\", found {:?}",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
    }
    let mut labels = Vec::new();
    let mut counts = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_to_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let count: u64 = record[1].trim().parse().map_err(|e| Error::Parse {
            line,
            msg: format!("bad count {:?}: {e}", &record[1]),
        })?;
        labels.push(record[0].to_string());
        counts.push(count);
    }
    Histogram::new(labels, counts)
}

fn csv_to_error(e: csv::Error) -> Error {
    let line = match e.position() {
        Some(p) => p.line(),
        None => 0,
    };
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse { line, msg: format!("{other:?}") },
    }
}

/// Selection task over a histogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Mode,
    Median,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Mode => "mode",
            Task::Median => "median",
        }
    }

    pub fn scores(self, histogram: &Histogram) -> Result<QualityScores> {
        match self {
            Task::Mode => mode_scores(histogram),
            Task::Median => median_scores(histogram),
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mode" => Ok(Task::Mode),
            "median" => Ok(Task::Median),
            other => Err(Error::InvalidArgument(format!(
                "unknown task {other:?} (expected mode or median)"
            ))),
        }
    }
}

/// Most-common-bin task: the quality of bin r is its count. Sensitivity 1.
pub fn mode_scores(histogram: &Histogram) -> Result<QualityScores> {
    QualityScores::new(histogram.counts.iter().map(|&c| c as f64).collect())
}

/// Median-bin task: with B_r records strictly before bin r and A_r strictly
/// after, the quality is −max(0, B_r − ⌊N/2⌋, A_r − ⌊N/2⌋) — the number of
/// records that must be discarded before r becomes a median. Sensitivity 1.
pub fn median_scores(histogram: &Histogram) -> Result<QualityScores> {
    let n = histogram.len();
    let total: u64 = histogram.total();
    let half = (total / 2) as i128;
    let mut values = Vec::with_capacity(n);
    let mut before: i128 = 0;
    for (r, &c) in histogram.counts.iter().enumerate() {
        let after = (total - histogram.counts[..=r].iter().sum::<u64>()) as i128;
        let badness = 0i128.max(before - half).max(after - half);
        values.push(-(badness as f64));
        before += c as i128;
    }
    QualityScores::new(values)
}

/// The standard benchmark fixture: `bins` bins with counts ⌊10⁶ / r^1.1⌋,
/// r = 1…bins, labelled by rank.
pub fn power_law_histogram(bins: usize) -> Result<Histogram> {
    let labels = (1..=bins).map(|r| r.to_string()).collect();
    let counts = (1..=bins)
        .map(|r| (1e6 / (r as f64).powf(1.1)).floor() as u64)
        .collect();
    Histogram::new(labels, counts)
}

/// One line of the sweep experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub epsilon: f64,
    pub mechanism: Mechanism,
    pub task: Task,
    pub expected_error: f64,
    /// expected_error / (permute-and-flip's expected_error at the same ε and
    /// task); 1 for the permute-and-flip rows themselves, and 0/0 counts as 1.
    pub ratio_vs_pf: f64,
}

/// Exact expected error of a mechanism on a task at privacy level ε.
pub fn task_expected_error(
    histogram: &Histogram,
    task: Task,
    mechanism: Mechanism,
    epsilon: f64,
) -> Result<f64> {
    let scores = task.scores(histogram)?;
    let params = PrivacyParams::new(epsilon, 1.0)?;
    let dist = match mechanism {
        Mechanism::PermuteAndFlip => pmf_pf_dp(&scores, &params),
        Mechanism::Exponential => pmf_exponential(&scores, &params),
        Mechanism::ReportNoisyMax => {
            return Err(Error::InvalidArgument(
                "the sweep compares the closed-pmf mechanisms pf and em".into(),
            ))
        }
    };
    expected_error(&dist, &scores)
}

/// Runs the sweep: for every ε (in the given order), every task, and both
/// mechanisms (pf first), the exact expected error and its ratio to
/// permute-and-flip.
pub fn sweep_experiment(histogram: &Histogram, epsilons: &[f64]) -> Result<Vec<ExperimentRow>> {
    let mut rows = Vec::with_capacity(epsilons.len() * 4);
    for &epsilon in epsilons {
        for task in [Task::Mode, Task::Median] {
            let pf = task_expected_error(histogram, task, Mechanism::PermuteAndFlip, epsilon)?;
            let em = task_expected_error(histogram, task, Mechanism::Exponential, epsilon)?;
            rows.push(ExperimentRow {
                epsilon,
                mechanism: Mechanism::PermuteAndFlip,
                task,
                expected_error: pf,
                ratio_vs_pf: error_ratio(pf, pf),
            });
            rows.push(ExperimentRow {
                epsilon,
                mechanism: Mechanism::Exponential,
                task,
                expected_error: em,
                ratio_vs_pf: error_ratio(em, pf),
            });
        }
    }
    Ok(rows)
}

/// Writes rows as CSV with header `epsilon,mechanism,task,expected_error,ratio_vs_pf`.
pub fn write_experiment_csv<W: io::Write>(rows: &[ExperimentRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row).map_err(csv_to_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Inverts ε ↦ expected error for a task/mechanism by geometric bisection on
/// [1e−6, 100]. The error is strictly decreasing in ε, so a target outside
/// the bracket's error range is rejected with the achievable interval.
pub fn epsilon_for_target_error(
    histogram: &Histogram,
    task: Task,
    mechanism: Mechanism,
    target: f64,
) -> Result<f64> {
    if !(target.is_finite() && target > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target error ({target}) must be positive"
        )));
    }
    let (mut lo, mut hi) = (1e-6f64, 100.0f64);
    let err_at = |eps: f64| task_expected_error(histogram, task, mechanism, eps);
    let err_lo = err_at(lo)?;
    let err_hi = err_at(hi)?;
    if target > err_lo || target < err_hi {
        return Err(Error::OutOfRange { target, min: err_hi, max: err_lo });
    }
    for _ in 0..200 {
        if hi / lo <= 1.0 + 1e-6 {
            break;
        }
        let mid = (lo * hi).sqrt();
        if err_at(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eps_hat = (lo * hi).sqrt();
    let achieved = err_at(eps_hat)?;
    if (achieved - target).abs() > 1e-3 * target {
        return Err(Error::Accuracy {
            requested: target,
            achieved: (achieved - target).abs() / target,
            estimate: eps_hat,
        });
    }
    Ok(eps_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn histogram(counts: &[u64]) -> Histogram {
        Histogram::new(
            (0..counts.len()).map(|i| format!("b{i}")).collect(),
            counts.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn histogram_validation() {
        assert!(matches!(
            Histogram::new(vec!["a".into()], vec![1, 2]),
            Err(Error::LengthMismatch(1, 2))
        ));
        assert!(matches!(
            Histogram::new(vec![], vec![]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            Histogram::new(vec!["a".into(), "a".into()], vec![1, 2]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("good.csv");
        std::fs::write(&good, "bin,count\nalpha,3\nbeta,1\ngamma,0\n").unwrap();
        let h = load_histogram(&good).unwrap();
        assert_eq!(h.labels(), ["alpha", "beta", "gamma"]);
        assert_eq!(h.counts(), [3, 1, 0]);
        assert_eq!(h.total(), 4);

        let bad_header = dir.path().join("bad_header.csv");
        std::fs::write(&bad_header, "label,n\nalpha,3\n").unwrap();
        assert!(matches!(
            load_histogram(&bad_header),
            Err(Error::Parse { line: 1, .. })
        ));

        let bad_count = dir.path().join("bad_count.csv");
        std::fs::write(&bad_count, "bin,count\nalpha,3\nbeta,x\n").unwrap();
        match load_histogram(&bad_count) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }

        assert!(matches!(
            load_histogram(dir.path().join("missing.csv")),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn task_score_examples() {
        let h = histogram(&[3, 1, 0]);
        assert_eq!(mode_scores(&h).unwrap().values(), &[3.0, 1.0, 0.0]);
        // N = 4, ⌊N/2⌋ = 2: badness 0 / 1 / 2.
        assert_eq!(median_scores(&h).unwrap().values(), &[0.0, -1.0, -2.0]);

        // A bin strictly containing the middle record is the unique optimum.
        let h = histogram(&[1, 10, 1]);
        let q = median_scores(&h).unwrap();
        assert_eq!(q.values(), &[-5.0, 0.0, -5.0]);
    }

    #[test]
    fn median_scores_have_unit_sensitivity() {
        use rand::Rng;
        let mut rng = crate::mechanisms::stream_rng(7, 0);
        for _ in 0..200 {
            let n = rng.gen_range(1..=8);
            let counts: Vec<u64> = (0..n).map(|_| rng.gen_range(0..6)).collect();
            let base = median_scores(&histogram(&counts)).unwrap();
            for r in 0..n {
                // Add one record to bin r.
                let mut plus = counts.clone();
                plus[r] += 1;
                let neighbor = median_scores(&histogram(&plus)).unwrap();
                let worst = base
                    .values()
                    .iter()
                    .zip(neighbor.values())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                assert!(worst <= 1.0 + 1e-12, "counts {counts:?} bin {r}: {worst}");
            }
        }
    }

    #[test]
    fn sweep_rows_and_csv_shape() {
        let h = histogram(&[5, 3, 1]);
        let rows = sweep_experiment(&h, &[0.5, 1.0]).unwrap();
        assert_eq!(rows.len(), 8);
        for chunk in rows.chunks(2) {
            let (pf, em) = (&chunk[0], &chunk[1]);
            assert_eq!(pf.mechanism, Mechanism::PermuteAndFlip);
            assert_eq!(em.mechanism, Mechanism::Exponential);
            assert_eq!(pf.ratio_vs_pf, 1.0);
            assert!(em.expected_error >= pf.expected_error - 1e-12);
            assert!(em.ratio_vs_pf >= 1.0 - 1e-12);
        }

        let mut buf = Vec::new();
        write_experiment_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "epsilon,mechanism,task,expected_error,ratio_vs_pf"
        );
        assert_eq!(text.lines().count(), 9);
        assert!(text.contains(",pf,mode,"));
        assert!(text.contains(",em,median,"));
    }

    #[test]
    fn power_law_fixture_is_frozen() {
        let h = power_law_histogram(1024).unwrap();
        assert_eq!(h.len(), 1024);
        assert_eq!(h.counts()[0], 1_000_000);
        assert!(h.counts().windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(h.total(), 5_584_176);
        assert_eq!(h.labels()[1023], "1024");
    }

    #[test]
    fn epsilon_inversion_round_trips() {
        let h = histogram(&[6, 3, 1]);
        let target = task_expected_error(&h, Task::Mode, Mechanism::PermuteAndFlip, 2.0).unwrap();
        let eps = epsilon_for_target_error(&h, Task::Mode, Mechanism::PermuteAndFlip, target)
            .unwrap();
        assert!((eps - 2.0).abs() < 1e-3 * 2.0, "recovered {eps}");

        // Unreachable targets are rejected with the achievable range.
        match epsilon_for_target_error(&h, Task::Mode, Mechanism::PermuteAndFlip, 1e9) {
            Err(Error::OutOfRange { min, max, .. }) => assert!(min < max),
            other => panic!("expected out-of-range, got {other:?}"),
        }
        assert!(matches!(
            epsilon_for_target_error(&h, Task::Mode, Mechanism::PermuteAndFlip, -1.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn experiment_rows_serialize_with_stable_names() {
        let row = ExperimentRow {
            epsilon: 0.5,
            mechanism: Mechanism::Exponential,
            task: Task::Median,
            expected_error: 1.25,
            ratio_vs_pf: 1.5,
        };
        let json = serde_json::to_string(&row).unwrap();
        assert_eq!(
            json,
            "{\"epsilon\":0.5,\"mechanism\":\"em\",\"task\":\"median\",\"expected_error\":1.25,\"ratio_vs_pf\":1.5}"
        );
        let _ = writeln!(std::io::sink(), "{row:?}");
    }
}
