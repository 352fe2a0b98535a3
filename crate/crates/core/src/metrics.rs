//! Confusion-matrix evaluation and arithmetic-operation counting.
//!
//! Noise is the positive class: a point the filter removes is a positive
//! prediction, so `tp` counts correctly removed noise.

use std::fmt::Write as _;
use std::ops::AddAssign;

use serde::Serialize;

use crate::cloud::{NoiseLabel, Prediction};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

pub fn confusion(truth: &[NoiseLabel], predicted: &[Prediction]) -> Result<ConfusionCounts> {
    if truth.len() != predicted.len() {
        return Err(Error::contract(format!(
            "truth has {} labels but prediction has {}",
            truth.len(),
            predicted.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (t, p) in truth.iter().zip(predicted) {
        match (t.is_noise(), p.is_noise()) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den != 0).then(|| num as f64 / den as f64)
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn error(&self) -> Option<f64> {
        ratio(self.fp + self.fn_, self.total())
    }

    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> Option<f64> {
        f1_score(self.precision()?, self.recall()?)
    }
}

/// Harmonic mean of precision and recall; undefined when both are zero.
pub fn f1_score(precision: f64, recall: f64) -> Option<f64> {
    let den = precision + recall;
    (den != 0.0).then(|| 2.0 * precision * recall / den)
}

/// Renders a metric, printing `n/a` for undefined values.
pub fn fmt_metric(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.6}"),
        None => "n/a".to_string(),
    }
}

/// Sink for arithmetic performed by distance computations.
pub trait Tally {
    fn record(&mut self, additions: u64, multiplications: u64);
}

/// Tally that discards everything; compiles away in uninstrumented runs.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoTally;

impl Tally for NoTally {
    #[inline(always)]
    fn record(&mut self, _: u64, _: u64) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct OpCounts {
    pub additions: u64,
    pub multiplications: u64,
}

impl Tally for OpCounts {
    #[inline(always)]
    fn record(&mut self, additions: u64, multiplications: u64) {
        self.additions += additions;
        self.multiplications += multiplications;
    }
}

impl AddAssign for OpCounts {
    fn add_assign(&mut self, rhs: OpCounts) {
        self.additions += rhs.additions;
        self.multiplications += rhs.multiplications;
    }
}

/// Runs `f` with a fresh tally and returns its result with the final counts.
pub fn op_counted<R>(f: impl FnOnce(&mut OpCounts) -> R) -> (R, OpCounts) {
    let mut counts = OpCounts::default();
    let result = f(&mut counts);
    (result, counts)
}

pub const CSV_HEADER: &str = "filter,parameters,tp,fp,tn,fn,accuracy,error,precision,recall,f1,additions,multiplications,wall_ms";

/// One row of the metric report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub filter: String,
    /// `key=value` pairs separated by `;` so the field never needs quoting.
    pub parameters: String,
    pub counts: Option<ConfusionCounts>,
    pub ops: Option<OpCounts>,
    pub wall_ms: Option<f64>,
    /// Set when the filter failed; the row then carries no counts.
    pub error: Option<String>,
}

impl MetricsRow {
    pub fn f1(&self) -> Option<f64> {
        self.counts.and_then(|c| c.f1())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{}",
            csv_field(&self.filter),
            csv_field(&self.parameters)
        );
        match (&self.counts, &self.error) {
            (Some(c), _) => {
                let _ = write!(
                    s,
                    ",{},{},{},{},{},{},{},{},{}",
                    c.tp,
                    c.fp,
                    c.tn,
                    c.fn_,
                    fmt_metric(c.accuracy()),
                    fmt_metric(c.error()),
                    fmt_metric(c.precision()),
                    fmt_metric(c.recall()),
                    fmt_metric(c.f1()),
                );
            }
            (None, Some(e)) => {
                let _ = write!(
                    s,
                    ",{},n/a,n/a,n/a,n/a,n/a,n/a,n/a,n/a",
                    csv_field(&format!("error: {e}"))
                );
            }
            (None, None) => s.push_str(",n/a,n/a,n/a,n/a,n/a,n/a,n/a,n/a,n/a"),
        }
        match self.ops {
            Some(o) => {
                let _ = write!(s, ",{},{}", o.additions, o.multiplications);
            }
            None => s.push_str(",n/a,n/a"),
        }
        match self.wall_ms {
            Some(ms) => {
                let _ = write!(s, ",{ms:.3}");
            }
            None => s.push_str(",n/a"),
        }
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use NoiseLabel::{IsolatedOutlier as N, Signal as S};
    use Prediction::{Noise as PN, Signal as PS};

    #[test]
    fn one_of_each_cell() {
        let c = confusion(&[N, N, S, S], &[PN, PS, PN, PS]).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 1,
                fp: 1,
                tn: 1,
                fn_: 1
            }
        );
    }

    #[test]
    fn perfect_and_null_filters() {
        let truth = [
            N,
            S,
            NoiseLabel::ClusteredNoise,
            S,
            NoiseLabel::NearSignalNoise,
        ];
        let perfect: Vec<_> = truth.iter().map(|t| t.binary()).collect();
        let c = confusion(&truth, &perfect).unwrap();
        assert_eq!((c.fp, c.fn_), (0, 0));
        assert_eq!(c.f1(), Some(1.0));

        let null = confusion(&truth, &[PS; 5]).unwrap();
        assert_eq!((null.tp, null.fp, null.fn_), (0, 0, 3));
        assert_eq!(null.precision(), None);
        assert_eq!(null.recall(), Some(0.0));
        assert_eq!(null.f1(), None);
        assert_eq!(fmt_metric(null.precision()), "n/a");
    }

    #[test]
    fn perfect_counts() {
        let c = ConfusionCounts {
            tp: 7,
            fp: 0,
            tn: 7,
            fn_: 0,
        };
        assert_eq!(c.accuracy(), Some(1.0));
        assert_eq!(c.error(), Some(0.0));
        assert_eq!(c.f1(), Some(1.0));
    }

    #[test]
    fn reported_f1_values() {
        let pcaac = f1_score(0.9727, 0.8600).unwrap();
        assert!((pcaac - 0.9128).abs() < 5e-4, "{pcaac}");
        let ror = f1_score(0.4695, 1.0).unwrap();
        assert!((ror - 0.639).abs() < 1e-3, "{ror}");
    }

    #[test]
    fn length_mismatch() {
        assert!(confusion(&[S], &[]).is_err());
    }

    #[test]
    fn op_counted_returns_result_and_counts() {
        let (r, ops) = op_counted(|t| {
            t.record(3, 2);
            t.record(5, 3);
            42
        });
        assert_eq!(r, 42);
        assert_eq!(
            ops,
            OpCounts {
                additions: 8,
                multiplications: 5
            }
        );
    }

    #[test]
    fn csv_row_renders_undefined_metrics() {
        let row = MetricsRow {
            filter: "null".into(),
            parameters: "a=1;b=2".into(),
            counts: Some(ConfusionCounts {
                tp: 0,
                fp: 0,
                tn: 5,
                fn_: 2,
            }),
            ops: None,
            wall_ms: Some(1.5),
            error: None,
        };
        assert_eq!(
            row.to_csv(),
            "null,a=1;b=2,0,0,5,2,0.714286,0.285714,n/a,0.000000,n/a,n/a,n/a,1.500"
        );
        assert_eq!(
            CSV_HEADER.split(',').count(),
            row.to_csv().split(',').count()
        );
    }
}
