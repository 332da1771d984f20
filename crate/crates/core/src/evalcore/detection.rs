use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::modelgw::RunRecord;
use crate::oracle::SystemVerdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    TP,
    FP,
    TN,
    FN,
}

impl Classification {
    pub fn from_flags(predicted: bool, actual: bool) -> Self {
        match (predicted, actual) {
            (true, true) => Self::TP,
            (true, false) => Self::FP,
            (false, false) => Self::TN,
            (false, true) => Self::FN,
        }
    }

    pub fn is_correct(self) -> bool {
        matches!(self, Self::TP | Self::TN)
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// How a model claim is matched against the oracle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchMode {
    /// A non-empty `result` is a positive prediction.
    #[default]
    Emptiness,
    /// A positive prediction only counts as a hit when the claimed product
    /// set equals the oracle's failing set; any other non-empty claim is a
    /// false positive.
    StrictProducts,
}

/// Scores one model reply against the compiler verdict for the same system.
pub fn detection_verdict(
    record: &RunRecord,
    truth: &SystemVerdict,
    mode: MatchMode,
) -> Result<Classification, EvalError> {
    if record.system_id != truth.system_id {
        return Err(EvalError::MismatchedSystem { record: record.system_id.clone(), truth: truth.system_id.clone() });
    }
    let predicted = record.predicts_error();
    let class = Classification::from_flags(predicted, truth.has_error);
    if mode == MatchMode::StrictProducts && class == Classification::TP {
        let claimed: BTreeSet<String> =
            record.response.iter().flat_map(|r| r.result.iter().map(|p| p.to_string())).collect();
        let failing: BTreeSet<String> = truth.failing.iter().map(|p| p.to_string()).collect();
        if claimed != failing {
            return Ok(Classification::FP);
        }
    }
    Ok(class)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn add(&mut self, c: Classification) {
        match c {
            Classification::TP => self.tp += 1,
            Classification::FP => self.fp += 1,
            Classification::TN => self.tn += 1,
            Classification::FN => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

impl FromIterator<Classification> for ConfusionMatrix {
    fn from_iter<I: IntoIterator<Item = Classification>>(iter: I) -> Self {
        let mut m = Self::default();
        iter.into_iter().for_each(|c| m.add(c));
        m
    }
}

/// `None` marks a metric whose denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub accuracy: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn compute_metrics(m: &ConfusionMatrix) -> Result<DetectionMetrics, EvalError> {
    if m.total() == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let precision = ratio(m.tp, m.tp + m.fp);
    let recall = ratio(m.tp, m.tp + m.fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(DetectionMetrics { precision, recall, accuracy: ratio(m.tp + m.tn, m.total()), f1 })
}

/// Reads `system_id,has_error` rows produced by another tool. A header row
/// is skipped when its second column is not a boolean.
pub fn read_tool_verdicts(reader: impl Read) -> Result<BTreeMap<String, bool>, EvalError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| EvalError::BadInput(e.to_string()))?;
        if rec.len() < 2 {
            return Err(EvalError::BadInput(format!("row {} has fewer than two columns", i + 1)));
        }
        let flag = match rec[1].to_ascii_lowercase().as_str() {
            "1" | "true" | "yes" | "error" | "errors" => true,
            "0" | "false" | "no" | "ok" | "compiles" => false,
            _ if i == 0 => continue,
            other => return Err(EvalError::BadInput(format!("row {}: bad has_error flag {other:?}", i + 1))),
        };
        if out.insert(rec[0].to_string(), flag).is_some() {
            return Err(EvalError::BadInput(format!("duplicate system id {:?}", &rec[0])));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelgw::{parse_response, PromptKind};
    use crate::varmodel::parse_product;
    use proptest::prelude::*;

    fn record(id: &str, raw: &str) -> RunRecord {
        RunRecord {
            system_id: id.into(),
            attempt: 1,
            kind: PromptKind::FullCode,
            response: Some(parse_response(raw, PromptKind::FullCode)),
            failure: None,
            error: None,
            http_attempts: 1,
            latency_secs: 0.0,
            request_body: String::new(),
            response_body: String::new(),
        }
    }

    fn truth(id: &str, failing: &[&str]) -> SystemVerdict {
        SystemVerdict {
            system_id: id.into(),
            features: vec![],
            outcomes: vec![],
            has_error: !failing.is_empty(),
            failing: failing.iter().map(|p| parse_product(p).unwrap()).collect(),
        }
    }

    #[test]
    fn four_quadrants() {
        let pos = r#"{"result":"A=1","explanation":"","fixed_code":""}"#;
        let neg = r#"{"result":"","explanation":"","fixed_code":""}"#;
        let m = MatchMode::Emptiness;
        assert_eq!(detection_verdict(&record("l5", pos), &truth("l5", &["A=1"]), m).unwrap(), Classification::TP);
        assert_eq!(detection_verdict(&record("l2", neg), &truth("l2", &[]), m).unwrap(), Classification::TN);
        assert_eq!(detection_verdict(&record("l4", pos), &truth("l4", &[]), m).unwrap(), Classification::FP);
        assert_eq!(detection_verdict(&record("x", neg), &truth("x", &["A=1"]), m).unwrap(), Classification::FN);
        assert!(matches!(
            detection_verdict(&record("a", pos), &truth("b", &[]), m),
            Err(EvalError::MismatchedSystem { .. })
        ));
    }

    #[test]
    fn truncated_without_result_is_negative() {
        let rec = record("t", r#"{"result":"A=1"#);
        assert_eq!(detection_verdict(&rec, &truth("t", &["A=1"]), MatchMode::Emptiness).unwrap(), Classification::FN);
        let mut none = rec.clone();
        none.response = None;
        assert_eq!(detection_verdict(&none, &truth("t", &[]), MatchMode::Emptiness).unwrap(), Classification::TN);
    }

    #[test]
    fn strict_mode_requires_exact_set() {
        let rec = record("s", r#"{"result":"A=1,B=0","explanation":"","fixed_code":""}"#);
        let t = truth("s", &["A=1,B=0", "A=1,B=1"]);
        assert_eq!(detection_verdict(&rec, &t, MatchMode::Emptiness).unwrap(), Classification::TP);
        assert_eq!(detection_verdict(&rec, &t, MatchMode::StrictProducts).unwrap(), Classification::FP);
        let exact = record("s", r#"{"result":"A=1,B=1;A=1,B=0","explanation":"","fixed_code":""}"#);
        assert_eq!(detection_verdict(&exact, &t, MatchMode::StrictProducts).unwrap(), Classification::TP);
    }

    #[test]
    fn reference_matrix() {
        let m = compute_metrics(&ConfusionMatrix::new(2335, 2027, 638, 0)).unwrap();
        assert!((m.precision.unwrap() - 0.535305).abs() < 1e-6);
        assert_eq!(m.recall, Some(1.0));
        assert!((m.accuracy.unwrap() - 0.5946).abs() < 1e-12);
        assert!((m.f1.unwrap() - 4670.0 / 6697.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_matrices() {
        let m = compute_metrics(&ConfusionMatrix::new(0, 0, 100, 0)).unwrap();
        assert_eq!((m.precision, m.recall, m.f1, m.accuracy), (None, None, None, Some(1.0)));
        let m = compute_metrics(&ConfusionMatrix::new(10, 0, 0, 0)).unwrap();
        assert_eq!((m.precision, m.recall, m.f1, m.accuracy), (Some(1.0), Some(1.0), Some(1.0), Some(1.0)));
        assert!(matches!(compute_metrics(&ConfusionMatrix::default()), Err(EvalError::EmptyMatrix)));
    }

    #[test]
    fn tool_verdicts_with_and_without_header() {
        let v = read_tool_verdicts("system,has_error\na,1\nb,false\n".as_bytes()).unwrap();
        assert_eq!(v.get("a"), Some(&true));
        assert_eq!(v.get("b"), Some(&false));
        assert_eq!(read_tool_verdicts("a,0\n".as_bytes()).unwrap().len(), 1);
        assert!(read_tool_verdicts("a,1\nb,maybe\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn metric_identities(tp in 0u64..500, fp in 0u64..500, tn in 0u64..500, fn_ in 0u64..500) {
            prop_assume!(tp + fp + tn + fn_ > 0);
            let m = compute_metrics(&ConfusionMatrix::new(tp, fp, tn, fn_)).unwrap();
            if let Some(p) = m.precision {
                prop_assert!((p * (tp + fp) as f64 - tp as f64).abs() < 1e-9);
            }
            if let (Some(p), Some(r), Some(f1)) = (m.precision, m.recall, m.f1) {
                prop_assert!((f1 * (p + r) - 2.0 * p * r).abs() < 1e-12);
            }
            for v in [m.precision, m.recall, m.accuracy, m.f1].into_iter().flatten() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
