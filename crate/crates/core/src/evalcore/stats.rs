use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;
use statrs::function::factorial::ln_binomial;

use super::EvalError;

/// Per-system correctness of two tools over the same systems.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementTable {
    pub both_correct: u64,
    /// Only the first tool was correct.
    pub a_only: u64,
    /// Only the second tool was correct.
    pub b_only: u64,
    pub neither: u64,
}

impl AgreementTable {
    pub fn total(&self) -> u64 {
        self.both_correct + self.a_only + self.b_only + self.neither
    }

    /// The table with the two tools' roles exchanged.
    pub fn swapped(&self) -> Self {
        Self { a_only: self.b_only, b_only: self.a_only, ..*self }
    }
}

pub fn agreement(a: &BTreeMap<String, bool>, b: &BTreeMap<String, bool>) -> Result<AgreementTable, EvalError> {
    if let Some(id) = a.keys().find(|k| !b.contains_key(*k)).or_else(|| b.keys().find(|k| !a.contains_key(*k))) {
        return Err(EvalError::UniverseMismatch(id.clone()));
    }
    let mut t = AgreementTable::default();
    for (id, &ca) in a {
        match (ca, b[id]) {
            (true, true) => t.both_correct += 1,
            (true, false) => t.a_only += 1,
            (false, true) => t.b_only += 1,
            (false, false) => t.neither += 1,
        }
    }
    Ok(t)
}

/// A probability held as its base-10 logarithm so that tail values far
/// below `f64::MIN_POSITIVE` stay comparable.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PValue {
    pub log10: f64,
}

impl PValue {
    pub fn from_ln(ln: f64) -> Self {
        Self { log10: (ln / std::f64::consts::LN_10).min(0.0) }
    }

    /// The value as a float; zero when it underflows.
    pub fn value(&self) -> f64 {
        10f64.powf(self.log10)
    }

    pub fn is_below(&self, bound: f64) -> bool {
        self.log10 < bound.log10()
    }

    /// True when [`Self::value`] cannot represent the probability.
    pub fn underflows(&self) -> bool {
        self.log10 < f64::MIN_POSITIVE.log10()
    }
}

impl fmt::Display for PValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.underflows() {
            write!(f, "< 1e{}", self.log10.ceil() as i64)
        } else if self.log10 >= -3.0 {
            write!(f, "{:.3}", self.value())
        } else {
            write!(f, "{:.3e}", self.value())
        }
    }
}

/// Natural logarithm of `erfc(x)`, finite well past the f64 underflow point.
fn ln_erfc(x: f64) -> f64 {
    if x < 20.0 {
        return erfc(x).ln();
    }
    // Asymptotic expansion; at x ≥ 20 the truncated series error is far below f64 resolution.
    let x2 = x * x;
    let mut term = 1.0;
    let mut series = 1.0;
    for n in 1..8 {
        term *= -((2 * n - 1) as f64) / (2.0 * x2);
        series += term;
    }
    -x2 - (x * std::f64::consts::PI.sqrt()).ln() + series.ln()
}

/// Survival function of the chi-square distribution with one degree of freedom.
pub fn chi_square_1df_sf(statistic: f64) -> PValue {
    if statistic <= 0.0 {
        return PValue { log10: 0.0 };
    }
    PValue::from_ln(ln_erfc((statistic / 2.0).sqrt()))
}

fn ln_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// Two-sided exact binomial test of `b` successes out of `b + c` at p = 1/2.
pub fn binomial_two_sided(b: u64, c: u64) -> PValue {
    let n = b + c;
    let m = b.min(c);
    if 2 * m == n {
        return PValue { log10: 0.0 };
    }
    let mut ln_tail = f64::NEG_INFINITY;
    for i in 0..=m {
        ln_tail = ln_add(ln_tail, ln_binomial(n, i));
    }
    PValue::from_ln(ln_tail - n as f64 * std::f64::consts::LN_2 + std::f64::consts::LN_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemar {
    pub b: u64,
    pub c: u64,
    /// Continuity-corrected statistic `(|b−c|−1)² / (b+c)`.
    pub statistic: f64,
    /// Chi-square (1 df) tail of `statistic`.
    pub p_chi_square: PValue,
    /// Exact two-sided binomial tail on the discordant pairs.
    pub p_exact: PValue,
}

pub fn mcnemar(table: &AgreementTable) -> Result<McNemar, EvalError> {
    let (b, c) = (table.a_only, table.b_only);
    if b + c == 0 {
        return Err(EvalError::NoDiscordantPairs);
    }
    let statistic = ((b as f64 - c as f64).abs() - 1.0).powi(2) / (b + c) as f64;
    Ok(McNemar { b, c, statistic, p_chi_square: chi_square_1df_sf(statistic), p_exact: binomial_two_sided(b, c) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OddsRatio {
    /// `c / b`: odds that a discordant system favours the second tool.
    pub estimate: f64,
    pub low: f64,
    pub high: f64,
    pub confidence: f64,
    /// Half counts were added to both cells because one was zero.
    pub corrected: bool,
}

/// Two-sided standard-normal quantile for a confidence level.
pub fn normal_quantile(confidence: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    normal.inverse_cdf(1.0 - (1.0 - confidence) / 2.0)
}

/// Conditional odds ratio of the discordant cells with a log-scale Wald interval.
/// With `correction`, a zero cell triggers adding 0.5 to both cells instead of an error.
pub fn odds_ratio(table: &AgreementTable, confidence: f64, correction: bool) -> Result<OddsRatio, EvalError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(EvalError::BadParameters(format!("confidence {confidence} outside (0,1)")));
    }
    let (mut b, mut c) = (table.a_only as f64, table.b_only as f64);
    let zero = b == 0.0 || c == 0.0;
    if zero && !correction {
        return Err(EvalError::ZeroDiscordantCell { b: table.a_only, c: table.b_only });
    }
    if zero {
        b += 0.5;
        c += 0.5;
    }
    let estimate = c / b;
    let half = normal_quantile(confidence) * (1.0 / b + 1.0 / c).sqrt();
    Ok(OddsRatio {
        estimate,
        low: (estimate.ln() - half).exp(),
        high: (estimate.ln() + half).exp(),
        confidence,
        corrected: zero,
    })
}
