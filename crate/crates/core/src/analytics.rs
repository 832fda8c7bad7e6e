//! Corpus tabulation and the statistics used to compare action plans.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::record::{ActionPlan, SurvivorRecord};
use crate::seed::TAXONOMY;

pub const UNCATEGORIZED: &str = "Uncategorized";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalyticsError {
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two pairs, got {0}")]
    TooFewPairs(usize),
    #[error("differences have zero variance")]
    ZeroVariance,
    #[error("pool has no action items")]
    EmptyPool,
    #[error("no plans given")]
    EmptyInput,
}

// ---------------------------------------------------------------------------
// special functions

/// ln Γ(x) for x > 0 (Lanczos, g = 7, n = 9).
fn ln_gamma(x: f64) -> f64 {
    #[allow(clippy::excessive_precision)]
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let series = COEF[1..]
        .iter()
        .enumerate()
        .fold(COEF[0], |acc, (i, c)| acc + c / (x + i as f64 + 1.0));
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + series.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const MAX_ITER: usize = 500;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b).
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

/// Two-tailed p-value of Student's t with `df` degrees of freedom.
pub fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    regularized_incomplete_beta(df / (df + t * t), df / 2.0, 0.5).clamp(0.0, 1.0)
}

// ---------------------------------------------------------------------------
// descriptive statistics

/// Arithmetic mean and sample standard deviation (n - 1). The deviation
/// is `None` for fewer than two values.
pub fn mean_and_sd(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, Some((ss / (n - 1.0)).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedTTest {
    pub t: f64,
    pub df: usize,
    pub p_two_tailed: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub sd_a: f64,
    pub sd_b: f64,
    pub mean_difference: f64,
}

/// Two-tailed paired t-test on `a - b`.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<PairedTTest, AnalyticsError> {
    if a.len() != b.len() {
        return Err(AnalyticsError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(AnalyticsError::TooFewPairs(a.len()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (mean_d, sd_d) = mean_and_sd(&diffs);
    let sd_d = sd_d.expect("n >= 2");
    if sd_d == 0.0 {
        return Err(AnalyticsError::ZeroVariance);
    }
    let n = diffs.len() as f64;
    let t = mean_d / (sd_d / n.sqrt());
    let df = diffs.len() - 1;
    let (mean_a, sd_a) = mean_and_sd(a);
    let (mean_b, sd_b) = mean_and_sd(b);
    Ok(PairedTTest {
        t,
        df,
        p_two_tailed: student_t_two_tailed(t, df as f64),
        mean_a,
        mean_b,
        sd_a: sd_a.unwrap_or(0.0),
        sd_b: sd_b.unwrap_or(0.0),
        mean_difference: mean_d,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    /// Zero when undefined.
    pub sd: f64,
    pub sd_defined: bool,
}

impl Summary {
    fn of(values: &[f64]) -> Self {
        let (mean, sd) = mean_and_sd(values);
        Self { mean, sd: sd.unwrap_or(0.0), sd_defined: sd.is_some() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanMetrics {
    pub plans: usize,
    pub distinct_stakeholders: Summary,
    pub item_count: Summary,
}

pub fn plan_metrics(plans: &[ActionPlan]) -> Result<PlanMetrics, AnalyticsError> {
    if plans.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    let stakeholders: Vec<f64> = plans.iter().map(|p| p.distinct_stakeholders() as f64).collect();
    let items: Vec<f64> = plans.iter().map(|p| p.len() as f64).collect();
    Ok(PlanMetrics {
        plans: plans.len(),
        distinct_stakeholders: Summary::of(&stakeholders),
        item_count: Summary::of(&items),
    })
}

// ---------------------------------------------------------------------------
// category tabulation

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionRow {
    pub category: String,
    pub count: usize,
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StakeholderRow {
    pub category: String,
    pub count: usize,
    pub percentage: f64,
    pub actions: Vec<ActionRow>,
}

/// Stakeholder and (stakeholder, action) shares of all action items.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub survivors: usize,
    pub total_items: usize,
    pub stakeholders: Vec<StakeholderRow>,
}

impl StatsReport {
    pub fn stakeholder(&self, category: &str) -> Option<&StakeholderRow> {
        self.stakeholders.iter().find(|s| s.category == category)
    }

    pub fn action(&self, stakeholder: &str, action: &str) -> Option<&ActionRow> {
        self.stakeholder(stakeholder)?.actions.iter().find(|a| a.category == action)
    }
}

fn taxonomy_rank(stakeholder: &str, action: Option<&str>) -> (usize, usize) {
    let Some(si) = TAXONOMY.iter().position(|s| s.name == stakeholder) else {
        return (usize::MAX, usize::MAX);
    };
    let ai = action
        .and_then(|a| TAXONOMY[si].actions.iter().position(|x| x.name == a))
        .unwrap_or(usize::MAX);
    (si, ai)
}

pub fn stats_report(records: &[SurvivorRecord]) -> Result<StatsReport, AnalyticsError> {
    let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut total = 0usize;
    for item in records.iter().flat_map(|r| &r.plan.items) {
        let s = item.stakeholder_category.clone().unwrap_or_else(|| UNCATEGORIZED.to_string());
        let a = item.action_category.clone().unwrap_or_else(|| UNCATEGORIZED.to_string());
        *counts.entry(s).or_default().entry(a).or_default() += 1;
        total += 1;
    }
    if total == 0 {
        return Err(AnalyticsError::EmptyPool);
    }
    let pct = |c: usize| c as f64 * 100.0 / total as f64;

    let mut stakeholders: Vec<StakeholderRow> = counts
        .into_iter()
        .map(|(category, actions)| {
            let count = actions.values().sum();
            let mut actions: Vec<ActionRow> = actions
                .into_iter()
                .map(|(a, c)| ActionRow { category: a, count: c, percentage: pct(c) })
                .collect();
            actions.sort_by(|x, y| {
                taxonomy_rank(&category, Some(&x.category))
                    .cmp(&taxonomy_rank(&category, Some(&y.category)))
                    .then_with(|| x.category.cmp(&y.category))
            });
            StakeholderRow { percentage: pct(count), category, count, actions }
        })
        .collect();
    stakeholders.sort_by(|x, y| {
        taxonomy_rank(&x.category, None)
            .cmp(&taxonomy_rank(&y.category, None))
            .then_with(|| x.category.cmp(&y.category))
    });
    Ok(StatsReport { survivors: records.len(), total_items: total, stakeholders })
}
