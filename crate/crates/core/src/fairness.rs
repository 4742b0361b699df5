//! Group fairness over model predictions: acceptance rate, statistical parity,
//! the 80% disparate-impact rule, and counterfactual Burden.
//!
//! All metrics compare two groups of one sensitive attribute. Ratios are
//! always `group0 / group1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::LinearModel;
use crate::counterfactual::Counterfactual;
use crate::dataset::{split, Dataset};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FairnessError {
    #[error("predictions ({predictions}) and groups ({groups}) differ in length")]
    Misaligned { predictions: usize, groups: usize },
    #[error("group {0} has no members")]
    EmptyGroup(i64),
    #[error("denominator is zero")]
    ZeroDenominator,
    #[error("group {0} has no members predicted unfavorable")]
    NoUnfavorable(i64),
    #[error("group {0} has no valid counterfactuals")]
    NoValidCounterfactual(i64),
    #[error("counterfactual origin index {0} is out of bounds")]
    OriginOutOfBounds(usize),
    #[error("undefined input: {0}")]
    Undefined(String),
}

pub type Result<T> = std::result::Result<T, FairnessError>;

/// The two sensitive-attribute codes being compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPair {
    pub group0: i64,
    pub group1: i64,
}

impl Default for GroupPair {
    fn default() -> Self {
        Self {
            group0: 0,
            group1: 1,
        }
    }
}

impl GroupPair {
    pub fn swapped(self) -> Self {
        Self {
            group0: self.group1,
            group1: self.group0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisparateImpactRule {
    /// Flag when `min(sp, 1/sp) <= 0.8`.
    #[default]
    TwoSided,
    /// Flag only when `sp <= 0.8`.
    OneSided,
}

pub const DISPARATE_IMPACT_THRESHOLD: f64 = 0.8;

/// A metric value or the reason it cannot be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Metric {
    Defined { value: f64 },
    Undefined { reason: String },
}

impl Metric {
    pub fn value(&self) -> Option<f64> {
        match self {
            Metric::Defined { value } => Some(*value),
            Metric::Undefined { .. } => None,
        }
    }
}

impl From<Result<f64>> for Metric {
    fn from(r: Result<f64>) -> Self {
        match r {
            Ok(value) => Metric::Defined { value },
            Err(e) => Metric::Undefined {
                reason: e.to_string(),
            },
        }
    }
}

fn check_aligned(predictions: &[u8], groups: &[i64]) -> Result<()> {
    if predictions.len() != groups.len() {
        return Err(FairnessError::Misaligned {
            predictions: predictions.len(),
            groups: groups.len(),
        });
    }
    Ok(())
}

/// `P(Ŷ = 1 | S = s)`.
pub fn acceptance_rate(predictions: &[u8], groups: &[i64], s: i64) -> Result<f64> {
    check_aligned(predictions, groups)?;
    let (members, positive) = predictions
        .iter()
        .zip(groups)
        .filter(|(_, &g)| g == s)
        .fold((0usize, 0usize), |(n, p), (&yhat, _)| {
            (n + 1, p + usize::from(yhat == 1))
        });
    if members == 0 {
        return Err(FairnessError::EmptyGroup(s));
    }
    Ok(positive as f64 / members as f64)
}

/// `AR(group0) / AR(group1)`.
pub fn statistical_parity(predictions: &[u8], groups: &[i64], pair: GroupPair) -> Result<f64> {
    let ar0 = acceptance_rate(predictions, groups, pair.group0)?;
    let ar1 = acceptance_rate(predictions, groups, pair.group1)?;
    ratio(ar0, ar1)
}

fn ratio(numerator: f64, denominator: f64) -> Result<f64> {
    if denominator == 0.0 {
        return Err(FairnessError::ZeroDenominator);
    }
    Ok(numerator / denominator)
}

/// The 80% rule, applied to both group orders.
pub fn disparate_impact(sp: f64) -> bool {
    disparate_impact_with(sp, DisparateImpactRule::TwoSided)
}

pub fn disparate_impact_with(sp: f64, rule: DisparateImpactRule) -> bool {
    match rule {
        DisparateImpactRule::OneSided => sp <= DISPARATE_IMPACT_THRESHOLD,
        DisparateImpactRule::TwoSided => sp.min(1.0 / sp) <= DISPARATE_IMPACT_THRESHOLD,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurdenSummary {
    pub value: f64,
    /// Valid counterfactuals averaged.
    pub included: usize,
    /// Unfavorable members whose counterfactual is invalid or missing.
    pub excluded: usize,
}

/// Per-group tally of unfavorable members and their counterfactuals.
fn burden_tally(
    counterfactuals: &[Counterfactual],
    groups: &[i64],
    predictions: &[u8],
    s: i64,
) -> Result<(Vec<f64>, usize, usize)> {
    check_aligned(predictions, groups)?;
    let mut by_origin: Vec<Option<&Counterfactual>> = vec![None; groups.len()];
    for cf in counterfactuals {
        let slot = by_origin
            .get_mut(cf.origin_index)
            .ok_or(FairnessError::OriginOutOfBounds(cf.origin_index))?;
        *slot = Some(cf);
    }
    let mut distances = Vec::new();
    let mut members = 0;
    for (i, (&g, &yhat)) in groups.iter().zip(predictions).enumerate() {
        if g != s || yhat != 0 {
            continue;
        }
        members += 1;
        if let Some(d) = by_origin[i]
            .filter(|cf| cf.valid)
            .and_then(|cf| cf.distance)
        {
            distances.push(d);
        }
    }
    let excluded = members - distances.len();
    Ok((distances, members, excluded))
}

/// Mean counterfactual distance over members of group `s` predicted unfavorable.
///
/// `counterfactuals` are matched to rows by `origin_index`. Invalid or
/// missing counterfactuals are left out of the mean and counted in `excluded`.
pub fn burden(
    counterfactuals: &[Counterfactual],
    groups: &[i64],
    predictions: &[u8],
    s: i64,
) -> Result<BurdenSummary> {
    let (distances, members, excluded) = burden_tally(counterfactuals, groups, predictions, s)?;
    if members == 0 {
        return Err(FairnessError::NoUnfavorable(s));
    }
    if distances.is_empty() {
        return Err(FairnessError::NoValidCounterfactual(s));
    }
    Ok(BurdenSummary {
        value: distances.iter().sum::<f64>() / distances.len() as f64,
        included: distances.len(),
        excluded,
    })
}

/// `Burden(group0) / Burden(group1)`.
pub fn burden_ratio(burden0: Result<f64>, burden1: Result<f64>) -> Result<f64> {
    ratio(burden0?, burden1?)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportConfig {
    pub groups: GroupPair,
    pub rule: DisparateImpactRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub value: i64,
    pub total: usize,
    pub predicted_positive: usize,
    pub predicted_negative: usize,
    pub acceptance_rate: Metric,
    pub burden: Metric,
    pub valid_counterfactuals: usize,
    pub invalid_counterfactuals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub sensitive_column: String,
    /// `[group0, group1]`.
    pub groups: Vec<GroupReport>,
    pub statistical_parity: Metric,
    /// `None` when statistical parity is undefined.
    pub disparate_impact: Option<bool>,
    pub disparate_impact_rule: DisparateImpactRule,
    pub burden_ratio: Metric,
}

impl FairnessReport {
    pub fn group(&self, value: i64) -> Option<&GroupReport> {
        self.groups.iter().find(|g| g.value == value)
    }
}

/// Predictions of `model` for every row of `dataset`.
pub fn predictions(model: &LinearModel, dataset: &Dataset) -> Result<Vec<u8>> {
    dataset
        .points
        .iter()
        .map(|p| {
            model
                .predict(&p.x)
                .map_err(|e| FairnessError::Undefined(e.to_string()))
        })
        .collect()
}

/// Every report field from a model, its dataset and the counterfactuals of
/// its predicted-unfavorable rows. Undefined metrics are recorded, not raised.
pub fn build_report(
    model: &LinearModel,
    dataset: &Dataset,
    counterfactuals: &[Counterfactual],
    config: &ReportConfig,
) -> Result<FairnessReport> {
    let predictions = predictions(model, dataset)?;
    let groups = split(dataset).sensitive;

    let mut group_reports = Vec::with_capacity(2);
    let mut ars = Vec::with_capacity(2);
    let mut burdens = Vec::with_capacity(2);
    for s in [config.groups.group0, config.groups.group1] {
        let total = groups.iter().filter(|&&g| g == s).count();
        let predicted_positive = groups
            .iter()
            .zip(&predictions)
            .filter(|(&g, &p)| g == s && p == 1)
            .count();
        let ar = acceptance_rate(&predictions, &groups, s);
        let (_, members, excluded) = burden_tally(counterfactuals, &groups, &predictions, s)?;
        let b = burden(counterfactuals, &groups, &predictions, s).map(|b| b.value);
        group_reports.push(GroupReport {
            value: s,
            total,
            predicted_positive,
            predicted_negative: total - predicted_positive,
            acceptance_rate: ar.clone().into(),
            burden: b.clone().into(),
            valid_counterfactuals: members - excluded,
            invalid_counterfactuals: excluded,
        });
        ars.push(ar);
        burdens.push(b);
    }

    let sp = match (&ars[0], &ars[1]) {
        (Ok(a0), Ok(a1)) => ratio(*a0, *a1),
        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
    };
    let disparate_impact = sp
        .as_ref()
        .ok()
        .map(|&v| disparate_impact_with(v, config.rule));
    let burden_ratio = burden_ratio(burdens[0].clone(), burdens[1].clone());

    Ok(FairnessReport {
        sensitive_column: dataset.audited_column().name.clone(),
        groups: group_reports,
        statistical_parity: sp.into(),
        disparate_impact,
        disparate_impact_rule: config.rule,
        burden_ratio: burden_ratio.into(),
    })
}
