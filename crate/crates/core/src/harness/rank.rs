//! Ranking of methods by their dataset-level averages.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::report::AggregateReport;
use crate::volume::{PerRegion, Region};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method_name: String,
    /// Mean DSC per region (percent).
    pub dsc: PerRegion<f64>,
    /// Mean HD95 per region (mm).
    pub hd95: PerRegion<f64>,
    /// Mean of the three region DSC means.
    pub avg_dsc: f64,
    /// Mean of the three region HD95 means.
    pub avg_hd95: f64,
}

impl MethodSummary {
    pub fn new(method_name: impl Into<String>, dsc: PerRegion<f64>, hd95: PerRegion<f64>) -> Self {
        let avg = |p: &PerRegion<f64>| (p.et + p.tc + p.wt) / 3.0;
        Self {
            method_name: method_name.into(),
            avg_dsc: avg(&dsc),
            avg_hd95: avg(&hd95),
            dsc,
            hd95,
        }
    }

    pub fn from_report(method_name: impl Into<String>, report: &AggregateReport) -> Self {
        Self::new(
            method_name,
            report.dsc.map(|_, s| s.mean),
            report.hd95.map(|_, s| s.mean),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankStrategy {
    /// Average DSC descending; ties by average HD95 ascending.
    DscOnly,
    /// Mean of the DSC rank and the HD95 rank; ties by average DSC.
    AvgRank,
    /// `avg_dsc − avg_hd95` descending.
    DscMinusHd95,
}

impl RankStrategy {
    pub const ALL: [RankStrategy; 3] = [RankStrategy::DscOnly, RankStrategy::AvgRank, RankStrategy::DscMinusHd95];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedMethod {
    pub rank: usize,
    pub method_name: String,
    /// Strategy-specific score: average DSC, mean rank, or DSC − HD95.
    pub score: f64,
}

fn desc(a: f64, b: f64) -> Ordering {
    b.total_cmp(&a)
}

/// Competition ranks ("1224"): equal values share the best rank.
fn competition_ranks(values: &[f64], better: impl Fn(f64, f64) -> Ordering) -> Vec<usize> {
    values
        .iter()
        .map(|&v| 1 + values.iter().filter(|&&w| better(w, v) == Ordering::Less).count())
        .collect()
}

/// Orders methods under `strategy`. The order is total: any remaining tie is
/// broken by method name.
pub fn rank_methods(summaries: &[MethodSummary], strategy: RankStrategy) -> Result<Vec<RankedMethod>> {
    if summaries.is_empty() {
        return Err(Error::EmptyInput);
    }
    let dscs: Vec<f64> = summaries.iter().map(|s| s.avg_dsc).collect();
    let hds: Vec<f64> = summaries.iter().map(|s| s.avg_hd95).collect();
    let scores: Vec<f64> = match strategy {
        RankStrategy::DscOnly => dscs.clone(),
        RankStrategy::AvgRank => {
            let dr = competition_ranks(&dscs, desc);
            let hr = competition_ranks(&hds, |a, b| a.total_cmp(&b));
            dr.iter().zip(&hr).map(|(&a, &b)| (a + b) as f64 / 2.0).collect()
        }
        RankStrategy::DscMinusHd95 => dscs.iter().zip(&hds).map(|(d, h)| d - h).collect(),
    };
    let mut order: Vec<usize> = (0..summaries.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&summaries[i], &summaries[j]);
        let primary = match strategy {
            RankStrategy::DscOnly => desc(a.avg_dsc, b.avg_dsc).then(a.avg_hd95.total_cmp(&b.avg_hd95)),
            RankStrategy::AvgRank => scores[i].total_cmp(&scores[j]).then(desc(a.avg_dsc, b.avg_dsc)),
            RankStrategy::DscMinusHd95 => desc(scores[i], scores[j]),
        };
        primary.then_with(|| a.method_name.cmp(&b.method_name))
    });
    Ok(order
        .into_iter()
        .enumerate()
        .map(|(pos, i)| RankedMethod {
            rank: pos + 1,
            method_name: summaries[i].method_name.clone(),
            score: scores[i],
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub methods: Vec<MethodSummary>,
    pub dsc_only: Vec<RankedMethod>,
    pub avg_rank: Vec<RankedMethod>,
    pub dsc_minus_hd95: Vec<RankedMethod>,
}

impl RankingReport {
    pub fn new(methods: Vec<MethodSummary>) -> Result<Self> {
        Ok(Self {
            dsc_only: rank_methods(&methods, RankStrategy::DscOnly)?,
            avg_rank: rank_methods(&methods, RankStrategy::AvgRank)?,
            dsc_minus_hd95: rank_methods(&methods, RankStrategy::DscMinusHd95)?,
            methods,
        })
    }

    fn rank_of(list: &[RankedMethod], name: &str) -> usize {
        list.iter().find(|r| r.method_name == name).map(|r| r.rank).unwrap_or(0)
    }

    /// Tab-separated method table: per-region DSC and HD95 with averages and
    /// the rank under each strategy.
    pub fn render_table(&self) -> String {
        let mut out = String::from("Model\tDSC ET\tDSC TC\tDSC WT\tDSC Avg\tHD95 ET\tHD95 TC\tHD95 WT\tHD95 Avg\tRank dsc_only\tRank avg_rank\tRank dsc_minus_hd95\n");
        for m in &self.methods {
            out.push_str(&m.method_name);
            for r in Region::ALL {
                let _ = write!(out, "\t{:.2}", m.dsc.get(r));
            }
            let _ = write!(out, "\t{:.2}", m.avg_dsc);
            for r in Region::ALL {
                let _ = write!(out, "\t{:.2}", m.hd95.get(r));
            }
            let _ = write!(out, "\t{:.2}", m.avg_hd95);
            for list in [&self.dsc_only, &self.avg_rank, &self.dsc_minus_hd95] {
                let _ = write!(out, "\t{}", Self::rank_of(list, &m.method_name));
            }
            out.push('\n');
        }
        out
    }
}
