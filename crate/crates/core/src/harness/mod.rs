//! Batch evaluation, aggregate reporting and method ranking.

pub mod dataset;
pub mod rank;
pub mod report;

pub use dataset::{
    case_id_from_filename, evaluate_dataset, evaluate_pairs, pair_directories, read_labels, read_manifest,
    CasePair, DatasetEvaluation,
};
pub use rank::{rank_methods, MethodSummary, RankStrategy, RankedMethod, RankingReport};
pub use report::{
    aggregate, read_cases_csv, render_statistics_table, write_cases_csv, AggregateReport, CaseRow,
    DatasetReport, SummaryStats, CSV_HEADER,
};
