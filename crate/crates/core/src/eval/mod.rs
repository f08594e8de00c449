//! Latent-space evaluation: classifiers, clustering metrics, reconstruction
//! reports and the equivariance audit.

mod audit;
mod classify;
mod cluster;
mod report;

pub use audit::{equivariance_audit, AuditReport};
pub use classify::{accuracy, knn_classify, linear_classify, LinearProbe, LinearProbeConfig, KNN_K};
pub use cluster::{kmeans, purity, spearman, v_measure};
pub use report::{embeddings_csv, evaluate, fold_of, per_degree_mse, EvalOptions, EvalReport, Evaluation};
