//! Persistent-homology turbulence indices for financial time series.
//!
//! The pipeline runs from price CSVs through delay embeddings, Vietoris–Rips
//! filtrations and persistence diagrams to landscapes, diagram distances and
//! the derived index series, plus the clustering and backtest tooling used to
//! evaluate them.

pub mod analysis;
pub mod backtest;
pub mod diagmetrics;
pub mod embedding;
pub mod error;
pub mod filtration;
pub mod indices;
pub mod landscape;
pub mod marketdata;
pub mod persistence;

pub use embedding::{multiasset_clouds, sliding_clouds, takens_embed, DelayEmbedding, EmbeddingConfig, PointCloud};
pub use error::{Error, Result};
pub use filtration::{distance_matrix, vr_filtration, vr_filtration_capped, DistanceMatrix, Filtration, Simplex};
pub use marketdata::{log_returns, parse_price_csv, CsvSchema, ParseOptions, PriceSeries, ReturnKind, ReturnSeries};
pub use persistence::{compute_persistence, compute_persistence_with, PersistenceDiagram, PersistenceOptions, PersistencePair};
pub use landscape::{c1_series, landscape_distance, landscape_from_diagram, lp_norm, EssentialPolicy, PersistenceLandscape};
pub use diagmetrics::{bottleneck, wasserstein, MatchingProblem};
pub use indices::{
    correlation_graph, correlation_graph_index, landscape_norm_index, moving_variance, paper_grid, phti,
    trailing_mean, turbulence_index, turbulence_index_grid, CorrelationGraph, IndexConfig, IndexSeries, PhtiConfig,
};
pub use analysis::{
    average_index, detect_ews, elbow_select, ews_from_prices, ews_series, kmeans, normalize_indices, pca2, ClusterResult, EwsClass, EwsParams,
    EwsSeries, EwsVerdict, NormalizedIndexSet, Pca2,
};
pub use backtest::{
    exposure, monthly_last, monthly_returns, performance, quintile_of, run_strategy, Performance, StrategyKind,
    StrategyResult, StrategySpec,
};
