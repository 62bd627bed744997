//! Archives, the synthetic generator and experiment orchestration.

mod archive;
mod experiment;
mod synthetic;

pub use archive::{
    format_date, load_graph, parse_date, read_json, save_graph, write_json, ArchiveSchema,
    NodeTypeDecl, RelationDecl, EDGES_FILE, SCHEMA_FILE, NODES_FILE,
};
pub use experiment::{
    execute, prepare_fold, run_ablation, run_evaluation, run_transfer, train_fold, Command,
    DatasetSource, EnrichmentConfig, ModelSpec, PreparedFold, RunConfig, RunManifest,
    TransferConfig, TransferOutcome, FAILED_MARKER,
};
pub use synthetic::{
    feature_rows, generate_synthetic, toy_graph, Preset, SyntheticSpec, CASE, CITES, COURT,
    DECIDED_BY, LAW, LAW_CITES, REFERS_TO,
};
