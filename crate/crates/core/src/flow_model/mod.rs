//! Domain types, the seven-group attack taxonomy and dataset CSV I/O.

mod dataset;
mod record;
mod taxonomy;

pub use dataset::{
    load_dataset, read_dataset, save_dataset, write_dataset, LabeledDataset, LoadReport, SchemaMode,
    LABEL_COLUMN,
};
pub use record::{canonical_schema, feature, FlowRecord, Protocol, FEATURE_NAMES, N_FEATURES, SCHEMA_VERSION};
pub use taxonomy::{map_raw_label, normalize_label, AttackGroup, LabelPolicy, N_CLASSES, RAW_LABELS};
