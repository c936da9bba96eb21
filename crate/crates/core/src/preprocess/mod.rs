//! Label-encoded flows → MI feature selection → min-max normalization → SMOTE,
//! plus feature engineering and stratified splitting.

mod engineer;
mod mi;
mod plan;
mod smote;
mod split;

pub use engineer::{apply_engineered, engineer_features, EngineeredFeature};
pub use mi::{discretize, mutual_information};
pub use plan::{
    fit_plan, normalize, select_features, MinMax, PreprocessConfig, PreprocessPlan, DEFAULT_BINS, DEFAULT_K,
    PLAN_FORMAT_VERSION,
};
pub use smote::{smote_oversample, smote_with_parents, SmoteOutput, DEFAULT_K_NEIGHBORS};
pub use split::{stratified_split, Split, SplitSpec};
