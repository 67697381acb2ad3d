//! Dataset and model files, synthetic data, and storage statistics.

mod dataset;
mod model_file;
mod stats;
mod synthetic;
mod text;

pub use dataset::{
    load_dataset, read_schema, read_values, values_to_text, write_dataset, write_schema, write_values, DatasetManifest,
    FORMAT_VERSION, MANIFEST_FILE,
};
pub use model_file::{load_model, model_from_text, model_to_text, save_model, MODEL_VERSION};
pub use stats::{block_stats, dataset_stats, DatasetStats};
pub use synthetic::{gen_synthetic, split_indices, SyntheticConfig};
pub use text::format_f64;
