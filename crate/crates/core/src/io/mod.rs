//! Durable formats: float WAV, timestamped CSV, session directories and
//! placement dataset indexes.

pub mod csv_series;
pub mod dataset;
pub mod manifest;
pub mod wav;

pub use csv_series::{read_force_csv, read_tri_csv, write_force_csv, CsvImport};
pub use dataset::{load_dataset, Dataset};
pub use manifest::{read_session, write_session, SessionExtras, SessionManifest};
pub use wav::{read_mono_wav, read_tri_wav, read_wav, write_mono_wav, write_tri_wav, WavData};
