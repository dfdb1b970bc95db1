//! Recording input, synthetic recordings and dataset construction.

mod csvio;
mod dataset;
pub mod edf;
mod synth;

pub use csvio::{annotations_for, read_annotations, read_csv_recording, write_annotations, write_csv_recording, AnnotationRow};
pub use dataset::{
    build_dataset, fnv1a, load_subject_dataset, materialize, plan_dataset, planned_labels, write_subject_dataset,
    DatasetConfig, DatasetFileEntry, DatasetManifest, DatasetPlan, RecordingInfo, SeizureFile, SeizureFilePlan,
    SubjectDataset, WindowRef, MANIFEST_NAME,
};
pub use edf::{bipolar_montage, read_edf, read_edf_header};
pub use synth::{synth_generate, Oscillation, StateProfile, SynthSpec};
