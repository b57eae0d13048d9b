//! Synthetic top-view frames and the contour-area deformation pipeline.

mod augment;
mod classify;
mod contours;
mod dataset;
mod deformation;
mod edges;
mod frame;
mod pipeline;
mod regress;
mod render;

pub use augment::{augment, crop, flip_lr, photometric, rotate, AugmentationConfig};
pub use classify::{Classifier, PrototypeClassifier, DEFAULT_TEMPERATURE};
pub use contours::{shoelace_area, trace_contours, Contour};
pub use dataset::{
    build_dataset, midpoint_records, AugmentedRecord, Dataset, DatasetConfig, DatasetMeta, DatasetRecord, PositionSampler, Split,
    AUGMENTED_FILE, MANIFEST_FILE, META_FILE, SPLIT_FILES,
};
pub use deformation::{
    class_from_position, decide_deformation, ground_truth_deformation, optimized_deformation, ClassProbabilities,
    DecisionRule, DeformationClass, NOMINAL_DEFORMATION, STROKE_MM,
};
pub use edges::{detect_edges, EdgeMap, DEFAULT_EDGE_THRESHOLD};
pub use frame::{Frame, FrameFormat, Rect, SceneMeta};
pub use pipeline::{measure_area, Analysis, FeatureScale, VisionPipeline};
pub use regress::{fit_area_regressor, predict_deformation, AreaRegressor, AreaSample, TrainingMeta};
pub use render::{render_frame, Notch, SceneGeometry};
