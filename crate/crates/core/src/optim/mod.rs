//! Losses, Adam and the linear baselines.

mod adam;
mod classifier;
mod features;
mod loss;
mod model_io;
mod segmenter;

pub use adam::{adam_step, AdamConfig, AdamState, ParamVector};
pub use classifier::{
    predict_label, train_image_classifier, ClassifierTrainConfig, ImageClassifierModel, LabeledImage,
    TrainedClassifier,
};
pub use features::{
    extract_pixel_features, pooled_image_features, raw_pixel_features, PixelFeatureConfig, IMAGE_FEATURES,
    PIXEL_FEATURES,
};
pub use loss::{
    bce_loss, scce_loss, sigmoid, soft_dice_loss, soft_jaccard_loss, softmax, LossKind, LossValue,
    DEFAULT_SMOOTHING,
};
pub use model_io::{Model, MODEL_FORMAT, MODEL_VERSION};
pub use segmenter::{
    predict_mask, train_pixel_segmenter, EpochRecord, MaskedImage, PixelSegmenterModel, SegmenterTrainConfig,
    TrainedSegmenter,
};
