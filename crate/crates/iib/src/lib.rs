//! Illumination-insensitive binary feature descriptors.
//!
//! The descriptor encodes a square region around a keypoint by slicing it
//! into quadtree patches over several channels and emitting one or two bits
//! per patch from comparisons inside each four-patch group. Bits order by
//! granularity, so a Hamming matcher can reject candidates from coarse
//! prefixes before touching fine ones.

pub mod baseline;
pub mod bits;
pub mod descriptor;
pub mod error;
pub mod evaluation;
pub mod image;
pub mod io;
pub mod layout;
pub mod matching;
pub mod selection;
pub mod texture;

pub use baseline::{baseline_batch, extract_baseline, PointPairPattern, BASELINE_BITS};
pub use bits::BitBuffer;
pub use descriptor::{
    descriptor_size, detector_rescale_factor, extract, extract_batch, extract_with_ops,
    grid_keypoints, BinaryDescriptor, DescriptorConfig, Fingerprint, Keypoint, Mapping,
    NoOpCounter, OpCounter, OpCounts, PatchQuadStats, FIXED_DETECTOR_RADIUS,
};
pub use error::{Error, Result};
pub use evaluation::{
    correspondences, pr_sweep, precision_recall, project_point, reprojection_ok, synth_pair,
    CorrespondenceSet, Homography, PrPoint, SynthSpec, DEFAULT_EPSILON,
};
pub use image::{
    build_integral, compute_channels, region_mean, ChannelImage, ChannelKind, ChannelStack,
    GrayImage, IntegralImage, Rect, DEFAULT_CHANNELS,
};
pub use matching::{brute_force_mutual, hamming, hamming_segment, hierarchical_match, MatchPair, MatchStats};
pub use selection::{
    adaboost_train, apply_mask, build_training_set, select_top_m, AdaBoostModel, AdaBoostRound,
    SelectionMask, TrainingPair, TrainingScene,
};
pub use texture::natural_texture;
