//! Appraisal along two paths: the cognitive derivation of emotions from
//! mental states, and the reactive stimulus evaluation checks on each act.

mod cognitive;
mod sec;

pub use cognitive::{appraise_cognitive, emotion_intensity, Emotion, EmotionRecord};
pub use sec::{
    appraise_sensorimotor, can_undo, sec_to_labels, ExpressionSequence, SecCheck, SecConfig, SecLabel,
    SecProfile,
};
