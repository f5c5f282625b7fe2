//! Evaluation engine for text-to-motion outputs: file formats, physical and
//! semantic metrics, control accuracy, attribute scoring and selection.

pub mod collision;
pub mod contact;
pub mod corpus;
pub mod finegrained;
pub mod kinematics;
pub mod motion;
pub mod npy;
pub mod physical;
pub mod report;
pub mod scoring;
pub mod semantic;
pub mod stats;
pub mod targets;
