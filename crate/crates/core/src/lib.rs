//! Seed URI generation from social media posts and characterization of
//! the resulting seed collections.

pub mod analytics;
pub mod corpus;
pub mod extraction;
pub mod goldstandard;
pub mod html;
pub mod pipeline;
pub mod report;
pub mod segmentation;
