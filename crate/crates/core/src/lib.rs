//! Batch pipeline that turns a bibliographic corpus into clustered,
//! labeled and statistically characterized maps of a research field.

pub mod corpus;
pub mod harvest;
pub mod embedding;
pub mod manifold;
pub mod densclust;
pub mod termstats;
pub mod llmextract;
pub mod pipeline;
pub mod stub;
