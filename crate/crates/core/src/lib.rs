pub mod bundle;
pub mod classify;
pub mod corpus;
pub mod eval;
pub mod features;
pub mod nmf;
pub mod pipeline;
pub mod recommend;
pub mod synthetic;
pub mod text;
