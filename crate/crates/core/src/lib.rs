//! Batch toolkit for analysing Wireshark packet-list exports.
//!
//! The pipeline mirrors the usual WEKA workflow: packet CSV exports are
//! parsed ([`ingest`]), turned into ARFF-style datasets ([`arff`]), encoded
//! into numeric features ([`prep`]), classified with a one-vs-one kernel SVM
//! trained by SMO ([`svm`]), scored with WEKA-compatible statistics
//! ([`eval`]) and summarised into weekly traffic tables ([`report`]).

pub mod arff;
pub mod eval;
pub mod ingest;
pub mod prep;
pub mod report;
pub mod svm;
pub mod text;

pub use arff::{Attribute, AttributeKind, Dataset, Instance, Value};
pub use eval::{ConfusionMatrix, EvalSummary};
pub use ingest::{CaptureBatch, PacketRecord};
pub use prep::{EncodedDataset, EncoderSpec, SplitSpec};
pub use report::{LengthStats, TrafficReport};
pub use svm::{KernelKind, KernelSpec, SvmBinaryModel, SvmOvoModel, TrainConfig};
