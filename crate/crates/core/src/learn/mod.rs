//! Data-driven identification of system pattern regions.
//!
//! Each region is a class labeled by its price vector. Pairwise linear SVMs
//! separate the classes, a majority vote picks one, and Platt scaling plus
//! pairwise coupling turn the pairwise scores into class probabilities.

pub mod cll;
pub mod coupling;
pub mod dataset;
pub mod ovo;
pub mod platt;
pub mod svm;

pub use cll::train_cll;
pub use coupling::{couple, Coupling};
pub use dataset::{group_labels, project_features, relabel_by_bus, FeatureSchema, LabeledDataset, RowMeta};
pub use ovo::{posterior_multiclass, predict, train_ovo, train_ovo_cll, Method, OvoModel, PairModel};
pub use platt::{fit_platt, PlattParams};
pub use svm::{train_binary_svm, BinarySvm};
