//! Supervised classifiers over burst feature vectors and their evaluation.

pub mod ct1;
pub mod dataset;
pub mod eval;
pub mod forest;
pub mod model;
pub mod msvm;
pub mod svm;
pub mod tree;

pub use ct1::{train_ct1, Ct1Model, ParamGrid};
pub use dataset::{Dataset, FeatureSet, Record};
pub use eval::{evaluate, misclassification, misclassification_over, EvalReport, Evaluation};
pub use forest::{train_rfct, ForestConfig, ForestModel};
pub use model::{Classifier, ClassifierModel};
pub use msvm::{train_msvm, MsvmConfig, MsvmModel};
pub use tree::{gini, train_ct2, TreeModel};
