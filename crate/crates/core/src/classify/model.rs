//! Common prediction contract and model persistence.
//!
//! Models are stored as JSON:
//!
//! ```json
//! {"format": "idi-model", "kind": "ct2", "model": { ... }, "version": "1.0"}
//! ```
//!
//! `kind` is one of `ct1`, `ct2`, `rfct`, `msvm`; `model` holds the fields of
//! the matching model type. Keys are written in sorted order and floats with
//! round-trip precision.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classify::ct1::Ct1Model;
use crate::classify::forest::ForestModel;
use crate::classify::msvm::MsvmModel;
use crate::classify::tree::TreeModel;
use crate::error::{Error, Result};
use crate::format::Version;
use crate::label::Class;
use crate::sensing::FeatureVector;

pub const FORMAT: &str = "idi-model";
pub const VERSION: Version = Version::new(1, 0);

pub trait Classifier {
    fn classify(&self, v: &FeatureVector) -> Class;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "lowercase")]
pub enum ClassifierModel {
    Ct1(Ct1Model),
    Ct2(TreeModel),
    Rfct(ForestModel),
    Msvm(MsvmModel),
}

impl Classifier for ClassifierModel {
    fn classify(&self, v: &FeatureVector) -> Class {
        match self {
            ClassifierModel::Ct1(m) => m.classify(v),
            ClassifierModel::Ct2(m) => m.classify(v),
            ClassifierModel::Rfct(m) => m.classify(v),
            ClassifierModel::Msvm(m) => m.classify(v),
        }
    }
}

macro_rules! impl_classifier {
    ($($t:ty),*) => {$(
        impl Classifier for $t {
            fn classify(&self, v: &FeatureVector) -> Class {
                <$t>::classify(self, v)
            }
        }
    )*};
}

impl_classifier!(Ct1Model, TreeModel, ForestModel, MsvmModel);

impl ClassifierModel {
    pub fn kind(&self) -> &'static str {
        match self {
            ClassifierModel::Ct1(_) => "ct1",
            ClassifierModel::Ct2(_) => "ct2",
            ClassifierModel::Rfct(_) => "rfct",
            ClassifierModel::Msvm(_) => "msvm",
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        let obj = v.as_object_mut().expect("tagged enum serializes to an object");
        let mut out = serde_json::Map::new();
        out.insert("format".into(), FORMAT.into());
        out.insert("version".into(), VERSION.to_string().into());
        out.append(obj);
        let mut s = serde_json::to_string(&serde_json::Value::Object(out))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut v: serde_json::Value = serde_json::from_str(text)?;
        let obj = v
            .as_object_mut()
            .ok_or_else(|| Error::parse("model", None, "expected a JSON object"))?;
        match obj.remove("format") {
            Some(serde_json::Value::String(f)) if f == FORMAT => {}
            _ => return Err(Error::parse("model", None, format!("missing `\"format\": \"{FORMAT}\"`"))),
        }
        let version = match obj.remove("version") {
            Some(serde_json::Value::String(s)) => s,
            _ => return Err(Error::parse("model", None, "missing version")),
        };
        VERSION.check_compatible(FORMAT, &version)?;
        Ok(serde_json::from_value(v)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
