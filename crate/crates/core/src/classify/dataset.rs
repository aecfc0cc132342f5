use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::Version;
use crate::label::{Class, Label};
use crate::sensing::features::{FeatureVector, FEATURE_NAMES};

pub const FORMAT: &str = "idi-features";
pub const VERSION: Version = Version::new(1, 0);

/// One labelled burst.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub features: FeatureVector,
    pub label: Label,
    /// INR of the burst on the sensing channel.
    pub inr_db: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn new(records: Vec<Record>) -> Self {
        Dataset { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records per class.
    pub fn class_counts(&self) -> [usize; 4] {
        let mut c = [0; 4];
        for r in &self.records {
            c[r.label.class().index()] += 1;
        }
        c
    }

    pub fn classes_present(&self) -> Vec<Class> {
        let c = self.class_counts();
        Class::ALL.into_iter().filter(|k| c[k.index()] > 0).collect()
    }

    pub fn filter(&self, keep: impl Fn(&Record) -> bool) -> Dataset {
        Dataset {
            records: self.records.iter().filter(|r| keep(r)).copied().collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {FORMAT} {VERSION}")?;
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = FEATURE_NAMES.to_vec();
        header.extend(["label", "inr_db"]);
        w.write_record(&header)?;
        for r in &self.records {
            let f = &r.features;
            w.write_record([
                f.su.to_string(),
                f.sd.to_string(),
                f.sc.to_string(),
                f.tl.to_string(),
                f.ep.to_string(),
                f.ec.to_string(),
                f.er.to_string(),
                u8::from(f.cca).to_string(),
                r.label.code().to_string(),
                r.inr_db.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV written by [`Dataset::write_csv`]. The first line must
    /// carry the format version.
    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Dataset> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let parts: Vec<&str> = first.trim().trim_start_matches('#').split_whitespace().collect();
        if parts.len() != 2 || parts[0] != FORMAT || !first.starts_with('#') {
            return Err(Error::parse("dataset", Some(1), format!("expected `# {FORMAT} <version>`")));
        }
        VERSION.check_compatible(FORMAT, parts[1])?;

        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let expected: Vec<&str> = FEATURE_NAMES.iter().copied().chain(["label", "inr_db"]).collect();
        let headers = rd.headers()?.clone();
        for (i, want) in expected.iter().enumerate() {
            match headers.get(i) {
                Some(h) if h.trim() == *want => {}
                Some(h) => {
                    return Err(Error::Schema {
                        column: h.to_string(),
                        message: format!("column {} should be `{want}`", i + 1),
                    })
                }
                None => {
                    return Err(Error::Schema {
                        column: want.to_string(),
                        message: "column missing".into(),
                    })
                }
            }
        }
        if headers.len() > expected.len() {
            return Err(Error::Schema {
                column: headers[expected.len()].to_string(),
                message: "unexpected extra column".into(),
            });
        }

        let mut records = Vec::new();
        for row in rd.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line() as usize + 1);
            let field = |i: usize| row.get(i).unwrap_or("").trim();
            let num = |i: usize| -> Result<f64> {
                let v: f64 = field(i).parse().map_err(|_| Error::Schema {
                    column: expected[i].to_string(),
                    message: format!("line {line}: `{}` is not a number", field(i)),
                })?;
                if !v.is_finite() {
                    return Err(Error::Schema {
                        column: expected[i].to_string(),
                        message: format!("line {line}: value must be finite"),
                    });
                }
                Ok(v)
            };
            let int = |i: usize, max: f64| -> Result<f64> {
                let v = num(i)?;
                if v.fract() != 0.0 || v < 0.0 || v > max {
                    return Err(Error::Schema {
                        column: expected[i].to_string(),
                        message: format!("line {line}: `{}` is not a valid count", field(i)),
                    });
                }
                Ok(v)
            };
            let sc = int(2, 255.0)? as u8;
            if !(11..=26).contains(&sc) {
                return Err(Error::Schema {
                    column: "f_sc".into(),
                    message: format!("line {line}: sensing channel {sc} outside [11, 26]"),
                });
            }
            let cca = match int(7, 1.0)? as u8 {
                0 => false,
                _ => true,
            };
            let label: Label = field(8).parse().map_err(|e: Error| Error::Schema {
                column: "label".into(),
                message: format!("line {line}: {e}"),
            })?;
            records.push(Record {
                features: FeatureVector {
                    su: num(0)?,
                    sd: num(1)?,
                    sc,
                    tl: int(3, u32::MAX as f64)? as u32,
                    ep: num(4)?,
                    ec: num(5)?,
                    er: int(6, u32::MAX as f64)? as u32,
                    cca,
                },
                label,
                inr_db: num(9)?,
            });
        }
        Ok(Dataset { records })
    }
}

/// Subset of the eight features a model may look at.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct FeatureSet {
    indices: Vec<usize>,
}

impl FeatureSet {
    pub fn all() -> Self {
        FeatureSet {
            indices: (0..8).collect(),
        }
    }

    /// The spectral features `F_Su`, `F_Sd`, `F_Sc`.
    pub fn spectral() -> Self {
        FeatureSet { indices: vec![0, 1, 2] }
    }

    pub fn from_names(names: &[&str]) -> Result<Self> {
        let mut indices = Vec::new();
        for n in names {
            let i = FEATURE_NAMES
                .iter()
                .position(|f| f == n)
                .ok_or_else(|| Error::invalid(format!("unknown feature `{n}`")))?;
            if !indices.contains(&i) {
                indices.push(i);
            }
        }
        if indices.is_empty() {
            return Err(Error::invalid("feature set is empty"));
        }
        indices.sort_unstable();
        Ok(FeatureSet { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.contains(&i)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn project(&self, v: &FeatureVector) -> Vec<f64> {
        let a = v.as_array();
        self.indices.iter().map(|&i| a[i]).collect()
    }
}

impl TryFrom<Vec<String>> for FeatureSet {
    type Error = Error;

    fn try_from(v: Vec<String>) -> Result<Self> {
        let names: Vec<&str> = v.iter().map(String::as_str).collect();
        FeatureSet::from_names(&names)
    }
}

impl From<FeatureSet> for Vec<String> {
    fn from(f: FeatureSet) -> Self {
        f.indices.iter().map(|&i| FEATURE_NAMES[i].to_string()).collect()
    }
}
