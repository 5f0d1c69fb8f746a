//! Patient record store and role view projection.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

/// Every field name a view template may reference, in display order.
pub const FIELDS: [&str; 15] = [
    "ID",
    "Age",
    "Gender",
    "Weight",
    "Smoker",
    "Children",
    "BMI",
    "Region",
    "Charges",
    "BodyPartExamined",
    "PhotometricInterpretation",
    "PixelSpacing",
    "PixelBandwidth",
    "AcquisitionDate",
    "Image",
];

pub fn is_known_field(name: &str) -> bool {
    FIELDS.contains(&name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatientRecord {
    #[serde(rename = "ID")]
    pub id: String,
    #[serde(rename = "Age", default, skip_serializing_if = "Option::is_none")]
    pub age: Option<u32>,
    #[serde(rename = "Gender", default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<String>,
    #[serde(rename = "Weight", default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    #[serde(rename = "Smoker", default, skip_serializing_if = "Option::is_none")]
    pub smoker: Option<String>,
    #[serde(rename = "Children", default, skip_serializing_if = "Option::is_none")]
    pub children: Option<u32>,
    #[serde(rename = "BMI", default, skip_serializing_if = "Option::is_none")]
    pub bmi: Option<String>,
    #[serde(rename = "Region", default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    #[serde(rename = "Charges", default, skip_serializing_if = "Option::is_none")]
    pub charges: Option<f64>,
    #[serde(rename = "BodyPartExamined", default, skip_serializing_if = "Option::is_none")]
    pub body_part_examined: Option<String>,
    #[serde(rename = "PhotometricInterpretation", default, skip_serializing_if = "Option::is_none")]
    pub photometric_interpretation: Option<String>,
    #[serde(rename = "PixelSpacing", default, skip_serializing_if = "Option::is_none")]
    pub pixel_spacing: Option<[f64; 2]>,
    #[serde(rename = "PixelBandwidth", default, skip_serializing_if = "Option::is_none")]
    pub pixel_bandwidth: Option<f64>,
    #[serde(rename = "AcquisitionDate", default, skip_serializing_if = "Option::is_none")]
    pub acquisition_date: Option<String>,
    #[serde(rename = "Image", default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    /// Soft-deleted image modalities (`ct`, `pet`, ...). Never projected.
    #[serde(rename = "DeletedModalities", default, skip_serializing_if = "BTreeSet::is_empty")]
    pub deleted_modalities: BTreeSet<String>,
}

fn json<T: Serialize>(v: &Option<T>) -> Option<Value> {
    v.as_ref().map(|x| serde_json::to_value(x).expect("plain data"))
}

impl PatientRecord {
    pub fn field(&self, name: &str) -> Option<Value> {
        match name {
            "ID" => Some(Value::String(self.id.clone())),
            "Age" => json(&self.age),
            "Gender" => json(&self.gender),
            "Weight" => json(&self.weight),
            "Smoker" => json(&self.smoker),
            "Children" => json(&self.children),
            "BMI" => json(&self.bmi),
            "Region" => json(&self.region),
            "Charges" => json(&self.charges),
            "BodyPartExamined" => json(&self.body_part_examined),
            "PhotometricInterpretation" => json(&self.photometric_interpretation),
            "PixelSpacing" => json(&self.pixel_spacing),
            "PixelBandwidth" => json(&self.pixel_bandwidth),
            "AcquisitionDate" => json(&self.acquisition_date),
            "Image" => json(&self.image),
            _ => None,
        }
    }

    /// Numeric part of the ID (`PT0986` is 986), used as the route `<intid>`.
    pub fn intid(&self) -> Option<u64> {
        let digits: String = self.id.chars().filter(char::is_ascii_digit).collect();
        digits.parse().ok()
    }
}

/// A record filtered to a template; serializes as a JSON object in
/// template order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Projection(pub Vec<(String, Value)>);

impl Projection {
    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|(k, _)| k.as_str())
    }
}

impl Serialize for Projection {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

/// Exactly the template's fields, in template order, skipping fields the
/// record lacks. Repeated template entries are emitted once.
pub fn project_view(record: &PatientRecord, template: &[String]) -> Projection {
    let mut out: Vec<(String, Value)> = Vec::with_capacity(template.len());
    for name in template {
        if out.iter().any(|(k, _)| k == name) {
            continue;
        }
        if let Some(v) = record.field(name) {
            out.push((name.clone(), v));
        }
    }
    Projection(out)
}

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("no patient with id {0}")]
    NotFound(u64),
}

struct Entry {
    path: PathBuf,
    record: PatientRecord,
}

/// Flat directory of one JSON file per patient.
pub struct RecordStore {
    entries: RwLock<BTreeMap<u64, Entry>>,
    locks: std::sync::Mutex<HashMap<u64, Arc<tokio::sync::Mutex<()>>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeleteReceipt {
    pub patient: String,
    pub modality: String,
    pub deleted: bool,
    pub already_deleted: bool,
}

impl RecordStore {
    pub fn open(dir: &Path) -> Result<Self, RecordError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| RecordError::Io { path, source }
        };
        let mut entries = BTreeMap::new();
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(io(dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        for path in files {
            let text = std::fs::read_to_string(&path).map_err(io(&path))?;
            let invalid = |message: String| RecordError::Invalid {
                path: path.clone(),
                message,
            };
            let record: PatientRecord = serde_json::from_str(&text).map_err(|e| invalid(e.to_string()))?;
            if record.id.trim().is_empty() {
                return Err(invalid("ID must be non-empty".into()));
            }
            let intid = record.intid().ok_or_else(|| invalid(format!("ID {:?} has no numeric part", record.id)))?;
            if let Some(prev) = entries.get(&intid) {
                let prev: &Entry = prev;
                return Err(invalid(format!("ID {} collides with {}", record.id, prev.path.display())));
            }
            entries.insert(intid, Entry { path, record });
        }
        Ok(RecordStore {
            entries: RwLock::new(entries),
            locks: Default::default(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, intid: u64) -> Option<PatientRecord> {
        self.entries.read().unwrap().get(&intid).map(|e| e.record.clone())
    }

    fn lock_for(&self, intid: u64) -> Arc<tokio::sync::Mutex<()>> {
        self.locks.lock().unwrap().entry(intid).or_default().clone()
    }

    /// Marks `modality` deleted for the patient and rewrites its file.
    pub async fn tombstone(&self, intid: u64, modality: &str) -> Result<DeleteReceipt, RecordError> {
        let lock = self.lock_for(intid);
        let _guard = lock.lock().await;
        let (path, mut record) = {
            let entries = self.entries.read().unwrap();
            let e = entries.get(&intid).ok_or(RecordError::NotFound(intid))?;
            (e.path.clone(), e.record.clone())
        };
        let newly = record.deleted_modalities.insert(modality.to_string());
        if newly {
            let body = serde_json::to_vec_pretty(&record).expect("record serializes");
            let tmp = path.with_extension("json.tmp");
            tokio::fs::write(&tmp, &body)
                .await
                .map_err(|source| RecordError::Io { path: tmp.clone(), source })?;
            tokio::fs::rename(&tmp, &path)
                .await
                .map_err(|source| RecordError::Io { path: path.clone(), source })?;
            if let Some(e) = self.entries.write().unwrap().get_mut(&intid) {
                e.record = record.clone();
            }
        }
        Ok(DeleteReceipt {
            patient: record.id,
            modality: modality.to_string(),
            deleted: true,
            already_deleted: !newly,
        })
    }
}
