use serde::{Deserialize, Serialize};

use super::model::ManifoldModel;
use super::CohomologyError;

pub const MODEL_SCHEMA: u32 = 1;

/// On-disk catalogue: one JSON document per model under `models`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema: u32,
    pub models: Vec<ManifoldModel>,
}

pub fn models_to_json(models: &[ManifoldModel]) -> String {
    let file = ModelFile {
        schema: MODEL_SCHEMA,
        models: models.to_vec(),
    };
    serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
}

pub fn models_from_json(text: &str) -> Result<Vec<ManifoldModel>, CohomologyError> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| CohomologyError::Parse(e.to_string()))?;
    if file.schema != MODEL_SCHEMA {
        return Err(CohomologyError::Parse(format!(
            "unsupported model schema {}",
            file.schema
        )));
    }
    Ok(file.models)
}
