//! Single-file model artifact: a versioned JSON document holding the trained
//! parameters, the scaler, the class order, and the config digest of the run
//! that produced it. Loading validates the whole shape chain before anything
//! downstream touches the tensors, so a corrupted or hand-edited file fails
//! here with a message instead of deep inside a matrix multiply.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gan::GanModel;

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("unsupported artifact format version {found} (this build reads {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error("invalid model artifact: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub config_digest: String,
    pub model: GanModel,
}

/// Check every structural invariant of a deserialized model: layer shape
/// chains, dimension fields, class list ordering, and finiteness of all
/// parameters.
pub fn validate_model(model: &GanModel) -> Result<(), ArtifactError> {
    let fail = |message: String| Err(ArtifactError::Invalid(message));

    model
        .config
        .validate()
        .map_err(|e| ArtifactError::Invalid(e.to_string()))?;

    if model.seen_classes.is_empty() {
        return fail("empty seen class list".to_string());
    }
    if !model.seen_classes.windows(2).all(|w| w[0] < w[1]) {
        return fail("seen class list is not strictly ascending".to_string());
    }
    if model.scaler.dimension() != model.x_dim {
        return fail(format!(
            "scaler covers {} dimensions but x_dim is {}",
            model.scaler.dimension(),
            model.x_dim
        ));
    }

    let gen = &model.generator;
    if gen.z_dim != model.config.z_dim {
        return fail(format!(
            "generator z_dim {} disagrees with config z_dim {}",
            gen.z_dim, model.config.z_dim
        ));
    }
    if model.config.use_text_fc != gen.fc_text.is_some() {
        return fail("text reduction layer presence disagrees with config".to_string());
    }
    let reduced = match &gen.fc_text {
        Some(fc) => {
            if fc.input_dim() != model.text_dim {
                return fail(format!(
                    "text layer expects {} inputs but text_dim is {}",
                    fc.input_dim(),
                    model.text_dim
                ));
            }
            fc.output_dim()
        }
        None => model.text_dim,
    };
    if gen.fc_hidden.input_dim() != reduced + gen.z_dim {
        return fail(format!(
            "hidden layer expects {} inputs but text ({reduced}) + noise ({}) is {}",
            gen.fc_hidden.input_dim(),
            gen.z_dim,
            reduced + gen.z_dim
        ));
    }
    if gen.fc_out.input_dim() != gen.fc_hidden.output_dim() {
        return fail("generator hidden and output layers do not chain".to_string());
    }
    if gen.fc_out.output_dim() != model.x_dim {
        return fail(format!(
            "generator emits {} dimensions but x_dim is {}",
            gen.fc_out.output_dim(),
            model.x_dim
        ));
    }

    let disc = &model.discriminator;
    if disc.fc_shared.input_dim() != model.x_dim {
        return fail(format!(
            "discriminator expects {} inputs but x_dim is {}",
            disc.fc_shared.input_dim(),
            model.x_dim
        ));
    }
    let shared = disc.fc_shared.output_dim();
    if disc.head_real.input_dim() != shared || disc.head_cls.input_dim() != shared {
        return fail("discriminator heads do not chain onto the shared layer".to_string());
    }
    if disc.head_real.output_dim() != 1 {
        return fail("critic head must emit a single score".to_string());
    }
    if disc.head_cls.output_dim() != model.seen_classes.len() {
        return fail(format!(
            "classifier head emits {} logits for {} classes",
            disc.head_cls.output_dim(),
            model.seen_classes.len()
        ));
    }

    for collection in [gen.to_named(), disc.to_named()] {
        for (name, tensor) in collection {
            if let Some(v) = tensor.values().iter().find(|v| !v.is_finite()) {
                return fail(format!("parameter {name} contains non-finite value {v}"));
            }
        }
    }

    Ok(())
}

pub fn save_model(
    path: &Path,
    model: &GanModel,
    config_digest: &str,
) -> Result<(), ArtifactError> {
    let artifact = ModelArtifact {
        format_version: ARTIFACT_FORMAT_VERSION,
        config_digest: config_digest.to_string(),
        model: model.clone(),
    };
    let bytes = serde_json::to_vec(&artifact).map_err(|source| ArtifactError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    std::fs::write(path, bytes).map_err(|source| ArtifactError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<ModelArtifact, ArtifactError> {
    let text = std::fs::read_to_string(path).map_err(|source| ArtifactError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let artifact: ModelArtifact =
        serde_json::from_str(&text).map_err(|source| ArtifactError::Json {
            path: path.to_path_buf(),
            source,
        })?;
    if artifact.format_version != ARTIFACT_FORMAT_VERSION {
        return Err(ArtifactError::UnsupportedVersion {
            found: artifact.format_version,
            expected: ARTIFACT_FORMAT_VERSION,
        });
    }
    validate_model(&artifact.model)?;
    Ok(artifact)
}
