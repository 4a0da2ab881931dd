//! JSON weights file:
//! `{format_version, variant, layer_dims, activation, weights, biases}` with
//! row-major weight matrices. The variational log-variance head, when present,
//! is the last entry of `weights`/`biases`/`activation`.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Activation, AutoencoderModel, Layer, Variant};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct WeightsFile {
    format_version: serde_json::Value,
    variant: Variant,
    layer_dims: Vec<usize>,
    activation: Vec<Activation>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl AutoencoderModel {
    pub fn to_json(&self) -> String {
        let layers: Vec<&Layer> = self.layers.iter().chain(self.logvar_head.iter()).collect();
        let file = WeightsFile {
            format_version: FORMAT_VERSION.into(),
            variant: self.variant,
            layer_dims: self.layer_dims.clone(),
            activation: layers.iter().map(|l| l.activation).collect(),
            weights: layers.iter().map(|l| l.weights.iter().copied().collect()).collect(),
            biases: layers.iter().map(|l| l.bias.to_vec()).collect(),
        };
        serde_json::to_string(&file).expect("weights serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        // check the version before the full schema so a newer file reports
        // a version error rather than a parse error
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        match value.get("format_version") {
            Some(v) if v.as_u64() == Some(u64::from(FORMAT_VERSION)) => {}
            Some(v) => return Err(Error::Version(v.to_string())),
            None => return Err(Error::Parse("missing format_version".into())),
        }
        let file: WeightsFile =
            serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;

        let expected = file.layer_dims.len().saturating_sub(1)
            + usize::from(file.variant == Variant::Variational);
        if file.weights.len() != expected
            || file.biases.len() != expected
            || file.activation.len() != expected
        {
            return Err(Error::Parse(format!(
                "expected {expected} layers, found {} weights / {} biases / {} activations",
                file.weights.len(),
                file.biases.len(),
                file.activation.len()
            )));
        }
        let dims = &file.layer_dims;
        let mut layers = Vec::with_capacity(expected);
        for (i, ((w, b), act)) in file
            .weights
            .into_iter()
            .zip(file.biases)
            .zip(file.activation)
            .enumerate()
        {
            // the trailing head shares the shape of the innermost layer
            let l = if i + 1 < dims.len() { i } else { super::code_layer(dims) };
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let weights = Array2::from_shape_vec((fan_out, fan_in), w)
                .map_err(|e| Error::Parse(format!("layer {i} weights: {e}")))?;
            layers.push(Layer {
                weights,
                bias: Array1::from(b),
                activation: act,
            });
        }
        let logvar_head = (file.variant == Variant::Variational).then(|| layers.pop()).flatten();
        AutoencoderModel::from_parts(file.variant, file.layer_dims, layers, logvar_head)
            .map_err(|e| Error::Parse(e.to_string()))
    }
}

pub fn save_model(model: &AutoencoderModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<AutoencoderModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    AutoencoderModel::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn roundtrip_every_variant() {
        let dir = tempfile::tempdir().unwrap();
        for (variant, dims) in [
            (Variant::Simple, vec![6, 3, 6]),
            (Variant::Deep, vec![6, 4, 2, 4, 6]),
            (Variant::Denoising, vec![6, 4, 2, 4, 6]),
            (Variant::Variational, vec![6, 4, 2, 4, 6]),
        ] {
            let model = AutoencoderModel::init(variant, &dims, 17).unwrap();
            let path = dir.path().join(format!("{}.json", variant.name()));
            save_model(&model, &path).unwrap();
            assert_eq!(load_model(&path).unwrap(), model);
        }
    }

    #[test]
    fn unknown_version_is_rejected() {
        let model = AutoencoderModel::init(Variant::Simple, &[4, 2, 4], 1).unwrap();
        let text = model.to_json().replacen("\"format_version\":1", "\"format_version\":\"99\"", 1);
        assert!(matches!(AutoencoderModel::from_json(&text), Err(Error::Version(_))));
        let text = model.to_json().replacen("\"format_version\":1", "\"format_version\":99", 1);
        assert!(matches!(AutoencoderModel::from_json(&text), Err(Error::Version(_))));
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let model = AutoencoderModel::init(Variant::Simple, &[4, 2, 4], 1).unwrap();
        let text = model.to_json();
        let cut = &text[..text.len() / 2];
        assert!(matches!(AutoencoderModel::from_json(cut), Err(Error::Parse(_))));
    }

    #[test]
    fn wrong_matrix_size_is_a_parse_error() {
        let model = AutoencoderModel::init(Variant::Simple, &[4, 2, 4], 1).unwrap();
        let mut value: serde_json::Value = serde_json::from_str(&model.to_json()).unwrap();
        value["weights"][0].as_array_mut().unwrap().pop();
        assert!(matches!(
            AutoencoderModel::from_json(&value.to_string()),
            Err(Error::Parse(_))
        ));
    }

    proptest! {
        #[test]
        fn serialization_is_lossless(seed in any::<u64>(), scale in 1e-300f64..1e300) {
            let mut model = AutoencoderModel::init(Variant::Simple, &[5, 3, 5], seed).unwrap();
            for layer in model.layers_mut() {
                layer.weights.mapv_inplace(|w| w * scale);
                layer.bias.mapv_inplace(|_| scale / 3.0);
            }
            let back = AutoencoderModel::from_json(&model.to_json()).unwrap();
            prop_assert_eq!(back, model);
        }
    }
}
