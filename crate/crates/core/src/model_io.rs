//! Network and tensor files.
//!
//! A model file is a TOML document with a fixed schema (format version 1):
//!
//! ```toml
//! format = "gmrobust-model"
//! version = 1
//! role = "classifier"
//! input_dim = 2
//! output_dim = 2
//!
//! [meta]
//! dataset = "fixture"
//!
//! [[layers]]
//! rows = 2
//! cols = 2
//! activation = "identity"
//! weights = [1.0, 0.0, 0.0, 1.0]
//! bias = [0.0, 0.0]
//! ```
//!
//! The loader validates and rejects; it never repairs. The writer emits
//! exactly the layout above with shortest round-trip floats, so
//! `save(load(f))` is a normal form. See `docs/FORMATS.md` for the grammar.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::doc::DocWriter;
use crate::error::{Error, Result};
use crate::network::{Layer, Network, Role};
use crate::tensor::{Activation, Tensor};

pub const MODEL_FORMAT: &str = "gmrobust-model";
pub const TENSOR_FORMAT: &str = "gmrobust-tensor";
pub const FORMAT_VERSION: i64 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[allow(dead_code)]
    format: Option<String>,
    #[allow(dead_code)]
    version: i64,
    role: String,
    input_dim: i64,
    output_dim: i64,
    #[serde(default)]
    meta: BTreeMap<String, String>,
    #[serde(default)]
    layers: Vec<RawLayer>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayer {
    rows: i64,
    cols: i64,
    activation: String,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTensor {
    #[allow(dead_code)]
    format: Option<String>,
    #[allow(dead_code)]
    version: i64,
    shape: Vec<i64>,
    data: Vec<f64>,
}

fn parse_text(bytes: &[u8]) -> Result<&str> {
    std::str::from_utf8(bytes).map_err(|e| {
        Error::Parse(format!("input is not UTF-8 (invalid byte at offset {})", e.valid_up_to()))
    })
}

/// Syntax check plus the header fields every document in the family carries.
fn check_header(text: &str, expected_format: &str) -> Result<()> {
    let table: toml::Table = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if let Some(f) = table.get("format") {
        if f.as_str() != Some(expected_format) {
            return Err(Error::Parse(format!(
                "format field is {f}, expected \"{expected_format}\""
            )));
        }
    }
    match table.get("version") {
        None => Err(Error::Parse("missing required field `version`".into())),
        Some(toml::Value::Integer(FORMAT_VERSION)) => Ok(()),
        Some(toml::Value::Integer(v)) => Err(Error::Version { found: *v }),
        Some(other) => Err(Error::Parse(format!("version must be an integer, got {other}"))),
    }
}

fn positive(v: i64, what: &str, layer: Option<usize>) -> Result<usize> {
    if v >= 1 {
        Ok(v as usize)
    } else {
        Err(Error::invariant(layer, format!("{what} must be a positive integer, got {v}")))
    }
}

/// Parses and validates a model file.
pub fn load_model(bytes: &[u8]) -> Result<Network> {
    let text = parse_text(bytes)?;
    check_header(text, MODEL_FORMAT)?;
    let raw: RawModel = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;

    let role: Role = raw
        .role
        .parse()
        .map_err(|e: Error| Error::invariant(None, e.to_string()))?;
    if role == Role::Composed {
        return Err(Error::invariant(
            None,
            "role must be generator or classifier; composed networks are never stored",
        ));
    }
    let input_dim = positive(raw.input_dim, "input_dim", None)?;
    let output_dim = positive(raw.output_dim, "output_dim", None)?;
    if raw.layers.is_empty() {
        return Err(Error::invariant(None, "model has no layers"));
    }

    let mut layers = Vec::with_capacity(raw.layers.len());
    let mut expected_cols = input_dim;
    for (i, rl) in raw.layers.into_iter().enumerate() {
        let rows = positive(rl.rows, "rows", Some(i))?;
        let cols = positive(rl.cols, "cols", Some(i))?;
        let activation: Activation = rl
            .activation
            .parse()
            .map_err(|e: Error| Error::invariant(Some(i), e.to_string()))?;
        if rl.weights.len() != rows * cols {
            return Err(Error::invariant(
                Some(i),
                format!(
                    "weights has {} entries, rows x cols = {rows} x {cols} = {}",
                    rl.weights.len(),
                    rows * cols
                ),
            ));
        }
        if rl.bias.len() != rows {
            return Err(Error::invariant(
                Some(i),
                format!("bias has {} entries, rows = {rows}", rl.bias.len()),
            ));
        }
        if let Some(j) = rl.weights.iter().position(|v| !v.is_finite()) {
            return Err(Error::invariant(Some(i), format!("weights[{j}] is not finite")));
        }
        if let Some(j) = rl.bias.iter().position(|v| !v.is_finite()) {
            return Err(Error::invariant(Some(i), format!("bias[{j}] is not finite")));
        }
        if cols != expected_cols {
            let source = if i == 0 {
                "input_dim".to_string()
            } else {
                format!("rows of layer {}", i - 1)
            };
            return Err(Error::invariant(
                Some(i),
                format!("cols = {cols} does not chain with {source} = {expected_cols}"),
            ));
        }
        expected_cols = rows;
        layers.push(Layer::dense(rows, cols, rl.weights, rl.bias, activation)?);
    }
    if expected_cols != output_dim {
        return Err(Error::invariant(
            None,
            format!("output_dim = {output_dim} but the final layer has {expected_cols} rows"),
        ));
    }
    Ok(Network::new(role, layers)?.with_meta(raw.meta))
}

/// Serializes a generator or classifier as a version 1 model file.
pub fn save_model(net: &Network) -> Result<String> {
    if net.role() == Role::Composed {
        return Err(Error::Role(
            "composed networks are kept in memory only; save the generator and classifier".into(),
        ));
    }
    let mut w = DocWriter::new();
    w.str("format", MODEL_FORMAT)
        .int("version", FORMAT_VERSION)
        .str("role", net.role().name())
        .uint("input_dim", net.input_dim())
        .uint("output_dim", net.output_dim())
        .table("meta");
    for (k, v) in net.meta() {
        w.str(k, v);
    }
    for layer in net.layers() {
        w.array_table("layers")
            .uint("rows", layer.output_dim())
            .uint("cols", layer.input_dim())
            .str("activation", layer.activation().name())
            .floats("weights", layer.weights().data())
            .floats("bias", layer.bias().data());
    }
    Ok(w.finish())
}

pub fn read_model(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    load_model(&bytes).map_err(|e| annotate(path, e))
}

pub fn write_model(path: impl AsRef<Path>, net: &Network) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, save_model(net)?).map_err(|e| Error::io(path, e))
}

fn annotate(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        Error::Invariant { layer, message } => Error::Invariant {
            layer,
            message: format!("{}: {message}", path.display()),
        },
        other => other.within(path.display().to_string()),
    }
}

pub fn load_tensor(bytes: &[u8]) -> Result<Tensor> {
    let text = parse_text(bytes)?;
    check_header(text, TENSOR_FORMAT)?;
    let raw: RawTensor = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let shape = raw
        .shape
        .iter()
        .map(|&d| positive(d, "shape entry", None))
        .collect::<Result<Vec<_>>>()?;
    Tensor::new(shape, raw.data)
}

pub fn save_tensor(t: &Tensor) -> String {
    DocWriter::new()
        .str("format", TENSOR_FORMAT)
        .int("version", FORMAT_VERSION)
        .uints("shape", t.shape())
        .floats("data", t.data())
        .finish()
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    load_tensor(&bytes).map_err(|e| annotate(path, e))
}

pub fn write_tensor(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, save_tensor(t)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rng::RngStream;

    const MINIMAL: &str = r#"
version = 1
role = "generator"
input_dim = 2
output_dim = 2

[[layers]]
rows = 2
cols = 2
activation = "identity"
weights = [1, 0, 0, 1]
bias = [0.0, 0.0]
"#;

    #[test]
    fn minimal_file() {
        let net = load_model(MINIMAL.as_bytes()).unwrap();
        assert_eq!(net.input_dim(), 2);
        assert_eq!(net.role(), Role::Generator);
        assert_eq!(net, fixtures::identity_generator(2));
    }

    #[test]
    fn short_weights_name_layer_zero() {
        let bad = MINIMAL.replace("[1, 0, 0, 1]", "[1, 0, 0]");
        let err = load_model(bad.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Invariant { layer: Some(0), .. }), "{err}");
        assert!(err.to_string().contains("layer 0"));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = load_model(b"version = 1\nrole = \n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Parse(_)));
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn version_two_is_rejected() {
        let bad = MINIMAL.replace("version = 1", "version = 2");
        assert!(matches!(load_model(bad.as_bytes()), Err(Error::Version { found: 2 })));
    }

    #[test]
    fn identity_layer_keeps_activation_field() {
        let text = save_model(&fixtures::identity_generator(2)).unwrap();
        assert!(text.contains("activation = \"identity\""));
    }

    #[test]
    fn meta_passes_through() {
        let mut meta = BTreeMap::new();
        meta.insert("dataset".to_string(), "mnist".to_string());
        meta.insert("training seed".to_string(), "42 \"quoted\"".to_string());
        let net = fixtures::threshold_classifier().with_meta(meta.clone());
        let back = load_model(save_model(&net).unwrap().as_bytes()).unwrap();
        assert_eq!(back.meta(), &meta);
    }

    #[test]
    fn composed_networks_are_not_saved() {
        assert!(matches!(save_model(&fixtures::threshold_model()), Err(Error::Role(_))));
    }

    #[test]
    fn round_trip_preserves_evaluation() {
        for net in [
            fixtures::random_net(Role::Generator, &[3, 7, 5], &[Activation::Tanh, Activation::Sigmoid], 4),
            fixtures::random_net(Role::Classifier, &[5, 9, 3], &[Activation::Relu, Activation::Identity], 5),
        ] {
            let back = load_model(save_model(&net).unwrap().as_bytes()).unwrap();
            assert_eq!(back, net);
            let mut rng = RngStream::new(6, 0);
            for _ in 0..100 {
                let x = Tensor::vector(rng.normal_vec(net.input_dim(), 1.0)).unwrap();
                assert_eq!(back.forward(&x).unwrap(), net.forward(&x).unwrap());
            }
        }
    }

    #[test]
    fn tensor_round_trip_and_errors() {
        let t = Tensor::vector(vec![0.1, -2.5e-9, 3.0]).unwrap();
        assert_eq!(load_tensor(save_tensor(&t).as_bytes()).unwrap(), t);
        let wrong = save_tensor(&t).replace("gmrobust-tensor", "gmrobust-model");
        assert!(matches!(load_tensor(wrong.as_bytes()), Err(Error::Parse(_))));
        assert!(load_tensor(b"version = 1\nshape = [2]\ndata = [1.0]\n").is_err());
    }
}
