//! JSON model files.
//!
//! ```text
//! {"format":"based-forest","version":1,
//!  "config":{"n_estimators":220,"max_features":"all","min_samples_leaf":1,
//!            "max_depth":null,"bootstrap":true,"seed":42},
//!  "feature_names":["laplacian",...,"reblur"],
//!  "trees":[[{"f":0,"t":0.5,"l":1,"r":2},{"v":1.0},{"v":3.0}], ...]}
//! ```
//!
//! Each tree is a flat node array with the root at index 0. Floats are
//! written as shortest round-trip decimals and parsed back exactly.

use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use super::{RandomForestModel, TrainConfig, Tree, TreeNode};
use crate::error::{Error, Result};
use crate::features::{FEATURE_NAMES, NUM_FEATURES};

pub const FORMAT_NAME: &str = "based-forest";
pub const FORMAT_VERSION: u64 = 1;

impl RandomForestModel {
    pub fn to_json(&self) -> String {
        let trees: Vec<Value> = self
            .trees
            .iter()
            .map(|t| {
                Value::Array(
                    t.nodes()
                        .iter()
                        .map(|n| match *n {
                            TreeNode::Split {
                                feature,
                                threshold,
                                left,
                                right,
                            } => json!({"f": feature, "t": threshold, "l": left, "r": right}),
                            TreeNode::Leaf { value } => json!({ "v": value }),
                        })
                        .collect(),
                )
            })
            .collect();
        let doc = json!({
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "config": self.config,
            "feature_names": FEATURE_NAMES,
            "trees": trees,
        });
        let mut s = serde_json::to_string(&doc).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text)
            .map_err(|e| Error::schema("", format!("invalid JSON: {e}")))?;
        let top = doc
            .as_object()
            .ok_or_else(|| Error::schema("", "expected an object"))?;

        match field(top, "", "format")?.as_str() {
            Some(FORMAT_NAME) => {}
            _ => return Err(Error::schema("/format", format!("expected \"{FORMAT_NAME}\""))),
        }
        if field(top, "", "version")?.as_u64() != Some(FORMAT_VERSION) {
            return Err(Error::schema("/version", format!("expected {FORMAT_VERSION}")));
        }

        let config: TrainConfig = serde_json::from_value(field(top, "", "config")?.clone())
            .map_err(|e| Error::schema("/config", e.to_string()))?;
        config
            .validate()
            .map_err(|e| Error::schema("/config", e.to_string()))?;

        let names = field(top, "", "feature_names")?
            .as_array()
            .ok_or_else(|| Error::schema("/feature_names", "expected an array"))?;
        if names.len() != NUM_FEATURES {
            return Err(Error::schema(
                "/feature_names",
                format!("expected {NUM_FEATURES} names, got {}", names.len()),
            ));
        }
        for (i, (got, want)) in names.iter().zip(FEATURE_NAMES).enumerate() {
            if got.as_str() != Some(want) {
                return Err(Error::schema(
                    format!("/feature_names/{i}"),
                    format!("expected \"{want}\""),
                ));
            }
        }

        let trees_json = field(top, "", "trees")?
            .as_array()
            .ok_or_else(|| Error::schema("/trees", "expected an array"))?;
        if trees_json.len() != config.n_estimators {
            return Err(Error::schema(
                "/trees",
                format!(
                    "config declares {} trees, found {}",
                    config.n_estimators,
                    trees_json.len()
                ),
            ));
        }
        let trees = trees_json
            .iter()
            .enumerate()
            .map(|(i, t)| parse_tree(t, &format!("/trees/{i}")))
            .collect::<Result<Vec<_>>>()?;
        Ok(RandomForestModel::from_parts(trees, config))
    }
}

fn field<'a>(obj: &'a Map<String, Value>, at: &str, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::schema(format!("{at}/{key}"), "missing field"))
}

fn parse_tree(v: &Value, at: &str) -> Result<Tree> {
    let nodes_json = v
        .as_array()
        .ok_or_else(|| Error::schema(at, "expected a node array"))?;
    if nodes_json.is_empty() {
        return Err(Error::schema(at, "tree has no nodes"));
    }
    let len = nodes_json.len();
    let mut nodes = Vec::with_capacity(len);
    for (i, n) in nodes_json.iter().enumerate() {
        let here = format!("{at}/{i}");
        let obj = n
            .as_object()
            .ok_or_else(|| Error::schema(&here, "expected an object"))?;
        let node = if let Some(v) = obj.get("v") {
            if obj.len() != 1 {
                return Err(Error::schema(&here, "leaf must contain only \"v\""));
            }
            TreeNode::Leaf {
                value: finite(v, &format!("{here}/v"))?,
            }
        } else {
            if obj.len() != 4 {
                return Err(Error::schema(&here, "split needs exactly f, t, l, r"));
            }
            let feature = index(field(obj, &here, "f")?, &format!("{here}/f"))?;
            if feature >= NUM_FEATURES {
                return Err(Error::schema(format!("{here}/f"), "feature index out of range"));
            }
            let threshold = finite(field(obj, &here, "t")?, &format!("{here}/t"))?;
            let child = |k: &str| -> Result<usize> {
                let c = index(field(obj, &here, k)?, &format!("{here}/{k}"))?;
                // children follow their parent, which also rules out cycles
                if c <= i || c >= len {
                    return Err(Error::schema(
                        format!("{here}/{k}"),
                        format!("child index {c} must lie in {}..{len}", i + 1),
                    ));
                }
                Ok(c)
            };
            let left = child("l")?;
            let right = child("r")?;
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            }
        };
        nodes.push(node);
    }
    Ok(Tree::from_nodes(nodes))
}

fn finite(v: &Value, at: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::schema(at, "expected a finite number"))
}

fn index(v: &Value, at: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::schema(at, "expected a non-negative integer"))
}

pub fn save(model: &RandomForestModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<RandomForestModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RandomForestModel::from_json(&text)
}
