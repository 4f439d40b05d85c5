use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{GeometryError, Similitude};

/// JSON form of a set.
///
/// ```json
/// {"type": "ifs", "maps": [{"scale": 0.25, "translation": [0, 0]}, ...]}
/// {"type": "segment", "a": [3, 0], "b": [4, 0]}
/// {"type": "union", "A1": {...}, "A2": {...}}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SetDef {
    Ifs {
        maps: Vec<MapDef>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        outer_ball: Option<BallDef>,
    },
    Segment {
        a: Vec<f64>,
        b: Vec<f64>,
    },
    Union {
        #[serde(rename = "A1")]
        a1: Box<SetDef>,
        #[serde(rename = "A2")]
        a2: Box<SetDef>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDef {
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<Vec<f64>>>,
    pub translation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallDef {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl MapDef {
    pub fn to_similitude(&self) -> Result<Similitude, GeometryError> {
        match &self.rotation {
            Some(q) => Similitude::with_rotation(self.scale, q.clone(), self.translation.clone()),
            None => Similitude::new(self.scale, self.translation.clone()),
        }
    }

    pub fn from_similitude(map: &Similitude) -> Self {
        MapDef {
            scale: map.scale(),
            rotation: map.rotation().map(|q| q.to_vec()),
            translation: map.translation().to_vec(),
        }
    }
}

impl SetDef {
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("set definitions always serialize")
    }

    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SetSpec;

    #[test]
    fn parses_the_documented_forms() {
        let json = r#"{"type":"union",
            "A1":{"type":"ifs","maps":[
                {"scale":0.25,"translation":[0,0]},{"scale":0.25,"translation":[0.75,0]},
                {"scale":0.25,"translation":[0,0.75]},{"scale":0.25,"translation":[0.75,0.75]}]},
            "A2":{"type":"segment","a":[3,0],"b":[4,0]}}"#;
        let def: SetDef = serde_json::from_str(json).unwrap();
        let set = SetSpec::from_def(&def).unwrap();
        assert!(set.is_union());
        assert_eq!(set.definition(), def);
        assert_eq!(set.content_hash(), crate::geometry::preset("example-union").unwrap().content_hash());
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(serde_json::from_str::<SetDef>(r#"{"type":"segment","a":[0],"b":[1],"c":2}"#).is_err());
        assert!(serde_json::from_str::<SetDef>(
            r#"{"type":"ifs","maps":[{"scale":0.5,"translation":[0],"shear":1}]}"#
        )
        .is_err());
        assert!(serde_json::from_str::<SetDef>(r#"{"type":"torus"}"#).is_err());
    }
}
