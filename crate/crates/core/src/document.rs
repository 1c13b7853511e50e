//! The result document shared by the library and the command line.

use serde::{Deserialize, Serialize};

use crate::oracle::OracleReport;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub p: i64,
    pub c: u32,
    pub level: u32,
    pub dims: Vec<i64>,
    pub delta: Vec<i64>,
    pub stable_bound: i64,
    pub caveats: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummandCount {
    pub exp: u32,
    pub count: u32,
}

/// A degree of `TR^m(F_p)`: the group `(+) (Z/p^exp)^count`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FpEntry {
    pub q: i64,
    pub summands: Vec<SummandCount>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowerDescriptor {
    pub height: u32,
    pub word: String,
    pub base_degree: i64,
}

/// A degree for c = 1, 2: the length and the `v_c`-strings starting there.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VcEntry {
    pub q: i64,
    pub length: usize,
    pub towers: Vec<TowerDescriptor>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Groups {
    Fp(Vec<FpEntry>),
    Vc(Vec<VcEntry>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultDocument {
    pub meta: Meta,
    pub groups: Groups,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<OracleReport>,
}

impl ResultDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}
