// SPDX-License-Identifier: Apache-2.0

//! Experiment parameter files.
//!
//! ```json
//! {
//!   "build_params": {"nlist": 256},
//!   "query_configs": [
//!     {"name": "nprobe=8", "params": {"nprobe": 8}},
//!     {"name": "nprobe=32", "params": {"nprobe": 32}}
//!   ]
//! }
//! ```

use std::path::Path;

use annbench::harness::{validate_configs, QueryConfig};
use annbench::index::Params;
use annbench::{Error, Result};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryEntry {
    name: String,
    #[serde(default)]
    params: Params,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParamFile {
    #[serde(default)]
    build_params: Params,
    #[serde(default)]
    query_configs: Vec<QueryEntry>,
}

#[derive(Debug, Default)]
pub struct ParamFile {
    pub build_params: Params,
    pub query_configs: Vec<QueryConfig>,
}

impl ParamFile {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawParamFile = serde_json::from_str(text)
            .map_err(|e| Error::Format(format!("parameter file: {e}")))?;
        Ok(ParamFile {
            build_params: raw.build_params,
            query_configs: raw
                .query_configs
                .into_iter()
                .map(|q| QueryConfig::new(q.name, q.params))
                .collect(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Query configurations, or a single default one if the file has none.
    pub fn configs_or_default(&self) -> Result<Vec<QueryConfig>> {
        if self.query_configs.is_empty() {
            return Ok(vec![QueryConfig::new("default", Params::new())]);
        }
        validate_configs(&self.query_configs)?;
        Ok(self.query_configs.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_top_level_key_is_named() {
        let err = ParamFile::parse(r#"{"build_params": {}, "queries": []}"#).unwrap_err();
        assert!(err.to_string().contains("queries"), "{err}");
    }

    #[test]
    fn unknown_entry_key_is_named() {
        let err = ParamFile::parse(r#"{"query_configs": [{"name": "a", "nprobe": 3}]}"#).unwrap_err();
        assert!(err.to_string().contains("nprobe"), "{err}");
    }

    #[test]
    fn empty_file_gives_one_default_config() {
        let p = ParamFile::parse("{}").unwrap();
        assert!(p.build_params.is_empty());
        assert_eq!(p.configs_or_default().unwrap().len(), 1);
    }

    #[test]
    fn eleven_configs_are_rejected() {
        let entries: Vec<String> = (0..11)
            .map(|i| format!(r#"{{"name": "c{i}", "params": {{"nprobe": {i}}}}}"#))
            .collect();
        let text = format!(r#"{{"query_configs": [{}]}}"#, entries.join(","));
        let p = ParamFile::parse(&text).unwrap();
        assert!(p.configs_or_default().unwrap_err().to_string().contains("limit is 10"));
    }
}
