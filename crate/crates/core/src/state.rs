//! Saved discovery state: the full schema with every sketch, for analyses
//! run after discovery.
//!
//! The file is the ASCII magic `JZST1`, a newline, then one JSON object.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::config::DiscoveryConfig;
use crate::schema::SchemaNode;

pub const MAGIC: &[u8] = b"JZST1\n";

#[derive(Debug, thiserror::Error)]
pub enum StateError {
    #[error("not a schema state file (missing JZST1 header)")]
    BadMagic,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed state: {0}")]
    Format(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemaState {
    pub config: DiscoveryConfig,
    /// Documents folded into `schema`.
    pub documents: u64,
    pub schema: SchemaNode,
}

impl SchemaState {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), StateError> {
        w.write_all(MAGIC)?;
        serde_json::to_writer(&mut w, self)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<SchemaState, StateError> {
        let mut magic = [0u8; MAGIC.len()];
        r.read_exact(&mut magic).map_err(|_| StateError::BadMagic)?;
        if magic != MAGIC {
            return Err(StateError::BadMagic);
        }
        let mut de = serde_json::Deserializer::from_reader(std::io::BufReader::new(r));
        de.disable_recursion_limit();
        let state = SchemaState::deserialize(&mut de)?;
        de.end()?;
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fold::fold_streaming;
    use crate::json::JsonValue;

    #[test]
    fn round_trip() {
        let docs: Vec<JsonValue> = [r#"{"a":1,"b":["x","y"]}"#, r#"{"a":2.5,"c":null}"#, "[1,true]"]
            .iter()
            .map(|t| JsonValue::from_str_lossy(t).unwrap())
            .collect();
        let config = DiscoveryConfig::default();
        let state = SchemaState { schema: fold_streaming(&docs, &config).unwrap(), config, documents: 3 };
        let mut bytes = Vec::new();
        state.write_to(&mut bytes).unwrap();
        assert!(bytes.starts_with(MAGIC));
        assert_eq!(SchemaState::read_from(&bytes[..]).unwrap(), state);
        assert!(matches!(SchemaState::read_from(&b"{}"[..]), Err(StateError::BadMagic)));
    }
}
