use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::params::Invocation;

/// Written next to every primary output as `<out>.manifest.json`. Holds no
/// timestamps or host details, so replaying it rewrites identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(flatten)]
    pub invocation: Invocation,
    pub seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(invocation: &Invocation, outputs: &[PathBuf]) -> Self {
        Self {
            invocation: invocation.clone(),
            seed: invocation.seed(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: outputs.to_vec(),
        }
    }

    pub fn path_for(out: &Path) -> PathBuf {
        let mut name = out.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::invalid_parameters(format!("cannot read manifest {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::invalid_parameters(format!("bad manifest {}: {e}", path.display())))
    }

    /// The invocation to replay, with its output moved into `out_dir` if given.
    pub fn replay_invocation(&self, out_dir: Option<&Path>) -> Invocation {
        let mut inv = self.invocation.clone();
        if let Some(dir) = out_dir {
            let out = inv.out_mut();
            let name = out.file_name().map(PathBuf::from).unwrap_or_else(|| out.clone());
            *out = dir.join(name);
        }
        inv
    }
}
