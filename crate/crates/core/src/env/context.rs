use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the context vectors an environment hands to contextual agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContextSpec {
    /// All-ones vector of the given dimension.
    Constant { dim: usize },
    /// The PacMan feature map, see [`super::PacmanEnv::features`].
    Pacman,
}

impl ContextSpec {
    pub fn dim(&self) -> usize {
        match self {
            ContextSpec::Constant { dim } => *dim,
            ContextSpec::Pacman => super::PACMAN_CONTEXT_DIM,
        }
    }

    pub fn constant_vector(dim: usize) -> Vec<f64> {
        vec![1.0; dim]
    }

    /// Rejects agents configured for a different context dimension.
    pub fn check(&self, agent_dim: usize) -> Result<()> {
        if agent_dim != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: agent_dim,
            });
        }
        Ok(())
    }
}
