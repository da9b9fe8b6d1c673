//! Trial plans and deterministic per-trial seed derivation.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::grid::{expand_design, Cell, DesignError, FactorGrid};
use super::template::Persona;

/// One planned trial: a cell crossed with a persona and a replication index,
/// plus a seed derived from the run's master seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub trial_index: usize,
    pub cell: Cell,
    pub persona: Persona,
    pub rep_index: u32,
    pub seed: u64,
}

/// Derives a child seed from a master seed and a label path.
///
/// Hash-based rather than sequential draws, so any trial's seed is a pure
/// function of its coordinates and trials can execute in any parallel order.
pub fn derive_seed(master_seed: u64, parts: &[&[u8]]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_be_bytes());
    for part in parts {
        hasher.update((part.len() as u64).to_be_bytes());
        hasher.update(part);
    }
    let digest = hasher.finalize();
    u64::from_be_bytes(digest[..8].try_into().unwrap())
}

fn trial_seed(master_seed: u64, cell_index: usize, persona_id: &str, rep_index: u32) -> u64 {
    derive_seed(
        master_seed,
        &[
            b"trial",
            &(cell_index as u64).to_be_bytes(),
            persona_id.as_bytes(),
            &rep_index.to_be_bytes(),
        ],
    )
}

/// Crosses every cell with every persona and replication, in a fixed order:
/// cells outermost, then personas, then replications.
pub fn plan_run(
    grid: &FactorGrid,
    personas: &[Persona],
    reps: u32,
    master_seed: u64,
) -> Result<Vec<TrialSpec>, DesignError> {
    if reps == 0 {
        return Err(DesignError::ZeroReps);
    }
    let cells = expand_design(grid)?;
    let mut specs = Vec::with_capacity(cells.len() * personas.len() * reps as usize);
    let mut trial_index = 0;
    for cell in &cells {
        for persona in personas {
            for rep_index in 0..reps {
                specs.push(TrialSpec {
                    trial_index,
                    cell: cell.clone(),
                    persona: persona.clone(),
                    rep_index,
                    seed: trial_seed(master_seed, cell.cell_index, &persona.persona_id, rep_index),
                });
                trial_index += 1;
            }
        }
    }
    Ok(specs)
}
