use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridworld::{GridState, GridWorld};
use crate::qlearn::{Action, QTable};

/// One Q-table cell as stored in a checkpoint. Values keep full precision so
/// a resumed run continues bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QEntry {
    pub x: u32,
    pub y: u32,
    pub action: String,
    pub q: f64,
}

/// Resumable snapshot taken at an episode boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub config_hash: String,
    /// 1-based index of the first episode still to run.
    pub next_episode: u32,
    pub rng_state: String,
    pub qtable: Vec<QEntry>,
}

impl Checkpoint {
    pub fn new(config_hash: String, next_episode: u32, rng: &ChaCha8Rng, q: &QTable, env: &GridWorld) -> Self {
        let qtable = env
            .states()
            .flat_map(|s| {
                let i = env.index_of(s);
                Action::ALL.into_iter().map(move |a| QEntry {
                    x: s.x,
                    y: s.y,
                    action: a.token().to_string(),
                    q: q.get(i, a),
                })
            })
            .collect();
        Checkpoint {
            config_hash,
            next_episode,
            rng_state: encode_rng(rng),
            qtable,
        }
    }

    pub fn rng(&self) -> Result<ChaCha8Rng> {
        decode_rng(&self.rng_state)
    }

    pub fn qtable(&self, env: &GridWorld) -> Result<QTable> {
        let mut q = env.new_qtable();
        if self.qtable.len() != q.values().len() {
            return Err(Error::DimensionMismatch(format!(
                "checkpoint holds {} Q entries, grid needs {}",
                self.qtable.len(),
                q.values().len()
            )));
        }
        let mut seen = vec![false; q.values().len()];
        for e in &self.qtable {
            let s = GridState::new(e.x, e.y);
            if !env.contains(s) {
                return Err(Error::DimensionMismatch(format!(
                    "checkpoint entry for {s} outside grid"
                )));
            }
            let a: Action = e.action.parse().map_err(Error::InvalidConfig)?;
            let i = env.index_of(s);
            let slot = i * Action::COUNT + a.index();
            if std::mem::replace(&mut seen[slot], true) {
                return Err(Error::DimensionMismatch(format!(
                    "duplicate checkpoint entry for {s} {a}"
                )));
            }
            q.set(i, a, e.q)?;
        }
        Ok(q)
    }
}

const RNG_STATE_BYTES: usize = 32 + 8 + 16;

/// Seed, stream id and word position, little-endian, hex encoded.
pub fn encode_rng(rng: &ChaCha8Rng) -> String {
    let mut bytes = Vec::with_capacity(RNG_STATE_BYTES);
    bytes.extend_from_slice(&rng.get_seed());
    bytes.extend_from_slice(&rng.get_stream().to_le_bytes());
    bytes.extend_from_slice(&rng.get_word_pos().to_le_bytes());
    hex::encode(bytes)
}

pub fn decode_rng(text: &str) -> Result<ChaCha8Rng> {
    use rand::SeedableRng;

    let bytes = hex::decode(text).map_err(|e| Error::InvalidConfig(format!("rng_state: {e}")))?;
    if bytes.len() != RNG_STATE_BYTES {
        return Err(Error::InvalidConfig(format!(
            "rng_state: expected {RNG_STATE_BYTES} bytes, got {}",
            bytes.len()
        )));
    }
    let seed: [u8; 32] = bytes[..32].try_into().expect("length checked");
    let stream = u64::from_le_bytes(bytes[32..40].try_into().expect("length checked"));
    let word_pos = u128::from_le_bytes(bytes[40..].try_into().expect("length checked"));
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(stream);
    rng.set_word_pos(word_pos);
    Ok(rng)
}
