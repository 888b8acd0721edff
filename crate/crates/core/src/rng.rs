//! Counter-derived random streams.
//!
//! Every simulated quantity draws from a ChaCha8 stream addressed by
//! `(master_seed, cycle, stream)`. Results therefore never depend on the
//! order in which worker threads pick up cycles.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Address of one independent replication (a renewal cycle, a trajectory...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master: u64,
    pub replication: u64,
}

impl StreamKey {
    pub fn new(master: u64, replication: u64) -> Self {
        Self {
            master,
            replication,
        }
    }

    fn key_bytes(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        let mut state = splitmix64(self.master ^ 0x5eed_0fc0_ffee);
        state = splitmix64(state ^ self.replication.wrapping_mul(0xd134_2543_de82_ef95));
        for chunk in out.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        out
    }

    /// Independent generator for sub-stream `stream` of this replication.
    pub fn stream(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key_bytes());
        rng.set_stream(stream);
        rng
    }
}

/// Stream ids used inside one replication.
pub mod streams {
    /// Shocks and initiation times.
    pub const ARRIVALS: u64 = 0;
    /// Growth of the i-th initiated defect uses `DEFECT_BASE + i`.
    pub const DEFECT_BASE: u64 = 1;
}
