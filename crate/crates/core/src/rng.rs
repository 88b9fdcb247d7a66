//! Reproducible random streams.
//!
//! Every stream is a ChaCha8 generator keyed by `seed` (expanded through
//! `SeedableRng::seed_from_u64`) with the ChaCha stream word set to
//! `4 * stream_id + kind`. Identical `(seed, stream_id)` pairs give identical
//! samples on every platform.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleKind {
    Zeroth = 0,
    First = 1,
    Second = 2,
}

#[derive(Clone, Debug)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self::with_word(seed, stream_id, 4 * stream_id + 3)
    }

    fn with_word(seed: u64, stream_id: u64, word: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(word);
        RngStream { seed, stream_id, rng }
    }

    /// Independent sub-stream for one oracle kind.
    pub fn substream(&self, kind: OracleKind) -> RngStream {
        Self::with_word(self.seed, self.stream_id, 4 * self.stream_id + kind as u64)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// The three per-run oracle sub-streams.
#[derive(Clone, Debug)]
pub struct OracleStreams {
    pub zeroth: RngStream,
    pub first: RngStream,
    pub second: RngStream,
}

impl OracleStreams {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let root = RngStream::new(seed, stream_id);
        OracleStreams {
            zeroth: root.substream(OracleKind::Zeroth),
            first: root.substream(OracleKind::First),
            second: root.substream(OracleKind::Second),
        }
    }
}
