//! Reproducible random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream addressed by
//! `(seed, trial, component)`, so the absorption draws of trial 17 do not
//! depend on how many fading draws were consumed before them, nor on the
//! order in which parallel workers pick up trials.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Named consumers of randomness inside one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    Absorption,
    Fading,
    Misalignment,
    Access,
    Estimation,
    Generic,
}

impl Component {
    fn tag(self) -> u64 {
        match self {
            Component::Absorption => 1,
            Component::Fading => 2,
            Component::Misalignment => 3,
            Component::Access => 4,
            Component::Estimation => 5,
            Component::Generic => 6,
        }
    }
}

const COMPONENT_BITS: u32 = 4;

/// A node in a tree of seeds. Children are derived by mixing, streams by
/// selecting a ChaCha stream id, so siblings never share key material.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedTree {
    key: u64,
}

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        SeedTree { key: splitmix64(seed) }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Independent sub-tree, e.g. for one sweep cell or grid point.
    pub fn child(&self, index: u64) -> SeedTree {
        SeedTree { key: splitmix64(self.key ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D))) }
    }

    /// Child keyed by a label; stable across releases as long as the label is.
    pub fn named(&self, label: &str) -> SeedTree {
        // FNV-1a
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        self.child(h)
    }

    pub fn stream(&self, trial: u64, component: Component) -> SimRng {
        assert!(trial < (1u64 << (64 - COMPONENT_BITS)), "trial index too large");
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        rng.set_stream((trial << COMPONENT_BITS) | component.tag());
        rng
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible() {
        let t = SeedTree::new(42);
        let a: Vec<u64> = (0..8).map(|_| 0).scan(t.stream(3, Component::Fading), |r, _| Some(r.random())).collect();
        let b: Vec<u64> = (0..8).map(|_| 0).scan(t.stream(3, Component::Fading), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn components_and_trials_differ() {
        let t = SeedTree::new(42);
        let x: u64 = t.stream(0, Component::Fading).random();
        let y: u64 = t.stream(0, Component::Absorption).random();
        let z: u64 = t.stream(1, Component::Fading).random();
        let w: u64 = t.child(1).stream(0, Component::Fading).random();
        assert!(x != y && x != z && x != w && y != z);
    }
}
