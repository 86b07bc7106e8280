//! Shared inputs for the benchmarks.

use dynav_core::eval::objectnav_episodes;
use dynav_core::{EpisodeSpec, WorldGenSpec, WorldMap};

/// A generated world with one single-goal episode in it.
pub fn scene(seed: u64) -> (WorldMap, EpisodeSpec) {
    let spec = WorldGenSpec::default();
    let ep = objectnav_episodes(1, seed, &spec, Default::default())
        .expect("default spec generates")
        .remove(0);
    let world = ep.world.load(std::path::Path::new("")).expect("generated world");
    (world, ep)
}
