//! `worldgen`, `gen-episodes`, `memory` and `serve-stub`.

use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use dynav_core::eval::{objectnav_episodes, two_goal_episodes, Budgets, EpisodeSet};
use dynav_core::memory::{self, merge, MemoryGraph};
use dynav_core::{worldgen, StubScript, StubServer};

use crate::error::CliError;
use crate::run::load_worldgen_spec;
use crate::MemoryCmd;

pub fn cmd_worldgen(
    seed: u64,
    spec: Option<&Path>,
    rooms: Option<usize>,
    hazards: Option<usize>,
    out: &Path,
) -> Result<(), CliError> {
    let mut spec = load_worldgen_spec(spec)?;
    if let Some(r) = rooms {
        spec.rooms = r;
    }
    if let Some(h) = hazards {
        spec.hazards = h;
    }
    let world = worldgen(seed, &spec).map_err(|e| CliError::Config(e.to_string()))?;
    world.save(out).map_err(|e| CliError::at(out, e))?;
    println!(
        "{}: {}x{} cells, {} objects",
        out.display(),
        world.width(),
        world.height(),
        world.objects().len()
    );
    Ok(())
}

pub fn cmd_gen_episodes(
    count: usize,
    seed: u64,
    two_goal: bool,
    spec: Option<&Path>,
    max_steps: Option<u64>,
    max_distance: Option<f64>,
    out: &Path,
) -> Result<(), CliError> {
    let spec = load_worldgen_spec(spec)?;
    let mut budgets = Budgets::default();
    if let Some(s) = max_steps {
        budgets.max_steps = s;
    }
    if let Some(d) = max_distance {
        budgets.max_distance_m = d;
    }
    let gen = if two_goal { two_goal_episodes } else { objectnav_episodes };
    let episodes = gen(count, seed, &spec, budgets).map_err(|e| CliError::Config(e.to_string()))?;
    let set = EpisodeSet { episodes };
    set.save(out).map_err(|e| CliError::at(out, e))?;
    println!("{}: {} episodes", out.display(), set.episodes.len());
    Ok(())
}

fn load_graph(path: &Path) -> Result<MemoryGraph, CliError> {
    memory::load(path).map_err(|e| CliError::at(path, e))
}

pub fn cmd_memory(cmd: MemoryCmd) -> Result<(), CliError> {
    match cmd {
        MemoryCmd::Export { input, out, text } => {
            let g = load_graph(&input)?;
            if text {
                std::fs::write(&out, g.render_text(usize::MAX)).map_err(|e| CliError::at(&out, e))
            } else {
                memory::save(&g, &out).map_err(|e| CliError::at(&out, e))
            }
        }
        MemoryCmd::Merge { inputs, out } => {
            let mut acc = load_graph(&inputs[0])?;
            for p in &inputs[1..] {
                acc = merge(&acc, &load_graph(p)?);
            }
            memory::save(&acc, &out).map_err(|e| CliError::at(&out, e))?;
            println!("{}: {} nodes", out.display(), acc.node_count());
            Ok(())
        }
        MemoryCmd::Show { input, budget } => {
            let g = load_graph(&input)?;
            if !g.is_empty() {
                println!("{}", g.render_text(budget));
            }
            Ok(())
        }
    }
}

pub fn cmd_serve_stub(port: u16, script: &Path) -> Result<(), CliError> {
    let script = StubScript::load(script).map_err(|e| CliError::at(script, e))?;
    let server = StubServer::serve(port, script)?;
    let stop = Arc::new(AtomicBool::new(false));
    {
        let s = stop.clone();
        ctrlc::set_handler(move || s.store(true, Ordering::Relaxed))
            .map_err(|e| CliError::Io(format!("signal handler: {e}")))?;
    }
    println!("listening on {}", server.url());
    server.wait(&stop);
    server.shutdown();
    Ok(())
}
