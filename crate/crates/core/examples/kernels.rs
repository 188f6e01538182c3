//! The three moves of the sampler, one at a time, on a fixed scheme.

use realps::kernels::{chain_rng, level_swap, rwm_step, teleport};
use realps::record::EventCounts;
use realps::target::{make_gaussian_mixture, GaussianMixtureSpec};
use realps::{
    Chain, ChainState, KernelConfig, ReAlps, TemperatureLadder, TemperingScheme, WarmStartSet,
};

pub fn run_example() -> realps::Result<EventCounts> {
    // Two unit-variance modes: translating one onto the other is exact.
    let target = make_gaussian_mixture(&GaussianMixtureSpec {
        means: vec![vec![-4.0], vec![4.0]],
        covariances: vec![vec![vec![1.0]], vec![vec![1.0]]],
        weights: vec![0.5, 0.5],
    })?;
    let scheme = TemperingScheme::uniform(
        TemperatureLadder::new(vec![8.0, 2.0, 0.0])?,
        WarmStartSet::new(target.component_means())?,
    );
    let family = ReAlps::new(&scheme, &target)?;
    let cfg = KernelConfig::default();
    let mut rng = chain_rng(3);

    let mut state = ChainState::new(vec![-4.2], 0);
    let ev = rwm_step(&family, &mut state, &cfg, &mut rng)?;
    println!("rwm:      {:?} -> x = {:.3}", ev.kind, state.x[0]);
    let ev = teleport(&family, &mut state, &mut rng)?;
    println!(
        "teleport: {:?} {:?} -> x = {:.3}",
        ev.kind, ev.mode_pair, state.x[0]
    );
    let ev = level_swap(&family, &mut state, scheme.levels(), &mut rng)?;
    println!("swap:     {:?} -> level {}", ev.kind, state.level + 1);

    // The event-driven chain interleaves all three.
    let mut counts = EventCounts::default();
    let mut chain = Chain::new(&family, cfg.with_seed(3), ChainState::new(vec![-4.0], 0))?;
    chain.run(500.0, &mut counts)?;
    println!(
        "acceptance: rwm {:.2}, swap {:.2}, leap {:.2}",
        counts.rwm_acceptance().unwrap_or(0.0),
        counts.swap_acceptance().unwrap_or(0.0),
        counts.leap_acceptance().unwrap_or(0.0)
    );
    Ok(counts)
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
