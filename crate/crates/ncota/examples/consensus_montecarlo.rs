//! Hold the node states fixed and run the full transmit/receive pipeline for
//! many frames: the mean of each node's consensus estimate converges to the
//! exact gain-weighted disagreement even though no receiver ever learns a
//! channel coefficient.
//!
//!     cargo run --release --example consensus_montecarlo

use ncota::channel::{draw_realization, ChannelSpec, FadingSchedule, GainModel, SymmetricGains};
use ncota::codec::Codebook;
use ncota::phy::{
    consensus_direction, draw_phase, draw_shift, draw_transmit, energy_estimates, receive,
    transmit_signal, FramePlan, RadioParams, ResourcePartition,
};
use ncota::rng::{node_stream, Purpose};
use num_complex::Complex64;

fn main() {
    const SEED: u64 = 42;
    const FRAMES: u64 = 30_000;
    let nodes = 4;
    let dim = 2;

    let codebook = Codebook::new(dim, 1.0).unwrap();
    let plan = FramePlan::new(1, codebook.len(), 0).unwrap();
    let partition = ResourcePartition::strided(plan.resource_units(), codebook.len()).unwrap();
    let gains = SymmetricGains::from_pair_fn(nodes, |i, j| 0.3 + 0.1 * (i + j) as f64).unwrap();
    let spec = ChannelSpec::new(
        GainModel::Explicit(gains.clone()),
        FadingSchedule::PerIteration,
        1e6,
    )
    .unwrap();
    let (energy, noise_psd, p_tx) = (1.0, 0.1, 0.5);
    let radio = RadioParams::new(energy, noise_psd, p_tx).unwrap();

    let states = [vec![0.6, -0.2], vec![-0.4, 0.5], vec![0.1, 0.1], vec![-0.7, -0.3]];
    let profiles: Vec<_> = states.iter().map(|w| codebook.encode_full(w).unwrap()).collect();

    let mut sums = vec![vec![0.0; dim]; nodes];
    for frame in 0..FRAMES {
        let realization = draw_realization(&spec, &plan, frame, SEED, 0).unwrap();
        let shift =
            draw_shift(&mut node_stream(SEED, 0, frame, 0, Purpose::Shift), partition.num_sets());
        let transmitting: Vec<bool> = (0..nodes)
            .map(|i| draw_transmit(&mut node_stream(SEED, 0, frame, i, Purpose::TxDecision), p_tx))
            .collect();
        let signals: Vec<(usize, Vec<Complex64>)> = (0..nodes)
            .filter(|&i| transmitting[i])
            .map(|i| {
                let phase = draw_phase(&mut node_stream(SEED, 0, frame, i, Purpose::Phase));
                (i, transmit_signal(&profiles[i], &partition, shift, phase, energy))
            })
            .collect();
        for i in 0..nodes {
            // A node transmitting this frame skips estimation; in the
            // optimizer that frame's consensus step is simply zero.
            if transmitting[i] {
                continue;
            }
            let refs: Vec<(usize, &[Complex64])> =
                signals.iter().filter(|(j, _)| *j != i).map(|(j, s)| (*j, s.as_slice())).collect();
            let mut noise = node_stream(SEED, 0, frame, i, Purpose::Noise);
            let y = receive(&refs, &realization, i, noise_psd, &mut noise);
            let energies = energy_estimates(&y, &partition, shift, &radio);
            let estimate = consensus_direction(&energies, &codebook, &states[i]);
            for t in 0..dim {
                sums[i][t] += estimate[t];
            }
        }
    }

    println!("{FRAMES} frames, {nodes} nodes, transmit probability {p_tx}\n");
    for i in 0..nodes {
        let exact: Vec<f64> = (0..dim)
            .map(|t| {
                (0..nodes)
                    .filter(|&j| j != i)
                    .map(|j| gains.get(i, j) * (states[j][t] - states[i][t]))
                    .sum()
            })
            .collect();
        // Zeroed transmitting frames are part of the average: the estimator's
        // 1/(p(1-p)) normalization already prices in both the transmit
        // thinning and the chance of listening at all.
        let mean: Vec<f64> = sums[i].iter().map(|s| s / FRAMES as f64).collect();
        println!("node {i}:");
        println!("  exact disagreement {exact:?}");
        println!("  estimated mean     {mean:?}");
    }
}
