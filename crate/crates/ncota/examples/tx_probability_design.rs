//! Pick the transmit probability that minimizes the consensus-estimate
//! variance bound. The optimum slides between two regimes: 1/2 when
//! repetition across resource units dominates, 2/3 when receiver noise does.
//!
//!     cargo run --example tx_probability_design

use ncota::optimizer::{solve_tx_probability, tx_design_residual};

fn main() {
    let (theta, varpi) = (1.0, 1.0);
    let (m, q) = (11, 16);

    println!("codewords M = {m}, resource units Q = {q}, dispersions theta = varpi = 1\n");
    println!("{:>12}  {:>8}  {:>12}", "noise ratio", "p*", "residual");
    for exp in [-6.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 6.0] {
        let noise_ratio = 10f64.powf(exp);
        let p = solve_tx_probability(theta, varpi, m, q, noise_ratio).unwrap();
        let residual = tx_design_residual(p, theta, varpi, m, q, noise_ratio);
        println!("{noise_ratio:>12.1e}  {p:>8.5}  {residual:>12.2e}");
    }

    // The limits are exact: with overwhelming noise the optimality condition
    // reduces to 3p = 2; with massive repetition and no noise, to 2p = 1.
    let noisy = solve_tx_probability(theta, varpi, m, q, 1e9).unwrap();
    let diluted = solve_tx_probability(theta, varpi, m, m * 1_000_000_000, 1e-12).unwrap();
    println!("\nnoise-dominated limit:      p* -> {noisy:.6} (expect 2/3)");
    println!("repetition-dominated limit: p* -> {diluted:.6} (expect 1/2)");
}
