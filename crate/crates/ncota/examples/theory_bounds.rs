//! Evaluate the convergence guarantee for a configured run: the settling
//! iteration where the stepsize conditions start to hold and the error
//! envelope from there on, split into its noise, transient, and projection
//! terms.
//!
//!     cargo run --example theory_bounds

use ncota::harness::config::Config;
use ncota::harness::{theory_report, RunControls};

const CONFIG: &str = r#"
[experiment]
algorithm = "ncota"
trials = 1
iterations = 100000
stride = 10000
seed = 9

[network]
nodes = 6
model = "rayleigh"
gain_low = 0.2
gain_high = 1.0
fading = "per-frame"

[radio]
bandwidth = "1 MHz"
subcarriers = 16
symbols = 1
power = "0 dBm"
noise_density = "1e-13 W/Hz"

[problem]
kind = "regression"
dim = 4
samples_per_node = 12
mu = 1.0
smoothness = 8.0
noise = 0.0

[schedule]
kind = "decreasing"

[compute]
batch = "full"
"#;

fn main() {
    let config = Config::from_toml(CONFIG).unwrap();
    let report = theory_report(&config, &RunControls::default()).unwrap();
    println!("{}", report.log.trim_end());
    println!("\n{}", report.csv.trim_end());
}
