//! Train a softmax classifier over the air on clustered synthetic data. With
//! spatial deployment each class's samples concentrate at nodes in one
//! angular sector of the disc, so no node can learn the classifier alone and
//! test accuracy only comes from mixing.
//!
//!     cargo run --release --example classification_over_the_air

use ncota::harness::config::Config;
use ncota::harness::{run_experiment, RunControls};

const CONFIG: &str = r#"
[experiment]
algorithm = "ncota"
trials = 2
iterations = 1500
stride = 300
seed = 23

[network]
nodes = 4
model = "reflector"
area_radius = "800 m"
reflectors = 3
carrier = "3 GHz"
fading = "per-frame"

[radio]
bandwidth = "5 MHz"
subcarriers = 64
symbols = 1
power = "20 dBm"
noise_density = "-173 dBm/Hz"

[problem]
kind = "classification"
classes = 2
feature_dim = 5
synthetic_per_class = 40
synthetic_spread = 0.6
deployment = "spatial"
ridge = 0.1

[schedule]
kind = "decreasing"

[compute]
batch = 8
grad_time = "2 us"
"#;

fn main() {
    let config = Config::from_toml(CONFIG).unwrap();
    let artifacts = run_experiment(&config, &RunControls::default()).unwrap();
    println!("{}", artifacts.log.trim_end());

    println!("\n{:>6}  {:>10}  {:>12}  {:>10}", "k", "time [s]", "norm err", "test err");
    for row in &artifacts.aggregate {
        println!(
            "{:>6}  {:>10.4}  {:>12.4e}  {:>10.4}",
            row.iteration,
            row.time_s,
            row.normalized_error,
            row.test_error.unwrap()
        );
    }
}
