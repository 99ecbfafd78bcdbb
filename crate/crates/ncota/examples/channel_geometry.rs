//! Drop nodes and reflectors on a disc, derive the average link gains from
//! two-ray path loss at a 3 GHz carrier, and inspect the gain Laplacian the
//! optimizer mixes with.
//!
//!     cargo run --example channel_geometry

use ncota::channel::{
    average_gains, ChannelSpec, Deployment, FadingSchedule, GainLaplacian, GainModel,
};
use ncota::phy::{FramePlan, ResourcePartition};
use ncota::rng::{node_stream, Purpose};

fn main() {
    let mut rng = node_stream(7, 0, 0, 0, Purpose::Deployment);
    let deployment = Deployment::draw(6, 3, 1000.0, &mut rng).unwrap();
    println!("{}", deployment.to_table());

    let spec = ChannelSpec::new(
        GainModel::Reflector { deployment, carrier_hz: 3e9 },
        FadingSchedule::PerIteration,
        5e6,
    )
    .unwrap();
    let plan = FramePlan::new(1, 64, 0).unwrap();
    let partition = ResourcePartition::strided(64, 13).unwrap();

    // Average received energy per link, estimated over many fading draws.
    let gains = average_gains(&spec, &plan, &partition, 400, 7, 0).unwrap();
    println!("average link gains (x 1e9):");
    for i in 0..6 {
        let row: Vec<String> =
            (0..6).map(|j| format!("{:7.3}", gains.get(i, j) * 1e9)).collect();
        println!("  {}", row.join(" "));
    }

    let laplacian = GainLaplacian::new(gains);
    println!("\nLaplacian eigenvalues: {:?}", laplacian.eigenvalues());
    println!("algebraic connectivity rho2 = {:.4e}", laplacian.algebraic_connectivity());
    println!("spectral radius rhoN       = {:.4e}", laplacian.spectral_radius());
    println!("max total gain Lambda*     = {:.4e}", laplacian.max_total_gain());
    println!(
        "\nstable consensus stepsizes must keep gamma * rhoN below 1; gamma < {:.4e}",
        1.0 / laplacian.spectral_radius()
    );
}
