//! Encode a model vector as a probability profile over the cross-polytope
//! codebook, then reconstruct it and show the round trip is exact.
//!
//!     cargo run --example codebook_roundtrip

use ncota::codec::Codebook;

fn main() {
    let dim = 4;
    let radius = 1.5;
    let codebook = Codebook::new(dim, radius).unwrap();
    println!(
        "codebook: dim {dim}, radius {radius}, {} codewords, spoke length {:.4}",
        codebook.len(),
        codebook.spoke()
    );

    let w = vec![0.8, -0.3, 0.0, 0.55];
    println!("\nencoding w = {w:?}");
    println!("admissible spreading range: [0, {:.4}]", codebook.phi_max(&w).unwrap());

    // The spreading parameter trades mass on the zero codeword (none at
    // phi = 0) for mass spread evenly over the spokes, without moving the
    // encoded point.
    for phi in [0.0, 0.2, codebook.phi_max(&w).unwrap()] {
        let profile = codebook.encode(&w, phi).unwrap();
        let back = codebook.reconstruct(&profile).unwrap();
        let err: f64 = back
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        println!("\nphi = {phi:.4}");
        for (m, p) in profile.as_slice().iter().enumerate() {
            if *p > 0.0 {
                println!("  codeword {m:2} ({:?}): weight {p:.4}", codebook.codeword(m));
            }
        }
        println!("  reconstruction error: {err:.2e}");
    }
}
