pub mod baselines;
pub mod channel;
pub mod codec;
pub mod domain;
pub mod harness;
pub mod optimizer;
pub mod phy;
pub mod problems;
pub mod rng;
pub mod theory;
