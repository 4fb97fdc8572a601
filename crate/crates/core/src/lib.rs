//! Connectedness certification for multi-agent graphs with polynomially
//! uncertain edge weights, and simulation of a barrier-function formation
//! controller that preserves the certified topology.

pub mod linalg;
pub mod polyalg;
pub mod smr;
pub mod netgraph;
pub mod sdp;
pub mod certifier;
pub mod barrier;
pub mod simulate;
