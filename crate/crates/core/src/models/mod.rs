//! Ready-made model implementations: a small index-2 test problem and a
//! flux/charge-oriented circuit formulation built from netlists.

mod inductor;
mod mna;
mod netlist;
mod toy;

pub use inductor::{saturable_inductance, SaturableInductorParams};
pub use mna::{assemble_flux_charge_mna, CircuitModel};
pub use netlist::{parse_netlist, Branch, BranchKind, Netlist, SourceWaveform};
pub use toy::{g, g_prime, ToyModel, DRIVE_AMPLITUDE, DRIVE_ANGULAR_FREQUENCY};

/// Netlist of the bundled demonstration circuit: a two-tone current source
/// feeding a linear inductor in parallel with a saturable inductor that
/// drives a resistive load. The cut formed by the source and the two
/// inductors makes the node-1 potential an index-2 variable.
pub const TWO_INDUCTOR_NETLIST: &str = "\
# Two-tone current source into node 1; linear inductor to ground;
# saturable inductor from node 1 feeding a resistive load at node 2.
I I1 0 1 SIN 100 50 50 200
L L1 1 0 1e-4
LNL L2 1 2 1e-3 8e-4 5e-2 90
R R11 2 0 1e-2
R R12 2 0 1e-2
";

/// Builds the bundled two-inductor demonstration circuit.
pub fn two_inductor_circuit() -> crate::error::Result<(Netlist, CircuitModel)> {
    let netlist = parse_netlist(TWO_INDUCTOR_NETLIST)?;
    let model = assemble_flux_charge_mna(&netlist)?;
    Ok((netlist, model))
}
