//! Bitwise check of the state passed from one window to the next.

use crate::error::{Error, Result};
use crate::fsp::FluidState;
use crate::ssp::PlateState;

/// Plate and fluid state at a window boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Handoff {
    pub plate: PlateState,
    pub fluid: FluidState,
}

fn compare(field: &'static str, left: &[f64], right: &[f64]) -> Result<()> {
    if left.len() != right.len() {
        return Err(Error::DimensionMismatch {
            context: field,
            expected: left.len(),
            got: right.len(),
        });
    }
    match left.iter().zip(right).position(|(a, b)| a.to_bits() != b.to_bits()) {
        Some(index) => Err(Error::HandoffMismatch {
            field,
            index,
            left: left[index],
            right: right[index],
        }),
        None => Ok(()),
    }
}

/// Fails on the first coefficient whose bits differ between the outgoing
/// state of one window and the incoming state of the next.
pub fn handoff_validate(outgoing: &Handoff, incoming: &Handoff) -> Result<()> {
    compare("plate displacement", &outgoing.plate.beta, &incoming.plate.beta)?;
    compare("plate velocity", &outgoing.plate.gamma, &incoming.plate.gamma)?;
    compare("temperature", &outgoing.plate.alpha, &incoming.plate.alpha)?;
    compare("plate time", &[outgoing.plate.t], &[incoming.plate.t])?;
    compare("density", &outgoing.fluid.r, &incoming.fluid.r)?;
    compare("fluid velocity", &outgoing.fluid.alpha, &incoming.fluid.alpha)?;
    compare("fluid time", &[outgoing.fluid.t], &[incoming.fluid.t])?;
    Ok(())
}
