//! First-order radio energy model.
//!
//! Transmitting `k` bits over `d` meters costs `k * E_elec` for the
//! electronics plus an amplifier term: `k * eps_fs * d^2` below the
//! threshold `d0` and `k * eps_mp * d^4` at or above it. Receiving costs
//! `k * E_elec`; fusing `s` incoming signals costs `k * s * E_DA`.
//!
//! With the default constants `sqrt(eps_fs / eps_mp)` is about 87.7 m while
//! `d0` is 70 m, so `tx_energy` jumps down at `d0`. The threshold is kept as
//! configured rather than derived from the amplifier constants.

use crate::error::{Error, Result};
use crate::model::Node;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    /// Electronics energy, J/bit.
    pub e_elec: f64,
    /// Free-space amplifier, J/bit/m^2.
    pub eps_fs: f64,
    /// Multipath amplifier, J/bit/m^4.
    pub eps_mp: f64,
    /// Distance threshold between the two amplifier regimes, m.
    pub d0: f64,
    /// Data aggregation energy, J/bit/signal.
    pub e_da: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            e_elec: 5e-9,
            eps_fs: 10e-12,
            eps_mp: 0.0013e-12,
            d0: 70.0,
            e_da: 5e-9,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("e_elec", self.e_elec),
            ("eps_fs", self.eps_fs),
            ("eps_mp", self.eps_mp),
            ("d0", self.d0),
            ("e_da", self.e_da),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be > 0")));
            }
        }
        Ok(())
    }

    /// True when `distance` falls in the free-space (d^2) regime.
    pub fn is_free_space(&self, distance: f64) -> bool {
        distance < self.d0
    }

    pub fn tx_energy(&self, bits: u64, distance: f64) -> Result<f64> {
        tx_energy(bits, distance, self)
    }

    pub fn rx_energy(&self, bits: u64) -> Result<f64> {
        rx_energy(bits, self)
    }

    pub fn aggregation_energy(&self, bits: u64, signals: usize) -> Result<f64> {
        aggregation_energy(bits, signals, self)
    }
}

pub fn tx_energy(bits: u64, distance: f64, params: &RadioParams) -> Result<f64> {
    if bits == 0 {
        return Err(Error::Argument("bits must be > 0".into()));
    }
    if !(distance >= 0.0) {
        return Err(Error::Argument(format!(
            "distance must be >= 0, got {distance}"
        )));
    }
    let k = bits as f64;
    let amp = if params.is_free_space(distance) {
        params.eps_fs * distance * distance
    } else {
        params.eps_mp * distance.powi(4)
    };
    Ok(k * params.e_elec + k * amp)
}

pub fn rx_energy(bits: u64, params: &RadioParams) -> Result<f64> {
    if bits == 0 {
        return Err(Error::Argument("bits must be > 0".into()));
    }
    Ok(bits as f64 * params.e_elec)
}

pub fn aggregation_energy(bits: u64, signals: usize, params: &RadioParams) -> Result<f64> {
    if signals == 0 {
        return Err(Error::Argument("signal count must be >= 1".into()));
    }
    Ok(bits as f64 * signals as f64 * params.e_da)
}

/// Deducts `cost` from a node, clamping at zero.
///
/// Returns the amount actually deducted. The node stays `alive` even when
/// drained; the round engine retires it at the end of the round.
pub fn charge(node: &mut Node, cost: f64) -> Result<f64> {
    if !node.alive {
        return Err(Error::ProtocolLogic(format!(
            "charged dead node {}",
            node.id
        )));
    }
    if !(cost >= 0.0) {
        return Err(Error::Argument(format!("cost must be >= 0, got {cost}")));
    }
    let deducted = cost.min(node.residual_energy);
    node.residual_energy -= deducted;
    Ok(deducted)
}
