//! Relative sensitivity of the divider transfer to each net capacitance.
//!
//! The analysed transfer is the exact two-stage divider
//! `T = [c_ret_tx/(c_ret_tx + c_body)]·[c_ret_rx/(c_ret_rx + c_l_eff)]`.

use serde::{Deserialize, Serialize};

use crate::error::{HbcError, Result};
use crate::model::EffectiveCaps;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensitivityTarget {
    RetTx,
    Body,
    RetRx,
    LEff,
}

impl SensitivityTarget {
    pub const ALL: [SensitivityTarget; 4] = [
        SensitivityTarget::RetTx,
        SensitivityTarget::Body,
        SensitivityTarget::RetRx,
        SensitivityTarget::LEff,
    ];

    fn get(self, eff: &EffectiveCaps) -> f64 {
        match self {
            SensitivityTarget::RetTx => eff.c_ret_tx,
            SensitivityTarget::Body => eff.c_body,
            SensitivityTarget::RetRx => eff.c_ret_rx,
            SensitivityTarget::LEff => eff.c_l_eff,
        }
    }

    fn with(self, eff: &EffectiveCaps, value: f64) -> EffectiveCaps {
        let mut out = *eff;
        match self {
            SensitivityTarget::RetTx => out.c_ret_tx = value,
            SensitivityTarget::Body => out.c_body = value,
            SensitivityTarget::RetRx => out.c_ret_rx = value,
            SensitivityTarget::LEff => out.c_l_eff = value,
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub s_ret_tx: f64,
    pub s_body: f64,
    pub s_ret_rx: f64,
    pub s_l_eff: f64,
    /// `∂T/∂c_ret_tx`, 1/F.
    pub d_ret_tx: f64,
    /// `∂T/∂c_body`, 1/F.
    pub d_body: f64,
    /// `∂T/∂c_ret_rx`, 1/F.
    pub d_ret_rx: f64,
    /// `∂T/∂c_l_eff`, 1/F.
    pub d_l_eff: f64,
}

impl SensitivityReport {
    pub fn relative(&self, target: SensitivityTarget) -> f64 {
        match target {
            SensitivityTarget::RetTx => self.s_ret_tx,
            SensitivityTarget::Body => self.s_body,
            SensitivityTarget::RetRx => self.s_ret_rx,
            SensitivityTarget::LEff => self.s_l_eff,
        }
    }

    pub fn partial(&self, target: SensitivityTarget) -> f64 {
        match target {
            SensitivityTarget::RetTx => self.d_ret_tx,
            SensitivityTarget::Body => self.d_body,
            SensitivityTarget::RetRx => self.d_ret_rx,
            SensitivityTarget::LEff => self.d_l_eff,
        }
    }
}

/// `V_B/V_Tx` and `V_Rx/V_B` of the two-stage divider.
fn stages(eff: &EffectiveCaps) -> (f64, f64) {
    (
        eff.c_ret_tx / (eff.c_ret_tx + eff.c_body),
        eff.c_ret_rx / (eff.c_ret_rx + eff.c_l_eff),
    )
}

pub fn exact_divider_transfer(eff: &EffectiveCaps) -> f64 {
    let (tx, rx) = stages(eff);
    tx * rx
}

pub fn sensitivities(eff: &EffectiveCaps) -> SensitivityReport {
    let tx_sum = eff.c_ret_tx + eff.c_body;
    let rx_sum = eff.c_ret_rx + eff.c_l_eff;
    let (tx_stage, rx_stage) = stages(eff);

    let s_ret_tx = eff.c_body / tx_sum;
    let s_ret_rx = eff.c_l_eff / rx_sum;

    SensitivityReport {
        s_ret_tx,
        s_body: -s_ret_tx,
        s_ret_rx,
        s_l_eff: -s_ret_rx,
        d_ret_tx: rx_stage * eff.c_body / (tx_sum * tx_sum),
        d_body: -rx_stage * eff.c_ret_tx / (tx_sum * tx_sum),
        d_ret_rx: tx_stage * eff.c_l_eff / (rx_sum * rx_sum),
        d_l_eff: -tx_stage * eff.c_ret_rx / (rx_sum * rx_sum),
    }
}

/// Central-difference estimate of `(C_i/T)·∂T/∂C_i` with a relative step.
pub fn finite_difference_sensitivity(
    eff: &EffectiveCaps,
    target: SensitivityTarget,
    rel_step: f64,
) -> Result<f64> {
    if !(rel_step > 0.0 && rel_step <= 1e-2) {
        return Err(HbcError::InvalidParameter {
            name: "rel_step",
            value: rel_step,
            reason: "must lie in (0, 1e-2]",
        });
    }
    let c = target.get(eff);
    let h = c * rel_step;
    let t_plus = exact_divider_transfer(&target.with(eff, c + h));
    let t_minus = exact_divider_transfer(&target.with(eff, c - h));
    let t = exact_divider_transfer(eff);
    Ok(c / t * (t_plus - t_minus) / (2.0 * h))
}
