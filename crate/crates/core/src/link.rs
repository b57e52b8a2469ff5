//! Link budget: SNR, Shannon capacity, Eb/N0 and ideal-coherent BER.

use serde::{Deserialize, Serialize};

use crate::error::{HbcError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", content = "order", rename_all = "kebab-case")]
pub enum Modulation {
    Ook,
    Qpsk,
    /// Square M-QAM; `M` must be a perfect square ≥ 4.
    Mqam(u32),
}

impl Modulation {
    pub fn parse(s: &str) -> Result<Modulation> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "ook" => Ok(Modulation::Ook),
            "qpsk" => Ok(Modulation::Qpsk),
            other => {
                let order = other
                    .strip_suffix("-qam")
                    .or_else(|| other.strip_suffix("qam"))
                    .and_then(|m| m.parse::<u32>().ok())
                    .ok_or_else(|| HbcError::InvalidScenario(format!("unknown modulation '{s}'")))?;
                let m = Modulation::Mqam(order);
                m.validate()?;
                Ok(m)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Modulation::Mqam(m) = *self {
            let root = (m as f64).sqrt().round() as u32;
            if m < 4 || root * root != m {
                return Err(HbcError::UnsupportedModulation(m));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self {
            Modulation::Ook => "ook".into(),
            Modulation::Qpsk => "qpsk".into(),
            Modulation::Mqam(m) => format!("{m}-qam"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// RMS transmit voltage, V.
    pub v_tx: f64,
    /// White-noise PSD, V²/Hz.
    pub n0: f64,
    pub bandwidth: f64,
    pub bit_rate: f64,
    pub modulation: Modulation,
}

impl LinkBudget {
    /// 1 V, (5 nV/√Hz)², 5 MHz, bit rate equal to bandwidth, OOK.
    pub fn reference() -> LinkBudget {
        LinkBudget {
            v_tx: 1.0,
            n0: 25e-18,
            bandwidth: 5e6,
            bit_rate: 5e6,
            modulation: Modulation::Ook,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("v_tx", self.v_tx),
            ("n0", self.n0),
            ("bandwidth", self.bandwidth),
            ("bit_rate", self.bit_rate),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(HbcError::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and > 0",
                });
            }
        }
        self.modulation.validate()
    }
}

/// Where the SNR in a report came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnrSource {
    /// From |T|, v_tx, n0 and bandwidth.
    Computed,
    /// Supplied directly by the caller.
    Stated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub snr_linear: f64,
    pub snr_db: f64,
    pub capacity: f64,
    pub gamma: f64,
    pub ber: f64,
    pub snr_source: SnrSource,
}

impl LinkReport {
    /// Downstream metrics for a given linear SNR.
    pub fn from_snr(snr_linear: f64, budget: &LinkBudget, source: SnrSource) -> Result<LinkReport> {
        budget.validate()?;
        if !(snr_linear >= 0.0) {
            return Err(HbcError::InvalidParameter {
                name: "snr",
                value: snr_linear,
                reason: "must be >= 0",
            });
        }
        let g = gamma(snr_linear, budget.bandwidth, budget.bit_rate);
        Ok(LinkReport {
            snr_linear,
            snr_db: 10.0 * snr_linear.log10(),
            capacity: capacity(snr_linear, budget.bandwidth),
            gamma: g,
            ber: ber(budget.modulation, g)?,
            snr_source: source,
        })
    }

    pub fn from_transfer(magnitude: f64, budget: &LinkBudget) -> Result<LinkReport> {
        budget.validate()?;
        LinkReport::from_snr(snr(magnitude, budget), budget, SnrSource::Computed)
    }

    pub fn from_snr_db(snr_db: f64, budget: &LinkBudget) -> Result<LinkReport> {
        LinkReport::from_snr(10f64.powf(snr_db / 10.0), budget, SnrSource::Stated)
    }
}

pub fn snr(magnitude: f64, budget: &LinkBudget) -> f64 {
    let v = magnitude.abs() * budget.v_tx;
    v * v / (budget.n0 * budget.bandwidth)
}

pub fn capacity(snr_linear: f64, bandwidth: f64) -> f64 {
    bandwidth * snr_linear.ln_1p() / std::f64::consts::LN_2
}

/// Eb/N0 at the given bit rate.
pub fn gamma(snr_linear: f64, bandwidth: f64, bit_rate: f64) -> f64 {
    snr_linear * bandwidth / bit_rate
}

/// Gaussian tail probability, `Q(x) = erfc(x/√2)/2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

pub fn ber(modulation: Modulation, gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(HbcError::InvalidParameter {
            name: "gamma",
            value: gamma,
            reason: "must be >= 0",
        });
    }
    modulation.validate()?;
    let p = match modulation {
        Modulation::Ook => q_function(gamma.sqrt()),
        Modulation::Qpsk => q_function((2.0 * gamma).sqrt()),
        Modulation::Mqam(m) => {
            let m = m as f64;
            let bits = m.log2();
            let prefactor = 4.0 * (m.sqrt() - 1.0) / (m.sqrt() * bits);
            prefactor * q_function((3.0 * gamma * bits / (m - 1.0)).sqrt())
        }
    };
    Ok(p.min(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_reference_points() {
        assert_eq!(q_function(0.0), 0.5);
        // frozen from direct quadrature of the defining integral
        assert!((q_function(4.211) - 1.271_213_732_174_163e-5).abs() < 1e-17);
        assert!((q_function(1.2816) - 0.099_991_500_097_675_15).abs() < 1e-14);
    }

    #[test]
    fn modulation_parsing() {
        assert_eq!(Modulation::parse("OOK").unwrap(), Modulation::Ook);
        assert_eq!(Modulation::parse("16-qam").unwrap(), Modulation::Mqam(16));
        assert_eq!(Modulation::parse("64qam").unwrap(), Modulation::Mqam(64));
        assert!(matches!(
            Modulation::parse("8-qam"),
            Err(HbcError::UnsupportedModulation(8))
        ));
        assert!(Modulation::parse("fsk").is_err());
    }

    #[test]
    fn zero_snr_chain() {
        let r = LinkReport::from_transfer(0.0, &LinkBudget::reference()).unwrap();
        assert_eq!(r.capacity, 0.0);
        assert_eq!(r.ber, 0.5);
        assert_eq!(r.snr_source, SnrSource::Computed);
    }

    #[test]
    fn gamma_examples() {
        assert!((gamma(17.73, 5e6, 10e6) - 8.865).abs() < 1e-12);
        assert_eq!(gamma(3.0, 5e6, 5e6), 3.0);
    }

    #[test]
    fn invalid_budget() {
        let mut b = LinkBudget::reference();
        b.n0 = 0.0;
        assert!(b.validate().is_err());
    }
}
