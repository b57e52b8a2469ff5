//! Closed-form channel transfer functions.
//!
//! The grounded-metal and open-space forms ([`tf_ntgm`], [`tf_tgm`],
//! [`channel_loss_open`], [`channel_loss_grounded`]) are capacitive-divider
//! approximations that assume the return paths dominate the series
//! impedance. The floating-metal forms in [`floating`] are exact KCL
//! solutions of the same network the nodal oracle builds.

pub mod floating;
pub mod sensitivity;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, HbcError, Result};
use crate::model::{CapacitanceProfile, ContactInterface, EffectiveCaps};
use crate::units::{db20, omega};

pub use floating::{
    floating_coefficients, tf_ntfm, tf_ntfm_with, tf_tfm, tf_tfm_with, FloatingCoefficients,
    FloatingForm,
};
pub use sensitivity::{
    exact_divider_transfer, finite_difference_sensitivity, sensitivities, SensitivityReport,
    SensitivityTarget,
};

/// How a transfer value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelForm {
    /// Divider approximation, valid when return paths dominate.
    Approximate,
    /// Closed-form exact KCL solution.
    Exact,
    /// Direct nodal solve.
    Oracle,
}

impl ModelForm {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelForm::Approximate => "approximate",
            ModelForm::Exact => "exact",
            ModelForm::Oracle => "oracle",
        }
    }
}

/// `V_Rx / V_Tx` at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexTransfer {
    pub value: Complex64,
    pub f: f64,
    pub form: ModelForm,
}

impl ComplexTransfer {
    pub fn new(value: Complex64, f: f64, form: ModelForm) -> Self {
        ComplexTransfer { value, f, form }
    }

    pub fn magnitude(&self) -> f64 {
        self.value.norm()
    }

    /// Gain in dB (negative for attenuation).
    pub fn mag_db(&self) -> f64 {
        db20(self.magnitude())
    }

    /// Channel loss in dB, `-mag_db`.
    pub fn loss_db(&self) -> f64 {
        -self.mag_db()
    }

    pub fn phase_deg(&self) -> f64 {
        self.value.arg().to_degrees()
    }
}

/// Induced body potential in open space, `(c_x_tx / c_b) · v_tx`.
pub fn body_potential_open(profile: &CapacitanceProfile, v_tx: f64) -> Result<f64> {
    ensure_positive("c_b", profile.c_b)?;
    Ok(profile.c_x_tx / profile.c_b * v_tx)
}

/// Open-space channel loss in dB.
pub fn channel_loss_open(profile: &CapacitanceProfile) -> Result<f64> {
    if profile.c_b <= 0.0 {
        return Err(HbcError::ZeroDenominator("c_b"));
    }
    let c_l_eff = profile.c_l_eff();
    if c_l_eff <= 0.0 {
        return Err(HbcError::ZeroDenominator("c_gb_rx + c_l"));
    }
    let ratio = (profile.c_x_tx / profile.c_b) * (profile.c_x_rx / c_l_eff);
    Ok(-db20(ratio))
}

/// Grounded-metal divider value including inter-device coupling:
/// `(c_c + c_ret_tx·c_ret_rx/c_body) / (c_c + c_l_eff)`.
pub fn grounded_divider(eff: &EffectiveCaps, c_c: f64) -> Result<f64> {
    if eff.c_body <= 0.0 {
        return Err(HbcError::ZeroDenominator("c_body"));
    }
    let den = c_c + eff.c_l_eff;
    if den <= 0.0 {
        return Err(HbcError::ZeroDenominator("c_c + c_gb_rx + c_l"));
    }
    Ok((c_c + eff.c_ret_tx * eff.c_ret_rx / eff.c_body) / den)
}

/// Grounded-metal channel loss in dB. Takes `c_c` from `profile`.
pub fn channel_loss_grounded(eff: &EffectiveCaps, profile: &CapacitanceProfile) -> Result<f64> {
    Ok(-db20(grounded_divider(eff, profile.c_c)?))
}

/// Non-touch grounded-metal transfer: frequency independent,
/// `(c_ret_tx/c_body)·(c_ret_rx/c_l_eff)`.
pub fn tf_ntgm(eff: &EffectiveCaps, f: f64) -> ComplexTransfer {
    let value = (eff.c_ret_tx / eff.c_body) * (eff.c_ret_rx / eff.c_l_eff);
    ComplexTransfer::new(Complex64::new(value, 0.0), f, ModelForm::Approximate)
}

/// Touch with grounded metal: first-order high-pass through the contact.
/// Returns zero at DC.
pub fn tf_tgm(eff: &EffectiveCaps, contact: &ContactInterface, f: f64) -> ComplexTransfer {
    let zero = ComplexTransfer::new(Complex64::new(0.0, 0.0), f, ModelForm::Approximate);
    if f <= 0.0 {
        return zero;
    }
    let s = Complex64::new(0.0, omega(f));
    let resistive = if contact.r_con.is_infinite() {
        Complex64::new(0.0, 0.0)
    } else {
        eff.c_l_eff / (s * contact.r_con)
    };
    let den = eff.c_l_eff * contact.c_bm_touch + resistive;
    ComplexTransfer::new(
        Complex64::new(eff.c_ret_tx * eff.c_ret_rx, 0.0) / den,
        f,
        ModelForm::Approximate,
    )
}

/// High-pass corner of the touch response, `1 / (2π r_con c_bm)`.
/// Independent of the receiver load.
pub fn cutoff_frequency(contact: &ContactInterface) -> f64 {
    1.0 / (2.0 * std::f64::consts::PI * contact.r_con * contact.c_bm_touch)
}

/// Induced potential of a floating metal object from its capacitive
/// neighbours (KCL at the metal node).
pub fn metal_potential(
    profile: &CapacitanceProfile,
    v_b: Complex64,
    v_r: Complex64,
    v_t: Complex64,
) -> Result<Complex64> {
    let c_a = profile.c_a();
    if c_a <= 0.0 {
        return Err(HbcError::ZeroDenominator("c_a"));
    }
    Ok((v_b * profile.c_bm + v_r * profile.c_gm_rx + v_t * profile.c_gm_tx) / c_a)
}

/// Rx-ground potential near a floating metal in proximity, from KCL at the
/// Rx ground with the metal potential eliminated:
/// `V_R = (B/P)·V_B + (Q/P)·V_T`. Neglects `c_c`.
pub fn rx_ground_potential(
    profile: &CapacitanceProfile,
    v_b: Complex64,
    v_t: Complex64,
) -> Result<Complex64> {
    let c_a = profile.c_a();
    if c_a <= 0.0 {
        return Err(HbcError::ZeroDenominator("c_a"));
    }
    let c_l_eff = profile.c_l_eff();
    if c_l_eff <= 0.0 {
        return Err(HbcError::ZeroDenominator("c_l_eff"));
    }
    let g = profile.c_gm_rx;
    let p = ((c_l_eff + profile.c_x_rx + g) - g * g / c_a) / c_l_eff;
    let q = g * profile.c_gm_tx / (c_l_eff * c_a);
    let b = 1.0 + g * profile.c_bm / (c_l_eff * c_a);
    if p == 0.0 {
        return Err(HbcError::ZeroDenominator("P"));
    }
    Ok(v_b * (b / p) + v_t * (q / p))
}

/// Body potential while touching a metal object whose body-to-earth
/// capacitance is `c_btm`: `(c_x_tx / c_btm) · v_tx`.
pub fn body_potential_touching_metal(c_x_tx: f64, c_btm: f64, v_tx: f64) -> Result<f64> {
    ensure_positive("c_btm", c_btm)?;
    Ok(c_x_tx / c_btm * v_tx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derive_effective;
    use crate::units::{KHZ, MHZ, PF};

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    fn eff(rt: f64, body: f64, rr: f64, l: f64) -> EffectiveCaps {
        EffectiveCaps {
            c_ret_tx: rt * PF,
            c_ret_rx: rr * PF,
            c_body: body * PF,
            c_l_eff: l * PF,
            c_a: 0.0,
        }
    }

    #[test]
    fn body_potential_examples() {
        let p = CapacitanceProfile::open_space(0.2 * PF, 150.0 * PF, 0.2 * PF, 0.0, 5.0 * PF);
        assert!(close(body_potential_open(&p, 3.3).unwrap(), 4.4e-3, 1e-12));
        assert_eq!(body_potential_open(&p, 0.0).unwrap(), 0.0);
        let unity = CapacitanceProfile { c_b: 0.2 * PF, ..p };
        assert!(close(body_potential_open(&unity, 3.3).unwrap(), 3.3, 1e-15));
    }

    #[test]
    fn open_space_loss() {
        let p = CapacitanceProfile::open_space(0.2 * PF, 150.0 * PF, 0.2 * PF, 0.0, 5.0 * PF);
        // -20 log10((0.2/150)(0.2/5)) = 85.4600...
        assert!(close(channel_loss_open(&p).unwrap(), 85.460_025_5, 1e-8));
        let p1 = CapacitanceProfile::open_space(1.0 * PF, 150.0 * PF, 1.0 * PF, 0.0, 5.0 * PF);
        assert!(close(channel_loss_open(&p1).unwrap(), 57.501_225_4, 1e-8));
        let unit = CapacitanceProfile::open_space(1.0 * PF, 1.0 * PF, 1.0 * PF, 0.5 * PF, 0.5 * PF);
        assert!(channel_loss_open(&unit).unwrap().abs() < 1e-12);
        let bad = CapacitanceProfile::open_space(1.0 * PF, 150.0 * PF, 1.0 * PF, 0.0, 0.0);
        assert!(matches!(channel_loss_open(&bad), Err(HbcError::ZeroDenominator(_))));
    }

    #[test]
    fn grounded_loss_reduces_to_open_space() {
        let p = CapacitanceProfile::open_space(0.3 * PF, 120.0 * PF, 0.4 * PF, 2.0 * PF, 3.0 * PF);
        let e = derive_effective(&p).unwrap();
        assert_eq!(channel_loss_grounded(&e, &p).unwrap(), channel_loss_open(&p).unwrap());
        let g = channel_loss_grounded(&eff(1.0, 150.0, 1.0, 5.0), &CapacitanceProfile::default());
        assert!(close(g.unwrap(), 57.501_225_4, 1e-8));
    }

    #[test]
    fn doubling_return_path_gains_six_db() {
        let l1 = channel_loss_grounded(&eff(1.0, 150.0, 1.0, 5.0), &CapacitanceProfile::default())
            .unwrap();
        let l2 = channel_loss_grounded(&eff(2.0, 150.0, 1.0, 5.0), &CapacitanceProfile::default())
            .unwrap();
        assert!(close(l1 - l2, 20.0 * 2f64.log10(), 1e-12));
    }

    #[test]
    fn ntgm_is_flat() {
        let e = eff(1.0, 150.0, 1.0, 5.0);
        let lo = tf_ntgm(&e, 100.0 * KHZ);
        let hi = tf_ntgm(&e, 30.0 * MHZ);
        assert!(close(lo.value.re, 1.0 / 750.0, 1e-14));
        assert_eq!(lo.value, hi.value);
        assert_eq!(lo.form, ModelForm::Approximate);
    }

    #[test]
    fn tgm_asymptote_and_corner() {
        let e = eff(1.0, 150.0, 1.0, 5.0);
        let c = ContactInterface::from_resistance(1e3, 10.0 * PF).unwrap();
        let f_c = cutoff_frequency(&c);
        assert!(close(f_c, 15.915_494e6, 1e-6));
        let far = tf_tgm(&e, &c, 1e6 * f_c).magnitude();
        assert!(close(far, 0.02, 1e-9));
        let at_c = tf_tgm(&e, &c, f_c).magnitude();
        assert!(close(at_c, 0.02 / 2f64.sqrt(), 1e-12));
        assert_eq!(tf_tgm(&e, &c, 0.0).magnitude(), 0.0);

        let open = ContactInterface {
            r_con: f64::INFINITY,
            ..c
        };
        for f in [1e3, 1e5, 1e7] {
            assert!(close(tf_tgm(&e, &open, f).magnitude(), 0.02, 1e-12));
        }
    }

    #[test]
    fn cutoff_scaling_and_load_independence() {
        let c = ContactInterface::from_resistance(1e3, 10.0 * PF).unwrap();
        let half = ContactInterface::from_resistance(500.0, 10.0 * PF).unwrap();
        assert!(close(cutoff_frequency(&half), 2.0 * cutoff_frequency(&c), 1e-12));
        // -3 dB point does not move with the load
        let f_c = cutoff_frequency(&c);
        for l in [2.0, 5.0, 50.0] {
            let e = eff(1.0, 150.0, 1.0, l);
            let asym = e.c_ret_tx * e.c_ret_rx / (e.c_l_eff * c.c_bm_touch);
            assert!(close(tf_tgm(&e, &c, f_c).magnitude(), asym / 2f64.sqrt(), 1e-12));
        }
    }

    #[test]
    fn metal_potential_examples() {
        let p = CapacitanceProfile {
            c_bm: 50.0 * PF,
            c_mg: 100.0 * PF,
            c_gm_tx: 0.5 * PF,
            c_gm_rx: 0.5 * PF,
            ..Default::default()
        };
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let v = metal_potential(&p, one, zero, zero).unwrap();
        assert!(close(v.re, 50.0 / 151.0, 1e-12));
        assert_eq!(metal_potential(&p, zero, zero, zero).unwrap(), zero);
        let huge = CapacitanceProfile { c_mg: 1e-3, ..p };
        assert!(metal_potential(&huge, one, zero, zero).unwrap().norm() < 1e-7);
    }

    #[test]
    fn touching_metal_body_potential() {
        let v = body_potential_touching_metal(0.2 * PF, 300.0 * PF, 3.3).unwrap();
        assert!(close(v, 2.2e-3, 1e-12));
        let p = CapacitanceProfile::open_space(0.2 * PF, 150.0 * PF, 0.2 * PF, 0.0, 5.0 * PF);
        assert_eq!(
            body_potential_touching_metal(p.c_x_tx, p.c_b, 3.3).unwrap(),
            body_potential_open(&p, 3.3).unwrap()
        );
        // grounded chair couples the body harder to earth than a floating one
        let grounded = body_potential_touching_metal(0.2 * PF, 400.0 * PF, 1.0).unwrap();
        let floating = body_potential_touching_metal(0.2 * PF, 200.0 * PF, 1.0).unwrap();
        assert!(grounded < floating);
    }
}
