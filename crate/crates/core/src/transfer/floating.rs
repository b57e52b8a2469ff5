//! Floating-metal transfer functions.
//!
//! The network has four unknown potentials (Tx ground `V_T`, Rx ground
//! `V_R`, body `V_B`, metal `V_M`) and is reduced by eliminating `V_T` with
//! KCL at earth and `V_M` with KCL at the Rx ground. The coefficient names
//! follow the usual A, D, F, S, R, U, T reduction:
//!
//! ```text
//! A·V_B = D'·V_M + F·V_R          (KCL at metal, V_T eliminated)
//! V_M   = S·V_B + R·V_R           (KCL at Rx ground)
//! V_Tx  = (U + G·S)·V_B + (T + G·R)·V_R
//! ```
//!
//! `G = c_mg / c_x_tx` carries the metal's return current into the earth
//! node and `D' = D + s·c_gm_tx·Z_BM·G`. With `G = 0` the expressions
//! collapse to the reduced form, which drops that current and is
//! therefore only approximate; [`FloatingForm`] selects between them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HbcError, Result};
use crate::model::{contact_impedance, CapacitanceProfile, ContactInterface};
use crate::units::omega;

use super::{ComplexTransfer, ModelForm};

/// Which coefficient algebra to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FloatingForm {
    /// Full KCL including the metal-to-earth current. Exact.
    #[default]
    Complete,
    /// Earth-node KCL without the `c_mg·V_M` term; `S < 0`, `R > 0`.
    NoEarthReturn,
    /// As `NoEarthReturn` but with the signs of `S` and `R` flipped.
    NoEarthReturnFlipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloatingCoefficients {
    pub a: Complex64,
    pub d_coef: Complex64,
    pub f_coef: Complex64,
    pub s_coef: f64,
    pub r_coef: f64,
    pub u: f64,
    pub t: f64,
    /// Earth-return ratio `c_mg / c_x_tx`.
    pub g: f64,
    /// `s·c_gm_tx·Z_BM`, kept to build `D'`.
    sz_gm_tx: Complex64,
}

impl FloatingCoefficients {
    /// `V_R / V_B` and `V_Rx / V_Tx` for the chosen form.
    fn evaluate(&self, form: FloatingForm) -> Result<Complex64> {
        let (s, r, g) = match form {
            FloatingForm::Complete => (self.s_coef, self.r_coef, self.g),
            FloatingForm::NoEarthReturn => (self.s_coef, self.r_coef, 0.0),
            FloatingForm::NoEarthReturnFlipped => (-self.s_coef, -self.r_coef, 0.0),
        };
        let d = self.d_coef + self.sz_gm_tx * g;
        let den = d * r + self.f_coef;
        if den.norm() == 0.0 {
            return Err(HbcError::SingularConfiguration("D·R + F = 0"));
        }
        // V_R/V_B, 1 - V_R/V_B and G·V_M/V_B, each rearranged so that a
        // large G (metal nearly grounded) does not cancel.
        let k = (self.a - d * s) / den;
        let one_minus_k = (d * (r + s) + self.f_coef - self.a) / den;
        let g_vm = (self.f_coef * s + self.a * r) * g / den;
        let out_den = self.u + self.t * k + g_vm;
        if out_den.norm() == 0.0 {
            return Err(HbcError::SingularConfiguration("transmit-side denominator is zero"));
        }
        let value = one_minus_k / out_den;
        if !value.is_finite() {
            return Err(HbcError::SingularConfiguration("non-finite transfer"));
        }
        Ok(value)
    }
}

/// Coefficients at frequency `f` for body-metal impedance `z_bm`.
pub fn floating_coefficients(
    profile: &CapacitanceProfile,
    z_bm: Complex64,
    f: f64,
) -> Result<FloatingCoefficients> {
    profile.validate()?;
    if profile.c_x_tx <= 0.0 {
        return Err(HbcError::ZeroDenominator("c_x_tx"));
    }
    if profile.c_gm_rx <= 0.0 {
        return Err(HbcError::DegenerateCoupling);
    }
    let s = Complex64::new(0.0, omega(f));
    let sz = s * z_bm;
    let c_l_eff = profile.c_l_eff();
    let c_x_tx = profile.c_x_tx;

    let a = Complex64::new(1.0, 0.0) - sz * (profile.c_gm_tx * profile.c_b / c_x_tx);
    let f_coef = sz * (profile.c_gm_tx * profile.c_x_rx / c_x_tx - profile.c_gm_rx);
    let d_coef = Complex64::new(1.0, 0.0) + sz * (profile.c_gm_rx + profile.c_gm_tx + profile.c_mg);
    let s_coef = -c_l_eff / profile.c_gm_rx;
    let r_coef = (profile.c_x_rx + c_l_eff + profile.c_gm_rx) / profile.c_gm_rx;
    let u = 1.0 + profile.c_b / c_x_tx;
    let t = profile.c_x_rx / c_x_tx;
    let g = profile.c_mg / c_x_tx;

    Ok(FloatingCoefficients {
        a,
        d_coef,
        f_coef,
        s_coef,
        r_coef,
        u,
        t,
        g,
        sz_gm_tx: sz * profile.c_gm_tx,
    })
}

/// Proximity to a floating metal: `Z_BM = 1 / (s·c_bm)`.
pub fn tf_ntfm(profile: &CapacitanceProfile, f: f64) -> Result<ComplexTransfer> {
    tf_ntfm_with(profile, f, FloatingForm::Complete)
}

pub fn tf_ntfm_with(
    profile: &CapacitanceProfile,
    f: f64,
    form: FloatingForm,
) -> Result<ComplexTransfer> {
    if f.is_nan() || f <= 0.0 {
        return Err(HbcError::InvalidParameter {
            name: "f",
            value: f,
            reason: "proximity transfer needs f > 0",
        });
    }
    if profile.c_bm <= 0.0 {
        return Err(HbcError::InvalidParameter {
            name: "c_bm",
            value: profile.c_bm,
            reason: "floating proximity needs a body-metal coupling > 0",
        });
    }
    let z_bm = Complex64::new(0.0, omega(f) * profile.c_bm).inv();
    let coeffs = floating_coefficients(profile, z_bm, f)?;
    Ok(ComplexTransfer::new(coeffs.evaluate(form)?, f, form_tag(form)))
}

/// Touch with a floating metal: `Z_BM` replaced by the contact impedance.
/// `profile.c_bm` is ignored; the contact supplies the body-metal branch.
pub fn tf_tfm(
    profile: &CapacitanceProfile,
    contact: &ContactInterface,
    f: f64,
) -> Result<ComplexTransfer> {
    tf_tfm_with(profile, contact, f, FloatingForm::Complete)
}

pub fn tf_tfm_with(
    profile: &CapacitanceProfile,
    contact: &ContactInterface,
    f: f64,
    form: FloatingForm,
) -> Result<ComplexTransfer> {
    if f.is_nan() || f < 0.0 {
        return Err(HbcError::InvalidParameter {
            name: "f",
            value: f,
            reason: "frequency must be >= 0",
        });
    }
    let z_con = contact_impedance(contact, f);
    let coeffs = floating_coefficients(profile, z_con, f)?;
    Ok(ComplexTransfer::new(coeffs.evaluate(form)?, f, form_tag(form)))
}

fn form_tag(form: FloatingForm) -> ModelForm {
    match form {
        FloatingForm::Complete => ModelForm::Exact,
        _ => ModelForm::Approximate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{MHZ, PF};

    fn profile() -> CapacitanceProfile {
        CapacitanceProfile {
            c_x_tx: 0.2 * PF,
            c_x_rx: 0.2 * PF,
            c_gm_tx: 0.5 * PF,
            c_gm_rx: 0.5 * PF,
            c_b: 150.0 * PF,
            c_bm: 50.0 * PF,
            c_mg: 100.0 * PF,
            c_gb_rx: 3.0 * PF,
            c_l: 2.0 * PF,
            c_c: 0.0,
        }
    }

    #[test]
    fn zero_contact_impedance_collapses_coefficients() {
        let c = floating_coefficients(&profile(), Complex64::new(0.0, 0.0), 1.0 * MHZ).unwrap();
        assert_eq!(c.a, Complex64::new(1.0, 0.0));
        assert_eq!(c.d_coef, Complex64::new(1.0, 0.0));
        assert_eq!(c.f_coef, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn u_and_t() {
        let c = floating_coefficients(&profile(), Complex64::new(10.0, 0.0), 1.0 * MHZ).unwrap();
        assert!((c.u - 751.0).abs() < 1e-9);
        assert_eq!(c.t, 1.0);
        assert!(c.u > 1.0 && c.t > 0.0);
        assert!(c.r_coef > 0.0 && c.s_coef < 0.0);
    }

    #[test]
    fn missing_rx_metal_coupling_is_degenerate() {
        let p = CapacitanceProfile {
            c_gm_rx: 0.0,
            ..profile()
        };
        assert!(matches!(
            tf_ntfm(&p, 1.0 * MHZ),
            Err(HbcError::DegenerateCoupling)
        ));
    }

    #[test]
    fn proximity_is_flat() {
        let a = tf_ntfm(&profile(), 100e3).unwrap().value;
        let b = tf_ntfm(&profile(), 30.0 * MHZ).unwrap().value;
        assert!((a - b).norm() <= 1e-12 * a.norm());
        assert!(a.im.abs() <= 1e-12 * a.norm());
    }

    #[test]
    fn reduced_forms_differ_from_complete() {
        let p = profile();
        let exact = tf_ntfm(&p, MHZ).unwrap().value;
        let reduced = tf_ntfm_with(&p, MHZ, FloatingForm::NoEarthReturn)
            .unwrap()
            .value;
        let flipped = tf_ntfm_with(&p, MHZ, FloatingForm::NoEarthReturnFlipped)
            .unwrap()
            .value;
        assert!((exact - reduced).norm() > 1e-6 * exact.norm());
        assert!((exact - flipped).norm() > 1e-6 * exact.norm());
        // without a metal-to-earth path the reduced algebra is already complete
        let no_mg = CapacitanceProfile { c_mg: 0.0, ..p };
        let e0 = tf_ntfm(&no_mg, MHZ).unwrap().value;
        let p0 = tf_ntfm_with(&no_mg, MHZ, FloatingForm::NoEarthReturn)
            .unwrap()
            .value;
        assert!((e0 - p0).norm() <= 1e-12 * e0.norm());
    }

    #[test]
    fn complete_form_matches_nodal_solve() {
        use crate::model::{Scenario, ScenarioKind};
        use crate::oracle::scenario_transfer;

        let p = profile();
        let sc = Scenario::new(ScenarioKind::FloatingMetal, p);
        let nodal = scenario_transfer(&sc, MHZ).unwrap().value;
        let closed = tf_ntfm(&p, MHZ).unwrap().value;
        assert!((nodal - closed).norm() <= 1e-9 * nodal.norm(), "{nodal} vs {closed}");

        let contact = ContactInterface::from_resistance(2e3, 30.0 * PF).unwrap();
        let touch = sc.with_contact(contact);
        for f in [10e3, 1.0 * MHZ, 20.0 * MHZ] {
            let nodal = scenario_transfer(&touch, f).unwrap().value;
            let closed = tf_tfm(&p, &contact, f).unwrap().value;
            assert!((nodal - closed).norm() <= 1e-9 * nodal.norm(), "{f}: {nodal} vs {closed}");
        }
    }
}
