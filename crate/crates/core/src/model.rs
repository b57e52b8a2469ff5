//! Domain types for the lumped coupling model and the contact-interface physics.
//!
//! A [`CapacitanceProfile`] holds the raw couplings of one physical situation.
//! [`derive_effective`] folds metal couplings into the net return-path, body
//! and load capacitances used by the closed-form transfer functions. The
//! touch/near-touch helpers model the body-metal interface as a parallel
//! R‖C whose resistive part scales inversely with contact area.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_nonnegative, ensure_positive, HbcError, Result};
use crate::units::{omega, CM2, DEFAULT_RHO_C, EPSILON_0};

/// Raw lumped couplings, all in farads.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CapacitanceProfile {
    /// Tx ground to earth, no metal present.
    pub c_x_tx: f64,
    /// Rx ground to earth, no metal present.
    pub c_x_rx: f64,
    /// Tx ground to metal.
    pub c_gm_tx: f64,
    /// Rx ground to metal.
    pub c_gm_rx: f64,
    /// Body to earth.
    pub c_b: f64,
    /// Body to metal.
    pub c_bm: f64,
    /// Metal to earth.
    pub c_mg: f64,
    /// Rx ground to body (body shadowing).
    pub c_gb_rx: f64,
    /// Rx signal-plate to ground-plate load.
    pub c_l: f64,
    /// Tx ground to Rx ground (inter-device).
    pub c_c: f64,
}

/// Identifies one field of a [`CapacitanceProfile`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapName {
    CXTx,
    CXRx,
    CGmTx,
    CGmRx,
    CB,
    CBm,
    CMg,
    CGbRx,
    CL,
    CC,
}

impl CapName {
    pub const ALL: [CapName; 10] = [
        CapName::CXTx,
        CapName::CXRx,
        CapName::CGmTx,
        CapName::CGmRx,
        CapName::CB,
        CapName::CBm,
        CapName::CMg,
        CapName::CGbRx,
        CapName::CL,
        CapName::CC,
    ];

    /// Field name as used in scenario files (without unit suffix).
    pub fn key(self) -> &'static str {
        match self {
            CapName::CXTx => "c_x_tx",
            CapName::CXRx => "c_x_rx",
            CapName::CGmTx => "c_gm_tx",
            CapName::CGmRx => "c_gm_rx",
            CapName::CB => "c_b",
            CapName::CBm => "c_bm",
            CapName::CMg => "c_mg",
            CapName::CGbRx => "c_gb_rx",
            CapName::CL => "c_l",
            CapName::CC => "c_c",
        }
    }

    pub fn from_key(key: &str) -> Option<CapName> {
        CapName::ALL.into_iter().find(|c| c.key() == key)
    }
}

impl std::fmt::Display for CapName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.key())
    }
}

impl CapacitanceProfile {
    /// Open-space profile: no metal couplings, no inter-device coupling.
    pub fn open_space(c_x_tx: f64, c_b: f64, c_x_rx: f64, c_gb_rx: f64, c_l: f64) -> Self {
        CapacitanceProfile {
            c_x_tx,
            c_x_rx,
            c_b,
            c_gb_rx,
            c_l,
            ..Default::default()
        }
    }

    pub fn get(&self, name: CapName) -> f64 {
        match name {
            CapName::CXTx => self.c_x_tx,
            CapName::CXRx => self.c_x_rx,
            CapName::CGmTx => self.c_gm_tx,
            CapName::CGmRx => self.c_gm_rx,
            CapName::CB => self.c_b,
            CapName::CBm => self.c_bm,
            CapName::CMg => self.c_mg,
            CapName::CGbRx => self.c_gb_rx,
            CapName::CL => self.c_l,
            CapName::CC => self.c_c,
        }
    }

    pub fn get_mut(&mut self, name: CapName) -> &mut f64 {
        match name {
            CapName::CXTx => &mut self.c_x_tx,
            CapName::CXRx => &mut self.c_x_rx,
            CapName::CGmTx => &mut self.c_gm_tx,
            CapName::CGmRx => &mut self.c_gm_rx,
            CapName::CB => &mut self.c_b,
            CapName::CBm => &mut self.c_bm,
            CapName::CMg => &mut self.c_mg,
            CapName::CGbRx => &mut self.c_gb_rx,
            CapName::CL => &mut self.c_l,
            CapName::CC => &mut self.c_c,
        }
    }

    pub fn with(mut self, name: CapName, value: f64) -> Self {
        *self.get_mut(name) = value;
        self
    }

    /// Field-wise sum, used to overlay preset deltas onto a base profile.
    pub fn overlay(&self, delta: &CapacitanceProfile) -> CapacitanceProfile {
        let mut out = *self;
        for name in CapName::ALL {
            *out.get_mut(name) += delta.get(name);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for name in CapName::ALL {
            let v = self.get(name);
            if v.is_nan() || v < 0.0 {
                return Err(HbcError::InvalidParameter {
                    name: name.key(),
                    value: v,
                    reason: "capacitance must be >= 0",
                });
            }
        }
        Ok(())
    }

    /// `c_l_eff = c_gb_rx + c_l`.
    pub fn c_l_eff(&self) -> f64 {
        self.c_gb_rx + self.c_l
    }

    /// `c_a = c_mg + c_gm_rx + c_gm_tx + c_bm`, the total capacitance at the metal node.
    pub fn c_a(&self) -> f64 {
        self.c_mg + self.c_gm_rx + self.c_gm_tx + self.c_bm
    }

    pub fn has_metal_couplings(&self) -> bool {
        self.c_gm_tx != 0.0 || self.c_gm_rx != 0.0 || self.c_bm != 0.0 || self.c_mg != 0.0
    }
}

/// Net capacitances after folding in metal couplings, farads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCaps {
    pub c_ret_tx: f64,
    pub c_ret_rx: f64,
    pub c_body: f64,
    pub c_l_eff: f64,
    pub c_a: f64,
}

pub fn derive_effective(profile: &CapacitanceProfile) -> Result<EffectiveCaps> {
    profile.validate()?;
    if profile.c_b == 0.0 && profile.c_bm == 0.0 {
        return Err(HbcError::DegenerateBody);
    }
    Ok(EffectiveCaps {
        c_ret_tx: profile.c_x_tx + profile.c_gm_tx,
        c_ret_rx: profile.c_x_rx + profile.c_gm_rx,
        c_body: profile.c_b + profile.c_bm,
        c_l_eff: profile.c_l_eff(),
        c_a: profile.c_a(),
    })
}

/// Parallel-plate estimate of body-to-metal capacitance at gap `d`, fringe
/// fields neglected.
pub fn parallel_plate_cbm(d: f64, area: f64, eps_r: f64) -> Result<f64> {
    if d.is_nan() || d <= 0.0 {
        return Err(HbcError::InvalidParameter {
            name: "d",
            value: d,
            reason: "gap must be > 0; model contact with a ContactInterface",
        });
    }
    ensure_positive("area", area)?;
    if eps_r.is_nan() || eps_r < 1.0 {
        return Err(HbcError::InvalidParameter {
            name: "eps_r",
            value: eps_r,
            reason: "relative permittivity must be >= 1",
        });
    }
    Ok(EPSILON_0 * eps_r * area / d)
}

/// Contact resistance `rho_c / a_con`.
pub fn contact_resistance(a_con: f64, rho_c: f64) -> Result<f64> {
    ensure_positive("a_con", a_con)?;
    ensure_positive("rho_c", rho_c)?;
    Ok(rho_c / a_con)
}

/// Body-metal contact: area-dependent resistance in parallel with the
/// contact capacitance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactInterface {
    /// Contact area, m².
    pub a_con: f64,
    /// Specific contact resistivity, Ω·m².
    pub rho_c: f64,
    /// `rho_c / a_con`, Ω. May be `+inf` for a purely capacitive contact.
    pub r_con: f64,
    /// Body-metal capacitance at contact, F.
    pub c_bm_touch: f64,
}

impl ContactInterface {
    pub fn new(a_con: f64, rho_c: f64, c_bm_touch: f64) -> Result<Self> {
        let r_con = contact_resistance(a_con, rho_c)?;
        ensure_positive("c_bm_touch", c_bm_touch)?;
        Ok(ContactInterface {
            a_con,
            rho_c,
            r_con,
            c_bm_touch,
        })
    }

    /// Builds a contact from a known resistance, assuming a 1 cm² contact
    /// area and back-computing `rho_c`.
    pub fn from_resistance(r_con: f64, c_bm_touch: f64) -> Result<Self> {
        Self::from_resistance_and_area(r_con, c_bm_touch, CM2)
    }

    pub fn from_resistance_and_area(r_con: f64, c_bm_touch: f64, a_con: f64) -> Result<Self> {
        ensure_positive("r_con", r_con)?;
        ensure_positive("c_bm_touch", c_bm_touch)?;
        ensure_positive("a_con", a_con)?;
        Ok(ContactInterface {
            a_con,
            rho_c: r_con * a_con,
            r_con,
            c_bm_touch,
        })
    }

    /// Default resistivity contact of the given area and capacitance.
    pub fn with_default_resistivity(a_con: f64, c_bm_touch: f64) -> Result<Self> {
        Self::new(a_con, DEFAULT_RHO_C, c_bm_touch)
    }

    /// Same contact scaled to a new area: resistance goes as 1/A and the
    /// contact capacitance as A.
    pub fn rescaled_to_area(&self, a_con: f64) -> Result<Self> {
        ensure_positive("a_con", a_con)?;
        let scale = a_con / self.a_con;
        Ok(ContactInterface {
            a_con,
            rho_c: self.rho_c,
            r_con: self.r_con / scale,
            c_bm_touch: self.c_bm_touch * scale,
        })
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("a_con", self.a_con)?;
        ensure_positive("rho_c", self.rho_c)?;
        ensure_positive("r_con", self.r_con)?;
        ensure_positive("c_bm_touch", self.c_bm_touch)
    }
}

/// Parallel R‖C contact impedance at frequency `f`.
///
/// Evaluated in admittance form so an infinite `r_con` degrades to the pure
/// capacitor and `f = 0` returns `r_con`.
pub fn contact_impedance(contact: &ContactInterface, f: f64) -> Complex64 {
    let w = omega(f);
    if contact.r_con.is_infinite() {
        return Complex64::new(0.0, w * contact.c_bm_touch).inv();
    }
    let r = contact.r_con;
    Complex64::new(r, 0.0) / Complex64::new(1.0, w * r * contact.c_bm_touch)
}

/// Gap below which the capacitive body-metal impedance falls under `r_con`,
/// i.e. a near-touch is electrically indistinguishable from contact.
pub fn critical_distance(f: f64, area: f64, eps_r: f64, r_con: f64) -> Result<f64> {
    ensure_positive("f", f)?;
    ensure_positive("area", area)?;
    ensure_positive("eps_r", eps_r)?;
    ensure_positive("r_con", r_con)?;
    Ok(omega(f) * EPSILON_0 * eps_r * area * r_con)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContactRegime {
    Touch,
    NearTouch,
}

/// Touch iff `d <= d_c` (the boundary counts as touch).
pub fn classify_interaction(
    d: f64,
    f: f64,
    area: f64,
    eps_r: f64,
    r_con: f64,
) -> Result<ContactRegime> {
    ensure_nonnegative("d", d)?;
    let d_c = critical_distance(f, area, eps_r, r_con)?;
    Ok(if d <= d_c {
        ContactRegime::Touch
    } else {
        ContactRegime::NearTouch
    })
}

/// Receiver termination.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Termination {
    /// High-impedance voltage pickup; the load is `c_l` of the profile.
    #[default]
    Capacitive,
    /// Resistive load replacing `c_l` (e.g. a 50 Ω instrument input).
    Resistive { r_l: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    OpenSpace,
    GroundedMetal,
    FloatingMetal,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::OpenSpace => "open-space",
            ScenarioKind::GroundedMetal => "grounded-metal",
            ScenarioKind::FloatingMetal => "floating-metal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "open-space" => Some(ScenarioKind::OpenSpace),
            "grounded-metal" => Some(ScenarioKind::GroundedMetal),
            "floating-metal" => Some(ScenarioKind::FloatingMetal),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interaction {
    Proximity,
    Touch,
}

impl Interaction {
    pub fn as_str(self) -> &'static str {
        match self {
            Interaction::Proximity => "proximity",
            Interaction::Touch => "touch",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "proximity" => Some(Interaction::Proximity),
            "touch" => Some(Interaction::Touch),
            _ => None,
        }
    }
}

/// One physical situation: environment, interaction, couplings and drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub interaction: Interaction,
    pub profile: CapacitanceProfile,
    pub contact: Option<ContactInterface>,
    pub termination: Termination,
    /// Transmit amplitude, V.
    pub v_tx: f64,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, profile: CapacitanceProfile) -> Self {
        Scenario {
            kind,
            interaction: Interaction::Proximity,
            profile,
            contact: None,
            termination: Termination::Capacitive,
            v_tx: 1.0,
        }
    }

    pub fn with_contact(mut self, contact: ContactInterface) -> Self {
        self.interaction = Interaction::Touch;
        self.contact = Some(contact);
        self
    }

    pub fn with_termination(mut self, termination: Termination) -> Self {
        self.termination = termination;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.profile.validate()?;
        ensure_nonnegative("v_tx", self.v_tx)?;
        if self.profile.c_b <= 0.0 {
            return Err(HbcError::InvalidScenario(
                "c_b must be > 0 when a body is present".into(),
            ));
        }
        if self.kind == ScenarioKind::OpenSpace && self.profile.has_metal_couplings() {
            return Err(HbcError::InvalidScenario(
                "open-space requires c_gm_tx = c_gm_rx = c_bm = c_mg = 0".into(),
            ));
        }
        match (self.interaction, &self.contact) {
            (Interaction::Touch, None) => {
                return Err(HbcError::InvalidScenario(
                    "touch interaction requires a contact block".into(),
                ))
            }
            (Interaction::Proximity, Some(_)) => {
                return Err(HbcError::InvalidScenario(
                    "contact block given for a proximity interaction".into(),
                ))
            }
            (Interaction::Touch, Some(c)) => {
                if self.kind == ScenarioKind::OpenSpace {
                    return Err(HbcError::InvalidScenario(
                        "touch needs a metal object; open-space has none".into(),
                    ));
                }
                c.validate()?;
            }
            (Interaction::Proximity, None) => {}
        }
        if let Termination::Resistive { r_l } = self.termination {
            ensure_positive("r_l", r_l)?;
        }
        if self.profile.c_x_tx <= 0.0 {
            return Err(HbcError::InvalidScenario("c_x_tx must be > 0".into()));
        }
        if self.termination == Termination::Capacitive && self.profile.c_l_eff() <= 0.0 {
            return Err(HbcError::InvalidScenario(
                "capacitive termination needs c_gb_rx + c_l > 0".into(),
            ));
        }
        Ok(())
    }
}
