//! Parameter sweeps over frequency, metal distance, contact area or any
//! named capacitance, evaluated with the closed forms, the nodal oracle or
//! both.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HbcError, Result};
use crate::link::{LinkBudget, LinkReport};
use crate::model::{
    derive_effective, parallel_plate_cbm, CapName, Interaction, Scenario, ScenarioKind,
    Termination,
};
use crate::oracle::scenario_transfer;
use crate::scenario_file::scenario_digest;
use crate::transfer::{cutoff_frequency, tf_ntfm, tf_ntgm, tf_tfm, tf_tgm, ComplexTransfer};
use crate::units::MHZ;

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Which coupling a distance sweep moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceTarget {
    /// Torso to metal: sets `c_bm`.
    Body,
    /// Both device grounds to metal: sets `c_gm_tx` and `c_gm_rx`.
    Devices,
    Tx,
    Rx,
}

impl DistanceTarget {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "body" => Some(DistanceTarget::Body),
            "devices" => Some(DistanceTarget::Devices),
            "tx" => Some(DistanceTarget::Tx),
            "rx" => Some(DistanceTarget::Rx),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Hz.
    Frequency,
    /// Metal gap in m; the coupling is a parallel-plate estimate over
    /// `area` (m²).
    Distance {
        target: DistanceTarget,
        area: f64,
        eps_r: f64,
    },
    /// Contact area in m². Resistance scales as 1/A, contact capacitance
    /// as A.
    ContactArea,
    /// Any profile capacitance, F.
    Capacitance { name: CapName },
}

impl SweepAxis {
    pub fn label(&self) -> String {
        match self {
            SweepAxis::Frequency => "frequency_hz".into(),
            SweepAxis::Distance { .. } => "distance_m".into(),
            SweepAxis::ContactArea => "contact_area_m2".into(),
            SweepAxis::Capacitance { name } => format!("{}_f", name.key()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub spacing: Spacing,
    /// Evaluation frequency for non-frequency axes.
    pub at_frequency: f64,
}

impl SweepSpec {
    pub fn new(axis: SweepAxis, from: f64, to: f64, points: usize, spacing: Spacing) -> Self {
        SweepSpec {
            axis,
            from,
            to,
            points,
            spacing,
            at_frequency: 5.0 * MHZ,
        }
    }

    pub fn at(mut self, f: f64) -> Self {
        self.at_frequency = f;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &'static str, value: f64| HbcError::InvalidParameter {
            name: "sweep",
            value,
            reason,
        };
        if !(self.from.is_finite() && self.to.is_finite()) {
            return Err(bad("sweep bounds must be finite", f64::NAN));
        }
        if self.from >= self.to {
            return Err(bad("from must be < to", self.from));
        }
        if self.points < 2 {
            return Err(bad("at least 2 points", self.points as f64));
        }
        if self.spacing == Spacing::Log && self.from <= 0.0 {
            return Err(bad("log spacing needs from > 0", self.from));
        }
        if !matches!(self.axis, SweepAxis::Frequency) && self.from < 0.0 {
            return Err(bad("axis values must be >= 0", self.from));
        }
        if matches!(self.axis, SweepAxis::Distance { .. } | SweepAxis::ContactArea)
            && self.from <= 0.0
        {
            return Err(bad("distance and area must be > 0", self.from));
        }
        if let SweepAxis::Distance { area, eps_r, .. } = self.axis {
            if !(area > 0.0 && eps_r > 0.0) {
                return Err(bad("distance sweep needs area > 0 and eps_r > 0", area));
            }
        }
        if !(self.at_frequency.is_finite() && self.at_frequency >= 0.0) {
            return Err(bad("at_frequency must be finite and >= 0", self.at_frequency));
        }
        Ok(())
    }

    /// Axis values, strictly increasing; the endpoints are exact.
    pub fn values(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let n = self.points;
        let last = (n - 1) as f64;
        let mut out: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.from + (self.to - self.from) * t,
                    Spacing::Log => self.from * (self.to / self.from).powf(t),
                }
            })
            .collect();
        out[0] = self.from;
        out[n - 1] = self.to;
        if out.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HbcError::InvalidParameter {
                name: "points",
                value: n as f64,
                reason: "too many points for the range; axis values collide",
            });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelChoice {
    #[default]
    ClosedForm,
    Oracle,
    /// Closed form in the value columns plus its relative gap to the oracle.
    Both,
}

impl ModelChoice {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "closed-form" => Some(ModelChoice::ClosedForm),
            "oracle" => Some(ModelChoice::Oracle),
            "both" => Some(ModelChoice::Both),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Execution {
    Sequential,
    /// Work-pool evaluation; identical to `Sequential` without the
    /// `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: f64,
    pub transfer: Complex64,
    pub mag_db: f64,
    pub phase_deg: f64,
    pub link: Option<LinkReport>,
    pub gap_rel: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMetadata {
    pub scenario_digest: String,
    pub model_variant: String,
    pub model: ModelChoice,
    pub tool_version: String,
    pub axis: String,
    pub spacing: Spacing,
    pub at_frequency_hz: Option<f64>,
    /// High-pass corner of a grounded touch scenario.
    pub cutoff_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub metadata: SweepMetadata,
    pub rows: Vec<SweepRow>,
}

/// The closed form matching the scenario's environment and interaction.
pub fn closed_form_transfer(scenario: &Scenario, f: f64) -> Result<ComplexTransfer> {
    if let Termination::Resistive { .. } = scenario.termination {
        return Err(HbcError::ModelUnavailable(
            "no closed form for a resistive termination; use the oracle".into(),
        ));
    }
    let profile = &scenario.profile;
    match (scenario.kind, scenario.interaction, &scenario.contact) {
        (ScenarioKind::OpenSpace, _, _) | (ScenarioKind::GroundedMetal, Interaction::Proximity, _) => {
            Ok(tf_ntgm(&derive_effective(profile)?, f))
        }
        (ScenarioKind::GroundedMetal, Interaction::Touch, Some(c)) => {
            Ok(tf_tgm(&derive_effective(profile)?, c, f))
        }
        (ScenarioKind::FloatingMetal, Interaction::Proximity, _) => tf_ntfm(profile, f),
        (ScenarioKind::FloatingMetal, Interaction::Touch, Some(c)) => tf_tfm(profile, c, f),
        (_, Interaction::Touch, None) => Err(HbcError::InvalidScenario(
            "touch interaction requires a contact block".into(),
        )),
    }
}

/// Form label of the closed form used for this scenario.
pub fn closed_form_variant(scenario: &Scenario) -> &'static str {
    match scenario.kind {
        ScenarioKind::FloatingMetal => "exact",
        _ => "approximate",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointResult {
    pub transfer: ComplexTransfer,
    pub gap_rel: Option<f64>,
}

pub fn evaluate(scenario: &Scenario, f: f64, model: ModelChoice) -> Result<PointResult> {
    match model {
        ModelChoice::ClosedForm => Ok(PointResult {
            transfer: closed_form_transfer(scenario, f)?,
            gap_rel: None,
        }),
        ModelChoice::Oracle => Ok(PointResult {
            transfer: scenario_transfer(scenario, f)?,
            gap_rel: None,
        }),
        ModelChoice::Both => {
            let closed = closed_form_transfer(scenario, f)?;
            let oracle = scenario_transfer(scenario, f)?;
            let denom = oracle.value.norm();
            let gap = if denom == 0.0 {
                if closed.value.norm() == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (closed.value - oracle.value).norm() / denom
            };
            Ok(PointResult {
                transfer: closed,
                gap_rel: Some(gap),
            })
        }
    }
}

/// Scenario and evaluation frequency at one axis value.
pub fn apply_axis(scenario: &Scenario, spec: &SweepSpec, x: f64) -> Result<(Scenario, f64)> {
    let mut s = scenario.clone();
    let f = match spec.axis {
        SweepAxis::Frequency => return Ok((s, x)),
        SweepAxis::Distance {
            target,
            area,
            eps_r,
        } => {
            let c = parallel_plate_cbm(x, area, eps_r)?;
            match target {
                DistanceTarget::Body => s.profile.c_bm = c,
                DistanceTarget::Devices => {
                    s.profile.c_gm_tx = c;
                    s.profile.c_gm_rx = c;
                }
                DistanceTarget::Tx => s.profile.c_gm_tx = c,
                DistanceTarget::Rx => s.profile.c_gm_rx = c,
            }
            spec.at_frequency
        }
        SweepAxis::ContactArea => {
            let contact = s
                .contact
                .ok_or_else(|| HbcError::AxisMismatch("contact-area sweep needs a touch scenario".into()))?;
            s.contact = Some(contact.rescaled_to_area(x)?);
            spec.at_frequency
        }
        SweepAxis::Capacitance { name } => {
            *s.profile.get_mut(name) = x;
            spec.at_frequency
        }
    };
    s.validate()?;
    Ok((s, f))
}

fn check_axis(scenario: &Scenario, spec: &SweepSpec) -> Result<()> {
    match spec.axis {
        SweepAxis::Distance { .. } => {
            if scenario.interaction != Interaction::Proximity {
                return Err(HbcError::AxisMismatch(
                    "distance sweep requires a proximity interaction".into(),
                ));
            }
            if scenario.kind == ScenarioKind::OpenSpace {
                return Err(HbcError::AxisMismatch(
                    "distance sweep needs a metal object; open-space has none".into(),
                ));
            }
        }
        SweepAxis::ContactArea => {
            if scenario.interaction != Interaction::Touch {
                return Err(HbcError::AxisMismatch(
                    "contact-area sweep requires a touch interaction".into(),
                ));
            }
        }
        SweepAxis::Capacitance { name } => {
            if scenario.kind == ScenarioKind::OpenSpace
                && matches!(name, CapName::CGmTx | CapName::CGmRx | CapName::CBm | CapName::CMg)
            {
                return Err(HbcError::AxisMismatch(format!(
                    "{} is a metal coupling; open-space has none",
                    name.key()
                )));
            }
        }
        SweepAxis::Frequency => {}
    }
    Ok(())
}

pub fn run_sweep(scenario: &Scenario, spec: &SweepSpec, model: ModelChoice) -> Result<SweepResult> {
    run_sweep_with(scenario, spec, model, None, Execution::default())
}

pub fn run_sweep_with(
    scenario: &Scenario,
    spec: &SweepSpec,
    model: ModelChoice,
    link: Option<&LinkBudget>,
    exec: Execution,
) -> Result<SweepResult> {
    scenario.validate()?;
    check_axis(scenario, spec)?;
    if let Some(budget) = link {
        budget.validate()?;
    }
    let xs = spec.values()?;

    let point = |x: &f64| -> Result<SweepRow> {
        let (s, f) = apply_axis(scenario, spec, *x)?;
        let p = evaluate(&s, f, model)?;
        let link = match link {
            Some(b) => Some(LinkReport::from_transfer(p.transfer.magnitude(), b)?),
            None => None,
        };
        Ok(SweepRow {
            axis: *x,
            transfer: p.transfer.value,
            mag_db: p.transfer.mag_db(),
            phase_deg: p.transfer.phase_deg(),
            link,
            gap_rel: p.gap_rel,
        })
    };
    let rows = map_points(&xs, exec, point)?;

    let model_variant = match model {
        ModelChoice::Oracle => "oracle",
        _ => closed_form_variant(scenario),
    };
    let cutoff_hz = match (scenario.kind, &scenario.contact) {
        (ScenarioKind::GroundedMetal, Some(c)) if spec.axis == SweepAxis::Frequency => {
            Some(cutoff_frequency(c))
        }
        _ => None,
    };
    Ok(SweepResult {
        metadata: SweepMetadata {
            scenario_digest: scenario_digest(scenario),
            model_variant: model_variant.to_string(),
            model,
            tool_version: TOOL_VERSION.to_string(),
            axis: spec.axis.label(),
            spacing: spec.spacing,
            at_frequency_hz: (spec.axis != SweepAxis::Frequency).then_some(spec.at_frequency),
            cutoff_hz,
        },
        rows,
    })
}

#[cfg(feature = "parallel")]
fn map_points<F>(xs: &[f64], exec: Execution, point: F) -> Result<Vec<SweepRow>>
where
    F: Fn(&f64) -> Result<SweepRow> + Sync + Send,
{
    use rayon::prelude::*;
    match exec {
        Execution::Parallel => xs.par_iter().map(point).collect(),
        Execution::Sequential => xs.iter().map(point).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn map_points<F>(xs: &[f64], _exec: Execution, point: F) -> Result<Vec<SweepRow>>
where
    F: Fn(&f64) -> Result<SweepRow>,
{
    xs.iter().map(point).collect()
}

/// Transfer plus link metrics at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkOutcome {
    pub transfer: ComplexTransfer,
    pub gap_rel: Option<f64>,
    pub report: LinkReport,
}

pub fn run_link(
    scenario: &Scenario,
    budget: &LinkBudget,
    f: f64,
    model: ModelChoice,
) -> Result<LinkOutcome> {
    scenario.validate()?;
    budget.validate()?;
    let p = evaluate(scenario, f, model)?;
    let report = LinkReport::from_transfer(p.transfer.magnitude(), budget)?;
    Ok(LinkOutcome {
        transfer: p.transfer,
        gap_rel: p.gap_rel,
        report,
    })
}
