//! Brute-force nodal analysis of the lumped body-channel network.
//!
//! [`build_netlist`] turns a [`Scenario`] into a small capacitor/resistor
//! graph with one ideal voltage source at the transmitter port, and
//! [`solve`] runs modified nodal analysis on it with a dense complex
//! elimination. Every closed-form transfer function in [`crate::transfer`]
//! is checked against this solver.

mod dd;
mod linalg;

use num_complex::Complex64;
use serde::Serialize;

use self::dd::Cdd;
use crate::error::{HbcError, Result};
use crate::model::{Interaction, Scenario, ScenarioKind, Termination};
use crate::transfer::{ComplexTransfer, ModelForm};
use crate::units::omega;

pub use linalg::solve_dense;

pub const EARTH: &str = "earth";
pub const BODY: &str = "body";
pub const TX_GROUND: &str = "tx-ground";
pub const RX_GROUND: &str = "rx-ground";
pub const METAL: &str = "metal";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeId(pub usize);

impl NodeId {
    pub const REFERENCE: NodeId = NodeId(0);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Element {
    Capacitor(f64),
    Resistor(f64),
}

impl Element {
    pub fn admittance(&self, f: f64) -> Complex64 {
        match *self {
            Element::Capacitor(c) => Complex64::new(0.0, omega(f) * c),
            Element::Resistor(r) => Complex64::new(1.0 / r, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Branch {
    pub a: NodeId,
    pub b: NodeId,
    pub element: Element,
    pub label: String,
}

/// Ordered node pair; the port voltage is `V(pos) - V(neg)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Port {
    pub pos: NodeId,
    pub neg: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Source {
    pub port: Port,
    pub amplitude: f64,
}

/// Capacitor/resistor graph with one driven port and one sensed port.
/// Node 0 is always the earth reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Netlist {
    nodes: Vec<String>,
    branches: Vec<Branch>,
    source: Option<Source>,
    output: Option<Port>,
}

impl Default for Netlist {
    fn default() -> Self {
        Self::new()
    }
}

impl Netlist {
    pub fn new() -> Self {
        Netlist {
            nodes: vec![EARTH.to_string()],
            branches: Vec::new(),
            source: None,
            output: None,
        }
    }

    pub fn add_node(&mut self, name: &str) -> NodeId {
        if let Some(id) = self.node(name) {
            return id;
        }
        self.nodes.push(name.to_string());
        NodeId(self.nodes.len() - 1)
    }

    pub fn node(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n == name).map(NodeId)
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn source(&self) -> Option<Source> {
        self.source
    }

    pub fn output(&self) -> Option<Port> {
        self.output
    }

    /// Adds a branch. Zero-valued capacitors and infinite resistors are open
    /// circuits and are skipped.
    pub fn add_branch(
        &mut self,
        a: NodeId,
        b: NodeId,
        element: Element,
        label: &str,
    ) -> Result<()> {
        if a == b || a.0 >= self.nodes.len() || b.0 >= self.nodes.len() {
            return Err(HbcError::InvalidNetlist(format!(
                "branch `{label}` has bad endpoints {a:?}-{b:?}"
            )));
        }
        let value = match element {
            Element::Capacitor(c) => c,
            Element::Resistor(r) => r,
        };
        if value.is_nan() || value < 0.0 {
            return Err(HbcError::InvalidNetlist(format!(
                "branch `{label}` has invalid value {value}"
            )));
        }
        match element {
            Element::Capacitor(c) if c == 0.0 => return Ok(()),
            Element::Resistor(r) if r.is_infinite() => return Ok(()),
            Element::Resistor(r) if r == 0.0 => {
                return Err(HbcError::InvalidNetlist(format!(
                    "branch `{label}` is a zero-ohm short; merge the nodes instead"
                )))
            }
            _ => {}
        }
        self.branches.push(Branch {
            a,
            b,
            element,
            label: label.to_string(),
        });
        Ok(())
    }

    pub fn set_source(&mut self, port: Port, amplitude: f64) {
        self.source = Some(Source { port, amplitude });
    }

    pub fn set_output(&mut self, port: Port) {
        self.output = Some(port);
    }

    /// Branches touching `node`.
    pub fn incident(&self, node: NodeId) -> impl Iterator<Item = &Branch> {
        self.branches
            .iter()
            .filter(move |b| b.a == node || b.b == node)
    }

    /// Nodes with no conducting path to the reference at frequency `f`.
    /// At DC only resistors conduct. The voltage source counts as a path.
    pub fn isolated_nodes(&self, f: f64, include_source: bool) -> Vec<NodeId> {
        let n = self.nodes.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let union = |p: &mut Vec<usize>, a: usize, b: usize| {
            let ra = find(p, a);
            let rb = find(p, b);
            if ra != rb {
                p[ra] = rb;
            }
        };
        for br in &self.branches {
            if br.element.admittance(f).norm() > 0.0 {
                union(&mut parent, br.a.0, br.b.0);
            }
        }
        if include_source {
            if let Some(s) = self.source {
                union(&mut parent, s.port.pos.0, s.port.neg.0);
            }
        }
        let root = find(&mut parent, 0);
        (1..n)
            .filter(|&i| find(&mut parent, i) != root)
            .map(NodeId)
            .collect()
    }

    fn max_admittance(&self, f: f64) -> f64 {
        self.branches
            .iter()
            .map(|b| b.element.admittance(f).norm())
            .fold(0.0, f64::max)
    }

    fn degenerate(&self, f: f64, nodes: &[NodeId]) -> HbcError {
        HbcError::DegenerateNetwork {
            frequency: f,
            isolated: nodes.iter().map(|&n| self.node_name(n).to_string()).collect(),
        }
    }
}

/// Node voltages from one solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodalSolution {
    pub f: f64,
    /// Indexed by [`NodeId`]; entry 0 (earth) is zero.
    pub voltages: Vec<Complex64>,
    /// Low-order parts left by iterative refinement; the solution is
    /// `voltages[i] + voltage_tails[i]` carried in double-double.
    pub voltage_tails: Vec<Complex64>,
    /// Current delivered by the source into its positive node.
    pub source_current: Complex64,
    /// Largest absolute KCL imbalance over all nodes, A.
    pub kcl_residual: f64,
    /// Largest branch current magnitude, A.
    pub max_branch_current: f64,
}

impl NodalSolution {
    pub fn voltage(&self, node: NodeId) -> Complex64 {
        self.voltages[node.0]
    }

    pub fn port_voltage(&self, port: Port) -> Complex64 {
        let (a, b) = (port.pos.0, port.neg.0);
        let head = Cdd::from_c64(self.voltages[a]).sub(Cdd::from_c64(self.voltages[b]));
        head.add_c64(self.voltage_tails[a] - self.voltage_tails[b]).to_c64()
    }

    /// `kcl_residual / max_branch_current`.
    pub fn relative_residual(&self) -> f64 {
        if self.max_branch_current == 0.0 {
            self.kcl_residual
        } else {
            self.kcl_residual / self.max_branch_current
        }
    }
}

/// Modified nodal analysis at frequency `f`.
///
/// Unknowns are the non-reference node voltages plus the source current.
/// Admittances are normalized by the largest branch admittance before
/// elimination.
pub fn solve(netlist: &Netlist, f: f64) -> Result<NodalSolution> {
    if f.is_nan() || f < 0.0 {
        return Err(HbcError::InvalidParameter {
            name: "f",
            value: f,
            reason: "frequency must be >= 0",
        });
    }
    let source = netlist
        .source
        .ok_or_else(|| HbcError::InvalidNetlist("netlist has no source".into()))?;
    let isolated = netlist.isolated_nodes(f, true);
    if !isolated.is_empty() {
        return Err(netlist.degenerate(f, &isolated));
    }

    let n_nodes = netlist.nodes.len();
    let n_v = n_nodes - 1;
    let dim = n_v + 1;
    let y_max = netlist.max_admittance(f);
    if y_max == 0.0 {
        return Err(netlist.degenerate(f, &(1..n_nodes).map(NodeId).collect::<Vec<_>>()));
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut a = vec![vec![zero; dim]; dim];
    let mut b = vec![zero; dim];

    // row/column of node k (k >= 1) is k - 1
    let idx = |node: NodeId| (node.0 > 0).then(|| node.0 - 1);
    for br in &netlist.branches {
        let y = br.element.admittance(f) / y_max;
        let (ia, ib) = (idx(br.a), idx(br.b));
        if let Some(i) = ia {
            a[i][i] += y;
        }
        if let Some(j) = ib {
            a[j][j] += y;
        }
        if let (Some(i), Some(j)) = (ia, ib) {
            a[i][j] -= y;
            a[j][i] -= y;
        }
    }
    let one = Complex64::new(1.0, 0.0);
    let src = n_v;
    if let Some(i) = idx(source.port.pos) {
        a[i][src] -= one;
        a[src][i] += one;
    }
    if let Some(j) = idx(source.port.neg) {
        a[j][src] += one;
        a[src][j] -= one;
    }
    b[src] = Complex64::new(source.amplitude, 0.0);

    let singular = || netlist.degenerate(f, &(1..n_nodes).map(NodeId).collect::<Vec<_>>());
    let x = solve_dense(a.clone(), b).ok_or_else(singular)?;

    // Unknowns carried in double-double: node voltages, then the source
    // current in physical units.
    let mut v: Vec<Cdd> = vec![Cdd::default(); n_nodes];
    for k in 0..n_v {
        v[k + 1] = Cdd::from_c64(x[k]);
    }
    let mut i_src = Cdd::from_c64(x[src] * y_max);
    let admittances: Vec<Complex64> = netlist.branches.iter().map(|br| br.element.admittance(f)).collect();

    // Iterative refinement against the branch-form KCL. The correction
    // solve reuses the scaled double-precision matrix.
    let mut imbalance = kcl_imbalance(netlist, &admittances, &v, source.port, i_src);
    for _ in 0..REFINEMENT_STEPS {
        let source_err = Cdd::from_c64(Complex64::new(source.amplitude, 0.0))
            .sub(v[source.port.pos.0].sub(v[source.port.neg.0]));
        let mut r = vec![zero; dim];
        for k in 0..n_v {
            r[k] = -imbalance[k + 1].to_c64() / y_max;
        }
        r[src] = source_err.to_c64();
        if r.iter().all(|z| *z == zero) {
            break;
        }
        let Some(delta) = solve_dense(a.clone(), r) else {
            break;
        };
        for k in 0..n_v {
            v[k + 1] = v[k + 1].add_c64(delta[k]);
        }
        i_src = i_src.add_c64(delta[src] * y_max);
        imbalance = kcl_imbalance(netlist, &admittances, &v, source.port, i_src);
    }

    let voltages: Vec<Complex64> = v.iter().map(|z| z.head()).collect();
    let voltage_tails: Vec<Complex64> = v.iter().map(|z| z.tail()).collect();
    let kcl_residual = imbalance.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let max_branch_current = netlist
        .branches
        .iter()
        .zip(&admittances)
        .map(|(br, y)| v[br.a.0].sub(v[br.b.0]).scale(*y).norm())
        .fold(0.0, f64::max);

    Ok(NodalSolution {
        f,
        voltages,
        voltage_tails,
        source_current: i_src.to_c64(),
        kcl_residual,
        max_branch_current,
    })
}

const REFINEMENT_STEPS: usize = 4;

/// Per-node net current leaving through branches minus the source
/// injection, in double-double. Entry 0 is the reference node.
fn kcl_imbalance(
    netlist: &Netlist,
    admittances: &[Complex64],
    v: &[Cdd],
    port: Port,
    i_src: Cdd,
) -> Vec<Cdd> {
    let mut imbalance = vec![Cdd::default(); v.len()];
    for (br, y) in netlist.branches.iter().zip(admittances) {
        let i = v[br.a.0].sub(v[br.b.0]).scale(*y);
        imbalance[br.a.0] = imbalance[br.a.0].add(i);
        imbalance[br.b.0] = imbalance[br.b.0].sub(i);
    }
    imbalance[port.pos.0] = imbalance[port.pos.0].sub(i_src);
    imbalance[port.neg.0] = imbalance[port.neg.0].add(i_src);
    imbalance
}

/// Voltage transfer from the source port to `output`.
pub fn transfer(netlist: &Netlist, f: f64, output: Port) -> Result<ComplexTransfer> {
    let source = netlist
        .source
        .ok_or_else(|| HbcError::InvalidNetlist("netlist has no source".into()))?;
    let sol = solve(netlist, f)?;
    let value = if source.amplitude == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        sol.port_voltage(output) / source.amplitude
    };
    Ok(ComplexTransfer::new(value, f, ModelForm::Oracle))
}

/// Voltage transfer to the netlist's configured output port.
pub fn output_transfer(netlist: &Netlist, f: f64) -> Result<ComplexTransfer> {
    let output = netlist
        .output
        .ok_or_else(|| HbcError::InvalidNetlist("netlist has no output port".into()))?;
    transfer(netlist, f, output)
}

/// Open-circuit transimpedance: voltage at `sense` per ampere injected at
/// `drive`, with the voltage source removed.
pub fn transimpedance(netlist: &Netlist, f: f64, drive: Port, sense: Port) -> Result<Complex64> {
    let isolated = netlist.isolated_nodes(f, false);
    if !isolated.is_empty() {
        return Err(netlist.degenerate(f, &isolated));
    }
    let n_nodes = netlist.nodes.len();
    let n_v = n_nodes - 1;
    let y_max = netlist.max_admittance(f);
    let zero = Complex64::new(0.0, 0.0);
    let mut a = vec![vec![zero; n_v]; n_v];
    let idx = |node: NodeId| (node.0 > 0).then(|| node.0 - 1);
    for br in &netlist.branches {
        let y = br.element.admittance(f) / y_max;
        let (ia, ib) = (idx(br.a), idx(br.b));
        if let Some(i) = ia {
            a[i][i] += y;
        }
        if let Some(j) = ib {
            a[j][j] += y;
        }
        if let (Some(i), Some(j)) = (ia, ib) {
            a[i][j] -= y;
            a[j][i] -= y;
        }
    }
    // inject 1 A (scaled by the same normalization) into drive.pos, out of drive.neg
    let mut b = vec![zero; n_v];
    if let Some(i) = idx(drive.pos) {
        b[i] += Complex64::new(1.0 / y_max, 0.0);
    }
    if let Some(j) = idx(drive.neg) {
        b[j] -= Complex64::new(1.0 / y_max, 0.0);
    }
    let x = solve_dense(a, b).ok_or_else(|| {
        netlist.degenerate(f, &(1..n_nodes).map(NodeId).collect::<Vec<_>>())
    })?;
    let v = |node: NodeId| idx(node).map_or(zero, |i| x[i]);
    Ok(v(sense.pos) - v(sense.neg))
}

/// Transimpedance asymmetry `|Z21 - Z12|` between the source port and the
/// output port, relative to `max(|Z21|, sqrt(|Z11|·|Z22|))`. The
/// self-impedance scale keeps the measure meaningful when the ports are
/// nearly decoupled and `Z21` itself is round-off.
pub fn reciprocity_check(netlist: &Netlist, f: f64) -> Result<f64> {
    let port1 = netlist
        .source
        .ok_or_else(|| HbcError::InvalidNetlist("netlist has no source".into()))?
        .port;
    let port2 = netlist
        .output
        .ok_or_else(|| HbcError::InvalidNetlist("netlist has no output port".into()))?;
    let z21 = transimpedance(netlist, f, port1, port2)?;
    let z12 = transimpedance(netlist, f, port2, port1)?;
    let z11 = transimpedance(netlist, f, port1, port1)?;
    let z22 = transimpedance(netlist, f, port2, port2)?;
    let scale = z21.norm().max((z11.norm() * z22.norm()).sqrt());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((z21 - z12).norm() / scale)
}

/// Voltage transfer with the source moved to `drive`, read at `sense`.
/// Forward is (source port, output port); reverse swaps them.
pub fn voltage_transfer(netlist: &Netlist, f: f64, drive: Port, sense: Port) -> Result<Complex64> {
    let mut driven = netlist.clone();
    driven.set_source(drive, 1.0);
    Ok(transfer(&driven, f, sense)?.value)
}

/// Builds the fixed per-kind topology for a scenario.
///
/// The transmitter is an ideal source between body and Tx ground; the
/// output is sensed between body and Rx ground.
pub fn build_netlist(scenario: &Scenario) -> Result<Netlist> {
    scenario.validate()?;
    let p = &scenario.profile;
    let mut n = Netlist::new();
    let earth = NodeId::REFERENCE;
    let body = n.add_node(BODY);
    let tx = n.add_node(TX_GROUND);
    let rx = n.add_node(RX_GROUND);

    n.add_branch(tx, earth, Element::Capacitor(p.c_x_tx), "c_x_tx")?;
    n.add_branch(body, earth, Element::Capacitor(p.c_b), "c_b")?;
    n.add_branch(rx, earth, Element::Capacitor(p.c_x_rx), "c_x_rx")?;
    n.add_branch(body, rx, Element::Capacitor(p.c_gb_rx), "c_gb_rx")?;
    match scenario.termination {
        Termination::Capacitive => n.add_branch(body, rx, Element::Capacitor(p.c_l), "c_l")?,
        Termination::Resistive { r_l } => n.add_branch(body, rx, Element::Resistor(r_l), "r_l")?,
    }
    n.add_branch(tx, rx, Element::Capacitor(p.c_c), "c_c")?;

    let metal = match scenario.kind {
        ScenarioKind::OpenSpace => None,
        ScenarioKind::GroundedMetal => Some(earth),
        ScenarioKind::FloatingMetal => {
            let m = n.add_node(METAL);
            n.add_branch(m, earth, Element::Capacitor(p.c_mg), "c_mg")?;
            Some(m)
        }
    };
    if let Some(m) = metal {
        n.add_branch(tx, m, Element::Capacitor(p.c_gm_tx), "c_gm_tx")?;
        n.add_branch(rx, m, Element::Capacitor(p.c_gm_rx), "c_gm_rx")?;
        match (scenario.interaction, &scenario.contact) {
            (Interaction::Touch, Some(contact)) => {
                n.add_branch(body, m, Element::Resistor(contact.r_con), "r_con")?;
                n.add_branch(body, m, Element::Capacitor(contact.c_bm_touch), "c_bm")?;
            }
            _ => n.add_branch(body, m, Element::Capacitor(p.c_bm), "c_bm")?,
        }
    }

    n.set_source(Port { pos: body, neg: tx }, scenario.v_tx);
    n.set_output(Port { pos: body, neg: rx });
    Ok(n)
}

/// Solves the scenario's netlist and returns `V_Rx / V_Tx`.
pub fn scenario_transfer(scenario: &Scenario, f: f64) -> Result<ComplexTransfer> {
    let mut net = build_netlist(scenario)?;
    if let Some(src) = net.source {
        net.set_source(src.port, 1.0);
    }
    output_transfer(&net, f)
}
