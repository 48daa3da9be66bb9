//! Line-oriented netlist parser.
//!
//! One branch per line, `#` starts a comment, the ground node is always
//! named `0`, values are SI without unit suffixes:
//!
//! ```text
//! R   <name> <n+> <n-> <ohms>
//! C   <name> <n+> <n-> <farads>
//! L   <name> <n+> <n-> <henries>
//! LNL <name> <n+> <n-> <L_nom> <L_deepsat> <sigma> <I_knee>
//! I   <name> <n+> <n-> SIN <amp1> <freq1_Hz> [<amp2> <freq2_Hz> ...]
//! V   <name> <n+> <n-> SIN <amp1> <freq1_Hz> [...]   |   DC <volts>
//! ```

use std::collections::BTreeSet;

use serde::Serialize;

use super::inductor::SaturableInductorParams;
use crate::error::{Error, Result};

/// One sinusoidal component of a source waveform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SineTerm {
    pub amplitude: f64,
    pub frequency_hz: f64,
}

/// Time-dependent excitation of an independent source.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SourceWaveform {
    /// Constant value.
    Dc(f64),
    /// Sum of sinusoids, each `amplitude · sin(2π · frequency · t)`.
    Sin(Vec<SineTerm>),
}

impl SourceWaveform {
    /// Waveform value at time `t`.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            SourceWaveform::Dc(v) => *v,
            SourceWaveform::Sin(terms) => terms
                .iter()
                .map(|s| s.amplitude * (2.0 * std::f64::consts::PI * s.frequency_hz * t).sin())
                .sum(),
        }
    }

    /// Time derivative of the waveform at `t`.
    pub fn rate(&self, t: f64) -> f64 {
        match self {
            SourceWaveform::Dc(_) => 0.0,
            SourceWaveform::Sin(terms) => terms
                .iter()
                .map(|s| {
                    let w = 2.0 * std::f64::consts::PI * s.frequency_hz;
                    s.amplitude * w * (w * t).cos()
                })
                .sum(),
        }
    }
}

/// Element law attached to a branch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BranchKind {
    Resistor(f64),
    Capacitor(f64),
    Inductor(f64),
    SaturableInductor(SaturableInductorParams),
    CurrentSource(SourceWaveform),
    VoltageSource(SourceWaveform),
}

impl BranchKind {
    /// The keyword this kind uses in the netlist format.
    pub fn keyword(&self) -> &'static str {
        match self {
            BranchKind::Resistor(_) => "R",
            BranchKind::Capacitor(_) => "C",
            BranchKind::Inductor(_) => "L",
            BranchKind::SaturableInductor(_) => "LNL",
            BranchKind::CurrentSource(_) => "I",
            BranchKind::VoltageSource(_) => "V",
        }
    }
}

/// A two-terminal branch. Reference direction is from `node_plus` to
/// `node_minus`; a positive branch current flows from plus to minus through
/// the element.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Branch {
    pub name: String,
    pub kind: BranchKind,
    pub node_plus: String,
    pub node_minus: String,
}

impl Branch {
    /// True if either terminal is the ground node.
    pub fn touches_ground(&self) -> bool {
        self.node_plus == GROUND || self.node_minus == GROUND
    }
}

/// Name of the ground (datum) node.
pub const GROUND: &str = "0";

/// A validated branch list with the derived non-ground node set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Netlist {
    branches: Vec<Branch>,
    /// Non-ground node names, numerically then lexicographically sorted.
    nodes: Vec<String>,
}

impl Netlist {
    /// Builds a netlist directly from branches, deriving the canonical node
    /// order. Unlike [`parse_netlist`] this applies no topology checks;
    /// model assembly re-validates whatever structure it relies on.
    pub fn from_branches(branches: Vec<Branch>) -> Netlist {
        let nodes = canonical_nodes(&branches);
        Netlist { branches, nodes }
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// Non-ground node names in their canonical order.
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    /// Index of a non-ground node in the canonical order.
    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }
}

/// Non-ground node names touched by `branches`, numerically then
/// lexicographically sorted.
fn canonical_nodes(branches: &[Branch]) -> Vec<String> {
    let mut node_set: BTreeSet<&str> = BTreeSet::new();
    for b in branches {
        node_set.insert(b.node_plus.as_str());
        node_set.insert(b.node_minus.as_str());
    }
    node_set.remove(GROUND);
    let mut nodes: Vec<String> = node_set.into_iter().map(String::from).collect();
    nodes.sort_by(|a, b| match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    });
    nodes
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_value(token: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| parse_err(line, format!("malformed {what} value '{token}'")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("{what} value '{token}' is not finite")));
    }
    Ok(v)
}

fn parse_positive(token: &str, line: usize, what: &str) -> Result<f64> {
    let v = parse_value(token, line, what)?;
    if v <= 0.0 {
        return Err(parse_err(line, format!("{what} must be positive, got '{token}'")));
    }
    Ok(v)
}

fn parse_waveform(tokens: &[&str], line: usize, allow_dc: bool) -> Result<SourceWaveform> {
    match tokens.first().map(|s| s.to_ascii_uppercase()) {
        Some(kw) if kw == "SIN" => {
            let rest = &tokens[1..];
            if rest.is_empty() || rest.len() % 2 != 0 {
                return Err(parse_err(
                    line,
                    "SIN waveform needs one or more <amplitude> <frequency_Hz> pairs",
                ));
            }
            let mut terms = Vec::with_capacity(rest.len() / 2);
            for pair in rest.chunks(2) {
                terms.push(SineTerm {
                    amplitude: parse_value(pair[0], line, "amplitude")?,
                    frequency_hz: parse_positive(pair[1], line, "frequency")?,
                });
            }
            Ok(SourceWaveform::Sin(terms))
        }
        Some(kw) if kw == "DC" => {
            if !allow_dc {
                return Err(parse_err(
                    line,
                    "DC waveform is only supported on voltage sources",
                ));
            }
            match tokens[1..] {
                [v] => Ok(SourceWaveform::Dc(parse_value(v, line, "DC")?)),
                _ => Err(parse_err(line, "DC waveform takes exactly one value")),
            }
        }
        Some(other) => Err(parse_err(line, format!("unknown waveform kind '{other}'"))),
        None => Err(parse_err(line, "source line is missing its waveform")),
    }
}

/// Parses netlist text into a validated [`Netlist`].
///
/// Errors carry the 1-based line number of the offending line. Violations of
/// file-level invariants (missing ground connection, dangling node) are
/// reported against the last line of the file.
pub fn parse_netlist(text: &str) -> Result<Netlist> {
    let mut branches: Vec<Branch> = Vec::new();
    let mut last_line = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        last_line = line_no;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let kind_kw = tokens[0].to_ascii_uppercase();
        if tokens.len() < 4 {
            return Err(parse_err(
                line_no,
                "branch line needs at least <kind> <name> <n+> <n->",
            ));
        }
        let name = tokens[1].to_string();
        let node_plus = tokens[2].to_string();
        let node_minus = tokens[3].to_string();
        if node_plus == node_minus {
            return Err(parse_err(
                line_no,
                format!("branch '{name}' connects node '{node_plus}' to itself"),
            ));
        }
        if branches.iter().any(|b| b.name == name) {
            return Err(parse_err(line_no, format!("duplicate branch name '{name}'")));
        }
        let params = &tokens[4..];
        let kind = match kind_kw.as_str() {
            "R" | "C" | "L" => {
                let [value] = params else {
                    return Err(parse_err(
                        line_no,
                        format!("{kind_kw} takes exactly one parameter"),
                    ));
                };
                let what = match kind_kw.as_str() {
                    "R" => "resistance",
                    "C" => "capacitance",
                    _ => "inductance",
                };
                let v = parse_positive(value, line_no, what)?;
                match kind_kw.as_str() {
                    "R" => BranchKind::Resistor(v),
                    "C" => BranchKind::Capacitor(v),
                    _ => BranchKind::Inductor(v),
                }
            }
            "LNL" => {
                let [l_nom, l_deep, sigma, i_knee] = params else {
                    return Err(parse_err(
                        line_no,
                        "LNL takes <L_nom> <L_deepsat> <sigma> <I_knee>",
                    ));
                };
                let p = SaturableInductorParams {
                    l_nominal: parse_positive(l_nom, line_no, "nominal inductance")?,
                    l_deepsat: parse_positive(l_deep, line_no, "deep-saturation inductance")?,
                    sigma: parse_positive(sigma, line_no, "smoothness factor")?,
                    i_knee: parse_positive(i_knee, line_no, "transition current")?,
                };
                p.validate()
                    .map_err(|e| parse_err(line_no, format!("invalid LNL parameters: {e}")))?;
                BranchKind::SaturableInductor(p)
            }
            "I" => BranchKind::CurrentSource(parse_waveform(params, line_no, false)?),
            "V" => BranchKind::VoltageSource(parse_waveform(params, line_no, true)?),
            other => {
                return Err(parse_err(line_no, format!("unknown element kind '{other}'")));
            }
        };
        branches.push(Branch {
            name,
            kind,
            node_plus,
            node_minus,
        });
    }

    if branches.is_empty() {
        return Err(parse_err(last_line, "netlist contains no branches"));
    }
    if !branches.iter().any(|b| b.touches_ground()) {
        return Err(parse_err(
            last_line,
            format!("no branch is connected to the ground node '{GROUND}'"),
        ));
    }

    // A node with no conductive path back to ground cannot carry a defined
    // potential; reject such islands as wiring mistakes.
    let nodes = canonical_nodes(&branches);
    let mut reachable: BTreeSet<&str> = BTreeSet::new();
    reachable.insert(GROUND);
    loop {
        let before = reachable.len();
        for b in &branches {
            if reachable.contains(b.node_plus.as_str()) || reachable.contains(b.node_minus.as_str())
            {
                reachable.insert(b.node_plus.as_str());
                reachable.insert(b.node_minus.as_str());
            }
        }
        if reachable.len() == before {
            break;
        }
    }
    for node in &nodes {
        if !reachable.contains(node.as_str()) {
            return Err(parse_err(
                last_line,
                format!("node '{node}' is dangling (no path to the ground node '{GROUND}')"),
            ));
        }
    }

    Ok(Netlist { branches, nodes })
}
