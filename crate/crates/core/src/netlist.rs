//! Line-oriented netlist format.
//!
//! ```text
//! # comment
//! MODEL <id> POISSON tau0=<s> v0=<V> tau1=<s> v1=<V> ron=<ohm> roff=<ohm>
//! MODEL <id> APTM kon=<Hz> koff=<Hz> von=<V> voff=<V> aon=<x> aoff=<x> ron=<ohm> roff=<ohm>
//! V <id> <node+> <node-> DC <volts>
//! V <id> <node+> <node-> SIN <amp> <freq> [<phase>]
//! R <id> <n1> <n2> <ohms>
//! M <id> <node+> <node-> model=<id> [state=off|on] [spread_tau0=<lo>,<hi>] [spread_v0=<lo>,<hi>]
//! ```
//!
//! Keywords and attribute keys are case-insensitive; identifiers and node
//! names are not. Node `0` is ground. Values are plain SI numbers.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::devices::{AptmModel, DeviceModel, DeviceState, ParamSpread, PoissonExpModel};
use crate::error::{Error, Result};
use crate::network::{DriveSpec, NetworkState};

pub const GROUND: &str = "0";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedModel {
    pub name: String,
    pub model: DeviceModel,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Source {
        name: String,
        pos: usize,
        neg: usize,
        drive: DriveSpec,
    },
    Resistor {
        name: String,
        a: usize,
        b: usize,
        ohms: f64,
    },
    Memristor {
        name: String,
        pos: usize,
        neg: usize,
        model: usize,
        state: DeviceState,
        spread_tau0: Option<(f64, f64)>,
        spread_v0: Option<(f64, f64)>,
    },
}

impl Element {
    pub fn name(&self) -> &str {
        match self {
            Element::Source { name, .. }
            | Element::Resistor { name, .. }
            | Element::Memristor { name, .. } => name,
        }
    }

    fn terminals(&self) -> (usize, usize) {
        match *self {
            Element::Source { pos, neg, .. } | Element::Memristor { pos, neg, .. } => (pos, neg),
            Element::Resistor { a, b, .. } => (a, b),
        }
    }
}

/// A parsed circuit. `nodes[0]` is always ground.
#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    pub models: Vec<NamedModel>,
    pub nodes: Vec<String>,
    pub elements: Vec<Element>,
}

impl Default for Netlist {
    fn default() -> Self {
        Netlist {
            models: Vec::new(),
            nodes: vec![GROUND.to_string()],
            elements: Vec::new(),
        }
    }
}

impl Netlist {
    pub fn memristor_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, Element::Memristor { .. }))
            .count()
    }

    /// `(node+, node-)` of every memristor, in device order.
    pub fn memristors(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.elements.iter().filter_map(|e| match *e {
            Element::Memristor { pos, neg, .. } => Some((pos, neg)),
            _ => None,
        })
    }

    pub fn memristor_models(&self) -> Vec<DeviceModel> {
        self.elements
            .iter()
            .filter_map(|e| match *e {
                Element::Memristor { model, .. } => Some(self.models[model].model),
                _ => None,
            })
            .collect()
    }

    pub fn memristor_initial_states(&self) -> Vec<DeviceState> {
        self.elements
            .iter()
            .filter_map(|e| match *e {
                Element::Memristor { state, .. } => Some(state),
                _ => None,
            })
            .collect()
    }

    /// Per-device parameter spread. A device with only one spread attribute
    /// keeps the other parameter fixed at its model value.
    pub fn memristor_spreads(&self) -> Vec<Option<ParamSpread>> {
        self.elements
            .iter()
            .filter_map(|e| match *e {
                Element::Memristor {
                    model,
                    spread_tau0,
                    spread_v0,
                    ..
                } => {
                    if spread_tau0.is_none() && spread_v0.is_none() {
                        return Some(None);
                    }
                    let (tau0, v0) = match self.models[model].model {
                        DeviceModel::Poisson(p) => (p.tau0, p.v0),
                        DeviceModel::Aptm(_) => return Some(None),
                    };
                    Some(Some(ParamSpread {
                        tau0_range: spread_tau0.unwrap_or((tau0, tau0)),
                        v0_range: spread_v0.unwrap_or((v0, v0)),
                    }))
                }
                _ => None,
            })
            .collect()
    }

    /// Attach per-device spreads, in memristor order.
    pub fn set_spreads(&mut self, spreads: &[Option<ParamSpread>]) {
        let mut it = spreads.iter();
        for e in &mut self.elements {
            if let Element::Memristor {
                spread_tau0,
                spread_v0,
                ..
            } = e
            {
                if let Some(Some(s)) = it.next() {
                    *spread_tau0 = Some(s.tau0_range);
                    *spread_v0 = Some(s.v0_range);
                }
            }
        }
    }

    fn node_index(&mut self, name: &str) -> usize {
        if let Some(i) = self.nodes.iter().position(|n| n == name) {
            i
        } else {
            self.nodes.push(name.to_string());
            self.nodes.len() - 1
        }
    }

    fn model_index(&mut self, model: DeviceModel) -> usize {
        if let Some(i) = self.models.iter().position(|m| m.model == model) {
            return i;
        }
        let name = format!("m{}", self.models.len());
        self.models.push(NamedModel { name, model });
        self.models.len() - 1
    }

    fn chain(
        n: usize,
        drive: DriveSpec,
        models: &[DeviceModel],
        initial: &NetworkState,
        series: bool,
    ) -> Netlist {
        let mut nl = Netlist::default();
        let src = nl.node_index("n0");
        nl.elements.push(Element::Source {
            name: "src".into(),
            pos: src,
            neg: 0,
            drive,
        });
        for m in 0..n {
            let (pos, neg) = if series {
                let pos = nl.node_index(&format!("n{m}"));
                let neg = if m + 1 == n {
                    0
                } else {
                    nl.node_index(&format!("n{}", m + 1))
                };
                (pos, neg)
            } else {
                (src, 0)
            };
            let model = nl.model_index(models[m]);
            nl.elements.push(Element::Memristor {
                name: format!("d{m}"),
                pos,
                neg,
                model,
                state: initial.get(m),
                spread_tau0: None,
                spread_v0: None,
            });
        }
        nl
    }

    /// Series chain from the source's positive terminal to ground.
    pub fn series(
        n: usize,
        drive: DriveSpec,
        models: &[DeviceModel],
        initial: &NetworkState,
    ) -> Self {
        Self::chain(n, drive, models, initial, true)
    }

    pub fn parallel(
        n: usize,
        drive: DriveSpec,
        models: &[DeviceModel],
        initial: &NetworkState,
    ) -> Self {
        Self::chain(n, drive, models, initial, false)
    }

    /// Structural checks: values, sources, self-loops and connectivity to ground.
    pub fn validate(&self) -> Result<()> {
        if !self
            .elements
            .iter()
            .any(|e| matches!(e, Element::Source { .. }))
        {
            return Err(Error::topology("no source", vec![]));
        }
        for e in &self.elements {
            let (a, b) = e.terminals();
            if a >= self.nodes.len() || b >= self.nodes.len() {
                return Err(Error::topology(
                    format!("element {} references an undeclared node", e.name()),
                    vec![],
                ));
            }
            if a == b {
                return Err(Error::topology(
                    format!("element {} is a self-loop", e.name()),
                    vec![self.nodes[a].clone()],
                ));
            }
            match e {
                Element::Resistor { ohms, .. } if !(ohms.is_finite() && *ohms > 0.0) => {
                    return Err(Error::domain(format!("resistor {} must be > 0", e.name())));
                }
                Element::Memristor { model, .. } if *model >= self.models.len() => {
                    return Err(Error::domain(format!(
                        "memristor {} has no model",
                        e.name()
                    )));
                }
                Element::Source { drive, .. } => drive.validate()?,
                _ => {}
            }
        }
        for m in &self.models {
            m.model.validate()?;
        }
        let floating = self.floating_nodes();
        if !floating.is_empty() {
            return Err(Error::topology("nodes not connected to ground", floating));
        }
        Ok(())
    }

    /// Names of nodes with no conductive or source path to ground.
    pub fn floating_nodes(&self) -> Vec<String> {
        let n = self.nodes.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.elements {
            let (a, b) = e.terminals();
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        let g = find(&mut parent, 0);
        (1..n)
            .filter(|&i| find(&mut parent, i) != g)
            .map(|i| self.nodes[i].clone())
            .collect()
    }

    /// Canonical text form; `parse_netlist(render())` reproduces `self`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for nm in &self.models {
            match nm.model {
                DeviceModel::Poisson(p) => writeln!(
                    out,
                    "MODEL {} POISSON tau0={} v0={} tau1={} v1={} ron={} roff={}",
                    nm.name, p.tau0, p.v0, p.tau1, p.v1, p.r_on, p.r_off
                ),
                DeviceModel::Aptm(a) => writeln!(
                    out,
                    "MODEL {} APTM kon={} koff={} von={} voff={} aon={} aoff={} ron={} roff={}",
                    nm.name,
                    a.k_on,
                    a.k_off,
                    a.v_on,
                    a.v_off,
                    a.alpha_on,
                    a.alpha_off,
                    a.r_on,
                    a.r_off
                ),
            }
            .unwrap();
        }
        for e in &self.elements {
            match e {
                Element::Source {
                    name,
                    pos,
                    neg,
                    drive,
                } => {
                    let d = match *drive {
                        DriveSpec::Dc { v_a } => format!("DC {v_a}"),
                        DriveSpec::Sine {
                            amplitude,
                            frequency,
                            phase,
                        } => format!("SIN {amplitude} {frequency} {phase}"),
                    };
                    writeln!(
                        out,
                        "V {name} {} {} {d}",
                        self.nodes[*pos], self.nodes[*neg]
                    )
                    .unwrap();
                }
                Element::Resistor { name, a, b, ohms } => {
                    writeln!(out, "R {name} {} {} {ohms}", self.nodes[*a], self.nodes[*b]).unwrap();
                }
                Element::Memristor {
                    name,
                    pos,
                    neg,
                    model,
                    state,
                    spread_tau0,
                    spread_v0,
                } => {
                    write!(
                        out,
                        "M {name} {} {} model={} state={}",
                        self.nodes[*pos],
                        self.nodes[*neg],
                        self.models[*model].name,
                        if state.is_on() { "on" } else { "off" }
                    )
                    .unwrap();
                    if let Some((lo, hi)) = spread_tau0 {
                        write!(out, " spread_tau0={lo},{hi}").unwrap();
                    }
                    if let Some((lo, hi)) = spread_v0 {
                        write!(out, " spread_v0={lo},{hi}").unwrap();
                    }
                    out.push('\n');
                }
            }
        }
        out
    }
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(Token {
                    text: &line[s..i],
                    column: s + 1,
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &line[s..],
            column: s + 1,
        });
    }
    out
}

struct LineParser<'a> {
    line: usize,
    tokens: Vec<Token<'a>>,
    pos: usize,
    end_column: usize,
}

impl<'a> LineParser<'a> {
    fn err(&self, column: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            column,
            message: msg.into(),
        }
    }

    fn next(&mut self, expected: &str) -> Result<&Token<'a>> {
        if self.pos < self.tokens.len() {
            self.pos += 1;
            Ok(&self.tokens[self.pos - 1])
        } else {
            Err(self.err(self.end_column, format!("expected {expected}")))
        }
    }

    fn number(&mut self, expected: &str) -> Result<f64> {
        let (text, column) = {
            let t = self.next(expected)?;
            (t.text, t.column)
        };
        parse_number(text)
            .ok_or_else(|| self.err(column, format!("expected {expected}, found '{text}'")))
    }

    fn rest(&mut self) -> &[Token<'a>] {
        let r = &self.tokens[self.pos..];
        self.pos = self.tokens.len();
        r
    }

    fn finish(&self) -> Result<()> {
        match self.tokens.get(self.pos) {
            Some(t) => Err(self.err(t.column, format!("unexpected token '{}'", t.text))),
            None => Ok(()),
        }
    }
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// `key=value` attributes, keys lower-cased.
fn attributes<'a>(
    p: &LineParser<'_>,
    tokens: &[Token<'a>],
) -> Result<Vec<(String, &'a str, usize)>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for t in tokens {
        let Some((k, v)) = t.text.split_once('=') else {
            return Err(p.err(t.column, format!("expected key=value, found '{}'", t.text)));
        };
        let key = k.to_ascii_lowercase();
        if !seen.insert(key.clone()) {
            return Err(p.err(t.column, format!("duplicate attribute '{key}'")));
        }
        out.push((key, v, t.column + k.len() + 1));
    }
    Ok(out)
}

fn parse_model(p: &mut LineParser<'_>) -> Result<(String, DeviceModel)> {
    let name = p.next("model name")?.text.to_string();
    let (kind, kind_col) = {
        let t = p.next("model kind POISSON or APTM")?;
        (t.text.to_ascii_uppercase(), t.column)
    };
    let keys: &[&str] = match kind.as_str() {
        "POISSON" => &["tau0", "v0", "tau1", "v1", "ron", "roff"],
        "APTM" => &["kon", "koff", "von", "voff", "aon", "aoff", "ron", "roff"],
        _ => {
            return Err(p.err(
                kind_col,
                format!("expected POISSON or APTM, found '{kind}'"),
            ))
        }
    };
    let toks: Vec<Token<'_>> = p
        .rest()
        .iter()
        .map(|t| Token {
            text: t.text,
            column: t.column,
        })
        .collect();
    let attrs = attributes(p, &toks)?;
    let mut vals = HashMap::new();
    for (k, v, col) in attrs {
        if !keys.contains(&k.as_str()) {
            return Err(p.err(col, format!("unknown parameter '{k}' for {kind} model")));
        }
        let x = parse_number(v).ok_or_else(|| p.err(col, format!("expected number for '{k}'")))?;
        vals.insert(k, x);
    }
    for k in keys {
        if !vals.contains_key(*k) {
            return Err(p.err(p.end_column, format!("missing parameter '{k}'")));
        }
    }
    let model = if kind == "POISSON" {
        DeviceModel::Poisson(PoissonExpModel {
            tau0: vals["tau0"],
            v0: vals["v0"],
            tau1: vals["tau1"],
            v1: vals["v1"],
            r_on: vals["ron"],
            r_off: vals["roff"],
        })
    } else {
        DeviceModel::Aptm(AptmModel {
            k_on: vals["kon"],
            k_off: vals["koff"],
            v_on: vals["von"],
            v_off: vals["voff"],
            alpha_on: vals["aon"],
            alpha_off: vals["aoff"],
            r_on: vals["ron"],
            r_off: vals["roff"],
        })
    };
    model.validate().map_err(|e| Error::Semantic {
        line: p.line,
        message: format!("model {name}: {e}"),
    })?;
    Ok((name, model))
}

fn parse_range(p: &LineParser<'_>, v: &str, col: usize) -> Result<(f64, f64)> {
    let (lo, hi) = v
        .split_once(',')
        .and_then(|(a, b)| Some((parse_number(a)?, parse_number(b)?)))
        .ok_or_else(|| p.err(col, format!("expected <lo>,<hi>, found '{v}'")))?;
    if !(lo > 0.0 && lo <= hi) {
        return Err(Error::Semantic {
            line: p.line,
            message: format!("spread interval [{lo}, {hi}] must be positive and ordered"),
        });
    }
    Ok((lo, hi))
}

/// Parse and validate a netlist.
pub fn parse_netlist(text: &str) -> Result<Netlist> {
    let mut nl = Netlist::default();
    let mut model_lines: HashMap<String, usize> = HashMap::new();
    let mut element_names: HashSet<String> = HashSet::new();
    // memristor model references resolved after all MODEL lines are known
    let mut pending: Vec<(usize, usize, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        let tokens = tokenize(body);
        if tokens.is_empty() {
            continue;
        }
        let mut p = LineParser {
            line: line_no,
            tokens,
            pos: 0,
            end_column: body.trim_end().len() + 1,
        };
        let (kw, kw_col) = {
            let t = p.next("keyword")?;
            (t.text.to_ascii_uppercase(), t.column)
        };
        let semantic = |message: String| Error::Semantic {
            line: line_no,
            message,
        };
        if kw == "MODEL" {
            let (name, model) = parse_model(&mut p)?;
            if model_lines.insert(name.clone(), line_no).is_some() {
                return Err(semantic(format!("duplicate model '{name}'")));
            }
            nl.models.push(NamedModel { name, model });
            continue;
        }

        let name = p.next("element name")?.text.to_string();
        if !element_names.insert(name.clone()) {
            return Err(semantic(format!("duplicate element '{name}'")));
        }
        let a = p.next("node")?.text.to_string();
        let b = p.next("node")?.text.to_string();
        if a == b {
            return Err(semantic(format!(
                "element '{name}' connects node '{a}' to itself (self-loop)"
            )));
        }
        let (ia, ib) = (nl.node_index(&a), nl.node_index(&b));

        match kw.as_str() {
            "V" => {
                let (kind, col) = {
                    let t = p.next("DC or SIN")?;
                    (t.text.to_ascii_uppercase(), t.column)
                };
                let drive = match kind.as_str() {
                    "DC" => DriveSpec::dc(p.number("voltage")?),
                    "SIN" => {
                        let amplitude = p.number("amplitude")?;
                        let frequency = p.number("frequency")?;
                        let phase = if p.pos < p.tokens.len() {
                            p.number("phase")?
                        } else {
                            0.0
                        };
                        if frequency <= 0.0 {
                            return Err(semantic(format!(
                                "source '{name}': frequency must be > 0"
                            )));
                        }
                        DriveSpec::Sine {
                            amplitude,
                            frequency,
                            phase,
                        }
                    }
                    _ => return Err(p.err(col, format!("expected DC or SIN, found '{kind}'"))),
                };
                p.finish()?;
                nl.elements.push(Element::Source {
                    name,
                    pos: ia,
                    neg: ib,
                    drive,
                });
            }
            "R" => {
                let ohms = p.number("resistance")?;
                p.finish()?;
                if ohms <= 0.0 {
                    return Err(semantic(format!(
                        "resistor '{name}' must have positive resistance"
                    )));
                }
                nl.elements.push(Element::Resistor {
                    name,
                    a: ia,
                    b: ib,
                    ohms,
                });
            }
            "M" => {
                let toks: Vec<Token<'_>> = p
                    .rest()
                    .iter()
                    .map(|t| Token {
                        text: t.text,
                        column: t.column,
                    })
                    .collect();
                let attrs = attributes(&p, &toks)?;
                let mut model = None;
                let mut state = DeviceState::Off;
                let mut spread_tau0 = None;
                let mut spread_v0 = None;
                for (k, v, col) in attrs {
                    match k.as_str() {
                        "model" => model = Some(v.to_string()),
                        "state" => {
                            state = match v.to_ascii_lowercase().as_str() {
                                "off" => DeviceState::Off,
                                "on" => DeviceState::On,
                                _ => {
                                    return Err(p.err(col, format!("expected off|on, found '{v}'")))
                                }
                            }
                        }
                        "spread_tau0" => spread_tau0 = Some(parse_range(&p, v, col)?),
                        "spread_v0" => spread_v0 = Some(parse_range(&p, v, col)?),
                        _ => {
                            return Err(p.err(col - k.len() - 1, format!("unknown attribute '{k}'")))
                        }
                    }
                }
                let model = model.ok_or_else(|| p.err(p.end_column, "expected model=<id>"))?;
                pending.push((nl.elements.len(), line_no, model));
                nl.elements.push(Element::Memristor {
                    name,
                    pos: ia,
                    neg: ib,
                    model: usize::MAX,
                    state,
                    spread_tau0,
                    spread_v0,
                });
            }
            _ => return Err(p.err(kw_col, format!("expected MODEL, V, R or M, found '{kw}'"))),
        }
    }

    for (el, line, model_name) in pending {
        let Some(mi) = nl.models.iter().position(|m| m.name == model_name) else {
            return Err(Error::Semantic {
                line,
                message: format!("undefined model '{model_name}'"),
            });
        };
        if let Element::Memristor {
            model,
            spread_tau0,
            spread_v0,
            ..
        } = &mut nl.elements[el]
        {
            if (spread_tau0.is_some() || spread_v0.is_some())
                && !matches!(nl.models[mi].model, DeviceModel::Poisson(_))
            {
                return Err(Error::Semantic {
                    line,
                    message: "spread attributes apply only to POISSON models".into(),
                });
            }
            *model = mi;
        }
    }

    if !nl
        .elements
        .iter()
        .any(|e| matches!(e, Element::Source { .. }))
    {
        return Err(Error::Semantic {
            line: 0,
            message: "no source".into(),
        });
    }
    let floating = nl.floating_nodes();
    if !floating.is_empty() {
        return Err(Error::Semantic {
            line: 0,
            message: format!("nodes not connected to ground: {}", floating.join(", ")),
        });
    }
    Ok(nl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SERIES2: &str = "\
MODEL m1 POISSON tau0=3e5 v0=0.05 tau1=3e5 v1=0.05 ron=1e3 roff=1e4
V src n1 0 DC 2
M d1 n1 n2 model=m1
M d2 n2 0 model=m1
";

    #[test]
    fn parses_series_two() {
        let nl = parse_netlist(SERIES2).unwrap();
        assert_eq!(nl.memristor_count(), 2);
        assert_eq!(nl.nodes, vec!["0", "n1", "n2"]);
        assert_eq!(
            nl.memristor_models()[0],
            DeviceModel::Poisson(PoissonExpModel::reference())
        );
        assert_eq!(nl.memristors().collect::<Vec<_>>(), vec![(1, 2), (2, 0)]);
    }

    #[test]
    fn empty_input_has_no_source() {
        let err = parse_netlist("").unwrap_err();
        assert!(err.to_string().contains("no source"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn self_loop_resistor() {
        let err = parse_netlist("V s n1 0 DC 1\nR r1 n1 n1 100\n").unwrap_err();
        assert!(matches!(err, Error::Semantic { line: 2, .. }), "{err}");
        assert!(err.to_string().contains("self-loop"));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_netlist("V s n1 0 AC 1\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 1,
                column: 10,
                message: "expected DC or SIN, found 'AC'".into()
            }
        );
        let err = parse_netlist("V s n1 0 DC\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_netlist("X a b c\n").unwrap_err();
        assert!(matches!(
            err,
            Error::Parse {
                line: 1,
                column: 1,
                ..
            }
        ));
    }

    #[test]
    fn semantic_errors() {
        let dup = format!("{SERIES2}R d1 n1 0 5\n");
        assert!(matches!(
            parse_netlist(&dup),
            Err(Error::Semantic { line: 5, .. })
        ));
        let undefined = "V s n1 0 DC 1\nM d n1 0 model=nope\n";
        let err = parse_netlist(undefined).unwrap_err();
        assert!(err.to_string().contains("nope"));
        let neg = "V s n1 0 DC 1\nR r n1 0 -5\n";
        assert!(matches!(parse_netlist(neg), Err(Error::Semantic { .. })));
        let floating = "V s n1 0 DC 1\nR r n1 0 5\nR q a b 5\n";
        let err = parse_netlist(floating).unwrap_err();
        assert!(err.to_string().contains("a, b"), "{err}");
        let bad_model = "MODEL m POISSON tau0=3e5 v0=0.05 tau1=3e5 v1=0.05 ron=1e4 roff=1e3\n";
        assert!(matches!(
            parse_netlist(bad_model),
            Err(Error::Semantic { line: 1, .. })
        ));
    }

    #[test]
    fn keywords_case_insensitive_and_comments() {
        let text =
            "# header\nmodel A aptm KON=1e5 koff=1e5 von=1 voff=-1 aon=1 aoff=1 ron=1e3 roff=1e4\n\
                    v s n1 0 sin 2 1000 # trailing\nm d1 n1 0 MODEL=A State=ON\n";
        let nl = parse_netlist(text).unwrap();
        assert_eq!(nl.memristor_initial_states(), vec![DeviceState::On]);
        assert!(matches!(nl.memristor_models()[0], DeviceModel::Aptm(_)));
    }

    #[test]
    fn spreads() {
        let text = format!(
            "{SERIES2}M d3 n2 0 model=m1 spread_tau0=2e5,4e5 spread_v0=0.04,0.06\nM d4 n2 0 model=m1 spread_v0=0.04,0.06\n"
        );
        let nl = parse_netlist(&text).unwrap();
        let s = nl.memristor_spreads();
        assert_eq!(s[0], None);
        assert_eq!(s[2], Some(ParamSpread::reference()));
        assert_eq!(s[3].unwrap().tau0_range, (3e5, 3e5));
    }

    #[test]
    fn render_round_trip_example() {
        let nl = parse_netlist(SERIES2).unwrap();
        assert_eq!(parse_netlist(&nl.render()).unwrap(), nl);
    }

    proptest! {
        #[test]
        fn render_round_trip(
            n in 1usize..6,
            va in -10.0f64..10.0,
            rs in proptest::collection::vec(1.0f64..1e6, 0..4),
            on in any::<u64>(),
            sine in any::<bool>(),
        ) {
            let drive = if sine { DriveSpec::Sine { amplitude: va, frequency: 1e3, phase: 0.3 } } else { DriveSpec::dc(va) };
            let models = vec![DeviceModel::Poisson(PoissonExpModel::reference()); n];
            let mut nl = Netlist::series(n, drive, &models, &NetworkState::new(on, n));
            for (k, r) in rs.iter().enumerate() {
                nl.elements.push(Element::Resistor { name: format!("r{k}"), a: 1, b: 0, ohms: *r });
            }
            let back = parse_netlist(&nl.render()).unwrap();
            prop_assert_eq!(back, nl);
        }
    }
}
