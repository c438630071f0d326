//! Dense modified nodal analysis for resistive circuits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::netlist::{Element, Netlist};

/// Node voltages (index 0 is ground) and source branch currents.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeVoltages {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub source_currents: Vec<f64>,
}

impl NodeVoltages {
    pub fn voltage(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn by_name(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }
}

/// Solve the circuit at time `t` with memristor `m` replaced by a resistor of
/// `memristor_ohms[m]`.
pub fn nodal_solve(netlist: &Netlist, memristor_ohms: &[f64], t: f64) -> Result<NodeVoltages> {
    let floating = netlist.floating_nodes();
    if !floating.is_empty() {
        return Err(Error::topology("floating subcircuit", floating));
    }
    let n_nodes = netlist.nodes.len() - 1;
    let n_src = netlist
        .elements
        .iter()
        .filter(|e| matches!(e, Element::Source { .. }))
        .count();
    let dim = n_nodes + n_src;
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);

    let stamp_g = |a: &mut DMatrix<f64>, p: usize, q: usize, g: f64| {
        if p > 0 {
            a[(p - 1, p - 1)] += g;
        }
        if q > 0 {
            a[(q - 1, q - 1)] += g;
        }
        if p > 0 && q > 0 {
            a[(p - 1, q - 1)] -= g;
            a[(q - 1, p - 1)] -= g;
        }
    };

    let mut mem = 0;
    let mut src = 0;
    for e in &netlist.elements {
        match *e {
            Element::Resistor {
                a: p, b: q, ohms, ..
            } => stamp_g(&mut a, p, q, 1.0 / ohms),
            Element::Memristor { pos, neg, .. } => {
                let r = *memristor_ohms
                    .get(mem)
                    .ok_or_else(|| Error::domain("fewer memristor resistances than memristors"))?;
                if !(r.is_finite() && r > 0.0) {
                    return Err(Error::domain(format!("memristor resistance {r} invalid")));
                }
                stamp_g(&mut a, pos, neg, 1.0 / r);
                mem += 1;
            }
            Element::Source {
                pos, neg, drive, ..
            } => {
                let k = n_nodes + src;
                if pos > 0 {
                    a[(pos - 1, k)] += 1.0;
                    a[(k, pos - 1)] += 1.0;
                }
                if neg > 0 {
                    a[(neg - 1, k)] -= 1.0;
                    a[(k, neg - 1)] -= 1.0;
                }
                rhs[k] = drive.voltage(t);
                src += 1;
            }
        }
    }

    let x = a.lu().solve(&rhs).ok_or_else(|| {
        Error::topology(
            "singular nodal system (voltage-source loop or floating node)",
            netlist.nodes[1..].to_vec(),
        )
    })?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::topology("nodal system is ill-conditioned", vec![]));
    }
    let mut values = Vec::with_capacity(n_nodes + 1);
    values.push(0.0);
    values.extend(x.iter().take(n_nodes));
    Ok(NodeVoltages {
        names: netlist.nodes.clone(),
        values,
        source_currents: x.iter().skip(n_nodes).copied().collect(),
    })
}
