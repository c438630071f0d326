//! Sparse generator of the network master equation.
//!
//! States are indexed by the bitmask of [`NetworkState`]: device `m` is bit
//! `m`, 1 = on. Rows are source states, so the occupation row vector evolves
//! as `dp/dt = p Q` and every row of `Q` sums to zero.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::network::{Network, NetworkState};

/// Hard cap on the device count for full-state master-equation work.
pub const MAX_FULL_DEVICES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    dim: usize,
    /// Total departure rate of each state (the negated diagonal).
    exit: Vec<f64>,
    /// Incoming transitions in CSR form, keyed by target state.
    in_ptr: Vec<usize>,
    in_from: Vec<usize>,
    in_rate: Vec<f64>,
}

impl Generator {
    /// Assemble from a list of off-diagonal transitions. Zero rates are dropped.
    pub fn from_transitions(dim: usize, transitions: &[Transition]) -> Result<Self> {
        let mut exit = vec![0.0; dim];
        let mut counts = vec![0usize; dim + 1];
        for tr in transitions {
            if tr.from >= dim || tr.to >= dim || tr.from == tr.to {
                return Err(Error::domain(format!("invalid transition {tr:?}")));
            }
            if !(tr.rate >= 0.0 && tr.rate.is_finite()) {
                return Err(Error::domain(format!("invalid rate {}", tr.rate)));
            }
            if tr.rate > 0.0 {
                exit[tr.from] += tr.rate;
                counts[tr.to + 1] += 1;
            }
        }
        for i in 0..dim {
            counts[i + 1] += counts[i];
        }
        let in_ptr = counts.clone();
        let mut fill = counts;
        let nnz = in_ptr[dim];
        let mut in_from = vec![0; nnz];
        let mut in_rate = vec![0.0; nnz];
        for tr in transitions.iter().filter(|t| t.rate > 0.0) {
            let k = fill[tr.to];
            in_from[k] = tr.from;
            in_rate[k] = tr.rate;
            fill[tr.to] += 1;
        }
        Ok(Generator {
            dim,
            exit,
            in_ptr,
            in_from,
            in_rate,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nonzero_off_diagonal(&self) -> usize {
        self.in_from.len()
    }

    /// Iterator over `(from, rate)` transitions entering `to`.
    pub fn incoming(&self, to: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.in_ptr[to]..self.in_ptr[to + 1];
        self.in_from[r.clone()]
            .iter()
            .copied()
            .zip(self.in_rate[r].iter().copied())
    }

    pub fn exit_rate(&self, state: usize) -> f64 {
        self.exit[state]
    }

    pub fn max_exit_rate(&self) -> f64 {
        self.exit.iter().copied().fold(0.0, f64::max)
    }

    /// Off-diagonal entry `Q[from][to]`, or the diagonal when `from == to`.
    pub fn entry(&self, from: usize, to: usize) -> f64 {
        if from == to {
            return -self.exit[from];
        }
        self.incoming(to)
            .filter(|&(f, _)| f == from)
            .map(|(_, r)| r)
            .sum()
    }

    /// Row sums of `Q`; zero up to rounding for a conservative generator.
    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums: Vec<f64> = self.exit.iter().map(|e| -e).collect();
        for to in 0..self.dim {
            for (from, r) in self.incoming(to) {
                sums[from] += r;
            }
        }
        sums
    }

    /// `out = p Q`.
    pub fn apply(&self, p: &[f64], out: &mut [f64]) {
        for to in 0..self.dim {
            let gain: f64 = self.incoming(to).map(|(from, r)| r * p[from]).sum();
            out[to] = gain - self.exit[to] * p[to];
        }
    }

    /// Rate of probability flow into `target` for occupation `p`.
    pub fn inflow(&self, p: &[f64], target: usize) -> f64 {
        self.incoming(target).map(|(from, r)| r * p[from]).sum()
    }

    /// States ordered so that every transition goes forward, if one exists.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); self.dim];
        let mut indeg = vec![0usize; self.dim];
        for to in 0..self.dim {
            for (from, _) in self.incoming(to) {
                outgoing[from].push(to);
                indeg[to] += 1;
            }
        }
        let mut order = Vec::with_capacity(self.dim);
        let mut ready: Vec<usize> = (0..self.dim).filter(|&i| indeg[i] == 0).collect();
        while let Some(s) = ready.pop() {
            order.push(s);
            for &t in &outgoing[s] {
                indeg[t] -= 1;
                if indeg[t] == 0 {
                    ready.push(t);
                }
            }
        }
        (order.len() == self.dim).then_some(order)
    }

    /// Dense copy, `dense[from][to]`.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut q = vec![vec![0.0; self.dim]; self.dim];
        for to in 0..self.dim {
            q[to][to] = -self.exit[to];
            for (from, r) in self.incoming(to) {
                q[from][to] += r;
            }
        }
        q
    }
}

/// Full `2^N`-state generator of `network` at time `t`, including both
/// off-to-on and on-to-off edges.
pub fn build_generator(network: &Network, t: f64) -> Result<Generator> {
    let n = network.device_count();
    if n > MAX_FULL_DEVICES {
        return Err(Error::Capacity(format!(
            "{n} devices exceed the full-state cap of {MAX_FULL_DEVICES} (2^{n} states)"
        )));
    }
    let dim = 1usize << n;
    let per_state: Vec<Vec<Transition>> = (0..dim)
        .into_par_iter()
        .map(|bits| {
            let state = NetworkState::new(bits as u64, n);
            let rates = network.rates(&state, t)?;
            Ok(rates
                .into_iter()
                .enumerate()
                .filter(|&(_, r)| r > 0.0)
                .map(|(m, rate)| Transition {
                    from: bits,
                    to: bits ^ (1 << m),
                    rate,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let transitions: Vec<Transition> = per_state.into_iter().flatten().collect();
    Generator::from_transitions(dim, &transitions)
}
