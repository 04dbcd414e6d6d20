//! Compositional pattern producing networks mapping course position to height.
//!
//! A [`Cppn`] is a NEAT-style graph with one input (the normalized course
//! position), one constant bias node and one output. Topology only grows:
//! mutation can split connections and add new ones, never remove nodes.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sine,
    Sigmoid,
    Gaussian,
    Identity,
    Abs,
}

impl Activation {
    pub const ALL: [Activation; 5] = [
        Activation::Sine,
        Activation::Sigmoid,
        Activation::Gaussian,
        Activation::Identity,
        Activation::Abs,
    ];

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sine => x.sin(),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Gaussian => (-x * x).exp(),
            Activation::Identity => x,
            Activation::Abs => x.abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Input,
    Bias,
    Hidden,
    Output,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: u32,
    pub kind: NodeKind,
    pub activation: Activation,
    pub bias: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Connection {
    pub src: u32,
    pub dst: u32,
    pub weight: f64,
    pub enabled: bool,
}

/// Probabilities and noise scales for [`Cppn::mutate`].
#[derive(Clone, Debug, PartialEq)]
pub struct CppnMutation {
    pub add_node: f64,
    pub add_connection: f64,
    /// Per-parameter probability of gaussian perturbation.
    pub perturb: f64,
    pub perturb_sigma: f64,
    pub reassign_activation: f64,
    /// Standard deviation of the weight given to a fresh connection.
    pub new_weight_sigma: f64,
}

impl Default for CppnMutation {
    fn default() -> Self {
        Self {
            add_node: 0.05,
            add_connection: 0.1,
            perturb: 0.8,
            perturb_sigma: 0.3,
            reassign_activation: 0.1,
            new_weight_sigma: 1.0,
        }
    }
}

/// Feed-forward CPPN genome.
///
/// Node ids are dense: `nodes[i].id == i`. The serialized form is JSON with
/// the field names of [`Node`] and [`Connection`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cppn {
    pub nodes: Vec<Node>,
    pub connections: Vec<Connection>,
}

pub const INPUT_ID: u32 = 0;
pub const BIAS_ID: u32 = 1;
pub const OUTPUT_ID: u32 = 2;

impl Cppn {
    /// The flat base network: input, bias and an identity output fed by
    /// zero-weight connections. Evaluates to 0 everywhere.
    pub fn flat() -> Self {
        let node = |id, kind| Node {
            id,
            kind,
            activation: Activation::Identity,
            bias: 0.0,
        };
        let conn = |src| Connection {
            src,
            dst: OUTPUT_ID,
            weight: 0.0,
            enabled: true,
        };
        Self {
            nodes: vec![
                node(INPUT_ID, NodeKind::Input),
                node(BIAS_ID, NodeKind::Bias),
                node(OUTPUT_ID, NodeKind::Output),
            ],
            connections: vec![conn(INPUT_ID), conn(BIAS_ID)],
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Checks the structural invariants: dense ids, one input, one bias, one
    /// output, connections between known nodes and no cycles.
    pub fn validate(&self) -> Result<()> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id as usize != i {
                return Err(Error::InvalidCppn(format!("node {i} has id {}", n.id)));
            }
        }
        let count = |k| self.nodes.iter().filter(|n| n.kind == k).count();
        if count(NodeKind::Input) != 1 || count(NodeKind::Output) != 1 || count(NodeKind::Bias) != 1 {
            return Err(Error::InvalidCppn(
                "expected exactly one input, bias and output node".into(),
            ));
        }
        for c in &self.connections {
            let (Some(src), Some(dst)) = (self.node(c.src), self.node(c.dst)) else {
                return Err(Error::InvalidCppn(format!(
                    "connection {}->{} references a missing node",
                    c.src, c.dst
                )));
            };
            if matches!(dst.kind, NodeKind::Input | NodeKind::Bias) || src.kind == NodeKind::Output {
                return Err(Error::InvalidCppn(format!(
                    "connection {}->{} has an invalid direction",
                    c.src, c.dst
                )));
            }
        }
        if self.topological_order().is_none() {
            return Err(Error::InvalidCppn("graph contains a cycle".into()));
        }
        Ok(())
    }

    fn node(&self, id: u32) -> Option<&Node> {
        self.nodes.get(id as usize)
    }

    /// Kahn's algorithm over all connections (disabled ones included, so that
    /// re-enabling can never introduce a cycle). `None` when cyclic.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for c in &self.connections {
            indegree[c.dst as usize] += 1;
            out[c.src as usize].push(c.dst as usize);
        }
        let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).rev().collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop() {
            order.push(i);
            for &j in out[i].iter().rev() {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.push(j);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Compiles the graph into an evaluation plan. Panics on a cyclic graph,
    /// which mutation can never produce.
    pub fn compile(&self) -> CompiledCppn {
        let order = self
            .topological_order()
            .expect("cppn graph must be acyclic");
        let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.nodes.len()];
        for c in self.connections.iter().filter(|c| c.enabled) {
            incoming[c.dst as usize].push((c.src as usize, c.weight));
        }
        let steps = order
            .into_iter()
            .map(|i| {
                let node = &self.nodes[i];
                let source = match node.kind {
                    NodeKind::Input => Source::Input,
                    NodeKind::Bias => Source::Bias,
                    NodeKind::Hidden | NodeKind::Output => Source::Sum {
                        bias: node.bias,
                        activation: node.activation,
                        inputs: std::mem::take(&mut incoming[i]),
                    },
                };
                (i, source)
            })
            .collect();
        CompiledCppn {
            steps,
            output: OUTPUT_ID as usize,
            len: self.nodes.len(),
        }
    }

    /// Evaluates the network at course position `x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.compile().eval(x)
    }

    /// Returns a mutated copy; `self` is left untouched. At least one
    /// operator is applied.
    pub fn mutate<R: Rng + ?Sized>(&self, rng: &mut R, params: &CppnMutation) -> Cppn {
        let mut child = self.clone();
        let mut applied = false;
        if rng.random_bool(params.add_node) {
            applied |= child.add_node(rng);
        }
        if rng.random_bool(params.add_connection) {
            applied |= child.add_connection(rng, params.new_weight_sigma);
        }
        applied |= child.perturb(rng, params.perturb, params.perturb_sigma);
        if rng.random_bool(params.reassign_activation) {
            applied |= child.reassign_activation(rng);
        }
        while !applied {
            applied = match rng.random_range(0..4) {
                0 => child.add_node(rng),
                1 => child.add_connection(rng, params.new_weight_sigma),
                2 => child.perturb(rng, 1.0, params.perturb_sigma),
                _ => child.reassign_activation(rng),
            };
        }
        child
    }

    /// Splits a random enabled connection `a -> b` into `a -> new -> b`.
    fn add_node<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let enabled: Vec<usize> = (0..self.connections.len())
            .filter(|&i| self.connections[i].enabled)
            .collect();
        let Some(&ci) = enabled.choose(rng) else {
            return false;
        };
        let activation = *Activation::ALL.choose(rng).unwrap();
        let id = self.nodes.len() as u32;
        let old = &mut self.connections[ci];
        old.enabled = false;
        let (src, dst, weight) = (old.src, old.dst, old.weight);
        self.nodes.push(Node {
            id,
            kind: NodeKind::Hidden,
            activation,
            bias: 0.0,
        });
        self.connections.push(Connection {
            src,
            dst: id,
            weight: 1.0,
            enabled: true,
        });
        self.connections.push(Connection {
            src: id,
            dst,
            weight,
            enabled: true,
        });
        true
    }

    fn reaches(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![from];
        while let Some(i) = stack.pop() {
            if i == to {
                return true;
            }
            if std::mem::replace(&mut seen[i], true) {
                continue;
            }
            stack.extend(
                self.connections
                    .iter()
                    .filter(|c| c.src as usize == i)
                    .map(|c| c.dst as usize),
            );
        }
        false
    }

    /// Adds a connection between two unconnected nodes without closing a cycle.
    fn add_connection<R: Rng + ?Sized>(&mut self, rng: &mut R, sigma: f64) -> bool {
        let mut candidates = Vec::new();
        for src in &self.nodes {
            if src.kind == NodeKind::Output {
                continue;
            }
            for dst in &self.nodes {
                if src.id == dst.id || matches!(dst.kind, NodeKind::Input | NodeKind::Bias) {
                    continue;
                }
                let exists = self
                    .connections
                    .iter()
                    .any(|c| c.src == src.id && c.dst == dst.id);
                if !exists && !self.reaches(dst.id as usize, src.id as usize) {
                    candidates.push((src.id, dst.id));
                }
            }
        }
        let Some(&(src, dst)) = candidates.choose(rng) else {
            return false;
        };
        let weight = Normal::new(0.0, sigma).unwrap().sample(rng);
        self.connections.push(Connection {
            src,
            dst,
            weight,
            enabled: true,
        });
        true
    }

    /// Gaussian noise on every connection weight and every hidden/output
    /// bias, each independently with probability `p`.
    fn perturb<R: Rng + ?Sized>(&mut self, rng: &mut R, p: f64, sigma: f64) -> bool {
        let noise = Normal::new(0.0, sigma).unwrap();
        let mut any = false;
        for c in &mut self.connections {
            if rng.random_bool(p) {
                c.weight += noise.sample(rng);
                any = true;
            }
        }
        for n in &mut self.nodes {
            if matches!(n.kind, NodeKind::Hidden | NodeKind::Output) && rng.random_bool(p) {
                n.bias += noise.sample(rng);
                any = true;
            }
        }
        any
    }

    fn reassign_activation<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let targets: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| matches!(self.nodes[i].kind, NodeKind::Hidden | NodeKind::Output))
            .collect();
        let Some(&i) = targets.choose(rng) else {
            return false;
        };
        self.nodes[i].activation = *Activation::ALL.choose(rng).unwrap();
        true
    }
}

enum Source {
    Input,
    Bias,
    Sum {
        bias: f64,
        activation: Activation,
        inputs: Vec<(usize, f64)>,
    },
}

/// A CPPN flattened into topological evaluation steps.
pub struct CompiledCppn {
    steps: Vec<(usize, Source)>,
    output: usize,
    len: usize,
}

impl CompiledCppn {
    pub fn eval(&self, x: f64) -> f64 {
        let mut values = vec![0.0; self.len];
        for (i, source) in &self.steps {
            values[*i] = match source {
                Source::Input => x,
                Source::Bias => 1.0,
                Source::Sum {
                    bias,
                    activation,
                    inputs,
                } => {
                    let sum = inputs.iter().fold(*bias, |acc, &(j, w)| acc + w * values[j]);
                    activation.apply(sum)
                }
            };
        }
        values[self.output]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use proptest::prelude::*;

    fn seeded(seed: u64) -> crate::rng::SimRng {
        stream(seed, Stream::Bootstrap, 0, 0)
    }

    #[test]
    fn flat_is_constant_with_three_nodes() {
        let c = Cppn::flat();
        assert_eq!(c.node_count(), 3);
        assert_eq!(c.eval(0.0), c.eval(1.0));
        assert_eq!(c.eval(0.37), 0.0);
        assert_eq!(Cppn::flat(), Cppn::flat());
        c.validate().unwrap();
    }

    #[test]
    fn zero_input_weight_yields_bias() {
        let mut c = Cppn::flat();
        c.connections[1].weight = 0.7;
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(c.eval(x), 0.7);
        }
    }

    #[test]
    fn hand_built_two_node_forward_pass() {
        // input -> hidden(sigmoid, bias 0.5) -> output(identity), bias -> output
        let mut c = Cppn::flat();
        c.connections.clear();
        c.nodes.push(Node {
            id: 3,
            kind: NodeKind::Hidden,
            activation: Activation::Sigmoid,
            bias: 0.5,
        });
        c.connections.extend([
            Connection { src: 0, dst: 3, weight: 2.0, enabled: true },
            Connection { src: 3, dst: 2, weight: -1.5, enabled: true },
            Connection { src: 1, dst: 2, weight: 0.25, enabled: true },
        ]);
        c.validate().unwrap();
        // x = 0.25: hidden = sigmoid(0.5 + 0.5) = sigmoid(1) = 0.7310585786300049
        // out = -1.5 * 0.7310585786300049 + 0.25 = -0.8465878679450073
        assert!((c.eval(0.25) - (-0.8465878679450073)).abs() < 1e-15);
    }

    #[test]
    fn mutation_is_deterministic_and_leaves_parent() {
        let parent = Cppn::flat();
        let a = parent.mutate(&mut seeded(3), &CppnMutation::default());
        let b = parent.mutate(&mut seeded(3), &CppnMutation::default());
        assert_eq!(a, b);
        assert_eq!(parent, Cppn::flat());
        assert_ne!(a, parent);
    }

    #[test]
    fn forced_operator_when_all_probabilities_zero() {
        let params = CppnMutation {
            add_node: 0.0,
            add_connection: 0.0,
            perturb: 0.0,
            reassign_activation: 0.0,
            ..CppnMutation::default()
        };
        for seed in 0..20 {
            let child = Cppn::flat().mutate(&mut seeded(seed), &params);
            assert_ne!(child, Cppn::flat());
        }
    }

    #[test]
    fn add_connection_never_closes_cycle() {
        let params = CppnMutation {
            add_node: 0.5,
            add_connection: 0.9,
            ..CppnMutation::default()
        };
        let mut rng = seeded(99);
        for _ in 0..200 {
            let mut c = Cppn::flat();
            for _ in 0..20 {
                c = c.mutate(&mut rng, &params);
                assert!(c.topological_order().is_some());
            }
            c.validate().unwrap();
        }
    }

    proptest! {
        #[test]
        fn node_count_never_decreases(seed in any::<u64>()) {
            let mut rng = seeded(seed);
            let mut c = Cppn::flat();
            let mut last = c.node_count();
            for _ in 0..100 {
                c = c.mutate(&mut rng, &CppnMutation::default());
                prop_assert!(c.node_count() >= last);
                prop_assert_eq!(c.node_count(), c.nodes.len());
                last = c.node_count();
            }
            prop_assert!(c.validate().is_ok());
        }
    }

    #[test]
    fn eval_is_pure() {
        let mut rng = seeded(5);
        let mut c = Cppn::flat();
        for _ in 0..30 {
            c = c.mutate(&mut rng, &CppnMutation::default());
        }
        let first = c.eval(0.4321);
        for _ in 0..1000 {
            assert_eq!(c.eval(0.4321).to_bits(), first.to_bits());
        }
    }

    #[test]
    fn json_roundtrip_is_lossless() {
        let mut rng = seeded(8);
        let mut c = Cppn::flat();
        for _ in 0..10 {
            c = c.mutate(&mut rng, &CppnMutation::default());
        }
        let text = serde_json::to_string(&c).unwrap();
        let back: Cppn = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}
