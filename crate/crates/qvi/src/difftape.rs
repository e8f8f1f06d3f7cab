//! Minimal reverse-mode automatic differentiation on a flat tape.
//!
//! The tape holds a topologically ordered expression graph over a fixed set
//! of input variables. A graph is built once per evaluation point, evaluated
//! with [`Tape::forward`], and differentiated with [`Tape::backward`], which
//! returns the gradient with respect to every registered input.
//!
//! The operation set is deliberately closed: it is exactly what the shipped
//! log-joint models and the Gaussian variational family require.

use thiserror::Error;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(u32);

impl NodeId {
    fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    /// Input variable; payload is the slot in the input vector.
    Var(u32),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    Neg(NodeId),
    Exp(NodeId),
    Log(NodeId),
    Tanh(NodeId),
    /// max(x, 0) with derivative 0 at x = 0.
    Relu(NodeId),
    Square(NodeId),
}

impl Op {
    fn name(self) -> &'static str {
        match self {
            Op::Const(_) => "const",
            Op::Var(_) => "var",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Div(..) => "div",
            Op::Neg(_) => "neg",
            Op::Exp(_) => "exp",
            Op::Log(_) => "log",
            Op::Tanh(_) => "tanh",
            Op::Relu(_) => "relu",
            Op::Square(_) => "square",
        }
    }
}

/// Errors raised during tape evaluation.
#[derive(Debug, Error)]
pub enum TapeError {
    #[error("input vector has length {got}, tape registers {expected} variables")]
    InputLength { expected: usize, got: usize },
    #[error("node {node} ({op}): {msg}")]
    Domain {
        node: usize,
        op: &'static str,
        msg: String,
    },
    #[error("node {node} ({op}) produced a non-finite value")]
    NonFinite { node: usize, op: &'static str },
    #[error("backward requires a completed forward pass")]
    BackwardBeforeForward,
}

/// Expression graph with value and adjoint storage.
///
/// Nodes are appended in construction order, which is automatically a valid
/// topological order because every operand must already exist.
pub struct Tape {
    ops: Vec<Op>,
    values: Vec<f64>,
    adjoints: Vec<f64>,
    var_nodes: Vec<NodeId>,
    root: Option<NodeId>,
    evaluated: bool,
}

impl Tape {
    /// Creates a tape with `n_inputs` registered variables (slots `0..n_inputs`).
    pub fn new(n_inputs: usize) -> Self {
        let mut tape = Tape {
            ops: Vec::with_capacity(n_inputs + 16),
            values: Vec::new(),
            adjoints: Vec::new(),
            var_nodes: Vec::with_capacity(n_inputs),
            root: None,
            evaluated: false,
        };
        for slot in 0..n_inputs {
            let id = tape.push(Op::Var(slot as u32));
            tape.var_nodes.push(id);
        }
        tape
    }

    fn push(&mut self, op: Op) -> NodeId {
        let id = NodeId(self.ops.len() as u32);
        self.ops.push(op);
        id
    }

    /// Number of registered input variables.
    pub fn input_count(&self) -> usize {
        self.var_nodes.len()
    }

    /// Node ids of the registered variables, indexed by slot.
    pub fn inputs(&self) -> &[NodeId] {
        &self.var_nodes
    }

    /// Variable node for input slot `slot`.
    pub fn input(&self, slot: usize) -> NodeId {
        self.var_nodes[slot]
    }

    pub fn constant(&mut self, value: f64) -> NodeId {
        self.push(Op::Const(value))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Mul(a, b))
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Div(a, b))
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Neg(a))
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Exp(a))
    }

    pub fn log(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Log(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Tanh(a))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Relu(a))
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Square(a))
    }

    /// a + c for a scalar constant.
    pub fn add_const(&mut self, a: NodeId, c: f64) -> NodeId {
        let k = self.constant(c);
        self.add(a, k)
    }

    /// a * c for a scalar constant.
    pub fn mul_const(&mut self, a: NodeId, c: f64) -> NodeId {
        let k = self.constant(c);
        self.mul(a, k)
    }

    /// Left-to-right sum of `terms`; the empty sum is the constant 0.
    pub fn sum(&mut self, terms: &[NodeId]) -> NodeId {
        match terms.split_first() {
            None => self.constant(0.0),
            Some((&first, rest)) => {
                let mut acc = first;
                for &t in rest {
                    acc = self.add(acc, t);
                }
                acc
            }
        }
    }

    /// Evaluates every node in order and returns the value at `root`.
    ///
    /// `inputs[slot]` binds the variable registered for that slot. Every node
    /// value must be finite; `log` of a non-positive value and division by
    /// zero are reported as domain errors naming the offending node.
    pub fn forward(&mut self, root: NodeId, inputs: &[f64]) -> Result<f64, TapeError> {
        if inputs.len() != self.var_nodes.len() {
            return Err(TapeError::InputLength {
                expected: self.var_nodes.len(),
                got: inputs.len(),
            });
        }
        self.evaluated = false;
        self.values.clear();
        self.values.reserve(self.ops.len());
        for (idx, op) in self.ops.iter().enumerate() {
            let v = match *op {
                Op::Const(c) => c,
                Op::Var(slot) => inputs[slot as usize],
                Op::Add(a, b) => self.values[a.index()] + self.values[b.index()],
                Op::Sub(a, b) => self.values[a.index()] - self.values[b.index()],
                Op::Mul(a, b) => self.values[a.index()] * self.values[b.index()],
                Op::Div(a, b) => {
                    let d = self.values[b.index()];
                    if d == 0.0 {
                        return Err(TapeError::Domain {
                            node: idx,
                            op: "div",
                            msg: "division by zero".to_string(),
                        });
                    }
                    self.values[a.index()] / d
                }
                Op::Neg(a) => -self.values[a.index()],
                Op::Exp(a) => self.values[a.index()].exp(),
                Op::Log(a) => {
                    let x = self.values[a.index()];
                    if x <= 0.0 {
                        return Err(TapeError::Domain {
                            node: idx,
                            op: "log",
                            msg: format!("log of non-positive value {x}"),
                        });
                    }
                    x.ln()
                }
                Op::Tanh(a) => self.values[a.index()].tanh(),
                Op::Relu(a) => self.values[a.index()].max(0.0),
                Op::Square(a) => {
                    let x = self.values[a.index()];
                    x * x
                }
            };
            if !v.is_finite() {
                return Err(TapeError::NonFinite {
                    node: idx,
                    op: op.name(),
                });
            }
            self.values.push(v);
        }
        self.root = Some(root);
        self.evaluated = true;
        Ok(self.values[root.index()])
    }

    /// Accumulates adjoints in reverse order and returns the gradient of the
    /// forward root with respect to every registered input, by slot.
    ///
    /// Consumes the forward pass: calling `backward` twice without an
    /// intervening `forward` is an error.
    pub fn backward(&mut self) -> Result<Vec<f64>, TapeError> {
        let root = match (self.evaluated, self.root) {
            (true, Some(root)) => root,
            _ => return Err(TapeError::BackwardBeforeForward),
        };
        self.adjoints.clear();
        self.adjoints.resize(self.ops.len(), 0.0);
        self.adjoints[root.index()] = 1.0;
        for idx in (0..self.ops.len()).rev() {
            let w = self.adjoints[idx];
            if w == 0.0 {
                continue;
            }
            match self.ops[idx] {
                Op::Const(_) | Op::Var(_) => {}
                Op::Add(a, b) => {
                    self.adjoints[a.index()] += w;
                    self.adjoints[b.index()] += w;
                }
                Op::Sub(a, b) => {
                    self.adjoints[a.index()] += w;
                    self.adjoints[b.index()] -= w;
                }
                Op::Mul(a, b) => {
                    self.adjoints[a.index()] += w * self.values[b.index()];
                    self.adjoints[b.index()] += w * self.values[a.index()];
                }
                Op::Div(a, b) => {
                    let d = self.values[b.index()];
                    self.adjoints[a.index()] += w / d;
                    self.adjoints[b.index()] -= w * self.values[idx] / d;
                }
                Op::Neg(a) => self.adjoints[a.index()] -= w,
                Op::Exp(a) => self.adjoints[a.index()] += w * self.values[idx],
                Op::Log(a) => self.adjoints[a.index()] += w / self.values[a.index()],
                Op::Tanh(a) => {
                    let t = self.values[idx];
                    self.adjoints[a.index()] += w * (1.0 - t * t);
                }
                Op::Relu(a) => {
                    if self.values[a.index()] > 0.0 {
                        self.adjoints[a.index()] += w;
                    }
                }
                Op::Square(a) => {
                    self.adjoints[a.index()] += w * 2.0 * self.values[a.index()];
                }
            }
        }
        self.evaluated = false;
        Ok(self
            .var_nodes
            .iter()
            .map(|id| self.adjoints[id.index()])
            .collect())
    }

    /// Value computed for `node` during the last forward pass.
    pub fn value(&self, node: NodeId) -> f64 {
        self.values[node.index()]
    }

    /// Number of nodes currently on the tape.
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}
