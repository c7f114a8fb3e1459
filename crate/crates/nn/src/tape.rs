use crate::error::{NnError, Result};
use crate::tensor::Tensor;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

/// What a backward closure sees: the gradient flowing into the op's output,
/// the recorded output and input values, and which inputs need a gradient.
pub struct BackwardCtx<'a> {
    pub grad: &'a [f64],
    pub output: &'a Tensor,
    pub inputs: Vec<&'a Tensor>,
    pub needs: Vec<bool>,
}

/// Maps the output gradient to one optional gradient per input.
pub type BackwardFn = Box<dyn Fn(&BackwardCtx<'_>) -> Vec<Option<Vec<f64>>>>;

struct Node {
    value: Tensor,
    inputs: Vec<Var>,
    backward: Option<BackwardFn>,
    requires_grad: bool,
    grad: Option<Vec<f64>>,
}

/// Linear record of a forward computation.
///
/// Nodes are appended in evaluation order, so reverse index order is a valid
/// topological order for the backward sweep. Gradients of intermediate nodes
/// are released as soon as they have been propagated; leaves keep theirs.
pub struct Tape {
    nodes: Vec<Node>,
    grad_enabled: bool,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            grad_enabled: true,
        }
    }

    /// A tape that never records backward closures.
    pub fn inference() -> Self {
        Self {
            nodes: Vec::new(),
            grad_enabled: false,
        }
    }

    pub fn grad_enabled(&self) -> bool {
        self.grad_enabled
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            inputs: Vec::new(),
            backward: None,
            requires_grad: requires_grad && self.grad_enabled,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Accumulated gradient of a leaf after [`Tape::backward`].
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].grad.as_deref()
    }

    /// True when an op over `inputs` has to record a backward closure.
    pub fn tracks(&self, inputs: &[Var]) -> bool {
        self.grad_enabled && inputs.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Appends an op result. `backward` must be `Some` exactly when
    /// [`Tape::tracks`] holds for `inputs`.
    pub fn record(&mut self, value: Tensor, inputs: &[Var], backward: Option<BackwardFn>) -> Var {
        let requires_grad = backward.is_some();
        debug_assert_eq!(requires_grad, self.tracks(inputs));
        self.nodes.push(Node {
            value,
            inputs: if requires_grad { inputs.to_vec() } else { Vec::new() },
            backward,
            requires_grad,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    /// Reverse sweep from a scalar `loss`, accumulating into leaf gradients.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let shape = self.nodes[loss.0].value.shape().to_vec();
        if self.nodes[loss.0].value.numel() != 1 {
            return Err(NnError::NonScalarLoss(shape));
        }
        if !self.nodes[loss.0].requires_grad {
            return Ok(());
        }
        accumulate(&mut self.nodes[loss.0].grad, vec![1.0]);
        for i in (0..=loss.0).rev() {
            let Some(backward) = self.nodes[i].backward.take() else {
                continue;
            };
            let Some(grad) = self.nodes[i].grad.take() else {
                continue;
            };
            let grads = {
                let node = &self.nodes[i];
                let ctx = BackwardCtx {
                    grad: &grad,
                    output: &node.value,
                    inputs: node.inputs.iter().map(|v| &self.nodes[v.0].value).collect(),
                    needs: node.inputs.iter().map(|v| self.nodes[v.0].requires_grad).collect(),
                };
                backward(&ctx)
            };
            let inputs = std::mem::take(&mut self.nodes[i].inputs);
            debug_assert_eq!(inputs.len(), grads.len());
            for (input, g) in inputs.into_iter().zip(grads) {
                if let Some(g) = g {
                    let target = &mut self.nodes[input.0];
                    if target.requires_grad {
                        debug_assert_eq!(g.len(), target.value.numel());
                        accumulate(&mut target.grad, g);
                    }
                }
            }
        }
        Ok(())
    }
}

fn accumulate(slot: &mut Option<Vec<f64>>, g: Vec<f64>) {
    match slot {
        Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
        None => *slot = Some(g),
    }
}
