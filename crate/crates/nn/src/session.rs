use crate::error::{NnError, Result};
use crate::param::{ParamId, ParamStore};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Whether batch norm uses batch statistics (and updates running ones).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

enum StoreRef<'s> {
    Mut(&'s mut ParamStore),
    Shared(&'s ParamStore),
}

/// One forward pass: a tape plus the parameter store it reads from.
///
/// Parameters are materialized on the tape lazily and at most once, so a
/// layer applied several times shares a single leaf.
pub struct Session<'s> {
    pub tape: Tape,
    store: StoreRef<'s>,
    leaves: Vec<Option<Var>>,
    mode: Mode,
}

impl<'s> Session<'s> {
    /// Train mode with gradients recorded.
    pub fn train(store: &'s mut ParamStore) -> Self {
        Self::new(store, Mode::Train, true)
    }

    /// Eval mode, no gradients, read-only parameters.
    pub fn eval(store: &'s ParamStore) -> Self {
        let n = store.len();
        Self {
            tape: Tape::inference(),
            store: StoreRef::Shared(store),
            leaves: vec![None; n],
            mode: Mode::Eval,
        }
    }

    pub fn new(store: &'s mut ParamStore, mode: Mode, grad: bool) -> Self {
        let n = store.len();
        Self {
            tape: if grad { Tape::new() } else { Tape::inference() },
            store: StoreRef::Mut(store),
            leaves: vec![None; n],
            mode,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn store(&self) -> &ParamStore {
        match &self.store {
            StoreRef::Mut(s) => s,
            StoreRef::Shared(s) => s,
        }
    }

    pub fn store_mut(&mut self) -> Result<&mut ParamStore> {
        match &mut self.store {
            StoreRef::Mut(s) => Ok(s),
            StoreRef::Shared(_) => Err(NnError::ReadOnlyStore),
        }
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.leaves[id.index()] {
            return v;
        }
        let p = self.store().get(id);
        let (value, trainable) = (p.value.clone(), p.trainable);
        let v = self.tape.leaf(value, trainable);
        self.leaves[id.index()] = Some(v);
        v
    }

    pub fn input(&mut self, value: Tensor) -> Var {
        self.tape.constant(value)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        self.tape.value(v)
    }

    /// Backpropagates `loss` and adds the resulting parameter gradients
    /// into the store's gradient buffers.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        self.tape.backward(loss)?;
        let leaves = self.leaves.clone();
        let StoreRef::Mut(store) = &mut self.store else {
            return Err(NnError::ReadOnlyStore);
        };
        for (i, leaf) in leaves.into_iter().enumerate() {
            let Some(v) = leaf else { continue };
            if let Some(g) = self.tape.grad(v) {
                let p = store.get_mut(crate::param::ParamId(i));
                p.grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
            }
        }
        Ok(())
    }
}
