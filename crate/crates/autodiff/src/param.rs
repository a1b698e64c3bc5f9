use crate::error::{AutodiffError, Result};
use crate::real::Real;
use crate::tensor::Tensor;

/// Index of a parameter inside its [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A named tensor plus its optimizer moments.
///
/// Non-trainable entries (running normalization statistics) are saved with
/// the model but never updated by the optimizer.
#[derive(Debug, Clone)]
pub struct Parameter<E: Real = f32> {
    pub name: String,
    pub tensor: Tensor<E>,
    pub trainable: bool,
    pub(crate) m: Vec<E>,
    pub(crate) v: Vec<E>,
}

impl<E: Real> Parameter<E> {
    pub fn first_moment(&self) -> &[E] {
        &self.m
    }

    pub fn second_moment(&self) -> &[E] {
        &self.v
    }
}

/// Ordered collection of named parameters.
#[derive(Debug, Clone, Default)]
pub struct ParamStore<E: Real = f32> {
    params: Vec<Parameter<E>>,
}

impl<E: Real> ParamStore<E> {
    pub fn new() -> Self {
        ParamStore { params: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, tensor: Tensor<E>, trainable: bool) -> ParamId {
        let n = tensor.len();
        self.params.push(Parameter {
            name: name.into(),
            tensor,
            trainable,
            m: vec![E::zero(); n],
            v: vec![E::zero(); n],
        });
        ParamId(self.params.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Parameter<E> {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter<E> {
        &mut self.params[id.0]
    }

    /// Two distinct parameters borrowed mutably at once.
    pub fn pair_mut(&mut self, a: ParamId, b: ParamId) -> (&mut Parameter<E>, &mut Parameter<E>) {
        assert_ne!(a, b, "pair_mut needs two distinct parameters");
        if a.0 < b.0 {
            let (lo, hi) = self.params.split_at_mut(b.0);
            (&mut lo[a.0], &mut hi[0])
        } else {
            let (lo, hi) = self.params.split_at_mut(a.0);
            (&mut hi[0], &mut lo[b.0])
        }
    }

    pub fn by_name(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter<E>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter<E>> {
        self.params.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn num_trainable_elements(&self) -> usize {
        self.params
            .iter()
            .filter(|p| p.trainable)
            .map(|p| p.tensor.len())
            .sum()
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.tensor.clear_grad();
        }
    }

    /// Same names and values in another precision, moments reset.
    pub fn cast<F: Real>(&self) -> ParamStore<F> {
        let mut out = ParamStore::new();
        for p in &self.params {
            out.add(p.name.clone(), p.tensor.cast(), p.trainable);
        }
        out
    }

    /// Overwrites values from `(name, tensor)` records.
    ///
    /// Every stored parameter must appear exactly once with a matching shape.
    pub fn load(&mut self, records: Vec<(String, Tensor<E>)>) -> Result<()> {
        if records.len() != self.params.len() {
            return Err(AutodiffError::Checkpoint(format!(
                "expected {} parameters, found {}",
                self.params.len(),
                records.len()
            )));
        }
        let mut seen = vec![false; self.params.len()];
        let mut staged = Vec::with_capacity(records.len());
        for (name, tensor) in records {
            let id = self
                .by_name(&name)
                .ok_or_else(|| AutodiffError::UnknownParameter(name.clone()))?;
            if seen[id.0] {
                return Err(AutodiffError::Checkpoint(format!(
                    "parameter `{name}` appears twice"
                )));
            }
            seen[id.0] = true;
            let expected = self.params[id.0].tensor.shape();
            if expected != tensor.shape() {
                return Err(AutodiffError::Checkpoint(format!(
                    "parameter `{name}` has shape {:?}, expected {expected:?}",
                    tensor.shape()
                )));
            }
            staged.push((id, tensor));
        }
        for (id, tensor) in staged {
            let p = &mut self.params[id.0];
            p.tensor = tensor;
            p.m.iter_mut().for_each(|x| *x = E::zero());
            p.v.iter_mut().for_each(|x| *x = E::zero());
        }
        Ok(())
    }
}
