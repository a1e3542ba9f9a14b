use crate::Scalar;

/// Handle to a tensor stored on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TensorId(pub(crate) usize);

pub(crate) type BackFn<S> = Box<dyn Fn(&Graph<S>, &mut GradStore<S>, &[S]) + Send>;

pub(crate) struct Node<S: Scalar> {
    pub data: Vec<S>,
    pub shape: Vec<usize>,
    pub requires_grad: bool,
    pub backward: Option<BackFn<S>>,
}

/// Gradients keyed by node id, filled during the backward pass.
pub struct GradStore<S: Scalar> {
    slots: Vec<Option<Vec<S>>>,
}

impl<S: Scalar> GradStore<S> {
    fn new(n: usize) -> Self {
        let mut slots = Vec::with_capacity(n);
        slots.resize_with(n, || None);
        Self { slots }
    }

    pub fn get(&self, id: TensorId) -> Option<&[S]> {
        self.slots[id.0].as_deref()
    }

    pub fn take(&mut self, id: TensorId) -> Option<Vec<S>> {
        self.slots[id.0].take()
    }

    /// Mutable gradient buffer for `id`, zero-initialized on first access.
    pub fn entry(&mut self, id: TensorId, len: usize) -> &mut [S] {
        let slot = &mut self.slots[id.0];
        if slot.is_none() {
            *slot = Some(vec![S::zero(); len]);
        }
        slot.as_deref_mut().unwrap()
    }

    pub fn accumulate(&mut self, id: TensorId, contribution: &[S]) {
        let buf = self.entry(id, contribution.len());
        for (g, c) in buf.iter_mut().zip(contribution) {
            *g += *c;
        }
    }
}

/// A flat Wengert tape. Ops append nodes; `backward` replays them in reverse.
///
/// Graphs are cheap and meant to be short-lived: one per training sample or
/// denoising step, dropped afterwards.
pub struct Graph<S: Scalar> {
    pub(crate) nodes: Vec<Node<S>>,
    grad_enabled: bool,
}

impl<S: Scalar> Default for Graph<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Graph<S> {
    pub fn new() -> Self {
        Self { nodes: Vec::new(), grad_enabled: true }
    }

    /// A graph that records no backward closures; forward-only.
    pub fn inference() -> Self {
        Self { nodes: Vec::new(), grad_enabled: false }
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

    pub fn leaf(&mut self, data: Vec<S>, shape: &[usize], requires_grad: bool) -> TensorId {
        let numel: usize = shape.iter().product();
        assert_eq!(data.len(), numel, "leaf data/shape mismatch: {} vs {:?}", data.len(), shape);
        self.push(data, shape.to_vec(), requires_grad && self.grad_enabled, None)
    }

    pub fn constant(&mut self, data: Vec<S>, shape: &[usize]) -> TensorId {
        self.leaf(data, shape, false)
    }

    pub fn scalar(&mut self, v: S) -> TensorId {
        self.constant(vec![v], &[1])
    }

    pub(crate) fn push(
        &mut self,
        data: Vec<S>,
        shape: Vec<usize>,
        requires_grad: bool,
        backward: Option<BackFn<S>>,
    ) -> TensorId {
        let rg = requires_grad && self.grad_enabled;
        self.nodes.push(Node {
            data,
            shape,
            requires_grad: rg,
            backward: if rg { backward } else { None },
        });
        TensorId(self.nodes.len() - 1)
    }

    pub fn data(&self, id: TensorId) -> &[S] {
        &self.nodes[id.0].data
    }

    pub fn shape(&self, id: TensorId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    pub fn numel(&self, id: TensorId) -> usize {
        self.nodes[id.0].data.len()
    }

    pub fn requires_grad(&self, id: TensorId) -> bool {
        self.nodes[id.0].requires_grad
    }

    pub fn as_f64_vec(&self, id: TensorId) -> Vec<f64> {
        self.data(id).iter().map(|v| v.as_f64()).collect()
    }

    /// Reverse pass from `loss` (must be a single-element tensor).
    ///
    /// Returns a store holding gradients for every node that required them.
    /// Accumulation order is reverse creation order, so results are
    /// independent of thread scheduling inside op kernels.
    pub fn backward(&self, loss: TensorId) -> GradStore<S> {
        assert_eq!(self.numel(loss), 1, "backward root must be scalar");
        assert!(self.requires_grad(loss), "backward root does not require grad");
        let mut grads = GradStore::new(self.nodes.len());
        grads.entry(loss, 1)[0] = S::one();
        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            if let Some(back) = &node.backward {
                if let Some(dy) = grads.take(TensorId(idx)) {
                    back(self, &mut grads, &dy);
                    // interior grads are not re-read; dropping dy caps memory
                }
            }
        }
        grads
    }
}
