use super::{AutodiffError, Tensor};

/// Handle to a node recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    Softplus(Var),
    Softmax(Var),
    Concat(Vec<Var>),
    StackColumns(Vec<Var>),
    Dot(Var, Var),
    Conv1x3(Var, Var),
    L2NormSq(Var),
    Reshape(Var),
    Lookup(Var, usize),
    Sum(Vec<Var>),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Tensor,
}

/// Append-only record of a forward computation.
///
/// Nodes are stored in creation order, so every parent precedes its
/// children and [`Tape::backward`] can sweep the array in reverse.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Per-node gradients produced by [`Tape::backward`].
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of the root with respect to `var`, or `None` when `var`
    /// does not influence the root.
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads.get(var.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, var: Var) -> Option<Tensor> {
        self.grads.get_mut(var.0).and_then(|g| g.take())
    }
}

fn mismatch(op: &'static str, left: &Tensor, right: &Tensor) -> AutodiffError {
    AutodiffError::ShapeMismatch {
        op,
        left: left.shape().to_vec(),
        right: right.shape().to_vec(),
    }
}

fn map(t: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::new(
        t.shape().to_vec(),
        t.values().iter().map(|&x| f(x)).collect(),
    )
    .expect("shape preserved")
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    // log(1 + e^x) = max(x, 0) + log(1 + e^-|x|), never overflows
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, op: Op, value: Tensor) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    /// Records an input tensor. Gradients are reported for leaves like any
    /// other node.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(Op::Leaf, value)
    }

    /// `[m,n] x [n,p] -> [m,p]`, or `[m,n] x [n] -> [m]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape().len() != 2 || bv.shape().is_empty() || bv.shape().len() > 2 {
            return Err(mismatch("matmul", av, bv));
        }
        let (m, n) = (av.shape()[0], av.shape()[1]);
        if bv.shape()[0] != n {
            return Err(mismatch("matmul", av, bv));
        }
        let p = if bv.shape().len() == 2 {
            bv.shape()[1]
        } else {
            1
        };
        let mut out = vec![0.0; m * p];
        let (ad, bd) = (av.values(), bv.values());
        for i in 0..m {
            for j in 0..p {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += ad[i * n + l] * bd[l * p + j];
                }
                out[i * p + j] = acc;
            }
        }
        let shape = if bv.shape().len() == 2 {
            vec![m, p]
        } else {
            vec![m]
        };
        let value = Tensor::new(shape, out)?;
        Ok(self.push(Op::MatMul(a, b), value))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(mismatch("add", av, bv));
        }
        let values = av
            .values()
            .iter()
            .zip(bv.values())
            .map(|(x, y)| x + y)
            .collect();
        let value = Tensor::new(av.shape().to_vec(), values)?;
        Ok(self.push(Op::Add(a, b), value))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(mismatch("mul", av, bv));
        }
        let values = av
            .values()
            .iter()
            .zip(bv.values())
            .map(|(x, y)| x * y)
            .collect();
        let value = Tensor::new(av.shape().to_vec(), values)?;
        Ok(self.push(Op::Mul(a, b), value))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = map(self.value(a), |x| c * x);
        self.push(Op::Scale(a, c), value)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = map(self.value(a), f64::tanh);
        self.push(Op::Tanh(a), value)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = map(self.value(a), sigmoid);
        self.push(Op::Sigmoid(a), value)
    }

    /// Rectifier with subgradient 0 at the origin.
    pub fn relu(&mut self, a: Var) -> Var {
        let value = map(self.value(a), |x| if x > 0.0 { x } else { 0.0 });
        self.push(Op::Relu(a), value)
    }

    pub fn softplus(&mut self, a: Var) -> Var {
        let value = map(self.value(a), softplus);
        self.push(Op::Softplus(a), value)
    }

    pub fn softmax(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let av = self.value(a);
        if av.shape().len() != 1 {
            return Err(AutodiffError::NotOneDimensional {
                op: "softmax",
                shape: av.shape().to_vec(),
            });
        }
        if av.is_empty() {
            return Err(AutodiffError::EmptySoftmax);
        }
        let value = Tensor::vector(softmax_values(av.values()));
        Ok(self.push(Op::Softmax(a), value))
    }

    /// Concatenates 1-D tensors end to end.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, AutodiffError> {
        let mut out = Vec::new();
        for &p in parts {
            let pv = self.value(p);
            if pv.shape().len() != 1 {
                return Err(AutodiffError::NotOneDimensional {
                    op: "concat",
                    shape: pv.shape().to_vec(),
                });
            }
            out.extend_from_slice(pv.values());
        }
        let value = Tensor::vector(out);
        Ok(self.push(Op::Concat(parts.to_vec()), value))
    }

    /// Places equal-length 1-D tensors side by side as the columns of a
    /// `[k, n]` matrix.
    pub fn stack_columns(&mut self, cols: &[Var]) -> Result<Var, AutodiffError> {
        let first = cols
            .first()
            .ok_or(AutodiffError::EmptyInput("stack_columns"))?;
        let k = self.value(*first).len();
        let n = cols.len();
        let mut out = vec![0.0; k * n];
        for (j, &c) in cols.iter().enumerate() {
            let cv = self.value(c);
            if cv.shape() != [k] {
                return Err(mismatch("stack_columns", self.value(*first), cv));
            }
            for (i, &x) in cv.values().iter().enumerate() {
                out[i * n + j] = x;
            }
        }
        let value = Tensor::matrix(k, n, out)?;
        Ok(self.push(Op::StackColumns(cols.to_vec()), value))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape().len() != 1 || av.shape() != bv.shape() {
            return Err(mismatch("dot", av, bv));
        }
        let mut acc = 0.0;
        for (x, y) in av.values().iter().zip(bv.values()) {
            acc += x * y;
        }
        Ok(self.push(Op::Dot(a, b), Tensor::scalar(acc)))
    }

    /// Slides each `1x3` filter down the rows of a `[k, 3]` matrix.
    ///
    /// `filters` has shape `[tau, 3]`; the result is the `tau * k` feature
    /// vector laid out filter-major: entry `f * k + i` is
    /// `filters[f] . input[i]`.
    pub fn conv_1x3(&mut self, input: Var, filters: Var) -> Result<Var, AutodiffError> {
        let (tv, fv) = (self.value(input), self.value(filters));
        if tv.shape().len() != 2
            || tv.shape()[1] != 3
            || fv.shape().len() != 2
            || fv.shape()[1] != 3
        {
            return Err(mismatch("conv_1x3", tv, fv));
        }
        let value = Tensor::vector(conv_1x3_values(tv.values(), fv.values()));
        Ok(self.push(Op::Conv1x3(input, filters), value))
    }

    /// Sum of squares, as a scalar.
    pub fn l2_norm_sq(&mut self, a: Var) -> Var {
        let s = self.value(a).values().iter().map(|x| x * x).sum();
        self.push(Op::L2NormSq(a), Tensor::scalar(s))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var, AutodiffError> {
        let av = self.value(a);
        if shape.iter().product::<usize>() != av.len() {
            return Err(AutodiffError::ShapeMismatch {
                op: "reshape",
                left: av.shape().to_vec(),
                right: shape.to_vec(),
            });
        }
        let value = av.clone().reshaped(shape.to_vec());
        Ok(self.push(Op::Reshape(a), value))
    }

    /// Row `row` of a `[n, k]` table as a `[k]` vector.
    pub fn embedding_lookup(&mut self, table: Var, row: usize) -> Result<Var, AutodiffError> {
        let tv = self.value(table);
        if tv.shape().len() != 2 {
            return Err(AutodiffError::NotTwoDimensional {
                op: "embedding_lookup",
                shape: tv.shape().to_vec(),
            });
        }
        if row >= tv.shape()[0] {
            return Err(AutodiffError::RowOutOfRange {
                row,
                rows: tv.shape()[0],
            });
        }
        let value = Tensor::vector(tv.row(row).to_vec());
        Ok(self.push(Op::Lookup(table, row), value))
    }

    /// Sum of equally shaped tensors.
    pub fn sum(&mut self, parts: &[Var]) -> Result<Var, AutodiffError> {
        let first = parts.first().ok_or(AutodiffError::EmptyInput("sum"))?;
        let mut acc = self.value(*first).clone();
        for &p in &parts[1..] {
            let pv = self.value(p);
            if pv.shape() != acc.shape() {
                return Err(mismatch("sum", &acc, pv));
            }
            acc.add_assign(pv);
        }
        Ok(self.push(Op::Sum(parts.to_vec()), acc))
    }

    /// Activation pattern of every recorded relu: `Some(true)` for a
    /// strictly positive input, `Some(false)` for strictly negative, `None`
    /// for an input of exactly zero.
    pub fn relu_pattern(&self) -> Vec<Option<bool>> {
        let mut out = Vec::new();
        for node in &self.nodes {
            if let Op::Relu(a) = node.op {
                out.extend(self.value(a).values().iter().map(|&x| {
                    if x > 0.0 {
                        Some(true)
                    } else if x < 0.0 {
                        Some(false)
                    } else {
                        None
                    }
                }));
            }
        }
        out
    }

    /// Reverse sweep from a one-element `root`; gradients from fan-out are
    /// summed in tape order.
    pub fn backward(&self, root: Var) -> Result<Gradients, AutodiffError> {
        let rv = self.value(root);
        if !rv.is_scalar() {
            return Err(AutodiffError::NotScalar(rv.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; root.0 + 1];
        grads[root.0] = Some(Tensor::new(rv.shape().to_vec(), vec![1.0])?);

        for idx in (0..=root.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let mut accumulate = |v: Var, contrib: Tensor| match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&contrib),
            slot @ None => *slot = Some(contrib),
        };
        let gv = g.values();
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (m, n) = (av.shape()[0], av.shape()[1]);
                let p = if bv.shape().len() == 2 {
                    bv.shape()[1]
                } else {
                    1
                };
                let (ad, bd) = (av.values(), bv.values());
                let mut da = vec![0.0; m * n];
                let mut db = vec![0.0; n * p];
                for i in 0..m {
                    for j in 0..p {
                        let gij = gv[i * p + j];
                        for l in 0..n {
                            da[i * n + l] += gij * bd[l * p + j];
                            db[l * p + j] += ad[i * n + l] * gij;
                        }
                    }
                }
                accumulate(*a, Tensor::new(av.shape().to_vec(), da).unwrap());
                accumulate(*b, Tensor::new(bv.shape().to_vec(), db).unwrap());
            }
            Op::Add(a, b) => {
                accumulate(*a, g.clone());
                accumulate(*b, g.clone());
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let da = gv.iter().zip(bv.values()).map(|(g, y)| g * y).collect();
                let db = gv.iter().zip(av.values()).map(|(g, x)| g * x).collect();
                accumulate(*a, Tensor::new(av.shape().to_vec(), da).unwrap());
                accumulate(*b, Tensor::new(bv.shape().to_vec(), db).unwrap());
            }
            Op::Scale(a, c) => accumulate(*a, map(g, |x| c * x)),
            Op::Tanh(a) => {
                let y = node.value.values();
                let d = gv.iter().zip(y).map(|(g, y)| g * (1.0 - y * y)).collect();
                accumulate(*a, Tensor::new(g.shape().to_vec(), d).unwrap());
            }
            Op::Sigmoid(a) => {
                let y = node.value.values();
                let d = gv.iter().zip(y).map(|(g, y)| g * y * (1.0 - y)).collect();
                accumulate(*a, Tensor::new(g.shape().to_vec(), d).unwrap());
            }
            Op::Relu(a) => {
                let x = self.value(*a).values();
                let d = gv
                    .iter()
                    .zip(x)
                    .map(|(g, &x)| if x > 0.0 { *g } else { 0.0 })
                    .collect();
                accumulate(*a, Tensor::new(g.shape().to_vec(), d).unwrap());
            }
            Op::Softplus(a) => {
                let x = self.value(*a).values();
                let d = gv.iter().zip(x).map(|(g, &x)| g * sigmoid(x)).collect();
                accumulate(*a, Tensor::new(g.shape().to_vec(), d).unwrap());
            }
            Op::Softmax(a) => {
                let y = node.value.values();
                let inner: f64 = gv.iter().zip(y).map(|(g, y)| g * y).sum();
                let d = gv.iter().zip(y).map(|(g, y)| y * (g - inner)).collect();
                accumulate(*a, Tensor::vector(d));
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for p in parts {
                    let n = self.value(*p).len();
                    accumulate(*p, Tensor::vector(gv[offset..offset + n].to_vec()));
                    offset += n;
                }
            }
            Op::StackColumns(cols) => {
                let n = cols.len();
                let k = node.value.shape()[0];
                for (j, c) in cols.iter().enumerate() {
                    let d = (0..k).map(|i| gv[i * n + j]).collect();
                    accumulate(*c, Tensor::vector(d));
                }
            }
            Op::Dot(a, b) => {
                let s = gv[0];
                let (av, bv) = (self.value(*a), self.value(*b));
                accumulate(*a, map(bv, |y| s * y));
                accumulate(*b, map(av, |x| s * x));
            }
            Op::Conv1x3(t, f) => {
                let (tv, fv) = (self.value(*t), self.value(*f));
                let k = tv.shape()[0];
                let tau = fv.shape()[0];
                let (td, fd) = (tv.values(), fv.values());
                let mut dt = vec![0.0; k * 3];
                let mut df = vec![0.0; tau * 3];
                for fi in 0..tau {
                    for i in 0..k {
                        let go = gv[fi * k + i];
                        for j in 0..3 {
                            dt[i * 3 + j] += go * fd[fi * 3 + j];
                            df[fi * 3 + j] += go * td[i * 3 + j];
                        }
                    }
                }
                accumulate(*t, Tensor::new(tv.shape().to_vec(), dt).unwrap());
                accumulate(*f, Tensor::new(fv.shape().to_vec(), df).unwrap());
            }
            Op::L2NormSq(a) => {
                let s = gv[0];
                accumulate(*a, map(self.value(*a), |x| 2.0 * s * x));
            }
            Op::Reshape(a) => {
                let shape = self.value(*a).shape().to_vec();
                accumulate(*a, g.clone().reshaped(shape));
            }
            Op::Lookup(table, row) => {
                let tv = self.value(*table);
                let mut d = Tensor::zeros(tv.shape());
                d.row_mut(*row).copy_from_slice(gv);
                accumulate(*table, d);
            }
            Op::Sum(parts) => {
                for p in parts {
                    accumulate(*p, g.clone());
                }
            }
        }
    }
}

/// Numerically stable softmax of a non-empty slice.
pub fn softmax_values(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Filter-major `1x3` convolution over the rows of a row-major `[k, 3]`
/// matrix. Shared with tape-free scoring so both paths agree bit for bit.
pub fn conv_1x3_values(input: &[f64], filters: &[f64]) -> Vec<f64> {
    let k = input.len() / 3;
    let tau = filters.len() / 3;
    let mut out = Vec::with_capacity(tau * k);
    for f in filters.chunks_exact(3).take(tau) {
        for row in input.chunks_exact(3) {
            out.push(f[0] * row[0] + f[1] * row[1] + f[2] * row[2]);
        }
    }
    out
}

pub fn softplus_value(x: f64) -> f64 {
    softplus(x)
}

pub fn sigmoid_value(x: f64) -> f64 {
    sigmoid(x)
}
