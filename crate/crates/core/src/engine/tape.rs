//! Reverse-mode differentiation over a linear tape of tensor operations.

use std::collections::{BTreeMap, HashSet};

use super::{EngineError, Tensor};

/// Probability floor applied inside cross-entropy.
pub const PROB_FLOOR: f64 = 1e-12;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
struct LstmCache {
    steps: usize,
    units: usize,
    /// Per step: i, f, g, o gate activations, each `units` wide.
    gates: Vec<f64>,
    /// Cell states c_0..c_steps (c_0 = 0).
    cells: Vec<f64>,
    /// Hidden states h_0..h_steps (h_0 = 0).
    hidden: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Embedding { table: Var, ids: Vec<usize> },
    Conv1d { input: Var, weight: Var, bias: Var },
    Relu(Var),
    MaxPool1d { input: Var, argmax: Vec<usize> },
    MeanPool { input: Var, length: usize },
    Lstm { input: Var, w_x: Var, w_h: Var, bias: Var, cache: Box<LstmCache> },
    Dense { input: Var, weight: Var, bias: Var },
    Stack(Vec<Var>),
    Softmax(Var),
    CrossEntropy { probs: Var, targets: Vec<usize> },
    Add(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Sum(Var),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Embedding { .. } => "embedding_lookup",
            Op::Conv1d { .. } => "conv1d",
            Op::Relu(_) => "relu",
            Op::MaxPool1d { .. } => "max_pool1d",
            Op::MeanPool { .. } => "mean_pool",
            Op::Lstm { .. } => "lstm_sequence",
            Op::Dense { .. } => "dense",
            Op::Stack(_) => "stack",
            Op::Softmax(_) => "softmax",
            Op::CrossEntropy { .. } => "cross_entropy",
            Op::Add(..) => "add",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::Sum(_) => "sum",
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
    param: Option<String>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn shape_err(op: &'static str, detail: String) -> EngineError {
    EngineError::Shape { op, detail }
}

/// Ordered record of operations. Nodes are appended in evaluation order,
/// so the node list is already topologically sorted.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: HashSet<String>,
    clamped: usize,
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

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    /// Number of cross-entropy terms whose probability hit the floor.
    pub fn clamped_count(&self) -> usize {
        self.clamped
    }

    fn push(&mut self, value: Tensor, op: Op) -> Result<Var, EngineError> {
        if !value.is_finite() {
            return Err(EngineError::NonFinite { op: op.name() });
        }
        self.nodes.push(Node { value, op, param: None });
        Ok(Var(self.nodes.len() - 1))
    }

    /// A constant or differentiable input that is not a named parameter.
    pub fn input(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, param: None });
        Var(self.nodes.len() - 1)
    }

    /// Records a named parameter leaf. Each name may appear once per tape.
    pub fn param(&mut self, name: &str, value: &Tensor) -> Result<Var, EngineError> {
        if !self.params.insert(name.to_string()) {
            return Err(EngineError::DuplicateParam(name.to_string()));
        }
        self.nodes.push(Node { value: value.clone(), op: Op::Leaf, param: Some(name.to_string()) });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Rows of `table` (`[vocab, dim]`) selected by `ids`: `[ids.len(), dim]`.
    pub fn embedding_lookup(&mut self, table: Var, ids: &[usize]) -> Result<Var, EngineError> {
        let t = self.value(table);
        let [vocab, dim] = *t.shape() else {
            return Err(shape_err("embedding_lookup", format!("table must be rank 2, got {:?}", t.shape())));
        };
        if let Some(&bad) = ids.iter().find(|&&i| i >= vocab) {
            return Err(shape_err("embedding_lookup", format!("id {bad} out of range for table {:?}", t.shape())));
        }
        let mut out = Vec::with_capacity(ids.len() * dim);
        for &i in ids {
            out.extend_from_slice(&t.data()[i * dim..(i + 1) * dim]);
        }
        let value = Tensor::new(vec![ids.len(), dim], out)?;
        self.push(value, Op::Embedding { table, ids: ids.to_vec() })
    }

    /// Valid-padding 1-D convolution. `input` is `[len, in_dim]`, `weight`
    /// `[filters, width, in_dim]`, `bias` `[filters]`; output
    /// `[len - width + 1, filters]`.
    pub fn conv1d(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var, EngineError> {
        let (x, w, b) = (self.value(input), self.value(weight), self.value(bias));
        let ([len, dim], [filters, width, wdim], [bl]) = (x.shape(), w.shape(), b.shape()) else {
            return Err(shape_err(
                "conv1d",
                format!("input {:?}, weight {:?}, bias {:?}", x.shape(), w.shape(), b.shape()),
            ));
        };
        let (len, dim, filters, width) = (*len, *dim, *filters, *width);
        if *wdim != dim || *bl != filters || width == 0 || len < width {
            return Err(shape_err(
                "conv1d",
                format!("input {:?}, weight {:?}, bias {:?}", x.shape(), w.shape(), b.shape()),
            ));
        }
        let out_len = len - width + 1;
        let (xd, wd, bd) = (x.data(), w.data(), b.data());
        let mut out = vec![0.0; out_len * filters];
        for t in 0..out_len {
            let window = &xd[t * dim..(t + width) * dim];
            for f in 0..filters {
                let kernel = &wd[f * width * dim..(f + 1) * width * dim];
                out[t * filters + f] = bd[f] + kernel.iter().zip(window).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        let value = Tensor::new(vec![out_len, filters], out)?;
        self.push(value, Op::Conv1d { input, weight, bias })
    }

    pub fn relu(&mut self, x: Var) -> Result<Var, EngineError> {
        let v = self.value(x);
        let value = Tensor::new(v.shape().to_vec(), v.data().iter().map(|&a| a.max(0.0)).collect())?;
        self.push(value, Op::Relu(x))
    }

    /// Non-overlapping max pooling over time: `[len, ch]` → `[len / width, ch]`.
    /// A trailing partial window is dropped. Ties pick the earliest position.
    pub fn max_pool1d(&mut self, x: Var, width: usize) -> Result<Var, EngineError> {
        let v = self.value(x);
        let [len, ch] = *v.shape() else {
            return Err(shape_err("max_pool1d", format!("input must be rank 2, got {:?}", v.shape())));
        };
        if width == 0 || len < width {
            return Err(shape_err("max_pool1d", format!("width {width} on length {len}")));
        }
        let out_len = len / width;
        let mut out = vec![0.0; out_len * ch];
        let mut argmax = vec![0usize; out_len * ch];
        for j in 0..out_len {
            for c in 0..ch {
                let mut best = j * width;
                for t in j * width + 1..(j + 1) * width {
                    if v.data()[t * ch + c] > v.data()[best * ch + c] {
                        best = t;
                    }
                }
                out[j * ch + c] = v.data()[best * ch + c];
                argmax[j * ch + c] = best;
            }
        }
        let value = Tensor::new(vec![out_len, ch], out)?;
        self.push(value, Op::MaxPool1d { input: x, argmax })
    }

    /// Mean of the first `length` rows of `[len, dim]` → `[dim]`. A length of
    /// zero yields zeros.
    pub fn mean_pool(&mut self, x: Var, length: usize) -> Result<Var, EngineError> {
        let v = self.value(x);
        let [len, dim] = *v.shape() else {
            return Err(shape_err("mean_pool", format!("input must be rank 2, got {:?}", v.shape())));
        };
        if length > len {
            return Err(shape_err("mean_pool", format!("length {length} exceeds sequence length {len}")));
        }
        let mut out = vec![0.0; dim];
        if length > 0 {
            for t in 0..length {
                for (o, a) in out.iter_mut().zip(v.row(t)) {
                    *o += a;
                }
            }
            let n = length as f64;
            out.iter_mut().for_each(|o| *o /= n);
        }
        self.push(Tensor::vector(out), Op::MeanPool { input: x, length })
    }

    /// Runs an LSTM over the first `length` rows of `input` (`[len, in_dim]`)
    /// and returns the final hidden state `[units]`. Gate layout in the
    /// `4 * units` axis of `w_x` (`[in_dim, 4u]`), `w_h` (`[u, 4u]`) and
    /// `bias` (`[4u]`) is input, forget, cell candidate, output.
    pub fn lstm_sequence(
        &mut self,
        input: Var,
        w_x: Var,
        w_h: Var,
        bias: Var,
        length: usize,
    ) -> Result<Var, EngineError> {
        let (x, wx, wh, b) = (self.value(input), self.value(w_x), self.value(w_h), self.value(bias));
        let bad = || {
            shape_err(
                "lstm_sequence",
                format!("input {:?}, w_x {:?}, w_h {:?}, bias {:?}", x.shape(), wx.shape(), wh.shape(), b.shape()),
            )
        };
        let ([len, dim], [wxr, four_u], [whr, whc], [bl]) = (x.shape(), wx.shape(), wh.shape(), b.shape()) else {
            return Err(bad());
        };
        let units = four_u / 4;
        if four_u % 4 != 0 || units == 0 || wxr != dim || *whr != units || whc != four_u || bl != four_u {
            return Err(bad());
        }
        if length > *len {
            return Err(shape_err("lstm_sequence", format!("length {length} exceeds sequence length {len}")));
        }
        let (dim, four_u) = (*dim, *four_u);
        let (xd, wxd, whd, bd) = (x.data(), wx.data(), wh.data(), b.data());
        let mut gates = vec![0.0; length * four_u];
        let mut cells = vec![0.0; (length + 1) * units];
        let mut hidden = vec![0.0; (length + 1) * units];
        let mut z = vec![0.0; four_u];
        for t in 0..length {
            z.copy_from_slice(bd);
            for (k, &xv) in xd[t * dim..(t + 1) * dim].iter().enumerate() {
                if xv != 0.0 {
                    for (zj, w) in z.iter_mut().zip(&wxd[k * four_u..(k + 1) * four_u]) {
                        *zj += xv * w;
                    }
                }
            }
            for (k, &hv) in hidden[t * units..(t + 1) * units].iter().enumerate() {
                if hv != 0.0 {
                    for (zj, w) in z.iter_mut().zip(&whd[k * four_u..(k + 1) * four_u]) {
                        *zj += hv * w;
                    }
                }
            }
            let g = &mut gates[t * four_u..(t + 1) * four_u];
            for u in 0..units {
                let i = sigmoid(z[u]);
                let f = sigmoid(z[units + u]);
                let c_hat = z[2 * units + u].tanh();
                let o = sigmoid(z[3 * units + u]);
                g[u] = i;
                g[units + u] = f;
                g[2 * units + u] = c_hat;
                g[3 * units + u] = o;
                let c = f * cells[t * units + u] + i * c_hat;
                cells[(t + 1) * units + u] = c;
                hidden[(t + 1) * units + u] = o * c.tanh();
            }
        }
        let out = hidden[length * units..(length + 1) * units].to_vec();
        let cache = Box::new(LstmCache { steps: length, units, gates, cells, hidden });
        self.push(Tensor::vector(out), Op::Lstm { input, w_x, w_h, bias, cache })
    }

    /// Affine map over the last axis: `x [.., in] · W [in, out] + b [out]`.
    pub fn dense(&mut self, x: Var, weight: Var, bias: Var) -> Result<Var, EngineError> {
        let (xv, w, b) = (self.value(x), self.value(weight), self.value(bias));
        let (rows, cols) = xv.as_rows();
        let ([win, wout], [bl]) = (w.shape(), b.shape()) else {
            return Err(shape_err(
                "dense",
                format!("input {:?}, weight {:?}, bias {:?}", xv.shape(), w.shape(), b.shape()),
            ));
        };
        if xv.rank() == 0 || xv.rank() > 2 || *win != cols || bl != wout {
            return Err(shape_err(
                "dense",
                format!("input {:?}, weight {:?}, bias {:?}", xv.shape(), w.shape(), b.shape()),
            ));
        }
        let out_dim = *wout;
        let mut out = Vec::with_capacity(rows * out_dim);
        for r in 0..rows {
            let mut acc = b.data().to_vec();
            for (k, &a) in xv.row(r).iter().enumerate() {
                for (o, wv) in acc.iter_mut().zip(&w.data()[k * out_dim..(k + 1) * out_dim]) {
                    *o += a * wv;
                }
            }
            out.extend(acc);
        }
        let mut shape = xv.shape().to_vec();
        *shape.last_mut().expect("rank >= 1") = out_dim;
        let value = Tensor::new(shape, out)?;
        self.push(value, Op::Dense { input: x, weight, bias })
    }

    /// Stacks equal-size tensors, flattened, into a `[n, dim]` matrix.
    pub fn stack(&mut self, rows: &[Var]) -> Result<Var, EngineError> {
        let Some(&first) = rows.first() else {
            return Err(shape_err("stack", "no rows".into()));
        };
        let dim = self.value(first).len();
        let mut data = Vec::with_capacity(rows.len() * dim);
        for &r in rows {
            let v = self.value(r);
            if v.len() != dim {
                return Err(shape_err("stack", format!("row shape {:?}, expected [{dim}]", v.shape())));
            }
            data.extend_from_slice(v.data());
        }
        let value = Tensor::new(vec![rows.len(), dim], data)?;
        self.push(value, Op::Stack(rows.to_vec()))
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax(&mut self, z: Var) -> Result<Var, EngineError> {
        let v = self.value(z);
        let value = softmax_rows(v)?;
        self.push(value, Op::Softmax(z))
    }

    /// Mean over rows of `-ln(max(p[row, target], PROB_FLOOR))`. A rank-1
    /// `probs` is a batch of one.
    pub fn cross_entropy(&mut self, probs: Var, targets: &[usize]) -> Result<Var, EngineError> {
        let p = self.value(probs);
        let (rows, cols) = p.as_rows();
        if p.rank() == 0 || p.rank() > 2 || rows != targets.len() || rows == 0 {
            return Err(shape_err("cross_entropy", format!("probs {:?} with {} target(s)", p.shape(), targets.len())));
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= cols) {
            return Err(EngineError::TargetOutOfRange { target: t, classes: cols });
        }
        let mut total = 0.0;
        let mut clamped = 0;
        for (r, &t) in targets.iter().enumerate() {
            let pt = p.row(r)[t];
            if pt < PROB_FLOOR {
                clamped += 1;
            }
            total -= pt.max(PROB_FLOOR).ln();
        }
        if clamped > 0 {
            log::debug!("cross_entropy: {clamped} probability value(s) clamped at {PROB_FLOOR:e}");
            self.clamped += clamped;
        }
        let value = Tensor::scalar(total / rows as f64);
        self.push(value, Op::CrossEntropy { probs, targets: targets.to_vec() })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, EngineError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.len() != bv.len() {
            return Err(shape_err("add", format!("{:?} vs {:?}", av.shape(), bv.shape())));
        }
        let value = Tensor::new(av.shape().to_vec(), av.data().iter().zip(bv.data()).map(|(x, y)| x + y).collect())?;
        self.push(value, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, EngineError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.len() != bv.len() {
            return Err(shape_err("mul", format!("{:?} vs {:?}", av.shape(), bv.shape())));
        }
        let value = Tensor::new(av.shape().to_vec(), av.data().iter().zip(bv.data()).map(|(x, y)| x * y).collect())?;
        self.push(value, Op::Mul(a, b))
    }

    /// Multiplies by a constant. A factor of exactly zero cuts the branch:
    /// nothing upstream receives gradient through this node.
    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var, EngineError> {
        let av = self.value(a);
        let value = Tensor::new(av.shape().to_vec(), av.data().iter().map(|x| x * factor).collect())?;
        self.push(value, Op::Scale(a, factor))
    }

    pub fn sum(&mut self, a: Var) -> Result<Var, EngineError> {
        let value = Tensor::scalar(self.value(a).data().iter().sum());
        self.push(value, Op::Sum(a))
    }

    /// Gradients of the scalar `loss` with respect to every node.
    pub fn backward(&self, loss: Var) -> Result<Gradients, EngineError> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(EngineError::NonScalarLoss { shape: lv.shape().to_vec() });
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::new(lv.shape().to_vec(), vec![1.0])?);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }

        let params =
            self.nodes.iter().enumerate().filter_map(|(i, n)| n.param.as_ref().map(|name| (name.clone(), i))).collect();
        Ok(Gradients { grads, shapes: self.nodes.iter().map(|n| n.value.shape().to_vec()).collect(), params })
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let mut acc = |var: Var, delta: Tensor| match &mut grads[var.0] {
            Some(existing) => existing.add_assign(&delta),
            slot @ None => *slot = Some(delta),
        };
        let val = |v: Var| &self.nodes[v.0].value;
        match &node.op {
            Op::Leaf => {}
            Op::Embedding { table, ids } => {
                let t = val(*table);
                let dim = t.shape()[1];
                let mut d = Tensor::zeros(t.shape());
                for (r, &id) in ids.iter().enumerate() {
                    for (a, b) in d.data_mut()[id * dim..(id + 1) * dim].iter_mut().zip(g.row(r)) {
                        *a += b;
                    }
                }
                acc(*table, d);
            }
            Op::Conv1d { input, weight, bias } => {
                let (x, w) = (val(*input), val(*weight));
                let (dim, filters, width) = (x.shape()[1], w.shape()[0], w.shape()[1]);
                let out_len = g.shape()[0];
                let (xd, wd, gd) = (x.data(), w.data(), g.data());
                let mut dx = vec![0.0; xd.len()];
                let mut dw = vec![0.0; wd.len()];
                let mut db = vec![0.0; filters];
                for t in 0..out_len {
                    for f in 0..filters {
                        let go = gd[t * filters + f];
                        if go == 0.0 {
                            continue;
                        }
                        db[f] += go;
                        let kw = f * width * dim;
                        let window = t * dim;
                        for k in 0..width * dim {
                            dw[kw + k] += go * xd[window + k];
                            dx[window + k] += go * wd[kw + k];
                        }
                    }
                }
                acc(*input, Tensor::new(x.shape().to_vec(), dx).expect("shape"));
                acc(*weight, Tensor::new(w.shape().to_vec(), dw).expect("shape"));
                acc(*bias, Tensor::vector(db));
            }
            Op::Relu(x) => {
                let xv = val(*x);
                let d = xv.data().iter().zip(g.data()).map(|(&a, &b)| if a > 0.0 { b } else { 0.0 }).collect();
                acc(*x, Tensor::new(xv.shape().to_vec(), d).expect("shape"));
            }
            Op::MaxPool1d { input, argmax } => {
                let xv = val(*input);
                let ch = xv.shape()[1];
                let mut d = Tensor::zeros(xv.shape());
                for (j, (&src, &go)) in argmax.iter().zip(g.data()).enumerate() {
                    d.data_mut()[src * ch + j % ch] += go;
                }
                acc(*input, d);
            }
            Op::MeanPool { input, length } => {
                let xv = val(*input);
                let dim = xv.shape()[1];
                let mut d = Tensor::zeros(xv.shape());
                if *length > 0 {
                    let n = *length as f64;
                    for t in 0..*length {
                        for (a, b) in d.data_mut()[t * dim..(t + 1) * dim].iter_mut().zip(g.data()) {
                            *a = b / n;
                        }
                    }
                }
                acc(*input, d);
            }
            Op::Lstm { input, w_x, w_h, bias, cache } => {
                let (dx, dwx, dwh, db) = lstm_backward(val(*input), val(*w_x), val(*w_h), cache, g.data());
                acc(*input, dx);
                acc(*w_x, dwx);
                acc(*w_h, dwh);
                acc(*bias, db);
            }
            Op::Dense { input, weight, bias } => {
                let (xv, w) = (val(*input), val(*weight));
                let (rows, in_dim) = xv.as_rows();
                let out_dim = w.shape()[1];
                let mut dx = vec![0.0; xv.len()];
                let mut dw = vec![0.0; w.len()];
                let mut db = vec![0.0; out_dim];
                for r in 0..rows {
                    let gr = g.row(r);
                    let xr = xv.row(r);
                    for (o, &go) in db.iter_mut().zip(gr) {
                        *o += go;
                    }
                    for k in 0..in_dim {
                        let wrow = &w.data()[k * out_dim..(k + 1) * out_dim];
                        let dwrow = &mut dw[k * out_dim..(k + 1) * out_dim];
                        let mut s = 0.0;
                        for j in 0..out_dim {
                            dwrow[j] += xr[k] * gr[j];
                            s += gr[j] * wrow[j];
                        }
                        dx[r * in_dim + k] = s;
                    }
                }
                acc(*input, Tensor::new(xv.shape().to_vec(), dx).expect("shape"));
                acc(*weight, Tensor::new(w.shape().to_vec(), dw).expect("shape"));
                acc(*bias, Tensor::vector(db));
            }
            Op::Stack(rows) => {
                for (r, &v) in rows.iter().enumerate() {
                    acc(v, Tensor::vector(g.row(r).to_vec()));
                }
            }
            Op::Softmax(z) => {
                let y = &node.value;
                let (rows, _) = y.as_rows();
                let mut d = Vec::with_capacity(y.len());
                for r in 0..rows {
                    let (yr, gr) = (y.row(r), g.row(r));
                    let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    d.extend(yr.iter().zip(gr).map(|(yv, gv)| yv * (gv - dot)));
                }
                acc(*z, Tensor::new(y.shape().to_vec(), d).expect("shape"));
            }
            Op::CrossEntropy { probs, targets } => {
                let p = val(*probs);
                let cols = p.as_rows().1;
                let scale = g.data()[0] / targets.len() as f64;
                let mut d = Tensor::zeros(p.shape());
                for (r, &t) in targets.iter().enumerate() {
                    let pt = p.row(r)[t];
                    if pt >= PROB_FLOOR {
                        d.data_mut()[r * cols + t] = -scale / pt;
                    }
                }
                acc(*probs, d);
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::Mul(a, b) => {
                let (av, bv) = (val(*a), val(*b));
                let da = g.data().iter().zip(bv.data()).map(|(x, y)| x * y).collect();
                let db = g.data().iter().zip(av.data()).map(|(x, y)| x * y).collect();
                acc(*a, Tensor::new(av.shape().to_vec(), da).expect("shape"));
                acc(*b, Tensor::new(bv.shape().to_vec(), db).expect("shape"));
            }
            Op::Scale(a, factor) => {
                if *factor != 0.0 {
                    let d = g.data().iter().map(|x| x * factor).collect();
                    acc(*a, Tensor::new(val(*a).shape().to_vec(), d).expect("shape"));
                }
            }
            Op::Sum(a) => {
                let av = val(*a);
                acc(*a, Tensor::new(av.shape().to_vec(), vec![g.data()[0]; av.len()]).expect("shape"));
            }
        }
    }
}

fn lstm_backward(
    x: &Tensor,
    wx: &Tensor,
    wh: &Tensor,
    cache: &LstmCache,
    g_out: &[f64],
) -> (Tensor, Tensor, Tensor, Tensor) {
    let units = cache.units;
    let four_u = 4 * units;
    let dim = x.shape()[1];
    let (xd, wxd, whd) = (x.data(), wx.data(), wh.data());
    let mut dx = vec![0.0; xd.len()];
    let mut dwx = vec![0.0; wxd.len()];
    let mut dwh = vec![0.0; whd.len()];
    let mut db = vec![0.0; four_u];
    let mut dh = g_out.to_vec();
    let mut dc = vec![0.0; units];
    let mut dz = vec![0.0; four_u];
    for t in (0..cache.steps).rev() {
        let gates = &cache.gates[t * four_u..(t + 1) * four_u];
        let c_prev = &cache.cells[t * units..(t + 1) * units];
        let c_cur = &cache.cells[(t + 1) * units..(t + 2) * units];
        let h_prev = &cache.hidden[t * units..(t + 1) * units];
        for u in 0..units {
            let (i, f, c_hat, o) = (gates[u], gates[units + u], gates[2 * units + u], gates[3 * units + u]);
            let tc = c_cur[u].tanh();
            let d_o = dh[u] * tc;
            let dcu = dc[u] + dh[u] * o * (1.0 - tc * tc);
            dz[u] = dcu * c_hat * i * (1.0 - i);
            dz[units + u] = dcu * c_prev[u] * f * (1.0 - f);
            dz[2 * units + u] = dcu * i * (1.0 - c_hat * c_hat);
            dz[3 * units + u] = d_o * o * (1.0 - o);
            dc[u] = dcu * f;
        }
        for (a, b) in db.iter_mut().zip(&dz) {
            *a += b;
        }
        let xt = &xd[t * dim..(t + 1) * dim];
        for k in 0..dim {
            let row = &mut dwx[k * four_u..(k + 1) * four_u];
            let wrow = &wxd[k * four_u..(k + 1) * four_u];
            let mut s = 0.0;
            for j in 0..four_u {
                row[j] += xt[k] * dz[j];
                s += dz[j] * wrow[j];
            }
            dx[t * dim + k] = s;
        }
        for k in 0..units {
            let row = &mut dwh[k * four_u..(k + 1) * four_u];
            let wrow = &whd[k * four_u..(k + 1) * four_u];
            let mut s = 0.0;
            for j in 0..four_u {
                row[j] += h_prev[k] * dz[j];
                s += dz[j] * wrow[j];
            }
            dh[k] = s;
        }
    }
    (
        Tensor::new(x.shape().to_vec(), dx).expect("shape"),
        Tensor::new(wx.shape().to_vec(), dwx).expect("shape"),
        Tensor::new(wh.shape().to_vec(), dwh).expect("shape"),
        Tensor::vector(db),
    )
}

/// Row-wise numerically stable softmax outside of any tape.
pub fn softmax_rows(z: &Tensor) -> Result<Tensor, EngineError> {
    if z.rank() == 0 || z.rank() > 2 || z.is_empty() {
        return Err(shape_err("softmax", format!("logits must be rank 1 or 2, got {:?}", z.shape())));
    }
    if !z.is_finite() {
        return Err(EngineError::NonFinite { op: "softmax" });
    }
    let (rows, _) = z.as_rows();
    let mut out = Vec::with_capacity(z.len());
    for r in 0..rows {
        let row = z.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        out.extend(exps.into_iter().map(|e| e / total));
    }
    Tensor::new(z.shape().to_vec(), out)
}

/// Result of [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
    params: BTreeMap<String, usize>,
}

impl Gradients {
    /// Gradient for `var`; exact zeros if the loss does not reach it.
    pub fn get(&self, var: Var) -> Tensor {
        self.grads[var.0].clone().unwrap_or_else(|| Tensor::zeros(&self.shapes[var.0]))
    }

    pub fn reached(&self, var: Var) -> bool {
        self.grads[var.0].is_some()
    }

    /// Gradients of every named parameter on the tape.
    pub fn params(&self) -> BTreeMap<String, Tensor> {
        self.params.iter().map(|(name, &i)| (name.clone(), self.get(Var(i)))).collect()
    }
}
