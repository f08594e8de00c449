use std::sync::Arc;

use crate::error::{Error, Result};
use crate::so3::CgBlock;

pub type Shape = [usize; 3];

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Identifier of a trainable leaf, chosen by the caller.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub usize);

#[derive(Clone, Debug)]
enum Op {
    Leaf(Option<ParamId>),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Square(Var),
    Sqrt(Var),
    Exp(Var),
    Ln(Var),
    Sum(Var),
    SumAxis(Var),
    Linear(Var, Var),
    Cg(Var, Var, Arc<CgBlock>),
    Concat(Vec<Var>),
    Slice(Var, usize),
    Pad(Var),
}

#[derive(Clone, Debug)]
struct Node {
    shape: Shape,
    value: Vec<f64>,
    op: Op,
}

/// Append-only record of eagerly evaluated operations.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn numel(s: Shape) -> usize {
    s[0] * s[1] * s[2]
}

fn broadcast_shape(a: Shape, b: Shape) -> Result<Shape> {
    let mut out = [0; 3];
    for k in 0..3 {
        out[k] = match (a[k], b[k]) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => return Err(Error::Shape(format!("cannot broadcast {a:?} with {b:?}"))),
        };
    }
    Ok(out)
}

/// Flat index into a buffer of shape `s` for output coordinates, honouring
/// size-1 broadcast axes.
#[inline]
fn bidx(s: Shape, i: usize, j: usize, k: usize) -> usize {
    let i = if s[0] == 1 { 0 } else { i };
    let j = if s[1] == 1 { 0 } else { j };
    let k = if s[2] == 1 { 0 } else { k };
    (i * s[1] + j) * s[2] + k
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

    fn push(&mut self, shape: Shape, value: Vec<f64>, op: Op) -> Var {
        debug_assert_eq!(numel(shape), value.len());
        self.nodes.push(Node { shape, value, op });
        Var(self.nodes.len() - 1)
    }

    fn leaf(&mut self, value: Vec<f64>, shape: Shape, param: Option<ParamId>) -> Result<Var> {
        if value.len() != numel(shape) {
            return Err(Error::Shape(format!("{} values for shape {shape:?}", value.len())));
        }
        Ok(self.push(shape, value, Op::Leaf(param)))
    }

    /// Non-differentiated input.
    pub fn constant(&mut self, value: Vec<f64>, shape: Shape) -> Result<Var> {
        self.leaf(value, shape, None)
    }

    /// Leaf whose gradient is reported under `id`.
    pub fn param(&mut self, id: ParamId, value: Vec<f64>, shape: Shape) -> Result<Var> {
        self.leaf(value, shape, Some(id))
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> Shape {
        self.nodes[v.0].shape
    }

    /// Value of a `[1, 1, 1]` node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[0]
    }

    fn binary(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        let s = broadcast_shape(sa, sb)?;
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        let mut out = Vec::with_capacity(numel(s));
        for i in 0..s[0] {
            for j in 0..s[1] {
                for k in 0..s[2] {
                    out.push(f(va[bidx(sa, i, j, k)], vb[bidx(sb, i, j, k)]));
                }
            }
        }
        Ok(self.push(s, out, op))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, |x, y| x / y, Op::Div(a, b))
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let s = self.shape(a);
        let out = self.nodes[a.0].value.iter().map(|v| f(*v)).collect();
        self.push(s, out, op)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, |v| v * c, Op::Scale(a, c))
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, |v| v + c, Op::AddScalar(a))
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.unary(a, |v| v * v, Op::Square(a))
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        self.unary(a, f64::sqrt, Op::Sqrt(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, f64::exp, Op::Exp(a))
    }

    pub fn ln(&mut self, a: Var) -> Var {
        self.unary(a, f64::ln, Op::Ln(a))
    }

    /// Sum of all entries, shape `[1, 1, 1]`.
    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.nodes[a.0].value.iter().sum();
        self.push([1, 1, 1], vec![s], Op::Sum(a))
    }

    /// Sum over one axis, keeping it with size 1.
    pub fn sum_axis(&mut self, a: Var, axis: usize) -> Result<Var> {
        if axis > 2 {
            return Err(Error::InvalidArgument(format!("axis {axis} out of range")));
        }
        let s = self.shape(a);
        let mut o = s;
        o[axis] = 1;
        let mut out = vec![0.0; numel(o)];
        let v = &self.nodes[a.0].value;
        for i in 0..s[0] {
            for j in 0..s[1] {
                for k in 0..s[2] {
                    out[bidx(o, i, j, k)] += v[(i * s[1] + j) * s[2] + k];
                }
            }
        }
        Ok(self.push(o, out, Op::SumAxis(a)))
    }

    /// `out[b, o, m] = sum_i x[b, i, m] w[0, i, o]`.
    pub fn linear(&mut self, x: Var, w: Var) -> Result<Var> {
        let (sx, sw) = (self.shape(x), self.shape(w));
        if sw[0] != 1 || sw[1] != sx[1] {
            return Err(Error::Shape(format!("linear weight {sw:?} does not match input {sx:?}")));
        }
        let (b, ci, m, co) = (sx[0], sx[1], sx[2], sw[2]);
        let (xv, wv) = (&self.nodes[x.0].value, &self.nodes[w.0].value);
        let mut out = vec![0.0; b * co * m];
        for bi in 0..b {
            for i in 0..ci {
                let xrow = &xv[(bi * ci + i) * m..(bi * ci + i + 1) * m];
                for o in 0..co {
                    let wio = wv[i * co + o];
                    if wio == 0.0 {
                        continue;
                    }
                    let orow = &mut out[(bi * co + o) * m..(bi * co + o + 1) * m];
                    for (ov, xv) in orow.iter_mut().zip(xrow) {
                        *ov += wio * xv;
                    }
                }
            }
        }
        Ok(self.push([b, co, m], out, Op::Linear(x, w)))
    }

    /// Channel-wise Clebsch-Gordan product
    /// `out[b, c, k] = sum_ij C[i, j, k] x[b, c, i] y[b, c, j]`.
    pub fn cg(&mut self, x: Var, y: Var, block: Arc<CgBlock>) -> Result<Var> {
        let (sx, sy) = (self.shape(x), self.shape(y));
        let (d1, d2, d3) = block.dims();
        if sx[0] != sy[0] || sx[1] != sy[1] || sx[2] != d1 || sy[2] != d2 {
            return Err(Error::ChannelMismatch(format!(
                "CG ({},{},{}) operands {sx:?} and {sy:?}",
                block.l1, block.l2, block.l3
            )));
        }
        let (b, c) = (sx[0], sx[1]);
        let (xv, yv) = (&self.nodes[x.0].value, &self.nodes[y.0].value);
        let mut out = vec![0.0; b * c * d3];
        for r in 0..b * c {
            block.contract_into(&xv[r * d1..(r + 1) * d1], &yv[r * d2..(r + 1) * d2], &mut out[r * d3..(r + 1) * d3]);
        }
        Ok(self.push([b, c, d3], out, Op::Cg(x, y, block)))
    }

    /// Concatenation along the channel axis.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts.first().ok_or_else(|| Error::InvalidArgument("concat of nothing".into()))?;
        let s0 = self.shape(*first);
        let mut c_total = 0;
        for p in parts {
            let s = self.shape(*p);
            if s[0] != s0[0] || s[2] != s0[2] {
                return Err(Error::Shape(format!("concat of {s0:?} and {s:?}")));
            }
            c_total += s[1];
        }
        let (b, m) = (s0[0], s0[2]);
        let mut out = Vec::with_capacity(b * c_total * m);
        for bi in 0..b {
            for p in parts {
                let s = self.shape(*p);
                let v = &self.nodes[p.0].value;
                out.extend_from_slice(&v[bi * s[1] * m..(bi + 1) * s[1] * m]);
            }
        }
        Ok(self.push([b, c_total, m], out, Op::Concat(parts.to_vec())))
    }

    /// Channels `start..start + len`.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let s = self.shape(a);
        if start + len > s[1] {
            return Err(Error::Shape(format!("slice {start}..{} of {} channels", start + len, s[1])));
        }
        let (b, m) = (s[0], s[2]);
        let v = &self.nodes[a.0].value;
        let mut out = Vec::with_capacity(b * len * m);
        for bi in 0..b {
            out.extend_from_slice(&v[(bi * s[1] + start) * m..(bi * s[1] + start + len) * m]);
        }
        Ok(self.push([b, len, m], out, Op::Slice(a, start)))
    }

    /// Appends zero channels up to `channels`.
    pub fn pad(&mut self, a: Var, channels: usize) -> Result<Var> {
        let s = self.shape(a);
        if channels < s[1] {
            return Err(Error::Shape(format!("cannot pad {} channels down to {channels}", s[1])));
        }
        let (b, m) = (s[0], s[2]);
        let v = &self.nodes[a.0].value;
        let mut out = vec![0.0; b * channels * m];
        for bi in 0..b {
            out[bi * channels * m..(bi * channels + s[1]) * m].copy_from_slice(&v[bi * s[1] * m..(bi + 1) * s[1] * m]);
        }
        Ok(self.push([b, channels, m], out, Op::Pad(a)))
    }

    /// Reverse accumulation from a `[1, 1, 1]` loss node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.shape(loss) != [1, 1, 1] {
            return Err(Error::Contract(format!("loss must be a scalar node, got shape {:?}", self.shape(loss))));
        }
        let mut g: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        g[loss.0] = Some(vec![1.0]);
        for idx in (0..=loss.0).rev() {
            let Some(gout) = g[idx].take() else { continue };
            let node = &self.nodes[idx];
            let s = node.shape;
            match &node.op {
                Op::Leaf(_) => {
                    g[idx] = Some(gout);
                    continue;
                }
                Op::Add(a, b) | Op::Sub(a, b) => {
                    let sign = if matches!(node.op, Op::Sub(..)) { -1.0 } else { 1.0 };
                    self.accum_reduce(&mut g, *a, s, &gout, |_, gv| gv);
                    self.accum_reduce(&mut g, *b, s, &gout, |_, gv| sign * gv);
                }
                Op::Mul(a, b) => {
                    let (sa, sb) = (self.shape(*a), self.shape(*b));
                    let (va, vb) = (self.value(*a), self.value(*b));
                    self.accum_reduce(&mut g, *a, s, &gout, |(i, j, k), gv| gv * vb[bidx(sb, i, j, k)]);
                    self.accum_reduce(&mut g, *b, s, &gout, |(i, j, k), gv| gv * va[bidx(sa, i, j, k)]);
                }
                Op::Div(a, b) => {
                    let (sa, sb) = (self.shape(*a), self.shape(*b));
                    let (va, vb) = (self.value(*a), self.value(*b));
                    self.accum_reduce(&mut g, *a, s, &gout, |(i, j, k), gv| gv / vb[bidx(sb, i, j, k)]);
                    self.accum_reduce(&mut g, *b, s, &gout, |(i, j, k), gv| {
                        let d = vb[bidx(sb, i, j, k)];
                        -gv * va[bidx(sa, i, j, k)] / (d * d)
                    });
                }
                Op::Scale(a, c) => accum(&mut g, *a, gout.iter().map(|v| v * c)),
                Op::AddScalar(a) => accum(&mut g, *a, gout.iter().copied()),
                Op::Square(a) => {
                    let x = self.value(*a);
                    accum(&mut g, *a, gout.iter().zip(x).map(|(gv, xv)| 2.0 * gv * xv));
                }
                Op::Sqrt(a) => accum(&mut g, *a, gout.iter().zip(&node.value).map(|(gv, y)| gv / (2.0 * y))),
                Op::Exp(a) => accum(&mut g, *a, gout.iter().zip(&node.value).map(|(gv, y)| gv * y)),
                Op::Ln(a) => {
                    let x = self.value(*a);
                    accum(&mut g, *a, gout.iter().zip(x).map(|(gv, xv)| gv / xv));
                }
                Op::Sum(a) => {
                    let n = numel(self.shape(*a));
                    accum(&mut g, *a, std::iter::repeat_n(gout[0], n));
                }
                Op::SumAxis(a) => {
                    let sa = self.shape(*a);
                    let mut buf = Vec::with_capacity(numel(sa));
                    for i in 0..sa[0] {
                        for j in 0..sa[1] {
                            for k in 0..sa[2] {
                                buf.push(gout[bidx(s, i, j, k)]);
                            }
                        }
                    }
                    accum(&mut g, *a, buf.into_iter());
                }
                Op::Linear(x, w) => {
                    let (sx, sw) = (self.shape(*x), self.shape(*w));
                    let (b, ci, m, co) = (sx[0], sx[1], sx[2], sw[2]);
                    let (xv, wv) = (self.value(*x), self.value(*w));
                    let mut gx = vec![0.0; b * ci * m];
                    let mut gw = vec![0.0; ci * co];
                    for bi in 0..b {
                        for i in 0..ci {
                            let xr = (bi * ci + i) * m;
                            for o in 0..co {
                                let gr = (bi * co + o) * m;
                                let wio = wv[i * co + o];
                                let mut dot = 0.0;
                                for t in 0..m {
                                    gx[xr + t] += wio * gout[gr + t];
                                    dot += xv[xr + t] * gout[gr + t];
                                }
                                gw[i * co + o] += dot;
                            }
                        }
                    }
                    accum(&mut g, *x, gx.into_iter());
                    accum(&mut g, *w, gw.into_iter());
                }
                Op::Cg(x, y, block) => {
                    let (d1, d2, d3) = block.dims();
                    let rows = s[0] * s[1];
                    let (xv, yv) = (self.value(*x), self.value(*y));
                    let mut gx = vec![0.0; rows * d1];
                    let mut gy = vec![0.0; rows * d2];
                    for r in 0..rows {
                        for &(i, j, k, c) in block.nonzeros() {
                            let (i, j, k) = (i as usize, j as usize, k as usize);
                            let go = c * gout[r * d3 + k];
                            gx[r * d1 + i] += go * yv[r * d2 + j];
                            gy[r * d2 + j] += go * xv[r * d1 + i];
                        }
                    }
                    accum(&mut g, *x, gx.into_iter());
                    accum(&mut g, *y, gy.into_iter());
                }
                Op::Concat(parts) => {
                    let (b, m) = (s[0], s[2]);
                    let mut off = 0;
                    for p in parts {
                        let c = self.shape(*p)[1];
                        let mut buf = Vec::with_capacity(b * c * m);
                        for bi in 0..b {
                            let start = (bi * s[1] + off) * m;
                            buf.extend_from_slice(&gout[start..start + c * m]);
                        }
                        accum(&mut g, *p, buf.into_iter());
                        off += c;
                    }
                }
                Op::Slice(a, start) => {
                    let sa = self.shape(*a);
                    let (b, m) = (sa[0], sa[2]);
                    let mut buf = vec![0.0; numel(sa)];
                    for bi in 0..b {
                        let dst = (bi * sa[1] + start) * m;
                        buf[dst..dst + s[1] * m].copy_from_slice(&gout[bi * s[1] * m..(bi + 1) * s[1] * m]);
                    }
                    accum(&mut g, *a, buf.into_iter());
                }
                Op::Pad(a) => {
                    let sa = self.shape(*a);
                    let (b, m) = (sa[0], sa[2]);
                    let mut buf = Vec::with_capacity(numel(sa));
                    for bi in 0..b {
                        buf.extend_from_slice(&gout[bi * s[1] * m..(bi * s[1] + sa[1]) * m]);
                    }
                    accum(&mut g, *a, buf.into_iter());
                }
            }
        }
        let mut params = Vec::new();
        for (idx, node) in self.nodes.iter().enumerate().take(loss.0 + 1) {
            if let Op::Leaf(Some(id)) = node.op {
                params.push((id, Var(idx)));
            }
        }
        Ok(Gradients { grads: g, params })
    }

    /// Accumulates `f(coord, g_out)` into `target`, summing over axes where
    /// `target` was broadcast.
    fn accum_reduce(
        &self,
        g: &mut [Option<Vec<f64>>],
        target: Var,
        s: Shape,
        gout: &[f64],
        f: impl Fn((usize, usize, usize), f64) -> f64,
    ) {
        let st = self.shape(target);
        let mut buf = vec![0.0; numel(st)];
        for i in 0..s[0] {
            for j in 0..s[1] {
                for k in 0..s[2] {
                    buf[bidx(st, i, j, k)] += f((i, j, k), gout[(i * s[1] + j) * s[2] + k]);
                }
            }
        }
        accum(g, target, buf.into_iter());
    }
}

fn accum(g: &mut [Option<Vec<f64>>], target: Var, vals: impl Iterator<Item = f64>) {
    match &mut g[target.0] {
        Some(buf) => buf.iter_mut().zip(vals).for_each(|(b, v)| *b += v),
        slot @ None => *slot = Some(vals.collect()),
    }
}

/// Result of [`Tape::backward`].
#[derive(Clone, Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    params: Vec<(ParamId, Var)>,
}

impl Gradients {
    /// Gradient of a node, `None` if the loss does not depend on it.
    pub fn wrt(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    /// Gradients of every parameter leaf, summed when one id appears on
    /// several leaves. Parameters the loss ignores get no entry.
    pub fn params(&self) -> Vec<(ParamId, Vec<f64>)> {
        let mut out: Vec<(ParamId, Vec<f64>)> = Vec::new();
        for &(id, v) in &self.params {
            let Some(gv) = self.wrt(v) else { continue };
            match out.iter_mut().find(|(i, _)| *i == id) {
                Some((_, acc)) => acc.iter_mut().zip(gv).for_each(|(a, b)| *a += b),
                None => out.push((id, gv.to_vec())),
            }
        }
        out.sort_by_key(|p| p.0);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::CgCache;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(lo..hi)).collect()
    }

    /// Checks the gradient of `sum(r * f(inputs))` for a fixed random `r`
    /// against central differences.
    fn check(inputs: &[(Vec<f64>, Shape)], f: impl Fn(&mut Tape, &[Var]) -> Var, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let build = |vals: &[Vec<f64>], r: Option<&[f64]>| -> (Tape, Vec<Var>, Var, Vec<f64>) {
            let mut t = Tape::new();
            let vars: Vec<Var> = vals
                .iter()
                .zip(inputs)
                .enumerate()
                .map(|(i, (v, (_, s)))| t.param(ParamId(i), v.clone(), *s).unwrap())
                .collect();
            let out = f(&mut t, &vars);
            let n = t.value(out).len();
            let r = r.map(|r| r.to_vec()).unwrap_or_else(|| vec![0.0; n]);
            let rv = t.constant(r.clone(), t.shape(out)).unwrap();
            let p = t.mul(out, rv).unwrap();
            let l = t.sum(p);
            (t, vars, l, r)
        };
        let vals: Vec<Vec<f64>> = inputs.iter().map(|(v, _)| v.clone()).collect();
        let (t0, _, _, _) = build(&vals, None);
        let n_out = t0.nodes[t0.len() - 4].value.len();
        let r = rand_vec(&mut rng, n_out, -1.0, 1.0);
        let (t, vars, loss, _) = build(&vals, Some(&r));
        let grads = t.backward(loss).unwrap();
        let h = 1e-5;
        for (a, var) in vars.iter().enumerate() {
            let g = grads.wrt(*var).map(|g| g.to_vec()).unwrap_or_else(|| vec![0.0; vals[a].len()]);
            for i in 0..vals[a].len() {
                let mut vp = vals.clone();
                vp[a][i] += h;
                let mut vm = vals.clone();
                vm[a][i] -= h;
                let (tp, _, lp, _) = build(&vp, Some(&r));
                let (tm, _, lm, _) = build(&vm, Some(&r));
                let fd = (tp.scalar(lp) - tm.scalar(lm)) / (2.0 * h);
                let err = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-3);
                assert!(err < 1e-4, "input {a}[{i}]: fd {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn add_gives_unit_gradients() {
        let mut t = Tape::new();
        let x = t.param(ParamId(0), vec![1.0, 2.0], [1, 2, 1]).unwrap();
        let y = t.param(ParamId(1), vec![3.0, 4.0], [1, 2, 1]).unwrap();
        let s = t.add(x, y).unwrap();
        let l = t.sum(s);
        let g = t.backward(l).unwrap();
        assert_eq!(g.wrt(x).unwrap(), &[1.0, 1.0]);
        assert_eq!(g.wrt(y).unwrap(), &[1.0, 1.0]);
        assert_eq!(g.params().len(), 2);
    }

    #[test]
    fn sum_of_squares() {
        let mut t = Tape::new();
        let x = t.param(ParamId(0), vec![1.0, -2.0, 0.5], [1, 1, 3]).unwrap();
        let s = t.square(x);
        let l = t.sum(s);
        let g = t.backward(l).unwrap();
        assert_eq!(g.wrt(x).unwrap(), &[2.0, -4.0, 1.0]);
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut t = Tape::new();
        let x = t.param(ParamId(0), vec![1.0, 2.0], [1, 2, 1]).unwrap();
        assert!(matches!(t.backward(x), Err(Error::Contract(_))));
    }

    #[test]
    fn recording_is_deterministic() {
        let run = || {
            let mut t = Tape::new();
            let x = t.param(ParamId(0), vec![1.0, 2.0], [1, 2, 1]).unwrap();
            let y = t.square(x);
            let z = t.sum(y);
            (t.len(), t.scalar(z), format!("{:?}", t.nodes.iter().map(|n| n.shape).collect::<Vec<_>>()))
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn broadcast_mismatch() {
        let mut t = Tape::new();
        let x = t.constant(vec![0.0; 6], [1, 2, 3]).unwrap();
        let y = t.constant(vec![0.0; 4], [1, 2, 2]).unwrap();
        assert!(t.add(x, y).is_err());
        assert!(t.constant(vec![0.0; 5], [1, 2, 3]).is_err());
    }

    #[test]
    fn elementwise_primitives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for trial in 0..20 {
            let a = (rand_vec(&mut rng, 12, 0.5, 2.0), [2, 2, 3]);
            let b = (rand_vec(&mut rng, 2, 0.5, 2.0), [1, 2, 1]);
            let c = (rand_vec(&mut rng, 6, 0.5, 2.0), [2, 1, 3]);
            check(&[a.clone(), b.clone()], |t, v| t.add(v[0], v[1]).unwrap(), trial);
            check(&[a.clone(), b.clone()], |t, v| t.sub(v[0], v[1]).unwrap(), trial);
            check(&[a.clone(), c.clone()], |t, v| t.mul(v[0], v[1]).unwrap(), trial);
            check(&[a.clone(), b.clone()], |t, v| t.div(v[0], v[1]).unwrap(), trial);
            check(&[b.clone(), c.clone()], |t, v| t.mul(v[0], v[1]).unwrap(), trial);
            check(&[a.clone()], |t, v| t.scale(v[0], -1.7), trial);
            check(&[a.clone()], |t, v| t.add_scalar(v[0], 0.3), trial);
            check(&[a.clone()], |t, v| t.square(v[0]), trial);
            check(&[a.clone()], |t, v| t.sqrt(v[0]), trial);
            check(&[a.clone()], |t, v| t.exp(v[0]), trial);
            check(&[a.clone()], |t, v| t.ln(v[0]), trial);
            check(&[a.clone()], |t, v| t.sum(v[0]), trial);
            for axis in 0..3 {
                check(&[a.clone()], |t, v| t.sum_axis(v[0], axis).unwrap(), trial);
            }
        }
    }

    #[test]
    fn structural_primitives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cache = CgCache::shared(3);
        for trial in 0..20 {
            let x = (rand_vec(&mut rng, 2 * 3 * 5, -1.0, 1.0), [2, 3, 5]);
            let w = (rand_vec(&mut rng, 3 * 4, -1.0, 1.0), [1, 3, 4]);
            check(&[x.clone(), w.clone()], |t, v| t.linear(v[0], v[1]).unwrap(), trial);
            let y = (rand_vec(&mut rng, 2 * 3 * 3, -1.0, 1.0), [2, 3, 3]);
            let blk = cache.get(2, 1, 2).unwrap().clone();
            check(&[x.clone(), y.clone()], |t, v| t.cg(v[0], v[1], blk.clone()).unwrap(), trial);
            let self_blk = cache.get(2, 2, 3).unwrap().clone();
            check(&[x.clone()], |t, v| t.cg(v[0], v[0], self_blk.clone()).unwrap(), trial);
            let z = (rand_vec(&mut rng, 2 * 2 * 5, -1.0, 1.0), [2, 2, 5]);
            check(&[x.clone(), z.clone()], |t, v| t.concat(&[v[0], v[1], v[0]]).unwrap(), trial);
            check(&[x.clone()], |t, v| t.slice(v[0], 1, 2).unwrap(), trial);
            check(&[x.clone()], |t, v| t.pad(v[0], 5).unwrap(), trial);
        }
    }
}
