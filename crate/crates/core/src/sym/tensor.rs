//! Irrep-blocked dense tensors with the direct-product constraint.
//!
//! Each axis is split into `h` irrep segments. A block with irrep tuple
//! `(g_0, .., g_{r-1})` may only be stored when `g_0 ^ .. ^ g_{r-1}` equals
//! the tensor's target irrep. Absent blocks read as zero.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rayon::prelude::*;

use super::dense;
use crate::error::{Error, Result};

pub type Key = Vec<u8>;

/// Per-irrep segment lengths of one axis.
pub type AxisDims = Arc<Vec<usize>>;

static FLOPS: AtomicU64 = AtomicU64::new(0);

/// Multiply-add count accumulated by all contractions since the last reset.
pub fn flop_counter() -> u64 {
    FLOPS.load(Ordering::Relaxed)
}

pub fn reset_flop_counter() {
    FLOPS.store(0, Ordering::Relaxed);
}

#[derive(Clone, Debug)]
pub struct BlockedTensor {
    h: usize,
    axes: Vec<AxisDims>,
    target: u8,
    blocks: BTreeMap<Key, Vec<f64>>,
}

fn key_irrep(key: &[u8]) -> u8 {
    key.iter().fold(0, |a, &b| a ^ b)
}

/// Enumerates all irrep tuples of `rank` axes with product `target`.
pub fn allowed_keys(h: usize, axes: &[AxisDims], target: u8) -> Vec<Key> {
    let rank = axes.len();
    let mut out = Vec::new();
    if rank == 0 {
        if target == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    let total = h.pow(rank as u32 - 1);
    for code in 0..total {
        let mut key = Vec::with_capacity(rank);
        let mut c = code;
        for _ in 0..rank - 1 {
            key.push((c % h) as u8);
            c /= h;
        }
        key.reverse();
        let last = target ^ key_irrep(&key);
        key.push(last);
        if key.iter().zip(axes).all(|(&g, ax)| ax[g as usize] > 0) {
            out.push(key);
        }
    }
    out.sort();
    out
}

impl BlockedTensor {
    /// Empty tensor (all blocks absent, reads as zero).
    pub fn zeros(h: usize, axes: Vec<AxisDims>, target: u8) -> Self {
        assert!(h.is_power_of_two() && h <= 8);
        for ax in &axes {
            assert_eq!(ax.len(), h, "axis must list one length per irrep");
        }
        assert!((target as usize) < h);
        BlockedTensor { h, axes, target, blocks: BTreeMap::new() }
    }

    /// Tensor with every allowed block materialized as zeros.
    pub fn filled(h: usize, axes: Vec<AxisDims>, target: u8) -> Self {
        let mut t = Self::zeros(h, axes, target);
        for key in allowed_keys(h, &t.axes, target) {
            let n = t.block_len(&key);
            t.blocks.insert(key, vec![0.0; n]);
        }
        t
    }

    pub fn scalar(h: usize, value: f64) -> Self {
        let mut t = Self::zeros(h, Vec::new(), 0);
        t.blocks.insert(Vec::new(), vec![value]);
        t
    }

    pub fn h(&self) -> usize {
        self.h
    }
    pub fn rank(&self) -> usize {
        self.axes.len()
    }
    pub fn axes(&self) -> &[AxisDims] {
        &self.axes
    }
    pub fn target(&self) -> u8 {
        self.target
    }
    pub fn blocks(&self) -> &BTreeMap<Key, Vec<f64>> {
        &self.blocks
    }

    pub fn block_shape(&self, key: &[u8]) -> Vec<usize> {
        key.iter().zip(&self.axes).map(|(&g, ax)| ax[g as usize]).collect()
    }

    fn block_len(&self, key: &[u8]) -> usize {
        self.block_shape(key).iter().product()
    }

    pub fn same_layout(&self, o: &Self) -> bool {
        self.h == o.h && self.target == o.target && self.axes == o.axes
    }

    /// Total dense dimension of each axis.
    pub fn dense_dims(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.iter().sum()).collect()
    }

    /// Number of elements in all allowed blocks.
    pub fn allowed_len(&self) -> usize {
        allowed_keys(self.h, &self.axes, self.target)
            .iter()
            .map(|k| self.block_len(k))
            .sum()
    }

    pub fn block(&self, key: &[u8]) -> Option<&[f64]> {
        self.blocks.get(key).map(|v| v.as_slice())
    }

    /// Mutable block, materialized on first access.
    pub fn block_mut(&mut self, key: &[u8]) -> &mut Vec<f64> {
        assert_eq!(key_irrep(key), self.target, "block violates the product constraint");
        let n = self.block_len(key);
        self.blocks.entry(key.to_vec()).or_insert_with(|| vec![0.0; n])
    }

    pub fn insert_block(&mut self, key: Key, data: Vec<f64>) {
        assert_eq!(key_irrep(&key), self.target, "block violates the product constraint");
        assert_eq!(data.len(), self.block_len(&key));
        self.blocks.insert(key, data);
    }

    /// Splits a dense axis index into (irrep, offset within irrep).
    pub fn locate(&self, axis: usize, mut i: usize) -> (u8, usize) {
        for (g, &n) in self.axes[axis].iter().enumerate() {
            if i < n {
                return (g as u8, i);
            }
            i -= n;
        }
        panic!("index out of range on axis {axis}");
    }

    fn offset_in_block(&self, key: &[u8], local: &[usize]) -> usize {
        let shape = self.block_shape(key);
        let mut off = 0;
        for (k, &l) in local.iter().enumerate() {
            off = off * shape[k] + l;
        }
        off
    }

    /// Element at dense indices; zero outside stored blocks.
    pub fn get(&self, idx: &[usize]) -> f64 {
        let (key, local): (Vec<u8>, Vec<usize>) =
            idx.iter().enumerate().map(|(a, &i)| self.locate(a, i)).unzip();
        match self.blocks.get(&key) {
            Some(b) => b[self.offset_in_block(&key, &local)],
            None => 0.0,
        }
    }

    /// Sets an element; panics if the element is forbidden by symmetry.
    pub fn set(&mut self, idx: &[usize], v: f64) {
        let (key, local): (Vec<u8>, Vec<usize>) =
            idx.iter().enumerate().map(|(a, &i)| self.locate(a, i)).unzip();
        let off = self.offset_in_block(&key, &local);
        self.block_mut(&key)[off] = v;
    }

    /// Whether the element at `idx` is allowed by the product constraint.
    pub fn allowed(&self, idx: &[usize]) -> bool {
        let g = idx.iter().enumerate().fold(0u8, |acc, (a, &i)| acc ^ self.locate(a, i).0);
        g == self.target
    }

    /// Visits every element of every allowed block with its dense index.
    pub fn for_each_allowed(&self, mut f: impl FnMut(&[usize], &Key, usize)) {
        let rank = self.rank();
        let offsets: Vec<Vec<usize>> = self
            .axes
            .iter()
            .map(|ax| {
                let mut o = vec![0; ax.len()];
                for g in 1..ax.len() {
                    o[g] = o[g - 1] + ax[g - 1];
                }
                o
            })
            .collect();
        for key in allowed_keys(self.h, &self.axes, self.target) {
            let shape = self.block_shape(&key);
            let n: usize = shape.iter().product();
            let mut local = vec![0usize; rank];
            let mut idx = vec![0usize; rank];
            for lin in 0..n {
                let mut r = lin;
                for k in (0..rank).rev() {
                    local[k] = r % shape[k];
                    r /= shape[k];
                    idx[k] = offsets[k][key[k] as usize] + local[k];
                }
                f(&idx, &key, lin);
            }
        }
    }

    /// Builds a tensor from a generator over dense indices (allowed blocks only).
    pub fn from_fn(h: usize, axes: Vec<AxisDims>, target: u8, f: impl Fn(&[usize]) -> f64) -> Self {
        let mut t = Self::filled(h, axes, target);
        let mut vals: Vec<(Key, usize, f64)> = Vec::new();
        t.for_each_allowed(|idx, key, lin| vals.push((key.clone(), lin, f(idx))));
        for (key, lin, v) in vals {
            t.blocks.get_mut(&key).unwrap()[lin] = v;
        }
        t
    }

    /// Dense row-major copy over the full index space.
    pub fn to_dense(&self) -> Vec<f64> {
        let dims = self.dense_dims();
        let st = dense::strides(&dims);
        let mut out = vec![0.0; dims.iter().product()];
        self.for_each_allowed(|idx, key, lin| {
            if let Some(b) = self.blocks.get(key) {
                let p: usize = idx.iter().zip(&st).map(|(i, s)| i * s).sum();
                out[p] = b[lin];
            }
        });
        out
    }

    /// Embeds a dense array; elements outside allowed blocks are dropped.
    pub fn from_dense(h: usize, axes: Vec<AxisDims>, target: u8, data: &[f64]) -> Self {
        let dims: Vec<usize> = axes.iter().map(|a| a.iter().sum()).collect();
        let st = dense::strides(&dims);
        Self::from_fn(h, axes, target, |idx| {
            data[idx.iter().zip(&st).map(|(i, s)| i * s).sum::<usize>()]
        })
    }

    /// Largest magnitude of a dense element that `from_dense` would drop.
    pub fn forbidden_norm(h: usize, axes: &[AxisDims], target: u8, data: &[f64]) -> f64 {
        let probe = Self::zeros(h, axes.to_vec(), target);
        let dims = probe.dense_dims();
        let n: usize = dims.iter().product();
        let mut worst: f64 = 0.0;
        let mut idx = vec![0usize; dims.len()];
        for (lin, v) in data.iter().enumerate().take(n) {
            let mut r = lin;
            for k in (0..dims.len()).rev() {
                idx[k] = r % dims[k];
                r /= dims[k];
            }
            if !probe.allowed(&idx) {
                worst = worst.max(v.abs());
            }
        }
        worst
    }

    fn check_layout(&self, o: &Self) -> Result<()> {
        if !self.same_layout(o) {
            return Err(Error::Shape(format!(
                "layout mismatch: target {} vs {}, rank {} vs {}",
                self.target,
                o.target,
                self.rank(),
                o.rank()
            )));
        }
        Ok(())
    }

    /// `self += a * o`.
    pub fn axpy(&mut self, a: f64, o: &Self) {
        self.check_layout(o).expect("axpy");
        for (k, v) in &o.blocks {
            let n = v.len();
            let dst = self.blocks.entry(k.clone()).or_insert_with(|| vec![0.0; n]);
            for (d, s) in dst.iter_mut().zip(v) {
                *d += a * s;
            }
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        r.axpy(1.0, o);
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut r = self.clone();
        r.axpy(-1.0, o);
        r
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut r = self.clone();
        r.scale_mut(a);
        r
    }

    pub fn scale_mut(&mut self, a: f64) {
        for v in self.blocks.values_mut() {
            v.iter_mut().for_each(|x| *x *= a);
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.h, self.axes.clone(), self.target)
    }

    pub fn dot(&self, o: &Self) -> f64 {
        self.check_layout(o).expect("dot");
        let mut s = 0.0;
        for (k, v) in &self.blocks {
            if let Some(w) = o.blocks.get(k) {
                s += v.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        s
    }

    pub fn norm2(&self) -> f64 {
        self.blocks.values().flat_map(|v| v.iter()).map(|x| x * x).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.values().flat_map(|v| v.iter()).fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Value of a rank-0 tensor (zero when the block is absent).
    pub fn scalar_value(&self) -> f64 {
        assert_eq!(self.rank(), 0);
        self.blocks.get(&Vec::new()).map(|v| v[0]).unwrap_or(0.0)
    }

    /// Elementwise map over stored elements with their dense indices.
    pub fn map_indexed(&self, f: impl Fn(&[usize], f64) -> f64) -> Self {
        let mut r = Self::filled(self.h, self.axes.clone(), self.target);
        let mut vals: Vec<(Key, usize, f64)> = Vec::new();
        r.for_each_allowed(|idx, key, lin| {
            let v = self.blocks.get(key).map(|b| b[lin]).unwrap_or(0.0);
            vals.push((key.clone(), lin, f(idx, v)));
        });
        for (key, lin, v) in vals {
            r.blocks.get_mut(&key).unwrap()[lin] = v;
        }
        r
    }

    /// Flattens all allowed blocks (zeros for absent ones) in key order.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.allowed_len());
        for key in allowed_keys(self.h, &self.axes, self.target) {
            match self.blocks.get(&key) {
                Some(b) => out.extend_from_slice(b),
                None => out.extend(std::iter::repeat(0.0).take(self.block_len(&key))),
            }
        }
        out
    }

    /// Inverse of [`to_flat`](Self::to_flat) using this tensor's layout.
    pub fn from_flat_like(&self, flat: &[f64]) -> Self {
        let mut r = self.zeros_like();
        let mut p = 0;
        for key in allowed_keys(self.h, &self.axes, self.target) {
            let n = self.block_len(&key);
            r.blocks.insert(key, flat[p..p + n].to_vec());
            p += n;
        }
        assert_eq!(p, flat.len());
        r
    }

    /// Reorders axes: axis `k` of the result is axis `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.rank());
        let axes = perm.iter().map(|&p| self.axes[p].clone()).collect();
        let mut r = Self::zeros(self.h, axes, self.target);
        for (k, v) in &self.blocks {
            let shape = self.block_shape(k);
            let nk: Key = perm.iter().map(|&p| k[p]).collect();
            r.blocks.insert(nk, dense::permute(v, &shape, perm));
        }
        r
    }

    /// Binary contraction described by an einsum string such as `"abef,efij->abij"`.
    pub fn contract(&self, o: &Self, spec: &str) -> Self {
        self.try_contract(o, spec).unwrap_or_else(|e| panic!("contract {spec}: {e}"))
    }

    pub fn try_contract(&self, o: &Self, spec: &str) -> Result<Self> {
        let plan = Plan::parse(spec, self.rank(), o.rank())?;
        plan.run(self, o, true)
    }
}

/// Parsed einsum plan for a binary contraction.
#[derive(Clone, Debug)]
pub struct Plan {
    a: Vec<char>,
    b: Vec<char>,
    c: Vec<char>,
    batch: Vec<char>,
    con: Vec<char>,
    fa: Vec<char>,
    fb: Vec<char>,
}

impl Plan {
    pub fn parse(spec: &str, ra: usize, rb: usize) -> Result<Plan> {
        let bad = |m: &str| Error::Shape(format!("bad contraction '{spec}': {m}"));
        let (lhs, rhs) = spec.split_once("->").ok_or_else(|| bad("missing ->"))?;
        let (sa, sb) = lhs.split_once(',').ok_or_else(|| bad("need two operands"))?;
        let a: Vec<char> = sa.trim().chars().collect();
        let b: Vec<char> = sb.trim().chars().collect();
        let c: Vec<char> = rhs.trim().chars().collect();
        if a.len() != ra || b.len() != rb {
            return Err(bad("rank mismatch"));
        }
        for s in [&a, &b, &c] {
            let mut u = s.clone();
            u.sort();
            u.dedup();
            if u.len() != s.len() {
                return Err(bad("repeated label within an operand"));
            }
        }
        let in_a = |x: &char| a.contains(x);
        let in_b = |x: &char| b.contains(x);
        let in_c = |x: &char| c.contains(x);
        for x in a.iter().chain(&b).chain(&c) {
            let n = in_a(x) as u8 + in_b(x) as u8 + in_c(x) as u8;
            if n != 2 {
                // A label shared by all three operands would make the output
                // target depend on the block, which the product constraint forbids.
                return Err(bad("each label must appear in exactly two operands"));
            }
        }
        let batch = c.iter().copied().filter(|x| in_a(x) && in_b(x)).collect();
        let con = a.iter().copied().filter(|x| in_b(x) && !in_c(x)).collect();
        let fa = c.iter().copied().filter(|x| in_a(x) && !in_b(x)).collect();
        let fb = c.iter().copied().filter(|x| in_b(x) && !in_a(x)).collect();
        Ok(Plan { a, b, c, batch, con, fa, fb })
    }

    fn pos(list: &[char], x: char) -> usize {
        list.iter().position(|&y| y == x).unwrap()
    }

    /// Multiply-add count for contracting the stored blocks of `a` and `b`.
    pub fn flops(&self, a: &BlockedTensor, b: &BlockedTensor) -> u64 {
        self.jobs(a, b)
            .map(|jobs| {
                jobs.values()
                    .flat_map(|v| v.iter())
                    .map(|(ka, kb)| self.job_flops(a, b, ka, kb))
                    .sum()
            })
            .unwrap_or(0)
    }

    fn job_flops(&self, a: &BlockedTensor, b: &BlockedTensor, ka: &[u8], kb: &[u8]) -> u64 {
        let sa = a.block_shape(ka);
        let sb = b.block_shape(kb);
        let da = |x: char| sa[Self::pos(&self.a, x)] as u64;
        let db = |x: char| sb[Self::pos(&self.b, x)] as u64;
        let nb: u64 = self.batch.iter().map(|&x| da(x)).product();
        let m: u64 = self.fa.iter().map(|&x| da(x)).product();
        let k: u64 = self.con.iter().map(|&x| da(x)).product();
        let n: u64 = self.fb.iter().map(|&x| db(x)).product();
        nb * m * k * n
    }

    #[allow(clippy::type_complexity)]
    fn jobs(&self, a: &BlockedTensor, b: &BlockedTensor) -> Result<BTreeMap<Key, Vec<(Key, Key)>>> {
        if a.h != b.h {
            return Err(Error::Shape("group order mismatch".into()));
        }
        for x in self.batch.iter().chain(&self.con) {
            if a.axes[Self::pos(&self.a, *x)] != b.axes[Self::pos(&self.b, *x)] {
                return Err(Error::Shape(format!("dimension mismatch on label '{x}'")));
            }
        }
        let shared: Vec<char> = self.batch.iter().chain(&self.con).copied().collect();
        let mut bmap: HashMap<Key, Vec<&Key>> = HashMap::new();
        for kb in b.blocks.keys() {
            let s: Key = shared.iter().map(|&x| kb[Self::pos(&self.b, x)]).collect();
            bmap.entry(s).or_default().push(kb);
        }
        let mut jobs: BTreeMap<Key, Vec<(Key, Key)>> = BTreeMap::new();
        for ka in a.blocks.keys() {
            let s: Key = shared.iter().map(|&x| ka[Self::pos(&self.a, x)]).collect();
            if let Some(list) = bmap.get(&s) {
                for kb in list {
                    let kc: Key = self
                        .c
                        .iter()
                        .map(|&x| {
                            if let Some(p) = self.a.iter().position(|&y| y == x) {
                                ka[p]
                            } else {
                                kb[Self::pos(&self.b, x)]
                            }
                        })
                        .collect();
                    jobs.entry(kc).or_default().push((ka.clone(), (*kb).clone()));
                }
            }
        }
        Ok(jobs)
    }

    pub fn run(&self, a: &BlockedTensor, b: &BlockedTensor, count: bool) -> Result<BlockedTensor> {
        let jobs = self.jobs(a, b)?;
        let axes: Vec<AxisDims> = self
            .c
            .iter()
            .map(|&x| {
                if let Some(p) = self.a.iter().position(|&y| y == x) {
                    a.axes[p].clone()
                } else {
                    b.axes[Self::pos(&self.b, x)].clone()
                }
            })
            .collect();
        let target = a.target ^ b.target;
        let perm_a: Vec<usize> = self
            .batch
            .iter()
            .chain(&self.fa)
            .chain(&self.con)
            .map(|&x| Self::pos(&self.a, x))
            .collect();
        let perm_b: Vec<usize> = self
            .batch
            .iter()
            .chain(&self.con)
            .chain(&self.fb)
            .map(|&x| Self::pos(&self.b, x))
            .collect();
        let inter: Vec<char> = self.batch.iter().chain(&self.fa).chain(&self.fb).copied().collect();
        let perm_c: Vec<usize> = self.c.iter().map(|&x| Self::pos(&inter, x)).collect();

        let job_list: Vec<(Key, Vec<(Key, Key)>)> = jobs.into_iter().collect();
        let results: Vec<(Key, Vec<f64>, u64)> = job_list
            .par_iter()
            .map(|(kc, pairs)| {
                let mut buf: Vec<f64> = Vec::new();
                let mut inter_shape: Vec<usize> = Vec::new();
                let mut flops = 0u64;
                for (ka, kb) in pairs {
                    let sa = a.block_shape(ka);
                    let sb = b.block_shape(kb);
                    let da = |x: char| sa[Self::pos(&self.a, x)];
                    let db = |x: char| sb[Self::pos(&self.b, x)];
                    let nb: usize = self.batch.iter().map(|&x| da(x)).product();
                    let m: usize = self.fa.iter().map(|&x| da(x)).product();
                    let k: usize = self.con.iter().map(|&x| da(x)).product();
                    let n: usize = self.fb.iter().map(|&x| db(x)).product();
                    if buf.is_empty() {
                        inter_shape = self
                            .batch
                            .iter()
                            .map(|&x| da(x))
                            .chain(self.fa.iter().map(|&x| da(x)))
                            .chain(self.fb.iter().map(|&x| db(x)))
                            .collect();
                        buf = vec![0.0; nb * m * n];
                    }
                    let ap = dense::permute(a.blocks[ka].as_slice(), &sa, &perm_a);
                    let bp = dense::permute(b.blocks[kb].as_slice(), &sb, &perm_b);
                    dense::batched_gemm_acc(nb, m, k, n, &ap, &bp, &mut buf);
                    flops += (nb * m * k * n) as u64;
                }
                let out = dense::permute(&buf, &inter_shape, &perm_c);
                (kc.clone(), out, flops)
            })
            .collect();
        let mut c = BlockedTensor::zeros(a.h, axes, target);
        let mut total = 0;
        for (kc, data, fl) in results {
            total += fl;
            c.blocks.insert(kc, data);
        }
        if count {
            FLOPS.fetch_add(total, Ordering::Relaxed);
        }
        Ok(c)
    }
}

/// Multiply-add count of `spec` over the stored blocks of `a` and `b`.
pub fn flop_count(spec: &str, a: &BlockedTensor, b: &BlockedTensor) -> Result<u64> {
    Ok(Plan::parse(spec, a.rank(), b.rank())?.flops(a, b))
}

/// Same as [`flop_count`] but for fully populated tensors of the given layouts.
pub fn flop_count_layout(
    spec: &str,
    h: usize,
    a_axes: &[AxisDims],
    a_target: u8,
    b_axes: &[AxisDims],
    b_target: u8,
) -> Result<u64> {
    let a = BlockedTensor::filled(h, a_axes.to_vec(), a_target);
    let b = BlockedTensor::filled(h, b_axes.to_vec(), b_target);
    flop_count(spec, &a, &b)
}

pub fn axis(dims: &[usize]) -> AxisDims {
    Arc::new(dims.to_vec())
}
