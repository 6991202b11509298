//! Packed storage for a pair of equivalent axes.
//!
//! Antisymmetric pairs keep `p < q`, symmetric pairs keep `p <= q`.

#[derive(Clone, Debug)]
pub struct PackedPairAxis {
    n: usize,
    antisym: bool,
    pairs: Vec<(usize, usize)>,
}

impl PackedPairAxis {
    pub fn new(n: usize, antisym: bool) -> Self {
        let mut pairs = Vec::new();
        for q in 0..n {
            for p in 0..n {
                if (antisym && p < q) || (!antisym && p <= q) {
                    pairs.push((p, q));
                }
            }
        }
        PackedPairAxis { n, antisym, pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
    pub fn antisymmetric(&self) -> bool {
        self.antisym
    }
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Packed position and sign of the full index pair `(p, q)`.
    pub fn index(&self, p: usize, q: usize) -> Option<(usize, f64)> {
        let (lo, hi, s) = if p <= q { (p, q, 1.0) } else { (q, p, if self.antisym { -1.0 } else { 1.0 }) };
        if self.antisym && lo == hi {
            return None;
        }
        let col = if self.antisym { hi * (hi - 1) / 2 } else { hi * (hi + 1) / 2 };
        Some((col + lo, s))
    }

    /// Packs an `n × n` row-major matrix.
    pub fn pack(&self, full: &[f64]) -> Vec<f64> {
        self.pairs.iter().map(|&(p, q)| full[p * self.n + q]).collect()
    }

    /// Unpacks into an `n × n` row-major matrix.
    pub fn unpack(&self, packed: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut full = vec![0.0; n * n];
        for (k, &(p, q)) in self.pairs.iter().enumerate() {
            full[p * n + q] = packed[k];
            full[q * n + p] = if self.antisym { -packed[k] } else { packed[k] };
        }
        full
    }

    /// Packs a doubly antisymmetric 4-index array `t[a,b,i,j]` (dims `n×n×m×m`).
    pub fn pack4(&self, other: &PackedPairAxis, full: &[f64]) -> Vec<f64> {
        let (n, m) = (self.n, other.n);
        let mut out = Vec::with_capacity(self.len() * other.len());
        for &(a, b) in &self.pairs {
            for &(i, j) in &other.pairs {
                out.push(full[((a * n + b) * m + i) * m + j]);
            }
        }
        out
    }

    pub fn unpack4(&self, other: &PackedPairAxis, packed: &[f64]) -> Vec<f64> {
        let (n, m) = (self.n, other.n);
        let mut full = vec![0.0; n * n * m * m];
        let sa = if self.antisym { -1.0 } else { 1.0 };
        let si = if other.antisym { -1.0 } else { 1.0 };
        let mut k = 0;
        for &(a, b) in &self.pairs {
            for &(i, j) in &other.pairs {
                let v = packed[k];
                k += 1;
                full[((a * n + b) * m + i) * m + j] = v;
                full[((b * n + a) * m + i) * m + j] = sa * v;
                full[((a * n + b) * m + j) * m + i] = si * v;
                full[((b * n + a) * m + j) * m + i] = sa * si * v;
            }
        }
        full
    }
}
