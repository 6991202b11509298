//! Dense row-major helpers used inside blocks.

/// Row-major strides for `shape`.
pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

/// Returns `out` with `out[i_0..i_r] = src[i_perm...]`, i.e. axis `k` of the
/// output is axis `perm[k]` of the source.
pub fn permute(src: &[f64], shape: &[usize], perm: &[usize]) -> Vec<f64> {
    let rank = shape.len();
    debug_assert_eq!(perm.len(), rank);
    if perm.iter().enumerate().all(|(k, &p)| k == p) {
        return src.to_vec();
    }
    let n: usize = shape.iter().product();
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    let sst = strides(shape);
    let oshape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    let ostep: Vec<usize> = perm.iter().map(|&p| sst[p]).collect();
    let last = rank - 1;
    let inner = oshape[last];
    let istep = ostep[last];
    let mut idx = vec![0usize; rank];
    let mut base = 0usize;
    let mut pos = 0usize;
    loop {
        let mut s = base;
        for o in &mut out[pos..pos + inner] {
            *o = src[s];
            s += istep;
        }
        pos += inner;
        if pos >= n {
            break;
        }
        // odometer over all axes but the last
        let mut k = last;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            base += ostep[k];
            if idx[k] < oshape[k] {
                break;
            }
            base -= ostep[k] * idx[k];
            idx[k] = 0;
        }
    }
    out
}

/// `c[b] += a[b] * bm[b]` for `nb` stacked (m×k)·(k×n) products.
pub fn batched_gemm_acc(nb: usize, m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    if m == 0 || n == 0 {
        return;
    }
    for t in 0..nb {
        let ap = &a[t * m * k..(t + 1) * m * k];
        let bp = &b[t * k * n..(t + 1) * k * n];
        let cp = &mut c[t * m * n..(t + 1) * m * n];
        if k == 0 {
            continue;
        }
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                ap.as_ptr(),
                k as isize,
                1,
                bp.as_ptr(),
                n as isize,
                1,
                1.0,
                cp.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }
}
