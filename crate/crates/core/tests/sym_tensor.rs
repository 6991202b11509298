use polariton::sym::{axis, flop_count, flop_count_layout, AxisDims, BlockedTensor};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Naive dense einsum used as the oracle.
fn dense_einsum(spec: &str, a: &[f64], ad: &[usize], b: &[f64], bd: &[usize]) -> (Vec<f64>, Vec<usize>) {
    let (lhs, rhs) = spec.split_once("->").unwrap();
    let (sa, sb) = lhs.split_once(',').unwrap();
    let la: Vec<char> = sa.chars().collect();
    let lb: Vec<char> = sb.chars().collect();
    let lc: Vec<char> = rhs.chars().collect();
    let mut labels: Vec<char> = la.iter().chain(&lb).copied().collect();
    labels.sort();
    labels.dedup();
    let dim = |x: char| {
        if let Some(p) = la.iter().position(|&y| y == x) {
            ad[p]
        } else {
            bd[lb.iter().position(|&y| y == x).unwrap()]
        }
    };
    let dims: Vec<usize> = labels.iter().map(|&x| dim(x)).collect();
    let cd: Vec<usize> = lc.iter().map(|&x| dim(x)).collect();
    let mut c = vec![0.0; cd.iter().product()];
    let total: usize = dims.iter().product();
    let flat = |l: &[char], d: &[usize], v: &[usize]| {
        let mut o = 0;
        for (k, x) in l.iter().enumerate() {
            o = o * d[k] + v[labels.iter().position(|y| y == x).unwrap()];
        }
        o
    };
    let mut v = vec![0usize; labels.len()];
    for lin in 0..total {
        let mut r = lin;
        for k in (0..labels.len()).rev() {
            v[k] = r % dims[k];
            r /= dims[k];
        }
        c[flat(&lc, &cd, &v)] += a[flat(&la, ad, &v)] * b[flat(&lb, bd, &v)];
    }
    (c, cd)
}

fn random_tensor(rng: &mut ChaCha8Rng, h: usize, axes: Vec<AxisDims>, target: u8) -> BlockedTensor {
    let z = BlockedTensor::filled(h, axes, target);
    let flat: Vec<f64> = (0..z.allowed_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    z.from_flat_like(&flat)
}

fn rand_axis(rng: &mut ChaCha8Rng, h: usize) -> AxisDims {
    axis(&(0..h).map(|_| rng.gen_range(0..3)).collect::<Vec<_>>())
}

fn check(spec: &str, seed: u64, h: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lhs, _) = spec.split_once("->").unwrap();
    let (sa, sb) = lhs.split_once(',').unwrap();
    let mut dims = std::collections::HashMap::new();
    for ch in sa.chars().chain(sb.chars()) {
        dims.entry(ch).or_insert_with(|| rand_axis(&mut rng, h));
    }
    let ax_a: Vec<AxisDims> = sa.chars().map(|c| dims[&c].clone()).collect();
    let ax_b: Vec<AxisDims> = sb.chars().map(|c| dims[&c].clone()).collect();
    let ta = rng.gen_range(0..h) as u8;
    let tb = rng.gen_range(0..h) as u8;
    let a = random_tensor(&mut rng, h, ax_a, ta);
    let b = random_tensor(&mut rng, h, ax_b, tb);
    let c = a.contract(&b, spec);
    assert_eq!(c.target(), ta ^ tb);
    let (cref, _) = dense_einsum(spec, &a.to_dense(), &a.dense_dims(), &b.to_dense(), &b.dense_dims());
    let cd = c.to_dense();
    let scale = cref.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    for (x, y) in cd.iter().zip(&cref) {
        assert!((x - y).abs() <= 1e-13 * scale, "{spec}: {x} vs {y}");
    }
}

#[test]
fn d2h_four_by_two_matches_dense() {
    for seed in 0..20 {
        check("abij,jk->abik", seed, 8);
        check("abef,efij->abij", seed + 100, 8);
        check("ai,bj->abij", seed + 200, 8);
        check("mnef,efij->mnij", seed + 300, 4);
        check("abij,abij->", seed + 400, 8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn blocked_equals_dense(seed in 0u64..10_000, hsel in 0usize..4, which in 0usize..5) {
        let h = [1usize, 2, 4, 8][hsel];
        let spec = ["amie,ej->amij", "ab,bc->ac", "pqrs,qs->pr", "iajb,jb->ia", "a,b->ab"][which];
        check(spec, seed, h);
    }

    #[test]
    fn permute_round_trip(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let axes: Vec<AxisDims> = (0..4).map(|_| rand_axis(&mut rng, 8)).collect();
        let t = random_tensor(&mut rng, 8, axes, 3);
        let p = t.permute(&[2, 0, 3, 1]).permute(&[1, 3, 0, 2]);
        prop_assert_eq!(p.to_dense(), t.to_dense());
    }
}

#[test]
fn batch_labels_rejected() {
    let d = axis(&[2, 2]);
    let a = BlockedTensor::from_fn(2, vec![d.clone(), d.clone()], 0, |_| 1.0);
    assert!(a.try_contract(&a, "ai,ai->ai").is_err());
    assert!(a.try_contract(&a, "ai,bj->ab").is_err());
}

#[test]
fn identity_contraction_is_noop() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = axis(&[2, 1, 3, 0, 1, 2, 2, 1]);
    let id = BlockedTensor::from_fn(8, vec![d.clone(), d.clone()], 0, |i| if i[0] == i[1] { 1.0 } else { 0.0 });
    let t = random_tensor(&mut rng, 8, vec![d.clone(), d.clone(), d.clone()], 5);
    let r = id.contract(&t, "pq,qrs->prs");
    assert_eq!(r.to_dense(), t.to_dense());
}

#[test]
fn zero_operand_gives_zero() {
    let d = axis(&[2, 2]);
    let a = BlockedTensor::from_fn(2, vec![d.clone(), d.clone()], 0, |_| 1.0);
    let b = BlockedTensor::zeros(2, vec![d.clone(), d.clone()], 1);
    let c = a.contract(&b, "pq,qr->pr");
    assert_eq!(c.max_abs(), 0.0);
    assert_eq!(flop_count("pq,qr->pr", &a, &b).unwrap(), 0);
}

#[test]
fn flop_counts() {
    // C1: full dense count
    let v = axis(&[12]);
    let o = axis(&[4]);
    let full = flop_count_layout("abef,efij->abij", 1, &[v.clone(), v.clone(), v.clone(), v.clone()], 0, &[v.clone(), v.clone(), o.clone(), o.clone()], 0).unwrap();
    assert_eq!(full, 12u64.pow(4) * 16);
    // D2h with balanced irreps: close to dense / h^2
    let v8 = axis(&[3; 8]);
    let o8 = axis(&[1; 8]);
    let v24 = axis(&[24]);
    let o8d = axis(&[8]);
    let dense = flop_count_layout("abef,efij->abij", 1, &[v24.clone(), v24.clone(), v24.clone(), v24.clone()], 0, &[v24.clone(), v24.clone(), o8d.clone(), o8d.clone()], 0).unwrap();
    let blocked = flop_count_layout("abef,efij->abij", 8, &[v8.clone(), v8.clone(), v8.clone(), v8.clone()], 0, &[v8.clone(), v8.clone(), o8.clone(), o8.clone()], 0).unwrap();
    let ratio = dense as f64 / blocked as f64;
    assert!((ratio - 64.0).abs() < 1e-9, "ratio {ratio}");
    let empty = BlockedTensor::zeros(8, vec![v8.clone()], 0);
    assert_eq!(flop_count("a,a->", &empty, &empty).unwrap(), 0);
}

#[test]
fn contraction_is_deterministic_across_threads() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let d = axis(&[3, 2, 2, 1, 2, 3, 1, 2]);
    let a = random_tensor(&mut rng, 8, vec![d.clone(); 4], 0);
    let b = random_tensor(&mut rng, 8, vec![d.clone(); 4], 6);
    let r1 = a.contract(&b, "abef,efij->abij").to_dense();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let r2 = pool.install(|| a.contract(&b, "abef,efij->abij").to_dense());
    assert_eq!(r1, r2);
}
