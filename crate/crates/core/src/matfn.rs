//! Exponential-time matrix functionals: permanent, hafnian, and the
//! 2-determinant (α-determinant at α = 2), plus pair-partition enumeration
//! with crossing counts.
//!
//! Fast paths are Gray-code subset iteration for the permanent and memoized
//! edge contraction for the hafnian; brute-force enumerations live in the
//! test module as oracles.

use std::collections::HashMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cr, czero, max_abs, CMat};

/// A perfect matching of {0, …, 2n−1}; each pair is stored smaller-first and
/// the pair list is ordered by first element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairPartition {
    pairs: Vec<(usize, usize)>,
}

impl PairPartition {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Number of crossing pairs: {i_k, j_k}, {i_l, j_l} with
    /// i_k < i_l < j_k < j_l.
    pub fn crossings(&self) -> usize {
        let mut count = 0;
        for (a, &(i1, j1)) in self.pairs.iter().enumerate() {
            for &(i2, j2) in &self.pairs[a + 1..] {
                let (lo, hi) = if i1 < i2 { ((i1, j1), (i2, j2)) } else { ((i2, j2), (i1, j1)) };
                if lo.0 < hi.0 && hi.0 < lo.1 && lo.1 < hi.1 {
                    count += 1;
                }
            }
        }
        count
    }
}

/// Enumerates all (2n−1)!! pair partitions of {0, …, two_n−1} together with
/// their crossing counts.
pub fn pair_partitions(two_n: usize) -> Result<Vec<(PairPartition, usize)>> {
    if two_n == 0 || two_n % 2 != 0 {
        return Err(Error::Domain(format!(
            "pair partitions need a positive even count of points, got {}",
            two_n
        )));
    }
    let mut out = Vec::new();
    let mut used = vec![false; two_n];
    let mut pairs = Vec::with_capacity(two_n / 2);
    fn rec(
        used: &mut Vec<bool>,
        pairs: &mut Vec<(usize, usize)>,
        out: &mut Vec<(PairPartition, usize)>,
    ) {
        let Some(first) = used.iter().position(|u| !u) else {
            let p = PairPartition { pairs: pairs.clone() };
            let c = p.crossings();
            out.push((p, c));
            return;
        };
        used[first] = true;
        for j in first + 1..used.len() {
            if !used[j] {
                used[j] = true;
                pairs.push((first, j));
                rec(used, pairs, out);
                pairs.pop();
                used[j] = false;
            }
        }
        used[first] = false;
    }
    rec(&mut used, &mut pairs, &mut out);
    Ok(out)
}

fn square_dim(m: &CMat, guard: usize, what: &str) -> Result<usize> {
    let (r, c) = m.dim();
    if r != c {
        return Err(Error::Domain(format!("{} needs a square matrix, got {}×{}", what, r, c)));
    }
    if r == 0 {
        return Err(Error::Domain(format!("{} needs dimension ≥ 1", what)));
    }
    if r > guard {
        return Err(Error::Capacity(format!(
            "{} guard: dimension {} exceeds the supported maximum {}",
            what, r, guard
        )));
    }
    Ok(r)
}

/// per(M) = Σ_π Π_i M[i][π(i)] via Ryser's subset-sum formula walked in
/// Gray-code order, O(2ⁿ·n). Dimension guard n ≤ 20.
pub fn permanent(m: &CMat) -> Result<C64> {
    let n = square_dim(m, 20, "permanent")?;
    // per(M) = (−1)ⁿ Σ_{∅≠S} (−1)^{|S|} Π_i Σ_{j∈S} M[i][j]
    let mut row_sums = vec![czero(); n];
    let mut acc = czero();
    let mut gray_prev: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let gray = k ^ (k >> 1);
        let changed = (gray ^ gray_prev).trailing_zeros() as usize;
        if gray >> changed & 1 == 1 {
            for i in 0..n {
                row_sums[i] += m[[i, changed]];
            }
        } else {
            for i in 0..n {
                row_sums[i] -= m[[i, changed]];
            }
        }
        gray_prev = gray;
        let mut prod = cr(1.0);
        for s in &row_sums {
            prod *= *s;
        }
        if gray.count_ones() % 2 == 0 {
            acc += prod;
        } else {
            acc -= prod;
        }
    }
    if n % 2 == 1 {
        acc = -acc;
    }
    Ok(acc)
}

/// haf(M) = Σ over perfect matchings ν of Π_k M[i_k][j_k] for symmetric M of
/// even dimension; diagonal entries are never read. Memoized lowest-index
/// edge contraction; dimension guard 2n ≤ 20.
pub fn hafnian(m: &CMat) -> Result<C64> {
    let dim = square_dim(m, 20, "hafnian")?;
    if dim % 2 != 0 {
        return Err(Error::Domain(format!("hafnian needs even dimension, got {}", dim)));
    }
    let scale = max_abs(m).max(1e-300);
    for i in 0..dim {
        for j in i + 1..dim {
            let gap = (m[[i, j]] - m[[j, i]]).norm();
            if gap > 1e-10 * scale {
                return Err(Error::Validation(format!(
                    "hafnian argument is not symmetric: entries ({},{}) and ({},{}) differ by {:.3e}",
                    i, j, j, i, gap
                )));
            }
        }
    }
    let mut memo: HashMap<u32, C64> = HashMap::new();
    fn rec(m: &CMat, mask: u32, memo: &mut HashMap<u32, C64>) -> C64 {
        if mask == 0 {
            return cr(1.0);
        }
        if let Some(v) = memo.get(&mask) {
            return *v;
        }
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut acc = czero();
        let mut probe = rest;
        while probe != 0 {
            let j = probe.trailing_zeros() as usize;
            probe &= probe - 1;
            acc += m[[i, j]] * rec(m, rest & !(1 << j), memo);
        }
        memo.insert(mask, acc);
        acc
    }
    let full: u32 = if dim == 32 { u32::MAX } else { (1u32 << dim) - 1 };
    Ok(rec(m, full, &mut memo))
}

/// det₂(M) = Σ_π 2^{n−C(π)} Π_i M[i][π(i)], C(π) the cycle count of π; the
/// weight is applied once per permutation. Permutation enumeration with a
/// dimension guard n ≤ 10.
pub fn det2(m: &CMat) -> Result<C64> {
    let n = square_dim(m, 10, "det2")?;
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut acc = czero();
    fn rec(m: &CMat, pos: usize, perm: &mut [usize], used: &mut [bool], acc: &mut C64) {
        let n = perm.len();
        if pos == n {
            let mut cycles = 0usize;
            let mut seen = vec![false; n];
            for start in 0..n {
                if !seen[start] {
                    cycles += 1;
                    let mut cur = start;
                    while !seen[cur] {
                        seen[cur] = true;
                        cur = perm[cur];
                    }
                }
            }
            let mut prod = cr(1.0);
            for i in 0..n {
                prod *= m[[i, perm[i]]];
            }
            *acc += prod * cr(f64::powi(2.0, (n - cycles) as i32));
            return;
        }
        for img in 0..n {
            if !used[img] {
                used[img] = true;
                perm[pos] = img;
                rec(m, pos + 1, perm, used, acc);
                used[img] = false;
            }
        }
    }
    rec(m, 0, &mut perm, &mut used, &mut acc);
    Ok(acc)
}

/// Interleaves two n×n kernels into the 2n×2n symmetric matrix whose hafnian
/// gives the n-point correlation of the two-channel Gaussian Cox family:
/// rows/columns come in per-point pairs with block
/// [[K₂(a,b), K₁(a,b)], [conj K₁(a,b), conj K₂(a,b)]].
/// Requires K₁ Hermitian and K₂ symmetric for the result to be symmetric.
pub fn doubled_kernel_matrix(k1: &CMat, k2: &CMat) -> Result<CMat> {
    let (n, c) = k1.dim();
    if k2.dim() != (n, c) || n != c {
        return Err(Error::Domain("doubled kernel needs two equal square matrices".into()));
    }
    let mut out = CMat::from_elem((2 * n, 2 * n), czero());
    for a in 0..n {
        for b in 0..n {
            out[[2 * a, 2 * b]] = k2[[a, b]];
            out[[2 * a, 2 * b + 1]] = k1[[a, b]];
            out[[2 * a + 1, 2 * b]] = k1[[a, b]].conj();
            out[[2 * a + 1, 2 * b + 1]] = k2[[a, b]].conj();
        }
    }
    Ok(out)
}

/// JSON interchange form for square complex matrices:
/// `{ "n": ·, "entries": [[re, im], …] }`, row-major.
#[derive(Serialize, Deserialize)]
pub(crate) struct MatrixFile {
    n: usize,
    entries: Vec<[f64; 2]>,
}

impl MatrixFile {
    pub(crate) fn from_mat(m: &CMat) -> Result<MatrixFile> {
        let (r, c) = m.dim();
        if r != c {
            return Err(Error::Domain(format!(
                "matrix file needs a square matrix, got {}×{}",
                r, c
            )));
        }
        Ok(MatrixFile {
            n: r,
            entries: m.iter().map(|z| [z.re, z.im]).collect(),
        })
    }

    pub(crate) fn to_mat(&self) -> Result<CMat> {
        if self.n == 0 {
            return Err(Error::Domain("matrix file needs n ≥ 1".into()));
        }
        if self.entries.len() != self.n * self.n {
            return Err(Error::Domain(format!(
                "matrix file declares n = {} but carries {} entries",
                self.n,
                self.entries.len()
            )));
        }
        let data: Vec<C64> = self.entries.iter().map(|[re, im]| C64::new(*re, *im)).collect();
        CMat::from_shape_vec((self.n, self.n), data)
            .map_err(|e| Error::Validation(format!("matrix shape error: {}", e)))
    }
}

pub fn matrix_to_json(m: &CMat) -> Result<String> {
    let file = MatrixFile::from_mat(m)?;
    Ok(serde_json::to_string_pretty(&file).expect("serialization cannot fail"))
}

pub fn matrix_from_json(text: &str) -> Result<CMat> {
    let file: MatrixFile =
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("bad matrix JSON: {}", e)))?;
    file.to_mat()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn random_cmat(n: usize, rng: &mut impl Rng) -> CMat {
        CMat::from_shape_fn((n, n), |_| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn random_symmetric(n: usize, rng: &mut impl Rng) -> CMat {
        let a = random_cmat(n, rng);
        let mut s = a.clone();
        for i in 0..n {
            for j in 0..n {
                s[[i, j]] = a[[i, j]] + a[[j, i]];
            }
        }
        s
    }

    /// Plain permutation-sum permanent.
    fn permanent_oracle(m: &CMat) -> C64 {
        let n = m.nrows();
        let mut acc = czero();
        let mut perm: Vec<usize> = (0..n).collect();
        permute(&mut perm, 0, &mut |p| {
            let mut prod = cr(1.0);
            for i in 0..n {
                prod *= m[[i, p[i]]];
            }
            acc += prod;
        });
        acc
    }

    fn permute(perm: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
        if k == perm.len() {
            visit(perm);
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            permute(perm, k + 1, visit);
            perm.swap(k, i);
        }
    }

    /// Full matching enumeration via pair_partitions.
    fn hafnian_oracle(m: &CMat) -> C64 {
        let dim = m.nrows();
        let mut acc = czero();
        for (part, _) in pair_partitions(dim).unwrap() {
            let mut prod = cr(1.0);
            for &(i, j) in part.pairs() {
                prod *= m[[i, j]];
            }
            acc += prod;
        }
        acc
    }

    /// Independent second hafnian oracle: the full-permutation average
    /// (1/(n!·2ⁿ)) Σ_{π∈S_{2n}} Π_k M[π(2k)][π(2k+1)].
    fn hafnian_permutation_oracle(m: &CMat) -> C64 {
        let dim = m.nrows();
        let n = dim / 2;
        let mut acc = czero();
        let mut perm: Vec<usize> = (0..dim).collect();
        permute(&mut perm, 0, &mut |p| {
            let mut prod = cr(1.0);
            for k in 0..n {
                prod *= m[[p[2 * k], p[2 * k + 1]]];
            }
            acc += prod;
        });
        let count: f64 = (1..=n).map(|k| k as f64).product::<f64>() * f64::powi(2.0, n as i32);
        acc / cr(count)
    }

    fn double_factorial(k: usize) -> usize {
        // (2n−1)!! for input 2n
        let mut acc = 1;
        let mut v = k as i64 - 1;
        while v > 1 {
            acc *= v as usize;
            v -= 2;
        }
        acc
    }

    #[test]
    fn pair_partition_counts_and_crossings() {
        let p2 = pair_partitions(2).unwrap();
        assert_eq!(p2.len(), 1);
        assert_eq!(p2[0].0.pairs(), &[(0, 1)]);
        assert_eq!(p2[0].1, 0);

        for two_n in [2usize, 4, 6, 8, 10] {
            let ps = pair_partitions(two_n).unwrap();
            assert_eq!(ps.len(), double_factorial(two_n));
        }

        // {{0,2},{1,3}} crosses once; {{0,3},{1,4},{2,5}} crosses three times
        let p4 = pair_partitions(4).unwrap();
        let crossing = p4
            .iter()
            .find(|(p, _)| p.pairs() == [(0, 2), (1, 3)])
            .unwrap();
        assert_eq!(crossing.1, 1);
        let p6 = pair_partitions(6).unwrap();
        let nested = p6
            .iter()
            .find(|(p, _)| p.pairs() == [(0, 3), (1, 4), (2, 5)])
            .unwrap();
        assert_eq!(nested.1, 3);

        assert!(matches!(pair_partitions(3), Err(Error::Domain(_))));
        assert!(matches!(pair_partitions(0), Err(Error::Domain(_))));
    }

    #[test]
    fn permanent_closed_forms() {
        assert_eq!(permanent(&identity(4)).unwrap(), cr(1.0));
        let ones = CMat::from_elem((3, 3), cr(1.0));
        assert!((permanent(&ones).unwrap() - cr(6.0)).norm() < 1e-12);
    }

    #[test]
    fn permanent_matches_permutation_sum() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        for n in [2usize, 4, 6, 8] {
            let m = random_cmat(n, &mut rng);
            let fast = permanent(&m).unwrap();
            let slow = permanent_oracle(&m);
            assert!(
                (fast - slow).norm() <= 1e-10 * slow.norm().max(1.0),
                "n={} fast={} slow={}",
                n,
                fast,
                slow
            );
        }
    }

    #[test]
    fn permanent_invariant_under_simultaneous_permutation() {
        let mut rng = ChaCha12Rng::seed_from_u64(32);
        let n = 6;
        let m = random_cmat(n, &mut rng);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let permuted = CMat::from_shape_fn((n, n), |(i, j)| m[[idx[i], idx[j]]]);
        let a = permanent(&m).unwrap();
        let b = permanent(&permuted).unwrap();
        assert!((a - b).norm() < 1e-10 * a.norm().max(1.0));
    }

    #[test]
    fn permanent_guard() {
        let m = CMat::from_elem((21, 21), cr(1.0));
        assert!(matches!(permanent(&m), Err(Error::Capacity(_))));
        let rect = CMat::from_elem((2, 3), cr(1.0));
        assert!(matches!(permanent(&rect), Err(Error::Domain(_))));
    }

    #[test]
    fn hafnian_closed_forms() {
        // 2×2: single matching picks the off-diagonal entry
        let m = CMat::from_shape_vec(
            (2, 2),
            vec![cr(5.0), C64::new(1.5, -2.0), C64::new(1.5, -2.0), cr(-7.0)],
        )
        .unwrap();
        assert_eq!(hafnian(&m).unwrap(), C64::new(1.5, -2.0));

        let ones = CMat::from_elem((4, 4), cr(1.0));
        assert!((hafnian(&ones).unwrap() - cr(3.0)).norm() < 1e-12);
    }

    #[test]
    fn hafnian_matches_both_oracles() {
        let mut rng = ChaCha12Rng::seed_from_u64(33);
        for dim in [2usize, 4, 6, 8] {
            let m = random_symmetric(dim, &mut rng);
            let fast = hafnian(&m).unwrap();
            let slow = hafnian_oracle(&m);
            assert!(
                (fast - slow).norm() <= 1e-10 * slow.norm().max(1.0),
                "dim={} fast={} slow={}",
                dim,
                fast,
                slow
            );
        }
        // second, independent formula at dim 6 (720 permutations)
        let m = random_symmetric(6, &mut rng);
        let fast = hafnian(&m).unwrap();
        let avg = hafnian_permutation_oracle(&m);
        assert!((fast - avg).norm() <= 1e-10 * avg.norm().max(1.0));
    }

    #[test]
    fn hafnian_ignores_diagonal() {
        let mut rng = ChaCha12Rng::seed_from_u64(34);
        let mut m = random_symmetric(8, &mut rng);
        let before = hafnian(&m).unwrap();
        for i in 0..8 {
            m[[i, i]] = C64::new(1e6 * i as f64, -3.0);
        }
        let after = hafnian(&m).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn hafnian_rejects_bad_inputs() {
        let odd = CMat::from_elem((3, 3), cr(1.0));
        assert!(matches!(hafnian(&odd), Err(Error::Domain(_))));
        let mut asym = CMat::from_elem((4, 4), cr(1.0));
        asym[[0, 1]] = cr(2.0);
        assert!(matches!(hafnian(&asym), Err(Error::Validation(_))));
        let big = CMat::from_elem((22, 22), cr(1.0));
        assert!(matches!(hafnian(&big), Err(Error::Capacity(_))));
    }

    #[test]
    fn det2_closed_forms() {
        let b = CMat::from_elem((1, 1), C64::new(0.75, -0.5));
        assert_eq!(det2(&b).unwrap(), C64::new(0.75, -0.5));

        // n=2: identity has 2 cycles (weight 1), the swap has 1 cycle (weight 2)
        let m = CMat::from_shape_vec((2, 2), vec![cr(1.0), cr(2.0), cr(3.0), cr(4.0)]).unwrap();
        assert_eq!(det2(&m).unwrap(), cr(1.0 * 4.0 + 2.0 * 2.0 * 3.0));

        let mut diag = CMat::from_elem((4, 4), czero());
        for i in 0..4 {
            diag[[i, i]] = cr(i as f64 + 1.0);
        }
        assert!((det2(&diag).unwrap() - cr(24.0)).norm() < 1e-12);
    }

    #[test]
    fn det2_equals_hafnian_of_doubled_kernel() {
        let mut rng = ChaCha12Rng::seed_from_u64(35);
        for n in [1usize, 2, 3, 4, 5] {
            let mut k = CMat::from_elem((n, n), czero());
            for i in 0..n {
                for j in 0..=i {
                    let v = cr(rng.random::<f64>() - 0.5);
                    k[[i, j]] = v;
                    k[[j, i]] = v;
                }
            }
            let doubled = doubled_kernel_matrix(&k, &k).unwrap();
            let lhs = det2(&k).unwrap();
            let rhs = hafnian(&doubled).unwrap();
            assert!(
                (lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0),
                "n={} det2={} haf={}",
                n,
                lhs,
                rhs
            );
        }
    }

    #[test]
    fn det2_guard() {
        let m = CMat::from_elem((11, 11), cr(1.0));
        assert!(matches!(det2(&m), Err(Error::Capacity(_))));
    }

    #[test]
    fn matrix_json_roundtrip() {
        let mut rng = ChaCha12Rng::seed_from_u64(36);
        let m = random_cmat(3, &mut rng);
        let text = matrix_to_json(&m).unwrap();
        let back = matrix_from_json(&text).unwrap();
        assert!(crate::linalg::max_abs_diff(&m, &back) < 1e-15);

        assert!(matrix_from_json("{\"n\":2,\"entries\":[[1,0]]}").is_err());
        assert!(matrix_from_json("not json").is_err());
    }
}
