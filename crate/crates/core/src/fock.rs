//! Dense Fock spaces over a finite one-particle space: exact antisymmetric
//! (occupations in {0,1}) and degree-truncated symmetric (total occupation
//! ≤ cap), with rank-1/rank-2 ladder operators and differential second
//! quantization.
//!
//! Basis states are occupation vectors enumerated degree-then-lexicographic,
//! so the vacuum is always index 0. Mode-level ladder actions are precomputed
//! into transition tables (target index + real factor, signs folded in), and
//! every composite operator is applied through those tables.

use std::collections::HashMap;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{czero, CMat, CVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistics {
    Antisymmetric,
    Symmetric,
}

/// One mode-level ladder transition: basis index it maps to and the real
/// amplitude factor (occupation square roots and fermionic signs included).
type Transition = Option<(u32, f64)>;

#[derive(Debug, Clone)]
pub struct FockSpace {
    statistics: Statistics,
    modes: usize,
    cap: usize,
    basis: Vec<Vec<u32>>,
    create: Vec<Vec<Transition>>,     // [mode][basis index]
    annihilate: Vec<Vec<Transition>>, // [mode][basis index]
}

fn enumerate_occupations(modes: usize, cap: usize, max_per_mode: u32) -> Vec<Vec<u32>> {
    let mut basis = Vec::new();
    for degree in 0..=cap {
        let mut cur = vec![0u32; modes];
        fn rec(
            cur: &mut Vec<u32>,
            mode: usize,
            remaining: u32,
            max_per_mode: u32,
            out: &mut Vec<Vec<u32>>,
        ) {
            if mode == cur.len() {
                if remaining == 0 {
                    out.push(cur.clone());
                }
                return;
            }
            let top = remaining.min(max_per_mode);
            // descending counts at the current mode give lexicographic-descending
            // order; we want ascending vectors, so iterate 0..=top and the vector
            // comparison is plain lexicographic on counts
            for c in 0..=top {
                cur[mode] = c;
                rec(cur, mode + 1, remaining - c, max_per_mode, out);
            }
            cur[mode] = 0;
        }
        rec(&mut cur, 0, degree as u32, max_per_mode, &mut basis);
    }
    basis
}

impl FockSpace {
    /// Antisymmetric space over `modes` modes; dimension 2^modes.
    pub fn antisymmetric(modes: usize) -> Result<FockSpace> {
        if modes == 0 {
            return Err(Error::Domain("Fock space needs at least one mode".into()));
        }
        if modes > 24 {
            return Err(Error::Capacity(format!(
                "antisymmetric space over {} modes exceeds the dense-vector budget",
                modes
            )));
        }
        Ok(Self::build(Statistics::Antisymmetric, modes, modes, 1))
    }

    /// Symmetric space truncated at total occupation `cap`;
    /// dimension C(modes+cap, cap).
    pub fn symmetric(modes: usize, cap: usize) -> Result<FockSpace> {
        if modes == 0 {
            return Err(Error::Domain("Fock space needs at least one mode".into()));
        }
        let dim = binomial(modes + cap, cap);
        if dim > 2_000_000 {
            return Err(Error::Capacity(format!(
                "symmetric space dimension {} exceeds the dense-vector budget",
                dim
            )));
        }
        Ok(Self::build(Statistics::Symmetric, modes, cap, u32::MAX))
    }

    fn build(statistics: Statistics, modes: usize, cap: usize, max_per_mode: u32) -> FockSpace {
        let basis = enumerate_occupations(modes, cap, max_per_mode);
        let index: HashMap<&[u32], usize> =
            basis.iter().enumerate().map(|(i, b)| (b.as_slice(), i)).collect();
        let mut create = vec![vec![None; basis.len()]; modes];
        let mut annihilate = vec![vec![None; basis.len()]; modes];
        let mut scratch = vec![0u32; modes];
        for (b, occ) in basis.iter().enumerate() {
            let total: u32 = occ.iter().sum();
            for mode in 0..modes {
                // creation
                let can_create = match statistics {
                    Statistics::Antisymmetric => occ[mode] == 0,
                    Statistics::Symmetric => (total as usize) < cap,
                };
                if can_create {
                    scratch.copy_from_slice(occ);
                    scratch[mode] += 1;
                    let target = index[scratch.as_slice()] as u32;
                    let factor = match statistics {
                        Statistics::Antisymmetric => fermi_sign(occ, mode),
                        Statistics::Symmetric => ((occ[mode] + 1) as f64).sqrt(),
                    };
                    create[mode][b] = Some((target, factor));
                }
                // annihilation
                if occ[mode] > 0 {
                    scratch.copy_from_slice(occ);
                    scratch[mode] -= 1;
                    let target = index[scratch.as_slice()] as u32;
                    let factor = match statistics {
                        Statistics::Antisymmetric => fermi_sign(occ, mode),
                        Statistics::Symmetric => (occ[mode] as f64).sqrt(),
                    };
                    annihilate[mode][b] = Some((target, factor));
                }
            }
        }
        FockSpace { statistics, modes, cap, basis, create, annihilate }
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn occupation(&self, basis_index: usize) -> &[u32] {
        &self.basis[basis_index]
    }

    pub fn total_occupation(&self, basis_index: usize) -> u32 {
        self.basis[basis_index].iter().sum()
    }

    /// The vacuum vector Ω: amplitude 1 on the all-zero occupation state.
    pub fn vacuum(&self) -> CVec {
        let mut v = CVec::from_elem(self.dim(), czero());
        v[0] = C64::new(1.0, 0.0);
        v
    }

    /// Mode-level creation on a single basis state.
    pub fn create_mode(&self, mode: usize, basis_index: usize) -> Transition {
        self.create[mode][basis_index]
    }

    /// Mode-level annihilation on a single basis state.
    pub fn annihilate_mode(&self, mode: usize, basis_index: usize) -> Transition {
        self.annihilate[mode][basis_index]
    }

    fn check_vec(&self, v: &CVec, what: &str) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::Domain(format!(
                "{}: vector length {} does not match space dimension {}",
                what,
                v.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    fn check_modes(&self, n: usize, what: &str) -> Result<()> {
        if n != self.modes {
            return Err(Error::Domain(format!(
                "{}: argument over {} modes, space has {}",
                what, n, self.modes
            )));
        }
        Ok(())
    }

    /// a⁺(φ) v = Σ_i φ_i a⁺_i v.
    pub fn apply_create1(&self, phi: &CVec, v: &CVec) -> Result<CVec> {
        self.check_modes(phi.len(), "create")?;
        self.check_vec(v, "create")?;
        let mut out = CVec::from_elem(self.dim(), czero());
        for (b, amp) in v.iter().enumerate() {
            if *amp == czero() {
                continue;
            }
            for (i, coeff) in phi.iter().enumerate() {
                if *coeff == czero() {
                    continue;
                }
                if let Some((t, f)) = self.create[i][b] {
                    out[t as usize] += *coeff * *amp * f;
                }
            }
        }
        Ok(out)
    }

    /// a⁻(φ) v = Σ_i conj(φ_i) a⁻_i v — the adjoint of `apply_create1` with
    /// the same stored vector.
    pub fn apply_annihilate1(&self, phi: &CVec, v: &CVec) -> Result<CVec> {
        self.check_modes(phi.len(), "annihilate")?;
        self.check_vec(v, "annihilate")?;
        let mut out = CVec::from_elem(self.dim(), czero());
        for (b, amp) in v.iter().enumerate() {
            if *amp == czero() {
                continue;
            }
            for (i, coeff) in phi.iter().enumerate() {
                if *coeff == czero() {
                    continue;
                }
                if let Some((t, f)) = self.annihilate[i][b] {
                    out[t as usize] += coeff.conj() * *amp * f;
                }
            }
        }
        Ok(out)
    }

    /// a⁺(c) v = Σ_{ij} c[i][j] a⁺_i a⁺_j v (two-particle creation).
    pub fn apply_create2(&self, c: &CMat, v: &CVec) -> Result<CVec> {
        self.check_modes(c.nrows(), "create2")?;
        self.check_modes(c.ncols(), "create2")?;
        self.check_vec(v, "create2")?;
        let mut out = CVec::from_elem(self.dim(), czero());
        for (b, amp) in v.iter().enumerate() {
            if *amp == czero() {
                continue;
            }
            for j in 0..self.modes {
                let Some((t1, f1)) = self.create[j][b] else { continue };
                for i in 0..self.modes {
                    let coeff = c[[i, j]];
                    if coeff == czero() {
                        continue;
                    }
                    if let Some((t2, f2)) = self.create[i][t1 as usize] {
                        out[t2 as usize] += coeff * *amp * (f1 * f2);
                    }
                }
            }
        }
        Ok(out)
    }

    /// The adjoint of `apply_create2` with the same stored kernel:
    /// Σ_{ij} conj(c[i][j]) a⁻_j a⁻_i v.
    pub fn apply_annihilate2(&self, c: &CMat, v: &CVec) -> Result<CVec> {
        self.check_modes(c.nrows(), "annihilate2")?;
        self.check_modes(c.ncols(), "annihilate2")?;
        self.check_vec(v, "annihilate2")?;
        let mut out = CVec::from_elem(self.dim(), czero());
        for (b, amp) in v.iter().enumerate() {
            if *amp == czero() {
                continue;
            }
            for i in 0..self.modes {
                let Some((t1, f1)) = self.annihilate[i][b] else { continue };
                for j in 0..self.modes {
                    let coeff = c[[i, j]];
                    if coeff == czero() {
                        continue;
                    }
                    if let Some((t2, f2)) = self.annihilate[j][t1 as usize] {
                        out[t2 as usize] += coeff.conj() * *amp * (f1 * f2);
                    }
                }
            }
        }
        Ok(out)
    }

    /// dΓ(A) v = Σ_{ij} A[i][j] a⁺_i a⁻_j v (number-conserving one-body
    /// operator; dΓ(A)Ω = 0).
    pub fn apply_dgamma(&self, a: &CMat, v: &CVec) -> Result<CVec> {
        self.check_modes(a.nrows(), "dgamma")?;
        self.check_modes(a.ncols(), "dgamma")?;
        self.check_vec(v, "dgamma")?;
        let mut out = CVec::from_elem(self.dim(), czero());
        for (b, amp) in v.iter().enumerate() {
            if *amp == czero() {
                continue;
            }
            for j in 0..self.modes {
                let Some((t1, f1)) = self.annihilate[j][b] else { continue };
                for i in 0..self.modes {
                    let coeff = a[[i, j]];
                    if coeff == czero() {
                        continue;
                    }
                    if let Some((t2, f2)) = self.create[i][t1 as usize] {
                        out[t2 as usize] += coeff * *amp * (f1 * f2);
                    }
                }
            }
        }
        Ok(out)
    }
}

fn fermi_sign(occ: &[u32], mode: usize) -> f64 {
    let below: u32 = occ[..mode].iter().sum();
    if below % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Materializes a linear map on a Fock space as a dense matrix by applying it
/// to every basis vector (columns of the result).
pub fn dense_operator(
    dim: usize,
    mut f: impl FnMut(&CVec) -> Result<CVec>,
) -> Result<CMat> {
    let mut out = CMat::from_elem((dim, dim), czero());
    for b in 0..dim {
        let mut e = CVec::from_elem(dim, czero());
        e[b] = C64::new(1.0, 0.0);
        let col = f(&e)?;
        if col.len() != dim {
            return Err(Error::Domain("operator changed vector length".into()));
        }
        for r in 0..dim {
            out[[r, b]] = col[r];
        }
    }
    Ok(out)
}
