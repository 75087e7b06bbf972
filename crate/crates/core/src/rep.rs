//! The five quasi-free representation families over a finite ground space,
//! their particle-density operators, and their field operators, all expressed
//! as normal-ordered operator expressions over a Fock space.
//!
//! One-particle conventions: the m-site space carries the orthonormal basis
//! e_i = χ_{site i}/√σ_i, so a kernel function K(x,y) appears as the matrix
//! M[i][j] = K(x_i,x_j)·√(σ_i σ_j) and operator traces over a window are plain
//! diagonal sums. The doubled families (fermionic and permanental) live over
//! ℋ⊕ℋ with copy-1 modes 0..m and copy-2 modes m..2m; the two-channel Cox
//! family lives over ℋ⊕𝒢 with the auxiliary modes after the site modes.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockSpace;
use crate::ground::{GroundSet, Region};
use crate::linalg::{adjoint, cr, czero, hermitian_eig, is_hermitian, CMat, CVec};
use crate::matfn::MatrixFile;

pub const SPECTRAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepKind {
    CarHermitian,
    CarJHermitian,
    CcrPoisson,
    CcrPermanental,
    CcrHafnian,
}

impl RepKind {
    pub fn name(self) -> &'static str {
        match self {
            RepKind::CarHermitian => "car_hermitian",
            RepKind::CarJHermitian => "car_jhermitian",
            RepKind::CcrPoisson => "ccr_poisson",
            RepKind::CcrPermanental => "ccr_permanental",
            RepKind::CcrHafnian => "ccr_hafnian",
        }
    }

    pub fn from_name(name: &str) -> Result<RepKind> {
        Ok(match name {
            "car_hermitian" => RepKind::CarHermitian,
            "car_jhermitian" => RepKind::CarJHermitian,
            "ccr_poisson" => RepKind::CcrPoisson,
            "ccr_permanental" => RepKind::CcrPermanental,
            "ccr_hafnian" => RepKind::CcrHafnian,
            other => {
                return Err(Error::Validation(format!("unknown representation kind '{}'", other)))
            }
        })
    }

    pub fn is_fermionic(self) -> bool {
        matches!(self, RepKind::CarHermitian | RepKind::CarJHermitian)
    }
}

/// Input data for one representation: the ground space, the kernel operator
/// (scaled-matrix form) or per-site auxiliary vectors, and the symmetric-Fock
/// truncation degree for the bosonic kinds.
#[derive(Debug, Clone)]
pub struct RepresentationSpec {
    kind: RepKind,
    ground: GroundSet,
    k: Option<CMat>,
    l1: Option<Vec<CVec>>,
    l2: Option<Vec<CVec>>,
    cap: Option<usize>,
}

impl RepresentationSpec {
    pub fn car_hermitian(ground: GroundSet, k: CMat) -> Result<Self> {
        check_kernel_shape(&ground, &k)?;
        Ok(RepresentationSpec {
            kind: RepKind::CarHermitian,
            ground,
            k: Some(k),
            l1: None,
            l2: None,
            cap: None,
        })
    }

    pub fn car_jhermitian(ground: GroundSet, k: CMat) -> Result<Self> {
        if ground.parts().is_none() {
            return Err(Error::Domain(
                "the J-Hermitian kind needs a ground set with a two-part split".into(),
            ));
        }
        check_kernel_shape(&ground, &k)?;
        Ok(RepresentationSpec {
            kind: RepKind::CarJHermitian,
            ground,
            k: Some(k),
            l1: None,
            l2: None,
            cap: None,
        })
    }

    pub fn ccr_poisson(ground: GroundSet) -> Result<Self> {
        Ok(RepresentationSpec {
            kind: RepKind::CcrPoisson,
            ground,
            k: None,
            l1: None,
            l2: None,
            cap: None,
        })
    }

    pub fn ccr_permanental(ground: GroundSet, k: CMat) -> Result<Self> {
        check_kernel_shape(&ground, &k)?;
        Ok(RepresentationSpec {
            kind: RepKind::CcrPermanental,
            ground,
            k: Some(k),
            l1: None,
            l2: None,
            cap: None,
        })
    }

    pub fn ccr_hafnian(ground: GroundSet, l1: Vec<CVec>, l2: Vec<CVec>) -> Result<Self> {
        let m = ground.len();
        if l1.len() != m || l2.len() != m {
            return Err(Error::Domain(format!(
                "auxiliary vectors cover {}/{} sites, ground set has {}",
                l1.len(),
                l2.len(),
                m
            )));
        }
        let g = l1.first().map(|v| v.len()).unwrap_or(0);
        if l1.iter().chain(l2.iter()).any(|v| v.len() != g) {
            return Err(Error::Domain(
                "auxiliary vectors must all have the same dimension".into(),
            ));
        }
        Ok(RepresentationSpec {
            kind: RepKind::CcrHafnian,
            ground,
            k: None,
            l1: Some(l1),
            l2: Some(l2),
            cap: None,
        })
    }

    /// Two-channel Cox spec whose correlation functions are regularized
    /// determinants det₂ of `kernel`: both auxiliary channels are the rows of
    /// the symmetric square root of a real symmetric PSD kernel-value matrix
    /// (unweighted entries K(x_i, x_j)), so 𝒦₁ = 𝒦₂ = K.
    pub fn ccr_hafnian_from_symmetric_kernel(ground: GroundSet, kernel: &CMat) -> Result<Self> {
        check_kernel_shape(&ground, kernel)?;
        let scale = crate::linalg::max_abs(kernel).max(1.0);
        if kernel.iter().any(|z| z.im.abs() > SPECTRAL_TOL * scale) {
            return Err(Error::Validation(
                "regularized-determinant kernels must be real".into(),
            ));
        }
        if !is_hermitian(kernel, SPECTRAL_TOL) {
            return Err(Error::Validation(
                "regularized-determinant kernels must be symmetric".into(),
            ));
        }
        let (evals, u) = hermitian_eig(kernel);
        if let Some(&bad) = evals.iter().find(|&&ev| ev < -SPECTRAL_TOL * scale) {
            return Err(Error::Validation(format!(
                "kernel eigenvalue {:.12e} lies outside [0, ∞)",
                bad
            )));
        }
        let m = ground.len();
        let ustar = adjoint(&u);
        let mut root = CMat::from_elem((m, m), czero());
        for (idx, &ev) in evals.iter().enumerate() {
            let f = ev.max(0.0).sqrt();
            for r in 0..m {
                for c in 0..m {
                    root[[r, c]] += u[[r, idx]] * ustar[[idx, c]] * f;
                }
            }
        }
        let rows: Vec<CVec> = (0..m)
            .map(|i| CVec::from_shape_fn(m, |j| cr(root[[i, j]].re)))
            .collect();
        RepresentationSpec::ccr_hafnian(ground, rows.clone(), rows)
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = Some(cap);
        self
    }

    pub fn kind(&self) -> RepKind {
        self.kind
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    /// The kernel operator in the orthonormal site basis (entries
    /// K(x_i,x_j)·√(σ_i σ_j)); absent for the Poisson and hafnian kinds.
    pub fn scaled_kernel(&self) -> Option<&CMat> {
        self.k.as_ref()
    }

    pub fn aux_vectors(&self) -> Option<(&[CVec], &[CVec])> {
        match (&self.l1, &self.l2) {
            (Some(a), Some(b)) => Some((a.as_slice(), b.as_slice())),
            _ => None,
        }
    }

    pub fn cap(&self) -> Option<usize> {
        self.cap
    }

    /// Dimension of the auxiliary space 𝒢 (hafnian kind only).
    pub fn aux_dim(&self) -> usize {
        self.l1.as_ref().and_then(|l| l.first()).map(|v| v.len()).unwrap_or(0)
    }

    /// Unweighted two-channel kernels of the hafnian kind:
    /// 𝒦₁(x,y) = (L₁(x), L₁(y))_𝒢 and 𝒦₂(x,y) = Σ_b L₁(x)_b·L₂(y)_b.
    /// 𝒦₁ is Hermitian PSD by construction; 𝒦₂ is symmetric when the
    /// representation constraints hold.
    pub fn hafnian_kernels(&self) -> Result<(CMat, CMat)> {
        let (l1, l2) = self.aux_vectors().ok_or_else(|| {
            Error::Domain("two-channel kernels exist only for the hafnian kind".into())
        })?;
        let m = self.ground.len();
        let mut k1 = CMat::from_elem((m, m), czero());
        let mut k2 = CMat::from_elem((m, m), czero());
        for i in 0..m {
            for j in 0..m {
                let mut c = czero();
                let mut p = czero();
                for b in 0..l1[i].len() {
                    c += l1[i][b] * l1[j][b].conj();
                    p += l1[i][b] * l2[j][b];
                }
                k1[[i, j]] = c;
                k2[[i, j]] = p;
            }
        }
        Ok((k1, k2))
    }

    /// The J-twisted correlation operator 𝕂 = K·Π₁ + (1−K)·Π₂ in matrix form
    /// (Π_p = diagonal projection onto the part-p sites).
    pub fn jhermitian_kernel(&self) -> Result<CMat> {
        let (Some(m), Some(parts)) = (self.k.as_ref(), self.ground.parts()) else {
            return Err(Error::Domain(
                "the J-twisted kernel exists only for the J-Hermitian kind".into(),
            ));
        };
        let n = self.ground.len();
        let mut out = CMat::from_elem((n, n), czero());
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] = if parts[j] == 1 {
                    m[[i, j]]
                } else {
                    (if i == j { cr(1.0) } else { czero() }) - m[[i, j]]
                };
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let file = RepSpecFile {
            kind: self.kind.name().to_string(),
            weights: self.ground.weights().to_vec(),
            parts: self.ground.parts().map(|p| p.to_vec()),
            k: self.k.as_ref().map(|m| MatrixFile::from_mat(m).expect("kernel is square")),
            l1: self.l1.as_ref().map(encode_vectors),
            l2: self.l2.as_ref().map(encode_vectors),
            cap: self.cap,
        };
        serde_json::to_string_pretty(&file).expect("serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<RepresentationSpec> {
        let file: RepSpecFile = serde_json::from_str(text)
            .map_err(|e| Error::Validation(format!("bad representation spec JSON: {}", e)))?;
        let ground = match file.parts {
            Some(parts) => GroundSet::with_parts(file.weights, parts)?,
            None => GroundSet::new(file.weights)?,
        };
        let kind = RepKind::from_name(&file.kind)?;
        let spec = match kind {
            RepKind::CarHermitian | RepKind::CarJHermitian | RepKind::CcrPermanental => {
                let k = file
                    .k
                    .ok_or_else(|| {
                        Error::Domain(format!("kind '{}' needs a kernel matrix K", file.kind))
                    })?
                    .to_mat()?;
                match kind {
                    RepKind::CarHermitian => RepresentationSpec::car_hermitian(ground, k)?,
                    RepKind::CarJHermitian => RepresentationSpec::car_jhermitian(ground, k)?,
                    _ => RepresentationSpec::ccr_permanental(ground, k)?,
                }
            }
            RepKind::CcrPoisson => {
                if file.k.is_some() {
                    return Err(Error::Domain("the Poisson kind takes no kernel".into()));
                }
                RepresentationSpec::ccr_poisson(ground)?
            }
            RepKind::CcrHafnian => {
                let l1 = decode_vectors(file.l1.ok_or_else(|| {
                    Error::Domain("the hafnian kind needs auxiliary vectors L1".into())
                })?);
                let l2 = decode_vectors(file.l2.ok_or_else(|| {
                    Error::Domain("the hafnian kind needs auxiliary vectors L2".into())
                })?);
                RepresentationSpec::ccr_hafnian(ground, l1, l2)?
            }
        };
        Ok(match file.cap {
            Some(cap) => spec.with_cap(cap),
            None => spec,
        })
    }
}

fn check_kernel_shape(ground: &GroundSet, k: &CMat) -> Result<()> {
    let m = ground.len();
    if k.dim() != (m, m) {
        return Err(Error::Domain(format!(
            "kernel matrix is {}×{}, ground set has {} sites",
            k.nrows(),
            k.ncols(),
            m
        )));
    }
    Ok(())
}

fn encode_vectors(vs: &Vec<CVec>) -> Vec<Vec<[f64; 2]>> {
    vs.iter().map(|v| v.iter().map(|z| [z.re, z.im]).collect()).collect()
}

fn decode_vectors(raw: Vec<Vec<[f64; 2]>>) -> Vec<CVec> {
    raw.into_iter()
        .map(|v| CVec::from_vec(v.into_iter().map(|[re, im]| C64::new(re, im)).collect()))
        .collect()
}

#[derive(Serialize, Deserialize)]
struct RepSpecFile {
    kind: String,
    weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parts: Option<Vec<u8>>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    k: Option<MatrixFile>,
    #[serde(rename = "L1", default, skip_serializing_if = "Option::is_none")]
    l1: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(rename = "L2", default, skip_serializing_if = "Option::is_none")]
    l2: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cap: Option<usize>,
}

/// Normal-ordered operator expression over a Fock space: sums, ordered
/// products and scalar multiples of ladder primitives. `Annihilate1(v)` and
/// `Annihilate2(c)` are the adjoints of the creation primitives holding the
/// same data.
#[derive(Debug, Clone)]
pub enum OperatorExpr {
    Const(C64),
    Create1(CVec),
    Annihilate1(CVec),
    Create2(CMat),
    Annihilate2(CMat),
    DGamma(CMat),
    Scale(C64, Box<OperatorExpr>),
    Sum(Vec<OperatorExpr>),
    /// Factors compose as written: `Product([a, b])` applies `b` first.
    Product(Vec<OperatorExpr>),
}

impl OperatorExpr {
    pub fn apply(&self, space: &FockSpace, v: &CVec) -> Result<CVec> {
        match self {
            OperatorExpr::Const(z) => Ok(v.mapv(|a| a * z)),
            OperatorExpr::Create1(phi) => space.apply_create1(phi, v),
            OperatorExpr::Annihilate1(phi) => space.apply_annihilate1(phi, v),
            OperatorExpr::Create2(c) => space.apply_create2(c, v),
            OperatorExpr::Annihilate2(c) => space.apply_annihilate2(c, v),
            OperatorExpr::DGamma(a) => space.apply_dgamma(a, v),
            OperatorExpr::Scale(z, inner) => Ok(inner.apply(space, v)?.mapv(|a| a * z)),
            OperatorExpr::Sum(terms) => {
                let mut acc = CVec::from_elem(v.len(), czero());
                for t in terms {
                    acc = acc + t.apply(space, v)?;
                }
                Ok(acc)
            }
            OperatorExpr::Product(factors) => {
                let mut cur = v.clone();
                for f in factors.iter().rev() {
                    cur = f.apply(space, &cur)?;
                }
                Ok(cur)
            }
        }
    }

    /// Worst-case particle bookkeeping (net gain, peak excess over the
    /// starting occupation); `peak` applied from the vacuum is the symmetric
    /// truncation degree needed for exact evaluation.
    pub fn particle_change(&self) -> (i64, i64) {
        match self {
            OperatorExpr::Const(_) => (0, 0),
            OperatorExpr::Create1(_) => (1, 1),
            OperatorExpr::Annihilate1(_) => (-1, 0),
            OperatorExpr::Create2(_) => (2, 2),
            OperatorExpr::Annihilate2(_) => (-2, 0),
            OperatorExpr::DGamma(_) => (0, 0),
            OperatorExpr::Scale(_, inner) => inner.particle_change(),
            OperatorExpr::Sum(terms) => terms.iter().fold((i64::MIN, 0), |(n, p), t| {
                let (tn, tp) = t.particle_change();
                (n.max(tn), p.max(tp))
            }),
            OperatorExpr::Product(factors) => {
                let mut net = 0i64;
                let mut peak = 0i64;
                for f in factors.iter().rev() {
                    let (fn_, fp) = f.particle_change();
                    peak = peak.max(net + fp);
                    net += fn_;
                }
                (net, peak)
            }
        }
    }

    /// Smallest symmetric-Fock cap under which vacuum evaluation of this
    /// expression is exact.
    pub fn required_cap(&self) -> usize {
        self.particle_change().1.max(0) as usize
    }
}

/// Materializes an operator expression as a dense matrix over the space.
pub fn dense_matrix(expr: &OperatorExpr, space: &FockSpace) -> Result<CMat> {
    crate::fock::dense_operator(space.dim(), |v| expr.apply(space, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldFlavor {
    Plus,
    Minus,
    B,
}

/// A built representation: its Fock space and the spectral square roots of
/// the kernel where the family needs them.
#[derive(Debug, Clone)]
pub struct Representation {
    spec: RepresentationSpec,
    fock: FockSpace,
    k1: Option<CMat>,
    k2: Option<CMat>,
}

/// Cap used for bosonic kinds when the spec does not fix one; enough for
/// moment orders ≤ 3 of the pair-creating kinds.
pub const DEFAULT_CAP: usize = 6;

pub fn build_representation(spec: &RepresentationSpec) -> Result<Representation> {
    let m = spec.ground.len();
    let cap = spec.cap.unwrap_or(DEFAULT_CAP);
    let (fock, k1, k2) = match spec.kind {
        RepKind::CarHermitian | RepKind::CarJHermitian => {
            let (k1, k2) = kernel_roots(spec.k.as_ref().unwrap(), KernelConstraint::Contraction)?;
            (FockSpace::antisymmetric(2 * m)?, Some(k1), Some(k2))
        }
        RepKind::CcrPermanental => {
            let (k1, k2) = kernel_roots(spec.k.as_ref().unwrap(), KernelConstraint::Positive)?;
            (FockSpace::symmetric(2 * m, cap)?, Some(k1), Some(k2))
        }
        RepKind::CcrPoisson => (FockSpace::symmetric(m, cap)?, None, None),
        RepKind::CcrHafnian => {
            check_hafnian_constraints(spec)?;
            (FockSpace::symmetric(m + spec.aux_dim(), cap)?, None, None)
        }
    };
    Ok(Representation { spec: spec.clone(), fock, k1, k2 })
}

enum KernelConstraint {
    /// 0 ≤ K ≤ 1 (fermionic kinds): K₂ = √(1−K).
    Contraction,
    /// K ≥ 0 (permanental kind): K₂ = √(1+K).
    Positive,
}

fn kernel_roots(k: &CMat, constraint: KernelConstraint) -> Result<(CMat, CMat)> {
    if !is_hermitian(k, SPECTRAL_TOL) {
        return Err(Error::Validation("kernel matrix is not Hermitian".into()));
    }
    let (evals, u) = hermitian_eig(k);
    for &ev in &evals {
        let bad = match constraint {
            KernelConstraint::Contraction => ev < -SPECTRAL_TOL || ev > 1.0 + SPECTRAL_TOL,
            KernelConstraint::Positive => ev < -SPECTRAL_TOL,
        };
        if bad {
            let range = match constraint {
                KernelConstraint::Contraction => "[0, 1]",
                KernelConstraint::Positive => "[0, ∞)",
            };
            return Err(Error::Validation(format!(
                "kernel eigenvalue {:.12e} lies outside {}",
                ev, range
            )));
        }
    }
    let n = k.nrows();
    let mut k1 = CMat::from_elem((n, n), czero());
    let mut k2 = CMat::from_elem((n, n), czero());
    let ustar = adjoint(&u);
    for (idx, &ev) in evals.iter().enumerate() {
        let clipped = match constraint {
            KernelConstraint::Contraction => ev.clamp(0.0, 1.0),
            KernelConstraint::Positive => ev.max(0.0),
        };
        let f1 = clipped.sqrt();
        let f2 = match constraint {
            KernelConstraint::Contraction => (1.0 - clipped).sqrt(),
            KernelConstraint::Positive => (1.0 + clipped).sqrt(),
        };
        for r in 0..n {
            for c in 0..n {
                let w = u[[r, idx]] * ustar[[idx, c]];
                k1[[r, c]] += w * f1;
                k2[[r, c]] += w * f2;
            }
        }
    }
    Ok((k1, k2))
}

fn check_hafnian_constraints(spec: &RepresentationSpec) -> Result<()> {
    let (l1, l2) = spec.aux_vectors().unwrap();
    let m = spec.ground.len();
    let scale = l1
        .iter()
        .chain(l2.iter())
        .flat_map(|v| v.iter())
        .map(|z| z.norm())
        .fold(1.0f64, f64::max);
    let tol = SPECTRAL_TOL * scale * scale;
    let dot = |a: &CVec, b: &CVec| -> C64 { a.iter().zip(b.iter()).map(|(x, y)| x * y).sum() };
    let herm = |a: &CVec, b: &CVec| -> C64 {
        a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum()
    };
    for i in 0..m {
        for j in 0..m {
            // Σ_b L₁(x_i)_b·L₂(x_j)_b must be symmetric in (i, j)
            let fwd = dot(&l1[i], &l2[j]);
            let bwd = dot(&l1[j], &l2[i]);
            if (fwd - bwd).norm() > tol {
                return Err(Error::Validation(format!(
                    "auxiliary data violates the cross-channel symmetry at site pair ({}, {}): {:.3e}",
                    i,
                    j,
                    (fwd - bwd).norm()
                )));
            }
            // the two channel Gram matrices must coincide
            let g1 = herm(&l1[i], &l1[j]);
            let g2 = herm(&l2[i], &l2[j]);
            if (g1 - g2).norm() > tol {
                return Err(Error::Validation(format!(
                    "auxiliary channels have different Gram matrices at site pair ({}, {}): {:.3e}",
                    i,
                    j,
                    (g1 - g2).norm()
                )));
            }
        }
        let n1 = herm(&l1[i], &l1[i]).re;
        let n2 = herm(&l2[i], &l2[i]).re;
        if (n1 - n2).abs() > tol {
            return Err(Error::Validation(format!(
                "auxiliary channel norms differ at site {}: {:.3e}",
                i,
                (n1 - n2).abs()
            )));
        }
    }
    Ok(())
}

/// Diagonal projection onto the sites of Δ, as an m×m matrix.
fn window_projector(m: usize, delta: &Region) -> CMat {
    let mut p = CMat::from_elem((m, m), czero());
    for i in delta.iter() {
        p[[i, i]] = cr(1.0);
    }
    p
}

/// Diagonal J-twisted projection: +1 on Δ∩X₁, −1 on Δ∩X₂.
fn window_j_projector(ground: &GroundSet, delta: &Region) -> CMat {
    let parts = ground.parts().expect("J projector needs a two-part split");
    let m = ground.len();
    let mut p = CMat::from_elem((m, m), czero());
    for i in delta.iter() {
        p[[i, i]] = if parts[i] == 1 { cr(1.0) } else { cr(-1.0) };
    }
    p
}

fn embed_vec(total: usize, offset: usize, v: &CVec) -> CVec {
    let mut out = CVec::from_elem(total, czero());
    for (i, z) in v.iter().enumerate() {
        out[offset + i] = *z;
    }
    out
}

fn block_diag2(a: &CMat, b: &CMat) -> CMat {
    crate::linalg::direct_sum(a, b)
}

impl Representation {
    pub fn spec(&self) -> &RepresentationSpec {
        &self.spec
    }

    pub fn kind(&self) -> RepKind {
        self.spec.kind
    }

    pub fn ground(&self) -> &GroundSet {
        self.spec.ground()
    }

    pub fn fock(&self) -> &FockSpace {
        &self.fock
    }

    /// √K in the orthonormal site basis (kinds with a kernel operator).
    pub fn k1(&self) -> Option<&CMat> {
        self.k1.as_ref()
    }

    /// √(1−K) (fermionic) or √(1+K) (permanental).
    pub fn k2(&self) -> Option<&CMat> {
        self.k2.as_ref()
    }

    /// The particle density ρ(Δ) as a normal-ordered expression:
    /// pair creation + pair annihilation + one-body transport + constant.
    pub fn particle_density(&self, delta: &Region) -> Result<OperatorExpr> {
        let m = self.spec.ground.len();
        if let Some(&bad) = delta.sites().iter().find(|&&s| s >= m) {
            return Err(Error::Domain(format!(
                "window refers to site {} but the ground set has {} sites",
                bad, m
            )));
        }
        match self.spec.kind {
            RepKind::CarHermitian => Ok(self.doubled_density(&window_projector(m, delta), -1.0, {
                let k = self.spec.k.as_ref().unwrap();
                delta.iter().map(|i| k[[i, i]]).sum()
            })),
            RepKind::CarJHermitian => {
                let parts_const: C64 = {
                    let k = self.spec.k.as_ref().unwrap();
                    let parts = self.spec.ground.parts().unwrap();
                    delta
                        .iter()
                        .map(|i| if parts[i] == 1 { k[[i, i]] } else { cr(1.0) - k[[i, i]] })
                        .sum()
                };
                Ok(self.doubled_density(
                    &window_j_projector(&self.spec.ground, delta),
                    -1.0,
                    parts_const,
                ))
            }
            RepKind::CcrPermanental => Ok(self.doubled_density(&window_projector(m, delta), 1.0, {
                let k = self.spec.k.as_ref().unwrap();
                delta.iter().map(|i| k[[i, i]]).sum()
            })),
            RepKind::CcrPoisson => {
                let chi = CVec::from_shape_fn(m, |i| {
                    if delta.contains(i) {
                        cr(self.spec.ground.weight(i).sqrt())
                    } else {
                        czero()
                    }
                });
                Ok(OperatorExpr::Sum(vec![
                    OperatorExpr::Create1(chi.clone()),
                    OperatorExpr::Annihilate1(chi),
                    OperatorExpr::DGamma(window_projector(m, delta)),
                    OperatorExpr::Const(cr(self.spec.ground.sigma(delta))),
                ]))
            }
            RepKind::CcrHafnian => Ok(self.hafnian_density(delta)),
        }
    }

    /// Common shape of the doubled-space densities: with W the window (or
    /// J-twisted window) matrix,
    /// a⁺((K₂WK₁)_{2,1}) + a⁻(同) + dΓ((ε·conj(K₁WK₁)) ⊕ (K₂WK₂)) + const,
    /// where ε = −1 for the fermionic kinds and +1 for the permanental one.
    fn doubled_density(&self, w: &CMat, eps: f64, constant: C64) -> OperatorExpr {
        let m = self.spec.ground.len();
        let k1 = self.k1.as_ref().unwrap();
        let k2 = self.k2.as_ref().unwrap();
        let k2wk1 = k2.dot(w).dot(k1);
        let mut pair = CMat::from_elem((2 * m, 2 * m), czero());
        for i in 0..m {
            for j in 0..m {
                // (T)_{2,1}: first tensor slot from copy 2, second from copy 1
                pair[[m + i, j]] = k2wk1[[i, j]];
            }
        }
        let copy1 = k1.dot(w).dot(k1).mapv(|z| z.conj() * eps);
        let copy2 = k2.dot(w).dot(k2);
        OperatorExpr::Sum(vec![
            OperatorExpr::Create2(pair.clone()),
            OperatorExpr::Annihilate2(pair),
            OperatorExpr::DGamma(block_diag2(&copy1, &copy2)),
            OperatorExpr::Const(constant),
        ])
    }

    /// Normal ordering of Σ_{k∈Δ} σ_k A⁺(x_k)A⁻(x_k) for the two-channel Cox
    /// kind, with A±(x) the shifted ladder fields carrying the auxiliary
    /// vectors; the constant collects the CCR commutators σ_k‖L₁(x_k)‖².
    fn hafnian_density(&self, delta: &Region) -> OperatorExpr {
        let m = self.spec.ground.len();
        let g = self.spec.aux_dim();
        let (l1, l2) = self.spec.aux_vectors().unwrap();
        let total = m + g;
        let mut pair = CMat::from_elem((total, total), czero());
        let mut body = CMat::from_elem((total, total), czero());
        let mut constant = czero();
        for k in delta.iter() {
            let s = self.spec.ground.weight(k);
            let rs = s.sqrt();
            body[[k, k]] += cr(1.0);
            for b in 0..g {
                pair[[k, m + b]] += cr(rs) * l1[k][b];
                body[[k, m + b]] += cr(rs) * l2[k][b];
                body[[m + b, k]] += cr(rs) * l2[k][b].conj();
                for a in 0..g {
                    pair[[m + a, m + b]] += cr(s) * l2[k][a].conj() * l1[k][b];
                    body[[m + a, m + b]] +=
                        cr(s) * (l2[k][a].conj() * l2[k][b] + l1[k][a] * l1[k][b].conj());
                }
                constant += cr(s) * l1[k][b] * l1[k][b].conj();
            }
        }
        OperatorExpr::Sum(vec![
            OperatorExpr::Create2(pair.clone()),
            OperatorExpr::Annihilate2(pair),
            OperatorExpr::DGamma(body),
            OperatorExpr::Const(constant),
        ])
    }

    /// Field operators A⁺, A⁻ and b = A⁺ + A⁻ for a one-particle vector in
    /// the orthonormal site basis. A⁻(φ) is the adjoint of A⁺(φ).
    pub fn field_operator(&self, phi: &CVec, flavor: FieldFlavor) -> Result<OperatorExpr> {
        let m = self.spec.ground.len();
        if phi.len() != m {
            return Err(Error::Domain(format!(
                "field argument has {} entries, ground set has {} sites",
                phi.len(),
                m
            )));
        }
        if flavor == FieldFlavor::B {
            return Ok(OperatorExpr::Sum(vec![
                self.field_operator(phi, FieldFlavor::Plus)?,
                self.field_operator(phi, FieldFlavor::Minus)?,
            ]));
        }
        let (create_arg, annihilate_arg) = match self.spec.kind {
            RepKind::CarHermitian | RepKind::CcrPermanental => {
                let k1 = self.k1.as_ref().unwrap();
                let k2 = self.k2.as_ref().unwrap();
                // A⁺(φ) = a⁺₂(K₂φ) + a⁻₁(conj(K₁φ))
                let up = embed_vec(2 * m, m, &k2.dot(phi));
                let down = embed_vec(2 * m, 0, &k1.dot(phi).mapv(|z| z.conj()));
                (up, down)
            }
            RepKind::CarJHermitian => {
                let k1 = self.k1.as_ref().unwrap();
                let k2 = self.k2.as_ref().unwrap();
                let parts = self.spec.ground.parts().unwrap();
                let p1 = CVec::from_shape_fn(m, |i| if parts[i] == 1 { phi[i] } else { czero() });
                let p2 = CVec::from_shape_fn(m, |i| if parts[i] == 2 { phi[i] } else { czero() });
                // A⁺(φ) = a⁺(conj(K₁)P₂φ, K₂P₁φ) + a⁻(conj(K₁P₁φ), conj(K₂P₂φ))
                let up_c1 = k1.mapv(|z| z.conj()).dot(&p2);
                let up_c2 = k2.dot(&p1);
                let down_c1 = k1.dot(&p1).mapv(|z| z.conj());
                let down_c2 = k2.dot(&p2).mapv(|z| z.conj());
                let up = embed_vec(2 * m, 0, &up_c1) + embed_vec(2 * m, m, &up_c2);
                let down = embed_vec(2 * m, 0, &down_c1) + embed_vec(2 * m, m, &down_c2);
                (up, down)
            }
            RepKind::CcrPoisson => {
                let shift: C64 = phi
                    .iter()
                    .enumerate()
                    .map(|(i, z)| z * cr(self.spec.ground.weight(i).sqrt()))
                    .sum();
                let term = match flavor {
                    FieldFlavor::Plus => OperatorExpr::Sum(vec![
                        OperatorExpr::Create1(phi.clone()),
                        OperatorExpr::Const(shift),
                    ]),
                    _ => OperatorExpr::Sum(vec![
                        OperatorExpr::Annihilate1(phi.clone()),
                        OperatorExpr::Const(shift.conj()),
                    ]),
                };
                return Ok(term);
            }
            RepKind::CcrHafnian => {
                let g = self.spec.aux_dim();
                let (l1, l2) = self.spec.aux_vectors().unwrap();
                // A⁺(h) = a⁺(h ⊕ ∫h·conj(L₂)dσ) + a⁻(0 ⊕ ∫conj(h)·L₁dσ)
                let mut f2 = CVec::from_elem(g, czero());
                let mut f1 = CVec::from_elem(g, czero());
                for k in 0..m {
                    let rs = cr(self.spec.ground.weight(k).sqrt());
                    for b in 0..g {
                        f2[b] += phi[k] * rs * l2[k][b].conj();
                        f1[b] += phi[k].conj() * rs * l1[k][b];
                    }
                }
                let up = embed_vec(m + g, 0, phi) + embed_vec(m + g, m, &f2);
                let down = embed_vec(m + g, m, &f1);
                (up, down)
            }
        };
        Ok(match flavor {
            FieldFlavor::Plus => OperatorExpr::Sum(vec![
                OperatorExpr::Create1(create_arg),
                OperatorExpr::Annihilate1(annihilate_arg),
            ]),
            FieldFlavor::Minus => OperatorExpr::Sum(vec![
                OperatorExpr::Annihilate1(create_arg),
                OperatorExpr::Create1(annihilate_arg),
            ]),
            FieldFlavor::B => unreachable!("handled above"),
        })
    }
}
