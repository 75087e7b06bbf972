//! Named check suites over a representation spec: moment–kernel identities,
//! truncation exactness, density-operator structure, field-algebra relations,
//! quasi-freeness, and the exact spectral law, reported as machine-readable
//! JSON. Also houses seeded random-instance generators shared by the CLI and
//! the integration suites.

use num_complex::Complex64 as C64;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground::{falling_factorial_measure, Configuration, GroundSet, Region};
use crate::linalg::{adjoint, cr, czero, hermitian_eig, identity, max_abs_diff, CMat, CVec, RMat};
use crate::moments::{
    correlation_measure, det2_prediction, gauge_quasifree_checks, inclusion_exclusion_law,
    joint_spectral_law, kernel_prediction, representation_for_order, vacuum_moment,
    wick_polynomial, MomentCheck,
};
use crate::rep::{
    build_representation, dense_matrix, FieldFlavor, RepKind, Representation, RepresentationSpec,
};

/// One named comparison in a verification report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub lhs: C64,
    pub rhs: C64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub pass: bool,
}

impl From<&MomentCheck> for CheckResult {
    fn from(c: &MomentCheck) -> CheckResult {
        CheckResult {
            name: c.name.clone(),
            lhs: c.lhs,
            rhs: c.rhs,
            abs_err: c.abs_err(),
            rel_err: c.rel_err(),
            pass: c.pass(),
        }
    }
}

fn check_near(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> CheckResult {
    CheckResult::from(&MomentCheck::near(name, cr(lhs), cr(rhs), tol))
}

/// The full result set of one verification run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub kind: String,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn new(kind: impl Into<String>, checks: Vec<CheckResult>) -> VerifyReport {
        let passed = checks.iter().all(|c| c.pass);
        VerifyReport { kind: kind.into(), checks, passed }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Validation(format!("report serialization failed: {}", e)))
    }

    pub fn from_json(text: &str) -> Result<VerifyReport> {
        serde_json::from_str(text)
            .map_err(|e| Error::Validation(format!("report parse failed: {}", e)))
    }
}

/// Tolerances and scope knobs for [`run_verify`].
#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Moment orders to verify (each in 1..=4).
    pub orders: Vec<usize>,
    /// Relative tolerance for moment–kernel comparisons.
    pub rtol: f64,
    /// Tolerance for identities that are exact up to roundoff.
    pub atol: f64,
    /// Top even field-moment order for the quasi-freeness checks
    /// (0 disables the field layer; otherwise 2..=6).
    pub field_order: usize,
    /// Cross-check the exact joint spectral law (fermionic kinds, ≤ 4 sites).
    pub spectral: bool,
}

impl Default for VerifyOptions {
    fn default() -> VerifyOptions {
        VerifyOptions { orders: vec![1, 2, 3], rtol: 1e-9, atol: 1e-12, field_order: 4, spectral: true }
    }
}

fn factorial(n: usize) -> f64 {
    (2..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Deterministic box families probing order n on m sites: the n-fold full
/// window, and n staggered overlapping windows of width ⌈m/2⌉.
fn box_families(m: usize, n: usize) -> Vec<(&'static str, Vec<Region>)> {
    let full = vec![Region::full(m); n];
    let w = m.div_ceil(2);
    let windows: Vec<Region> = (0..n)
        .map(|a| Region::from_sites((0..w).map(|t| (a + t) % m)))
        .collect();
    vec![("full", full), ("windows", windows)]
}

fn real_trial_vectors(m: usize, count: usize, seed: u64) -> Vec<CVec> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| CVec::from_shape_fn(m, |_| cr(rng.random::<f64>() - 0.5)))
        .collect()
}

fn kernel_is_real(spec: &RepresentationSpec) -> bool {
    spec.scaled_kernel()
        .map(|k| k.iter().all(|z| z.im.abs() <= 1e-14))
        .unwrap_or(true)
}

/// Runs the named check suite for one spec. Field-algebra and quasi-freeness
/// checks are skipped for J-twisted specs with genuinely complex kernels:
/// their displayed creation/annihilation operators form a CAR family only
/// over real kernels, while the particle-density layer (always verified)
/// is valid for complex Hermitian kernels too.
pub fn run_verify(spec: &RepresentationSpec, opts: &VerifyOptions) -> Result<VerifyReport> {
    if opts.orders.is_empty() {
        return Err(Error::Domain("verification needs at least one moment order".into()));
    }
    if opts.orders.iter().any(|&n| n == 0 || n > 4) {
        return Err(Error::Domain("moment orders must lie in 1..=4".into()));
    }
    if opts.rtol <= 0.0 || opts.atol <= 0.0 {
        return Err(Error::Domain("tolerances must be positive".into()));
    }
    if opts.field_order != 0 && !(2..=6).contains(&opts.field_order) {
        return Err(Error::Domain("field order must be 0 or lie in 2..=6".into()));
    }
    let m = spec.ground().len();
    let max_order = *opts.orders.iter().max().expect("non-empty orders");
    let mut checks: Vec<CheckResult> = Vec::new();

    for &n in &opts.orders {
        let rep = representation_for_order(spec, n, 0)?;
        for (tag, boxes) in box_families(m, n) {
            let lhs = factorial(n) * correlation_measure(&rep, &boxes)?;
            let rhs = kernel_prediction(spec, &boxes)?;
            checks.push(check_near(
                format!("moment_kernel_identity_n{}_{}", n, tag),
                lhs,
                rhs,
                opts.rtol,
            ));
        }
        if !spec.kind().is_fermionic() {
            let wide = representation_for_order(spec, n, 2)?;
            let boxes = box_families(m, n).pop().expect("two families").1;
            let lhs = correlation_measure(&rep, &boxes)?;
            let rhs = correlation_measure(&wide, &boxes)?;
            checks.push(check_near(format!("truncation_invariance_n{}", n), lhs, rhs, opts.atol));
        }
    }

    if max_order >= 2 && m >= 2 {
        let rep = representation_for_order(spec, 2, 0)?;
        let boxes = box_families(m, 2).pop().expect("two families").1;
        let swapped = vec![boxes[1].clone(), boxes[0].clone()];
        let lhs = vacuum_moment(&rep, &wick_polynomial(&rep, &boxes)?)?;
        let rhs = vacuum_moment(&rep, &wick_polynomial(&rep, &swapped)?)?;
        checks.push(CheckResult::from(&MomentCheck::near(
            "wick_permutation_symmetry",
            lhs,
            rhs,
            opts.atol,
        )));
    }

    density_checks(spec, opts, &mut checks)?;

    if opts.field_order >= 2 {
        if spec.kind() == RepKind::CarJHermitian && !kernel_is_real(spec) {
            // no field layer: see the function docs
        } else {
            let cap = opts.field_order.max(6);
            let rep = build_representation(&spec.clone().with_cap(cap))?;
            let trials = real_trial_vectors(m, opts.field_order.max(6), 0x7A1A15);
            for c in gauge_quasifree_checks(&rep, opts.field_order, &trials)? {
                checks.push(CheckResult::from(&c));
            }
            algebra_check(&rep, opts.atol, &mut checks)?;
        }
    }

    if opts.spectral && spec.kind().is_fermionic() && m <= 4 {
        let rep = representation_for_order(spec, 1, 0)?;
        let law = joint_spectral_law(&rep)?;
        let oracle = inclusion_exclusion_law(spec)?;
        checks.push(check_near(
            "spectral_law_total_variation",
            law.total_variation(&oracle),
            0.0,
            1e-8,
        ));
        checks.push(check_near("spectral_law_normalization", law.total(), 1.0, 1e-8));
        for &n in &opts.orders {
            let boxes = box_families(m, n).pop().expect("two families").1;
            let mut marginal = 0.0;
            for mask in 0..(1usize << m) {
                let sites: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).collect();
                let gamma = Configuration::from_sites(m, &sites);
                let weight = falling_factorial_measure(&gamma, &boxes)? as f64;
                marginal += law.table()[mask] * weight;
            }
            let rep_n = representation_for_order(spec, n, 0)?;
            let target = factorial(n) * correlation_measure(&rep_n, &boxes)?;
            checks.push(check_near(format!("spectral_marginal_n{}", n), marginal, target, 1e-8));
        }
    }

    Ok(VerifyReport::new(spec.kind().name(), checks))
}

/// Structure of the particle-density family: Hermiticity, additivity over
/// disjoint windows, and commutativity (probed on vectors supported low
/// enough that truncation cannot bite for the CCR kinds).
fn density_checks(
    spec: &RepresentationSpec,
    opts: &VerifyOptions,
    checks: &mut Vec<CheckResult>,
) -> Result<()> {
    let rep = representation_for_order(spec, 1, 2)?;
    let fock = rep.fock();
    let m = spec.ground().len();
    let singles: Vec<CMat> = (0..m)
        .map(|i| dense_matrix(&rep.particle_density(&Region::from_sites([i]))?, fock))
        .collect::<Result<_>>()?;
    let full = dense_matrix(&rep.particle_density(&Region::full(m))?, fock)?;

    let herm = singles
        .iter()
        .map(|d| max_abs_diff(d, &adjoint(d)))
        .fold(0.0, f64::max);
    checks.push(check_near("density_hermiticity", herm, 0.0, opts.atol));

    let mut total = CMat::from_elem((fock.dim(), fock.dim()), czero());
    for d in &singles {
        total += d;
    }
    checks.push(check_near(
        "density_additivity",
        max_abs_diff(&full, &total),
        0.0,
        opts.atol,
    ));

    let mut rng = ChaCha12Rng::seed_from_u64(0xD15C);
    let mut probe = CVec::from_shape_fn(fock.dim(), |_| {
        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    for b in 0..fock.dim() {
        if !spec.kind().is_fermionic() && fock.total_occupation(b) as usize + 4 > fock.cap() {
            probe[b] = czero();
        }
    }
    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    for i in 0..m {
        for j in (i + 1)..m {
            let a = singles[i].dot(&singles[j].dot(&probe));
            let b = singles[j].dot(&singles[i].dot(&probe));
            scale = a.iter().map(|z| z.norm()).fold(scale, f64::max);
            worst = a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| (x - y).norm())
                .fold(worst, f64::max);
        }
    }
    checks.push(check_near("density_commutation", worst / scale, 0.0, opts.atol));
    Ok(())
}

/// CAR anticommutator / CCR commutator residual of the displayed field
/// operators on one deterministic trial pair.
fn algebra_check(rep: &Representation, atol: f64, checks: &mut Vec<CheckResult>) -> Result<()> {
    let m = rep.ground().len();
    let mut rng = ChaCha12Rng::seed_from_u64(0xA16E);
    let mut draw = || {
        CVec::from_shape_fn(m, |_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    };
    let phi = draw();
    let psi = draw();
    let ap = dense_matrix(&rep.field_operator(&psi, FieldFlavor::Plus)?, rep.fock())?;
    let am = dense_matrix(&rep.field_operator(&phi, FieldFlavor::Minus)?, rep.fock())?;
    let inner: C64 = psi.iter().zip(phi.iter()).map(|(a, b)| a * b.conj()).sum();
    if rep.kind().is_fermionic() {
        let anti = am.dot(&ap) + ap.dot(&am);
        let expect = identity(rep.fock().dim()).mapv(|z| z * inner);
        checks.push(check_near(
            "car_anticommutator_residual",
            max_abs_diff(&anti, &expect),
            0.0,
            atol.max(1e-12),
        ));
    } else {
        let comm = am.dot(&ap) - ap.dot(&am);
        let mut worst = 0.0f64;
        for col in 0..rep.fock().dim() {
            if rep.fock().total_occupation(col) as usize + 2 > rep.fock().cap() {
                continue;
            }
            for row in 0..rep.fock().dim() {
                let expect = if row == col { inner } else { czero() };
                worst = worst.max((comm[[row, col]] - expect).norm());
            }
        }
        checks.push(check_near("ccr_commutator_residual", worst, 0.0, atol.max(1e-12)));
    }
    Ok(())
}

/// Second-quantized-determinant cross-check on a real symmetric PSD kernel:
/// the two-channel spec built from it has both kernels equal to the input,
/// so det₂ predictions, doubled-hafnian predictions, and operator moments
/// must all agree.
pub fn det2_cross_check(
    ground: GroundSet,
    kernel: &CMat,
    orders: &[usize],
    rtol: f64,
) -> Result<VerifyReport> {
    let spec = RepresentationSpec::ccr_hafnian_from_symmetric_kernel(ground, kernel)?;
    let m = spec.ground().len();
    let mut checks = Vec::new();
    for &n in orders {
        if n == 0 || n > 3 {
            return Err(Error::Domain("det₂ cross-check orders must lie in 1..=3".into()));
        }
        for (tag, boxes) in box_families(m, n) {
            let lhs = det2_prediction(&spec, kernel, &boxes)?;
            let rhs = kernel_prediction(&spec, &boxes)?;
            checks.push(check_near(
                format!("det2_matches_hafnian_n{}_{}", n, tag),
                lhs,
                rhs,
                rtol.max(1e-10),
            ));
        }
        let rep = representation_for_order(&spec, n, 0)?;
        let boxes = box_families(m, n).pop().expect("two families").1;
        let lhs = factorial(n) * correlation_measure(&rep, &boxes)?;
        let rhs = det2_prediction(&spec, kernel, &boxes)?;
        checks.push(check_near(format!("det2_moment_identity_n{}", n), lhs, rhs, rtol));
    }
    Ok(VerifyReport::new("det2_cross_check", checks))
}

/// Runs [`run_verify`] over seeded random instances (site count cycling
/// through 2..=max_sites), merging all checks into one report with
/// per-instance name prefixes. Instances are processed in parallel; the
/// report order and content depend only on (kind, instances, max_sites,
/// seed, opts).
pub fn run_random_suite(
    kind: RepKind,
    instances: usize,
    max_sites: usize,
    seed: u64,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    if instances == 0 {
        return Err(Error::Domain("random suite needs at least one instance".into()));
    }
    if max_sites < 2 {
        return Err(Error::Domain("random suite needs max_sites ≥ 2".into()));
    }
    let per_instance: Vec<Vec<CheckResult>> = (0..instances)
        .into_par_iter()
        .map(|idx| {
            let sites = 2 + idx % (max_sites - 1);
            let spec = random_instance(kind, sites, seed.wrapping_add(idx as u64))?;
            let report = run_verify(&spec, opts)?;
            Ok(report
                .checks
                .into_iter()
                .map(|mut c| {
                    c.name = format!("i{:02}_{}", idx, c.name);
                    c
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(VerifyReport::new(kind.name(), per_instance.into_iter().flatten().collect()))
}

// ---------------------------------------------------------------------------
// seeded random instances

fn random_cvec(n: usize, rng: &mut impl Rng) -> CVec {
    CVec::from_shape_fn(n, |_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

fn remap_spectrum(h: &CMat, lo: f64, hi: f64) -> CMat {
    let m = h.nrows();
    let (evals, u) = hermitian_eig(h);
    let (emin, emax) = (evals[0], evals[evals.len() - 1]);
    let span = (emax - emin).max(1e-6);
    let ustar = adjoint(&u);
    let mut out = CMat::from_elem((m, m), czero());
    for (idx, &ev) in evals.iter().enumerate() {
        let mapped = lo + (ev - emin) / span * (hi - lo);
        for r in 0..m {
            for c in 0..m {
                out[[r, c]] += u[[r, idx]] * ustar[[idx, c]] * mapped;
            }
        }
    }
    out
}

/// Random Hermitian matrix with spectrum inside [lo, hi].
pub fn random_kernel_in(m: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> CMat {
    let a = CMat::from_shape_fn((m, m), |_| {
        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let h = (&a + &adjoint(&a)).mapv(|z| z * 0.5);
    remap_spectrum(&h, lo, hi)
}

/// Random real symmetric matrix with spectrum inside [lo, hi]. The J-twisted
/// family's field operators form a CAR family only over real kernels, so its
/// field-level checks draw from here.
pub fn random_real_kernel_in(m: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> CMat {
    let a = CMat::from_shape_fn((m, m), |_| cr(rng.random::<f64>() - 0.5));
    let h = (&a + &adjoint(&a)).mapv(|z| z * 0.5);
    remap_spectrum(&h, lo, hi)
}

/// Valid two-channel auxiliary data: L₂(x) = U·L₁(x) with U symmetric
/// unitary, which satisfies every cross-channel constraint.
pub fn random_hafnian_vectors(
    m: usize,
    g: usize,
    scale: f64,
    rng: &mut impl Rng,
) -> (Vec<CVec>, Vec<CVec>) {
    // U = Q e^{iΛ} Qᵀ with Q real orthogonal: unitary and symmetric
    let s = RMat::from_shape_fn((g, g), |_| rng.random::<f64>() - 0.5);
    let sym = {
        let mut t = s.clone();
        for i in 0..g {
            for j in 0..g {
                t[[i, j]] = (s[[i, j]] + s[[j, i]]) * 0.5;
            }
        }
        t
    };
    let symc = sym.mapv(cr);
    let (evals, q) = hermitian_eig(&symc);
    let mut u = CMat::from_elem((g, g), czero());
    let qt = {
        let mut t = CMat::from_elem((g, g), czero());
        for i in 0..g {
            for j in 0..g {
                t[[i, j]] = q[[j, i]]; // plain transpose: q is real orthogonal here
            }
        }
        t
    };
    for (idx, &ev) in evals.iter().enumerate() {
        let phase = C64::from_polar(1.0, ev);
        for r in 0..g {
            for c in 0..g {
                u[[r, c]] += q[[r, idx]] * phase * qt[[idx, c]];
            }
        }
    }
    let l1: Vec<CVec> = (0..m).map(|_| random_cvec(g, rng).mapv(|z| z * scale)).collect();
    let l2: Vec<CVec> = l1.iter().map(|v| u.dot(v)).collect();
    (l1, l2)
}

/// A seeded valid spec of the given kind: weights in [0.5, 1.5], kernels with
/// admissible spectra, two-channel data from [`random_hafnian_vectors`].
/// J-twisted instances get complex Hermitian kernels (valid at the density
/// and moment layers; [`run_verify`] skips their field layer accordingly).
pub fn random_instance(kind: RepKind, sites: usize, seed: u64) -> Result<RepresentationSpec> {
    if sites == 0 {
        return Err(Error::Domain("random instances need at least one site".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..sites).map(|_| 0.5 + rng.random::<f64>()).collect();
    match kind {
        RepKind::CarHermitian => RepresentationSpec::car_hermitian(
            GroundSet::new(weights)?,
            random_kernel_in(sites, 0.05, 0.95, &mut rng),
        ),
        RepKind::CarJHermitian => {
            let parts: Vec<u8> = (0..sites).map(|i| if i % 2 == 0 { 1 } else { 2 }).collect();
            RepresentationSpec::car_jhermitian(
                GroundSet::with_parts(weights, parts)?,
                random_kernel_in(sites, 0.05, 0.95, &mut rng),
            )
        }
        RepKind::CcrPoisson => RepresentationSpec::ccr_poisson(GroundSet::new(weights)?),
        RepKind::CcrPermanental => RepresentationSpec::ccr_permanental(
            GroundSet::new(weights)?,
            random_kernel_in(sites, 0.1, 1.2, &mut rng),
        ),
        RepKind::CcrHafnian => {
            let g = 2.min(sites);
            let (l1, l2) = random_hafnian_vectors(sites, g, 0.7, &mut rng);
            RepresentationSpec::ccr_hafnian(GroundSet::new(weights)?, l1, l2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_suite_passes_for_every_kind() {
        let opts = VerifyOptions { orders: vec![1, 2], ..VerifyOptions::default() };
        for kind in [
            RepKind::CarHermitian,
            RepKind::CarJHermitian,
            RepKind::CcrPoisson,
            RepKind::CcrPermanental,
            RepKind::CcrHafnian,
        ] {
            let spec = random_instance(kind, 3, 414).unwrap();
            let report = run_verify(&spec, &opts).unwrap();
            let failures: Vec<&CheckResult> =
                report.checks.iter().filter(|c| !c.pass).collect();
            assert!(
                report.passed,
                "kind {:?} failures: {:?}",
                kind,
                failures.iter().map(|c| (&c.name, c.rel_err)).collect::<Vec<_>>()
            );
            assert!(report
                .checks
                .iter()
                .any(|c| c.name.contains("moment_kernel_identity")));
        }
    }

    #[test]
    fn jhermitian_complex_kernel_skips_field_layer() {
        let spec = random_instance(RepKind::CarJHermitian, 3, 77).unwrap();
        let report = run_verify(&spec, &VerifyOptions::default()).unwrap();
        assert!(report.passed);
        assert!(!report.checks.iter().any(|c| c.name.starts_with("field_")));
        assert!(report.checks.iter().any(|c| c.name == "density_commutation"));
        // a real-kernel J instance does get the field layer
        let mut rng = ChaCha12Rng::seed_from_u64(78);
        let ground =
            GroundSet::with_parts(vec![1.0, 0.8, 1.2], vec![1, 2, 1]).unwrap();
        let real_spec = RepresentationSpec::car_jhermitian(
            ground,
            random_real_kernel_in(3, 0.1, 0.9, &mut rng),
        )
        .unwrap();
        let real_report = run_verify(&real_spec, &VerifyOptions::default()).unwrap();
        assert!(real_report.passed, "failures: {:?}", real_report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| &c.name)
            .collect::<Vec<_>>());
        assert!(real_report
            .checks
            .iter()
            .any(|c| c.name == "car_anticommutator_residual"));
        assert!(real_report.checks.iter().any(|c| c.name == "gauge_invariance_violation"));
    }

    #[test]
    fn report_json_roundtrip() {
        let spec = random_instance(RepKind::CcrPoisson, 2, 9).unwrap();
        let opts = VerifyOptions { orders: vec![1], field_order: 0, ..VerifyOptions::default() };
        let report = run_verify(&spec, &opts).unwrap();
        let text = report.to_json().unwrap();
        let back = VerifyReport::from_json(&text).unwrap();
        assert_eq!(report.passed, back.passed);
        assert_eq!(report.checks.len(), back.checks.len());
        for (a, b) in report.checks.iter().zip(back.checks.iter()) {
            assert_eq!(a.name, b.name);
            assert!((a.lhs - b.lhs).norm() < 1e-15);
        }
    }

    #[test]
    fn det2_cross_check_on_real_kernel() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let k = random_real_kernel_in(3, 0.1, 0.8, &mut rng);
        let ground = GroundSet::new(vec![1.0, 0.7, 1.3]).unwrap();
        let report = det2_cross_check(ground, &k, &[1, 2], 1e-9).unwrap();
        assert!(report.passed, "failures: {:?}", report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| (&c.name, c.rel_err))
            .collect::<Vec<_>>());
        assert!(report.checks.iter().any(|c| c.name.starts_with("det2_moment_identity")));
    }

    #[test]
    fn random_suite_merges_and_is_deterministic() {
        let opts = VerifyOptions { orders: vec![1], field_order: 0, spectral: false, ..VerifyOptions::default() };
        let a = run_random_suite(RepKind::CarHermitian, 3, 3, 5, &opts).unwrap();
        let b = run_random_suite(RepKind::CarHermitian, 3, 3, 5, &opts).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert!(a.passed);
        assert!(a.checks.iter().any(|c| c.name.starts_with("i02_")));
    }

    #[test]
    fn options_are_validated() {
        let spec = random_instance(RepKind::CcrPoisson, 2, 1).unwrap();
        let bad = VerifyOptions { orders: vec![], ..VerifyOptions::default() };
        assert!(run_verify(&spec, &bad).is_err());
        let bad = VerifyOptions { orders: vec![5], ..VerifyOptions::default() };
        assert!(run_verify(&spec, &bad).is_err());
        let bad = VerifyOptions { rtol: 0.0, ..VerifyOptions::default() };
        assert!(run_verify(&spec, &bad).is_err());
        let bad = VerifyOptions { field_order: 1, ..VerifyOptions::default() };
        assert!(run_verify(&spec, &bad).is_err());
    }
}
