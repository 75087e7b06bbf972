//! Acceptance suite: one test per release criterion, each asserting the
//! stated tolerance and printing a single pass line. Runtime-bounded
//! criteria assert their wall-clock budget.

use std::process::Command;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

use fockpoint::ground::{
    falling_factorial_measure, k_transform, star_convolve, star_pd_gram, ConfigFunction,
    Configuration, GroundSet, Region,
};
use fockpoint::linalg::{cr, czero, hermitian_eig, identity, lu_det, max_abs, max_abs_diff,
                        submatrix};
use fockpoint::matfn::{det2, doubled_kernel_matrix, hafnian, permanent};
use fockpoint::moments::{
    correlation_measure, gauge_quasifree_checks, inclusion_exclusion_law, joint_spectral_law,
    kernel_prediction, representation_for_order, vacuum_moment,
};
use fockpoint::rep::{
    build_representation, dense_matrix, FieldFlavor, OperatorExpr, RepKind, RepresentationSpec,
};
use fockpoint::sampling::{
    complex_mean_stderr, estimate_correlations, sample_complex_gaussian, sample_point_process,
};
use fockpoint::verify::{
    random_hafnian_vectors, random_kernel_in, random_real_kernel_in, run_random_suite,
    VerifyOptions,
};
use fockpoint::{CMat, CVec};

fn random_cvec(n: usize, rng: &mut impl Rng) -> CVec {
    CVec::from_shape_fn(n, |_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

fn unit_ground(m: usize) -> GroundSet {
    GroundSet::new(vec![1.0; m]).unwrap()
}

fn split_ground(m: usize, rng: &mut impl Rng) -> GroundSet {
    let weights: Vec<f64> = (0..m).map(|_| 0.5 + rng.random::<f64>()).collect();
    let parts: Vec<u8> = (0..m).map(|i| if i % 2 == 0 { 1 } else { 2 }).collect();
    GroundSet::with_parts(weights, parts).unwrap()
}

#[test]
fn criterion_1_algebra_relations() {
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(101);
    // CAR on doubled spaces up to 8 modes
    for m in 1..=4 {
        let mut specs = vec![RepresentationSpec::car_hermitian(
            unit_ground(m),
            random_kernel_in(m, 0.05, 0.95, &mut rng),
        )
        .unwrap()];
        if m >= 2 {
            specs.push(
                RepresentationSpec::car_jhermitian(
                    split_ground(m, &mut rng),
                    random_real_kernel_in(m, 0.05, 0.95, &mut rng),
                )
                .unwrap(),
            );
        }
        for spec in specs {
            let rep = build_representation(&spec).unwrap();
            let phi = random_cvec(m, &mut rng);
            let psi = random_cvec(m, &mut rng);
            let ap = dense_matrix(&rep.field_operator(&psi, FieldFlavor::Plus).unwrap(), rep.fock())
                .unwrap();
            let am =
                dense_matrix(&rep.field_operator(&phi, FieldFlavor::Minus).unwrap(), rep.fock())
                    .unwrap();
            let anti = am.dot(&ap) + ap.dot(&am);
            let inner: C64 = psi.iter().zip(phi.iter()).map(|(a, b)| a * b.conj()).sum();
            let residual = max_abs_diff(&anti, &identity(rep.fock().dim()).mapv(|z| z * inner));
            assert!(
                residual <= 1e-12,
                "{:?} m={} CAR residual {}",
                spec.kind(),
                m,
                residual
            );
        }
    }
    // CCR below the truncation top degree
    let m = 3;
    let ccr_specs = vec![
        RepresentationSpec::ccr_poisson(unit_ground(m)).unwrap(),
        RepresentationSpec::ccr_permanental(
            unit_ground(m),
            random_kernel_in(m, 0.1, 1.2, &mut rng),
        )
        .unwrap(),
        {
            let (l1, l2) = random_hafnian_vectors(m, 2, 0.7, &mut rng);
            RepresentationSpec::ccr_hafnian(unit_ground(m), l1, l2).unwrap()
        },
    ];
    for spec in ccr_specs {
        let rep = build_representation(&spec.clone().with_cap(4)).unwrap();
        let phi = random_cvec(m, &mut rng);
        let psi = random_cvec(m, &mut rng);
        let ap =
            dense_matrix(&rep.field_operator(&psi, FieldFlavor::Plus).unwrap(), rep.fock()).unwrap();
        let am = dense_matrix(&rep.field_operator(&phi, FieldFlavor::Minus).unwrap(), rep.fock())
            .unwrap();
        let comm = am.dot(&ap) - ap.dot(&am);
        let inner: C64 = psi.iter().zip(phi.iter()).map(|(a, b)| a * b.conj()).sum();
        let mut residual = 0.0f64;
        for col in 0..rep.fock().dim() {
            if rep.fock().total_occupation(col) as usize + 2 > rep.fock().cap() {
                continue;
            }
            for row in 0..rep.fock().dim() {
                let expect = if row == col { inner } else { czero() };
                residual = residual.max((comm[[row, col]] - expect).norm());
            }
        }
        assert!(residual <= 1e-12, "{:?} CCR residual {}", spec.kind(), residual);
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "algebra relations took {:.1} s", elapsed);
    println!("criterion 1 (algebra relations): PASS ({:.2} s)", elapsed);
}

#[test]
fn criterion_2_moment_kernel_identity() {
    let start = Instant::now();
    let opts = VerifyOptions {
        orders: vec![1, 2, 3],
        rtol: 1e-9,
        atol: 1e-12,
        field_order: 0,
        spectral: false,
    };
    for kind in [
        RepKind::CarHermitian,
        RepKind::CarJHermitian,
        RepKind::CcrPoisson,
        RepKind::CcrPermanental,
        RepKind::CcrHafnian,
    ] {
        let report = run_random_suite(kind, 20, 4, 202, &opts).unwrap();
        let failures: Vec<String> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{} rel={:.3e}", c.name, c.rel_err))
            .collect();
        assert!(report.passed, "{:?}: {:?}", kind, failures);
        assert!(report.checks.iter().any(|c| c.name.contains("moment_kernel_identity")));
        if !kind.is_fermionic() {
            assert!(report.checks.iter().any(|c| c.name.contains("truncation_invariance")));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "moment identity suite took {:.1} s", elapsed);
    println!("criterion 2 (moment–kernel identity, 5 kinds × 20 instances): PASS ({:.1} s)", elapsed);
}

#[test]
fn criterion_3_closed_forms() {
    // 1-site determinantal: τ(ρ) = c, τ(ρ²) = c
    let c = 0.37;
    let spec =
        RepresentationSpec::car_hermitian(GroundSet::new(vec![1.3]).unwrap(), CMat::from_elem((1, 1), cr(c)))
            .unwrap();
    let rep = build_representation(&spec).unwrap();
    let rho = rep.particle_density(&Region::from_sites([0usize])).unwrap();
    let t1 = vacuum_moment(&rep, &rho).unwrap();
    let t2 = vacuum_moment(&rep, &OperatorExpr::Product(vec![rho.clone(), rho])).unwrap();
    assert!((t1 - cr(c)).norm() <= 1e-12, "τ(ρ) = {}", t1);
    assert!((t2 - cr(c)).norm() <= 1e-12, "τ(ρ²) = {}", t2);

    // Poisson: τ(ρ²) = s + s²
    let s = 0.8;
    let spec = RepresentationSpec::ccr_poisson(GroundSet::new(vec![s]).unwrap()).unwrap();
    let rep = representation_for_order(&spec, 2, 2).unwrap();
    let rho = rep.particle_density(&Region::from_sites([0usize])).unwrap();
    let t2 = vacuum_moment(&rep, &OperatorExpr::Product(vec![rho.clone(), rho])).unwrap();
    assert!((t2 - cr(s + s * s)).norm() <= 1e-12, "poisson τ(ρ²) = {}", t2);

    // permanental: τ(ρ²) = c + 2c²
    let c = 0.6;
    let spec = RepresentationSpec::ccr_permanental(
        GroundSet::new(vec![1.0]).unwrap(),
        CMat::from_elem((1, 1), cr(c)),
    )
    .unwrap();
    let rep = representation_for_order(&spec, 2, 2).unwrap();
    let rho = rep.particle_density(&Region::from_sites([0usize])).unwrap();
    let t2 = vacuum_moment(&rep, &OperatorExpr::Product(vec![rho.clone(), rho])).unwrap();
    assert!((t2 - cr(c + 2.0 * c * c)).norm() <= 1e-12, "permanental τ(ρ²) = {}", t2);
    println!("criterion 3 (one-site closed forms): PASS");
}

#[test]
fn criterion_4_quasifree_structure() {
    let mut rng = ChaCha12Rng::seed_from_u64(404);
    let m = 3;
    let specs = vec![
        RepresentationSpec::car_hermitian(unit_ground(m), random_kernel_in(m, 0.05, 0.95, &mut rng))
            .unwrap(),
        RepresentationSpec::car_jhermitian(
            split_ground(m, &mut rng),
            random_real_kernel_in(m, 0.05, 0.95, &mut rng),
        )
        .unwrap(),
        RepresentationSpec::ccr_poisson(unit_ground(m)).unwrap(),
        RepresentationSpec::ccr_permanental(unit_ground(m), random_kernel_in(m, 0.1, 1.0, &mut rng))
            .unwrap(),
        {
            let (l1, l2) = random_hafnian_vectors(m, 2, 0.7, &mut rng);
            RepresentationSpec::ccr_hafnian(unit_ground(m), l1, l2).unwrap()
        },
    ];
    for spec in specs {
        let rep = build_representation(&spec.clone().with_cap(6)).unwrap();
        let trials: Vec<CVec> = (0..6)
            .map(|_| CVec::from_shape_fn(m, |_| cr(rng.random::<f64>() - 0.5)))
            .collect();
        let checks = gauge_quasifree_checks(&rep, 6, &trials).unwrap();
        for check in &checks {
            assert!(
                check.pass(),
                "{:?} {} lhs={} rhs={} rel={:.3e}",
                spec.kind(),
                check.name,
                check.lhs,
                check.rhs,
                check.rel_err()
            );
        }
        // T-odd and both even orders were exercised
        assert!(checks.iter().any(|c| c.name == "field_odd_moment_n5"));
        assert!(checks.iter().any(|c| c.name == "field_pair_partition_n4"));
        assert!(checks.iter().any(|c| c.name == "field_pair_partition_n6"));
        match spec.kind() {
            RepKind::CarHermitian | RepKind::CcrPermanental => {
                assert!(checks.iter().any(|c| c.name.starts_with("gauge_moment_s")));
            }
            RepKind::CarJHermitian | RepKind::CcrHafnian => {
                assert!(checks.iter().any(|c| c.name == "gauge_invariance_violation"));
            }
            RepKind::CcrPoisson => {}
        }
    }
    println!("criterion 4 (quasi-free and gauge structure): PASS");
}

fn random_config_function(
    ground: &GroundSet,
    entries: usize,
    max_total: u64,
    rng: &mut impl Rng,
) -> ConfigFunction {
    let m = ground.len();
    let mut f = ConfigFunction::zero(ground);
    for _ in 0..entries {
        let mut counts = vec![0u32; m];
        let mut total = 0u64;
        while total < max_total {
            let site = rng.random_range(0..m);
            if rng.random::<f64>() < 0.5 {
                break;
            }
            counts[site] += 1;
            total += 1;
        }
        f.add(
            &Configuration::from_counts(counts),
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
        );
    }
    f
}

fn brute_force_falling_factorial(gamma: &Configuration, boxes: &[Region]) -> i64 {
    // expand the configuration into labelled point instances
    let mut instances: Vec<usize> = Vec::new();
    for (site, &count) in gamma.counts().iter().enumerate() {
        for _ in 0..count {
            instances.push(site);
        }
    }
    let n = boxes.len();
    let mut total = 0i64;
    let mut pick = vec![usize::MAX; n];
    fn rec(
        instances: &[usize],
        boxes: &[Region],
        level: usize,
        pick: &mut Vec<usize>,
        total: &mut i64,
    ) {
        if level == boxes.len() {
            *total += 1;
            return;
        }
        for (idx, &site) in instances.iter().enumerate() {
            if pick[..level].contains(&idx) || !boxes[level].contains(site) {
                continue;
            }
            pick[level] = idx;
            rec(instances, boxes, level + 1, pick, total);
        }
    }
    rec(&instances, boxes, 0, &mut pick, &mut total);
    total
}

#[test]
fn criterion_5_k_transform_layer() {
    let mut rng = ChaCha12Rng::seed_from_u64(505);
    let ground = unit_ground(6);
    // product identity K(G1 ⋆ G2) = KG1 · KG2 on 200 random pairs
    for _ in 0..200 {
        let g1 = random_config_function(&ground, 4, 3, &mut rng);
        let g2 = random_config_function(&ground, 4, 3, &mut rng);
        let conv = star_convolve(&g1, &g2, 6).unwrap();
        for _ in 0..5 {
            let gamma = Configuration::from_counts(
                (0..6).map(|_| rng.random_range(0..3u32)).collect(),
            );
            let lhs = k_transform(&conv, &gamma).unwrap();
            let rhs = k_transform(&g1, &gamma).unwrap() * k_transform(&g2, &gamma).unwrap();
            assert!(
                (lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0),
                "K-transform product identity: {} vs {}",
                lhs,
                rhs
            );
        }
    }
    // falling-factorial recurrence agrees with brute-force tuple counting
    for _ in 0..100 {
        let gamma =
            Configuration::from_counts((0..6).map(|_| rng.random_range(0..2u32)).collect());
        let n = 1 + rng.random_range(0..3usize);
        let boxes: Vec<Region> = (0..n)
            .map(|_| {
                Region::from_sites((0..6).filter(|_| rng.random::<f64>() < 0.5))
            })
            .collect();
        let fast = falling_factorial_measure(&gamma, &boxes).unwrap();
        let slow = brute_force_falling_factorial(&gamma, &boxes);
        assert_eq!(fast, slow, "γ = {:?}", gamma.counts());
    }
    // ⋆-positive-definite Gram from a determinantal correlation measure
    let kernel = random_kernel_in(6, 0.05, 0.95, &mut rng);
    let mut theta = ConfigFunction::zero(&ground);
    for mask in 0..(1usize << 6) {
        let sites: Vec<usize> = (0..6).filter(|&i| mask >> i & 1 == 1).collect();
        let det = lu_det(&submatrix(&kernel, &sites));
        theta.set(&Configuration::from_sites(6, &sites), det);
    }
    let mut basis = vec![ConfigFunction::unit(&ground)];
    for sites in [vec![0usize], vec![1], vec![2], vec![0, 1], vec![1, 2], vec![3, 4, 5]] {
        let mut f = ConfigFunction::zero(&ground);
        f.set(&Configuration::from_sites(6, &sites), cr(1.0));
        basis.push(f);
    }
    let (_, min_eig) = star_pd_gram(&theta, &basis).unwrap();
    assert!(min_eig >= -1e-8, "⋆-Gram minimum eigenvalue {}", min_eig);
    println!("criterion 5 (K-transform layer): PASS");
}

fn brute_permanent(m: &CMat) -> C64 {
    fn rec(m: &CMat, row: usize, used: &mut Vec<bool>) -> C64 {
        let n = m.nrows();
        if row == n {
            return cr(1.0);
        }
        let mut acc = czero();
        for col in 0..n {
            if !used[col] {
                used[col] = true;
                acc += m[[row, col]] * rec(m, row + 1, used);
                used[col] = false;
            }
        }
        acc
    }
    rec(m, 0, &mut vec![false; m.nrows()])
}

fn brute_hafnian(m: &CMat) -> C64 {
    fn rec(m: &CMat, left: &mut Vec<usize>) -> C64 {
        if left.is_empty() {
            return cr(1.0);
        }
        let first = left[0];
        let mut acc = czero();
        for pos in 1..left.len() {
            let partner = left[pos];
            let mut rest: Vec<usize> =
                left.iter().copied().filter(|&x| x != first && x != partner).collect();
            acc += m[[first, partner]] * rec(m, &mut rest);
        }
        acc
    }
    rec(m, &mut (0..m.nrows()).collect())
}

fn brute_det2(m: &CMat) -> C64 {
    let n = m.nrows();
    let mut acc = czero();
    let mut perm: Vec<usize> = (0..n).collect();
    fn cycles(perm: &[usize]) -> usize {
        let mut seen = vec![false; perm.len()];
        let mut count = 0;
        for start in 0..perm.len() {
            if !seen[start] {
                count += 1;
                let mut at = start;
                while !seen[at] {
                    seen[at] = true;
                    at = perm[at];
                }
            }
        }
        count
    }
    fn rec(m: &CMat, perm: &mut Vec<usize>, level: usize, acc: &mut C64) {
        let n = perm.len();
        if level == n {
            let mut term = cr(2.0f64.powi((n - cycles(perm)) as i32));
            for i in 0..n {
                term *= m[[i, perm[i]]];
            }
            *acc += term;
            return;
        }
        for pos in level..n {
            perm.swap(level, pos);
            rec(m, perm, level + 1, acc);
            perm.swap(level, pos);
        }
    }
    rec(m, &mut perm, 0, &mut acc);
    acc
}

#[test]
fn criterion_6_matrix_functions() {
    let mut rng = ChaCha12Rng::seed_from_u64(606);
    for n in 1..=8 {
        let a = CMat::from_shape_fn((n, n), |_| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let fast = permanent(&a).unwrap();
        let slow = brute_permanent(&a);
        assert!((fast - slow).norm() <= 1e-10 * slow.norm().max(1.0), "per n={}", n);
    }
    for dim in [2usize, 4, 6, 8, 10] {
        let a = CMat::from_shape_fn((dim, dim), |_| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let sym = {
            let mut s = a.clone();
            for i in 0..dim {
                for j in 0..dim {
                    s[[i, j]] = (a[[i, j]] + a[[j, i]]) * 0.5;
                }
            }
            s
        };
        let fast = hafnian(&sym).unwrap();
        let slow = brute_hafnian(&sym);
        assert!((fast - slow).norm() <= 1e-10 * slow.norm().max(1.0), "haf dim={}", dim);

        // diagonal independence holds exactly
        let mut junk = sym.clone();
        for i in 0..dim {
            junk[[i, i]] = C64::new(1e6, -4.0);
        }
        assert_eq!(fast, hafnian(&junk).unwrap());
    }
    for n in 1..=6 {
        let a = CMat::from_shape_fn((n, n), |_| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let fast = det2(&a).unwrap();
        let slow = brute_det2(&a);
        assert!((fast - slow).norm() <= 1e-10 * slow.norm().max(1.0), "det2 n={}", n);
    }
    // det₂ equals the hafnian of the doubled matrix for real symmetric kernels
    for n in 1..=5 {
        let k = random_real_kernel_in(n, 0.1, 1.0, &mut rng);
        let doubled = doubled_kernel_matrix(&k, &k).unwrap();
        let lhs = det2(&k).unwrap();
        let rhs = hafnian(&doubled).unwrap();
        assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm().max(1.0), "det₂/doubled n={}", n);
    }
    println!("criterion 6 (matrix functions vs oracles): PASS");
}

#[test]
fn criterion_7_joint_spectral_law() {
    let mut rng = ChaCha12Rng::seed_from_u64(707);
    for m in 2..=3usize {
        let specs = vec![
            RepresentationSpec::car_hermitian(
                unit_ground(m),
                random_kernel_in(m, 0.05, 0.95, &mut rng),
            )
            .unwrap(),
            RepresentationSpec::car_jhermitian(
                split_ground(m, &mut rng),
                random_kernel_in(m, 0.05, 0.95, &mut rng),
            )
            .unwrap(),
        ];
        for spec in specs {
            let rep = build_representation(&spec).unwrap();
            // commuting density family
            let singles: Vec<CMat> = (0..m)
                .map(|i| {
                    dense_matrix(&rep.particle_density(&Region::from_sites([i])).unwrap(), rep.fock())
                        .unwrap()
                })
                .collect();
            for i in 0..m {
                for j in (i + 1)..m {
                    let comm = singles[i].dot(&singles[j]) - singles[j].dot(&singles[i]);
                    assert!(
                        max_abs(&comm) <= 1e-10,
                        "{:?} commutator ({}, {})",
                        spec.kind(),
                        i,
                        j
                    );
                }
            }
            // the law itself validates 0/1 occupation patterns within 1e-7
            let law = joint_spectral_law(&rep).unwrap();
            let oracle = inclusion_exclusion_law(&spec).unwrap();
            assert!(
                law.total_variation(&oracle) <= 1e-8,
                "{:?} m={} TV {}",
                spec.kind(),
                m,
                law.total_variation(&oracle)
            );
            // marginals reproduce the correlation measures
            for n in 1..=3usize {
                let boxes: Vec<Region> = (0..n)
                    .map(|a| Region::from_sites((0..m.div_ceil(2)).map(|t| (a + t) % m)))
                    .collect();
                let mut marginal = 0.0;
                for mask in 0..(1usize << m) {
                    let sites: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).collect();
                    let gamma = Configuration::from_sites(m, &sites);
                    marginal += law.table()[mask]
                        * falling_factorial_measure(&gamma, &boxes).unwrap() as f64;
                }
                let factorial: f64 = (2..=n).map(|k| k as f64).product();
                let target = factorial * correlation_measure(&rep, &boxes).unwrap();
                assert!(
                    (marginal - target).abs() <= 1e-8,
                    "{:?} m={} n={} marginal {} vs {}",
                    spec.kind(),
                    m,
                    n,
                    marginal,
                    target
                );
            }
        }
    }
    println!("criterion 7 (joint spectral law, both fermionic kinds): PASS");
}

#[test]
fn criterion_8_sampling_triangle() {
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(808);

    // determinantal: rank-4 projection on 16 sites
    let m = 16;
    let seed_kernel = random_kernel_in(m, 0.2, 0.8, &mut rng);
    let (_, u) = hermitian_eig(&seed_kernel);
    let mut k = CMat::from_elem((m, m), czero());
    for idx in 0..4 {
        for r in 0..m {
            for c in 0..m {
                k[[r, c]] += u[[r, idx]] * u[[c, idx]].conj();
            }
        }
    }
    let spec = RepresentationSpec::car_hermitian(unit_ground(m), k.clone()).unwrap();
    let batch = sample_point_process(&spec, 881, 200_000).unwrap();
    for gamma in batch.configs() {
        assert_eq!(gamma.total(), 4, "projection sample cardinality");
        assert!(gamma.is_simple());
    }
    for i in 0..m {
        let boxes = [Region::from_sites([i])];
        let (est, err) = estimate_correlations(&batch, &boxes, 1).unwrap();
        assert!(
            (est - k[[i, i]].re).abs() <= 3.0 * err + 1e-12,
            "DPP intensity site {}: {} vs {} ± {}",
            i,
            est,
            k[[i, i]].re,
            err
        );
    }
    for (b1, b2) in [(0..8, 8..16), (0..8, 4..12)] {
        let boxes = [Region::from_sites(b1), Region::from_sites(b2)];
        let (est, err) = estimate_correlations(&batch, &boxes, 2).unwrap();
        let target = kernel_prediction(&spec, &boxes).unwrap() / 2.0;
        assert!(
            (est - target).abs() <= 3.0 * err,
            "DPP pair correlation: {} vs {} ± {}",
            est,
            target,
            err
        );
    }

    // Poisson: product of intensities
    let ground = GroundSet::new(vec![0.5, 2.0, 1.2]).unwrap();
    let spec = RepresentationSpec::ccr_poisson(ground.clone()).unwrap();
    let batch = sample_point_process(&spec, 882, 100_000).unwrap();
    let boxes = [Region::from_sites([0usize]), Region::from_sites([1usize])];
    let (est, err) = estimate_correlations(&batch, &boxes, 2).unwrap();
    let target = ground.weight(0) * ground.weight(1) / 2.0;
    assert!(
        (est - target).abs() <= 3.0 * err,
        "poisson pair: {} vs {} ± {}",
        est,
        target,
        err
    );

    // two-channel Cox: Gaussian moment recovery, then pair correlations
    let (l1, l2) = random_hafnian_vectors(3, 2, 0.7, &mut rng);
    let ground = GroundSet::new(vec![1.0, 0.6, 1.1]).unwrap();
    let spec = RepresentationSpec::ccr_hafnian(ground, l1, l2).unwrap();
    let (k1, k2) = spec.hafnian_kernels().unwrap();
    let gaussians = sample_complex_gaussian(&k1, &k2, 883, 100_000).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let cov: Vec<C64> =
                gaussians.fields().iter().map(|g| g[i] * g[j].conj()).collect();
            let (mean, err) = complex_mean_stderr(&cov);
            assert!(
                (mean - k1[[i, j]]).norm() <= 3.0 * err + 1e-12,
                "covariance ({},{}): {} vs {}",
                i,
                j,
                mean,
                k1[[i, j]]
            );
            let pseudo: Vec<C64> = gaussians.fields().iter().map(|g| g[i] * g[j]).collect();
            let (mean, err) = complex_mean_stderr(&pseudo);
            assert!(
                (mean - k2[[i, j]]).norm() <= 3.0 * err + 1e-12,
                "pseudo-covariance ({},{}): {} vs {}",
                i,
                j,
                mean,
                k2[[i, j]]
            );
        }
    }
    let batch = sample_point_process(&spec, 884, 200_000).unwrap();
    let boxes = [Region::full(3), Region::full(3)];
    let (est, err) = estimate_correlations(&batch, &boxes, 2).unwrap();
    let target = kernel_prediction(&spec, &boxes).unwrap() / 2.0;
    assert!(
        (est - target).abs() <= 3.0 * err,
        "two-channel pair: {} vs {} ± {}",
        est,
        target,
        err
    );

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 180.0, "sampling triangle took {:.1} s", elapsed);
    println!("criterion 8 (sampling triangle): PASS ({:.1} s)", elapsed);
}

#[test]
fn criterion_9_determinism_across_workers() {
    let dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance_det");
    std::fs::create_dir_all(&dir).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(909);
    let spec = RepresentationSpec::car_hermitian(
        unit_ground(4),
        random_kernel_in(4, 0.1, 0.9, &mut rng),
    )
    .unwrap();
    let spec_path = dir.join("spec.json");
    std::fs::write(&spec_path, spec.to_json()).unwrap();

    let run = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_fockpoint"))
            .args(args)
            .env_remove("FOCKPOINT_SEED")
            .output()
            .expect("spawn fockpoint");
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };

    let spec_arg = spec_path.to_string_lossy().into_owned();
    let sample_base = run(&["sample", "--rep", &spec_arg, "--seed", "9", "--count", "2000",
        "--threads", "1"]);
    let verify_base = run(&["verify", "--kind", "ccr_permanental", "--instances", "3", "--sites",
        "3", "--seed", "9", "--field-order", "0", "--threads", "1"]);
    for threads in ["4", "8"] {
        let sample = run(&["sample", "--rep", &spec_arg, "--seed", "9", "--count", "2000",
            "--threads", threads]);
        assert_eq!(sample_base, sample, "sample bytes differ at --threads {}", threads);
        let verify = run(&["verify", "--kind", "ccr_permanental", "--instances", "3", "--sites",
            "3", "--seed", "9", "--field-order", "0", "--threads", threads]);
        assert_eq!(verify_base, verify, "report bytes differ at --threads {}", threads);
    }
    println!("criterion 9 (byte-identical samples and reports across workers): PASS");
}
