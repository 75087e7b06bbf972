//! Samplers for the point-process families and Monte Carlo estimators of
//! their correlation measures, closing the triangle between operator moments,
//! closed-form kernel predictions, and empirical statistics.
//!
//! Determinism: every replica draws from its own ChaCha12 stream keyed by
//! (seed, replica index), so batches are byte-identical regardless of worker
//! count or evaluation order.

use num_complex::Complex64 as C64;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Poisson, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ground::{falling_factorial_measure, Configuration, GroundSet, Region};
use crate::linalg::{cr, czero, hermitian_eig, is_hermitian, max_abs, pivoted_cholesky_psd, CMat,
                    CVec, RMat};
use crate::rep::{RepKind, RepresentationSpec, SPECTRAL_TOL};

/// Replicated configurations drawn from one representation spec.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    ground: GroundSet,
    configs: Vec<Configuration>,
    seed: u64,
}

impl SampleBatch {
    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// One row per replica: `replica,counts_0,counts_1,…`.
    pub fn to_csv(&self) -> String {
        let m = self.ground.len();
        let mut out = String::from("replica");
        for i in 0..m {
            out.push_str(&format!(",counts_{}", i));
        }
        out.push('\n');
        for (r, gamma) in self.configs.iter().enumerate() {
            out.push_str(&r.to_string());
            for &c in gamma.counts() {
                out.push_str(&format!(",{}", c));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV form; the ground set must match the column count.
    pub fn from_csv(text: &str, ground: GroundSet, seed: u64) -> Result<SampleBatch> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Validation("sample CSV is empty".into()))?;
        let cols = header.split(',').count();
        if cols != ground.len() + 1 || !header.starts_with("replica") {
            return Err(Error::Validation(format!(
                "sample CSV header has {} columns, expected {} (`replica` + one per site)",
                cols,
                ground.len() + 1
            )));
        }
        let mut configs = Vec::new();
        for (idx, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols {
                return Err(Error::Validation(format!(
                    "sample CSV row {} has {} columns, expected {}",
                    idx,
                    fields.len(),
                    cols
                )));
            }
            let counts: Vec<u32> = fields[1..]
                .iter()
                .map(|f| {
                    f.trim().parse::<u32>().map_err(|e| {
                        Error::Validation(format!("bad count '{}' in sample CSV: {}", f, e))
                    })
                })
                .collect::<Result<_>>()?;
            configs.push(Configuration::from_counts(counts));
        }
        if configs.is_empty() {
            return Err(Error::Validation("sample CSV carries no replicas".into()));
        }
        Ok(SampleBatch { ground, configs, seed })
    }
}

/// Per-replica complex Gaussian fields over the sites.
#[derive(Debug, Clone)]
pub struct GaussianFieldBatch {
    fields: Vec<CVec>,
}

impl GaussianFieldBatch {
    pub fn fields(&self) -> &[CVec] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

fn replica_rng(seed: u64, replica: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

fn poisson_count(lambda: f64, rng: &mut ChaCha12Rng) -> u32 {
    if lambda <= 0.0 {
        return 0;
    }
    let draw: f64 = Poisson::new(lambda).expect("positive finite rate").sample(rng);
    draw as u32
}

/// Draws replicated complex Gaussian vectors with covariance
/// 𝔼(G_i·conj G_j) = K1[i][j] and pseudo-covariance 𝔼(G_i·G_j) = K2[i][j],
/// via the real 2m-dimensional embedding of (Re G, Im G).
pub fn sample_complex_gaussian(
    k1: &CMat,
    k2: &CMat,
    seed: u64,
    count: usize,
) -> Result<GaussianFieldBatch> {
    let m = k1.nrows();
    if k1.dim() != (m, m) || k2.dim() != (m, m) {
        return Err(Error::Domain("covariance matrices must be square and same-sized".into()));
    }
    let scale = max_abs(k1).max(max_abs(k2)).max(1.0);
    if !is_hermitian(k1, SPECTRAL_TOL) {
        return Err(Error::Validation("covariance matrix is not Hermitian".into()));
    }
    for i in 0..m {
        for j in 0..m {
            if (k2[[i, j]] - k2[[j, i]]).norm() > SPECTRAL_TOL * scale {
                return Err(Error::Validation(format!(
                    "pseudo-covariance is not symmetric at entry ({}, {})",
                    i, j
                )));
            }
        }
    }
    // G = U + iV: E[UUᵀ] = ½Re(K1+K2), E[VVᵀ] = ½Re(K1−K2), E[UVᵀ] = ½Im(K2−K1)
    let two_m = 2 * m;
    let mut cov = RMat::zeros((two_m, two_m));
    for i in 0..m {
        for j in 0..m {
            let a = 0.5 * (k1[[i, j]].re + k2[[i, j]].re);
            let b = 0.5 * (k1[[i, j]].re - k2[[i, j]].re);
            let c = 0.5 * (k2[[i, j]].im - k1[[i, j]].im);
            cov[[i, j]] = a;
            cov[[m + i, m + j]] = b;
            cov[[i, m + j]] = c;
            cov[[m + j, i]] = c;
        }
    }
    let (perm, l) = pivoted_cholesky_psd(&cov, 1e-10)?;
    let fields = (0..count)
        .into_par_iter()
        .map(|replica| {
            let mut rng = replica_rng(seed, replica as u64);
            let z: Vec<f64> = (0..two_m).map(|_| rng.sample(StandardNormal)).collect();
            let mut x = vec![0.0f64; two_m];
            for i in 0..two_m {
                let mut acc = 0.0;
                for j in 0..=i {
                    acc += l[[i, j]] * z[j];
                }
                x[perm[i]] = acc;
            }
            CVec::from_shape_fn(m, |i| C64::new(x[i], x[m + i]))
        })
        .collect();
    Ok(GaussianFieldBatch { fields })
}

/// The unweighted kernel-value matrix K(x_i, x_j) = M[i][j]/√(σ_i σ_j) of a
/// scaled kernel operator.
fn unweighted_kernel(ground: &GroundSet, scaled: &CMat) -> CMat {
    let m = ground.len();
    CMat::from_shape_fn((m, m), |(i, j)| {
        scaled[[i, j] ] / (ground.weight(i) * ground.weight(j)).sqrt()
    })
}

/// Exact replicated sampling of the point process attached to a spec.
///
/// Fermionic Hermitian kernels use spectral projection sampling; the Poisson
/// kind draws independent per-site counts; the permanental and two-channel
/// kinds go through their Cox (conditionally Poisson) representations with a
/// complex Gaussian intensity field. The J-twisted kind has no sampler.
pub fn sample_point_process(
    spec: &RepresentationSpec,
    seed: u64,
    count: usize,
) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::Domain("sample batches need at least one replica".into()));
    }
    let ground = spec.ground().clone();
    let m = ground.len();
    let configs: Vec<Configuration> = match spec.kind() {
        RepKind::CarJHermitian => {
            return Err(Error::Domain(
                "the J-twisted kind has no sampler; verify it through operator moments".into(),
            ));
        }
        RepKind::CcrPoisson => (0..count)
            .into_par_iter()
            .map(|replica| {
                let mut rng = replica_rng(seed, replica as u64);
                Configuration::from_counts(
                    (0..m).map(|i| poisson_count(ground.weight(i), &mut rng)).collect(),
                )
            })
            .collect(),
        RepKind::CarHermitian => {
            let k = spec.scaled_kernel().expect("kind carries a kernel");
            let (evals, u) = hermitian_eig(k);
            if let Some(&bad) = evals
                .iter()
                .find(|&&ev| ev < -SPECTRAL_TOL || ev > 1.0 + SPECTRAL_TOL)
            {
                return Err(Error::Validation(format!(
                    "kernel eigenvalue {:.12e} lies outside [0, 1]",
                    bad
                )));
            }
            (0..count)
                .into_par_iter()
                .map(|replica| {
                    let mut rng = replica_rng(seed, replica as u64);
                    determinantal_replica(&evals, &u, &mut rng)
                })
                .collect()
        }
        RepKind::CcrPermanental => {
            let k = spec.scaled_kernel().expect("kind carries a kernel");
            let cov = unweighted_kernel(&ground, k);
            let zero = CMat::from_elem((m, m), czero());
            let gaussians = sample_complex_gaussian(&cov, &zero, seed, count)?;
            cox_counts(&ground, &gaussians, seed)
        }
        RepKind::CcrHafnian => {
            let (k1, k2) = spec.hafnian_kernels()?;
            let gaussians = sample_complex_gaussian(&k1, &k2, seed, count)?;
            cox_counts(&ground, &gaussians, seed)
        }
    };
    Ok(SampleBatch { ground, configs, seed })
}

/// Conditionally-Poisson counts with per-site intensity |G_i|²·σ_i. The count
/// draws continue on the same per-replica stream that produced G.
fn cox_counts(ground: &GroundSet, fields: &GaussianFieldBatch, seed: u64) -> Vec<Configuration> {
    let m = ground.len();
    fields
        .fields()
        .par_iter()
        .enumerate()
        .map(|(replica, g)| {
            let mut rng = replica_rng(seed, replica as u64);
            // skip the normals already consumed for G so count draws are fresh
            for _ in 0..2 * m {
                let _: f64 = rng.sample(StandardNormal);
            }
            Configuration::from_counts(
                (0..m)
                    .map(|i| poisson_count(g[i].norm_sqr() * ground.weight(i), &mut rng))
                    .collect(),
            )
        })
        .collect()
}

/// One spectral-projection replica: select eigenvectors by independent
/// Bernoulli(λ_k) trials, then place one point per selected vector by
/// sequentially sampling sites from the projection weights and deflating.
fn determinantal_replica(evals: &[f64], u: &CMat, rng: &mut ChaCha12Rng) -> Configuration {
    let m = u.nrows();
    let mut active: Vec<CVec> = Vec::new();
    for (k, &ev) in evals.iter().enumerate() {
        if rng.random::<f64>() < ev {
            active.push(CVec::from_shape_fn(m, |r| u[[r, k]]));
        }
    }
    let mut counts = vec![0u32; m];
    while !active.is_empty() {
        let weights: Vec<f64> = (0..m)
            .map(|s| active.iter().map(|v| v[s].norm_sqr()).sum::<f64>().max(0.0))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut pick = rng.random::<f64>() * total;
        let mut site = m - 1;
        for (s, w) in weights.iter().enumerate() {
            if pick < *w {
                site = s;
                break;
            }
            pick -= w;
        }
        counts[site] += 1;
        // deflate: rotate the site component into one pivot vector, drop it,
        // and re-orthonormalize the rest against the chosen site
        let pivot_idx = (0..active.len())
            .max_by(|&a, &b| {
                active[a][site]
                    .norm_sqr()
                    .partial_cmp(&active[b][site].norm_sqr())
                    .expect("finite weights")
            })
            .expect("non-empty active set");
        let pivot = active.swap_remove(pivot_idx);
        for v in active.iter_mut() {
            let ratio = v[site] / pivot[site];
            for r in 0..m {
                let p = pivot[r];
                v[r] -= ratio * p;
            }
        }
        // Gram–Schmidt pass to keep the family orthonormal
        for i in 0..active.len() {
            for j in 0..i {
                let proj: C64 = {
                    let (vi, vj) = (&active[i], &active[j]);
                    vi.iter().zip(vj.iter()).map(|(a, b)| a * b.conj()).sum()
                };
                let vj = active[j].clone();
                for r in 0..m {
                    let correction = proj * vj[r];
                    active[i][r] -= correction;
                }
            }
            let norm: f64 = active[i].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.0 {
                for r in 0..m {
                    active[i][r] /= cr(norm);
                }
            }
        }
    }
    Configuration::from_counts(counts)
}

/// Monte Carlo estimate of θ⁽ⁿ⁾(Δ₁×…×Δ_n) = (1/n!)·𝔼(γ)_n with a batch-mean
/// standard error (up to 32 batches).
pub fn estimate_correlations(
    batch: &SampleBatch,
    boxes: &[Region],
    n: usize,
) -> Result<(f64, f64)> {
    if n == 0 || boxes.len() != n {
        return Err(Error::Domain(format!(
            "estimator needs n ≥ 1 boxes matching the order, got {} boxes for order {}",
            boxes.len(),
            n
        )));
    }
    let mut factorial = 1.0;
    for k in 2..=n {
        factorial *= k as f64;
    }
    let values: Vec<f64> = batch
        .configs()
        .iter()
        .map(|gamma| Ok(falling_factorial_measure(gamma, boxes)? as f64 / factorial))
        .collect::<Result<_>>()?;
    let count = values.len();
    let mean = values.iter().sum::<f64>() / count as f64;
    let num_batches = count.min(32);
    if num_batches < 2 {
        return Ok((mean, 0.0));
    }
    let base = count / num_batches;
    let mut batch_means = Vec::with_capacity(num_batches);
    for b in 0..num_batches {
        let start = b * base;
        let end = if b + 1 == num_batches { count } else { start + base };
        let slice = &values[start..end];
        batch_means.push(slice.iter().sum::<f64>() / slice.len() as f64);
    }
    let grand = batch_means.iter().sum::<f64>() / num_batches as f64;
    let var = batch_means.iter().map(|x| (x - grand).powi(2)).sum::<f64>()
        / (num_batches as f64 - 1.0);
    let stderr = (var / num_batches as f64).sqrt();
    Ok((mean, stderr))
}

/// Empirical mean and batch-mean standard error of a complex-valued replica
/// statistic (used for Gaussian moment recovery).
pub fn complex_mean_stderr(values: &[C64]) -> (C64, f64) {
    let count = values.len();
    let mean = values.iter().sum::<C64>() / cr(count as f64);
    let num_batches = count.min(32);
    if num_batches < 2 {
        return (mean, 0.0);
    }
    let base = count / num_batches;
    let mut err2 = 0.0;
    for part in 0..2 {
        let comp = |z: &C64| if part == 0 { z.re } else { z.im };
        let mut batch_means = Vec::with_capacity(num_batches);
        for b in 0..num_batches {
            let start = b * base;
            let end = if b + 1 == num_batches { count } else { start + base };
            let slice = &values[start..end];
            batch_means.push(slice.iter().map(comp).sum::<f64>() / slice.len() as f64);
        }
        let grand = batch_means.iter().sum::<f64>() / num_batches as f64;
        let var = batch_means.iter().map(|x| (x - grand).powi(2)).sum::<f64>()
            / (num_batches as f64 - 1.0);
        err2 += var / num_batches as f64;
    }
    (mean, err2.sqrt())
}
