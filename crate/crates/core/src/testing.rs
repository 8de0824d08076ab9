//! Permutation tests: single two-sample tests, component-wise local tests
//! with Benjamini–Hochberg correction, and the global normal-score test.
//!
//! Permutation `l` is a shuffle drawn from a ChaCha8 stream keyed by
//! `(seed, l)`, so the sequence of splits does not depend on how the work is
//! scheduled and reports are identical for any number of worker threads.
//!
//! Comparisons of statistics treat values within a relative `1e-9` of each
//! other as tied. A permutation that reproduces the original split yields the
//! baseline statistic only up to rounding, and without the tolerance it would
//! be counted or not depending on floating-point noise.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::groups::{GroupDescriptor, GroupElement};
use crate::matfun::SpdFactor;
use crate::stats::{MeanOptions, SampleSet, Statistic, TwoSampleFit};

const TIE_TOLERANCE: f64 = 1e-9;

fn at_least(t: f64, baseline: f64) -> bool {
    t >= baseline - TIE_TOLERANCE * t.abs().max(baseline.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationConfig {
    pub n_permutations: usize,
    pub seed: u64,
    pub statistic: Statistic,
    pub mean: MeanOptions,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        Self { n_permutations: 10_000, seed: 0, statistic: Statistic::HotellingT2, mean: MeanOptions::default() }
    }
}

impl PermutationConfig {
    fn validate(&self) -> Result<()> {
        if self.n_permutations == 0 {
            return Err(Error::InvalidConfig("n_permutations must be at least 1".into()));
        }
        if !(self.mean.tol > 0.0) || !self.mean.tol.is_finite() {
            return Err(Error::InvalidConfig(format!("mean tolerance {} must be positive", self.mean.tol)));
        }
        Ok(())
    }
}

/// The `l`-th shuffle of `0..len` for a given seed.
pub fn permutation(seed: u64, l: usize, len: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(l as u64);
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(&mut rng);
    idx
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub statistic: Statistic,
    pub n_permutations: usize,
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    /// `T₀` on the original split.
    pub baseline: f64,
    /// `T₁ … T_L` in permutation order, degenerate permutations omitted.
    pub perm_stats: Vec<f64>,
    /// `(1/L) #{T_l ≥ T₀}` over the non-degenerate permutations.
    pub p_value: f64,
    /// Permutations on which the statistic was undefined.
    pub degenerate_count: usize,
}

fn is_degenerate(e: &Error) -> bool {
    matches!(e, Error::NotPositiveDefinite | Error::DegenerateWeights(_))
}

fn check_sizes(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 || m + n < 4 {
        return Err(Error::TooFewSamples { m, n });
    }
    Ok(())
}

fn split_by<'a>(
    joint: &[&'a GroupElement],
    perm: &[usize],
    m: usize,
) -> (Vec<&'a GroupElement>, Vec<&'a GroupElement>) {
    let a = perm[..m].iter().map(|&i| joint[i]).collect();
    let b = perm[m..].iter().map(|&i| joint[i]).collect();
    (a, b)
}

/// Evaluates every requested statistic on one split. `Ok(None)` marks a
/// statistic that is undefined because a covariance is singular.
fn evaluate(
    desc: &GroupDescriptor,
    a: &[&GroupElement],
    b: &[&GroupElement],
    statistics: &[Statistic],
    opts: &MeanOptions,
) -> Result<Vec<Option<f64>>> {
    let fit = TwoSampleFit::from_refs(desc, a, b, opts)?;
    statistics
        .iter()
        .map(|&s| match fit.statistic(s) {
            Ok(v) => Ok(Some(v)),
            Err(e) if is_degenerate(&e) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

fn p_value(baseline: f64, perm: &[f64]) -> f64 {
    perm.iter().filter(|&&t| at_least(t, baseline)).count() as f64 / perm.len() as f64
}

/// Permutation test of `H₀: A and B are equally distributed` for one
/// statistic.
pub fn permutation_test(a: &SampleSet, b: &SampleSet, cfg: &PermutationConfig) -> Result<TestReport> {
    let mut reports = permutation_tests(a, b, cfg, &[cfg.statistic])?;
    Ok(reports.remove(0))
}

/// Runs several statistics on one shared sequence of permutations, fitting
/// means and covariances once per split. `cfg.statistic` is ignored.
pub fn permutation_tests(
    a: &SampleSet,
    b: &SampleSet,
    cfg: &PermutationConfig,
    statistics: &[Statistic],
) -> Result<Vec<TestReport>> {
    cfg.validate()?;
    if a.descriptor() != b.descriptor() {
        return Err(Error::DescriptorMismatch { left: a.descriptor().to_string(), right: b.descriptor().to_string() });
    }
    let (m, n) = (a.len(), b.len());
    check_sizes(m, n)?;
    let desc = a.descriptor();
    let joint: Vec<&GroupElement> = a.elements().iter().chain(b.elements()).collect();

    let baseline = evaluate(desc, &joint[..m], &joint[m..], statistics, &cfg.mean)?;
    let baseline: Vec<f64> = baseline
        .into_iter()
        .zip(statistics)
        .map(|(v, s)| v.ok_or_else(|| Error::BaselineDegenerate(format!("{s}: covariance not positive definite"))))
        .collect::<Result<_>>()?;

    let rows: Vec<Vec<Option<f64>>> = (1..=cfg.n_permutations)
        .into_par_iter()
        .map(|l| {
            let perm = permutation(cfg.seed, l, m + n);
            let (pa, pb) = split_by(&joint, &perm, m);
            evaluate(desc, &pa, &pb, statistics, &cfg.mean)
        })
        .collect::<Result<_>>()?;

    statistics
        .iter()
        .enumerate()
        .map(|(k, &statistic)| {
            let perm_stats: Vec<f64> = rows.iter().filter_map(|r| r[k]).collect();
            let degenerate_count = cfg.n_permutations - perm_stats.len();
            if perm_stats.is_empty() {
                return Err(Error::AllPermutationsDegenerate(cfg.n_permutations));
            }
            Ok(TestReport {
                statistic,
                n_permutations: cfg.n_permutations,
                seed: cfg.seed,
                m,
                n,
                baseline: baseline[k],
                p_value: p_value(baseline[k], &perm_stats),
                perm_stats,
                degenerate_count,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalTestReport {
    pub statistic: Statistic,
    pub n_permutations: usize,
    pub seed: u64,
    pub alpha: f64,
    /// Per-component p-values; `None` where the component test failed.
    pub p_values: Vec<Option<f64>>,
    /// Benjamini–Hochberg decisions over the components that have a p-value.
    pub reject_mask: Vec<bool>,
    pub degenerate_counts: Vec<usize>,
    /// Components whose test could not be carried out, with the cause.
    pub failures: Vec<(usize, Error)>,
    /// `K × (L+1)` statistics; column 0 is the baseline. Entries of
    /// degenerate permutations and failed components are NaN.
    pub stats: DMatrix<f64>,
}

/// Component-wise permutation tests on a power group, all components sharing
/// the same sequence of subject permutations, followed by BH correction.
pub fn local_tests(a: &SampleSet, b: &SampleSet, cfg: &PermutationConfig, alpha: f64) -> Result<LocalTestReport> {
    cfg.validate()?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidConfig(format!("alpha {alpha} must lie in (0, 1]")));
    }
    if a.descriptor() != b.descriptor() {
        return Err(Error::DescriptorMismatch { left: a.descriptor().to_string(), right: b.descriptor().to_string() });
    }
    let factors = a
        .descriptor()
        .factors()
        .ok_or_else(|| Error::InvalidConfig(format!("{} is not a product group", a.descriptor())))?
        .to_vec();
    let (m, n) = (a.len(), b.len());
    check_sizes(m, n)?;
    let k = factors.len();
    let l_total = cfg.n_permutations;

    let columns: Vec<Vec<GroupElement>> = (0..k)
        .map(|i| {
            a.elements()
                .iter()
                .chain(b.elements())
                .map(|g| g.factors().expect("validated product element")[i].clone())
                .collect()
        })
        .collect();
    let joints: Vec<Vec<&GroupElement>> = columns.iter().map(|c| c.iter().collect()).collect();

    let stat = [cfg.statistic];
    let mut failures: Vec<(usize, Error)> = Vec::new();
    let mut alive = vec![true; k];
    let mut table = DMatrix::from_element(k, l_total + 1, f64::NAN);
    for i in 0..k {
        match evaluate(&factors[i], &joints[i][..m], &joints[i][m..], &stat, &cfg.mean) {
            Ok(v) => match v[0] {
                Some(t) => table[(i, 0)] = t,
                None => {
                    alive[i] = false;
                    failures.push((
                        i,
                        Error::BaselineDegenerate(format!("component {i}: covariance not positive definite")),
                    ));
                }
            },
            Err(e) => {
                alive[i] = false;
                failures.push((i, e));
            }
        }
    }

    let cols: Vec<Vec<std::result::Result<Option<f64>, Error>>> = (1..=l_total)
        .into_par_iter()
        .map(|l| {
            let perm = permutation(cfg.seed, l, m + n);
            (0..k)
                .map(|i| {
                    if !alive[i] {
                        return Ok(None);
                    }
                    let (pa, pb) = split_by(&joints[i], &perm, m);
                    evaluate(&factors[i], &pa, &pb, &stat, &cfg.mean).map(|v| v[0])
                })
                .collect()
        })
        .collect();

    for (l, col) in cols.into_iter().enumerate() {
        for (i, r) in col.into_iter().enumerate() {
            if !alive[i] {
                continue;
            }
            match r {
                Ok(Some(t)) => table[(i, l + 1)] = t,
                Ok(None) => {}
                Err(e) => {
                    alive[i] = false;
                    failures.push((i, e));
                }
            }
        }
    }

    let mut p_values = vec![None; k];
    let mut degenerate_counts = vec![0; k];
    for i in 0..k {
        let perm: Vec<f64> = table.row(i).iter().skip(1).copied().filter(|t| !t.is_nan()).collect();
        degenerate_counts[i] = l_total - perm.len();
        if !alive[i] {
            continue;
        }
        if perm.is_empty() {
            alive[i] = false;
            failures.push((i, Error::AllPermutationsDegenerate(l_total)));
            continue;
        }
        p_values[i] = Some(p_value(table[(i, 0)], &perm));
    }
    for (i, _) in alive.iter().enumerate().filter(|(_, &a)| !a) {
        table.row_mut(i).fill(f64::NAN);
    }
    failures.sort_by_key(|(i, _)| *i);
    failures.dedup_by_key(|(i, _)| *i);

    let tested: Vec<usize> = (0..k).filter(|&i| p_values[i].is_some()).collect();
    let tested_p: Vec<f64> = tested.iter().map(|&i| p_values[i].unwrap()).collect();
    let mut reject_mask = vec![false; k];
    for (&i, r) in tested.iter().zip(bh_fdr(&tested_p, alpha)) {
        reject_mask[i] = r;
    }

    Ok(LocalTestReport {
        statistic: cfg.statistic,
        n_permutations: l_total,
        seed: cfg.seed,
        alpha,
        p_values,
        reject_mask,
        degenerate_counts,
        failures,
        stats: table,
    })
}

/// Benjamini–Hochberg step-up procedure: rejects the `k` smallest p-values
/// for the largest `k` with `p₍ₖ₎ ≤ kα/K`, together with any p-value tied
/// with `p₍ₖ₎`.
pub fn bh_fdr(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let k_total = p_values.len();
    let mut sorted: Vec<f64> = p_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cutoff =
        (1..=k_total).rev().find(|&k| sorted[k - 1] <= k as f64 * alpha / k_total as f64).map(|k| sorted[k - 1]);
    match cutoff {
        Some(c) => p_values.iter().map(|&p| p <= c).collect(),
        None => vec![false; k_total],
    }
}

/// Inverse of the standard normal CDF: Wichura's AS 241 rational
/// approximation refined by one Halley step.
pub fn inv_norm_cdf(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::OutOfDomain(u));
    }
    let mut x = as241(u);
    let e = 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2) - u;
    let t = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x -= t / (1.0 + 0.5 * x * t);
    Ok(x)
}

fn poly(c: &[f64; 8], r: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * r + ci)
}

fn as241(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_6,
        133.141_667_891_784_38,
        1_971.590_950_306_551_4,
        13_731.693_765_509_461,
        45_921.953_931_549_87,
        67_265.770_927_008_7,
        33_430.575_583_588_13,
        2_509.080_928_730_122_7,
    ];
    const B: [f64; 8] = [
        1.0,
        42.313_330_701_600_91,
        687.187_007_492_057_9,
        5_394.196_021_424_751,
        21_213.794_301_586_6,
        39_307.895_800_092_71,
        28_729.085_735_721_943,
        5_226.495_278_852_546,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_6,
        4.630_337_846_156_545,
        5.769_497_221_460_691,
        3.647_848_324_763_204_6,
        1.270_458_252_452_368_4,
        0.241_780_725_177_450_6,
        0.022_723_844_989_269_184,
        7.745_450_142_783_414e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_8,
        1.676_384_830_183_803_8,
        0.689_767_334_985_100_1,
        0.148_103_976_427_480_07,
        0.015_198_666_563_616_457,
        5.475_938_084_995_345e-4,
        1.050_750_071_644_416_8e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_5,
        5.463_784_911_164_114,
        1.784_826_539_917_291_3,
        0.296_560_571_828_504_9,
        0.026_532_189_526_576_124,
        0.001_242_660_947_388_078_4,
        2.711_555_568_743_487_6e-5,
        2.010_334_399_292_288_1e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        0.599_832_206_555_887_9,
        0.136_929_880_922_735_8,
        0.014_875_361_290_850_615,
        7.868_691_311_456_133e-4,
        1.846_318_317_510_054_8e-5,
        1.421_511_758_316_445_9e-7,
        2.044_263_103_389_939_8e-15,
    ];
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalTestReport {
    pub p_value: f64,
    /// `M₀`, the squared Mahalanobis distance of the baseline scores.
    pub baseline_distance: f64,
    /// Permutation columns used (those finite in every component).
    pub n_permutations: usize,
    /// Permutation columns dropped because some entry was not finite.
    pub dropped_permutations: usize,
}

fn squeeze(c: f64) -> f64 {
    0.9998 * c - 0.00001
}

/// Global test combining `K` component statistics.
///
/// `stats` is `K × (L+1)` with the baseline in column 0. Each row is mapped
/// through its empirical CDF over the permutation columns, squeezed by
/// `C̃ = 0.9998 C − 0.00001` and converted to normal scores; the squared
/// Mahalanobis distance of each column under the score covariance
/// `(1/(L−1)) U Uᵀ` is then ranked against the baseline.
///
/// A baseline below every permutation value has `C = 0`, which the squeeze
/// would send outside `(0, 1)`; it is scored like the smallest permutation
/// value instead. Columns containing NaN (degenerate permutations) are
/// dropped.
///
/// Optional positive `weights` scale the component scores by `√wᵢ` before
/// the covariance is formed.
pub fn global_test(stats: &DMatrix<f64>, weights: Option<&[f64]>) -> Result<GlobalTestReport> {
    let k = stats.nrows();
    if k == 0 || stats.ncols() < 2 {
        return Err(Error::InvalidConfig("global test needs at least one component and one permutation".into()));
    }
    if !stats.column(0).iter().all(|t| t.is_finite()) {
        return Err(Error::NonFinite("baseline statistics"));
    }
    if let Some(w) = weights {
        if w.len() != k {
            return Err(Error::DimensionMismatch { expected: k, actual: w.len() });
        }
        if let Some(&bad) = w.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidConfig(format!("component weight {bad} must be positive")));
        }
    }
    let kept: Vec<usize> = (1..stats.ncols()).filter(|&j| stats.column(j).iter().all(|t| t.is_finite())).collect();
    let l = kept.len();
    let dropped = stats.ncols() - 1 - l;
    if l <= k {
        return Err(Error::ScoreCovarianceSingular { components: k, permutations: l });
    }

    let mut scores = DMatrix::zeros(k, l + 1);
    for i in 0..k {
        let mut sorted: Vec<f64> = kept.iter().map(|&j| stats[(i, j)]).collect();
        sorted.sort_by(f64::total_cmp);
        let cdf = |t: f64| {
            let tol = TIE_TOLERANCE * t.abs();
            let count = sorted.partition_point(|&x| x <= t + tol).max(1);
            count as f64 / l as f64
        };
        let scale = weights.map_or(1.0, |w| w[i].sqrt());
        let columns = std::iter::once(0).chain(kept.iter().copied());
        for (c, j) in columns.enumerate() {
            let u = squeeze(cdf(stats[(i, j)]));
            scores[(i, c)] = scale * inv_norm_cdf(u)?;
        }
    }

    let perm_scores = scores.columns(1, l);
    let mut sigma = perm_scores * perm_scores.transpose() / (l as f64 - 1.0);
    for i in 0..k {
        for j in i + 1..k {
            let v = 0.5 * (sigma[(i, j)] + sigma[(j, i)]);
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }
    let factor =
        SpdFactor::new(&sigma).map_err(|_| Error::ScoreCovarianceSingular { components: k, permutations: l })?;
    let distance = |c: usize| -> f64 {
        let u: DVector<f64> = scores.column(c).into_owned();
        factor.quadratic_form(&u)
    };
    let m0 = distance(0);
    let exceed = (1..=l).filter(|&c| at_least(distance(c), m0)).count();
    Ok(GlobalTestReport {
        p_value: exceed as f64 / l as f64,
        baseline_distance: m0,
        n_permutations: l,
        dropped_permutations: dropped,
    })
}
