//! The two-sample test for H₀: θ₁ = θ₂ based on a fitted distance.
//!
//! S = 2mnv/(m+n) · d(θ̂₁, θ̂₂) is referred to a χ² law with two degrees of
//! freedom (α and γ are estimated, L is known).

use crate::distances::{distances, DistanceKind, EvalMethod};
use crate::error::{Error, Result};
use crate::estimation::{fit_ml, FitResult};
use crate::model::Sample;
use crate::special::reg_upper_gamma;

/// Degrees of freedom of the reference χ² law.
pub const DEGREES_OF_FREEDOM: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    pub reject: bool,
    pub level: f64,
    pub kind: DistanceKind,
    pub m: usize,
    pub n: usize,
}

/// v = 1/(h′(0) φ″(1)) for the kind.
pub fn v_constant(kind: DistanceKind) -> f64 {
    match kind {
        DistanceKind::KullbackLeibler | DistanceKind::Triangular => 1.0,
        DistanceKind::Renyi(beta) => 1.0 / beta,
        DistanceKind::Hellinger
        | DistanceKind::Bhattacharyya
        | DistanceKind::JensenShannon
        | DistanceKind::ArithmeticGeometric => 4.0,
        DistanceKind::HarmonicMean => 2.0,
    }
}

/// S from a distance already computed between the two fits.
pub fn statistic_from_distance(kind: DistanceKind, d: f64, m: usize, n: usize) -> f64 {
    let (m, n) = (m as f64, n as f64);
    2.0 * m * n * v_constant(kind) / (m + n) * d
}

/// S = 2mnv/(m+n) · d(θ̂₁, θ̂₂).
pub fn statistic(kind: DistanceKind, fit1: &FitResult, m: usize, fit2: &FitResult, n: usize) -> Result<f64> {
    check_sizes(m, n)?;
    let d = distances(&[kind], &fit1.params, &fit2.params, EvalMethod::Auto)
        .pop()
        .expect("one result per kind")?;
    Ok(statistic_from_distance(kind, d, m, n))
}

/// Pr(χ²_df > s) = Q(df/2, s/2).
pub fn p_value(s: f64, df: u32) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("statistic must be nonnegative, got {s}")));
    }
    if df == 0 {
        return Err(Error::Domain("degrees of freedom must be positive".into()));
    }
    reg_upper_gamma(df as f64 / 2.0, s / 2.0)
}

fn check_sizes(m: usize, n: usize) -> Result<()> {
    if m < 2 || n < 2 {
        return Err(Error::Domain(format!("both samples need at least 2 observations, got {m} and {n}")));
    }
    Ok(())
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("level must lie in (0, 1), got {level}")));
    }
    Ok(())
}

/// Tests of every kind at every level on one fitted pair.
///
/// Outcomes are ordered kind-major. A distance that cannot be evaluated
/// yields an error in its slots.
pub fn test_fits(
    kinds: &[DistanceKind],
    levels: &[f64],
    fit1: &FitResult,
    m: usize,
    fit2: &FitResult,
    n: usize,
    method: EvalMethod,
) -> Result<Vec<Result<TestOutcome>>> {
    check_sizes(m, n)?;
    for &level in levels {
        check_level(level)?;
    }
    let ds = distances(kinds, &fit1.params, &fit2.params, method);
    let mut out = Vec::with_capacity(kinds.len() * levels.len());
    for (&kind, d) in kinds.iter().zip(ds) {
        let sp = d.and_then(|d| {
            let s = statistic_from_distance(kind, d, m, n);
            Ok((s, p_value(s, DEGREES_OF_FREEDOM)?))
        });
        for &level in levels {
            out.push(sp.clone().map(|(s, p)| TestOutcome {
                statistic: s,
                df: DEGREES_OF_FREEDOM,
                p_value: p,
                reject: p <= level,
                level,
                kind,
                m,
                n,
            }));
        }
    }
    Ok(out)
}

/// Fits both samples and tests H₀: θ₁ = θ₂ at `level`.
pub fn test_samples(kind: DistanceKind, s1: &Sample, s2: &Sample, level: f64) -> Result<TestOutcome> {
    check_level(level)?;
    if s1.looks() != s2.looks() {
        return Err(Error::Domain(format!(
            "samples have different looks ({} and {})",
            s1.looks(),
            s2.looks()
        )));
    }
    let fit = |s: &Sample| fit_ml(s).map_err(|e| Error::TestUnavailable(format!("fit failed: {e}")));
    let (f1, f2) = (fit(s1)?, fit(s2)?);
    test_fits(&[kind], &[level], &f1, s1.len(), &f2, s2.len(), EvalMethod::Auto)?
        .pop()
        .expect("one outcome")
}
