//! Adaptive Gauss–Kronrod quadrature with Wynn epsilon extrapolation
//! (the QUADPACK QAGS scheme) and its semi-infinite variant.

use crate::error::{Error, Result};

/// Default absolute tolerance for [`integrate_semi_infinite`] callers.
pub const DEFAULT_ABS_TOL: f64 = 1e-10;
/// Default relative tolerance for [`integrate_semi_infinite`] callers.
pub const DEFAULT_REL_TOL: f64 = 1e-8;
/// Maximum number of subintervals kept by the adaptive scheme.
pub const DEFAULT_LIMIT: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

struct RuleOutput {
    value: f64,
    error: f64,
    res_abs: f64,
    res_asc: f64,
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

/// 21-point Kronrod rule with its embedded 10-point Gauss rule.
fn gk21(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> RuleOutput {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);
    let mut res_gauss = 0.0;
    let mut res_kronrod = f_center * WGK[10];
    let mut res_abs = res_kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    #[allow(clippy::needless_range_loop)]
    for j in 0..5 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_gauss += WG[j] * (f1 + f2);
        res_kronrod += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_kronrod += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }
    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let err = (res_kronrod - res_gauss) * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    RuleOutput {
        value: res_kronrod * half,
        error: rescale_error(err, res_abs, res_asc),
        res_abs,
        res_asc,
    }
}

struct Interval {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    level: usize,
}

/// Epsilon-algorithm table over the sequence of partial integral sums.
struct EpsilonTable {
    rlist2: [f64; 52],
    n: usize,
    res3la: [f64; 3],
    nres: usize,
}

impl EpsilonTable {
    fn new() -> Self {
        Self {
            rlist2: [0.0; 52],
            n: 0,
            res3la: [0.0; 3],
            nres: 0,
        }
    }

    fn push(&mut self, y: f64) {
        if self.n < 50 {
            self.rlist2[self.n] = y;
            self.n += 1;
        }
    }

    /// Returns the extrapolated limit and its error estimate.
    fn extrapolate(&mut self) -> (f64, f64) {
        let eps = f64::EPSILON;
        let tab = &mut self.rlist2;
        let n = self.n - 1;
        let current = tab[n];
        let mut result = current;
        let mut abserr = f64::MAX;
        if n < 2 {
            return (current, f64::MAX);
        }
        tab[n + 2] = tab[n];
        let newelm = n / 2;
        tab[n] = f64::MAX;
        let n_orig = n;
        let mut n_final = n;
        for i in 0..newelm {
            let res = tab[n - 2 * i + 2];
            let e0 = tab[n - 2 * i - 2];
            let e1 = tab[n - 2 * i - 1];
            let e2 = res;
            let e1abs = e1.abs();
            let delta2 = e2 - e1;
            let err2 = delta2.abs();
            let tol2 = e2.abs().max(e1abs) * eps;
            let delta3 = e1 - e0;
            let err3 = delta3.abs();
            let tol3 = e1abs.max(e0.abs()) * eps;
            if err2 < tol2 && err3 < tol3 {
                // e0, e1 and e2 agree to machine accuracy.
                let abserr = (err2 + err3).max(5.0 * eps * res.abs());
                return (res, abserr);
            }
            let e3 = tab[n - 2 * i];
            tab[n - 2 * i] = e1;
            let delta1 = e1 - e3;
            let err1 = delta1.abs();
            let tol1 = e1abs.max(e3.abs()) * eps;
            if err1 < tol1 || err2 < tol2 || err3 < tol3 {
                n_final = 2 * i;
                break;
            }
            let ss = (1.0 / delta1 + 1.0 / delta2) - 1.0 / delta3;
            if (ss * e1).abs() <= 1e-4 {
                n_final = 2 * i;
                break;
            }
            let res = e1 + 1.0 / ss;
            tab[n - 2 * i] = res;
            let error = err2 + (res - e2).abs() + err3;
            if error <= abserr {
                abserr = error;
                result = res;
            }
        }
        const LIMEXP: usize = 49;
        if n_final == LIMEXP {
            n_final = 2 * (LIMEXP / 2);
        }
        if n_orig % 2 == 1 {
            for i in 0..=newelm {
                tab[1 + 2 * i] = tab[2 * i + 3];
            }
        } else {
            for i in 0..=newelm {
                tab[2 * i] = tab[2 * i + 2];
            }
        }
        if n_orig != n_final {
            for i in 0..=n_final {
                tab[i] = tab[n_orig - n_final + i];
            }
        }
        self.n = n_final + 1;
        if self.nres < 3 {
            self.res3la[self.nres] = result;
            abserr = f64::MAX;
        } else {
            abserr = (result - self.res3la[2]).abs()
                + (result - self.res3la[1]).abs()
                + (result - self.res3la[0]).abs();
            self.res3la[0] = self.res3la[1];
            self.res3la[1] = self.res3la[2];
            self.res3la[2] = result;
        }
        self.nres += 1;
        (result, abserr.max(5.0 * eps * result.abs()))
    }
}

fn argmax_error(intervals: &[Interval], below_level: Option<usize>) -> Option<usize> {
    intervals
        .iter()
        .enumerate()
        .filter(|(_, iv)| below_level.is_none_or(|lvl| iv.level < lvl))
        .max_by(|(_, x), (_, y)| x.error.total_cmp(&y.error))
        .map(|(i, _)| i)
}

/// Adaptive integration of `f` over the finite interval [a, b].
///
/// Intervals are bisected in order of decreasing error estimate; when the
/// largest errors concentrate at the finest subdivision level (an endpoint
/// singularity), the sequence of partial sums is accelerated with the
/// epsilon algorithm.
pub fn integrate_interval(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    limit: usize,
) -> Result<QuadratureResult> {
    let limit = limit.max(1);
    let mut evaluations = 21;
    let first = gk21(&mut f, a, b);
    let mut tolerance = abs_tol.max(rel_tol * first.value.abs());
    let round_off = 100.0 * f64::EPSILON * first.res_abs;
    let done = |value: f64, err: f64, evaluations: usize| QuadratureResult {
        value,
        abs_error_estimate: err,
        evaluations,
    };
    if !first.value.is_finite() {
        return Err(Error::Accuracy {
            value: first.value,
            abs_error: f64::INFINITY,
            evaluations,
        });
    }
    if first.error <= round_off && first.error > tolerance {
        return Err(Error::Accuracy {
            value: first.value,
            abs_error: first.error,
            evaluations,
        });
    }
    if (first.error <= tolerance && first.error != first.res_asc) || first.error == 0.0 {
        return Ok(done(first.value, first.error, evaluations));
    }
    if limit == 1 {
        return Err(Error::Accuracy {
            value: first.value,
            abs_error: first.error,
            evaluations,
        });
    }

    let mut intervals = vec![Interval {
        a,
        b,
        value: first.value,
        error: first.error,
        level: 0,
    }];
    let mut max_level = 0usize;
    let mut table = EpsilonTable::new();
    table.push(first.value);

    let mut area = first.value;
    let mut errsum = first.error;
    let mut res_ext = first.value;
    let mut err_ext = f64::MAX;
    let mut correc = 0.0;
    let mut ertest = tolerance;
    let mut error_over_large = 0.0;
    let positive_integrand = first.value.abs() >= (1.0 - 50.0 * f64::EPSILON) * first.res_abs;

    let mut ktmin = 0;
    let mut extrapolate = false;
    let mut disallow_extrapolation = false;
    let mut error_type = 0;
    let mut error_type2 = false;
    let mut roundoff_type1 = 0;
    let mut roundoff_type2 = 0;
    let mut roundoff_type3 = 0;
    let mut next = 0usize;

    for iteration in 2..=limit {
        let (a_i, b_i, r_i, e_i, level_i) = {
            let iv = &intervals[next];
            (iv.a, iv.b, iv.value, iv.error, iv.level)
        };
        let current_level = level_i + 1;
        let mid = 0.5 * (a_i + b_i);
        let left = gk21(&mut f, a_i, mid);
        let right = gk21(&mut f, mid, b_i);
        evaluations += 42;

        let area12 = left.value + right.value;
        let error12 = left.error + right.error;
        let last_e_i = e_i;
        errsum += error12 - e_i;
        area += area12 - r_i;
        tolerance = abs_tol.max(rel_tol * area.abs());

        if left.res_asc != left.error && right.res_asc != right.error {
            let delta = r_i - area12;
            if delta.abs() <= 1e-5 * area12.abs() && error12 >= 0.99 * e_i {
                if extrapolate {
                    roundoff_type2 += 1;
                } else {
                    roundoff_type1 += 1;
                }
            }
            if iteration > 10 && error12 > e_i {
                roundoff_type3 += 1;
            }
        }
        if roundoff_type1 + roundoff_type2 >= 10 || roundoff_type3 >= 20 {
            error_type = 2;
        }
        if roundoff_type2 >= 5 {
            error_type2 = true;
        }
        let tiny = a_i.abs().max(b_i.abs()) <= (1.0 + 100.0 * f64::EPSILON) * (mid.abs() + 1000.0 * f64::MIN_POSITIVE);
        if tiny {
            error_type = 4;
        }

        // Replace the bisected interval by its halves.
        intervals[next] = Interval {
            a: a_i,
            b: mid,
            value: left.value,
            error: left.error,
            level: current_level,
        };
        intervals.push(Interval {
            a: mid,
            b: b_i,
            value: right.value,
            error: right.error,
            level: current_level,
        });
        max_level = max_level.max(current_level);

        if !area.is_finite() {
            return Err(Error::Accuracy {
                value: area,
                abs_error: f64::INFINITY,
                evaluations,
            });
        }
        if errsum <= tolerance {
            let sum: f64 = intervals.iter().map(|iv| iv.value).sum();
            return Ok(done(sum, errsum, evaluations));
        }
        if error_type != 0 {
            break;
        }
        if iteration >= limit - 1 {
            error_type = 1;
            break;
        }
        if iteration == 2 {
            error_over_large = errsum;
            ertest = tolerance;
            table.push(area);
            next = argmax_error(&intervals, None).unwrap_or(0);
            continue;
        }
        if disallow_extrapolation {
            next = argmax_error(&intervals, None).unwrap_or(0);
            continue;
        }
        error_over_large -= last_e_i;
        if current_level < max_level {
            error_over_large += error12;
        }
        if !extrapolate {
            let j = argmax_error(&intervals, None).unwrap_or(0);
            if intervals[j].level < max_level {
                next = j;
                continue;
            }
            extrapolate = true;
        }
        if !error_type2 && error_over_large > ertest {
            if let Some(j) = argmax_error(&intervals, Some(max_level)) {
                next = j;
                continue;
            }
        }

        table.push(area);
        let (reseps, abseps) = table.extrapolate();
        ktmin += 1;
        if ktmin > 5 && err_ext < 1e-3 * errsum {
            error_type = 5;
        }
        if abseps < err_ext {
            ktmin = 0;
            err_ext = abseps;
            res_ext = reseps;
            correc = error_over_large;
            ertest = abs_tol.max(rel_tol * reseps.abs());
            if err_ext <= ertest {
                break;
            }
        }
        if table.n == 1 {
            disallow_extrapolation = true;
        }
        if error_type == 5 {
            break;
        }
        extrapolate = false;
        error_over_large = errsum;
        next = argmax_error(&intervals, None).unwrap_or(0);
    }

    let sum: f64 = intervals.iter().map(|iv| iv.value).sum();
    let summed = |err: f64| -> Result<QuadratureResult> {
        if err <= abs_tol.max(rel_tol * sum.abs()) {
            Ok(done(sum, err, evaluations))
        } else {
            Err(Error::Accuracy {
                value: sum,
                abs_error: err,
                evaluations,
            })
        }
    };

    if err_ext == f64::MAX {
        return summed(errsum);
    }
    if error_type != 0 || error_type2 {
        if error_type2 {
            err_ext += correc;
        }
        if res_ext != 0.0 && area != 0.0 {
            if err_ext / res_ext.abs() > errsum / area.abs() {
                return summed(errsum);
            }
        } else if err_ext > errsum {
            return summed(errsum);
        } else if area == 0.0 {
            return Ok(done(res_ext, err_ext, evaluations));
        }
    }
    let max_area = res_ext.abs().max(area.abs());
    if !positive_integrand && max_area < 0.01 * first.res_abs {
        return Ok(done(res_ext, err_ext, evaluations));
    }
    let ratio = res_ext / area;
    if !(0.01..=100.0).contains(&ratio) || errsum > area.abs() {
        return Err(Error::Accuracy {
            value: res_ext,
            abs_error: err_ext,
            evaluations,
        });
    }
    if err_ext <= abs_tol.max(rel_tol * res_ext.abs()) {
        Ok(done(res_ext, err_ext, evaluations))
    } else {
        Err(Error::Accuracy {
            value: res_ext,
            abs_error: err_ext,
            evaluations,
        })
    }
}

/// Integral of `f` over (0, ∞).
///
/// The half-line is mapped onto (0, 1) by x = t / (1 − t), whose Jacobian is
/// 1 / (1 − t)², and the result is integrated with [`integrate_interval`].
pub fn integrate_semi_infinite(
    mut f: impl FnMut(f64) -> f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadratureResult> {
    let mapped = |t: f64| {
        let u = 1.0 - t;
        let x = t / u;
        if !x.is_finite() {
            return 0.0;
        }
        let y = f(x) / (u * u);
        if y.is_finite() {
            y
        } else {
            0.0
        }
    };
    integrate_interval(mapped, 0.0, 1.0, abs_tol, rel_tol, DEFAULT_LIMIT)
}
