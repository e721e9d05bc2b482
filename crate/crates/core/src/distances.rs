//! Symmetrized (h,φ) distances between two G⁰ laws.
//!
//! Every kind has a quadrature path. Kullback-Leibler, Rényi, Hellinger and
//! Bhattacharyya also have closed forms built on hypergeometric series; those
//! are accelerations, and `EvalMethod::Auto` falls back to quadrature
//! whenever a closed form cannot be evaluated reliably.
//!
//! All integrands are assembled from the two log-densities through
//! m = (l₁ + l₂)/2 and u = |l₁ − l₂|/2, which keeps them free of cancellation.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::G0Params;
use crate::quadrature::{integrate_semi_infinite, DEFAULT_ABS_TOL, DEFAULT_REL_TOL};
use crate::special::{digamma_unchecked, gauss_2f1, hyp_3f2, ln_abs_gamma, ln_gamma_unchecked};

/// Rényi order used by the simulation presets.
pub const DEFAULT_RENYI_BETA: f64 = 0.95;

/// Distance between a csc argument and the nearest integer below which the
/// closed form is treated as singular.
pub const POLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistanceKind {
    KullbackLeibler,
    /// Rényi of order β, 0 < β < 1.
    Renyi(f64),
    Hellinger,
    Bhattacharyya,
    JensenShannon,
    ArithmeticGeometric,
    Triangular,
    HarmonicMean,
}

impl DistanceKind {
    pub fn renyi(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Domain(format!("Rényi order must lie in (0, 1), got {beta}")));
        }
        Ok(Self::Renyi(beta))
    }

    /// The eight distances, with Rényi at order `beta`.
    pub fn all(beta: f64) -> [Self; 8] {
        [
            Self::KullbackLeibler,
            Self::Renyi(beta),
            Self::Hellinger,
            Self::Bhattacharyya,
            Self::JensenShannon,
            Self::ArithmeticGeometric,
            Self::Triangular,
            Self::HarmonicMean,
        ]
    }

    /// Short label used in CSV output.
    pub fn label(&self) -> &'static str {
        match self {
            Self::KullbackLeibler => "KL",
            Self::Renyi(_) => "R",
            Self::Hellinger => "H",
            Self::Bhattacharyya => "B",
            Self::JensenShannon => "JS",
            Self::ArithmeticGeometric => "AG",
            Self::Triangular => "T",
            Self::HarmonicMean => "HM",
        }
    }

    pub fn has_closed_form(&self) -> bool {
        matches!(
            self,
            Self::KullbackLeibler | Self::Renyi(_) | Self::Hellinger | Self::Bhattacharyya
        )
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::Renyi(beta) => Self::renyi(beta).map(|_| ()),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    /// Accepts labels and names, case-insensitively; Rényi takes an optional
    /// order as `renyi:0.8` and defaults to 0.95.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, arg) = match lower.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (lower.as_str(), None),
        };
        let kind = match name {
            "kl" | "kullback-leibler" | "kullbackleibler" => Self::KullbackLeibler,
            "r" | "renyi" | "rényi" => {
                let beta = match arg {
                    Some(a) => a
                        .parse::<f64>()
                        .map_err(|_| Error::Domain(format!("bad Rényi order '{a}'")))?,
                    None => DEFAULT_RENYI_BETA,
                };
                return Self::renyi(beta);
            }
            "h" | "hellinger" => Self::Hellinger,
            "b" | "bhattacharyya" => Self::Bhattacharyya,
            "js" | "jensen-shannon" | "jensenshannon" => Self::JensenShannon,
            "ag" | "arithmetic-geometric" | "arithmeticgeometric" => Self::ArithmeticGeometric,
            "t" | "triangular" => Self::Triangular,
            "hm" | "harmonic-mean" | "harmonicmean" => Self::HarmonicMean,
            _ => return Err(Error::Domain(format!("unknown distance '{s}'"))),
        };
        if arg.is_some() {
            return Err(Error::Domain(format!("distance '{name}' takes no parameter")));
        }
        Ok(kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMethod {
    Quadrature,
    ClosedForm,
    /// Closed form when available and evaluable, quadrature otherwise.
    #[default]
    Auto,
}

impl FromStr for EvalMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "quadrature" | "quad" => Ok(Self::Quadrature),
            "closed-form" | "closedform" | "closed" => Ok(Self::ClosedForm),
            "auto" => Ok(Self::Auto),
            other => Err(Error::Domain(format!("unknown evaluation method '{other}'"))),
        }
    }
}

/// Constants of the closed-form distances for a parameter pair.
///
/// The densities are written fᵢ(x) = kᵢ x^{aᵢ} (bᵢ + Lᵢx)^{−cᵢ}, so
/// kᵢ = Lᵢ^Lᵢ Γ(Lᵢ−αᵢ) / (γᵢ^αᵢ Γ(−αᵢ) Γ(Lᵢ)), aᵢ = Lᵢ − 1, bᵢ = γᵢ and
/// cᵢ = |αᵢ| + Lᵢ. The Rényi exponents (h, g, e, m) depend on β.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormConstants {
    pub k1: f64,
    pub k2: f64,
    pub ln_k1: f64,
    pub ln_k2: f64,
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
    /// log(k₂/k₁).
    pub d: f64,
    pub beta: f64,
    pub h1: f64,
    pub h2: f64,
    pub g1: f64,
    pub g2: f64,
    pub e1: f64,
    pub e2: f64,
    pub m1: f64,
    pub m2: f64,
    pub f1: f64,
    pub f2: f64,
    pub looks1: f64,
    pub looks2: f64,
}

impl ClosedFormConstants {
    pub fn new(p1: &G0Params, p2: &G0Params, beta: f64) -> Self {
        let ln_k1 = p1.log_norm();
        let ln_k2 = p2.log_norm();
        let (l1, l2) = (p1.looks(), p2.looks());
        let (al1, al2) = (p1.alpha(), p2.alpha());
        Self {
            k1: ln_k1.exp(),
            k2: ln_k2.exp(),
            ln_k1,
            ln_k2,
            a1: l1 - 1.0,
            a2: l2 - 1.0,
            b1: p1.gamma(),
            b2: p2.gamma(),
            c1: -al1 + l1,
            c2: -al2 + l2,
            d: ln_k2 - ln_k1,
            beta,
            h1: (beta * ln_k2 + (1.0 - beta) * ln_k1).exp(),
            h2: (beta * ln_k1 + (1.0 - beta) * ln_k2).exp(),
            g1: (l1 - 1.0) * (1.0 - beta) + (l2 - 1.0) * beta,
            g2: (l1 - 1.0) * beta + (l2 - 1.0) * (1.0 - beta),
            e1: (al1 - l1) * (1.0 - beta),
            e2: (al2 - l2) * beta,
            m1: (al1 - l1) * beta,
            m2: (al2 - l2) * (1.0 - beta),
            f1: (al1 - l1) / 2.0,
            f2: (al2 - l2) / 2.0,
            looks1: l1,
            looks2: l2,
        }
    }
}

/// log ∫₀^∞ x^a (b₁ + n₁x)^{c₁} (b₂ + n₂x)^{c₂} dx.
///
/// With x = (b₁/n₁)·u/(1−u), after ordering the factors so that
/// w = n₂b₁/(n₁b₂) ≤ 1, the integral is a single Euler-type term
/// B(a+1, s)·₂F₁(−c₂, a+1; −c₁−c₂; 1−w) with s = −1−a−c₁−c₂, whose series
/// has positive terms. When that series is too slow (w near 0) the two-term
/// connection formula in 1/(1−w)'s reciprocal is used instead.
pub fn ln_power_product_integral(a: f64, b1: f64, n1: f64, c1: f64, b2: f64, n2: f64, c2: f64) -> Result<f64> {
    if !(a > -1.0) || !(a + 1.0 + c1 + c2 < 0.0) {
        return Err(Error::Domain(format!(
            "integral diverges for a = {a}, c1 + c2 = {}",
            c1 + c2
        )));
    }
    let w = n2 * b1 / (n1 * b2);
    if w > 1.0 {
        return ln_power_product_integral(a, b2, n2, c2, b1, n1, c1);
    }
    let s = -1.0 - a - c1 - c2;
    let euler = gauss_2f1(-c2, a + 1.0, -c1 - c2, 1.0 - w).and_then(|f| {
        let lb = ln_gamma_unchecked(a + 1.0) + ln_gamma_unchecked(s) - ln_gamma_unchecked(-c1 - c2);
        if f > 0.0 && f.is_finite() {
            Ok((a + 1.0) * (b1 / n1).ln() + c1 * b1.ln() + c2 * b2.ln() + lb + f.ln())
        } else {
            Err(Error::Unsupported(format!("Euler series evaluated to {f}")))
        }
    });
    match euler {
        Ok(v) => Ok(v),
        Err(_) => ln_power_product_connection(a, b1, n1, c1, b2, n2, c2),
    }
}

/// The two-term connection formula with argument b₂n₁/(b₁n₂) ≤ 1. Refuses at
/// csc poles, when a series does not converge, and when the two terms cancel.
fn ln_power_product_connection(a: f64, b1: f64, n1: f64, c1: f64, b2: f64, n2: f64, c2: f64) -> Result<f64> {
    let z = b2 * n1 / (b1 * n2);
    if z > 1.0 {
        return ln_power_product_connection(a, b2, n2, c2, b1, n1, c1);
    }
    let pole_arg = c2 + a;
    if (pole_arg - pole_arg.round()).abs() < POLE_TOL {
        return Err(Error::Unsupported(format!("csc pole at c2 + a = {pole_arg}")));
    }
    let r1 = n1 / b1;
    let r2 = n2 / b2;
    let s = -1.0 - c1 - c2 - a;

    let (lg_s, sg_s) = ln_abs_gamma(s)?;
    let (lg_mc1, sg_mc1) = ln_abs_gamma(-c1)?;
    let (lg_mc2a, sg_mc2a) = ln_abs_gamma(-c2 - a)?;
    let ln_t1 = (-1.0 - c2 - a) * r1.ln() + c2 * r2.ln() + lg_s - lg_mc1 - lg_mc2a;
    let t1 = -sg_s * sg_mc1 * sg_mc2a * ln_t1.exp() * gauss_2f1(-c2, s, -c2 - a, z)?;

    let (lg_a1, sg_a1) = ln_abs_gamma(1.0 + a)?;
    let (lg_mc2, sg_mc2) = ln_abs_gamma(-c2)?;
    let (lg_b, sg_b) = ln_abs_gamma(2.0 + c2 + a)?;
    let ln_t2 = (-1.0 - a) * r2.ln() + lg_a1 - lg_mc2 - lg_b;
    let t2 = sg_a1 * sg_mc2 * sg_b * ln_t2.exp() * gauss_2f1(-c1, 1.0 + a, 2.0 + c2 + a, z)?;

    let sum = t1 + t2;
    if !(sum.abs() > 1e-7 * (t1.abs() + t2.abs())) {
        return Err(Error::Unsupported(format!("closed form loses precision: terms {t1} and {t2} cancel")));
    }
    let bracket = PI / (pole_arg * PI).sin() * sum;
    if !(bracket > 0.0) || !bracket.is_finite() {
        return Err(Error::Unsupported(format!("closed form evaluated to {bracket}")));
    }
    Ok(c1 * b1.ln() + c2 * b2.ln() + bracket.ln())
}

/// E[log(γᵢ + Lᵢ Z)] for Z ~ G⁰(α_j, γ_j, L_j).
///
/// With V = L_j Z / γ_j, which is beta-prime(L_j, −α_j), the expectation is
/// log γᵢ + E log(1 + ρV) with ρ = Lᵢγ_j / (L_j γᵢ), and the latter reduces
/// to a ₃F₂ series in 1 − ρ or 1 − 1/ρ, whichever lies in [0, 1).
fn expected_log_affine(gamma_i: f64, looks_i: f64, pj: &G0Params) -> Result<f64> {
    let p = pj.looks();
    let q = -pj.alpha();
    let rho = looks_i * pj.gamma() / (p * gamma_i);
    let base = digamma_unchecked(p + q) - digamma_unchecked(q);
    let tail = if rho <= 1.0 {
        let s = 1.0 - rho;
        base - s * p / (p + q) * hyp_3f2(1.0, 1.0, p + 1.0, 2.0, p + q + 1.0, s)?
    } else {
        let s = 1.0 - 1.0 / rho;
        rho.ln() + base - s * q / (p + q) * hyp_3f2(1.0, 1.0, q + 1.0, 2.0, p + q + 1.0, s)?
    };
    Ok(gamma_i.ln() + tail)
}

/// E[log Z] for Z ~ G⁰(α, γ, L).
fn expected_log(p: &G0Params) -> f64 {
    digamma_unchecked(p.looks()) - p.looks().ln() - digamma_unchecked(-p.alpha()) + p.gamma().ln()
}

/// Unsymmetrized Kullback-Leibler divergence E₁[log f₁ − log f₂] in closed form.
fn kl_divergence_closed(p1: &G0Params, p2: &G0Params) -> Result<f64> {
    let own = p1.gamma().ln() + digamma_unchecked(p1.looks() - p1.alpha()) - digamma_unchecked(-p1.alpha());
    let cross = expected_log_affine(p2.gamma(), p2.looks(), p1)?;
    let e_log = expected_log(p1);
    Ok(p1.log_norm() - p2.log_norm() + (p1.looks() - p2.looks()) * e_log + (p1.alpha() - p1.looks()) * own
        - (p2.alpha() - p2.looks()) * cross)
}

fn closed_form(kind: DistanceKind, p1: &G0Params, p2: &G0Params) -> Result<f64> {
    let beta = match kind {
        DistanceKind::Renyi(b) => b,
        _ => 0.5,
    };
    let k = ClosedFormConstants::new(p1, p2, beta);
    let (l1, l2) = (k.looks1, k.looks2);
    let d = match kind {
        DistanceKind::KullbackLeibler => 0.5 * (kl_divergence_closed(p1, p2)? + kl_divergence_closed(p2, p1)?),
        DistanceKind::Hellinger | DistanceKind::Bhattacharyya => {
            let ln_i = ln_power_product_integral(0.5 * (k.a1 + k.a2), k.b1, l1, k.f1, k.b2, l2, k.f2)?;
            let ln_rho = 0.5 * (k.ln_k1 + k.ln_k2) + ln_i;
            if kind == DistanceKind::Hellinger {
                -ln_rho.exp_m1()
            } else {
                -ln_rho
            }
        }
        DistanceKind::Renyi(beta) => {
            let ln_h1 = beta * k.ln_k2 + (1.0 - beta) * k.ln_k1;
            let ln_h2 = beta * k.ln_k1 + (1.0 - beta) * k.ln_k2;
            let i1 = ln_h1 + ln_power_product_integral(k.g1, k.b1, l1, k.e1, k.b2, l2, k.e2)?;
            let i2 = ln_h2 + ln_power_product_integral(k.g2, k.b1, l1, k.m1, k.b2, l2, k.m2)?;
            // log of the mean of e^{i1} and e^{i2}
            let hi = i1.max(i2);
            let ln_mean = hi + (0.5 * ((i1 - hi).exp() + (i2 - hi).exp())).ln();
            ln_mean / (beta - 1.0)
        }
        _ => {
            return Err(Error::Unsupported(format!("no closed form for the {kind} distance")));
        }
    };
    if !d.is_finite() {
        return Err(Error::Unsupported(format!("closed form for {kind} is not finite")));
    }
    Ok(d.max(0.0))
}

/// log sinh(u) for u ≥ 0.
fn ln_sinh(u: f64) -> f64 {
    if u > 20.0 {
        u - LN_2 + (-(-2.0 * u).exp()).ln_1p()
    } else {
        u.sinh().ln()
    }
}

/// log cosh(u) for u ≥ 0.
fn ln_cosh(u: f64) -> f64 {
    if u < 1.0 {
        let s = (0.5 * u).sinh();
        (2.0 * s * s).ln_1p()
    } else {
        u + (-2.0 * u).exp().ln_1p() - LN_2
    }
}

/// The integrals from which every distance is assembled.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Core {
    /// ∫ 2u e^m sinh u = d_KL.
    Kl,
    /// ∫ e^m sinh(βu) sinh((1−β)u); the mean Rényi integral is 1 − 2J.
    Power(f64),
    /// ∫ 2 e^m sinh u tanh u = d_T.
    Tri,
    /// ∫ e^{m+u} g(u) = 2 d_JS.
    Js,
    /// ∫ e^m cosh u log cosh u = d_AG.
    Ag,
}

impl Core {
    fn of(kind: DistanceKind) -> Self {
        match kind {
            DistanceKind::KullbackLeibler => Core::Kl,
            DistanceKind::Renyi(b) => Core::Power(b),
            DistanceKind::Hellinger | DistanceKind::Bhattacharyya => Core::Power(0.5),
            DistanceKind::JensenShannon => Core::Js,
            DistanceKind::ArithmeticGeometric => Core::Ag,
            DistanceKind::Triangular | DistanceKind::HarmonicMean => Core::Tri,
        }
    }

    #[inline]
    fn integrand(self, l1: f64, l2: f64) -> f64 {
        if !(l1.is_finite() && l2.is_finite()) {
            // Indeterminate forms count as zero.
            return 0.0;
        }
        let m = 0.5 * (l1 + l2);
        let u = 0.5 * (l1 - l2).abs();
        if u == 0.0 {
            return 0.0;
        }
        let v = match self {
            Core::Kl => (m + (2.0 * u).ln() + ln_sinh(u)).exp(),
            Core::Power(b) => (m + ln_sinh(b * u) + ln_sinh((1.0 - b) * u)).exp(),
            Core::Tri => (m + LN_2 + ln_sinh(u) + u.tanh().ln()).exp(),
            Core::Js => {
                let e = (-2.0 * u).exp();
                let g = u * -(-2.0 * u).exp_m1() - (1.0 + e) * ln_cosh(u);
                (m + u).exp() * g.max(0.0)
            }
            Core::Ag => {
                let e = (-2.0 * u).exp();
                (m + u).exp() * 0.5 * (1.0 + e) * ln_cosh(u)
            }
        };
        if v.is_finite() {
            v
        } else {
            0.0
        }
    }

    fn finish(self, kind: DistanceKind, j: f64) -> f64 {
        let d = match (self, kind) {
            (Core::Kl, _) | (Core::Ag, _) => j,
            (Core::Js, _) => 0.5 * j,
            (Core::Tri, DistanceKind::HarmonicMean) => -(-0.5 * j).ln_1p(),
            (Core::Tri, _) => j,
            (Core::Power(_), DistanceKind::Hellinger) => 2.0 * j,
            (Core::Power(_), DistanceKind::Bhattacharyya) => -(-2.0 * j).ln_1p(),
            (Core::Power(b), _) => -(-2.0 * j).ln_1p() / (1.0 - b),
        };
        d.max(0.0)
    }
}

/// Both laws rescaled by a common factor so that their bulk sits near one.
/// Distances are invariant under a common change of scale.
fn normalized(p1: &G0Params, p2: &G0Params) -> Result<(G0Params, G0Params)> {
    let s1 = p1.gamma() / -p1.alpha();
    let s2 = p2.gamma() / -p2.alpha();
    let c = 1.0 / (s1.sqrt() * s2.sqrt());
    Ok((p1.scaled(c)?, p2.scaled(c)?))
}

fn integrate_core(core: Core, p1: &G0Params, p2: &G0Params) -> Result<f64> {
    let (d1, d2) = (p1.density(), p2.density());
    let r = integrate_semi_infinite(
        |x| core.integrand(d1.ln_pdf(x), d2.ln_pdf(x)),
        DEFAULT_ABS_TOL,
        DEFAULT_REL_TOL,
    )?;
    Ok(r.value)
}

fn quadrature_distance(kind: DistanceKind, p1: &G0Params, p2: &G0Params) -> Result<f64> {
    let core = Core::of(kind);
    Ok(core.finish(kind, integrate_core(core, p1, p2)?))
}

/// The symmetrized distance d = (D(p₁,p₂) + D(p₂,p₁))/2 of the given kind.
pub fn distance(kind: DistanceKind, p1: &G0Params, p2: &G0Params, method: EvalMethod) -> Result<f64> {
    kind.validate()?;
    if p1 == p2 {
        return Ok(0.0);
    }
    let (q1, q2) = normalized(p1, p2)?;
    match method {
        EvalMethod::Quadrature => quadrature_distance(kind, &q1, &q2),
        EvalMethod::ClosedForm => closed_form(kind, &q1, &q2),
        EvalMethod::Auto => {
            if kind.has_closed_form() {
                if let Ok(d) = closed_form(kind, &q1, &q2) {
                    return Ok(d);
                }
            }
            quadrature_distance(kind, &q1, &q2)
        }
    }
}

/// Several distances for one pair, sharing integrals between kinds that are
/// functions of the same integral (H, B and Rényi ½; T and HM).
pub fn distances(kinds: &[DistanceKind], p1: &G0Params, p2: &G0Params, method: EvalMethod) -> Vec<Result<f64>> {
    if p1 == p2 {
        return kinds.iter().map(|k| k.validate().map(|_| 0.0)).collect();
    }
    let (q1, q2) = match normalized(p1, p2) {
        Ok(q) => q,
        Err(e) => return kinds.iter().map(|_| Err(e.clone())).collect(),
    };
    let mut cache: Vec<(Core, Result<f64>)> = Vec::new();
    let mut integral = |core: Core| -> Result<f64> {
        if let Some((_, r)) = cache.iter().find(|(c, _)| *c == core) {
            return r.clone();
        }
        let r = integrate_core(core, &q1, &q2);
        cache.push((core, r.clone()));
        r
    };
    kinds
        .iter()
        .map(|&kind| {
            kind.validate()?;
            let closed = match method {
                EvalMethod::Quadrature => None,
                EvalMethod::ClosedForm => Some(closed_form(kind, &q1, &q2)),
                EvalMethod::Auto if kind.has_closed_form() => closed_form(kind, &q1, &q2).ok().map(Ok),
                EvalMethod::Auto => None,
            };
            match closed {
                Some(r) => r,
                None => {
                    let core = Core::of(kind);
                    integral(core).map(|j| core.finish(kind, j))
                }
            }
        })
        .collect()
}

/// The unsymmetrized divergence D(p₁, p₂) = h(∫ φ(f₁/f₂) f₂) with the (h, φ)
/// pair of the given kind, by quadrature.
pub fn divergence_hphi(kind: DistanceKind, p1: &G0Params, p2: &G0Params) -> Result<f64> {
    kind.validate()?;
    let (q1, q2) = normalized(p1, p2)?;
    let (d1, d2) = (q1.density(), q2.density());
    let phi = |x: f64| -> f64 {
        match kind {
            DistanceKind::KullbackLeibler => x * x.ln(),
            DistanceKind::Renyi(b) => (x.powf(b) - b * (x - 1.0) - 1.0) / (b - 1.0),
            DistanceKind::Hellinger => (x.sqrt() - 1.0).powi(2),
            DistanceKind::Bhattacharyya => -x.sqrt() + 0.5 * (x + 1.0),
            DistanceKind::JensenShannon => x * (2.0 * x / (x + 1.0)).ln(),
            DistanceKind::ArithmeticGeometric => 0.5 * (x + 1.0) * ((x + 1.0) / (2.0 * x)).ln(),
            DistanceKind::Triangular | DistanceKind::HarmonicMean => (x - 1.0).powi(2) / (x + 1.0),
        }
    };
    let r = integrate_semi_infinite(
        |x| {
            let (l1, l2) = (d1.ln_pdf(x), d2.ln_pdf(x));
            let v = phi((l1 - l2).exp()) * l2.exp();
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        DEFAULT_ABS_TOL,
        DEFAULT_REL_TOL,
    )?;
    let y = r.value;
    let d = match kind {
        DistanceKind::Renyi(b) => ((b - 1.0) * y + 1.0).ln() / (b - 1.0),
        DistanceKind::Hellinger => y / 2.0,
        DistanceKind::Bhattacharyya => -(-y).ln_1p(),
        DistanceKind::HarmonicMean => -(-y / 2.0).ln_1p(),
        _ => y,
    };
    Ok(d.max(0.0))
}

/// Distances from unit-mean laws G⁰(α₁, −α₁−1, L) to `reference`, one per
/// grid point, where L is the reference's number of looks.
pub fn distance_curve(
    kind: DistanceKind,
    alpha_grid: &[f64],
    reference: &G0Params,
    method: EvalMethod,
) -> Result<Vec<(f64, f64)>> {
    alpha_grid
        .iter()
        .map(|&a| {
            if !(a < -1.0) {
                return Err(Error::Domain(format!("curve grid needs alpha < -1, got {a}")));
            }
            let p = G0Params::new(a, -a - 1.0, reference.looks())?;
            Ok((a, distance(kind, &p, reference, method)?))
        })
        .collect()
}

/// CSV text with header `alpha,distance`.
pub fn curve_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("alpha,distance\n");
    for (a, d) in rows {
        out.push_str(&format!("{a},{d}\n"));
    }
    out
}

/// The Figure-style reference law G⁰(−12, 11, 8), which has unit mean.
pub fn curve_reference() -> G0Params {
    G0Params::new(-12.0, 11.0, 8.0).expect("valid reference parameters")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(a: f64, g: f64, l: f64) -> G0Params {
        G0Params::new(a, g, l).unwrap()
    }

    fn random_pair(rng: &mut ChaCha8Rng, integer_looks: bool) -> (G0Params, G0Params) {
        let l = if integer_looks {
            [1.0, 2.0, 4.0, 8.0][rng.random_range(0..4)]
        } else {
            rng.random_range(1.0..6.0)
        };
        let a1 = -rng.random_range(1.2..10.0);
        let a2 = -rng.random_range(1.2..10.0);
        let g1 = rng.random_range(0.5..5.0) * -(1.0 + a1);
        let g2 = rng.random_range(0.5..5.0) * -(1.0 + a2);
        (p(a1, g1, l), p(a2, g2, l))
    }

    /// Direct quadrature of the (h, φ) pair, with no log-space rearrangement.
    fn hphi_oracle(p1: &G0Params, p2: &G0Params, phi: impl Fn(f64) -> f64) -> f64 {
        let (d1, d2) = (p1.density(), p2.density());
        integrate_semi_infinite(
            |x| {
                let f2 = d2.ln_pdf(x).exp();
                let v = phi(d1.ln_pdf(x).exp() / f2) * f2;
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            },
            1e-12,
            1e-10,
        )
        .unwrap()
        .value
    }

    #[test]
    fn kind_parsing_and_labels() {
        assert_eq!("kl".parse::<DistanceKind>().unwrap(), DistanceKind::KullbackLeibler);
        assert_eq!("Renyi".parse::<DistanceKind>().unwrap(), DistanceKind::Renyi(0.95));
        assert_eq!("renyi:0.5".parse::<DistanceKind>().unwrap(), DistanceKind::Renyi(0.5));
        assert!("renyi:1.5".parse::<DistanceKind>().is_err());
        assert!("t:3".parse::<DistanceKind>().is_err());
        assert!("foo".parse::<DistanceKind>().is_err());
        let labels: Vec<_> = DistanceKind::all(0.95).iter().map(|k| k.label()).collect();
        assert_eq!(labels, ["KL", "R", "H", "B", "JS", "AG", "T", "HM"]);
    }

    #[test]
    fn equal_parameters_give_zero() {
        let q = p(-3.0, 2.0, 1.0);
        for kind in DistanceKind::all(0.95) {
            for m in [EvalMethod::Quadrature, EvalMethod::Auto] {
                assert_eq!(distance(kind, &q, &q, m).unwrap(), 0.0);
            }
            assert!(divergence_hphi(kind, &q, &q).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn kl_divergence_is_nonnegative() {
        let d = divergence_hphi(DistanceKind::KullbackLeibler, &p(-3.0, 2.0, 1.0), &p(-5.0, 4.0, 1.0)).unwrap();
        assert!(d > 0.0);
    }

    #[test]
    fn quadrature_paths_match_naive_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let (p1, p2) = random_pair(&mut rng, false);
            let check = |kind: DistanceKind, want: f64| {
                let got = distance(kind, &p1, &p2, EvalMethod::Quadrature).unwrap();
                assert!((got - want).abs() <= 1e-8 * want.abs().max(1e-3), "{kind}: {got} vs {want}");
            };
            let kl = 0.5 * hphi_oracle(&p1, &p2, |x| (x - 1.0) * x.ln());
            check(DistanceKind::KullbackLeibler, kl);
            let t = hphi_oracle(&p1, &p2, |x| (x - 1.0).powi(2) / (x + 1.0));
            check(DistanceKind::Triangular, t);
            let js = 0.5 * hphi_oracle(&p1, &p2, |x| x * (2.0 * x / (x + 1.0)).ln() + (2.0 / (x + 1.0)).ln());
            check(DistanceKind::JensenShannon, js);
            let ag = 0.5 * hphi_oracle(&p1, &p2, |x| (x + 1.0) * ((x + 1.0) / (2.0 * x.sqrt())).ln());
            check(DistanceKind::ArithmeticGeometric, ag);
            let b = 0.95;
            let y = hphi_oracle(&p1, &p2, |x| (x.powf(1.0 - b) + x.powf(b) - b * (x - 1.0) - 2.0) / (2.0 * (b - 1.0)));
            check(DistanceKind::Renyi(b), ((b - 1.0) * y + 1.0).ln() / (b - 1.0));
            let h = 1.0 - hphi_oracle(&p1, &p2, |x| x.sqrt());
            check(DistanceKind::Hellinger, h);
        }
    }

    #[test]
    fn symmetrized_divergences_match_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let kinds = [
            DistanceKind::KullbackLeibler,
            DistanceKind::JensenShannon,
            DistanceKind::ArithmeticGeometric,
            DistanceKind::Hellinger,
            DistanceKind::Bhattacharyya,
            DistanceKind::Triangular,
            DistanceKind::HarmonicMean,
        ];
        for _ in 0..5 {
            let (p1, p2) = random_pair(&mut rng, true);
            for kind in kinds {
                let sym = 0.5 * (divergence_hphi(kind, &p1, &p2).unwrap() + divergence_hphi(kind, &p2, &p1).unwrap());
                let d = distance(kind, &p1, &p2, EvalMethod::Quadrature).unwrap();
                assert!((sym - d).abs() <= 1e-8 * d.max(1e-3), "{kind}: {sym} vs {d}");
            }
        }
    }

    #[test]
    fn renyi_symmetrization_is_log_of_mean() {
        // The Rényi distance averages the two integrals before the logarithm,
        // so it is never below the average of the two one-sided divergences.
        let (p1, p2) = (p(-2.0, 1.0, 1.0), p(-6.0, 9.0, 1.0));
        let kind = DistanceKind::Renyi(0.95);
        let sym = 0.5 * (divergence_hphi(kind, &p1, &p2).unwrap() + divergence_hphi(kind, &p2, &p1).unwrap());
        let d = distance(kind, &p1, &p2, EvalMethod::Quadrature).unwrap();
        assert!(d <= sym + 1e-10);
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let kinds = [
            DistanceKind::KullbackLeibler,
            DistanceKind::Renyi(0.95),
            DistanceKind::Renyi(0.3),
            DistanceKind::Hellinger,
            DistanceKind::Bhattacharyya,
        ];
        let mut checked = 0;
        for _ in 0..12 {
            let (p1, p2) = random_pair(&mut rng, false);
            for kind in kinds {
                let Ok(cf) = distance(kind, &p1, &p2, EvalMethod::ClosedForm) else {
                    continue;
                };
                let q = distance(kind, &p1, &p2, EvalMethod::Quadrature).unwrap();
                assert!((cf - q).abs() <= 1e-6 * q, "{kind} {p1:?} {p2:?}: {cf} vs {q}");
                checked += 1;
            }
        }
        assert!(checked >= 40, "only {checked} closed-form evaluations succeeded");
    }

    #[test]
    fn kl_closed_form_handles_integer_looks() {
        let (p1, p2) = (p(-3.0, 2.0, 1.0), p(-5.0, 4.0, 1.0));
        let cf = distance(DistanceKind::KullbackLeibler, &p1, &p2, EvalMethod::ClosedForm).unwrap();
        let q = distance(DistanceKind::KullbackLeibler, &p1, &p2, EvalMethod::Quadrature).unwrap();
        assert!((cf - q).abs() <= 1e-8 * q);
    }

    #[test]
    fn power_product_integral_matches_quadrature() {
        let (a, b1, n1, c1, b2, n2, c2) = (0.7, 2.0, 1.5, -2.3, 0.6, 2.5, -1.9);
        let q = integrate_semi_infinite(
            |x| x.powf(a) * (b1 + n1 * x).powf(c1) * (b2 + n2 * x).powf(c2),
            1e-14,
            1e-12,
        )
        .unwrap()
        .value;
        let cf = ln_power_product_integral(a, b1, n1, c1, b2, n2, c2).unwrap().exp();
        assert!((cf - q).abs() <= 1e-9 * q, "{cf} vs {q}");
        let swapped = ln_power_product_integral(a, b2, n2, c2, b1, n1, c1).unwrap().exp();
        assert!((swapped - cf).abs() <= 1e-12 * cf);
    }

    #[test]
    fn connection_formula_poles_do_not_affect_the_closed_form() {
        // c + a = (α + L)/2 − 1 is an integer in both orientations here.
        let (p1, p2) = (p(-5.0, 4.0, 1.0), p(-3.0, 2.0, 1.0));
        let k = ClosedFormConstants::new(&p1, &p2, 0.5);
        let args = (0.5 * (k.a1 + k.a2), k.b1, 1.0, k.f1, k.b2, 1.0, k.f2);
        assert!(matches!(
            ln_power_product_connection(args.0, args.1, args.2, args.3, args.4, args.5, args.6),
            Err(Error::Unsupported(_))
        ));
        let cf = distance(DistanceKind::Hellinger, &p1, &p2, EvalMethod::ClosedForm).unwrap();
        let q = distance(DistanceKind::Hellinger, &p1, &p2, EvalMethod::Quadrature).unwrap();
        assert!((cf - q).abs() <= 1e-8 * q);
        assert_eq!(distance(DistanceKind::Hellinger, &p1, &p2, EvalMethod::Auto).unwrap(), cf);
    }

    #[test]
    fn euler_and_connection_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut compared = 0;
        for _ in 0..200 {
            let a = rng.random_range(-0.5..4.0);
            let (c1, c2) = (-rng.random_range(1.0..8.0), -rng.random_range(1.0..8.0));
            if a + 1.0 + c1 + c2 >= -0.2 {
                continue;
            }
            let (b1, n1, b2, n2) = (
                rng.random_range(0.1..10.0),
                rng.random_range(1.0..8.0),
                rng.random_range(0.1..10.0),
                rng.random_range(1.0..8.0),
            );
            let e = ln_power_product_integral(a, b1, n1, c1, b2, n2, c2).unwrap();
            if let Ok(c) = ln_power_product_connection(a, b1, n1, c1, b2, n2, c2) {
                assert!((e - c).abs() <= 1e-8 * (1.0 + e.abs()), "{e} vs {c}");
                compared += 1;
            }
        }
        assert!(compared > 50);
    }

    #[test]
    fn kinds_without_closed_form_are_unsupported() {
        let (p1, p2) = (p(-2.5, 1.0, 2.0), p(-4.0, 3.0, 2.0));
        for kind in [
            DistanceKind::JensenShannon,
            DistanceKind::ArithmeticGeometric,
            DistanceKind::Triangular,
            DistanceKind::HarmonicMean,
        ] {
            assert!(matches!(
                distance(kind, &p1, &p2, EvalMethod::ClosedForm),
                Err(Error::Unsupported(_))
            ));
            assert!(distance(kind, &p1, &p2, EvalMethod::Auto).is_ok());
        }
    }

    #[test]
    fn distance_identities_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let (p1, p2) = random_pair(&mut rng, true);
            let d = |k| distance(k, &p1, &p2, EvalMethod::Quadrature).unwrap();
            let (h, b, t, hm) = (
                d(DistanceKind::Hellinger),
                d(DistanceKind::Bhattacharyya),
                d(DistanceKind::Triangular),
                d(DistanceKind::HarmonicMean),
            );
            let r = d(DistanceKind::Renyi(0.5));
            assert!((b + (1.0 - h).ln()).abs() <= 1e-10);
            assert!((hm + (1.0 - t / 2.0).ln()).abs() <= 1e-10);
            assert!((h - (1.0 - (-0.5 * r).exp())).abs() <= 1e-10);
        }
    }

    #[test]
    fn batch_matches_single_evaluation() {
        let (p1, p2) = (p(-1.5, 0.5, 1.0), p(-1.7, 1.4, 1.0));
        let kinds = DistanceKind::all(0.95);
        for method in [EvalMethod::Quadrature, EvalMethod::Auto] {
            let batch = distances(&kinds, &p1, &p2, method);
            for (k, r) in kinds.iter().zip(batch) {
                assert_eq!(r.unwrap(), distance(*k, &p1, &p2, method).unwrap());
            }
        }
    }

    #[test]
    fn curve_is_zero_only_at_the_reference() {
        let grid: Vec<f64> = (0..=16).map(|i| -14.0 + 0.25 * i as f64).collect();
        let reference = curve_reference();
        for kind in DistanceKind::all(0.95) {
            let rows = distance_curve(kind, &grid, &reference, EvalMethod::Auto).unwrap();
            for (a, d) in &rows {
                if *a == -12.0 {
                    assert_eq!(*d, 0.0);
                } else {
                    assert!(*d > 0.0, "{kind} at {a}");
                }
            }
        }
        let h = distance_curve(DistanceKind::Hellinger, &grid, &reference, EvalMethod::Auto).unwrap();
        let b = distance_curve(DistanceKind::Bhattacharyya, &grid, &reference, EvalMethod::Auto).unwrap();
        let order = |v: &[(f64, f64)]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&i, &j| v[i].1.total_cmp(&v[j].1));
            idx
        };
        assert_eq!(order(&h), order(&b));
        let csv = curve_csv(&h[..2]);
        assert!(csv.starts_with("alpha,distance\n-14,"));
        assert!(distance_curve(DistanceKind::Hellinger, &[-0.5], &reference, EvalMethod::Auto).is_err());
    }
}
