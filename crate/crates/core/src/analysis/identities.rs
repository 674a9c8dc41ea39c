//! Direct numerical checks of the identities behind the relaxation
//! parameter's asymptotics: the combinatorial factorial identity (in exact
//! rational arithmetic) and the leading-order expansion of gamma - 1 on the
//! harmonic oscillator.

use crate::error::{Error, Result};
use crate::integrators::{explicit_stages, gamma_quadratic_closed_form};
use crate::linalg::linear_fit;
use crate::ode::QuadraticForm;
use crate::problems::harmonic_oscillator;
use crate::tableaux::ButcherTableau;

/// Exact rational with 128-bit components; the factorials involved fit
/// comfortably (the identity sweep needs at most (2m)! with m <= 6).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    num: i128,
    den: i128,
}

impl Rational {
    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "zero denominator");
        let sign = if den < 0 { -1 } else { 1 };
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i128;
        Rational {
            num: sign * num / g,
            den: sign * den / g,
        }
    }

    pub const ZERO: Rational = Rational { num: 0, den: 1 };

    pub fn add(self, other: Rational) -> Rational {
        Rational::new(
            self.num * other.den + other.num * self.den,
            self.den * other.den,
        )
    }

    pub fn sub(self, other: Rational) -> Rational {
        Rational::new(
            self.num * other.den - other.num * self.den,
            self.den * other.den,
        )
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn numer(&self) -> i128 {
        self.num
    }

    pub fn denom(&self) -> i128 {
        self.den
    }
}

impl std::fmt::Display for Rational {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    if a == 0 {
        return b.max(1);
    }
    while b != 0 {
        let t = b;
        b = a % b;
        a = t;
    }
    a
}

fn factorial(n: i128) -> i128 {
    assert!((0..=33).contains(&n), "factorial overflow guard");
    (1..=n).product::<i128>().max(1)
}

/// Both sides of the factorial identity
///
///   sum_{n = max(1-m, m-s)}^{min(m-1, s-m)} (-1)^n / ((m-n)! (m+n)!)
///     = -2 (-1)^m / (2m)!
///
/// evaluated in exact rational arithmetic. The residual is exactly zero.
#[derive(Debug, Clone, Copy)]
pub struct LemmaA2Check {
    pub s: u32,
    pub m: u32,
    pub lhs: Rational,
    pub rhs: Rational,
    pub residual: Rational,
}

pub fn verify_lemma_a2(s: u32, m: u32) -> Result<LemmaA2Check> {
    if s < 1 || m < 1 || 2 * m > s + 1 {
        return Err(Error::PreconditionViolated(format!(
            "need s, m >= 1 and 2m <= s + 1; got s={s}, m={m}"
        )));
    }
    let (s, m) = (s as i128, m as i128);
    let lo = (1 - m).max(m - s);
    let hi = (m - 1).min(s - m);
    let mut lhs = Rational::ZERO;
    for n in lo..=hi {
        let sign: i128 = if n.rem_euclid(2) == 0 { 1 } else { -1 };
        lhs = lhs.add(Rational::new(sign, factorial(m - n) * factorial(m + n)));
    }
    let rhs_sign: i128 = if m.rem_euclid(2) == 0 { -2 } else { 2 };
    let rhs = Rational::new(rhs_sign, factorial(2 * m));
    Ok(LemmaA2Check {
        s: s as u32,
        m: m as u32,
        lhs,
        rhs,
        residual: lhs.sub(rhs),
    })
}

/// Evaluate the identity for every admissible (s, m) with s <= max_s.
pub fn lemma_a2_sweep(max_s: u32) -> Vec<LemmaA2Check> {
    let mut out = Vec::new();
    for s in 1..=max_s {
        for m in 1..=((s + 1) / 2) {
            out.push(verify_lemma_a2(s, m).expect("bounds admissible by construction"));
        }
    }
    out
}

/// Fit of gamma - 1 against dt on the harmonic oscillator.
#[derive(Debug, Clone)]
pub struct GammaAsymptotic {
    /// gamma at each probed step size.
    pub gammas: Vec<(f64, f64)>,
    /// Fitted exponent of |gamma - 1| ~ |C| dt^e (e = p - 1 for odd p,
    /// e = p for even p).
    pub exponent: f64,
    /// Fitted leading constant C, signed.
    pub constant: f64,
    /// Leading constant predicted by the expansion
    /// gamma = 1 - 2 (-1)^{(p+1)/2} (alpha_{p+1} - 1/(p+1)!) dt^{p-1}
    ///             ||L^{(p+1)/2} u0||^2 / ||L u0||^2,
    /// available for odd declared order only.
    pub predicted_constant: Option<f64>,
    pub r_squared: f64,
}

/// Compute the exact relaxation parameter of one step on the harmonic
/// oscillator for each dt (via the quadratic closed form) and fit the decay
/// of gamma - 1. Explicit tableaux only.
pub fn gamma_asymptotic_check(
    tableau: &ButcherTableau,
    u0: &[f64],
    dts: &[f64],
) -> Result<GammaAsymptotic> {
    if !tableau.is_explicit() {
        return Err(Error::NotExplicit(tableau.name.to_string()));
    }
    if dts.len() < 2 {
        return Err(Error::PreconditionViolated(
            "need at least two step sizes to fit the gamma expansion".into(),
        ));
    }
    assert!(u0.len() == 2, "one oscillator pair");
    let problem = harmonic_oscillator(1);
    let form = QuadraticForm::ScaledIdentity(1.0);

    let mut gammas = Vec::with_capacity(dts.len());
    for &dt in dts {
        let (stage_fs, _d, _u_plus) = explicit_stages(&problem, tableau, 0.0, u0, dt)?;
        let gamma = gamma_quadratic_closed_form(tableau, &stage_fs, &form)?;
        gammas.push((dt, gamma));
    }

    let xs: Vec<f64> = gammas.iter().map(|(dt, _)| dt.ln()).collect();
    let ys: Vec<f64> = gammas
        .iter()
        .map(|(_, g)| (g - 1.0).abs().max(f64::MIN_POSITIVE).ln())
        .collect();
    let (exponent, intercept, r_squared) = linear_fit(&xs, &ys);
    let sign = if gammas.last().expect("non-empty").1 >= 1.0 {
        1.0
    } else {
        -1.0
    };
    let constant = sign * intercept.exp();

    let p = tableau.declared_order;
    let predicted_constant = if p % 2 == 1 {
        // alpha_{p+1} is absent (zero) when the method has only p stages
        let alpha = tableau.stability_monomial_coefficients()?;
        let alpha_p1 = if p < tableau.s { alpha[p] } else { 0.0 };
        let fact_p1: f64 = (1..=(p + 1) as u64).map(|k| k as f64).product();
        let sign_term = if ((p + 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        // L rotates (u1, u2) -> (-u2, u1); powers cycle with norm preserved,
        // so ||L^k u0||^2 / ||L u0||^2 = 1
        Some(-2.0 * sign_term * (alpha_p1 - 1.0 / fact_p1))
    } else {
        None
    };

    Ok(GammaAsymptotic {
        gammas,
        exponent,
        constant,
        predicted_constant,
        r_squared,
    })
}
