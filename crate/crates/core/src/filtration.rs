//! I-adic valuations, the weight filtration and the r-Gauss norm.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ncseries::{Alphabet, Monomial, NcSeries};
use crate::padics::Valuation;
use crate::Rational;

/// Largest admissible denominator of the radius exponent.
pub const MAX_RADIUS_DENOMINATOR: i64 = 64;

/// Radius exponent `r` of the ball of radius `l^(-r)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GaussParams {
    r: Rational,
}

impl GaussParams {
    pub fn new(r: Rational) -> Result<Self> {
        if r <= Rational::from_integer(0) {
            return Err(Error::InvalidParameter(format!("radius exponent {r} must be positive")));
        }
        if *r.denom() > MAX_RADIUS_DENOMINATOR {
            return Err(Error::InvalidParameter(format!(
                "radius exponent {r} has denominator above {MAX_RADIUS_DENOMINATOR}"
            )));
        }
        Ok(GaussParams { r })
    }

    pub fn from_ratio(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::DivisionByZero);
        }
        Self::new(Rational::new(num, den))
    }

    pub fn r(&self) -> Rational {
        self.r
    }
}

impl FromStr for GaussParams {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse radius exponent {s:?}"));
        let s = s.trim();
        let r = match s.split_once('/') {
            Some((a, b)) => {
                let den: i64 = b.trim().parse().map_err(|_| bad())?;
                if den == 0 {
                    return Err(Error::DivisionByZero);
                }
                Rational::new(a.trim().parse().map_err(|_| bad())?, den)
            }
            None => Rational::from_integer(s.parse().map_err(|_| bad())?),
        };
        Self::new(r)
    }
}

impl TryFrom<String> for GaussParams {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GaussParams> for String {
    fn from(p: GaussParams) -> String {
        p.r.to_string()
    }
}

impl fmt::Display for GaussParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.r)
    }
}

/// `-log_l |a|_r` together with a monomial attaining it; `None` is `+inf`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaussNorm {
    pub exponent: Option<Rational>,
    pub witness: Option<Monomial>,
}

impl GaussNorm {
    /// `|self| <= |other|`, i.e. the exponent is at least the other one.
    pub fn at_most(&self, other: &GaussNorm) -> bool {
        match (self.exponent, other.exponent) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => a >= b,
        }
    }
}

/// `v_n`: least coefficient valuation over monomials of degree `< n`.
pub fn iadic_valuation(a: &NcSeries, n: usize) -> Result<Valuation> {
    if n > a.truncation() {
        return Err(Error::TruncationExceeded { requested: n, truncation: a.truncation() });
    }
    Ok(a.min_valuation_below(n))
}

/// `min_I v(a_I) + |I| r` over stored monomials.
pub fn gauss_norm(a: &NcSeries, p: &GaussParams) -> GaussNorm {
    let mut best: Option<(Rational, &Monomial)> = None;
    for (m, c) in a.terms() {
        let Valuation::Finite(v) = c.valuation() else { continue };
        let e = Rational::from_integer(v) + p.r * Rational::from_integer(m.degree() as i64);
        if best.map_or(true, |(b, _)| e < b) {
            best = Some((e, m));
        }
    }
    GaussNorm { exponent: best.map(|(e, _)| e), witness: best.map(|(_, m)| m.clone()) }
}

pub fn weight_level(alphabet: &Alphabet, m: &Monomial) -> usize {
    alphabet.weight_level(m)
}

/// Membership in `W^(-k)`: every stored monomial has weight level `>= k`.
pub fn in_weight(a: &NcSeries, k: usize) -> bool {
    a.terms().all(|(m, _)| a.alphabet().weight_level(m) >= k)
}

/// Checks `I^n` inside `W^(-n)` and `W^(-2n-1)` inside `I^n` on every
/// monomial of degree `<= n + 1`. Returns a violating monomial on failure.
pub fn check_w_iadic_inclusions(alphabet: &Alphabet, n: usize) -> std::result::Result<(), Monomial> {
    for m in alphabet.monomials(n + 2) {
        let level = alphabet.weight_level(&m);
        if m.degree() >= n && level < n {
            return Err(m);
        }
        if level > 2 * n && m.degree() < n {
            return Err(m);
        }
    }
    Ok(())
}

/// `dim W^(-k) / I^n` for `k = 0 ..= max level`.
pub fn w_dims(alphabet: &Alphabet, n: usize) -> Vec<usize> {
    let levels: Vec<usize> = alphabet.monomials(n).iter().map(|m| alphabet.weight_level(m)).collect();
    (0..=alphabet.max_level(n)).map(|k| levels.iter().filter(|&&l| l >= k).count()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ConsistentWithMembership,
    Inconsistent,
}

/// Growth table of `v_n + n r`; truncated data can only be consistent with
/// membership in the convergent ring, never prove it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiltrationReport {
    /// `(n, v_n)`; `None` is `+inf`.
    pub v_table: Vec<(usize, Option<i64>)>,
    pub w_dims: Vec<usize>,
    pub r: GaussParams,
    /// `(n, v_n + n r)` as exact rationals.
    pub trend: Vec<(usize, Option<String>)>,
    pub integral: bool,
    pub tail_nondecreasing: bool,
    pub verdict: Verdict,
    pub note: String,
}

pub fn convergence_report(a: &NcSeries, p: &GaussParams) -> FiltrationReport {
    let n_max = a.truncation();
    let v_table: Vec<(usize, Option<i64>)> =
        (1..=n_max).map(|n| (n, a.min_valuation_below(n).finite())).collect();
    let trend_values: Vec<(usize, Option<Rational>)> = v_table
        .iter()
        .map(|&(n, v)| (n, v.map(|v| Rational::from_integer(v) + p.r * Rational::from_integer(n as i64))))
        .collect();
    let integral = v_table.iter().all(|(_, v)| v.map_or(true, |v| v >= 0));
    let finite: Vec<Rational> = trend_values.iter().filter_map(|(_, t)| *t).collect();
    let tail = &finite[finite.len() / 2..];
    let tail_nondecreasing = tail.windows(2).all(|w| w[0] <= w[1]);
    let grows = match (finite.first(), finite.last()) {
        (Some(first), Some(last)) => finite.len() == 1 || last > first,
        _ => true,
    };
    let verdict = if integral || (tail_nondecreasing && grows) {
        Verdict::ConsistentWithMembership
    } else {
        Verdict::Inconsistent
    };
    let note = if integral {
        "integral coefficients: v_n >= 0, so v_n + n r grows without bound".to_string()
    } else {
        format!("truncated at I^{n_max}; the table is evidence for the limit, not a proof")
    };
    FiltrationReport {
        v_table,
        w_dims: w_dims(a.alphabet(), n_max),
        r: *p,
        trend: trend_values.into_iter().map(|(n, t)| (n, t.map(|t| t.to_string()))).collect(),
        integral,
        tail_nondecreasing,
        verdict,
        note,
    }
}

impl fmt::Display for FiltrationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "r = {}", self.r)?;
        writeln!(f, "{:>4}  {:>6}  {:>10}", "n", "v_n", "v_n + n r")?;
        for ((n, v), (_, t)) in self.v_table.iter().zip(&self.trend) {
            let v = v.map_or("inf".to_string(), |v| v.to_string());
            let t = t.clone().unwrap_or_else(|| "inf".to_string());
            writeln!(f, "{n:>4}  {v:>6}  {t:>10}")?;
        }
        let dims: Vec<String> = self.w_dims.iter().map(|d| d.to_string()).collect();
        writeln!(f, "dim W^(-k) mod I^n, k = 0..: {}", dims.join(" "))?;
        writeln!(f, "verdict: {:?} ({})", self.verdict, self.note)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padics::PadicScalar;
    use std::sync::Arc;

    fn log_one_plus_t(prime: u64, n: usize) -> NcSeries {
        let a = Arc::new(Alphabet::punctured_line(1).unwrap());
        let g = NcSeries::from_terms(
            a,
            prime,
            n,
            [
                (Monomial::empty(), PadicScalar::one(prime, 40)),
                (Monomial::new(&[0]), PadicScalar::one(prime, 40)),
            ],
        )
        .unwrap();
        g.log_grouplike().unwrap()
    }

    #[test]
    fn valuation_of_log() {
        let log = log_one_plus_t(3, 4);
        assert_eq!(iadic_valuation(&log, 4).unwrap(), Valuation::Finite(-1));
        assert_eq!(iadic_valuation(&log, 3).unwrap(), Valuation::Finite(0));
        assert!(iadic_valuation(&log, 5).is_err());
        let zero = NcSeries::zero(log.alphabet().clone(), 3, 4);
        assert_eq!(iadic_valuation(&zero, 4).unwrap(), Valuation::Infinity);
    }

    #[test]
    fn gauss_norm_single_term() {
        let a = Arc::new(Alphabet::punctured_line(1).unwrap());
        let x = NcSeries::from_terms(
            a.clone(),
            3,
            4,
            [(Monomial::new(&[0, 0]), PadicScalar::from_ratio(1, 3, 3, 20).unwrap())],
        )
        .unwrap();
        let g = gauss_norm(&x, &GaussParams::from_ratio(1, 1).unwrap());
        assert_eq!(g.exponent, Some(Rational::from_integer(1)));
        assert_eq!(g.witness, Some(Monomial::new(&[0, 0])));
        let one = NcSeries::one(a, 3, 4, 20);
        assert_eq!(gauss_norm(&one, &GaussParams::from_ratio(1, 1).unwrap()).exponent, Some(Rational::from_integer(0)));
    }

    #[test]
    fn gauss_params_validation() {
        assert!(GaussParams::from_ratio(0, 1).is_err());
        assert!(GaussParams::from_ratio(-1, 2).is_err());
        assert!(GaussParams::from_ratio(1, 65).is_err());
        assert_eq!("3/2".parse::<GaussParams>().unwrap().r(), Rational::new(3, 2));
        assert_eq!("2".parse::<GaussParams>().unwrap().r(), Rational::from_integer(2));
        assert!("x".parse::<GaussParams>().is_err());
    }

    #[test]
    fn weight_levels() {
        let mixed = Alphabet::new(vec!["a".into(), "c".into()], vec![1, 2]).unwrap();
        assert_eq!(weight_level(&mixed, &Monomial::empty()), 0);
        assert_eq!(weight_level(&mixed, &Monomial::new(&[0, 1])), 3);
    }

    #[test]
    fn punctured_line_weights_are_doubled_degrees() {
        let a = Alphabet::punctured_line(2).unwrap();
        for m in a.monomials(5) {
            assert_eq!(weight_level(&a, &m), 2 * m.degree());
        }
        // W^(-2k) = W^(-2k+1) = I^k
        let dims = w_dims(&a, 4);
        for k in 1..4 {
            assert_eq!(dims[2 * k], dims[2 * k - 1]);
        }
    }

    #[test]
    fn inclusions_hold() {
        let mixed = Alphabet::with_weights(&[1, 2]).unwrap();
        for n in 0..=5 {
            assert!(check_w_iadic_inclusions(&mixed, n).is_ok());
        }
        let w1 = Alphabet::uniform(2, 1).unwrap();
        assert!(check_w_iadic_inclusions(&w1, 4).is_ok());
        assert!(check_w_iadic_inclusions(&Alphabet::punctured_line(2).unwrap(), 3).is_ok());
    }

    #[test]
    fn report_for_log() {
        let log = log_one_plus_t(3, 8);
        let report = convergence_report(&log, &GaussParams::from_ratio(1, 1).unwrap());
        let expected = [None, Some(0), Some(0), Some(-1), Some(-1), Some(-1), Some(-1), Some(-1)];
        for (n, v) in &report.v_table {
            assert_eq!(*v, expected[n - 1], "v_{n}");
        }
        for n in 2..=8usize {
            let floor_log3 = (n as f64 - 1.0).log(3.0).floor() as i64;
            assert_eq!(report.v_table[n - 1].1, Some(-floor_log3));
        }
        assert_eq!(report.verdict, Verdict::ConsistentWithMembership);
        assert!(!report.integral);
    }

    #[test]
    fn report_for_divergent_series() {
        let a = Arc::new(Alphabet::punctured_line(1).unwrap());
        let terms = (0..8).map(|d| (Monomial::new(&vec![0; d]), PadicScalar::from_ratio(1, 3i64.pow(d as u32), 3, 30).unwrap()));
        let x = NcSeries::from_terms(a, 3, 8, terms).unwrap();
        let report = convergence_report(&x, &GaussParams::from_ratio(1, 2).unwrap());
        assert_eq!(report.verdict, Verdict::Inconsistent);
    }

    #[test]
    fn report_for_integral_series() {
        let a = Arc::new(Alphabet::punctured_line(2).unwrap());
        let g = crate::ncseries::GroupWord::from_ints(a, 5, &[(0, 3), (1, -2)], 20).unwrap().magnus_embed(6).unwrap();
        let report = convergence_report(&g, &GaussParams::from_ratio(1, 64).unwrap());
        assert_eq!(report.verdict, Verdict::ConsistentWithMembership);
        let json = serde_json::to_string(&report).unwrap();
        let back: FiltrationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}
