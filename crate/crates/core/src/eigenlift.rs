//! Eigenvector lifting along the weight filtration with exact denominator
//! tracking, and the explicit bounds on the denominators.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::filtration::{convergence_report, FiltrationReport, GaussParams, Verdict};
use crate::galois::Endomorphism;
use crate::linalg::Matrix;
use crate::ncseries::{Monomial, NcSeries};
use crate::padics::{val_int, PadicScalar, Valuation};
use crate::Rational;

/// Order of a unit in `F_l^*`, or in `(Z/4)^*` when `l = 2`.
pub fn unit_order(q: &PadicScalar) -> Result<u64> {
    if !q.is_unit() {
        return Err(Error::NotUnit(q.to_string()));
    }
    let p = q.prime();
    let modulus = if p == 2 { 4 } else { p };
    let a = q
        .small_residue(modulus)
        .ok_or_else(|| Error::Precision(format!("{q} is not known modulo {modulus}")))?;
    let mut order = modulus - if p == 2 { 2 } else { 1 };
    for f in prime_factors(order) {
        while order % f == 0 && pow_mod(a, order / f, modulus) == 1 {
            order /= f;
        }
    }
    Ok(order)
}

fn pow_mod(a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u128 % m as u128;
    let mut b = a as u128 % m as u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m as u128;
        }
        b = b * b % m as u128;
        e >>= 1;
    }
    acc as u64
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= n {
        if n % f == 0 {
            out.push(f);
            while n % f == 0 {
                n /= f;
            }
        }
        f += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Precomputed data for `v_l(q^k - 1)` at a fixed unit `q`.
#[derive(Clone, Debug)]
pub struct UnitPowers {
    prime: u64,
    order: u64,
    order_valuation: u64,
}

impl UnitPowers {
    pub fn new(q: &PadicScalar) -> Result<Self> {
        let order = unit_order(q)?;
        let d = q.pow(order).checked_sub(&q.int_like(1))?;
        let order_valuation = match d.valuation() {
            Valuation::Finite(v) => v as u64,
            Valuation::Infinity => {
                return Err(Error::InvalidParameter(format!(
                    "{q} raised to its residual order is 1 at working precision"
                )))
            }
        };
        Ok(UnitPowers { prime: q.prime(), order, order_valuation })
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    /// `v_l(q^order - 1)`.
    pub fn order_valuation(&self) -> u64 {
        self.order_valuation
    }

    /// `v_l(q^k - 1)` for `k >= 1`.
    pub fn vl(&self, k: u64) -> u64 {
        if k % self.order == 0 {
            self.order_valuation + val_int(&(k / self.order).into(), self.prime).expect("k > 0")
        } else if self.prime == 2 {
            1
        } else {
            0
        }
    }

    /// `sum_{s=1}^{k} v_l(q^s - 1)`.
    pub fn partial_sum(&self, k: u64) -> u64 {
        (1..=k).map(|s| self.vl(s)).sum()
    }

    pub fn c_bound(&self, k: u64) -> Rational {
        let k = Rational::from_integer(k as i64);
        let r = Rational::from_integer(self.order as i64);
        let v = Rational::from_integer(self.order_valuation as i64);
        let inv = Rational::new(1, self.prime as i64 - 1);
        if self.prime == 2 {
            k / r * (v + inv + 1) + Rational::from_integer(1) / r
        } else {
            k / r * (v + inv)
        }
    }
}

/// `v_l(q^k - 1)` by the residual-order case split.
pub fn vl_qpow(q: &PadicScalar, k: u64) -> Result<u64> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    Ok(UnitPowers::new(q)?.vl(k))
}

/// `v(i, m, alpha) = sum_{s=1}^{m-i-1} v_l(alpha^s - 1)`.
pub fn v_bound(i: usize, m: usize, alpha: &PadicScalar) -> Result<u64> {
    if m < i + 1 {
        return Err(Error::InvalidParameter(format!("need m >= i + 1, got i = {i}, m = {m}")));
    }
    Ok(UnitPowers::new(alpha)?.partial_sum((m - i - 1) as u64))
}

/// The closed-form cap on `sum_{i<=k} v_l(q^i - 1)`.
pub fn c_bound(q: &PadicScalar, k: u64) -> Result<Rational> {
    Ok(UnitPowers::new(q)?.c_bound(k))
}

/// Radius threshold above which the lifted eigenvectors converge: `C(q, l, 1)`
/// for alphabets of pure weight (the base is already `alpha^w`), otherwise
/// `2 C(alpha, l, 1)`.
pub fn r_alpha(e: &Endomorphism) -> Result<Rational> {
    let c = c_bound(e.base(), 1)?;
    Ok(if e.alphabet().pure_weight().is_some() { c } else { c * 2 })
}

fn check_separable(e: &Endomorphism) -> Result<()> {
    let p = e.prime();
    let modulus = if p == 2 { 4 } else { p };
    if e.base().small_residue(modulus) != Some(1) {
        return Err(Error::HypothesisUnmet(format!(
            "lifting needs the action base congruent to 1 mod {modulus}, got {}",
            e.base()
        )));
    }
    Ok(())
}

/// An eigenvector lifted from a graded seed.
#[derive(Clone, Debug, Serialize)]
pub struct EigenLift {
    pub level: usize,
    pub seed: NcSeries,
    pub lift: NcSeries,
    pub eigenvalue: PadicScalar,
    /// `(n, v_n(lift))`; `None` is `+inf`.
    pub denominator_profile: Vec<(usize, Option<i64>)>,
    /// `(n, v(level, 2n, base))`, defined once `2n >= level + 1`.
    pub bound_profile: Vec<(usize, Option<u64>)>,
    /// `(n, C(base, l, 2n - level - 1))` as exact rationals.
    pub c_profile: Vec<(usize, Option<String>)>,
    /// `(m, v_l(lambda_m - lambda_level))` for each corrected level.
    pub step_divisors: Vec<(usize, u64)>,
}

/// Corrects `seed` (supported on level `k`) level by level through levels
/// `< level_limit` so that it becomes an eigenvector there.
fn lift_within(e: &Endomorphism, seed: &NcSeries, k: usize, level_limit: usize) -> Result<(NcSeries, Vec<(usize, u64)>)> {
    let alphabet = e.alphabet().clone();
    if let Some((m, _)) = seed.terms().find(|(m, _)| alphabet.weight_level(m) != k) {
        return Err(Error::InvalidParameter(format!("seed term {m} is not at level {k}")));
    }
    let Some(lambda) = e.level_eigenvalue(k) else {
        if seed.is_zero() {
            return Ok((seed.clone(), Vec::new()));
        }
        return Err(Error::InvalidParameter(format!("level {k} carries no graded piece")));
    };
    if level_limit > k + 1 {
        check_separable(e)?;
    }
    let n = seed.truncation();
    let twist = |x: &NcSeries| -> Result<NcSeries> { e.apply(x)?.checked_sub(&x.scalar_mul(&lambda)?) };
    let mut x = seed.clone();
    let mut residual = twist(seed)?;
    let mut divisors = Vec::new();
    for m in (k + 1)..level_limit {
        let r_m = residual.level_part(m);
        let nonempty = alphabet.monomials(n).iter().any(|t| alphabet.weight_level(t) == m);
        if !nonempty {
            continue;
        }
        let lambda_m = e
            .level_eigenvalue(m)
            .ok_or_else(|| Error::InvalidParameter(format!("level {m} unexpectedly populated")))?;
        let d = lambda_m.checked_sub(&lambda)?;
        let Valuation::Finite(dv) = d.valuation() else {
            return Err(Error::EigenvalueCollision { seed_level: k, level: m });
        };
        divisors.push((m, (dv - lambda.valuation().finite().unwrap_or(0)) as u64));
        if r_m.is_zero() {
            continue;
        }
        let y = r_m.scalar_mul(&d.inv()?.neg())?;
        residual = residual.checked_add(&twist(&y)?)?;
        x = x.checked_add(&y)?;
    }
    let leftover = residual.filter(|t| alphabet.weight_level(t) < level_limit);
    if !leftover.is_zero() {
        return Err(Error::Precision(format!("residual {leftover} survives the lift")));
    }
    Ok((x, divisors))
}

/// Lifts a graded class at level `k` to an eigenvector modulo `I^n`,
/// asserting the denominator caps at every degree.
pub fn lift_eigenvector(e: &Endomorphism, seed: &NcSeries, k: usize, n: usize) -> Result<EigenLift> {
    if n > e.truncation() || n > seed.truncation() {
        return Err(Error::TruncationExceeded { requested: n, truncation: e.truncation().min(seed.truncation()) });
    }
    let seed = seed.truncate(n)?;
    let limit = e.alphabet().max_level(n) + 1;
    let (lift, step_divisors) = lift_within(e, &seed, k, limit)?;
    let eigenvalue = e.level_eigenvalue(k).unwrap_or_else(|| PadicScalar::one(e.prime(), crate::DEFAULT_PRECISION));
    let powers = if limit > k + 1 { Some(UnitPowers::new(e.base())?) } else { None };
    let mut denominator_profile = Vec::with_capacity(n);
    let mut bound_profile = Vec::with_capacity(n);
    let mut c_profile = Vec::with_capacity(n);
    for deg in 1..=n {
        let v = lift.min_valuation_below(deg).finite();
        let (cap, c) = match &powers {
            Some(pw) if 2 * deg > k => {
                let span = (2 * deg - k - 1) as u64;
                (Some(pw.partial_sum(span)), Some(pw.c_bound(span)))
            }
            _ => (None, None),
        };
        if let Some(v) = v {
            let cap_i = cap.unwrap_or(0) as i64;
            if -v > cap_i {
                return Err(Error::CapViolation { degree: deg, observed: -v, cap: cap_i });
            }
        }
        if let (Some(cap), Some(c)) = (cap, c) {
            if Rational::from_integer(cap as i64) > c {
                return Err(Error::CapViolation { degree: deg, observed: cap as i64, cap: c.floor().to_integer() });
            }
        }
        denominator_profile.push((deg, v));
        bound_profile.push((deg, cap));
        c_profile.push((deg, c.map(|c| c.to_string())));
    }
    Ok(EigenLift { level: k, seed, lift, eigenvalue, denominator_profile, bound_profile, c_profile, step_divisors })
}

/// One eigenvalue's eigenspace on the full space modulo `I^n`.
#[derive(Clone, Debug, Serialize)]
pub struct Eigenspace {
    pub eigenvalue: PadicScalar,
    pub levels: Vec<usize>,
    /// Number of basis monomials on those levels.
    pub multiplicity: usize,
    pub dimension: usize,
    /// Kernel basis, normalized so its coordinates on the listed levels form
    /// the identity when that is possible.
    pub eigenvectors: Vec<NcSeries>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SemisimpleReport {
    pub truncation: usize,
    pub total_dimension: usize,
    pub eigenspaces: Vec<Eigenspace>,
    pub diagonalizable: bool,
}

/// Checks that the action modulo `I^n` is diagonalizable with the expected
/// eigenvalues, by dense kernel computations.
pub fn check_semisimple(e: &Endomorphism, n: usize) -> Result<SemisimpleReport> {
    if let Some(level) = e.graded_scalar_defect(n)? {
        return Err(Error::NonScalarGradedAction { level });
    }
    let alphabet = e.alphabet().clone();
    let (basis, mat) = e.full_matrix(n)?;
    let mut groups: Vec<(PadicScalar, Vec<usize>)> = Vec::new();
    for k in 0..=alphabet.max_level(n) {
        if !basis.iter().any(|m| alphabet.weight_level(m) == k) {
            continue;
        }
        let lambda = e.level_eigenvalue(k).ok_or(Error::NonScalarGradedAction { level: k })?;
        match groups.iter_mut().find(|(l, _)| l.eq_at_precision(&lambda)) {
            Some((_, levels)) => levels.push(k),
            None => groups.push((lambda, vec![k])),
        }
    }
    let mut eigenspaces = Vec::with_capacity(groups.len());
    for (lambda, levels) in groups {
        let shifted = mat.sub(&Matrix::scalar(e.prime(), basis.len(), &lambda))?;
        let kernel = shifted.kernel()?;
        let rows: Vec<usize> =
            (0..basis.len()).filter(|&i| levels.contains(&alphabet.weight_level(&basis[i]))).collect();
        let all_cols: Vec<usize> = (0..kernel.cols()).collect();
        let normalized = if rows.len() == kernel.cols() {
            kernel.submatrix(&rows, &all_cols).inverse().and_then(|inv| kernel.mul(&inv)).unwrap_or(kernel.clone())
        } else {
            kernel.clone()
        };
        let eigenvectors = (0..normalized.cols())
            .map(|j| {
                let terms = basis.iter().cloned().zip(normalized.column(j));
                NcSeries::from_terms(alphabet.clone(), e.prime(), n, terms)
            })
            .collect::<Result<Vec<_>>>()?;
        eigenspaces.push(Eigenspace {
            eigenvalue: lambda,
            levels,
            multiplicity: rows.len(),
            dimension: kernel.cols(),
            eigenvectors,
        });
    }
    let total: usize = eigenspaces.iter().map(|s| s.dimension).sum();
    Ok(SemisimpleReport {
        truncation: n,
        total_dimension: basis.len(),
        diagonalizable: total == basis.len(),
        eigenspaces,
    })
}

/// Lifts of every monomial class, with a convergence report per lift.
#[derive(Clone, Debug, Serialize)]
pub struct DenseBasis {
    pub r: GaussParams,
    pub r_alpha: String,
    pub lifts: Vec<EigenLift>,
    pub reports: Vec<FiltrationReport>,
    /// Each lift agrees with its seed on the seed's level.
    pub unitriangular: bool,
    /// Rank of the lift matrix equals the dimension.
    pub full_rank: bool,
    pub all_consistent: bool,
}

impl DenseBasis {
    pub fn spans(&self) -> bool {
        self.unitriangular && self.full_rank
    }
}

pub fn dense_eigenbasis(e: &Endomorphism, n: usize, r: &GaussParams) -> Result<DenseBasis> {
    let threshold = r_alpha(e)?;
    if r.r() <= threshold {
        return Err(Error::HypothesisUnmet(format!("radius exponent {} must exceed r_alpha = {threshold}", r.r())));
    }
    let alphabet = e.alphabet().clone();
    let basis = alphabet.monomials(n);
    let mut lifts = Vec::with_capacity(basis.len());
    for m in &basis {
        let seed = NcSeries::from_terms(alphabet.clone(), e.prime(), n, [(m.clone(), e.base().int_like(1))])?;
        lifts.push(lift_eigenvector(e, &seed, alphabet.weight_level(m), n)?);
    }
    let unitriangular = lifts.iter().zip(&basis).all(|(l, m)| {
        l.lift.level_part(l.level).eq_at_precision(&l.seed) && l.seed.coeff(m).is_unit()
    });
    let columns: Vec<Vec<PadicScalar>> =
        lifts.iter().map(|l| basis.iter().map(|m| l.lift.coeff(m)).collect()).collect();
    let full_rank = Matrix::from_columns(e.prime(), basis.len(), &columns).rank()? == basis.len();
    let reports: Vec<FiltrationReport> = lifts.iter().map(|l| convergence_report(&l.lift, r)).collect();
    let all_consistent = reports.iter().all(|rep| rep.verdict == Verdict::ConsistentWithMembership);
    Ok(DenseBasis { r: *r, r_alpha: threshold.to_string(), lifts, reports, unitriangular, full_rank, all_consistent })
}

/// Integral period of the extension of `gr^(-i)` by `W^(-i-1)/W^(-m)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PeriodRecord {
    pub i: usize,
    pub m: usize,
    /// Least `b >= 0` with `l^b` times the equivariant splitting integral.
    pub b: u64,
    pub v_bound: u64,
    pub seeds: usize,
}

/// Truncation needed so that every monomial of level `< m` is represented.
pub fn truncation_for_levels(e: &Endomorphism, m: usize) -> usize {
    if e.alphabet().pure_weight() == Some(2) {
        m.saturating_sub(1) / 2 + 1
    } else {
        m.max(1)
    }
}

pub fn integral_period(e: &Endomorphism, i: usize, m: usize) -> Result<PeriodRecord> {
    if m <= i {
        return Err(Error::InvalidParameter(format!("need m > i, got i = {i}, m = {m}")));
    }
    let cap = v_bound(i, m, e.base())?;
    let t = truncation_for_levels(e, m);
    if t > e.truncation() {
        return Err(Error::TruncationExceeded { requested: t, truncation: e.truncation() });
    }
    let alphabet = e.alphabet().clone();
    let seeds = e.level_basis(i, t);
    let mut b = 0u64;
    for s in &seeds {
        let seed = NcSeries::from_terms(alphabet.clone(), e.prime(), t, [(s.clone(), e.base().int_like(1))])?;
        let (lift, _) = lift_within(e, &seed, i, m)?;
        if let Valuation::Finite(v) = lift.min_valuation_below(t) {
            b = b.max((-v).max(0) as u64);
        }
    }
    if b > cap {
        return Err(Error::CapViolation { degree: m, observed: b as i64, cap: cap as i64 });
    }
    Ok(PeriodRecord { i, m, b, v_bound: cap, seeds: seeds.len() })
}

/// Seed series `T^I` modulo `I^n` with unit coefficient.
pub fn monomial_seed(e: &Endomorphism, m: &Monomial, n: usize) -> Result<NcSeries> {
    NcSeries::from_terms(e.alphabet().clone(), e.prime(), n, [(m.clone(), e.base().int_like(1))])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncseries::{Alphabet, GroupWord};
    use std::sync::Arc;

    const PREC: i64 = 60;

    fn unit(q: i64, p: u64) -> PadicScalar {
        PadicScalar::from_int(q, p, PREC)
    }

    #[test]
    fn order_examples() {
        assert_eq!(unit_order(&unit(2, 5)).unwrap(), 4);
        assert_eq!(unit_order(&unit(4, 3)).unwrap(), 1);
        assert_eq!(unit_order(&unit(3, 2)).unwrap(), 2);
        assert_eq!(unit_order(&unit(5, 2)).unwrap(), 1);
        assert!(unit_order(&unit(6, 3)).is_err());
    }

    #[test]
    fn vl_qpow_examples() {
        assert_eq!(vl_qpow(&unit(4, 3), 3).unwrap(), 2);
        assert_eq!(vl_qpow(&unit(2, 5), 3).unwrap(), 0);
        assert_eq!(vl_qpow(&unit(3, 2), 1).unwrap(), 1);
    }

    #[test]
    fn v_bound_examples() {
        assert_eq!(v_bound(3, 4, &unit(4, 3)).unwrap(), 0);
        assert_eq!(v_bound(0, 4, &unit(4, 3)).unwrap(), 4);
        assert_eq!(v_bound(1, 4, &unit(6, 5)).unwrap(), 2);
        assert!(v_bound(4, 4, &unit(4, 3)).is_err());
    }

    #[test]
    fn c_bound_examples() {
        assert_eq!(c_bound(&unit(4, 3), 1).unwrap(), Rational::new(3, 2));
        assert_eq!(c_bound(&unit(2, 5), 1).unwrap(), Rational::new(5, 16));
    }

    fn line(rank: usize) -> Arc<Alphabet> {
        Arc::new(Alphabet::punctured_line(rank).unwrap())
    }

    fn cyclotomic(rank: usize, q: i64, p: u64, n: usize) -> Endomorphism {
        Endomorphism::sigma_cyclotomic(line(rank), &unit(q, p), n).unwrap()
    }

    fn log_one_plus_t(n: usize) -> NcSeries {
        let a = line(1);
        let g = NcSeries::one(a.clone(), 3, n, PREC).checked_add(&NcSeries::variable(a, 3, n, 0, PREC)).unwrap();
        g.log_grouplike().unwrap()
    }

    #[test]
    fn lift_of_t_is_log() {
        let e = cyclotomic(1, 4, 3, 6);
        let seed = monomial_seed(&e, &Monomial::new(&[0]), 6).unwrap();
        let lift = lift_eigenvector(&e, &seed, 2, 6).unwrap();
        assert!(lift.lift.eq_at_precision(&log_one_plus_t(6)));
        for (n, v) in &lift.denominator_profile {
            if *n >= 2 {
                let expected = -((*n as f64 - 1.0).log(3.0).floor() as i64);
                assert_eq!(*v, Some(expected), "n = {n}");
            }
        }
        let image = e.apply(&lift.lift).unwrap();
        assert!(image.eq_at_precision(&lift.lift.scalar_mul(&lift.eigenvalue).unwrap()));
    }

    #[test]
    fn top_level_seed_is_its_own_lift() {
        let e = cyclotomic(2, 4, 3, 4);
        let seed = monomial_seed(&e, &Monomial::new(&[0, 1, 1]), 4).unwrap();
        let lift = lift_eigenvector(&e, &seed, 6, 4).unwrap();
        assert!(lift.lift.eq_at_precision(&seed));
        assert!(lift.denominator_profile.iter().all(|(_, v)| v.map_or(true, |v| v >= 0)));
    }

    #[test]
    fn rank_two_lift_respects_caps() {
        let e = cyclotomic(2, 4, 3, 6);
        let seed = monomial_seed(&e, &Monomial::new(&[0, 1]), 6).unwrap();
        let lift = lift_eigenvector(&e, &seed, 4, 6).unwrap();
        let image = e.apply(&lift.lift).unwrap();
        assert!(image.eq_at_precision(&lift.lift.scalar_mul(&unit(16, 3)).unwrap()));
        let v6 = lift.denominator_profile[5].1.unwrap();
        assert!(-v6 <= v_bound(4, 12, &unit(4, 3)).unwrap() as i64);
    }

    #[test]
    fn collision_and_separation() {
        let id = Endomorphism::identity(line(1), 3, 3, PREC).unwrap();
        let seed = monomial_seed(&id, &Monomial::new(&[0]), 3).unwrap();
        assert!(matches!(lift_eigenvector(&id, &seed, 2, 3), Err(Error::EigenvalueCollision { .. })));
        let e = cyclotomic(1, 2, 3, 3);
        let seed = monomial_seed(&e, &Monomial::new(&[0]), 3).unwrap();
        assert!(matches!(lift_eigenvector(&e, &seed, 2, 3), Err(Error::HypothesisUnmet(_))));
    }

    #[test]
    fn semisimple_rank_one() {
        let e = cyclotomic(1, 4, 3, 4);
        let report = check_semisimple(&e, 4).unwrap();
        assert!(report.diagonalizable);
        assert_eq!(report.eigenspaces.len(), 4);
        let log = log_one_plus_t(4);
        let mut power = NcSeries::one(line(1), 3, 4, PREC);
        for (k, space) in report.eigenspaces.iter().enumerate() {
            assert_eq!(space.dimension, 1);
            assert!(space.eigenvalue.eq_at_precision(&unit(4, 3).pow(k as u64)));
            assert!(space.eigenvectors[0].eq_at_precision(&power), "log^{k}");
            power = power.checked_mul(&log).unwrap();
        }
    }

    #[test]
    fn semisimple_identity() {
        let id = Endomorphism::identity(line(2), 3, 3, PREC).unwrap();
        let report = check_semisimple(&id, 3).unwrap();
        assert_eq!(report.eigenspaces.len(), 1);
        assert_eq!(report.eigenspaces[0].dimension, 7);
        assert!(report.diagonalizable);
    }

    #[test]
    fn semisimple_ihara_rank_two() {
        let a = line(2);
        let f1 = GroupWord::from_ints(a.clone(), 3, &[(1, 1)], PREC).unwrap();
        let e = Endomorphism::sigma_ihara(a.clone(), &unit(4, 3), &[f1, GroupWord::identity(a)], 4).unwrap();
        let report = check_semisimple(&e, 4).unwrap();
        assert!(report.diagonalizable);
        let dims: Vec<usize> = report.eigenspaces.iter().map(|s| s.dimension).collect();
        assert_eq!(dims, vec![1, 2, 4, 8]);
        assert!(report.eigenspaces.iter().all(|s| s.dimension == s.multiplicity));
    }

    #[test]
    fn dense_basis() {
        let e = cyclotomic(1, 4, 3, 6);
        let basis = dense_eigenbasis(&e, 6, &GaussParams::from_ratio(2, 1).unwrap()).unwrap();
        assert!(basis.spans() && basis.all_consistent);
        assert!(dense_eigenbasis(&e, 6, &GaussParams::from_ratio(3, 2).unwrap()).is_err());
        let one = dense_eigenbasis(&e, 1, &GaussParams::from_ratio(2, 1).unwrap()).unwrap();
        assert_eq!(one.lifts.len(), 1);
        assert!(one.lifts[0].eigenvalue.eq_at_precision(&unit(1, 3)));
    }

    #[test]
    fn periods() {
        let e = cyclotomic(1, 4, 3, 6);
        assert_eq!(integral_period(&e, 2, 3).unwrap().b, 0);
        let rec = integral_period(&e, 2, 8).unwrap();
        assert_eq!(rec.b, 1);
        assert!(rec.b <= rec.v_bound);
    }
}
