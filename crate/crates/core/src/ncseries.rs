//! Truncated noncommutative power series: the model of `Z_l[[F]]/I^n` and
//! `Q_l[[F]]/I^n` for a free pro-l group `F`, via `gamma_i -> 1 + T_i`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padics::{PadicScalar, Valuation, DEFAULT_PRECISION};

/// Ordered generator labels with weights in `{1, 2}`.
///
/// Weight 1 letters stand for genus generators, weight 2 letters for loops
/// around punctures.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AlphabetJson", into = "AlphabetJson")]
pub struct Alphabet {
    names: Vec<String>,
    weights: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
struct AlphabetJson {
    names: Vec<String>,
    weights: Vec<u8>,
}

impl TryFrom<AlphabetJson> for Alphabet {
    type Error = Error;
    fn try_from(json: AlphabetJson) -> Result<Self> {
        Alphabet::new(json.names, json.weights)
    }
}

impl From<Alphabet> for AlphabetJson {
    fn from(a: Alphabet) -> Self {
        AlphabetJson { names: a.names, weights: a.weights }
    }
}

impl Alphabet {
    pub fn new(names: Vec<String>, weights: Vec<u8>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidAlphabet("empty alphabet".into()));
        }
        if names.len() != weights.len() {
            return Err(Error::InvalidAlphabet("one weight per generator".into()));
        }
        if names.len() > u16::MAX as usize {
            return Err(Error::InvalidAlphabet("too many generators".into()));
        }
        if let Some(w) = weights.iter().find(|w| !matches!(w, 1 | 2)) {
            return Err(Error::InvalidAlphabet(format!("weight {w} not in {{1, 2}}")));
        }
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(Error::InvalidAlphabet(format!("duplicate label {a}")));
            }
        }
        Ok(Alphabet { names, weights })
    }

    /// `rank` generators `g1, g2, ...` all of the given weight.
    pub fn uniform(rank: usize, weight: u8) -> Result<Self> {
        Self::new((1..=rank).map(|i| format!("g{i}")).collect(), vec![weight; rank])
    }

    /// Punctured-line alphabet: every generator has weight 2.
    pub fn punctured_line(rank: usize) -> Result<Self> {
        Self::uniform(rank, 2)
    }

    pub fn with_weights(weights: &[u8]) -> Result<Self> {
        Self::new((1..=weights.len()).map(|i| format!("g{i}")).collect(), weights.to_vec())
    }

    pub fn rank(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn weights(&self) -> &[u8] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> u8 {
        self.weights[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Common weight if every generator has the same weight.
    pub fn pure_weight(&self) -> Option<u8> {
        let w = self.weights[0];
        self.weights.iter().all(|&x| x == w).then_some(w)
    }

    /// Step between weight levels carrying nonzero graded pieces.
    pub fn level_stride(&self) -> usize {
        if self.pure_weight() == Some(2) {
            2
        } else {
            1
        }
    }

    /// Sum of generator weights along the word.
    pub fn weight_level(&self, m: &Monomial) -> usize {
        m.letters().iter().map(|&i| self.weights[i as usize] as usize).sum()
    }

    /// All monomials of degree `< max_degree`, in length-then-lex order.
    pub fn monomials(&self, max_degree: usize) -> Vec<Monomial> {
        let mut out = Vec::new();
        if max_degree == 0 {
            return out;
        }
        let mut layer = vec![Monomial::empty()];
        for _ in 0..max_degree {
            let mut next = Vec::with_capacity(layer.len() * self.rank());
            for m in &layer {
                for i in 0..self.rank() {
                    next.push(m.appended(i));
                }
            }
            out.append(&mut layer);
            layer = next;
        }
        out
    }

    /// Largest weight level reachable by monomials of degree `< truncation`.
    pub fn max_level(&self, truncation: usize) -> usize {
        let wmax = *self.weights.iter().max().unwrap() as usize;
        truncation.saturating_sub(1) * wmax
    }
}

/// A word in the generator indices; `T^I` in series notation.
///
/// Ordered by length first, then lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Monomial(Vec<u16>);

impl Monomial {
    pub fn empty() -> Self {
        Monomial(Vec::new())
    }

    pub fn new(letters: &[usize]) -> Self {
        Monomial(letters.iter().map(|&i| i as u16).collect())
    }

    pub fn letters(&self) -> &[u16] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Monomial) -> Monomial {
        let mut v = Vec::with_capacity(self.0.len() + other.0.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Monomial(v)
    }

    pub fn appended(&self, i: usize) -> Monomial {
        let mut v = self.0.clone();
        v.push(i as u16);
        Monomial(v)
    }

    pub fn sorted(&self) -> Monomial {
        let mut v = self.0.clone();
        v.sort_unstable();
        Monomial(v)
    }

    fn split_last(&self) -> Option<(Monomial, u16)> {
        self.0.split_last().map(|(&a, rest)| (Monomial(rest.to_vec()), a))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.0.iter().map(|i| format!("T{}", i + 1)).collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// Truncated series `sum a_I T^I` with `|I| < truncation`.
///
/// Only nonzero coefficients are stored; a coefficient that cancels at its
/// precision is dropped.
#[derive(Clone, Debug)]
pub struct NcSeries {
    alphabet: Arc<Alphabet>,
    prime: u64,
    truncation: usize,
    coeffs: BTreeMap<Monomial, PadicScalar>,
}

impl NcSeries {
    pub fn zero(alphabet: Arc<Alphabet>, prime: u64, truncation: usize) -> Self {
        NcSeries { alphabet, prime, truncation, coeffs: BTreeMap::new() }
    }

    pub fn constant(alphabet: Arc<Alphabet>, truncation: usize, c: PadicScalar) -> Self {
        let prime = c.prime();
        Self::from_terms(alphabet, prime, truncation, [(Monomial::empty(), c)]).expect("same prime")
    }

    pub fn one(alphabet: Arc<Alphabet>, prime: u64, truncation: usize, precision: i64) -> Self {
        Self::constant(alphabet, truncation, PadicScalar::one(prime, precision))
    }

    /// The variable `T_i = gamma_i - 1`.
    pub fn variable(alphabet: Arc<Alphabet>, prime: u64, truncation: usize, i: usize, precision: i64) -> Self {
        Self::from_terms(
            alphabet,
            prime,
            truncation,
            [(Monomial::new(&[i]), PadicScalar::one(prime, precision))],
        )
        .expect("same prime")
    }

    /// Sums the given terms; monomials of degree `>= truncation` are dropped.
    pub fn from_terms(
        alphabet: Arc<Alphabet>,
        prime: u64,
        truncation: usize,
        terms: impl IntoIterator<Item = (Monomial, PadicScalar)>,
    ) -> Result<Self> {
        let mut coeffs: BTreeMap<Monomial, PadicScalar> = BTreeMap::new();
        for (m, c) in terms {
            if c.prime() != prime {
                return Err(Error::PrimeMismatch(prime, c.prime()));
            }
            if let Some(&bad) = m.letters().iter().find(|&&i| i as usize >= alphabet.rank()) {
                return Err(Error::Malformed(format!("letter {bad} outside alphabet")));
            }
            if m.degree() >= truncation {
                continue;
            }
            accumulate(&mut coeffs, m, c);
        }
        prune(&mut coeffs);
        Ok(NcSeries { alphabet, prime, truncation, coeffs })
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn coeff(&self, m: &Monomial) -> PadicScalar {
        self.coeffs.get(m).cloned().unwrap_or_else(|| PadicScalar::zero(self.prime))
    }

    /// Nonzero terms in length-then-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &PadicScalar)> {
        self.coeffs.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// The empty-word coefficient.
    pub fn augmentation(&self) -> PadicScalar {
        self.coeff(&Monomial::empty())
    }

    /// Largest relative precision among the coefficients; the default working
    /// precision for an empty series. Constants introduced by `log`/`exp`
    /// carry this many digits.
    pub fn working_precision(&self) -> i64 {
        self.coeffs.values().filter_map(|c| c.relative_precision()).max().unwrap_or(DEFAULT_PRECISION)
    }

    /// Minimum coefficient valuation over monomials of degree `< degree`.
    pub fn min_valuation_below(&self, degree: usize) -> Valuation {
        self.coeffs
            .iter()
            .filter(|(m, _)| m.degree() < degree)
            .map(|(_, c)| c.valuation())
            .min()
            .unwrap_or(Valuation::Infinity)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.prime != other.prime {
            return Err(Error::PrimeMismatch(self.prime, other.prime));
        }
        if !Arc::ptr_eq(&self.alphabet, &other.alphabet) && *self.alphabet != *other.alphabet {
            return Err(Error::AlphabetMismatch);
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let truncation = self.truncation.min(other.truncation);
        let mut coeffs: BTreeMap<Monomial, PadicScalar> =
            self.coeffs.range(..min_monomial_of_degree(truncation)).map(|(m, c)| (m.clone(), c.clone())).collect();
        for (m, c) in other.coeffs.range(..min_monomial_of_degree(truncation)) {
            accumulate(&mut coeffs, m.clone(), c.clone());
        }
        prune(&mut coeffs);
        Ok(NcSeries { alphabet: self.alphabet.clone(), prime: self.prime, truncation, coeffs })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|c| c.neg())
    }

    pub fn scalar_mul(&self, s: &PadicScalar) -> Result<Self> {
        if s.prime() != self.prime {
            return Err(Error::PrimeMismatch(self.prime, s.prime()));
        }
        Ok(self.map_coeffs(|c| c * s))
    }

    fn map_coeffs(&self, f: impl Fn(&PadicScalar) -> PadicScalar) -> Self {
        let mut coeffs: BTreeMap<Monomial, PadicScalar> =
            self.coeffs.iter().map(|(m, c)| (m.clone(), f(c))).collect();
        prune(&mut coeffs);
        NcSeries { alphabet: self.alphabet.clone(), prime: self.prime, truncation: self.truncation, coeffs }
    }

    /// Noncommutative product, truncated at the smaller truncation.
    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let n = self.truncation.min(other.truncation);
        let mut coeffs = BTreeMap::new();
        for (wa, ca) in &self.coeffs {
            if wa.degree() >= n {
                break;
            }
            for (wb, cb) in &other.coeffs {
                if wa.degree() + wb.degree() >= n {
                    break;
                }
                accumulate(&mut coeffs, wa.concat(wb), ca * cb);
            }
        }
        prune(&mut coeffs);
        Ok(NcSeries { alphabet: self.alphabet.clone(), prime: self.prime, truncation: n, coeffs })
    }

    pub fn pow(&self, k: u32) -> Result<Self> {
        let mut acc = Self::one(self.alphabet.clone(), self.prime, self.truncation, self.working_precision());
        for _ in 0..k {
            acc = acc.checked_mul(self)?;
        }
        Ok(acc)
    }

    /// Reduction modulo `I^n` for `n <= truncation`.
    pub fn truncate(&self, n: usize) -> Result<Self> {
        if n > self.truncation {
            return Err(Error::TruncationExceeded { requested: n, truncation: self.truncation });
        }
        let coeffs = self.coeffs.range(..min_monomial_of_degree(n)).map(|(m, c)| (m.clone(), c.clone())).collect();
        Ok(NcSeries { alphabet: self.alphabet.clone(), prime: self.prime, truncation: n, coeffs })
    }

    /// Part supported on monomials of weight level exactly `level`.
    pub fn level_part(&self, level: usize) -> Self {
        self.filter(|m| self.alphabet.weight_level(m) == level)
    }

    pub fn filter(&self, keep: impl Fn(&Monomial) -> bool) -> Self {
        let coeffs = self.coeffs.iter().filter(|(m, _)| keep(m)).map(|(m, c)| (m.clone(), c.clone())).collect();
        NcSeries { alphabet: self.alphabet.clone(), prime: self.prime, truncation: self.truncation, coeffs }
    }

    /// Coefficientwise equality at the precision of each coefficient.
    pub fn eq_at_precision(&self, other: &Self) -> bool {
        self.checked_sub(other).map(|d| d.is_zero()).unwrap_or(false)
            && self.truncation == other.truncation
    }

    fn constant_with(&self, num: i64, den: i64, relative_precision: i64) -> Result<PadicScalar> {
        let v = crate::padics::val_int(&num.into(), self.prime)? as i64
            - crate::padics::val_int(&den.into(), self.prime)? as i64;
        PadicScalar::from_ratio(num, den, self.prime, v + relative_precision)
    }

    /// `log g = sum_{j<n} (-1)^(j+1) (g - 1)^j / j` for `g` with augmentation 1.
    pub fn log_grouplike(&self) -> Result<Self> {
        let aug = self.augmentation();
        let one = aug.int_like(1);
        if !aug.eq_at_precision(&one) {
            return Err(Error::Augmentation { expected: 1, found: aug.to_string() });
        }
        let w = self.working_precision();
        let x = self.filter(|m| !m.is_empty());
        let mut out = Self::zero(self.alphabet.clone(), self.prime, self.truncation);
        let mut power = x.clone();
        for j in 1..self.truncation.max(1) as i64 {
            let sign = if j % 2 == 1 { 1 } else { -1 };
            out = out.checked_add(&power.scalar_mul(&self.constant_with(sign, j, w)?)?)?;
            power = power.checked_mul(&x)?;
            if power.is_zero() {
                break;
            }
        }
        Ok(out)
    }

    /// `exp x = sum_{j<n} x^j / j!` for `x` with augmentation 0.
    pub fn exp_augzero(&self) -> Result<Self> {
        let aug = self.augmentation();
        if !aug.is_zero() {
            return Err(Error::Augmentation { expected: 0, found: aug.to_string() });
        }
        let w = self.working_precision();
        let mut out = Self::one(self.alphabet.clone(), self.prime, self.truncation, w);
        let mut power = self.clone();
        let mut factorial: i64 = 1;
        for j in 1..self.truncation.max(1) as i64 {
            factorial *= j;
            out = out.checked_add(&power.scalar_mul(&self.constant_with(1, factorial, w)?)?)?;
            power = power.checked_mul(self)?;
            if power.is_zero() {
                break;
            }
        }
        Ok(out)
    }

    /// Image in the commutative quotient: letters of each word are sorted.
    pub fn abelianize(&self) -> CommSeries {
        let mut coeffs = BTreeMap::new();
        for (m, c) in &self.coeffs {
            accumulate(&mut coeffs, m.sorted(), c.clone());
        }
        prune(&mut coeffs);
        CommSeries { alphabet: self.alphabet.clone(), prime: self.prime, truncation: self.truncation, coeffs }
    }

    /// Coordinates of the class of `g - 1` in `I/I^2`, i.e. the image of `g`
    /// in `H_1`.
    pub fn h1_class(&self) -> Vec<PadicScalar> {
        (0..self.alphabet.rank()).map(|i| self.coeff(&Monomial::new(&[i]))).collect()
    }

    /// Checks `Delta(g) = g (x) g` degreewise: for words `I, J` with
    /// `|I| + |J| < n`, `a_I a_J` must equal the sum of `a_K` over the
    /// infiltration product `I ^ J` (shuffles where equal letters may also
    /// merge), the dual of `Delta(T_i) = T_i (x) 1 + 1 (x) T_i + T_i (x) T_i`.
    /// Returns the first failing pair.
    pub fn grouplike_defect(&self) -> Option<(Monomial, Monomial)> {
        let one = self.augmentation().int_like(1);
        if !self.augmentation().eq_at_precision(&one) {
            return Some((Monomial::empty(), Monomial::empty()));
        }
        let words = self.alphabet.monomials(self.truncation);
        let mut memo = HashMap::new();
        for u in words.iter().filter(|w| !w.is_empty()) {
            for v in words.iter().filter(|w| !w.is_empty()) {
                if u.degree() + v.degree() >= self.truncation {
                    continue;
                }
                let lhs = &self.coeff(u) * &self.coeff(v);
                let mut rhs = PadicScalar::zero(self.prime);
                for (k, count) in infiltration(u, v, &mut memo) {
                    let c = self.coeff(&k);
                    if !c.is_zero() {
                        rhs = &rhs + &(&c * &c.int_like(count));
                    }
                }
                if !lhs.eq_at_precision(&rhs) {
                    return Some((u.clone(), v.clone()));
                }
            }
        }
        None
    }

    pub fn is_grouplike(&self) -> bool {
        self.grouplike_defect().is_none()
    }
}

impl fmt::Display for NcSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0 + O(I^{})", self.truncation);
        }
        for (m, c) in &self.coeffs {
            write!(f, "({c})*{m} + ")?;
        }
        write!(f, "O(I^{})", self.truncation)
    }
}

fn min_monomial_of_degree(d: usize) -> Monomial {
    Monomial(vec![0; d])
}

fn accumulate(coeffs: &mut BTreeMap<Monomial, PadicScalar>, m: Monomial, c: PadicScalar) {
    match coeffs.get_mut(&m) {
        Some(existing) => *existing = &*existing + &c,
        None => {
            coeffs.insert(m, c);
        }
    }
}

fn prune(coeffs: &mut BTreeMap<Monomial, PadicScalar>) {
    coeffs.retain(|_, c| !c.is_zero());
}

/// Infiltration product of two words, as multiplicities.
fn infiltration(
    u: &Monomial,
    v: &Monomial,
    memo: &mut HashMap<(Monomial, Monomial), Vec<(Monomial, u64)>>,
) -> Vec<(Monomial, u64)> {
    if u.is_empty() {
        return vec![(v.clone(), 1)];
    }
    if v.is_empty() {
        return vec![(u.clone(), 1)];
    }
    if let Some(hit) = memo.get(&(u.clone(), v.clone())) {
        return hit.clone();
    }
    let (u0, a) = u.split_last().unwrap();
    let (v0, b) = v.split_last().unwrap();
    let mut acc: BTreeMap<Monomial, u64> = BTreeMap::new();
    for (w, c) in infiltration(u, &v0, memo) {
        *acc.entry(w.appended(b as usize)).or_default() += c;
    }
    for (w, c) in infiltration(&u0, v, memo) {
        *acc.entry(w.appended(a as usize)).or_default() += c;
    }
    if a == b {
        for (w, c) in infiltration(&u0, &v0, memo) {
            *acc.entry(w.appended(a as usize)).or_default() += c;
        }
    }
    let out: Vec<_> = acc.into_iter().collect();
    memo.insert((u.clone(), v.clone()), out.clone());
    out
}

/// Truncated commutative series; monomials are stored with sorted letters.
#[derive(Clone, Debug)]
pub struct CommSeries {
    alphabet: Arc<Alphabet>,
    prime: u64,
    truncation: usize,
    coeffs: BTreeMap<Monomial, PadicScalar>,
}

impl CommSeries {
    pub fn coeff(&self, letters: &[usize]) -> PadicScalar {
        let m = Monomial::new(letters).sorted();
        self.coeffs.get(&m).cloned().unwrap_or_else(|| PadicScalar::zero(self.prime))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &PadicScalar)> {
        self.coeffs.iter()
    }

    pub fn degree_part(&self, d: usize) -> Vec<(Monomial, PadicScalar)> {
        self.coeffs.iter().filter(|(m, _)| m.degree() == d).map(|(m, c)| (m.clone(), c.clone())).collect()
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }
}

/// A word in the free generators with l-adic integer exponents.
#[derive(Clone, Debug)]
pub struct GroupWord {
    alphabet: Arc<Alphabet>,
    letters: Vec<(usize, PadicScalar)>,
}

impl GroupWord {
    pub fn identity(alphabet: Arc<Alphabet>) -> Self {
        GroupWord { alphabet, letters: Vec::new() }
    }

    pub fn new(alphabet: Arc<Alphabet>, letters: Vec<(usize, PadicScalar)>) -> Result<Self> {
        for (i, e) in &letters {
            if *i >= alphabet.rank() {
                return Err(Error::Malformed(format!("generator {i} outside alphabet")));
            }
            if !e.is_integral() {
                return Err(Error::InvalidParameter(format!("exponent {e} is not an l-adic integer")));
            }
        }
        Ok(GroupWord { alphabet, letters })
    }

    /// Word with ordinary integer exponents.
    pub fn from_ints(alphabet: Arc<Alphabet>, prime: u64, letters: &[(usize, i64)], precision: i64) -> Result<Self> {
        let letters = letters.iter().map(|&(i, e)| (i, PadicScalar::from_int(e, prime, precision))).collect();
        Self::new(alphabet, letters)
    }

    pub fn generator(alphabet: Arc<Alphabet>, prime: u64, i: usize, precision: i64) -> Result<Self> {
        Self::from_ints(alphabet, prime, &[(i, 1)], precision)
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn letters(&self) -> &[(usize, PadicScalar)] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn concat(&self, other: &GroupWord) -> Result<GroupWord> {
        if *self.alphabet != *other.alphabet {
            return Err(Error::AlphabetMismatch);
        }
        let mut letters = self.letters.clone();
        letters.extend(other.letters.iter().cloned());
        Ok(GroupWord { alphabet: self.alphabet.clone(), letters })
    }

    pub fn inverse(&self) -> GroupWord {
        let letters = self.letters.iter().rev().map(|(i, e)| (*i, e.neg())).collect();
        GroupWord { alphabet: self.alphabet.clone(), letters }
    }

    /// Every exponent multiplied by `e` (only meaningful for single letters,
    /// where it is the power map).
    pub fn letter_power(&self, e: &PadicScalar) -> GroupWord {
        let letters = self.letters.iter().map(|(i, x)| (*i, x * e)).collect();
        GroupWord { alphabet: self.alphabet.clone(), letters }
    }

    /// `[a, b] = a b a^-1 b^-1`.
    pub fn commutator(a: &GroupWord, b: &GroupWord) -> Result<GroupWord> {
        a.concat(b)?.concat(&a.inverse())?.concat(&b.inverse())
    }

    /// `f w f^-1`.
    pub fn conjugate_by(&self, f: &GroupWord) -> Result<GroupWord> {
        f.concat(self)?.concat(&f.inverse())
    }

    /// The Magnus image modulo `I^truncation`.
    pub fn magnus_embed(&self, truncation: usize) -> Result<NcSeries> {
        let prime = self.letters.first().map(|(_, e)| e.prime());
        let Some(prime) = prime else {
            return Err(Error::InvalidParameter(
                "the identity word carries no prime; use NcSeries::one".into(),
            ));
        };
        let mut acc = NcSeries::one(self.alphabet.clone(), prime, truncation, DEFAULT_PRECISION);
        let mut first = true;
        for (i, e) in &self.letters {
            let letter = binomial_series(&self.alphabet, *i, e, truncation)?;
            acc = if first { letter } else { acc.checked_mul(&letter)? };
            first = false;
        }
        Ok(acc)
    }
}

/// `binom(e, k)` for an l-adic integer `e`, as `e (e-1) ... (e-k+1) / k!`.
pub fn binomial(e: &PadicScalar, k: usize) -> Result<PadicScalar> {
    let mut b = e.int_like(1);
    for j in 0..k {
        let factor = e - &e.int_like(j as i64);
        b = (&b * &factor).checked_div(&e.int_like(j as i64 + 1))?;
    }
    Ok(b)
}

/// `(1 + T_i)^e = sum_k binom(e, k) T_i^k` modulo `I^truncation`.
fn binomial_series(alphabet: &Arc<Alphabet>, i: usize, e: &PadicScalar, truncation: usize) -> Result<NcSeries> {
    let mut terms = Vec::with_capacity(truncation);
    let mut b = e.int_like(1);
    for k in 0..truncation {
        if k > 0 {
            let factor = e - &e.int_like(k as i64 - 1);
            b = (&b * &factor).checked_div(&e.int_like(k as i64))?;
        }
        terms.push((Monomial::new(&vec![i; k]), b.clone()));
    }
    NcSeries::from_terms(alphabet.clone(), e.prime(), truncation, terms)
}

#[derive(Serialize, Deserialize)]
struct SeriesJson {
    alphabet: Alphabet,
    prime: u64,
    truncation: usize,
    coeffs: Vec<(Vec<u16>, PadicScalar)>,
}

impl Serialize for NcSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesJson {
            alphabet: (*self.alphabet).clone(),
            prime: self.prime,
            truncation: self.truncation,
            coeffs: self.coeffs.iter().map(|(m, c)| (m.0.clone(), c.clone())).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for NcSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let json = SeriesJson::deserialize(d)?;
        NcSeries::from_terms(
            Arc::new(json.alphabet),
            json.prime,
            json.truncation,
            json.coeffs.into_iter().map(|(w, c)| (Monomial(w), c)),
        )
        .map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u64 = 3;
    const PREC: i64 = 30;

    fn alpha(rank: usize) -> Arc<Alphabet> {
        Arc::new(Alphabet::punctured_line(rank).unwrap())
    }

    fn int(n: i64) -> PadicScalar {
        PadicScalar::from_int(n, P, PREC)
    }

    fn series(a: &Arc<Alphabet>, n: usize, terms: &[(&[usize], i64)]) -> NcSeries {
        NcSeries::from_terms(a.clone(), P, n, terms.iter().map(|(w, c)| (Monomial::new(w), int(*c)))).unwrap()
    }

    fn word(a: &Arc<Alphabet>, letters: &[(usize, i64)]) -> GroupWord {
        GroupWord::from_ints(a.clone(), P, letters, PREC).unwrap()
    }

    #[test]
    fn monomial_order_is_length_then_lex() {
        let mut v = vec![Monomial::new(&[1, 0]), Monomial::new(&[1]), Monomial::new(&[0, 1]), Monomial::empty()];
        v.sort();
        assert_eq!(v, vec![Monomial::empty(), Monomial::new(&[1]), Monomial::new(&[0, 1]), Monomial::new(&[1, 0])]);
    }

    #[test]
    fn alphabet_validation() {
        assert!(Alphabet::new(vec![], vec![]).is_err());
        assert!(Alphabet::new(vec!["a".into(), "a".into()], vec![1, 1]).is_err());
        assert!(Alphabet::new(vec!["a".into()], vec![3]).is_err());
        let a = Alphabet::new(vec!["a".into(), "c".into()], vec![1, 2]).unwrap();
        assert_eq!(a.weight_level(&Monomial::new(&[0, 1])), 3);
        assert_eq!(a.monomials(3).len(), 1 + 2 + 4);
    }

    #[test]
    fn embed_product_of_generators() {
        let a = alpha(2);
        let s = word(&a, &[(0, 1), (1, 1)]).magnus_embed(3).unwrap();
        let expected = series(&a, 3, &[(&[], 1), (&[0], 1), (&[1], 1), (&[0, 1], 1)]);
        assert!(s.eq_at_precision(&expected));
    }

    #[test]
    fn embed_inverse_is_geometric_series() {
        let a = alpha(1);
        let s = word(&a, &[(0, -1)]).magnus_embed(4).unwrap();
        let expected = series(&a, 4, &[(&[], 1), (&[0], -1), (&[0, 0], 1), (&[0, 0, 0], -1)]);
        assert!(s.eq_at_precision(&expected));
    }

    #[test]
    fn embed_l_adic_power() {
        // e = 1 + 3 = 4: binom(4, 1) = 4, binom(4, 2) = 6
        let a = alpha(1);
        let s = word(&a, &[(0, 4)]).magnus_embed(3).unwrap();
        let expected = series(&a, 3, &[(&[], 1), (&[0], 4), (&[0, 0], 6)]);
        assert!(s.eq_at_precision(&expected));
    }

    #[test]
    fn product_is_noncommutative_and_unital() {
        let a = alpha(2);
        let t1 = series(&a, 3, &[(&[0], 1)]);
        let t2 = series(&a, 3, &[(&[1], 1)]);
        let ab = t1.checked_mul(&t2).unwrap();
        let ba = t2.checked_mul(&t1).unwrap();
        assert!(!ab.eq_at_precision(&ba));
        let one = NcSeries::one(a.clone(), P, 3, PREC);
        assert!(ab.checked_mul(&one).unwrap().eq_at_precision(&ab));
    }

    #[test]
    fn inverse_pair_truncates_to_one() {
        let a = alpha(1);
        let x = series(&a, 3, &[(&[], 1), (&[0], 1)]);
        let y = series(&a, 3, &[(&[], 1), (&[0], -1), (&[0, 0], 1)]);
        let one = NcSeries::one(a.clone(), P, 3, PREC);
        assert!(x.checked_mul(&y).unwrap().eq_at_precision(&one));
    }

    #[test]
    fn mixed_truncation_takes_minimum() {
        let a = alpha(1);
        let x = series(&a, 5, &[(&[0, 0, 0], 1)]);
        let y = series(&a, 3, &[(&[], 1)]);
        let s = x.checked_add(&y).unwrap();
        assert_eq!(s.truncation(), 3);
        assert_eq!(s.num_terms(), 1);
    }

    #[test]
    fn alphabet_mismatch() {
        let x = series(&alpha(1), 3, &[(&[], 1)]);
        let y = series(&alpha(2), 3, &[(&[], 1)]);
        assert_eq!(x.checked_mul(&y).unwrap_err(), Error::AlphabetMismatch);
    }

    #[test]
    fn augmentation_examples() {
        let a = alpha(2);
        assert!(word(&a, &[(0, 3), (1, -2)]).magnus_embed(4).unwrap().augmentation().eq_at_precision(&int(1)));
        assert!(series(&a, 3, &[(&[0], 1), (&[1], 3)]).augmentation().is_zero());
        assert!(series(&a, 3, &[(&[], 5), (&[0], 1)]).augmentation().eq_at_precision(&int(5)));
    }

    #[test]
    fn log_of_one_plus_t() {
        let a = alpha(1);
        let g = series(&a, 4, &[(&[], 1), (&[0], 1)]);
        let log = g.log_grouplike().unwrap();
        let c = |k: usize| log.coeff(&Monomial::new(&vec![0; k]));
        assert!(c(1).eq_at_precision(&int(1)));
        assert!(c(2).eq_at_precision(&PadicScalar::from_ratio(-1, 2, P, PREC).unwrap()));
        assert!(c(3).eq_at_precision(&PadicScalar::from_ratio(1, 3, P, PREC).unwrap()));
        assert!(log.augmentation().is_zero());
        let one = NcSeries::one(a.clone(), P, 4, PREC);
        assert!(one.log_grouplike().unwrap().is_zero());
        assert!(series(&a, 4, &[(&[], 2)]).log_grouplike().is_err());
    }

    #[test]
    fn exp_examples() {
        let a = alpha(2);
        let zero = NcSeries::zero(a.clone(), P, 4);
        assert!(zero.exp_augzero().unwrap().eq_at_precision(&NcSeries::one(a.clone(), P, 4, PREC)));
        let x = series(&a, 3, &[(&[0], 1), (&[1], 1)]);
        let half = PadicScalar::from_ratio(1, 2, P, PREC).unwrap();
        let expected = NcSeries::one(a.clone(), P, 3, PREC)
            .checked_add(&x)
            .unwrap()
            .checked_add(&x.checked_mul(&x).unwrap().scalar_mul(&half).unwrap())
            .unwrap();
        assert!(x.exp_augzero().unwrap().eq_at_precision(&expected));
        assert!(series(&a, 3, &[(&[], 1)]).exp_augzero().is_err());
        let g = series(&alpha(1), 6, &[(&[], 1), (&[0], 1)]);
        assert!(g.log_grouplike().unwrap().exp_augzero().unwrap().eq_at_precision(&g));
    }

    #[test]
    fn abelianization() {
        let a = alpha(2);
        let s = series(&a, 3, &[(&[1, 0], 1)]).abelianize();
        assert!(s.coeff(&[0, 1]).eq_at_precision(&int(1)));
        let comm = GroupWord::commutator(&word(&a, &[(0, 1)]), &word(&a, &[(1, 1)])).unwrap();
        let c = comm.magnus_embed(4).unwrap();
        let one = NcSeries::one(a.clone(), P, 4, PREC);
        let x = c.checked_sub(&one).unwrap();
        assert_eq!(x.min_valuation_below(2), Valuation::Infinity, "commutator - 1 lies in I^2");
        assert!(x.abelianize().degree_part(1).is_empty());
        let g = word(&a, &[(0, 1), (1, 1)]).magnus_embed(2).unwrap();
        assert!(g.h1_class().iter().all(|c| c.eq_at_precision(&int(1))));
    }

    #[test]
    fn grouplike_checks() {
        let a1 = alpha(1);
        assert!(word(&a1, &[(0, 7)]).magnus_embed(6).unwrap().is_grouplike());
        let a = alpha(2);
        let g = word(&a, &[(0, 2), (1, -1), (0, 1)]).magnus_embed(5).unwrap();
        assert!(g.is_grouplike());
        let not = series(&a1, 4, &[(&[], 1), (&[0], 1), (&[0, 0], 1)]);
        assert!(!not.is_grouplike());
    }

    #[test]
    fn json_round_trip() {
        let a = alpha(2);
        let g = word(&a, &[(0, 2), (1, -1)]).magnus_embed(3).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        let back: NcSeries = serde_json::from_str(&json).unwrap();
        assert!(back.eq_at_precision(&g));
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}
