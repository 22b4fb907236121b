//! Matrix representations of free pro-l groups: triviality modulo `l^N`,
//! evaluation of convergent series, unipotence, socle filtrations and the
//! unipotence certification pipeline.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::eigenlift::{lift_eigenvector, monomial_seed, r_alpha, UnitPowers};
use crate::error::{Error, Result};
use crate::filtration::{gauss_norm, GaussParams, MAX_RADIUS_DENOMINATOR};
use crate::galois::Endomorphism;
use crate::linalg::Matrix;
use crate::ncseries::{binomial, Alphabet, GroupWord, Monomial, NcSeries};
use crate::padics::{PadicScalar, Valuation, DEFAULT_PRECISION};
use crate::Rational;

/// Largest dimension accepted by [`socle_filtration`].
pub const MAX_SOCLE_DIMENSION: usize = 12;

/// `gamma_i -> rho(gamma_i)` with images in `GL_d(Z_l)`.
#[derive(Clone, Debug)]
pub struct MatrixRep {
    alphabet: Arc<Alphabet>,
    prime: u64,
    dim: usize,
    images: Vec<Matrix>,
}

impl MatrixRep {
    pub fn new(alphabet: Arc<Alphabet>, images: Vec<Matrix>) -> Result<Self> {
        if images.len() != alphabet.rank() {
            return Err(Error::Dimension(format!("{} images for rank {}", images.len(), alphabet.rank())));
        }
        let first = images.first().ok_or_else(|| Error::Dimension("no images".into()))?;
        let (prime, dim) = (first.prime(), first.rows());
        for (i, m) in images.iter().enumerate() {
            if m.prime() != prime {
                return Err(Error::PrimeMismatch(prime, m.prime()));
            }
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::Dimension(format!("image {} is not {dim}x{dim}", i + 1)));
            }
            if m.entries().any(|x| !x.is_integral()) {
                return Err(Error::InvalidParameter(format!("image {} has non-integral entries", i + 1)));
            }
            if !m.det()?.is_unit() {
                return Err(Error::InvalidParameter(format!("image {} is not invertible over Z_l", i + 1)));
            }
        }
        Ok(MatrixRep { alphabet, prime, dim, images })
    }

    pub fn from_int_images(alphabet: Arc<Alphabet>, prime: u64, images: &[Vec<Vec<i64>>], precision: i64) -> Result<Self> {
        let mats = images
            .iter()
            .map(|rows| Matrix::from_int_rows(prime, rows, precision))
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphabet, mats)
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn images(&self) -> &[Matrix] {
        &self.images
    }

    fn precision(&self) -> i64 {
        self.images.iter().filter_map(|m| m.min_precision()).min().unwrap_or(DEFAULT_PRECISION)
    }

    fn identity(&self) -> Matrix {
        Matrix::identity(self.prime, self.dim, self.precision())
    }

    /// `rho(T_i) = rho(gamma_i) - Id`.
    pub fn t_image(&self, i: usize) -> Matrix {
        self.images[i].sub(&self.identity()).expect("square")
    }

    /// Largest `m` with every image congruent to the identity modulo `l^m`,
    /// capped by the working precision.
    pub fn triviality_level(&self) -> i64 {
        let cap = self.precision();
        (0..self.images.len())
            .map(|i| match self.t_image(i).min_valuation() {
                Valuation::Finite(v) => v.min(cap),
                Valuation::Infinity => cap,
            })
            .min()
            .unwrap_or(cap)
    }

    /// Every image is congruent to the identity modulo `l^n`.
    pub fn is_trivial_mod(&self, n: i64) -> Result<bool> {
        if n < 1 {
            return Err(Error::InvalidParameter(format!("N = {n} must be at least 1")));
        }
        let mut trivial = true;
        for i in 0..self.images.len() {
            for x in self.t_image(i).entries() {
                match (x.valuation(), x.precision()) {
                    (Valuation::Finite(v), _) if v < n => trivial = false,
                    (Valuation::Infinity, Some(f)) if f < n => {
                        return Err(Error::Precision(format!("entry known only modulo {}^{f}", self.prime)))
                    }
                    _ => {}
                }
            }
        }
        Ok(trivial)
    }

    /// `rho(gamma_i)^e`, through the binomial series when the image is
    /// trivial modulo `l`, otherwise through an integer exponent.
    pub fn power(&self, i: usize, e: &PadicScalar) -> Result<Matrix> {
        let t = self.t_image(i);
        let precision = self.precision();
        match t.min_valuation() {
            Valuation::Infinity => Ok(self.identity()),
            Valuation::Finite(m) if m >= 1 => {
                let mut acc = self.identity();
                let mut t_power = self.identity();
                let mut k = 0usize;
                while (k as i64 + 1) * m < precision {
                    k += 1;
                    t_power = t_power.mul(&t)?;
                    if t_power.is_zero() {
                        break;
                    }
                    acc = acc.add(&t_power.scale(&binomial(e, k)?))?;
                }
                Ok(acc)
            }
            Valuation::Finite(_) => {
                let p = e.precision().unwrap_or(precision);
                let n = e
                    .balanced_residue(p)?
                    .to_i64()
                    .ok_or_else(|| Error::InvalidParameter("exponent too large for a non-trivial image".into()))?;
                let base = if n < 0 { self.images[i].inverse()? } else { self.images[i].clone() };
                base.pow(n.unsigned_abs(), precision)
            }
        }
    }

    pub fn evaluate_word(&self, w: &GroupWord) -> Result<Matrix> {
        if **w.alphabet() != *self.alphabet {
            return Err(Error::AlphabetMismatch);
        }
        let mut acc = self.identity();
        for (i, e) in w.letters() {
            acc = acc.mul(&self.power(*i, e)?)?;
        }
        Ok(acc)
    }

    fn monomial_image(&self, m: &Monomial, cache: &mut HashMap<Monomial, Matrix>) -> Result<Matrix> {
        if let Some(x) = cache.get(m) {
            return Ok(x.clone());
        }
        let value = match m.letters().split_last() {
            None => self.identity(),
            Some((&last, prefix)) => {
                let prefix = Monomial::new(&prefix.iter().map(|&i| i as usize).collect::<Vec<_>>());
                self.monomial_image(&prefix, cache)?.mul(&self.t_image(last as usize))?
            }
        };
        cache.insert(m.clone(), value.clone());
        Ok(value)
    }

    /// `sum a_I rho(T^I)` over the stored terms of `a`.
    pub fn evaluate_series(&self, a: &NcSeries, p: &GaussParams) -> Result<SeriesEvaluation> {
        if a.prime() != self.prime {
            return Err(Error::PrimeMismatch(self.prime, a.prime()));
        }
        if **a.alphabet() != *self.alphabet {
            return Err(Error::AlphabetMismatch);
        }
        let m = self.triviality_level();
        if p.r() >= Rational::from_integer(m) {
            return Err(Error::HypothesisUnmet(format!(
                "evaluation at radius exponent {} needs triviality modulo l^m with m > r; here m = {m}",
                p.r()
            )));
        }
        let mut cache = HashMap::new();
        let mut value = Matrix::zeros(self.prime, self.dim, self.dim);
        for (mono, c) in a.terms() {
            value = value.add(&self.monomial_image(mono, &mut cache)?.scale(c))?;
        }
        let gauss = gauss_norm(a, p).exponent;
        let tail_exponent = gauss.map(|g| g + (Rational::from_integer(m) - p.r()) * Rational::from_integer(a.truncation() as i64));
        if let (Some(g), Valuation::Finite(v)) = (gauss, value.min_valuation()) {
            if Rational::from_integer(v) < g {
                return Err(Error::Precision(format!("evaluation exceeds the norm bound: valuation {v} < {g}")));
            }
        }
        Ok(SeriesEvaluation { value, gauss_exponent: gauss, tail_exponent, triviality_level: m })
    }
}

/// Result of evaluating a truncated series; the true value differs from
/// `value` by a matrix of valuation at least `tail_exponent`.
#[derive(Clone, Debug)]
pub struct SeriesEvaluation {
    pub value: Matrix,
    pub gauss_exponent: Option<Rational>,
    pub tail_exponent: Option<Rational>,
    pub triviality_level: i64,
}

impl SeriesEvaluation {
    /// Every entry vanishes up to the tail error.
    pub fn vanishes_within_tail(&self) -> bool {
        match (self.value.min_valuation(), self.tail_exponent) {
            (Valuation::Infinity, _) => true,
            (_, None) => false,
            (Valuation::Finite(v), Some(t)) => Rational::from_integer(v) >= t,
        }
    }

    /// `self.value` equals `other` up to the tail error.
    pub fn agrees_with(&self, other: &Matrix) -> Result<bool> {
        let diff = self.value.sub(other)?;
        Ok(match (diff.min_valuation(), self.tail_exponent) {
            (Valuation::Infinity, _) => true,
            (_, None) => false,
            (Valuation::Finite(v), Some(t)) => Rational::from_integer(v) >= t,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UnipotenceCertificate {
    /// Words of length `nilpotency_index` in the `rho(T_i)` all vanish;
    /// `layer_dims[k]` is the dimension spanned by words of length `k + 1`.
    Nilpotent { nilpotency_index: usize, layer_dims: Vec<usize> },
    /// A word in the `rho(T_i)` with nonzero trace, so the span is not nilpotent.
    TraceWitness { word: Vec<usize>, trace: PadicScalar, layer_dims: Vec<usize> },
}

impl UnipotenceCertificate {
    pub fn is_unipotent(&self) -> bool {
        matches!(self, UnipotenceCertificate::Nilpotent { .. })
    }
}

fn vectorize(m: &Matrix) -> Vec<PadicScalar> {
    m.entries().cloned().collect()
}

/// Unit multiple of `m` (scaling does not change spans).
fn normalize(m: &Matrix) -> Matrix {
    match m.min_valuation() {
        Valuation::Finite(v) if v != 0 => {
            let mut out = m.clone();
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    out.set(i, j, m.get(i, j).shift(-v));
                }
            }
            out
        }
        _ => m.clone(),
    }
}

/// Indices of a maximal independent subset of the given matrices, appended
/// greedily to `existing`.
fn extend_basis(existing: &[Matrix], candidates: &[Matrix]) -> Result<Vec<usize>> {
    let Some(first) = existing.iter().chain(candidates).next() else {
        return Ok(Vec::new());
    };
    let (prime, len) = (first.prime(), first.rows() * first.cols());
    let columns: Vec<Vec<PadicScalar>> = existing.iter().chain(candidates).map(vectorize).collect();
    let red = Matrix::from_columns(prime, len, &columns).reduce_grouped(&[existing.len(), columns.len()])?;
    Ok(red.pivots.iter().filter(|&&c| c >= existing.len()).map(|&c| c - existing.len()).collect())
}

/// Decides unipotence by nilpotency of the algebra spanned by words in
/// `rho(gamma_i) - Id`: the span is nilpotent iff words of length `d`
/// vanish, and otherwise some word in it has nonzero trace.
pub fn is_unipotent(rho: &MatrixRep) -> Result<UnipotenceCertificate> {
    let gens: Vec<Matrix> = (0..rho.alphabet.rank()).map(|i| normalize(&rho.t_image(i))).collect();
    let nonzero: Vec<(Vec<usize>, Matrix)> =
        gens.iter().enumerate().filter(|(_, g)| !g.is_zero()).map(|(i, g)| (vec![i], g.clone())).collect();
    let picked = extend_basis(&[], &nonzero.iter().map(|(_, m)| m.clone()).collect::<Vec<_>>())?;
    let mut layer: Vec<(Vec<usize>, Matrix)> = picked.into_iter().map(|k| nonzero[k].clone()).collect();
    let mut layer_dims = Vec::new();
    let mut all: Vec<(Vec<usize>, Matrix)> = Vec::new();
    let max_layers = rho.dim * rho.dim + 1;
    for depth in 1..=max_layers {
        layer_dims.push(layer.len());
        if layer.is_empty() {
            return Ok(UnipotenceCertificate::Nilpotent { nilpotency_index: depth, layer_dims });
        }
        if let Some((word, m)) = layer.iter().find(|(_, m)| !m.trace().is_zero()) {
            return Ok(UnipotenceCertificate::TraceWitness { word: word.clone(), trace: m.trace(), layer_dims });
        }
        let before = all.len();
        let all_mats: Vec<Matrix> = all.iter().map(|(_, m)| m.clone()).collect();
        let fresh = extend_basis(&all_mats, &layer.iter().map(|(_, m)| m.clone()).collect::<Vec<_>>())?;
        all.extend(fresh.into_iter().map(|k| layer[k].clone()));
        if depth >= rho.dim && all.len() == before {
            break;
        }
        let mut next: Vec<(Vec<usize>, Matrix)> = Vec::new();
        for (i, g) in gens.iter().enumerate() {
            if g.is_zero() {
                continue;
            }
            for (w, x) in &layer {
                let product = g.mul(x)?;
                if !product.is_zero() {
                    let mut word = vec![i];
                    word.extend_from_slice(w);
                    next.push((word, normalize(&product)));
                }
            }
        }
        let picked = extend_basis(&[], &next.iter().map(|(_, m)| m.clone()).collect::<Vec<_>>())?;
        layer = picked.into_iter().map(|k| next[k].clone()).collect();
    }
    Err(Error::Precision("span is not nilpotent yet every basis word has trace zero at this precision".into()))
}

/// Ascending socle chain `0 = V_0 < V_1 < ... < V_t = Q_l^d`.
#[derive(Clone, Debug)]
pub struct SocleFiltration {
    /// Basis of each `V_i` for `i >= 1`, as columns.
    pub steps: Vec<Matrix>,
    pub radical_dimension: usize,
    pub algebra_dimension: usize,
    /// The algebra induced on each `V_i / V_(i-1)` has zero radical.
    pub quotients_semisimple: bool,
}

impl SocleFiltration {
    pub fn dims(&self) -> Vec<usize> {
        self.steps.iter().map(|m| m.cols()).collect()
    }
}

/// Basis of the span of all words in the images (identity included).
fn enveloping_algebra(rho: &MatrixRep) -> Result<Vec<Matrix>> {
    let mut basis = vec![rho.identity()];
    let mut frontier = basis.clone();
    while !frontier.is_empty() {
        let mut candidates = Vec::new();
        for g in &rho.images {
            for x in &frontier {
                candidates.push(normalize(&g.mul(x)?));
            }
        }
        let picked = extend_basis(&basis, &candidates)?;
        frontier = Vec::new();
        for k in picked {
            // re-check against the growing basis to keep it independent
            if extend_basis(&basis, std::slice::from_ref(&candidates[k]))?.len() == 1 {
                basis.push(candidates[k].clone());
                frontier.push(candidates[k].clone());
            }
        }
    }
    Ok(basis)
}

/// Kernel of the trace form `(x, y) -> tr(xy)` on the span of `basis`.
fn trace_radical(basis: &[Matrix]) -> Result<Vec<Matrix>> {
    if basis.is_empty() {
        return Ok(Vec::new());
    }
    let prime = basis[0].prime();
    let k = basis.len();
    let mut gram = Matrix::zeros(prime, k, k);
    for a in 0..k {
        for b in 0..k {
            gram.set(a, b, basis[a].mul(&basis[b])?.trace());
        }
    }
    let kernel = gram.kernel()?;
    let mut out = Vec::with_capacity(kernel.cols());
    for j in 0..kernel.cols() {
        let mut acc = Matrix::zeros(prime, basis[0].rows(), basis[0].cols());
        for (a, c) in kernel.column(j).iter().enumerate() {
            if !c.is_zero() {
                acc = acc.add(&basis[a].scale(c))?;
            }
        }
        out.push(normalize(&acc));
    }
    Ok(out)
}

pub fn socle_filtration(rho: &MatrixRep) -> Result<SocleFiltration> {
    if rho.dim > MAX_SOCLE_DIMENSION {
        return Err(Error::Dimension(format!("socle filtration limited to dimension {MAX_SOCLE_DIMENSION}")));
    }
    let algebra = enveloping_algebra(rho)?;
    let radical = trace_radical(&algebra)?;
    let d = rho.dim;
    let prime = rho.prime;
    // J^i spans, i = 1, 2, ... until zero
    let mut powers: Vec<Vec<Matrix>> = Vec::new();
    let mut current = radical.clone();
    while !current.is_empty() {
        powers.push(current.clone());
        let mut next = Vec::new();
        for j in &radical {
            for x in &current {
                let p = j.mul(x)?;
                if !p.is_zero() {
                    next.push(normalize(&p));
                }
            }
        }
        let picked = extend_basis(&[], &next)?;
        current = picked.into_iter().map(|k| next[k].clone()).collect();
    }
    let mut steps = Vec::new();
    for span in &powers {
        let stacked = span.iter().skip(1).try_fold(span[0].clone(), |acc, m| acc.vstack(m))?;
        steps.push(stacked.kernel()?);
    }
    steps.push(Matrix::identity(prime, d, rho.precision()));
    let mut quotients_semisimple = true;
    let mut previous = Matrix::zeros(prime, d, 0);
    for step in &steps {
        let induced = induced_on_quotient(&algebra, &previous, step)?;
        let mut nonzero: Vec<Matrix> = induced.into_iter().filter(|m| !m.is_zero()).collect();
        let picked = extend_basis(&[], &nonzero)?;
        nonzero = picked.into_iter().map(|k| nonzero[k].clone()).collect();
        if !trace_radical(&nonzero)?.is_empty() {
            quotients_semisimple = false;
        }
        previous = step.clone();
    }
    Ok(SocleFiltration {
        steps,
        radical_dimension: radical.len(),
        algebra_dimension: algebra.len(),
        quotients_semisimple,
    })
}

/// Matrices of the algebra elements acting on `upper / lower`.
fn induced_on_quotient(algebra: &[Matrix], lower: &Matrix, upper: &Matrix) -> Result<Vec<Matrix>> {
    let prime = upper.prime();
    let d = upper.rows();
    let upper_cols: Vec<Vec<PadicScalar>> = (0..upper.cols()).map(|j| upper.column(j)).collect();
    let lower_cols: Vec<Vec<PadicScalar>> = (0..lower.cols()).map(|j| lower.column(j)).collect();
    let all: Vec<Vec<PadicScalar>> = lower_cols.iter().chain(&upper_cols).cloned().collect();
    let red = Matrix::from_columns(prime, d, &all).reduce_grouped(&[lower_cols.len(), all.len()])?;
    let complement: Vec<Vec<PadicScalar>> =
        red.pivots.iter().filter(|&&c| c >= lower_cols.len()).map(|&c| all[c].clone()).collect();
    let k = complement.len();
    let basis_cols: Vec<Vec<PadicScalar>> = lower_cols.iter().chain(&complement).cloned().collect();
    let basis = Matrix::from_columns(prime, d, &basis_cols);
    let mut out = Vec::with_capacity(algebra.len());
    for x in algebra {
        let mut q = Matrix::zeros(prime, k, k);
        for (j, v) in complement.iter().enumerate() {
            let image = x.mul_vec(v)?;
            let coords = basis.solve(&image)?;
            for i in 0..k {
                q.set(i, j, coords[lower_cols.len() + i].clone());
            }
        }
        out.push(q);
    }
    Ok(out)
}

/// The explicit triviality level for punctured lines.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundSpec {
    pub prime: u64,
    pub q: String,
    /// Order of `q` modulo `l` (modulo 4 when `l = 2`).
    pub s: u64,
    pub epsilon: u64,
    /// `v_l(q^s - 1)`.
    pub v_qs: u64,
    /// `(v_l(q^s - 1) + 1/(l - 1) + epsilon) / s`.
    pub bound: String,
    /// Least integer strictly above the bound.
    pub n_min: i64,
}

pub fn bound_n(q: &PadicScalar) -> Result<BoundSpec> {
    if (q - &q.int_like(1)).is_zero() {
        return Err(Error::InvalidParameter("q = 1 has trivial image; v_l(q^s - 1) is undefined".into()));
    }
    let powers = UnitPowers::new(q)?;
    let p = q.prime();
    let epsilon = u64::from(p == 2);
    let bound = bound_formula(p, powers.order(), powers.order_valuation(), epsilon);
    Ok(BoundSpec {
        prime: p,
        q: q.balanced_residue(q.precision().unwrap_or(DEFAULT_PRECISION)).map(|r| r.to_string()).unwrap_or_else(|_| q.to_string()),
        s: powers.order(),
        epsilon,
        v_qs: powers.order_valuation(),
        bound: bound.to_string(),
        n_min: bound.floor().to_integer() + 1,
    })
}

/// `(v + 1/(l-1) + epsilon) / s`.
pub fn bound_formula(prime: u64, s: u64, v: u64, epsilon: u64) -> Rational {
    (Rational::from_integer(v as i64) + Rational::new(1, prime as i64 - 1) + Rational::from_integer(epsilon as i64))
        / Rational::from_integer(s as i64)
}

/// Simplest radius exponent strictly between `low` and `high`.
pub fn radius_between(low: Rational, high: Rational) -> Result<GaussParams> {
    for den in 1..=MAX_RADIUS_DENOMINATOR {
        let num = (low * Rational::from_integer(den)).floor().to_integer() + 1;
        let r = Rational::new(num, den);
        if r > low && r < high && r > Rational::from_integer(0) {
            return GaussParams::new(r);
        }
    }
    Err(Error::InvalidParameter(format!("no radius exponent with small denominator between {low} and {high}")))
}

/// Where the graded eigenvalues leave the spectrum of conjugation by the
/// target matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelCutoff {
    /// Upper bound for `|mu|` over eigenvalues `mu` of `X -> M X M^-1` in
    /// any complex embedding: `||M|| ||M^-1||` in the max-row-sum norm.
    pub spectral_bound: String,
    /// First level from which `|base|^(k/stride)` exceeds the bound.
    pub archimedean_level: usize,
    /// Levels below that where the level eigenvalue is an eigenvalue of the
    /// conjugation action.
    pub singular_levels: Vec<usize>,
    /// Least `i` such that no level `>= i` meets the spectrum.
    pub i0: usize,
}

fn rational_matrix(m: &Matrix) -> Result<Vec<Vec<BigRational>>> {
    let precision = m.min_precision().unwrap_or(DEFAULT_PRECISION);
    (0..m.rows())
        .map(|i| {
            m.row(i)
                .iter()
                .map(|x| {
                    if x.valuation().finite().map_or(false, |v| v < 0) {
                        return Err(Error::InvalidParameter("target matrix must have integer entries".into()));
                    }
                    Ok(BigRational::from_integer(x.balanced_residue(precision)?))
                })
                .collect()
        })
        .collect()
}

fn rational_inverse(m: &[Vec<BigRational>]) -> Result<Vec<Vec<BigRational>>> {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            r
        })
        .collect();
    for c in 0..n {
        let pivot = (c..n).find(|&i| !a[i][c].is_zero()).ok_or(Error::DivisionByZero)?;
        a.swap(c, pivot);
        let inv = a[c][c].recip();
        for x in a[c].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..n {
            if i != c && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                let pivot_row = a[c].clone();
                for (x, y) in a[i].iter_mut().zip(&pivot_row) {
                    *x = &*x - &(&f * y);
                }
            }
        }
    }
    Ok(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

fn max_row_sum(m: &[Vec<BigRational>]) -> BigRational {
    m.iter().map(|r| r.iter().map(|x| x.abs()).fold(BigRational::zero(), |a, b| a + b)).max().unwrap_or_else(BigRational::zero)
}

/// Matrix of `X -> M X M^-1` on `d x d` matrices in row-major coordinates.
pub fn conjugation_matrix(target: &Matrix) -> Result<Matrix> {
    let d = target.rows();
    let inv = target.inverse()?;
    let mut out = Matrix::zeros(target.prime(), d * d, d * d);
    // (M E_ab M^-1)_ij = M_ia (M^-1)_bj
    for a in 0..d {
        for b in 0..d {
            for i in 0..d {
                for j in 0..d {
                    out.set(i * d + j, a * d + b, target.get(i, a) * inv.get(b, j));
                }
            }
        }
    }
    Ok(out)
}

pub fn level_cutoff(e: &Endomorphism, target: &Matrix, max_level: usize) -> Result<LevelCutoff> {
    let precision = e.base().precision().unwrap_or(DEFAULT_PRECISION);
    let base = e.base().balanced_residue(precision)?;
    if base.abs() <= BigInt::one() {
        return Err(Error::HypothesisUnmet("the action base must have absolute value above 1".into()));
    }
    let m = rational_matrix(target)?;
    let bound = max_row_sum(&m) * max_row_sum(&rational_inverse(&m)?);
    let stride = e.stride();
    let mut level = 0usize;
    let mut power = BigRational::one();
    let abs_base = BigRational::from_integer(base.abs());
    while power <= bound {
        level += stride;
        power = &power * &abs_base;
        if level > 10_000 {
            return Err(Error::InvalidParameter("level cutoff search did not terminate".into()));
        }
    }
    let conj = conjugation_matrix(target)?;
    let mut singular_levels = Vec::new();
    for k in (0..level).step_by(stride) {
        let lambda = e.level_eigenvalue(k).expect("multiple of the stride");
        let shifted = conj.sub(&Matrix::scalar(target.prime(), conj.rows(), &lambda))?;
        if shifted.rank()? < conj.rows() {
            singular_levels.push(k);
        }
    }
    let i0 = singular_levels.last().map_or(0, |&k| k + 1);
    let _ = max_level;
    Ok(LevelCutoff { spectral_bound: bound.to_string(), archimedean_level: level, singular_levels, i0 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineVerdict {
    Unipotent,
    /// Some lifted eigenvector above the cutoff does not evaluate to zero.
    NotUnipotent,
    /// The supplied target action does not intertwine the representation.
    EquivarianceFailure,
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    pub verdict: PipelineVerdict,
    pub trivial_mod: i64,
    pub r_alpha: String,
    pub r: String,
    /// Per generator: `rho(sigma(gamma_i)) = M rho(gamma_i) M^-1`.
    pub equivariance: Vec<bool>,
    pub cutoff: Option<LevelCutoff>,
    pub truncation: usize,
    pub lifts_checked: usize,
    pub lifts_vanishing: usize,
    /// Words of length `i0` in the `rho(T_i)` all vanish.
    pub ideal_power_killed: Option<bool>,
    pub certificate: UnipotenceCertificate,
    /// The pipeline verdict matches the direct unipotence decision; absent
    /// when equivariance fails and there is no verdict to compare.
    pub agrees: Option<bool>,
}

/// Runs the unipotence argument on explicit data: triviality modulo `l^N`,
/// equivariance against the target action `M`, the level cutoff, and the
/// vanishing of lifted eigenvectors above it.
pub fn certify_pipeline(rho: &MatrixRep, e: &Endomorphism, target: &Matrix, n: i64) -> Result<PipelineReport> {
    if **e.alphabet() != *rho.alphabet {
        return Err(Error::AlphabetMismatch);
    }
    if target.rows() != rho.dim || target.cols() != rho.dim {
        return Err(Error::Dimension("target action must be d x d".into()));
    }
    if !rho.is_trivial_mod(n)? {
        return Err(Error::HypothesisUnmet(format!("representation is not trivial modulo {}^{n}", rho.prime)));
    }
    let threshold = r_alpha(e)?;
    if Rational::from_integer(n) <= threshold {
        return Err(Error::HypothesisUnmet(format!("N = {n} does not exceed r_alpha = {threshold}")));
    }
    let radius = radius_between(threshold, Rational::from_integer(n))?;
    let certificate = is_unipotent(rho)?;
    let target_inv = target.inverse()?;
    let mut equivariance = Vec::with_capacity(rho.alphabet.rank());
    for i in 0..rho.alphabet.rank() {
        let expected = target.mul(&rho.images[i])?.mul(&target_inv)?;
        let ok = match e.word_images() {
            Some(words) => rho.evaluate_word(&words[i])?.eq_at_precision(&expected),
            None => rho.evaluate_series(&e.images()[i], &radius)?.agrees_with(&expected)?,
        };
        equivariance.push(ok);
    }
    let mut report = PipelineReport {
        verdict: PipelineVerdict::EquivarianceFailure,
        trivial_mod: n,
        r_alpha: threshold.to_string(),
        r: radius.to_string(),
        equivariance: equivariance.clone(),
        cutoff: None,
        truncation: 0,
        lifts_checked: 0,
        lifts_vanishing: 0,
        ideal_power_killed: None,
        agrees: None,
        certificate: certificate.clone(),
    };
    if equivariance.iter().any(|ok| !ok) {
        return Ok(report);
    }
    let cutoff = level_cutoff(e, target, 0)?;
    let i0 = cutoff.i0;
    let wmax = *rho.alphabet.weights().iter().max().unwrap() as usize;
    let truncation = if rho.alphabet.pure_weight() == Some(2) { (i0 + 2 * wmax) / 2 + 1 } else { i0 + 2 * wmax };
    let action = if e.truncation() >= truncation {
        e.clone()
    } else if let Some(words) = e.word_images() {
        Endomorphism::from_words(words.to_vec(), e.base().clone(), truncation, e.label())?
    } else {
        return Err(Error::TruncationExceeded { requested: truncation, truncation: e.truncation() });
    };
    let mut checked = 0;
    let mut vanishing = 0;
    for m in rho.alphabet.monomials(truncation) {
        let level = rho.alphabet.weight_level(&m);
        if level < i0 {
            continue;
        }
        let seed = monomial_seed(&action, &m, truncation)?;
        let lift = lift_eigenvector(&action, &seed, level, truncation)?;
        checked += 1;
        if rho.evaluate_series(&lift.lift, &radius)?.vanishes_within_tail() {
            vanishing += 1;
        }
    }
    let ideal_power_killed = match &certificate {
        UnipotenceCertificate::Nilpotent { nilpotency_index, .. } => Some(*nilpotency_index <= i0.max(1)),
        UnipotenceCertificate::TraceWitness { .. } => Some(false),
    };
    let verdict = if vanishing == checked { PipelineVerdict::Unipotent } else { PipelineVerdict::NotUnipotent };
    report.verdict = verdict;
    report.agrees = Some((verdict == PipelineVerdict::Unipotent) == certificate.is_unipotent());
    report.cutoff = Some(cutoff);
    report.truncation = truncation;
    report.lifts_checked = checked;
    report.lifts_vanishing = vanishing;
    report.ideal_power_killed = ideal_power_killed;
    Ok(report)
}

/// Diagonal targets `diag(q^j_1, ..., q^j_d)` with `0 <= j_k <= d`.
pub fn diagonal_candidates(q: &PadicScalar, d: usize) -> Vec<Matrix> {
    let mut out = Vec::new();
    let total = (d + 1).pow(d as u32);
    for code in 0..total {
        let mut c = code;
        let mut m = Matrix::zeros(q.prime(), d, d);
        for k in 0..d {
            m.set(k, k, q.pow((c % (d + 1)) as u64));
            c /= d + 1;
        }
        out.push(m);
    }
    out
}

/// Assigns `a1 -> A, b1 -> B, a2 -> B, b2 -> A` on the genus-2 alphabet and
/// checks the surface relation `[A, B][B, A] = Id`.
pub fn genus2_fixture(a: &Matrix, b: &Matrix, n: i64) -> Result<MatrixRep> {
    let alphabet = Arc::new(Alphabet::new(
        vec!["a1".into(), "b1".into(), "a2".into(), "b2".into()],
        vec![1, 1, 1, 1],
    )?);
    let rho = MatrixRep::new(alphabet, vec![a.clone(), b.clone(), b.clone(), a.clone()])?;
    if !rho.is_trivial_mod(n)? {
        return Err(Error::InvalidParameter(format!("fixture matrices must be trivial modulo l^{n}")));
    }
    let (ai, bi) = (a.inverse()?, b.inverse()?);
    let ab = a.mul(b)?.mul(&ai)?.mul(&bi)?;
    let ba = b.mul(a)?.mul(&bi)?.mul(&ai)?;
    let relation = ab.mul(&ba)?;
    if !relation.eq_at_precision(&rho.identity()) {
        return Err(Error::RelationFailure("[A, B][B, A] is not the identity".into()));
    }
    Ok(rho)
}

/// Integer entry in JSON: a number or a decimal string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntEntry {
    Int(i64),
    Text(String),
}

impl IntEntry {
    pub fn to_bigint(&self) -> Result<BigInt> {
        match self {
            IntEntry::Int(n) => Ok(BigInt::from(*n)),
            IntEntry::Text(s) => s.trim().parse().map_err(|_| Error::Malformed(format!("not an integer: {s:?}"))),
        }
    }

    fn from_bigint(n: BigInt) -> Self {
        match n.to_i64() {
            Some(x) => IntEntry::Int(x),
            None => IntEntry::Text(n.to_string()),
        }
    }
}

pub fn matrix_from_entries(prime: u64, rows: &[Vec<IntEntry>], precision: i64) -> Result<Matrix> {
    let rows = rows
        .iter()
        .map(|r| r.iter().map(|x| x.to_bigint().map(|n| PadicScalar::from_int(n, prime, precision))).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    Matrix::from_rows(prime, rows)
}

pub fn matrix_to_entries(m: &Matrix, precision: i64) -> Result<Vec<Vec<IntEntry>>> {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|x| x.balanced_residue(precision).map(IntEntry::from_bigint)).collect())
        .collect()
}

/// `{alphabet, dim, images, prime}` with integer matrices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<Alphabet>,
    pub prime: u64,
    pub dim: usize,
    pub images: Vec<Vec<Vec<IntEntry>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<i64>,
}

impl RepJson {
    /// Missing alphabets default to weight-2 generators.
    pub fn build(&self, precision: Option<i64>) -> Result<MatrixRep> {
        let precision = precision.or(self.precision).unwrap_or(DEFAULT_PRECISION);
        let alphabet = match &self.alphabet {
            Some(a) => a.clone(),
            None => Alphabet::punctured_line(self.images.len())?,
        };
        let images = self
            .images
            .iter()
            .map(|m| matrix_from_entries(self.prime, m, precision))
            .collect::<Result<Vec<_>>>()?;
        let rho = MatrixRep::new(Arc::new(alphabet), images)?;
        if rho.dim != self.dim {
            return Err(Error::Dimension(format!("declared dim {} but images are {}x{}", self.dim, rho.dim, rho.dim)));
        }
        Ok(rho)
    }

    pub fn from_rep(rho: &MatrixRep) -> Result<Self> {
        let precision = rho.precision();
        Ok(RepJson {
            alphabet: Some((*rho.alphabet).clone()),
            prime: rho.prime,
            dim: rho.dim,
            images: rho.images.iter().map(|m| matrix_to_entries(m, precision)).collect::<Result<_>>()?,
            precision: Some(precision),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PREC: i64 = 40;

    fn line(rank: usize) -> Arc<Alphabet> {
        Arc::new(Alphabet::punctured_line(rank).unwrap())
    }

    fn rep(p: u64, images: &[Vec<Vec<i64>>]) -> MatrixRep {
        MatrixRep::from_int_images(line(images.len()), p, images, PREC).unwrap()
    }

    fn int(n: i64, p: u64) -> PadicScalar {
        PadicScalar::from_int(n, p, PREC)
    }

    #[test]
    fn triviality() {
        let id = rep(3, &[vec![vec![1, 0], vec![0, 1]]]);
        assert!(id.is_trivial_mod(30).unwrap());
        let d = rep(3, &[vec![vec![10, 0], vec![0, 1]]]);
        assert!(d.is_trivial_mod(2).unwrap());
        assert!(!d.is_trivial_mod(3).unwrap());
        let u = rep(3, &[vec![vec![1, 3], vec![0, 1]]]);
        assert!(u.is_trivial_mod(1).unwrap());
        assert!(!u.is_trivial_mod(2).unwrap());
        assert!(id.is_trivial_mod(41).is_err());
    }

    #[test]
    fn evaluation_of_polynomials_and_log() {
        let rho = rep(3, &[vec![vec![1, 9], vec![0, 1]], vec![vec![1, 0], vec![3, 1]]]);
        let a = rho.alphabet().clone();
        let r = GaussParams::from_ratio(1, 2).unwrap();
        let g = GroupWord::from_ints(a.clone(), 3, &[(0, 1)], PREC).unwrap().magnus_embed(2).unwrap();
        let ev = rho.evaluate_series(&g, &r).unwrap();
        assert!(ev.value.eq_at_precision(&rho.images()[0]));
        let w = GroupWord::from_ints(a.clone(), 3, &[(0, 1), (1, -1)], PREC).unwrap();
        let s = w.magnus_embed(12).unwrap();
        let direct = rho.images()[0].mul(&rho.images()[1].inverse().unwrap()).unwrap();
        assert!(rho.evaluate_series(&s, &r).unwrap().agrees_with(&direct).unwrap());
        assert!(rho.evaluate_word(&w).unwrap().eq_at_precision(&direct));
        let log = NcSeries::one(a.clone(), 3, 8, PREC)
            .checked_add(&NcSeries::variable(a.clone(), 3, 8, 0, PREC))
            .unwrap()
            .log_grouplike()
            .unwrap();
        let ev = rho.evaluate_series(&log, &r).unwrap();
        assert!(ev.value.eq_at_precision(&rho.t_image(0)));
        assert!(!ev.vanishes_within_tail());
        assert!(matches!(
            rho.evaluate_series(&log, &GaussParams::from_ratio(1, 1).unwrap()),
            Err(Error::HypothesisUnmet(_))
        ));
    }

    #[test]
    fn unipotence() {
        let u = rep(3, &[vec![vec![1, 3, 0], vec![0, 1, 9], vec![0, 0, 1]], vec![vec![1, 0, 3], vec![0, 1, 3], vec![0, 0, 1]]]);
        let cert = is_unipotent(&u).unwrap();
        assert!(cert.is_unipotent(), "{cert:?}");
        let d = rep(3, &[vec![vec![10, 0], vec![0, 1]]]);
        match is_unipotent(&d).unwrap() {
            UnipotenceCertificate::TraceWitness { word, .. } => assert_eq!(word, vec![0]),
            other => panic!("{other:?}"),
        }
        let id = rep(3, &[vec![vec![1, 0], vec![0, 1]]]);
        assert!(is_unipotent(&id).unwrap().is_unipotent());
    }

    #[test]
    fn socle_examples() {
        let irreducible = rep(3, &[vec![vec![1, 3], vec![0, 1]], vec![vec![1, 0], vec![3, 1]]]);
        let s = socle_filtration(&irreducible).unwrap();
        assert_eq!(s.dims(), vec![2]);
        assert!(s.quotients_semisimple);
        let unitri = rep(3, &[vec![vec![1, 3], vec![0, 1]]]);
        let s = socle_filtration(&unitri).unwrap();
        assert_eq!(s.dims(), vec![1, 2]);
        assert!(s.quotients_semisimple);
    }

    #[test]
    fn bound_examples() {
        let b = bound_n(&int(2, 3)).unwrap();
        assert_eq!((b.s, b.v_qs, b.bound.as_str(), b.n_min), (2, 1, "3/4", 1));
        let b = bound_n(&int(2, 5)).unwrap();
        assert_eq!((b.s, b.v_qs, b.bound.as_str(), b.n_min), (4, 1, "5/16", 1));
        let b = bound_n(&int(3, 2)).unwrap();
        assert_eq!((b.s, b.v_qs, b.epsilon, b.bound.as_str(), b.n_min), (2, 3, 1, "5/2", 3));
        assert!(bound_n(&int(1, 3)).is_err());
    }

    #[test]
    fn pipeline_unipotent_example() {
        let rho = rep(3, &[vec![vec![1, 9], vec![0, 1]]]);
        let q = int(4, 3);
        let e = Endomorphism::sigma_cyclotomic(rho.alphabet().clone(), &q, 3).unwrap();
        let target = Matrix::from_int_rows(3, &[vec![4, 0], vec![0, 1]], PREC).unwrap();
        let report = certify_pipeline(&rho, &e, &target, 2).unwrap();
        assert_eq!(report.verdict, PipelineVerdict::Unipotent);
        assert_eq!(report.agrees, Some(true));
        assert_eq!(report.cutoff.as_ref().unwrap().i0, 3);
        let wrong = Matrix::from_int_rows(3, &[vec![1, 0], vec![0, 4]], PREC).unwrap();
        let report = certify_pipeline(&rho, &e, &wrong, 2).unwrap();
        assert_eq!(report.verdict, PipelineVerdict::EquivarianceFailure);
    }

    #[test]
    fn pipeline_rejects_semisimple() {
        let rho = rep(3, &[vec![vec![10, 0], vec![0, 1]]]);
        let q = int(4, 3);
        let e = Endomorphism::sigma_cyclotomic(rho.alphabet().clone(), &q, 3).unwrap();
        for m in diagonal_candidates(&q, 2) {
            let report = certify_pipeline(&rho, &e, &m, 2).unwrap();
            assert_eq!(report.verdict, PipelineVerdict::EquivarianceFailure);
        }
        assert!(matches!(certify_pipeline(&rho, &e, &Matrix::identity(3, 2, PREC), 1), Err(Error::HypothesisUnmet(_))));
    }

    #[test]
    fn genus_two() {
        let a = Matrix::from_int_rows(3, &[vec![1, 9], vec![0, 1]], PREC).unwrap();
        let id = Matrix::identity(3, 2, PREC);
        let rho = genus2_fixture(&a, &id, 2).unwrap();
        assert!(is_unipotent(&rho).unwrap().is_unipotent());
        assert!(genus2_fixture(&id, &id, 5).is_ok());
    }

    #[test]
    fn rep_json_round_trip() {
        let rho = rep(3, &[vec![vec![1, 9], vec![0, 1]]]);
        let json = RepJson::from_rep(&rho).unwrap();
        let text = serde_json::to_string(&json).unwrap();
        let back: RepJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back, json);
        assert!(back.build(None).unwrap().images()[0].eq_at_precision(&rho.images()[0]));
    }
}
