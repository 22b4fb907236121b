//! Continuous endomorphisms of the group ring given by generator substitution.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filtration::in_weight;
use crate::linalg::Matrix;
use crate::ncseries::{Alphabet, GroupWord, Monomial, NcSeries};
use crate::padics::{PadicScalar, Valuation};

/// An endomorphism `gamma_i -> image_i` acting on series modulo `I^n`.
///
/// `base` fixes the expected graded action: on `gr^(-k)` it is
/// `base^(k / stride)`, where the stride is 2 for alphabets of pure weight 2
/// (only even levels are nonzero) and 1 otherwise.
#[derive(Debug)]
pub struct Endomorphism {
    alphabet: Arc<Alphabet>,
    prime: u64,
    truncation: usize,
    images: Vec<NcSeries>,
    word_images: Option<Vec<GroupWord>>,
    base: PadicScalar,
    label: String,
    basis: OnceLock<Basis>,
}

#[derive(Debug)]
struct Basis {
    monomials: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
    images: Vec<NcSeries>,
}

impl Clone for Endomorphism {
    fn clone(&self) -> Self {
        Endomorphism {
            alphabet: self.alphabet.clone(),
            prime: self.prime,
            truncation: self.truncation,
            images: self.images.clone(),
            word_images: self.word_images.clone(),
            base: self.base.clone(),
            label: self.label.clone(),
            basis: OnceLock::new(),
        }
    }
}

impl Endomorphism {
    /// Builds an endomorphism from series images, checking that each image is
    /// integral with augmentation 1 and that `image_i - 1` lies in `W^(-w_i)`.
    pub fn from_images(alphabet: Arc<Alphabet>, images: Vec<NcSeries>, base: PadicScalar, label: impl Into<String>) -> Result<Self> {
        if images.len() != alphabet.rank() {
            return Err(Error::Dimension(format!("{} images for rank {}", images.len(), alphabet.rank())));
        }
        if !base.is_unit() {
            return Err(Error::NotUnit(base.to_string()));
        }
        let prime = base.prime();
        let truncation = images.iter().map(|s| s.truncation()).min().unwrap_or(0);
        let mut truncated = Vec::with_capacity(images.len());
        for (i, image) in images.into_iter().enumerate() {
            if image.prime() != prime {
                return Err(Error::PrimeMismatch(prime, image.prime()));
            }
            if *image.alphabet().as_ref() != *alphabet {
                return Err(Error::AlphabetMismatch);
            }
            let aug = image.augmentation();
            if !aug.eq_at_precision(&aug.int_like(1)) {
                return Err(Error::Augmentation { expected: 1, found: aug.to_string() });
            }
            if image.terms().any(|(_, c)| !c.is_integral()) {
                return Err(Error::InvalidParameter(format!("image of generator {} is not integral", i + 1)));
            }
            let shifted = image.filter(|m| !m.is_empty());
            if !in_weight(&shifted, alphabet.weight(i) as usize) {
                return Err(Error::InvalidParameter(format!(
                    "image of generator {} leaves 1 + W^(-{})",
                    i + 1,
                    alphabet.weight(i)
                )));
            }
            truncated.push(image.truncate(truncation)?);
        }
        Ok(Endomorphism {
            alphabet,
            prime,
            truncation,
            images: truncated,
            word_images: None,
            base,
            label: label.into(),
            basis: OnceLock::new(),
        })
    }

    /// Builds an endomorphism from group-word images, keeping the words for
    /// exact evaluation in representations.
    pub fn from_words(words: Vec<GroupWord>, base: PadicScalar, truncation: usize, label: impl Into<String>) -> Result<Self> {
        let alphabet = words
            .first()
            .map(|w| w.alphabet().clone())
            .ok_or_else(|| Error::Dimension("no generator images".into()))?;
        let images = words
            .iter()
            .map(|w| {
                if w.is_identity() {
                    Ok(NcSeries::one(alphabet.clone(), base.prime(), truncation, base.precision().unwrap_or(crate::DEFAULT_PRECISION)))
                } else {
                    w.magnus_embed(truncation)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut e = Self::from_images(alphabet, images, base, label)?;
        e.word_images = Some(words);
        Ok(e)
    }

    pub fn identity(alphabet: Arc<Alphabet>, prime: u64, truncation: usize, precision: i64) -> Result<Self> {
        let words = (0..alphabet.rank())
            .map(|i| GroupWord::generator(alphabet.clone(), prime, i, precision))
            .collect::<Result<Vec<_>>>()?;
        Self::from_words(words, PadicScalar::one(prime, precision), truncation, "identity")
    }

    /// `gamma_i -> gamma_i^q` on an alphabet of pure weight 2.
    pub fn sigma_cyclotomic(alphabet: Arc<Alphabet>, q: &PadicScalar, truncation: usize) -> Result<Self> {
        let conjugators = vec![GroupWord::identity(alphabet.clone()); alphabet.rank()];
        let mut e = Self::sigma_ihara(alphabet, q, &conjugators, truncation)?;
        e.label = format!("cyclotomic q={}", small_display(q));
        Ok(e)
    }

    /// `gamma_i -> f_i gamma_i^q f_i^-1` on an alphabet of pure weight 2.
    pub fn sigma_ihara(alphabet: Arc<Alphabet>, q: &PadicScalar, conjugators: &[GroupWord], truncation: usize) -> Result<Self> {
        if alphabet.pure_weight() != Some(2) {
            return Err(Error::InvalidAlphabet("cyclotomic-type actions need every weight equal to 2".into()));
        }
        if !q.is_unit() {
            return Err(Error::NotUnit(q.to_string()));
        }
        if conjugators.len() != alphabet.rank() {
            return Err(Error::Dimension(format!("{} conjugators for rank {}", conjugators.len(), alphabet.rank())));
        }
        let words = conjugators
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let power = GroupWord::new(alphabet.clone(), vec![(i, q.clone())])?;
                power.conjugate_by(f)
            })
            .collect::<Result<Vec<_>>>()?;
        let label = format!("ihara q={}", small_display(q));
        Self::from_words(words, q.clone(), truncation, label)
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

    pub fn images(&self) -> &[NcSeries] {
        &self.images
    }

    pub fn word_images(&self) -> Option<&[GroupWord]> {
        self.word_images.as_deref()
    }

    pub fn base(&self) -> &PadicScalar {
        &self.base
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn stride(&self) -> usize {
        self.alphabet.level_stride()
    }

    /// Expected scalar on `gr^(-k)`; `None` when the graded piece vanishes.
    pub fn level_eigenvalue(&self, k: usize) -> Option<PadicScalar> {
        let s = self.stride();
        (k % s == 0).then(|| self.base.pow((k / s) as u64))
    }

    fn basis(&self) -> &Basis {
        self.basis.get_or_init(|| {
            let monomials = self.alphabet.monomials(self.truncation);
            let index: HashMap<Monomial, usize> = monomials.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
            let xs: Vec<NcSeries> = self.images.iter().map(|g| g.filter(|m| !m.is_empty())).collect();
            let mut images: Vec<NcSeries> = Vec::with_capacity(monomials.len());
            for m in &monomials {
                let image = match m.letters().split_last() {
                    None => NcSeries::one(self.alphabet.clone(), self.prime, self.truncation, self.working_precision()),
                    Some((&last, prefix)) => {
                        let p = index[&Monomial::new(&prefix.iter().map(|&i| i as usize).collect::<Vec<_>>())];
                        images[p].checked_mul(&xs[last as usize]).expect("compatible by construction")
                    }
                };
                images.push(image);
            }
            Basis { monomials, index, images }
        })
    }

    fn working_precision(&self) -> i64 {
        self.base.precision().unwrap_or(crate::DEFAULT_PRECISION)
    }

    /// Monomials of degree `< truncation` in length-then-lex order.
    pub fn basis_monomials(&self) -> &[Monomial] {
        &self.basis().monomials
    }

    /// Image of `T^I`, i.e. the product of `image_i - 1` along the word.
    pub fn monomial_image(&self, m: &Monomial) -> Result<&NcSeries> {
        let b = self.basis();
        b.index
            .get(m)
            .map(|&i| &b.images[i])
            .ok_or(Error::TruncationExceeded { requested: m.degree() + 1, truncation: self.truncation })
    }

    /// The ring map `T_i -> image_i - 1`, applied to `a`.
    pub fn apply(&self, a: &NcSeries) -> Result<NcSeries> {
        if a.prime() != self.prime {
            return Err(Error::PrimeMismatch(self.prime, a.prime()));
        }
        if **a.alphabet() != *self.alphabet {
            return Err(Error::AlphabetMismatch);
        }
        if a.truncation() > self.truncation {
            return Err(Error::TruncationExceeded { requested: a.truncation(), truncation: self.truncation });
        }
        let mut acc = NcSeries::zero(self.alphabet.clone(), self.prime, a.truncation());
        for (m, c) in a.terms() {
            acc = acc.checked_add(&self.monomial_image(m)?.scalar_mul(c)?)?;
        }
        Ok(acc)
    }

    /// `self o other`: images of `other` pushed through `self`.
    pub fn compose(&self, other: &Endomorphism) -> Result<Endomorphism> {
        let truncation = self.truncation.min(other.truncation);
        let images = other
            .images
            .iter()
            .map(|g| self.apply(&g.truncate(truncation)?))
            .collect::<Result<Vec<_>>>()?;
        let base = self.base.checked_mul(&other.base)?;
        Self::from_images(self.alphabet.clone(), images, base, format!("({}) o ({})", self.label, other.label))
    }

    /// Level-`k` monomials of degree `< n`, in basis order.
    pub fn level_basis(&self, k: usize, n: usize) -> Vec<Monomial> {
        self.alphabet
            .monomials(n)
            .into_iter()
            .filter(|m| self.alphabet.weight_level(m) == k)
            .collect()
    }

    /// Matrix of the induced map on `W^(-k) / W^(-k-1)` modulo `I^n` in the
    /// monomial basis (columns are images).
    pub fn graded_matrix(&self, k: usize, n: usize) -> Result<Matrix> {
        if n > self.truncation {
            return Err(Error::TruncationExceeded { requested: n, truncation: self.truncation });
        }
        let max = self.alphabet.max_level(n);
        if k > max {
            return Err(Error::LevelOutOfRange { level: k, max });
        }
        let basis = self.level_basis(k, n);
        let mut mat = Matrix::zeros(self.prime, basis.len(), basis.len());
        for (j, m) in basis.iter().enumerate() {
            let image = self.monomial_image(m)?;
            for (i, target) in basis.iter().enumerate() {
                mat.set(i, j, image.coeff(target));
            }
            if let Some((bad, _)) = image
                .terms()
                .find(|(t, _)| t.degree() < n && self.alphabet.weight_level(t) < k)
            {
                return Err(Error::InvalidParameter(format!("image of {m} has lower-level term {bad}")));
            }
        }
        Ok(mat)
    }

    /// First level `< max_level(n)` whose graded action differs from the
    /// expected scalar.
    pub fn graded_scalar_defect(&self, n: usize) -> Result<Option<usize>> {
        for k in 0..=self.alphabet.max_level(n) {
            let mat = self.graded_matrix(k, n)?;
            if mat.rows() == 0 {
                continue;
            }
            let ok = match self.level_eigenvalue(k) {
                Some(lambda) => mat.is_scalar(&lambda),
                None => false,
            };
            if !ok {
                return Ok(Some(k));
            }
        }
        Ok(None)
    }

    /// Dense matrix of the action on the full space modulo `I^n`, columns
    /// indexed by [`Endomorphism::basis_monomials`] truncated to degree `< n`.
    pub fn full_matrix(&self, n: usize) -> Result<(Vec<Monomial>, Matrix)> {
        if n > self.truncation {
            return Err(Error::TruncationExceeded { requested: n, truncation: self.truncation });
        }
        let basis = self.alphabet.monomials(n);
        let mut mat = Matrix::zeros(self.prime, basis.len(), basis.len());
        let index: HashMap<&Monomial, usize> = basis.iter().enumerate().map(|(i, m)| (m, i)).collect();
        for (j, m) in basis.iter().enumerate() {
            for (t, c) in self.monomial_image(m)?.terms() {
                if let Some(&i) = index.get(t) {
                    mat.set(i, j, c.clone());
                }
            }
        }
        Ok((basis, mat))
    }
}

fn small_display(q: &PadicScalar) -> String {
    match (q.valuation(), q.balanced_residue(q.precision().unwrap_or(1))) {
        (Valuation::Finite(_), Ok(r)) => r.to_string(),
        _ => q.to_string(),
    }
}

/// JSON description of an action: `{label, q, conjugators | images}`.
///
/// Words are lists of `[generator index, integer exponent]` pairs with
/// zero-based indices. `images` takes precedence over `conjugators`; with
/// neither, the cyclotomic action is meant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub q: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conjugators: Option<Vec<Vec<(usize, i64)>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub images: Option<Vec<Vec<(usize, i64)>>>,
}

impl ActionSpec {
    pub fn cyclotomic(q: i64) -> Self {
        ActionSpec { label: None, q, weights: None, conjugators: None, images: None }
    }

    /// Parses `cyclotomic:q`.
    pub fn parse_short(s: &str) -> Result<Self> {
        let q = s
            .strip_prefix("cyclotomic:")
            .ok_or_else(|| Error::Malformed(format!("expected cyclotomic:<q>, got {s:?}")))?;
        let q = q.trim().parse().map_err(|_| Error::Malformed(format!("bad q in {s:?}")))?;
        Ok(Self::cyclotomic(q))
    }

    pub fn build(&self, alphabet: Arc<Alphabet>, prime: u64, truncation: usize, precision: i64) -> Result<Endomorphism> {
        if let Some(w) = &self.weights {
            if w.as_slice() != alphabet.weights() {
                return Err(Error::AlphabetMismatch);
            }
        }
        let q = PadicScalar::from_int(self.q, prime, precision);
        let words = |list: &Vec<Vec<(usize, i64)>>| -> Result<Vec<GroupWord>> {
            list.iter().map(|w| GroupWord::from_ints(alphabet.clone(), prime, w, precision)).collect()
        };
        let mut e = match (&self.images, &self.conjugators) {
            (Some(images), _) => {
                let label = format!("images base={}", self.q);
                Endomorphism::from_words(words(images)?, q, truncation, label)?
            }
            (None, Some(conj)) => Endomorphism::sigma_ihara(alphabet.clone(), &q, &words(conj)?, truncation)?,
            (None, None) => Endomorphism::sigma_cyclotomic(alphabet.clone(), &q, truncation)?,
        };
        if let Some(label) = &self.label {
            e.label = label.clone();
        }
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u64 = 3;
    const PREC: i64 = 40;

    fn int(n: i64) -> PadicScalar {
        PadicScalar::from_int(n, P, PREC)
    }

    fn line(rank: usize) -> Arc<Alphabet> {
        Arc::new(Alphabet::punctured_line(rank).unwrap())
    }

    #[test]
    fn cyclotomic_rank_one() {
        let a = line(1);
        let e = Endomorphism::sigma_cyclotomic(a.clone(), &int(4), 3).unwrap();
        let t = NcSeries::variable(a.clone(), P, 3, 0, PREC);
        let image = e.apply(&t).unwrap();
        let expected = NcSeries::from_terms(a.clone(), P, 3, [(Monomial::new(&[0]), int(4)), (Monomial::new(&[0, 0]), int(6))]).unwrap();
        assert!(image.eq_at_precision(&expected));
        let g = NcSeries::one(a.clone(), P, 3, PREC).checked_add(&t).unwrap();
        assert!(e.apply(&g).unwrap().eq_at_precision(&g.pow(4).unwrap()));
    }

    #[test]
    fn q_one_is_identity() {
        let a = line(2);
        let e = Endomorphism::sigma_cyclotomic(a.clone(), &int(1), 4).unwrap();
        for m in a.monomials(4) {
            let x = NcSeries::from_terms(a.clone(), P, 4, [(m.clone(), int(1))]).unwrap();
            assert!(e.apply(&x).unwrap().eq_at_precision(&x));
        }
        assert!(Endomorphism::sigma_cyclotomic(a, &int(3), 4).is_err());
    }

    #[test]
    fn graded_scalar_for_ihara() {
        let a = line(2);
        let f1 = GroupWord::from_ints(a.clone(), P, &[(1, 1)], PREC).unwrap();
        let e = Endomorphism::sigma_ihara(a.clone(), &int(4), &[f1, GroupWord::identity(a.clone())], 4).unwrap();
        for k in 0..=6 {
            let m = e.graded_matrix(k, 4).unwrap();
            if k % 2 == 1 {
                assert_eq!(m.rows(), 0);
            } else {
                assert!(m.is_scalar(&int(4).pow(k as u64 / 2)), "level {k}");
            }
        }
        assert_eq!(e.graded_scalar_defect(4).unwrap(), None);
        assert_eq!(e.graded_matrix(0, 4).unwrap().rows(), 1);
        assert!(e.graded_matrix(7, 4).is_err());
    }

    #[test]
    fn identity_and_composition() {
        let a = line(2);
        let id = Endomorphism::identity(a.clone(), P, 4, PREC).unwrap();
        let e = Endomorphism::sigma_cyclotomic(a.clone(), &int(4), 4).unwrap();
        let f = Endomorphism::sigma_cyclotomic(a.clone(), &int(7), 4).unwrap();
        let x = GroupWord::from_ints(a.clone(), P, &[(0, 2), (1, -1)], PREC).unwrap().magnus_embed(4).unwrap();
        assert!(id.apply(&x).unwrap().eq_at_precision(&x));
        let ef = e.compose(&f).unwrap();
        let lhs = e.apply(&f.apply(&x).unwrap()).unwrap();
        assert!(ef.apply(&x).unwrap().eq_at_precision(&lhs));
        assert!(id.graded_matrix(4, 4).unwrap().is_scalar(&int(1)));
    }

    #[test]
    fn image_validation() {
        let a = line(1);
        let bad = NcSeries::from_terms(a.clone(), P, 3, [(Monomial::empty(), int(2))]).unwrap();
        assert!(Endomorphism::from_images(a.clone(), vec![bad], int(4), "x").is_err());
        let mixed = Arc::new(Alphabet::with_weights(&[1, 2]).unwrap());
        // c -> a c breaks the weight filtration: a has weight 1 < 2
        let words = vec![
            GroupWord::from_ints(mixed.clone(), P, &[(0, 4)], PREC).unwrap(),
            GroupWord::from_ints(mixed.clone(), P, &[(0, 1), (1, 16)], PREC).unwrap(),
        ];
        assert!(Endomorphism::from_words(words, int(4), 3, "x").is_err());
    }

    #[test]
    fn spec_round_trip() {
        let spec: ActionSpec = serde_json::from_str(r#"{"q": 4, "conjugators": [[[1, 1]], []]}"#).unwrap();
        let e = spec.build(line(2), P, 4, PREC).unwrap();
        assert_eq!(e.graded_scalar_defect(4).unwrap(), None);
        assert_eq!(ActionSpec::parse_short("cyclotomic:4").unwrap(), ActionSpec::cyclotomic(4));
        assert!(ActionSpec::parse_short("frob:4").is_err());
    }
}
