#![allow(dead_code)]

use dwset::semigroup::GeneratorSet;
use dwset::*;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn monomial(coef: f64, k: usize) -> RationalMap {
    RationalMap::polynomial(Polynomial::monomial(c(coef, 0.0), k)).unwrap()
}

pub fn real_poly(coeffs: &[f64]) -> RationalMap {
    RationalMap::polynomial(Polynomial::from_real(coeffs)).unwrap()
}

/// (2z^3 + 1) / (2 + z^3)
pub fn blaschke3() -> RationalMap {
    RationalMap::new(Polynomial::from_real(&[1.0, 0.0, 0.0, 2.0]), Polynomial::from_real(&[2.0, 0.0, 0.0, 1.0])).unwrap()
}

pub fn gens(maps: Vec<RationalMap>) -> GeneratorSet {
    GeneratorSet::new(maps).unwrap()
}

/// Applies the factors of a word (outermost first) to `z`, never composing.
pub fn apply_word(g: &GeneratorSet, word: &[usize], z: Complex64) -> Complex64 {
    word.iter()
        .rev()
        .fold(z, |acc, &i| g.gens()[i].eval_finite(acc).unwrap().finite().unwrap())
}
