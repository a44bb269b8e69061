//! Construction of the word-indexed family of perturbed-Jordan-block
//! tridiagonal operators.
//!
//! Each operator is an N x N real tridiagonal matrix with zero main
//! diagonal. Subdiagonal position k carries a coupling `xi_{m(k)}` and the
//! matching superdiagonal position carries `1 - xi_{m(k)}`, where
//! `m(k) = min(k, N - k)` mirrors the couplings about the matrix centre.
//! The half-length coupling vector is generated from a word over the
//! two-letter alphabet {o, e}: letter j set to 'o' means `xi_j = t`
//! (odd continuation through t = 0), letter 'e' means `xi_j = |t|` (even
//! continuation). At t = 0 every member of the family collapses to the
//! nilpotent Jordan block, where it ceases to be diagonalizable.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::Error;
use crate::Result;

/// Largest supported word length; keeps `Word::index` inside `u128`.
pub const MAX_WORD_LEN: usize = 127;

/// One letter of a coupling word: 'o' couplings flip sign with t, 'e'
/// couplings depend on |t| only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Letter {
    O,
    E,
}

impl Letter {
    fn from_char(c: char) -> Result<Self> {
        match c.to_ascii_lowercase() {
            'o' => Ok(Letter::O),
            'e' => Ok(Letter::E),
            other => Err(Error::InvalidLetter { letter: other }),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::O => 'o',
            Letter::E => 'e',
        }
    }
}

/// A coupling word over {o, e}. The word length J pairs with matrix
/// dimension N through J = floor(N/2).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    /// Parses a word from text. Letters are case-insensitive; anything
    /// outside {o, e} is rejected, as is the empty string.
    pub fn parse(text: &str) -> Result<Self> {
        if text.is_empty() {
            return Err(Error::EmptyWord);
        }
        if text.chars().count() > MAX_WORD_LEN {
            return Err(Error::WordTooLong {
                got: text.chars().count(),
                max: MAX_WORD_LEN,
            });
        }
        let letters = text.chars().map(Letter::from_char).collect::<Result<_>>()?;
        Ok(Word { letters })
    }

    /// Reconstructs the word of the given length from its binary index
    /// (first letter is the most significant bit, e = 1, o = 0).
    pub fn from_index(length: usize, index: u128) -> Result<Self> {
        if length == 0 {
            return Err(Error::EmptyWord);
        }
        if length > MAX_WORD_LEN {
            return Err(Error::WordTooLong {
                got: length,
                max: MAX_WORD_LEN,
            });
        }
        let max = (1u128 << length) - 1;
        if index > max {
            return Err(Error::WordIndexOutOfRange { index, length, max });
        }
        let letters = (0..length)
            .map(|pos| {
                let bit = (index >> (length - 1 - pos)) & 1;
                if bit == 1 {
                    Letter::E
                } else {
                    Letter::O
                }
            })
            .collect();
        Ok(Word { letters })
    }

    /// Binary index of the word: first letter is the most significant
    /// bit, with e mapped to 1 and o to 0.
    pub fn index(&self) -> u128 {
        self.letters
            .iter()
            .fold(0u128, |acc, &l| (acc << 1) | u128::from(l == Letter::E))
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.letters {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Word::parse(s)
    }
}

/// The coupling vector xi_1..xi_J generated by a word at parameter t.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingVector {
    xi: Vec<f64>,
    t: f64,
}

impl CouplingVector {
    pub fn from_word(word: &Word, t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::NonFinite { name: "t" });
        }
        let xi = word
            .letters()
            .iter()
            .map(|&l| match l {
                Letter::O => t,
                Letter::E => t.abs(),
            })
            .collect();
        Ok(CouplingVector { xi, t })
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn t(&self) -> f64 {
        self.t
    }
}

/// An N x N member of the operator family, stored dense. The compact
/// tridiagonal view is available through [`LatticeOperator::sub`] and
/// [`LatticeOperator::sup`].
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeOperator {
    n: usize,
    word: Word,
    t: f64,
    entries: DMatrix<f64>,
}

impl LatticeOperator {
    /// Builds the operator of dimension `n` for the given word and
    /// parameter `t`. The word length must equal floor(n/2).
    pub fn build(n: usize, word: &Word, t: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall { n });
        }
        let expected = n / 2;
        if word.len() != expected {
            return Err(Error::WordLength {
                n,
                expected,
                got: word.len(),
            });
        }
        let couplings = CouplingVector::from_word(word, t)?;
        let xi = couplings.xi();
        let mut entries = DMatrix::zeros(n, n);
        for k in 1..n {
            let m = k.min(n - k);
            entries[(k, k - 1)] = xi[m - 1];
            entries[(k - 1, k)] = 1.0 - xi[m - 1];
        }
        Ok(LatticeOperator {
            n,
            word: word.clone(),
            t,
            entries,
        })
    }

    /// The nilpotent Jordan block: superdiagonal of ones, zero elsewhere.
    /// Identical to `build(n, w, 0)` for every admissible word `w`.
    pub fn jordan(n: usize) -> Result<Self> {
        let word = Word::from_index(1.max(n / 2), 0)?;
        LatticeOperator::build(n, &word, 0.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Subdiagonal entries, positions 1..N-1.
    pub fn sub(&self) -> Vec<f64> {
        (1..self.n).map(|k| self.entries[(k, k - 1)]).collect()
    }

    /// Superdiagonal entries, positions 1..N-1.
    pub fn sup(&self) -> Vec<f64> {
        (1..self.n).map(|k| self.entries[(k - 1, k)]).collect()
    }

    /// Frobenius norm, the default scale for tolerance decisions.
    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }
}

/// Parses a word from text (free-function form of [`Word::parse`]).
pub fn parse_word(text: &str) -> Result<Word> {
    Word::parse(text)
}

/// Binary index of a word (free-function form of [`Word::index`]).
pub fn word_index(word: &Word) -> u128 {
    word.index()
}

/// Word of the given length with the given index (free-function form of
/// [`Word::from_index`]).
pub fn word_from_index(length: usize, index: u128) -> Result<Word> {
    Word::from_index(length, index)
}

/// Builds a lattice operator (free-function form of
/// [`LatticeOperator::build`]).
pub fn build_operator(n: usize, word: &Word, t: f64) -> Result<LatticeOperator> {
    LatticeOperator::build(n, word, t)
}

/// The nilpotent Jordan block of dimension `n`.
pub fn jordan_block(n: usize) -> Result<LatticeOperator> {
    LatticeOperator::jordan(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_words_and_normalizes_case() {
        let w = Word::parse("ooooe").unwrap();
        assert_eq!(w.len(), 5);
        assert_eq!(w.to_string(), "ooooe");

        let single = Word::parse("e").unwrap();
        assert_eq!(single.len(), 1);

        let mixed = Word::parse("OoE").unwrap();
        assert_eq!(mixed.to_string(), "ooe");
    }

    #[test]
    fn rejects_bad_words() {
        assert!(matches!(Word::parse(""), Err(Error::EmptyWord)));
        assert!(matches!(
            Word::parse("oxe"),
            Err(Error::InvalidLetter { letter: 'x' })
        ));
        assert!(Word::parse(&"o".repeat(MAX_WORD_LEN + 1)).is_err());
    }

    #[test]
    fn word_indices_match_binary_encoding() {
        for (text, index) in [
            ("ooooe", 1),
            ("ooeee", 7),
            ("eoooe", 17),
            ("eooee", 19),
            ("eeeee", 31),
            ("ooooo", 0),
        ] {
            assert_eq!(Word::parse(text).unwrap().index(), index, "word {text}");
        }
    }

    #[test]
    fn index_roundtrip() {
        for length in 1..=8 {
            for index in 0..(1u128 << length) {
                let w = Word::from_index(length, index).unwrap();
                assert_eq!(w.index(), index);
                assert_eq!(w.len(), length);
            }
        }
        assert!(Word::from_index(3, 8).is_err());
        assert!(Word::from_index(0, 0).is_err());
    }

    #[test]
    fn coupling_vector_follows_letters() {
        let w = Word::parse("oe").unwrap();
        let c = CouplingVector::from_word(&w, -0.3).unwrap();
        assert_eq!(c.xi(), &[-0.3, 0.3]);
        let c = CouplingVector::from_word(&w, 0.3).unwrap();
        assert_eq!(c.xi(), &[0.3, 0.3]);
        assert!(CouplingVector::from_word(&w, f64::NAN).is_err());
    }

    #[test]
    fn two_by_two_example() {
        let w = Word::parse("o").unwrap();
        let q = LatticeOperator::build(2, &w, 0.1).unwrap();
        assert_eq!(q.entries()[(0, 0)], 0.0);
        assert_eq!(q.entries()[(0, 1)], 0.9);
        assert_eq!(q.entries()[(1, 0)], 0.1);
        assert_eq!(q.entries()[(1, 1)], 0.0);
    }

    #[test]
    fn ten_by_ten_layout_is_mirrored() {
        let w = Word::parse("ooooe").unwrap();
        let t = -0.25;
        let q = LatticeOperator::build(10, &w, t).unwrap();
        let sub = q.sub();
        let sup = q.sup();
        let expected_sub = [-0.25, -0.25, -0.25, -0.25, 0.25, -0.25, -0.25, -0.25, -0.25];
        for (k, (&got, &want)) in sub.iter().zip(expected_sub.iter()).enumerate() {
            assert_eq!(got, want, "sub position {}", k + 1);
            assert_eq!(sup[k], 1.0 - want, "sup position {}", k + 1);
        }
    }

    #[test]
    fn odd_dimension_repeats_middle_coupling() {
        let w = Word::parse("ooe").unwrap();
        let q = LatticeOperator::build(7, &w, -0.5).unwrap();
        // m(k) for N = 7 runs 1,2,3,3,2,1
        assert_eq!(q.sub(), vec![-0.5, -0.5, 0.5, 0.5, -0.5, -0.5]);
    }

    #[test]
    fn jordan_block_shape() {
        let j3 = LatticeOperator::jordan(3).unwrap();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        );
        assert_eq!(j3.entries(), &expected);
        assert!(LatticeOperator::jordan(1).is_err());

        let w = Word::parse("ooooe").unwrap();
        let q0 = LatticeOperator::build(10, &w, 0.0).unwrap();
        assert_eq!(LatticeOperator::jordan(10).unwrap().entries(), q0.entries());
    }

    #[test]
    fn positive_t_is_word_independent() {
        let t = 0.3;
        let a = LatticeOperator::build(7, &Word::parse("eoe").unwrap(), t).unwrap();
        let b = LatticeOperator::build(7, &Word::parse("ooo").unwrap(), t).unwrap();
        assert_eq!(a.entries(), b.entries());
    }

    #[test]
    fn build_rejects_mismatches() {
        let w = Word::parse("oo").unwrap();
        assert!(matches!(
            LatticeOperator::build(10, &w, 0.1),
            Err(Error::WordLength { expected: 5, got: 2, .. })
        ));
        assert!(LatticeOperator::build(1, &w, 0.1).is_err());
        assert!(LatticeOperator::build(4, &w, f64::INFINITY).is_err());
    }
}
