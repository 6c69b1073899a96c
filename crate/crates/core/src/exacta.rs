//! Exact rational linear algebra.
//!
//! Gaussian elimination pivots on the first nonzero entry of each column.
//! Vectors serialize as JSON arrays of `"num/den"` strings (integers as
//! plain `"num"`); matrices as arrays of such rows.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::Invalid(format!("not a rational number: `{s}`"));
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(BigInt::from_str(s).map_err(|_| bad())?)),
    }
}

/// Serde helpers storing numbers as decimal strings.
pub mod as_string {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T: FromStr, D: Deserializer<'de>>(d: D) -> Result<T, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse()
            .map_err(|_| D::Error::custom(format!("bad number `{raw}`")))
    }
}

/// Like [`as_string`] for a sequence.
pub mod vec_as_string {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(ToString::to_string).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, T: FromStr, D: Deserializer<'de>>(d: D) -> Result<Vec<T>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|raw| {
                raw.parse()
                    .map_err(|_| D::Error::custom(format!("bad number `{raw}`")))
            })
            .collect()
    }
}

/// A single rational as a `"num/den"` string.
pub mod rational_string {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(v: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let raw = String::deserialize(d)?;
        parse_rational(&raw).map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct RationalVector(pub Vec<Rational>);

impl RationalVector {
    pub fn zeros(k: usize) -> Self {
        RationalVector(vec![Rational::zero(); k])
    }

    pub fn from_ints(v: &[i64]) -> Self {
        RationalVector(v.iter().map(|&x| rat(x)).collect())
    }

    pub fn from_bigints(v: &[BigInt]) -> Self {
        RationalVector(v.iter().cloned().map(Rational::from_integer).collect())
    }

    pub fn from_biguints(v: &[BigUint]) -> Self {
        RationalVector(
            v.iter()
                .map(|x| Rational::from_integer(BigInt::from(x.clone())))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn entries(&self) -> &[Rational] {
        &self.0
    }

    pub fn dot(&self, other: &RationalVector) -> Result<Rational> {
        check_dim(self.len(), other.len())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .fold(Rational::zero(), |acc, (a, b)| acc + a * b))
    }

    /// Entries as integers, if all of them are.
    pub fn to_integers(&self) -> Option<Vec<BigInt>> {
        self.0
            .iter()
            .map(|r| r.is_integer().then(|| r.to_integer()))
            .collect()
    }

    /// Entries as natural numbers, if all of them are.
    pub fn to_naturals(&self) -> Option<Vec<BigUint>> {
        self.to_integers()?
            .into_iter()
            .map(|i| i.to_biguint())
            .collect()
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(format_rational).collect()
    }

    pub fn scale(&self, c: &Rational) -> RationalVector {
        RationalVector(self.0.iter().map(|x| x * c).collect())
    }
}

impl fmt::Display for RationalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_strings().join(", "))
    }
}

impl Serialize for RationalVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| parse_rational(s).map_err(D::Error::custom))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(RationalVector)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Rational>) -> Result<Self> {
        check_dim(rows * cols, data.len())?;
        Ok(RationalMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: &[RationalVector]) -> Result<Self> {
        let cols = rows.first().map_or(0, RationalVector::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_dim(cols, r.len())?;
            data.extend(r.0.iter().cloned());
        }
        Ok(RationalMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Matrix whose columns are the given vectors, all of length `height`.
    pub fn from_columns(height: usize, cols: &[RationalVector]) -> Result<Self> {
        let mut m = Self::zeros(height, cols.len());
        for (j, c) in cols.iter().enumerate() {
            check_dim(height, c.len())?;
            for i in 0..height {
                m.data[i * cols.len() + j] = c.0[i].clone();
            }
        }
        Ok(m)
    }

    pub fn from_ints(rows: &[&[i64]]) -> Result<Self> {
        let rows: Vec<RationalVector> = rows.iter().map(|r| RationalVector::from_ints(r)).collect();
        Self::from_rows(&rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> RationalVector {
        RationalVector(self.data[i * self.cols..(i + 1) * self.cols].to_vec())
    }

    pub fn column(&self, j: usize) -> RationalVector {
        RationalVector((0..self.rows).map(|i| self.get(i, j).clone()).collect())
    }

    pub fn transpose(&self) -> RationalMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &RationalMatrix) -> Result<RationalMatrix> {
        check_dim(self.cols, other.rows)?;
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    out.data[idx] = &out.data[idx] + a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &RationalVector) -> Result<RationalVector> {
        check_dim(self.cols, v.len())?;
        Ok(RationalVector(
            (0..self.rows)
                .map(|i| {
                    (0..self.cols).fold(Rational::zero(), |acc, j| acc + self.get(i, j) * &v.0[j])
                })
                .collect(),
        ))
    }

    pub fn to_string_rows(&self) -> Vec<Vec<String>> {
        (0..self.rows).map(|i| self.row(i).to_strings()).collect()
    }
}

impl fmt::Display for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .to_string_rows()
            .into_iter()
            .map(|r| format!("[{}]", r.join(", ")))
            .collect();
        write!(f, "[{}]", rows.join(", "))
    }
}

impl Serialize for RationalMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_string_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<RationalVector>::deserialize(d)?;
        RationalMatrix::from_rows(&rows).map_err(D::Error::custom)
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Row-reduces `m` in place to reduced row echelon form and returns the
/// pivot columns, considering only the first `limit` columns as pivots.
fn rref(m: &mut RationalMatrix, limit: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..limit {
        if r == m.rows {
            break;
        }
        let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
            continue;
        };
        if p != r {
            for j in 0..m.cols {
                m.data.swap(p * m.cols + j, r * m.cols + j);
            }
        }
        let inv = m.get(r, c).recip();
        for j in 0..m.cols {
            let v = m.get(r, j) * &inv;
            m.set(r, j, v);
        }
        for i in 0..m.rows {
            if i == r || m.get(i, c).is_zero() {
                continue;
            }
            let f = m.get(i, c).clone();
            for j in 0..m.cols {
                let v = m.get(i, j) - &f * m.get(r, j);
                m.set(i, j, v);
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Coefficients `α` with `Σ αᵢ·basis[i] = target`, free coordinates set to
/// zero; `None` if the target is outside the span.
pub fn span_membership(
    basis: &[RationalVector],
    target: &RationalVector,
) -> Result<Option<RationalVector>> {
    let k = target.len();
    let m = basis.len();
    let mut cols = basis.to_vec();
    cols.push(target.clone());
    let mut a = RationalMatrix::from_columns(k, &cols)?;
    let pivots = rref(&mut a, m);
    // a nonzero right-hand side below the pivot rows means no solution
    if (pivots.len()..k).any(|i| !a.get(i, m).is_zero()) {
        return Ok(None);
    }
    let mut alpha = RationalVector::zeros(m);
    for (r, &c) in pivots.iter().enumerate() {
        alpha.0[c] = a.get(r, m).clone();
    }
    Ok(Some(alpha))
}

pub fn rank(m: &RationalMatrix) -> usize {
    let mut a = m.clone();
    let cols = a.cols;
    rref(&mut a, cols).len()
}

pub fn determinant(m: &RationalMatrix) -> Result<Rational> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let n = m.rows;
    let mut a = m.clone();
    let mut det = Rational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a.get(i, c).is_zero()) else {
            return Ok(Rational::zero());
        };
        if p != c {
            for j in 0..n {
                a.data.swap(p * n + j, c * n + j);
            }
            det = -det;
        }
        let piv = a.get(c, c).clone();
        det *= &piv;
        for i in c + 1..n {
            if a.get(i, c).is_zero() {
                continue;
            }
            let f = a.get(i, c) / &piv;
            for j in c..n {
                let v = a.get(i, j) - &f * a.get(c, j);
                a.set(i, j, v);
            }
        }
    }
    Ok(det)
}

/// Exact inverse, or `None` when `m` is singular.
pub fn invert(m: &RationalMatrix) -> Result<Option<RationalMatrix>> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let n = m.rows;
    let mut aug = RationalMatrix::zeros(n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            aug.set(i, j, m.get(i, j).clone());
        }
        aug.set(i, n + i, Rational::one());
    }
    let pivots = rref(&mut aug, n);
    if pivots.len() < n {
        return Ok(None);
    }
    let mut inv = RationalMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            inv.set(i, j, aug.get(i, n + j).clone());
        }
    }
    Ok(Some(inv))
}

/// A basis of `{x : m·x = 0}`, one vector per free column, with a 1 in that
/// column.
pub fn nullspace(m: &RationalMatrix) -> Vec<RationalVector> {
    let mut a = m.clone();
    let cols = a.cols;
    let pivots = rref(&mut a, cols);
    (0..cols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = RationalVector::zeros(cols);
            v.0[free] = Rational::one();
            for (r, &p) in pivots.iter().enumerate() {
                v.0[p] = -a.get(r, free).clone();
            }
            v
        })
        .collect()
}

/// Integer vector `z` orthogonal to every basis vector with `⟨z, target⟩ ≠ 0`.
pub fn orthogonal_witness(
    basis: &[RationalVector],
    target: &RationalVector,
) -> Result<RationalVector> {
    let k = target.len();
    for b in basis {
        check_dim(k, b.len())?;
    }
    let rows = if basis.is_empty() {
        RationalMatrix::zeros(0, k)
    } else {
        RationalMatrix::from_rows(basis)?
    };
    for z in nullspace(&rows) {
        if !z.dot(target)?.is_zero() {
            let (_, ints) = integer_scale(&z);
            return Ok(RationalVector::from_bigints(&ints));
        }
    }
    Err(Error::Precondition(
        "target lies in the span of the basis".into(),
    ))
}

/// `(scale, scale·v)` where `scale` is the lcm of the denominators.
pub fn integer_scale(v: &RationalVector) -> (BigInt, Vec<BigInt>) {
    let scale = v
        .0
        .iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
    let scaled = v
        .0
        .iter()
        .map(|r| (r * Rational::from_integer(scale.clone())).to_integer())
        .collect();
    (scale, scaled)
}

/// `α = m_inv·u` if every entry is nonnegative.
pub fn nonneg_preimage(m_inv: &RationalMatrix, u: &RationalVector) -> Result<Option<RationalVector>> {
    let alpha = m_inv.mul_vec(u)?;
    Ok((!alpha.0.iter().any(Signed::is_negative)).then_some(alpha))
}
