//! Good basis structures `s₁ … s_k`: decent, with a nonsingular evaluation
//! matrix.
//!
//! 1. one distinguisher per unordered pair of basis components;
//! 2. `s⁽²⁾ = Σ Tʲ·s⁽¹⁾ⱼ` with `T` above every count of step 1;
//! 3. `s⁽³⁾ᵢ = (s⁽²⁾)^(i-1)`;
//! 4. `sᵢ = s⁽³⁾ᵢ × q`.

use num_bigint::{BigInt, BigUint};
use num_traits::{Pow, Zero};

use super::distinguish::{find_distinguisher, Distinguisher};
use super::symbolic::{Counter, Symbolic};
use crate::detbool::Basis;
use crate::exacta::{determinant, invert, Rational, RationalMatrix};
use crate::qcore::{hom_exists, ConjunctiveQuery, Structure};
use crate::{Error, Limits, Result};

#[derive(Debug, Clone)]
pub struct GoodBasis {
    pub w: Basis,
    /// Pairs `(i, j)`, `i < j`, of basis positions with their distinguisher.
    pub distinguishers: Vec<((usize, usize), Distinguisher)>,
    pub radix: BigUint,
    pub s2: Symbolic,
    /// `w_i(s⁽²⁾)`.
    pub s2_counts: Vec<BigUint>,
    /// `w_i(q)`.
    pub q_counts: Vec<BigUint>,
    pub structures: Vec<Symbolic>,
    /// `M(i, j) = w_i(s_j)`.
    pub eval_matrix: RationalMatrix,
    pub inverse: RationalMatrix,
}

fn to_rational(n: &BigUint) -> Rational {
    Rational::from_integer(BigInt::from(n.clone()))
}

pub fn build_good_basis(
    w: &Basis,
    q: &ConjunctiveQuery,
    v0: &[ConjunctiveQuery],
    limits: &Limits,
) -> Result<GoodBasis> {
    let k = w.k();
    if k == 0 {
        return Err(Error::Precondition("the basis is empty".into()));
    }
    let schema = q.schema().clone();
    let comps = w.components();

    // step 1
    let mut distinguishers = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let d = find_distinguisher(&comps[i], &comps[j], limits)?;
            distinguishers.push(((i, j), d));
        }
    }
    let mut counter = Counter::new(limits);
    let s1: Vec<Symbolic> = distinguishers
        .iter()
        .map(|(_, d)| Symbolic::base(d.structure.clone()))
        .collect();
    let mut max_entry = BigUint::zero();
    for s in &s1 {
        for c in comps {
            max_entry = max_entry.max(counter.count(s, c)?);
        }
    }

    // step 2
    let radix = max_entry + 1u32;
    let s2 = if s1.is_empty() {
        Symbolic::base(Structure::empty(schema.clone()))
    } else {
        let terms = s1
            .iter()
            .enumerate()
            .map(|(j, s)| (Pow::pow(&radix, (j + 1) as u32), s.clone()))
            .collect();
        Symbolic::sum(schema.clone(), terms)?
    };
    let s2_counts = comps
        .iter()
        .map(|c| counter.count(&s2, c))
        .collect::<Result<Vec<_>>>()?;
    for i in 0..k {
        for j in i + 1..k {
            if s2_counts[i] == s2_counts[j] {
                return Err(Error::Invalid(format!(
                    "radix sum does not separate w{} and w{}",
                    i + 1,
                    j + 1
                )));
            }
        }
    }

    // steps 3 and 4
    let q_body = Symbolic::base(q.frozen_body());
    let structures: Vec<Symbolic> = (0..k)
        .map(|j| {
            let s3 = if j == 0 {
                Symbolic::all_loops(schema.clone())
            } else {
                Symbolic::power(&s2, j as u32)
            };
            Symbolic::product(&s3, &q_body)
        })
        .collect::<Result<_>>()?;
    let q_counts = comps
        .iter()
        .map(|c| counter.count(&q_body, c))
        .collect::<Result<Vec<_>>>()?;

    let mut m = RationalMatrix::zeros(k, k);
    for i in 0..k {
        for (j, s) in structures.iter().enumerate() {
            let entry = counter.count(s, &comps[i])?;
            let formula = Pow::pow(&s2_counts[i], j as u32) * &q_counts[i];
            if entry != formula {
                return Err(Error::Invalid(format!(
                    "evaluation matrix entry ({i},{j}) disagrees with the power formula"
                )));
            }
            m.set(i, j, to_rational(&entry));
        }
    }
    if determinant(&m)?.is_zero() {
        return Err(Error::Invalid("evaluation matrix is singular".into()));
    }
    let inverse = invert(&m)?.expect("nonzero determinant");

    // decency
    let q_frozen = q.frozen_body();
    for v in v0 {
        let body = v.frozen_body();
        if hom_exists(&body, &q_frozen, limits)? {
            continue;
        }
        for (j, s) in structures.iter().enumerate() {
            if !counter.count(s, &body)?.is_zero() {
                return Err(Error::Invalid(format!(
                    "irrelevant view `{}` is nonzero on s{}",
                    v.name(),
                    j + 1
                )));
            }
        }
    }

    Ok(GoodBasis {
        w: w.clone(),
        distinguishers,
        radix,
        s2,
        s2_counts,
        q_counts,
        structures,
        eval_matrix: m,
        inverse,
    })
}

impl GoodBasis {
    pub fn k(&self) -> usize {
        self.structures.len()
    }

    /// `Σ s⃗(j)·s_j` as a symbolic structure.
    pub fn combination(&self, coeffs: &[BigUint]) -> Result<Symbolic> {
        if coeffs.len() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                found: coeffs.len(),
            });
        }
        let terms = coeffs
            .iter()
            .cloned()
            .zip(self.structures.iter().cloned())
            .collect();
        Symbolic::sum(self.s2.schema().clone(), terms)
    }

}
