//! Multilinear polynomials over binary variables.
//!
//! A [`Polynomial`] stores a constant offset plus a map from sorted variable
//! index tuples to nonzero coefficients. Two variable domains are supported:
//! spin variables in {-1,+1} and boolean variables in {0,1}. Monomials are
//! kept canonical at all times: indices sorted, repeated variables collapsed
//! (s^2 = 1, x^2 = x), duplicate monomials merged, zero coefficients elided.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Variable domain of a polynomial or configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    /// Variables take values in {-1, +1}.
    Spin,
    /// Variables take values in {0, 1}.
    Bool,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Spin => "spin",
            Domain::Bool => "bool",
        }
    }
}

/// An assignment of all variables of an instance.
///
/// Values are stored as i8: ±1 for spin, 0/1 for boolean.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    domain: Domain,
    values: Vec<i8>,
}

impl Configuration {
    pub fn new(domain: Domain, values: Vec<i8>) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            let ok = match domain {
                Domain::Spin => v == 1 || v == -1,
                Domain::Bool => v == 0 || v == 1,
            };
            if !ok {
                return Err(Error::invalid(format!(
                    "value {v} at position {i} invalid for {:?} domain",
                    domain
                )));
            }
        }
        Ok(Configuration { domain, values })
    }

    pub fn all_up(n: usize) -> Self {
        Configuration { domain: Domain::Spin, values: vec![1; n] }
    }

    /// Decode the low `n` bits of `bits` (bit i set means variable i is
    /// "down": spin -1, boolean 1). Used by exhaustive enumeration.
    pub fn from_bits(domain: Domain, bits: u64, n: usize) -> Self {
        let values = (0..n)
            .map(|i| {
                let set = bits >> i & 1 == 1;
                match domain {
                    Domain::Spin => {
                        if set {
                            -1
                        } else {
                            1
                        }
                    }
                    Domain::Bool => set as i8,
                }
            })
            .collect();
        Configuration { domain, values }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn get(&self, i: usize) -> i8 {
        self.values[i]
    }

    /// Map to the boolean domain via x = (1 - s) / 2. Identity if already boolean.
    pub fn to_bool(&self) -> Configuration {
        match self.domain {
            Domain::Bool => self.clone(),
            Domain::Spin => Configuration {
                domain: Domain::Bool,
                values: self.values.iter().map(|&s| ((1 - s as i16) / 2) as i8).collect(),
            },
        }
    }

    /// Map to the spin domain via s = 1 - 2x. Identity if already spin.
    pub fn to_spin(&self) -> Configuration {
        match self.domain {
            Domain::Spin => self.clone(),
            Domain::Bool => Configuration {
                domain: Domain::Spin,
                values: self.values.iter().map(|&x| (1 - 2 * x as i16) as i8).collect(),
            },
        }
    }

    /// Concatenate configurations of the same domain.
    pub fn concat(parts: &[&Configuration]) -> Result<Configuration> {
        let domain = parts.first().map(|c| c.domain).unwrap_or(Domain::Spin);
        let mut values = Vec::new();
        for p in parts {
            if p.domain != domain {
                return Err(Error::DomainMismatch { expected: domain, got: p.domain });
            }
            values.extend_from_slice(&p.values);
        }
        Ok(Configuration { domain, values })
    }
}

/// Canonicalize a monomial's variable list for the given domain.
///
/// Spin: a variable appearing an even number of times cancels (s^2 = 1).
/// Bool: repeats collapse to a single occurrence (x^2 = x).
fn canonical_vars(domain: Domain, vars: &[u32]) -> Vec<u32> {
    let mut v: Vec<u32> = vars.to_vec();
    v.sort_unstable();
    match domain {
        Domain::Bool => {
            v.dedup();
            v
        }
        Domain::Spin => {
            let mut out = Vec::with_capacity(v.len());
            let mut i = 0;
            while i < v.len() {
                let mut j = i;
                while j < v.len() && v[j] == v[i] {
                    j += 1;
                }
                if (j - i) % 2 == 1 {
                    out.push(v[i]);
                }
                i = j;
            }
            out
        }
    }
}

/// Multilinear polynomial with canonical term storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    domain: Domain,
    n: usize,
    constant: f64,
    terms: BTreeMap<Box<[u32]>, f64>,
}

impl Polynomial {
    pub fn new(domain: Domain, n: usize) -> Self {
        Polynomial { domain, n, constant: 0.0, terms: BTreeMap::new() }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn set_constant(&mut self, c: f64) {
        self.constant = c;
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    /// Add `coeff * prod(vars)` to the polynomial, canonicalizing and merging.
    /// An empty variable list (after cancellation) folds into the constant.
    pub fn add_term(&mut self, vars: &[u32], coeff: f64) -> Result<()> {
        for &v in vars {
            if v as usize >= self.n {
                return Err(Error::IndexOutOfRange { index: v as usize, n: self.n });
            }
        }
        if coeff == 0.0 {
            return Ok(());
        }
        let key = canonical_vars(self.domain, vars);
        if key.is_empty() {
            self.constant += coeff;
            return Ok(());
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(key.into_boxed_slice()) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                // drop exact cancellations so term counts stay meaningful
                if *e.get() == 0.0 {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
        }
        Ok(())
    }

    /// Iterate terms in canonical (lexicographic) order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(k, &c)| (k.as_ref(), c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, vars: &[u32]) -> f64 {
        let key = canonical_vars(self.domain, vars);
        self.terms.get(key.as_slice()).copied().unwrap_or(0.0)
    }

    /// Maximum monomial degree; 0 for a constant polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|k| k.len()).max().unwrap_or(0)
    }

    /// Term counts indexed by degree (index 0 unused, length = degree + 1).
    pub fn term_counts_by_degree(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.degree() + 1];
        for k in self.terms.keys() {
            counts[k.len()] += 1;
        }
        counts
    }

    /// Sum of |coefficient| over non-constant terms.
    pub fn sum_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    /// Largest |coefficient| over non-constant terms; 0 if there are none.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    /// Upper bound on the polynomial over its domain: constant + sum |c_i|.
    /// Attained only if every term can reach its maximum simultaneously.
    pub fn value_upper_bound(&self) -> f64 {
        self.constant + self.sum_abs_coeff()
    }

    pub fn evaluate(&self, config: &Configuration) -> Result<f64> {
        if config.domain != self.domain {
            return Err(Error::DomainMismatch { expected: self.domain, got: config.domain });
        }
        if config.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: config.len() });
        }
        let mut acc = self.constant;
        for (vars, coeff) in self.terms() {
            let mut prod = 1.0;
            for &v in vars {
                prod *= config.get(v as usize) as f64;
            }
            acc += coeff * prod;
        }
        Ok(acc)
    }

    /// Multiply every coefficient (constant included) by `factor`.
    pub fn scale(&mut self, factor: f64) {
        self.constant *= factor;
        if factor == 0.0 {
            self.terms.clear();
            return;
        }
        for c in self.terms.values_mut() {
            *c *= factor;
        }
    }

    /// Substitute s_i = 1 - 2 x_i, expanding each spin monomial over subsets.
    /// Energies are preserved exactly for dyadic coefficients; the degree
    /// never increases.
    pub fn to_boolean(&self) -> Result<Polynomial> {
        if self.domain == Domain::Bool {
            return Err(Error::invalid("polynomial is already in the boolean domain"));
        }
        let mut out = Polynomial::new(Domain::Bool, self.n);
        out.constant = self.constant;
        for (vars, coeff) in self.terms() {
            expand_subsets(vars, |subset, size| {
                let c = coeff * (-2.0f64).powi(size as i32);
                out.add_term(subset, c).expect("indices validated");
            });
        }
        Ok(out)
    }

    /// Substitute x_i = (1 - s_i) / 2; exact inverse of [`Self::to_boolean`].
    pub fn to_spin(&self) -> Result<Polynomial> {
        if self.domain == Domain::Spin {
            return Err(Error::invalid("polynomial is already in the spin domain"));
        }
        let mut out = Polynomial::new(Domain::Spin, self.n);
        out.constant = self.constant;
        for (vars, coeff) in self.terms() {
            let base = coeff * 0.5f64.powi(vars.len() as i32);
            expand_subsets(vars, |subset, size| {
                let sign = if size % 2 == 0 { 1.0 } else { -1.0 };
                out.add_term(subset, base * sign).expect("indices validated");
            });
        }
        Ok(out)
    }

    /// Product of two polynomials over the same domain and variable set.
    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch { expected: self.domain, got: other.domain });
        }
        if self.n != other.n {
            return Err(Error::LengthMismatch { expected: self.n, got: other.n });
        }
        let mut out = Polynomial::new(self.domain, self.n);
        out.constant = self.constant * other.constant;
        for (vars, c) in self.terms() {
            out.add_term(vars, c * other.constant)?;
        }
        for (vars, c) in other.terms() {
            out.add_term(vars, c * self.constant)?;
        }
        let mut scratch = Vec::new();
        for (va, ca) in self.terms() {
            for (vb, cb) in other.terms() {
                scratch.clear();
                scratch.extend_from_slice(va);
                scratch.extend_from_slice(vb);
                out.add_term(&scratch, ca * cb)?;
            }
        }
        Ok(out)
    }

    /// Copy with every variable index shifted by `offset` into a space of
    /// `new_n` variables. Used to place constituent problems side by side.
    pub fn offset_vars(&self, offset: u32, new_n: usize) -> Result<Polynomial> {
        let mut out = Polynomial::new(self.domain, new_n);
        out.constant = self.constant;
        let mut scratch = Vec::new();
        for (vars, c) in self.terms() {
            scratch.clear();
            scratch.extend(vars.iter().map(|&v| v + offset));
            out.add_term(&scratch, c)?;
        }
        Ok(out)
    }
}

/// Call `f` with every subset of `vars` (as a sorted slice, empty included)
/// and its size. `vars` must be short; subset expansion is 2^|vars|.
fn expand_subsets(vars: &[u32], mut f: impl FnMut(&[u32], usize)) {
    assert!(vars.len() <= 30, "monomial degree {} too large to expand", vars.len());
    let m = vars.len();
    let mut subset = Vec::with_capacity(m);
    for mask in 0u32..(1 << m) {
        subset.clear();
        for (i, &v) in vars.iter().enumerate() {
            if mask >> i & 1 == 1 {
                subset.push(v);
            }
        }
        f(&subset, subset.len());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spin_poly(n: usize, terms: &[(&[u32], f64)]) -> Polynomial {
        let mut p = Polynomial::new(Domain::Spin, n);
        for (vars, c) in terms {
            p.add_term(vars, *c).unwrap();
        }
        p
    }

    #[test]
    fn evaluate_two_spin_af_pair() {
        let p = spin_poly(2, &[(&[0, 1], -1.0)]);
        let up = Configuration::all_up(2);
        assert_eq!(p.evaluate(&up).unwrap(), -1.0);
        let mixed = Configuration::new(Domain::Spin, vec![1, -1]).unwrap();
        assert_eq!(p.evaluate(&mixed).unwrap(), 1.0);
    }

    #[test]
    fn evaluate_rejects_domain_and_length_mismatch() {
        let p = spin_poly(2, &[(&[0, 1], 1.0)]);
        let b = Configuration::new(Domain::Bool, vec![0, 1]).unwrap();
        assert!(matches!(p.evaluate(&b), Err(Error::DomainMismatch { .. })));
        let short = Configuration::all_up(1);
        assert!(matches!(p.evaluate(&short), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn spin_to_bool_matches_hand_expansion() {
        // -s1 s2 -> -1 + 2 x1 + 2 x2 - 4 x1 x2
        let p = spin_poly(2, &[(&[0, 1], -1.0)]);
        let b = p.to_boolean().unwrap();
        assert_eq!(b.constant(), -1.0);
        assert_eq!(b.coefficient(&[0]), 2.0);
        assert_eq!(b.coefficient(&[1]), 2.0);
        assert_eq!(b.coefficient(&[0, 1]), -4.0);
    }

    #[test]
    fn conversion_preserves_energy_pointwise() {
        let p = spin_poly(3, &[(&[0], 0.5), (&[0, 1], -1.0), (&[0, 1, 2], 2.0)]);
        let b = p.to_boolean().unwrap();
        for bits in 0..8u64 {
            let s = Configuration::from_bits(Domain::Spin, bits, 3);
            let x = s.to_bool();
            assert_eq!(p.evaluate(&s).unwrap(), b.evaluate(&x).unwrap());
        }
    }

    #[test]
    fn conversion_round_trip_is_exact() {
        let p = spin_poly(4, &[(&[0, 1], 3.0), (&[1, 2, 3], -2.0), (&[2], 7.0)]);
        let back = p.to_boolean().unwrap().to_spin().unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn conversion_never_raises_degree() {
        let p = spin_poly(5, &[(&[0, 1, 2, 3], 1.5), (&[1, 4], -0.25)]);
        assert_eq!(p.to_boolean().unwrap().degree(), 4);
    }

    #[test]
    fn repeated_spin_variables_cancel() {
        let mut p = Polynomial::new(Domain::Spin, 3);
        p.add_term(&[1, 1], 5.0).unwrap(); // s1^2 = 1
        p.add_term(&[0, 1, 1, 2], 2.0).unwrap(); // collapses to s0 s2
        assert_eq!(p.constant(), 5.0);
        assert_eq!(p.coefficient(&[0, 2]), 2.0);
        assert_eq!(p.num_terms(), 1);
    }

    #[test]
    fn repeated_bool_variables_collapse() {
        let mut p = Polynomial::new(Domain::Bool, 2);
        p.add_term(&[0, 0, 1], 3.0).unwrap(); // x0^2 x1 = x0 x1
        assert_eq!(p.coefficient(&[0, 1]), 3.0);
    }

    #[test]
    fn duplicate_monomials_merge_and_zero_elides() {
        let mut p = Polynomial::new(Domain::Spin, 2);
        p.add_term(&[0, 1], 1.5).unwrap();
        p.add_term(&[1, 0], -1.5).unwrap();
        assert_eq!(p.num_terms(), 0);
        assert_eq!(p.degree(), 0);
    }

    #[test]
    fn mul_disjoint_parts() {
        let a = spin_poly(4, &[(&[0, 1], 2.0)]);
        let b = spin_poly(4, &[(&[2], -1.0), (&[3], 1.0)]);
        let ab = a.mul(&b).unwrap();
        assert_eq!(ab.coefficient(&[0, 1, 2]), -2.0);
        assert_eq!(ab.coefficient(&[0, 1, 3]), 2.0);
        assert_eq!(ab.num_terms(), 2);
    }

    #[test]
    fn config_conversions() {
        let s = Configuration::new(Domain::Spin, vec![1, -1]).unwrap();
        let x = s.to_bool();
        assert_eq!(x.values(), &[0, 1]);
        assert_eq!(x.to_spin(), s);
    }
}
