//! Flattened polynomial view with a variable-to-term index.
//!
//! Solvers and exhaustive search need single-flip energy differences in
//! O(deg(v)) rather than O(total terms). [`IncidenceIndex`] stores terms in
//! CSR-style arrays plus, per variable, the list of term ids it occurs in.

use crate::poly::{Configuration, Domain, Polynomial};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct IncidenceIndex {
    n: usize,
    domain: Domain,
    constant: f64,
    term_offsets: Vec<u32>,
    term_vars: Vec<u32>,
    term_coeffs: Vec<f64>,
    var_offsets: Vec<u32>,
    var_terms: Vec<u32>,
}

impl IncidenceIndex {
    pub fn build(poly: &Polynomial) -> Self {
        let n = poly.num_vars();
        let nterms = poly.num_terms();
        let mut term_offsets = Vec::with_capacity(nterms + 1);
        let mut term_vars = Vec::new();
        let mut term_coeffs = Vec::with_capacity(nterms);
        term_offsets.push(0);
        let mut degree = vec![0u32; n];
        for (vars, coeff) in poly.terms() {
            term_vars.extend_from_slice(vars);
            term_offsets.push(term_vars.len() as u32);
            term_coeffs.push(coeff);
            for &v in vars {
                degree[v as usize] += 1;
            }
        }
        let mut var_offsets = Vec::with_capacity(n + 1);
        var_offsets.push(0u32);
        for d in &degree {
            let last = *var_offsets.last().unwrap();
            var_offsets.push(last + d);
        }
        let mut var_terms = vec![0u32; term_vars.len()];
        let mut cursor: Vec<u32> = var_offsets[..n].to_vec();
        for t in 0..nterms {
            let lo = term_offsets[t] as usize;
            let hi = term_offsets[t + 1] as usize;
            for &v in &term_vars[lo..hi] {
                var_terms[cursor[v as usize] as usize] = t as u32;
                cursor[v as usize] += 1;
            }
        }
        IncidenceIndex {
            n,
            domain: poly.domain(),
            constant: poly.constant(),
            term_offsets,
            term_vars,
            term_coeffs,
            var_offsets,
            var_terms,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn num_terms(&self) -> usize {
        self.term_coeffs.len()
    }

    #[inline]
    pub fn term_vars(&self, t: usize) -> &[u32] {
        let lo = self.term_offsets[t] as usize;
        let hi = self.term_offsets[t + 1] as usize;
        &self.term_vars[lo..hi]
    }

    #[inline]
    pub fn term_coeff(&self, t: usize) -> f64 {
        self.term_coeffs[t]
    }

    /// Term ids containing variable `v`.
    #[inline]
    pub fn incident(&self, v: usize) -> &[u32] {
        let lo = self.var_offsets[v] as usize;
        let hi = self.var_offsets[v + 1] as usize;
        &self.var_terms[lo..hi]
    }

    /// Number of terms variable `v` occurs in.
    pub fn degree_of(&self, v: usize) -> usize {
        self.incident(v).len()
    }

    /// Sum over terms containing `v` of |coefficient|. Scale proxy used by
    /// temperature ladder tuning.
    pub fn incident_abs_sum(&self, v: usize) -> f64 {
        self.incident(v).iter().map(|&t| self.term_coeffs[t as usize].abs()).sum()
    }

    /// Full evaluation from raw values (±1 or 0/1 matching the domain).
    pub fn evaluate_values(&self, values: &[i8]) -> f64 {
        let mut acc = self.constant;
        for t in 0..self.num_terms() {
            let mut prod = 1.0;
            for &v in self.term_vars(t) {
                prod *= values[v as usize] as f64;
            }
            acc += self.term_coeffs[t] * prod;
        }
        acc
    }
}

/// Energy change from flipping variable `v` in `config` (spin: sign flip,
/// boolean: bit toggle), computed from incident terms only.
///
/// Cost is O(sum of |term| over terms containing v); the polynomial itself
/// is never rescanned.
pub fn flip_delta(index: &IncidenceIndex, config: &Configuration, v: usize) -> Result<f64> {
    if config.domain() != index.domain() {
        return Err(Error::DomainMismatch { expected: index.domain(), got: config.domain() });
    }
    if config.len() != index.n() {
        return Err(Error::LengthMismatch { expected: index.n(), got: config.len() });
    }
    if v >= index.n() {
        return Err(Error::IndexOutOfRange { index: v, n: index.n() });
    }
    let values = config.values();
    let mut delta = 0.0;
    match index.domain() {
        Domain::Spin => {
            // flipping s_v negates every incident term
            for &t in index.incident(v) {
                let t = t as usize;
                let mut prod = index.term_coeff(t);
                for &u in index.term_vars(t) {
                    prod *= values[u as usize] as f64;
                }
                delta += -2.0 * prod;
            }
        }
        Domain::Bool => {
            // term value goes from c*x_v*rest to c*(1-x_v)*rest
            for &t in index.incident(v) {
                let t = t as usize;
                let mut rest = index.term_coeff(t);
                for &u in index.term_vars(t) {
                    if u as usize != v {
                        rest *= values[u as usize] as f64;
                    }
                }
                let xv = values[v] as f64;
                delta += rest * (1.0 - 2.0 * xv);
            }
        }
    }
    Ok(delta)
}
