//! Exhaustive minimization over all 2^n assignments.
//!
//! Gray-code enumeration touches one variable per step, so each step costs
//! O(deg(v)) via the incidence index instead of a full re-evaluation. Exact
//! for integer and dyadic-rational coefficients (the arithmetic stays in the
//! exactly-representable range of f64); arbitrary float coefficients may
//! accumulate rounding in ties.

use crate::incidence::IncidenceIndex;
use crate::poly::{Configuration, Polynomial};
use crate::{Error, Result};

pub const DEFAULT_CAP: usize = 24;

/// Result of exhaustive search: the minimum and every attaining assignment.
#[derive(Debug, Clone)]
pub struct GroundSet {
    pub energy: f64,
    pub configs: Vec<Configuration>,
}

impl GroundSet {
    pub fn contains(&self, config: &Configuration) -> bool {
        self.configs.iter().any(|c| c == config)
    }
}

/// Enumerate all assignments and return the exact ground set.
/// Refuses instances with more than `cap` variables.
pub fn brute_force(poly: &Polynomial, cap: usize) -> Result<GroundSet> {
    let n = poly.num_vars();
    if n > cap {
        return Err(Error::BruteForceCap { n, cap });
    }
    if n == 0 {
        return Ok(GroundSet {
            energy: poly.constant(),
            configs: vec![Configuration::new(poly.domain(), vec![])?],
        });
    }
    let ix = IncidenceIndex::build(poly);
    let domain = poly.domain();
    let mut values = Configuration::from_bits(domain, 0, n).values().to_vec();
    let mut energy = ix.evaluate_values(&values);
    let mut best = energy;
    let mut best_bits: Vec<u64> = vec![0];
    let mut gray: u64 = 0;
    for step in 1..(1u64 << n) {
        let v = step.trailing_zeros() as usize;
        // incremental flip of variable v
        let mut delta = 0.0;
        match domain {
            crate::poly::Domain::Spin => {
                for &t in ix.incident(v) {
                    let t = t as usize;
                    let mut prod = ix.term_coeff(t);
                    for &u in ix.term_vars(t) {
                        prod *= values[u as usize] as f64;
                    }
                    delta += -2.0 * prod;
                }
                values[v] = -values[v];
            }
            crate::poly::Domain::Bool => {
                for &t in ix.incident(v) {
                    let t = t as usize;
                    let mut rest = ix.term_coeff(t);
                    for &u in ix.term_vars(t) {
                        if u as usize != v {
                            rest *= values[u as usize] as f64;
                        }
                    }
                    delta += rest * (1.0 - 2.0 * values[v] as f64);
                }
                values[v] = 1 - values[v];
            }
        }
        energy += delta;
        gray ^= 1 << v;
        if energy < best {
            // re-derive exactly at a new minimum to cancel any drift
            energy = ix.evaluate_values(&values);
            if energy < best {
                best = energy;
                best_bits.clear();
                best_bits.push(gray);
            } else if energy == best {
                best_bits.push(gray);
            }
        } else if energy == best {
            best_bits.push(gray);
        }
    }
    let configs = best_bits
        .into_iter()
        .map(|bits| {
            let mut vals = vec![0i8; n];
            for (i, val) in vals.iter_mut().enumerate() {
                let set = bits >> i & 1 == 1;
                *val = match domain {
                    crate::poly::Domain::Spin => {
                        if set {
                            -1
                        } else {
                            1
                        }
                    }
                    crate::poly::Domain::Bool => set as i8,
                };
            }
            Configuration::new(domain, vals).expect("values constructed in-domain")
        })
        .collect();
    Ok(GroundSet { energy: best, configs })
}

/// Reference minimizer: full evaluation of every assignment, no increments.
/// Slow; exists as an independent oracle for testing `brute_force`.
pub fn exhaustive_minimum(poly: &Polynomial, cap: usize) -> Result<(f64, u64)> {
    let n = poly.num_vars();
    if n > cap {
        return Err(Error::BruteForceCap { n, cap });
    }
    let mut best = f64::INFINITY;
    let mut count = 0u64;
    for bits in 0..(1u64 << n) {
        let c = Configuration::from_bits(poly.domain(), bits, n);
        let e = poly.evaluate(&c)?;
        if e < best {
            best = e;
            count = 1;
        } else if e == best {
            count += 1;
        }
    }
    Ok((best, count))
}
