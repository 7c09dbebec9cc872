//! Reduction of higher-order boolean polynomials to quadratic form.
//!
//! Each step replaces a variable pair (a, b) with a fresh auxiliary y
//! inside every rewritten term and adds the penalty
//! C (x_a x_b - 2 x_a y - 2 x_b y + 3 y), which is zero when y = x_a x_b
//! and at least C otherwise. With C larger than the total coefficient
//! mass the aux is pinned to the product at every minimizer, so minima
//! are preserved and solutions can be lifted and projected losslessly.
//!
//! Auxiliary dictionaries are scoped by the original degree of the terms
//! being rewritten: terms that entered at different degrees never share
//! an aux, and rewritten terms keep using the dictionary of the degree
//! they came from. Pair selection is most-frequent-first within the
//! scope, ties broken lexicographically, so reductions are deterministic
//! and replayable from the substitution list alone.

use std::collections::BTreeMap;

use crate::format::ReductionManifest;
use crate::planting::PlantedInstance;
use crate::poly::{Configuration, Domain, Polynomial};
use crate::{Error, Result};

/// How penalty coefficients are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyStrategy {
    /// One coefficient for every substitution: total |coeff| mass of the
    /// input polynomial plus one.
    Global,
    /// Per substitution: |coeff| mass of the terms being rewritten plus
    /// one. Never larger than the global coefficient.
    PerTermTight,
}

impl PenaltyStrategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            PenaltyStrategy::Global => "rosenberg_global",
            PenaltyStrategy::PerTermTight => "per_term_tight",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rosenberg_global" => Ok(PenaltyStrategy::Global),
            "per_term_tight" => Ok(PenaltyStrategy::PerTermTight),
            other => Err(Error::invalid(format!("unknown penalty strategy '{other}'"))),
        }
    }
}

/// One pair substitution: aux = x_a * x_b, enforced with weight `penalty`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Substitution {
    pub a: u32,
    pub b: u32,
    pub aux: u32,
    pub penalty: f64,
}

/// Outcome of a reduction: the quadratic polynomial plus everything
/// needed to move solutions between the original and extended spaces.
#[derive(Debug, Clone)]
pub struct ReductionResult {
    pub qubo: Polynomial,
    pub substitutions: Vec<Substitution>,
    pub n_original: usize,
    pub n_total: usize,
    pub strategy: PenaltyStrategy,
}

impl ReductionResult {
    pub fn manifest(&self) -> ReductionManifest {
        ReductionManifest {
            strategy: self.strategy.as_str().to_string(),
            substitutions: self
                .substitutions
                .iter()
                .map(|s| (s.a, s.b, s.aux, s.penalty))
                .collect(),
            n_original: self.n_original as u32,
            n_total: self.n_total as u32,
        }
    }
}

/// Penalty coefficient that dominates the whole polynomial: sum of |coeff|
/// over all non-constant terms, plus one.
pub fn penalty_global(poly: &Polynomial) -> f64 {
    poly.sum_abs_coeff() + 1.0
}

/// Penalty coefficient that dominates just the terms a substitution of
/// (a, b) would rewrite: sum of |coeff| over degree > 2 terms containing
/// both variables, plus one. Errors if no such term exists.
pub fn penalty_tight(poly: &Polynomial, a: u32, b: u32) -> Result<f64> {
    let mut sum = 0.0;
    let mut found = false;
    for (vars, c) in poly.terms() {
        if vars.len() > 2 && vars.contains(&a) && vars.contains(&b) {
            sum += c.abs();
            found = true;
        }
    }
    if !found {
        return Err(Error::invalid(format!(
            "pair ({a}, {b}) occurs in no term of degree > 2"
        )));
    }
    Ok(sum + 1.0)
}

/// The pair occurring in the most degree > 2 terms, ties broken by
/// lexicographic order on (a, b). Errors if the polynomial is already
/// quadratic.
pub fn select_pair(poly: &Polynomial) -> Result<(u32, u32)> {
    best_pair(poly.terms().filter(|(vars, _)| vars.len() > 2).map(|(vars, _)| vars))
        .ok_or_else(|| Error::invalid("no terms of degree > 2"))
}

fn best_pair<'a>(terms: impl Iterator<Item = &'a [u32]>) -> Option<(u32, u32)> {
    let mut counts: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for vars in terms {
        for i in 0..vars.len() {
            for j in i + 1..vars.len() {
                *counts.entry((vars[i], vars[j])).or_insert(0) += 1;
            }
        }
    }
    // BTreeMap iterates pairs in lexicographic order, so the first
    // maximum is the tie-break winner.
    let mut best: Option<((u32, u32), usize)> = None;
    for (&pair, &count) in &counts {
        if best.map_or(true, |(_, c)| count > c) {
            best = Some((pair, count));
        }
    }
    best.map(|(pair, _)| pair)
}

/// Reduce a boolean polynomial to degree <= 2 by iterated pair
/// substitution. Quadratic input passes through unchanged with an empty
/// substitution list. Spin input is rejected; convert first.
pub fn reduce_to_quadratic(
    poly: &Polynomial,
    strategy: PenaltyStrategy,
) -> Result<ReductionResult> {
    if poly.domain() != Domain::Bool {
        return Err(Error::DomainMismatch { expected: Domain::Bool, got: poly.domain() });
    }
    let n_original = poly.num_vars();
    let global_c = penalty_global(poly);

    // Partition by original degree; quadratic and lower pass through.
    let mut passthrough: Vec<(Box<[u32]>, f64)> = Vec::new();
    let mut classes: BTreeMap<usize, BTreeMap<Box<[u32]>, f64>> = BTreeMap::new();
    for (vars, c) in poly.terms() {
        if vars.len() <= 2 {
            passthrough.push((vars.into(), c));
        } else {
            classes.entry(vars.len()).or_default().insert(vars.into(), c);
        }
    }

    let mut next_aux = n_original as u32;
    let mut subs: Vec<Substitution> = Vec::new();
    let mut penalty_terms: Vec<(Box<[u32]>, f64)> = Vec::new();
    for (_, class) in classes.iter_mut().rev() {
        loop {
            let Some((a, b)) = best_pair(class.keys().filter(|v| v.len() > 2).map(|v| &**v))
            else {
                break;
            };
            let rewrite: Vec<Box<[u32]>> = class
                .keys()
                .filter(|v| v.len() > 2 && v.contains(&a) && v.contains(&b))
                .cloned()
                .collect();
            let penalty = match strategy {
                PenaltyStrategy::Global => global_c,
                PenaltyStrategy::PerTermTight => {
                    rewrite.iter().map(|v| class[v].abs()).sum::<f64>() + 1.0
                }
            };
            let aux = next_aux;
            next_aux += 1;
            subs.push(Substitution { a, b, aux, penalty });
            penalty_terms.push((Box::from([a, b]), penalty));
            penalty_terms.push((Box::from([a.min(aux), a.max(aux)]), -2.0 * penalty));
            penalty_terms.push((Box::from([b.min(aux), b.max(aux)]), -2.0 * penalty));
            penalty_terms.push((Box::from([aux]), 3.0 * penalty));
            for old in rewrite {
                let c = class.remove(&old).expect("term present");
                // stays sorted: aux exceeds every id allocated so far
                let vars: Box<[u32]> = old
                    .iter()
                    .copied()
                    .filter(|&v| v != a && v != b)
                    .chain(std::iter::once(aux))
                    .collect();
                let merged = class.get(&vars).copied().unwrap_or(0.0) + c;
                if merged == 0.0 {
                    class.remove(&vars);
                } else {
                    class.insert(vars, merged);
                }
            }
        }
    }

    let n_total = next_aux as usize;
    let mut qubo = Polynomial::new(Domain::Bool, n_total);
    qubo.set_constant(poly.constant());
    for (vars, c) in passthrough {
        qubo.add_term(&vars, c)?;
    }
    for class in classes.values() {
        for (vars, &c) in class {
            debug_assert!(vars.len() <= 2);
            qubo.add_term(vars, c)?;
        }
    }
    for (vars, c) in penalty_terms {
        qubo.add_term(&vars, c)?;
    }
    if qubo.degree() > 2 {
        return Err(Error::invalid("reduction left terms of degree > 2"));
    }
    Ok(ReductionResult { qubo, substitutions: subs, n_original, n_total, strategy })
}

/// Extend a configuration over the original variables to the full space
/// by replaying each substitution: aux = x_a * x_b. Pairs may reference
/// earlier aux variables; order makes that well defined.
pub fn lift_solution(red: &ReductionResult, config: &Configuration) -> Result<Configuration> {
    if config.domain() != Domain::Bool {
        return Err(Error::DomainMismatch { expected: Domain::Bool, got: config.domain() });
    }
    if config.len() != red.n_original {
        return Err(Error::LengthMismatch { expected: red.n_original, got: config.len() });
    }
    let mut values = config.values().to_vec();
    values.resize(red.n_total, 0);
    for s in &red.substitutions {
        values[s.aux as usize] = values[s.a as usize] * values[s.b as usize];
    }
    Configuration::new(Domain::Bool, values)
}

/// Keep just the original-variable prefix of a full-space configuration.
pub fn project_solution(red: &ReductionResult, config: &Configuration) -> Result<Configuration> {
    if config.domain() != Domain::Bool {
        return Err(Error::DomainMismatch { expected: Domain::Bool, got: config.domain() });
    }
    if config.len() != red.n_total {
        return Err(Error::LengthMismatch { expected: red.n_total, got: config.len() });
    }
    Configuration::new(Domain::Bool, config.values()[..red.n_original].to_vec())
}

/// A planted instance together with the reduction that produced it.
#[derive(Debug, Clone)]
pub struct ReducedInstance {
    pub instance: PlantedInstance,
    pub reduction: ReductionResult,
    pub source_k: usize,
}

/// Reduce a higher-order spin instance to a quadratic spin instance.
///
/// The polynomial is converted to boolean form, reduced, and converted
/// back, so solvers see a uniform spin representation; the planted
/// configuration is lifted along the substitutions and keeps its energy
/// exactly (coefficients stay dyadic throughout).
pub fn reduce_instance(
    inst: &PlantedInstance,
    strategy: PenaltyStrategy,
) -> Result<ReducedInstance> {
    let source_k = inst.poly.degree();
    if source_k <= 2 {
        return Err(Error::invalid(format!(
            "instance is already {source_k}-local; nothing to reduce"
        )));
    }
    let boolean = inst.poly.to_boolean()?;
    let red = reduce_to_quadratic(&boolean, strategy)?;
    let spin_qubo = red.qubo.to_spin()?;
    let lifted = lift_solution(&red, &inst.planted.to_bool())?.to_spin();
    let energy = spin_qubo.evaluate(&lifted)?;
    let tol = 1e-9 * inst.planted_energy.abs().max(1.0);
    if (energy - inst.planted_energy).abs() > tol {
        return Err(Error::invalid(format!(
            "lifted planted energy {energy} differs from original {}",
            inst.planted_energy
        )));
    }
    let mut meta = inst.meta.clone();
    meta.generator = format!("{}-reduced", meta.generator);
    let instance = PlantedInstance {
        poly: spin_qubo,
        planted: lifted,
        planted_energy: inst.planted_energy,
        meta,
    };
    Ok(ReducedInstance { instance, reduction: red, source_k })
}
