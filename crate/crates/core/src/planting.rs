//! Instance generators with certified planted optima.
//!
//! Three constructions:
//!
//! * 2-local tile planting: a periodic 2D lattice is decomposed into
//!   edge-disjoint plaquettes (checkerboard), each drawn from one of four
//!   coupler classes that all share the all-up ground state. Summing the
//!   plaquette Hamiltonians keeps all-up optimal; a random gauge then hides
//!   it. Couplers take values in {-1, 1, 2} up to sign.
//! * 1-local bimodal field: H = sum h_i s_i with h_i in {-1,+1}; the
//!   planted state is s_i = -h_i with energy -n.
//! * composites: each constituent is shifted by its coefficient-sum upper
//!   bound B_i so that B_i - H_i >= 0, and the composite is
//!   -prod_i (B_i - H_i) over disjoint variables. Every factor is maximized
//!   exactly at its constituent's minimizers, so the composite is minimized
//!   exactly at the concatenation of constituent optima and its degree is
//!   the sum of constituent degrees.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::format::{InstanceMeta, PartMeta};
use crate::poly::{Configuration, Domain, Polynomial};
use crate::rng;
use crate::{Error, Result};

/// Coupler pattern on the four edges of a plaquette (cycle order), in the
/// ferromagnetic convention H_p = -sum_i J_i s_i s_{i+1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaquetteClass {
    pub label: &'static str,
    /// Couplers on cycle edges (0-1, 1-2, 2-3, 3-0).
    pub couplers: [f64; 4],
    /// Energy of the all-up state, equal to the plaquette ground energy.
    pub ground_energy: f64,
}

/// The four classes, ordered by strictly increasing frustration. C1 is
/// purely ferromagnetic; the others carry one antiferromagnetic bond that
/// can never be satisfied together with the rest, with the misfit growing
/// as the ferromagnetic bonds get weaker relative to it. C4 attains the
/// largest single-plaquette misfit possible for couplers in {-1, 1, 2}
/// with an all-up ground state.
pub const CLASSES: [PlaquetteClass; 4] = [
    PlaquetteClass { label: "C1", couplers: [1.0, 1.0, 1.0, 1.0], ground_energy: -4.0 },
    PlaquetteClass { label: "C2", couplers: [2.0, 2.0, 2.0, -1.0], ground_energy: -5.0 },
    PlaquetteClass { label: "C3", couplers: [2.0, 1.0, 1.0, -1.0], ground_energy: -3.0 },
    PlaquetteClass { label: "C4", couplers: [1.0, 1.0, 1.0, -1.0], ground_energy: -2.0 },
];

impl PlaquetteClass {
    /// Plaquette energy of a 4-spin state under this class.
    pub fn energy(&self, s: [i8; 4]) -> f64 {
        let mut e = 0.0;
        for i in 0..4 {
            e -= self.couplers[i] * (s[i] * s[(i + 1) % 4]) as f64;
        }
        e
    }

    /// Check by full enumeration of the 2^4 states that the all-up state
    /// attains the minimum and that `ground_energy` is that minimum.
    pub fn certify(&self) -> Result<()> {
        let mut min = f64::INFINITY;
        for bits in 0..16u8 {
            let s = [0, 1, 2, 3].map(|i| if bits >> i & 1 == 1 { -1i8 } else { 1 });
            min = min.min(self.energy(s));
        }
        if self.energy([1, 1, 1, 1]) != min || self.ground_energy != min {
            return Err(Error::invalid(format!(
                "plaquette class {} failed certification",
                self.label
            )));
        }
        Ok(())
    }

    /// Misfit of the plaquette ground state against the ideal bound
    /// -sum |J|: zero iff unfrustrated.
    pub fn frustration(&self) -> f64 {
        let sum: f64 = self.couplers.iter().map(|j| j.abs()).sum();
        (self.ground_energy + sum) / (2.0 * sum)
    }
}

/// Sampling weights for the four plaquette classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassProbs(pub [f64; 4]);

impl Default for ClassProbs {
    fn default() -> Self {
        ClassProbs([0.25; 4])
    }
}

impl ClassProbs {
    pub fn new(p: [f64; 4]) -> Result<Self> {
        if p.iter().any(|&x| x < 0.0) {
            return Err(Error::invalid("class probabilities must be non-negative"));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("class probabilities sum to {sum}, not 1")));
        }
        Ok(ClassProbs(p))
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in self.0.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        3
    }
}

/// A problem instance together with a configuration certified to attain its
/// minimum. The stored energy always equals `poly.evaluate(&planted)`.
#[derive(Debug, Clone)]
pub struct PlantedInstance {
    pub poly: Polynomial,
    pub planted: Configuration,
    pub planted_energy: f64,
    pub meta: InstanceMeta,
}

impl PlantedInstance {
    /// Wrap parts into an instance, checking the energy bookkeeping. The
    /// claim that `planted` is a global minimizer is the constructor's
    /// burden, not checked here.
    fn assemble(
        poly: Polynomial,
        planted: Configuration,
        expected_energy: f64,
        meta: InstanceMeta,
    ) -> Result<Self> {
        let e = poly.evaluate(&planted)?;
        let tol = 1e-9 * expected_energy.abs().max(1.0);
        if (e - expected_energy).abs() > tol {
            return Err(Error::invalid(format!(
                "planted energy mismatch: evaluated {e}, expected {expected_energy}"
            )));
        }
        Ok(PlantedInstance { poly, planted, planted_energy: e, meta })
    }

    pub fn k(&self) -> usize {
        self.poly.degree()
    }

    pub fn n(&self) -> usize {
        self.poly.num_vars()
    }
}

/// Tile-plant a periodic rows x cols lattice (both sides even, >= 2).
///
/// Every lattice edge belongs to exactly one checkerboard plaquette, each
/// drawn independently from `probs`. For sides >= 4 all 2*rows*cols edge
/// slots are distinct pairs, so the polynomial has exactly that many
/// quadratic terms; for a side of 2 the periodic wrap doubles up pairs and
/// the duplicate slots merge (possibly cancelling).
pub fn plant_tile(
    rows: usize,
    cols: usize,
    probs: ClassProbs,
    seed: u64,
) -> Result<PlantedInstance> {
    if rows < 2 || cols < 2 || rows % 2 != 0 || cols % 2 != 0 {
        return Err(Error::invalid(format!(
            "tile sides must be even and >= 2, got {rows}x{cols}"
        )));
    }
    for class in &CLASSES {
        class.certify()?;
    }
    let n = rows * cols;
    let mut rng = rng::stream(seed, &[rows as u64, cols as u64]);
    let gauge: Vec<i8> = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    let vertex = |r: usize, c: usize| (r % rows) * cols + (c % cols);
    let mut poly = Polynomial::new(Domain::Spin, n);
    let mut ground = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            if (r + c) % 2 != 0 {
                continue;
            }
            let class = &CLASSES[probs.sample(&mut rng)];
            let corners =
                [vertex(r, c), vertex(r, c + 1), vertex(r + 1, c + 1), vertex(r + 1, c)];
            for (i, &j) in class.couplers.iter().enumerate() {
                let a = corners[i];
                let b = corners[(i + 1) % 4];
                let sign = (gauge[a] * gauge[b]) as f64;
                poly.add_term(&[a as u32, b as u32], -j * sign)?;
            }
            ground += class.ground_energy;
        }
    }
    let planted = Configuration::new(Domain::Spin, gauge)?;
    let mut meta = InstanceMeta::new("tile", 2, seed);
    meta.parts.push(PartMeta::Tile { rows, cols });
    meta.class_probs = Some(probs.0.to_vec());
    PlantedInstance::assemble(poly, planted, ground, meta)
}

/// Square tile, side `l` (even, >= 2).
pub fn plant_square_tile(l: usize, probs: ClassProbs, seed: u64) -> Result<PlantedInstance> {
    plant_tile(l, l, probs, seed)
}

/// Bimodal random field on `m` spins: H = sum h_i s_i, h_i in {-1,+1}.
/// Planted state s_i = -h_i, energy -m.
pub fn plant_field(m: usize, seed: u64) -> Result<PlantedInstance> {
    if m == 0 {
        return Err(Error::invalid("field instance needs at least one spin"));
    }
    let mut rng = rng::stream(seed, &[m as u64]);
    let mut poly = Polynomial::new(Domain::Spin, m);
    let mut planted = Vec::with_capacity(m);
    for i in 0..m {
        let h: f64 = if rng.random::<bool>() { 1.0 } else { -1.0 };
        poly.add_term(&[i as u32], h)?;
        planted.push(-h as i8);
    }
    let planted = Configuration::new(Domain::Spin, planted)?;
    let mut meta = InstanceMeta::new("field", 1, seed);
    meta.parts.push(PartMeta::Field { size: m });
    PlantedInstance::assemble(poly, planted, -(m as f64), meta)
}

/// Combine certified parts into one higher-order instance.
///
/// Variables are relabeled onto disjoint ranges in part order. With
/// B_i = constant_i + sum|c_i| >= max H_i, the composite is
/// -prod_i (B_i - H_i): non-positive everywhere and minimal exactly where
/// every constituent is minimal, i.e. at the concatenated planted state.
/// The composite degree is the sum of part degrees (leading coefficients
/// multiply across disjoint variable sets, so they cannot cancel).
pub fn compose(parts: &[&PlantedInstance]) -> Result<PlantedInstance> {
    if parts.is_empty() {
        return Err(Error::invalid("compose needs at least one part"));
    }
    let n_total: usize = parts.iter().map(|p| p.n()).sum();
    let mut product: Option<Polynomial> = None;
    let mut offset = 0u32;
    let mut expected = -1.0;
    let mut degree_sum = 0;
    for part in parts {
        if part.poly.domain() != Domain::Spin {
            return Err(Error::DomainMismatch {
                expected: Domain::Spin,
                got: part.poly.domain(),
            });
        }
        let bound = part.poly.value_upper_bound();
        expected *= bound - part.planted_energy;
        degree_sum += part.poly.degree();
        // factor = B - H, relabeled into the composite variable space
        let mut factor = part.poly.offset_vars(offset, n_total)?;
        factor.scale(-1.0);
        factor.add_constant(bound);
        product = Some(match product {
            None => factor,
            Some(acc) => acc.mul(&factor)?,
        });
        offset += part.n() as u32;
    }
    let mut poly = product.expect("at least one part");
    poly.scale(-1.0);
    if poly.degree() != degree_sum {
        return Err(Error::invalid(format!(
            "composite degree {} != sum of part degrees {degree_sum}",
            poly.degree()
        )));
    }
    let planted =
        Configuration::concat(&parts.iter().map(|p| &p.planted).collect::<Vec<_>>())?;
    let k = degree_sum as u32;
    let mut meta = InstanceMeta::new("composite", k, parts[0].meta.seed);
    for part in parts {
        meta.parts.extend(part.meta.parts.iter().cloned());
        if meta.class_probs.is_none() {
            meta.class_probs = part.meta.class_probs.clone();
        }
    }
    PlantedInstance::assemble(poly, planted, expected, meta)
}

/// Re-gauge a spin instance: coefficients pick up the sign prod_v t_v over
/// their variables and the planted state flips with t. Energies of
/// corresponding configurations, the planted energy in particular, are
/// unchanged.
pub fn gauge_randomize(inst: &PlantedInstance, seed: u64) -> Result<PlantedInstance> {
    if inst.poly.domain() != Domain::Spin {
        return Err(Error::DomainMismatch { expected: Domain::Spin, got: inst.poly.domain() });
    }
    let n = inst.n();
    let mut rng = rng::stream(seed, &[n as u64, 1]);
    let gauge: Vec<i8> = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    let mut poly = Polynomial::new(Domain::Spin, n);
    poly.set_constant(inst.poly.constant());
    for (vars, c) in inst.poly.terms() {
        let sign: f64 = vars.iter().map(|&v| gauge[v as usize] as f64).product();
        poly.add_term(vars, c * sign)?;
    }
    let planted = Configuration::new(
        Domain::Spin,
        inst.planted.values().iter().zip(&gauge).map(|(&s, &t)| s * t).collect(),
    )?;
    PlantedInstance::assemble(poly, planted, inst.planted_energy, inst.meta.clone())
}

/// Constituent layout for a 3-local instance of `n` total variables:
/// the largest even-sided lattice (aspect ratio at most 3) plus a bimodal
/// field on the remainder.
pub fn split_k3(n: usize) -> Result<(usize, usize, usize)> {
    for v in (4..n).rev() {
        if let Some((r, c)) = balanced_even_rect(v) {
            return Ok((r, c, n - v));
        }
    }
    Err(Error::invalid(format!("no 3-local split for n={n}")))
}

/// Constituent layout for a 4-local instance: two equal even-sided lattices
/// of n/2 sites each.
pub fn split_k4(n: usize) -> Result<(usize, usize)> {
    if n % 2 != 0 {
        return Err(Error::invalid(format!("4-local split needs even n, got {n}")));
    }
    balanced_even_rect(n / 2)
        .ok_or_else(|| Error::invalid(format!("no even-sided lattice with {} sites", n / 2)))
}

/// Most balanced factorization v = r * c with r <= c, both even, c <= 3r.
fn balanced_even_rect(v: usize) -> Option<(usize, usize)> {
    let mut r = (v as f64).sqrt() as usize;
    if r % 2 == 1 {
        r -= 1;
    }
    while r >= 2 {
        if v % r == 0 {
            let c = v / r;
            if c % 2 == 0 && c <= 3 * r {
                return Some((r, c));
            }
        }
        r -= 2;
    }
    None
}

/// Generate `count` instances of locality `k` (3 or 4) on `n` variables.
/// Instance i is fully determined by (master_seed, k, n, i).
pub fn generate_benchmark_set(
    k: usize,
    n: usize,
    count: usize,
    probs: ClassProbs,
    master_seed: u64,
) -> Result<Vec<PlantedInstance>> {
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        out.push(generate_instance(k, n, probs, master_seed, i)?);
    }
    Ok(out)
}

/// Single member of a benchmark set; see [`generate_benchmark_set`].
pub fn generate_instance(
    k: usize,
    n: usize,
    probs: ClassProbs,
    master_seed: u64,
    index: usize,
) -> Result<PlantedInstance> {
    let seed = rng::derive(master_seed, &[k as u64, n as u64, index as u64]);
    let mut inst = match k {
        3 => {
            let (rows, cols, m) = split_k3(n)?;
            let tile = plant_tile(rows, cols, probs, rng::derive(seed, &[0]))?;
            let field = plant_field(m, rng::derive(seed, &[1]))?;
            compose(&[&tile, &field])?
        }
        4 => {
            let (rows, cols) = split_k4(n)?;
            let t1 = plant_tile(rows, cols, probs, rng::derive(seed, &[0]))?;
            let t2 = plant_tile(rows, cols, probs, rng::derive(seed, &[1]))?;
            compose(&[&t1, &t2])?
        }
        _ => {
            return Err(Error::invalid(format!(
                "benchmark sets cover localities 3 and 4, got {k}"
            )))
        }
    };
    inst.meta.seed = seed;
    inst.meta.k = k as u32;
    Ok(inst)
}
