//! Distance estimation and confinement profiles.
//!
//! Distance is estimated by randomised information-set search: each trial
//! row-reduces a generator matrix of the relevant kernel with a random
//! pivot order and inspects the reduced rows and their pairwise sums.
//! The confidence bound `exp(-hits)` counts how many trials reached the
//! final minimum.
//!
//! Confinement enumerates every same-sector error up to a weight limit and
//! keeps those of minimal weight in their stabiliser coset.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::random_a_matrix;
use crate::error::{Error, Result};
use crate::gf2::{xor_words, BinaryMatrix, BinaryVector, RowSpace};
use crate::quantum::{lifted_product, Basis, RadialCssCode};
use crate::seeds;

/// Default cap on the number of enumerated errors in a confinement run.
pub const DEFAULT_ENUMERATION_LIMIT: u128 = 200_000_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub sector: Option<Basis>,
    pub d_est: usize,
    /// Trials whose best logical had weight `d_est`.
    pub hits: usize,
    pub trials: usize,
    pub p_fail_bound: f64,
    pub witness: Vec<usize>,
}

/// Best candidate found in one trial of at most `cap` weight.
fn trial_minimum<F>(
    generators: &[BinaryVector],
    n: usize,
    cap: usize,
    seed: u64,
    is_logical: &F,
) -> Option<BinaryVector>
where
    F: Fn(&BinaryVector) -> bool,
{
    let mut rng = seeds::stream(seed, 0);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut rows = generators.to_vec();
    let mut rank = 0;
    for &col in &order {
        let Some(p) = (rank..rows.len()).find(|&i| rows[i].get(col)) else {
            continue;
        };
        rows.swap(rank, p);
        let (before, rest) = rows.split_at_mut(rank);
        let (pivot, after) = rest.split_first_mut().expect("pivot row exists");
        for row in before.iter_mut().chain(after.iter_mut()) {
            if row.get(col) {
                row.xor_assign(pivot);
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }

    // the first hit may equal the cap, later ones must improve on it
    let mut best: Option<BinaryVector> = None;
    let mut bound = cap;
    let offer = |v: BinaryVector, best: &mut Option<BinaryVector>, bound: &mut usize| {
        let w = v.weight();
        let admissible = if best.is_some() { w < *bound } else { w <= *bound };
        if w > 0 && admissible && is_logical(&v) {
            *bound = w;
            *best = Some(v);
        }
    };
    for row in &rows {
        offer(row.clone(), &mut best, &mut bound);
    }
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            // weight screen before allocating the sum
            let w: usize = rows[i]
                .words()
                .iter()
                .zip(rows[j].words())
                .map(|(a, b)| (a ^ b).count_ones() as usize)
                .sum();
            if w <= bound {
                offer(&rows[i] ^ &rows[j], &mut best, &mut bound);
            }
        }
    }
    best
}

fn search<F>(
    generators: &[BinaryVector],
    n: usize,
    cap: usize,
    trials: usize,
    seed: u64,
    is_logical: F,
) -> Result<(usize, usize, BinaryVector)>
where
    F: Fn(&BinaryVector) -> bool + Sync,
{
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    let found: Vec<Option<BinaryVector>> = (0..trials)
        .into_par_iter()
        .map(|t| trial_minimum(generators, n, cap, seeds::derive(seed, t as u64), &is_logical))
        .collect();
    let best = found
        .iter()
        .flatten()
        .min_by_key(|v| v.weight())
        .cloned()
        .ok_or(Error::NoLogicalFound { trials })?;
    let d = best.weight();
    let hits = found.iter().flatten().filter(|v| v.weight() == d).count();
    Ok((d, hits, best))
}

/// Estimates the minimum weight of a logical operator of type `sector`.
///
/// The result never exceeds the canonical bound `2s`: if no trial finds a
/// lighter logical a canonical one is reported as witness.
pub fn estimate_distance(
    code: &RadialCssCode,
    sector: Basis,
    trials: usize,
    seed: u64,
) -> Result<DistanceEstimate> {
    if code.logicals(sector).is_empty() {
        return Err(Error::NoLogicalFound { trials });
    }
    let generators = code.detecting_checks(sector).nullspace_basis();
    let stabilisers = RowSpace::new(code.stabilisers(sector));
    let cap = code.d_upper();
    let (d, hits, witness) = match search(&generators, code.n(), cap, trials, seed, |v| {
        !stabilisers.contains(v)
    }) {
        Ok(found) => found,
        Err(Error::NoLogicalFound { .. }) => (cap, 0, code.logicals(sector)[0].clone()),
        Err(e) => return Err(e),
    };
    Ok(DistanceEstimate {
        sector: Some(sector),
        d_est: d,
        hits,
        trials,
        p_fail_bound: (-(hits as f64)).exp(),
        witness: witness.support(),
    })
}

/// Same search for a classical code: the minimum weight of a nonzero
/// codeword of `h`.
pub fn estimate_classical_distance(
    h: &BinaryMatrix,
    trials: usize,
    seed: u64,
) -> Result<DistanceEstimate> {
    let generators = h.nullspace_basis();
    let (d, hits, witness) = search(&generators, h.cols(), h.cols(), trials, seed, |_| true)?;
    Ok(DistanceEstimate {
        sector: None,
        d_est: d,
        hits,
        trials,
        p_fail_bound: (-(hits as f64)).exp(),
        witness: witness.support(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfinementRow {
    pub w: usize,
    /// `None` when no error of this weight is irreducible.
    pub min_syndrome: Option<usize>,
    pub avg_syndrome: Option<f64>,
    pub irreducible_count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfinementProfile {
    /// Type of the enumerated errors; syndromes come from the opposite checks.
    pub sector: Basis,
    pub rows: Vec<ConfinementRow>,
}

impl ConfinementProfile {
    pub fn min_syndromes(&self) -> Vec<Option<usize>> {
        self.rows.iter().map(|r| r.min_syndrome).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("w,min_syndrome,avg_syndrome,irreducible_count\n");
        for r in &self.rows {
            let min = r.min_syndrome.map(|m| m.to_string()).unwrap_or_default();
            let avg = r.avg_syndrome.map(|a| format!("{a:.6}")).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", r.w, min, avg, r.irreducible_count);
        }
        out
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

pub fn confinement_profile(
    code: &RadialCssCode,
    sector: Basis,
    w_max: usize,
) -> Result<ConfinementProfile> {
    confinement_profile_with_limit(code, sector, w_max, DEFAULT_ENUMERATION_LIMIT)
}

/// Enumerates errors by increasing weight; an error is irreducible unless a
/// strictly lighter error has the same syndrome and logical class.
pub fn confinement_profile_with_limit(
    code: &RadialCssCode,
    sector: Basis,
    w_max: usize,
    limit: u128,
) -> Result<ConfinementProfile> {
    let n = code.n();
    let mut needed = 0u128;
    for w in 0..=w_max {
        needed += binomial(n, w);
        if needed > limit {
            return Err(Error::BudgetExceeded {
                weight: w,
                needed,
                limit,
            });
        }
    }

    // Per-qubit key: syndrome column followed by the pairing with each
    // opposite logical.
    let checks = code.detecting_checks(sector);
    let opposite = code.logicals(sector.opposite());
    let m = checks.rows();
    let key_bits = m + opposite.len();
    let key_words = key_bits.div_ceil(64);
    let syn_words = m.div_ceil(64);
    let mut keys = vec![0u64; n * key_words];
    for q in 0..n {
        let key = &mut keys[q * key_words..(q + 1) * key_words];
        for i in 0..m {
            if checks.get(i, q) {
                key[i / 64] |= 1 << (i % 64);
            }
        }
        for (j, l) in opposite.iter().enumerate() {
            if l.get(q) {
                let b = m + j;
                key[b / 64] |= 1 << (b % 64);
            }
        }
    }
    let syndrome_weight = |key: &[u64]| -> usize {
        let mut w = 0;
        for (i, &word) in key[..syn_words].iter().enumerate() {
            let masked = if i == syn_words - 1 && m % 64 != 0 {
                word & ((1u64 << (m % 64)) - 1)
            } else {
                word
            };
            w += masked.count_ones() as usize;
        }
        w
    };

    let mut lighter: HashSet<Box<[u64]>> = HashSet::new();
    lighter.insert(vec![0u64; key_words].into_boxed_slice());
    let mut rows = Vec::with_capacity(w_max);
    for w in 1..=w_max {
        let mut this_weight: Vec<Box<[u64]>> = Vec::new();
        let (mut count, mut min, mut total) = (0u64, usize::MAX, 0u128);
        let keep = w < w_max;
        // iterative combination enumeration with prefix XORs
        let mut idx: Vec<usize> = (0..w).collect();
        let mut prefix = vec![0u64; (w + 1) * key_words];
        let refresh = |prefix: &mut [u64], idx: &[usize], from: usize| {
            for d in from..idx.len() {
                let (lo, hi) = prefix.split_at_mut((d + 1) * key_words);
                hi[..key_words].copy_from_slice(&lo[d * key_words..]);
                xor_words(
                    &mut hi[..key_words],
                    &keys[idx[d] * key_words..(idx[d] + 1) * key_words],
                );
            }
        };
        if w <= n {
            refresh(&mut prefix, &idx, 0);
            loop {
                let key = &prefix[w * key_words..(w + 1) * key_words];
                if !lighter.contains(key) {
                    let sw = syndrome_weight(key);
                    count += 1;
                    min = min.min(sw);
                    total += sw as u128;
                    if keep {
                        this_weight.push(key.into());
                    }
                }
                // advance to the next combination
                let mut d = w;
                while d > 0 && idx[d - 1] == n - w + d - 1 {
                    d -= 1;
                }
                if d == 0 {
                    break;
                }
                idx[d - 1] += 1;
                for e in d..w {
                    idx[e] = idx[e - 1] + 1;
                }
                refresh(&mut prefix, &idx, d - 1);
            }
        }
        lighter.extend(this_weight);
        rows.push(ConfinementRow {
            w,
            min_syndrome: (count > 0).then_some(min),
            avg_syndrome: (count > 0).then(|| total as f64 / count as f64),
            irreducible_count: count,
        });
    }
    Ok(ConfinementProfile { sector, rows })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AverageDistance {
    pub r: usize,
    pub s: usize,
    pub distinct: bool,
    pub distances: Vec<usize>,
    pub mean: f64,
    /// Standard error of the mean; 0 with `stderr_defined = false` for one code.
    pub stderr: f64,
    pub stderr_defined: bool,
}

impl AverageDistance {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,s,distinct,index,d_est\n");
        for (i, d) in self.distances.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{},{}", self.r, self.s, self.distinct, i, d);
        }
        out
    }
}

/// Mean estimated distance over `count` random codes. With `distinct` the
/// two classical codes are sampled independently, otherwise `A1 = A2`.
/// Each code's distance is the smaller of its two sector estimates.
pub fn average_distance_experiment(
    r: usize,
    s: usize,
    count: usize,
    trials: usize,
    distinct: bool,
    seed: u64,
) -> Result<AverageDistance> {
    if count == 0 {
        return Err(Error::InvalidInput("count must be at least 1".into()));
    }
    let mut rng = seeds::stream(seed, u64::MAX);
    let mut distances = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while distances.len() < count {
        attempts += 1;
        if attempts > 100 * count {
            return Err(Error::SamplingBudget { r, s, attempts });
        }
        let a1 = random_a_matrix(r, s, &mut rng)?;
        let a2 = if distinct {
            random_a_matrix(r, s, &mut rng)?
        } else {
            a1.clone()
        };
        let code = match lifted_product(&a1, &a2) {
            Ok(code) => code,
            Err(Error::Construction(_)) => continue,
            Err(e) => return Err(e),
        };
        let code_seed: u64 = rng.gen();
        let dx = estimate_distance(&code, Basis::X, trials, code_seed)?.d_est;
        let dz = estimate_distance(&code, Basis::Z, trials, code_seed ^ 1)?.d_est;
        distances.push(dx.min(dz));
    }
    let mean = distances.iter().sum::<usize>() as f64 / count as f64;
    let (stderr, stderr_defined) = if count > 1 {
        let var = distances
            .iter()
            .map(|&d| (d as f64 - mean).powi(2))
            .sum::<f64>()
            / (count - 1) as f64;
        ((var / count as f64).sqrt(), true)
    } else {
        (0.0, false)
    };
    Ok(AverageDistance {
        r,
        s,
        distinct,
        distances,
        mean,
        stderr,
        stderr_defined,
    })
}
