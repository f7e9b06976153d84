use proptest::prelude::*;
use radial_qec::analysis::{
    confinement_profile, estimate_classical_distance, estimate_distance, ConfinementRow,
};
use radial_qec::classical::{binary_pcm, random_a_matrix};
use radial_qec::gf2::{BinaryMatrix, BinaryVector};
use radial_qec::quantum::{preset, Basis, RadialCssCode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Every element of the row space of `h`.
fn span(h: &BinaryMatrix) -> Vec<BinaryVector> {
    let rows: Vec<BinaryVector> = (0..h.rows()).map(|i| h.row(i)).collect();
    let mut out = vec![BinaryVector::zeros(h.cols())];
    for row in rows {
        if out.iter().any(|v| v == &row) {
            continue;
        }
        let extra: Vec<BinaryVector> = out.iter().map(|v| v ^ &row).collect();
        out.extend(extra);
        out.sort_by_key(|v| v.support());
        out.dedup();
    }
    out
}

/// Direct definition: an error is irreducible iff no stabiliser lowers its
/// weight.
fn coset_oracle(code: &RadialCssCode, sector: Basis, w_max: usize) -> Vec<ConfinementRow> {
    let n = code.n();
    let group = span(code.stabilisers(sector));
    let checks = code.detecting_checks(sector);
    let mut rows = Vec::new();
    for w in 1..=w_max {
        let (mut count, mut min, mut total) = (0u64, usize::MAX, 0usize);
        for mask in 0u64..1 << n {
            if mask.count_ones() as usize != w {
                continue;
            }
            let e = BinaryVector::from_support(n, (0..n).filter(|i| mask >> i & 1 == 1));
            if group.iter().any(|g| (&e ^ g).weight() < w) {
                continue;
            }
            let sw = checks.matvec(&e).unwrap().weight();
            count += 1;
            min = min.min(sw);
            total += sw;
        }
        rows.push(ConfinementRow {
            w,
            min_syndrome: (count > 0).then_some(min),
            avg_syndrome: (count > 0).then(|| total as f64 / count as f64),
            irreducible_count: count,
        });
    }
    rows
}

#[test]
fn confinement_matches_coset_oracle_on_toy_code() {
    let code = preset("toy_2_3").unwrap();
    for sector in [Basis::X, Basis::Z] {
        let fast = confinement_profile(&code, sector, 3).unwrap();
        let slow = coset_oracle(&code, sector, 3);
        assert_eq!(fast.rows.len(), slow.len());
        for (a, b) in fast.rows.iter().zip(&slow) {
            assert_eq!(a.min_syndrome, b.min_syndrome, "{sector} w={}", a.w);
            assert_eq!(a.irreducible_count, b.irreducible_count, "{sector} w={}", a.w);
            let (x, y) = (a.avg_syndrome.unwrap(), b.avg_syndrome.unwrap());
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn extending_the_weight_limit_keeps_earlier_entries() {
    let code = preset("toy_2_3").unwrap();
    let short = confinement_profile(&code, Basis::X, 3).unwrap();
    let long = confinement_profile(&code, Basis::X, 4).unwrap();
    assert_eq!(short.rows[..], long.rows[..3]);
    for row in &long.rows {
        if let (Some(min), Some(avg)) = (row.min_syndrome, row.avg_syndrome) {
            assert!(avg >= min as f64);
        }
    }
}

#[test]
fn toy_distance_bound_is_tight() {
    let code = preset("toy_2_3").unwrap();
    for sector in [Basis::X, Basis::Z] {
        let est = estimate_distance(&code, sector, 1000, 17).unwrap();
        assert_eq!(est.d_est, 4);
        assert!(est.p_fail_bound < 1e-3);
        let w = BinaryVector::from_support(code.n(), est.witness.iter().copied());
        assert!(code.detecting_checks(sector).matvec(&w).unwrap().is_zero());
        assert!(!code.stabilisers(sector).in_rowspace(&w).unwrap());
    }
}

fn exhaustive_min_weight(h: &BinaryMatrix) -> usize {
    let n = h.cols();
    (1u64..1 << n)
        .filter(|&mask| {
            let v = BinaryVector::from_support(n, (0..n).filter(|i| mask >> i & 1 == 1));
            h.matvec(&v).unwrap().is_zero()
        })
        .map(|mask| mask.count_ones() as usize)
        .min()
        .unwrap()
}

#[test]
fn repetition_codes_have_full_length_distance() {
    for n in 3..=20 {
        let rows: Vec<Vec<usize>> = (0..n - 1).map(|i| vec![i, i + 1]).collect();
        let h = BinaryMatrix::from_row_support(n - 1, n, &rows).unwrap();
        let est = estimate_classical_distance(&h, 20, n as u64).unwrap();
        assert_eq!(est.d_est, n);
        assert_eq!(est.hits, 20);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn classical_search_finds_exhaustive_minimum(
        (r, s) in prop_oneof![Just((2usize, 3usize)), Just((2, 5)), Just((2, 7)), Just((3, 5))],
        seed in any::<u64>(),
    ) {
        let a = random_a_matrix(r, s, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let h = binary_pcm(&a);
        let est = estimate_classical_distance(&h, 200, seed).unwrap();
        prop_assert_eq!(est.d_est, exhaustive_min_weight(&h));
    }
}
