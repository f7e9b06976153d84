use std::collections::VecDeque;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use radial_qec::classical::{random_a_matrix, ClassicalRadialCode};
use radial_qec::gf2::{BinaryMatrix, BinaryVector};

fn random_code(r: usize, s: usize, seed: u64) -> ClassicalRadialCode {
    let a = random_a_matrix(r, s, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    ClassicalRadialCode::new_valid(a).unwrap()
}

/// Girth at least six means no two checks share two bits.
fn max_row_overlap(h: &BinaryMatrix) -> usize {
    let rows: Vec<BinaryVector> = (0..h.rows()).map(|i| h.row(i)).collect();
    let mut best = 0;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            best = best.max(rows[i].and_weight(&rows[j]));
        }
    }
    best
}

/// Connected components of the Tanner graph (bits and checks as nodes).
fn tanner_components(h: &BinaryMatrix) -> usize {
    let (m, n) = (h.rows(), h.cols());
    let mut seen = vec![false; m + n];
    let mut components = 0;
    for start in 0..m + n {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            let neighbours: Vec<usize> = if node < m {
                h.row_support(node).into_iter().map(|j| m + j).collect()
            } else {
                (0..m).filter(|&i| h.get(i, node - m)).collect()
            };
            for nb in neighbours {
                if !seen[nb] {
                    seen[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
    }
    components
}

/// Minimum weight over every nonzero codeword spanned by the nullspace.
fn exhaustive_distance(h: &BinaryMatrix) -> usize {
    let basis = h.nullspace_basis();
    assert!(basis.len() < 20);
    (1u32..1 << basis.len())
        .map(|mask| {
            let mut v = BinaryVector::zeros(h.cols());
            for (i, b) in basis.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    v ^= b;
                }
            }
            v.weight()
        })
        .min()
        .unwrap()
}

fn check_code(code: &ClassicalRadialCode) -> Result<(), TestCaseError> {
    let (r, s) = (code.r(), code.s());
    let h = code.pcm();
    prop_assert!((0..h.rows()).all(|i| h.row_weight(i) == r));
    prop_assert!(h.column_weights().iter().all(|&w| w == r));
    prop_assert!(max_row_overlap(h) <= 1);
    prop_assert_eq!(tanner_components(h), 1);
    prop_assert_eq!(h.cols() - h.rank(), r - 1);
    if r * s <= 30 {
        prop_assert_eq!(exhaustive_distance(h), 2 * s);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn valid_codes_have_the_stated_structure(
        (r, s) in prop_oneof![
            Just((2usize, 3usize)), Just((2, 5)), Just((3, 5)), Just((2, 7)),
            Just((3, 7)), Just((4, 7)), Just((2, 13)), Just((3, 11)),
        ],
        seed in any::<u64>(),
    ) {
        check_code(&random_code(r, s, seed))?;
    }
}
