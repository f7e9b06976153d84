use proptest::prelude::*;

use radial_qec::circuits::memory_experiment;
use radial_qec::decoder::{
    evaluate_shot, overlapping_window_decode, BpConfig, BpOsd, OsdConfig, WindowConfig, WindowDecoder,
};
use radial_qec::gf2::{BinaryVector, SparseMatrix};
use radial_qec::noise::{apply_noise, build_dem, sample, DetectorErrorModel, NoiseModel};
use radial_qec::quantum::{preset, Basis};

fn toy_dem(cycles: usize, p: f64) -> (radial_qec::circuits::Circuit, DetectorErrorModel) {
    let code = preset("toy_2_3").unwrap();
    let noisy = apply_noise(&memory_experiment(&code, Basis::Z, cycles).unwrap(), &NoiseModel::uniform(p)).unwrap();
    let dem = build_dem(&noisy).unwrap();
    (noisy, dem)
}

fn priors(dem: &DetectorErrorModel) -> Vec<f64> {
    dem.mechanisms.iter().map(|m| m.p).collect()
}

fn log_odds(dem: &DetectorErrorModel, e: &BinaryVector) -> f64 {
    e.iter_ones().map(|j| (dem.mechanisms[j].p / (1.0 - dem.mechanisms[j].p)).ln()).sum()
}

#[test]
fn code_capacity_weight_one_sweep() {
    let code = preset("toy_2_3").unwrap();
    let hz = code.hz().to_sparse();
    let n = hz.cols();
    let decoder = BpOsd::new(&hz, vec![0.05; n], BpConfig::default(), OsdConfig::order0()).unwrap();
    for q in 0..n {
        let e = BinaryVector::from_support(n, [q]);
        let s = hz.syndrome_of(&e);
        let out = decoder.decode(&s).unwrap();
        assert_eq!(hz.syndrome_of(&out.correction), s, "qubit {q}");
    }
}

/// Every single-mechanism syndrome decodes to a correction at least as
/// likely as that mechanism once the sweep runs.
#[test]
fn singleton_syndromes_decode_to_likeliest_explanation() {
    let (_, dem) = toy_dem(2, 1e-3);
    let h = dem.check_matrix();
    for osd in [OsdConfig::combination_sweep(1), OsdConfig::combination_sweep(4)] {
        let decoder = BpOsd::new(&h, priors(&dem), BpConfig::with_max_iter(100), osd).unwrap();
        for j in 0..dem.mechanisms.len() {
            let truth = BinaryVector::from_support(dem.mechanisms.len(), [j]);
            let s = h.syndrome_of(&truth);
            let out = decoder.decode(&s).unwrap();
            assert_eq!(h.syndrome_of(&out.correction), s);
            assert!(
                log_odds(&dem, &out.correction) >= log_odds(&dem, &truth) - 1e-9,
                "mechanism {j} decoded to {:?}",
                out.correction.support()
            );
        }
    }
}

#[test]
fn fifteen_rounds_give_fifteen_windows() {
    let (_, dem) = toy_dem(15, 1e-3);
    assert_eq!(dem.rounds, 15);
    let dec = WindowDecoder::new(&dem, WindowConfig { w: 3, c: 1 }, BpConfig::default(), OsdConfig::order0()).unwrap();
    assert_eq!(dec.windows(), 15);
    let zero = BinaryVector::zeros(dem.n_detectors);
    assert!(dec.decode(&zero).unwrap().is_zero());
}

#[test]
fn single_window_matches_monolithic_decode() {
    let (noisy, dem) = toy_dem(4, 5e-3);
    let shots = sample(&noisy, 200, 5).unwrap();
    let whole = WindowConfig { w: dem.rounds, c: dem.rounds };
    let bp = BpConfig::with_max_iter(50);
    let osd = OsdConfig::combination_sweep(2);
    let windowed = WindowDecoder::new(&dem, whole, bp, osd).unwrap();
    let mono = BpOsd::new(&dem.check_matrix(), priors(&dem), bp, osd).unwrap();
    for shot in 0..200 {
        let s = shots.detectors.row(shot);
        assert_eq!(windowed.decode(&s).unwrap(), mono.decode(&s).unwrap().correction, "shot {shot}");
    }
}

#[test]
fn window_decode_satisfies_sampled_syndromes() {
    let (noisy, dem) = toy_dem(6, 1e-2);
    let h = dem.check_matrix();
    let shots = sample(&noisy, 300, 9).unwrap();
    for (w, c) in [(3, 1), (2, 2), (1, 1), (4, 3)] {
        let dec = WindowDecoder::new(&dem, WindowConfig { w, c }, BpConfig::with_max_iter(30), OsdConfig::order0()).unwrap();
        for shot in 0..300 {
            let s = shots.detectors.row(shot);
            let corr = dec.decode(&s).unwrap();
            assert_eq!(h.syndrome_of(&corr), s, "(w, c) = ({w}, {c}), shot {shot}");
        }
    }
}

#[test]
fn evaluate_shot_compares_predictions() {
    let (_, dem) = toy_dem(1, 1e-3);
    let j = dem.mechanisms.iter().position(|m| !m.obs.is_empty()).unwrap();
    let corr = BinaryVector::from_support(dem.mechanisms.len(), [j]);
    let mut actual = BinaryVector::zeros(dem.n_observables);
    for &o in &dem.mechanisms[j].obs {
        actual.flip(o);
    }
    assert!(evaluate_shot(&dem, &corr, &actual).is_zero());
    let empty = BinaryVector::zeros(dem.mechanisms.len());
    let one = BinaryVector::from_support(dem.n_observables, [1]);
    assert_eq!(evaluate_shot(&dem, &empty, &one), one);
}

/// Most likely explanation among mechanism sets of weight at most two.
fn exhaustive_decode(dem: &DetectorErrorModel, h: &SparseMatrix, s: &BinaryVector) -> Option<BinaryVector> {
    let m = dem.mechanisms.len();
    let mut best: Option<(f64, BinaryVector)> = None;
    let mut offer = |e: BinaryVector| {
        if h.syndrome_of(&e) == *s {
            let v = log_odds(dem, &e);
            if best.as_ref().map_or(true, |(b, _)| v > *b) {
                best = Some((v, e));
            }
        }
    };
    if s.is_zero() {
        return Some(BinaryVector::zeros(m));
    }
    let dets = s.support();
    for a in 0..m {
        // the first flipped detector must be explained by some mechanism
        let covers = |j: usize| dem.mechanisms[j].dets.contains(&dets[0]);
        if !covers(a) {
            continue;
        }
        offer(BinaryVector::from_support(m, [a]));
        for b in 0..m {
            if b != a {
                offer(BinaryVector::from_support(m, [a, b]));
            }
        }
    }
    best.map(|(_, e)| e)
}

#[test]
fn low_noise_toy_memory_rarely_fails() {
    let (noisy, dem) = toy_dem(3, 1e-4);
    let shots = 10_000;
    let samples = sample(&noisy, shots, 21).unwrap();
    let dec = WindowDecoder::new(&dem, WindowConfig::default(), BpConfig::default(), OsdConfig::order0()).unwrap();
    let h = dem.check_matrix();
    let (mut failures, mut oracle_failures, mut checked) = (0, 0, 0);
    for shot in 0..shots {
        let s = samples.detectors.row(shot);
        let obs = samples.observables.row(shot);
        let corr = dec.decode(&s).unwrap();
        let failed = !evaluate_shot(&dem, &corr, &obs).is_zero();
        failures += failed as usize;
        if !s.is_zero() && checked < 100 {
            checked += 1;
            if let Some(e) = exhaustive_decode(&dem, &h, &s) {
                oracle_failures += !evaluate_shot(&dem, &e, &obs).is_zero() as usize;
            }
        }
    }
    let rate = failures as f64 / shots as f64;
    assert!(rate < 1e-2, "word failure rate {rate}");
    assert!(checked > 10);
    assert!(oracle_failures <= 2, "exhaustive decoder failed {oracle_failures} of {checked}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// Any set of mechanisms yields a syndrome the window decoder explains.
    #[test]
    fn decoded_corrections_reproduce_the_syndrome(
        picks in proptest::collection::vec(any::<prop::sample::Index>(), 0..12),
        osd in prop_oneof![Just(OsdConfig::order0()), Just(OsdConfig::combination_sweep(3))],
    ) {
        let (_, dem) = toy_dem(5, 1e-3);
        let h = dem.check_matrix();
        let m = dem.mechanisms.len();
        let mut e = BinaryVector::zeros(m);
        for i in picks {
            e.flip(i.index(m));
        }
        let s = h.syndrome_of(&e);
        let corr = overlapping_window_decode(&dem, &s, WindowConfig::default(), BpConfig::with_max_iter(20), osd).unwrap();
        prop_assert_eq!(h.syndrome_of(&corr), s);
    }
}
