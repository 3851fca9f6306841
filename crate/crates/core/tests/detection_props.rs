use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use risim_core::channel::{complex_gaussian, ChannelMatrix, ChannelModel};
use risim_core::detection::{apply_channel, detect_ofdm_im, instantaneous_capacity, mld, CandidateSet};
use risim_core::im_schemes::{Scheme, SchemeConfig};
use risim_core::rng::{seeded, Stream};
use risim_core::math::u64_to_bits;

fn scheme(json: &str) -> Scheme {
    Scheme::new(serde_json::from_str::<SchemeConfig>(json).unwrap()).unwrap()
}

/// Exhaustive search written out directly: `argmin ||y - H x||^2`, first index on ties.
fn naive_mld(y: &[Complex64], h: &ChannelMatrix, cands: &CandidateSet) -> u64 {
    let t = cands.time_slots();
    let mut best = (0, f64::INFINITY);
    for c in 0..cands.len() {
        let x = cands.codeword(c);
        let mut d = 0.0;
        for l in 0..h.nr {
            for tau in 0..t {
                let hx: Complex64 = (0..h.nt).map(|i| h.get(l, i) * x[i * t + tau]).sum();
                d += (y[l * t + tau] - hx).norm_sqr();
            }
        }
        if d < best.1 {
            best = (c, d);
        }
    }
    cands.labels()[best.0]
}

const SCHEMES: [&str; 7] = [
    r#"{"scheme":"sm","nt":4,"order":4}"#,
    r#"{"scheme":"gsm","nt":4,"na":2,"order":2}"#,
    r#"{"scheme":"qsm","nt":2,"order":4}"#,
    r#"{"scheme":"ssk","nt":8}"#,
    r#"{"scheme":"stsk","q":4,"p":1,"order":2,"nt":2,"nns":2,"seed":1}"#,
    r#"{"scheme":"sc_im","ls":4,"k":2,"order":2,"ns":16,"lcp":4}"#,
    r#"{"scheme":"qam","order":16}"#,
];

#[test]
fn mld_agrees_with_naive_search() {
    let mut rng = seeded(11, Stream::Aux);
    for trial in 0..500 {
        let s = scheme(SCHEMES[trial % SCHEMES.len()]);
        let cands = s.candidates();
        let nr = 1 + trial % 3;
        let h = ChannelModel::Rayleigh {}.draw(nr, s.transmit_rows(), &mut rng);
        let label = rng.gen_range(0..s.codebook_size());
        let mut y = apply_channel(&h, cands.codeword_for(label).unwrap(), cands.time_slots());
        let n0 = 10f64.powf(-rng.gen_range(0.0..2.0));
        for v in &mut y {
            *v += complex_gaussian(&mut rng, n0);
        }
        assert_eq!(mld(&y, &h, &cands).unwrap(), naive_mld(&y, &h, &cands), "trial {trial}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mld_is_scale_invariant(seed in any::<u64>(), alpha in 0.01f64..100.0, which in 0usize..SCHEMES.len()) {
        let s = scheme(SCHEMES[which]);
        let cands = s.candidates();
        let mut rng = seeded(seed, Stream::Aux);
        let h = ChannelModel::Rayleigh {}.draw(2, s.transmit_rows(), &mut rng);
        let y: Vec<Complex64> = (0..2 * cands.time_slots()).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let scaled_h = ChannelMatrix::from_fn(h.nr, h.nt, |l, i| h.get(l, i) * alpha);
        let scaled_y: Vec<Complex64> = y.iter().map(|v| v * alpha).collect();
        prop_assert_eq!(mld(&y, &h, &cands).unwrap(), mld(&scaled_y, &scaled_h, &cands).unwrap());
    }

    #[test]
    fn codec_round_trip(which in 0usize..SCHEMES.len(), raw in any::<u64>()) {
        let s = scheme(SCHEMES[which]);
        let bits = u64_to_bits(raw % s.codebook_size(), s.bits() as usize);
        let sym = s.map(&bits).unwrap();
        prop_assert_eq!(s.demap(&sym).unwrap(), bits);
    }
}

#[test]
fn per_resource_detector_matches_generic_mld() {
    let mut rng = seeded(12, Stream::Aux);
    for json in [
        r#"{"scheme":"ofdm_im","n":4,"k":2,"order":4}"#,
        r#"{"scheme":"ofdm_im","n":8,"k":3,"order":2}"#,
        r#"{"scheme":"sim_ook","n_sim":4,"order":2}"#,
    ] {
        let s = scheme(json);
        let cands = s.candidates();
        let n = s.transmit_rows();
        for trial in 0..200 {
            let nr = 1 + trial % 2;
            // Per-resource gains as a block-diagonal channel.
            let g: Vec<Complex64> = (0..n * nr).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
            let h = ChannelMatrix::from_fn(n * nr, n, |row, a| if row / nr == a { g[row] } else { Complex64::default() });
            let label = rng.gen_range(0..s.codebook_size());
            let mut y = apply_channel(&h, cands.codeword_for(label).unwrap(), 1);
            for v in &mut y {
                *v += complex_gaussian(&mut rng, 0.3);
            }
            assert_eq!(
                detect_ofdm_im(&y, &g, nr, &s).unwrap(),
                mld(&y, &h, &cands).unwrap(),
                "{json} trial {trial}"
            );
        }
    }
}

#[test]
fn tie_goes_to_lowest_label() {
    let x = vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
    let cands = CandidateSet::new(1, 1, vec![3, 5], x).unwrap();
    let h = ChannelMatrix::from_fn(1, 1, |_, _| Complex64::new(1.0, 0.0));
    assert_eq!(mld(&[Complex64::new(0.0, 0.7)], &h, &cands).unwrap(), 3);
}

#[test]
fn capacity_matches_closed_form_2x2() {
    // det(I + a H H^H) for 2x2 expanded by hand.
    let mut rng = seeded(13, Stream::Aux);
    for _ in 0..100 {
        let h = ChannelModel::Rayleigh {}.draw(2, 2, &mut rng);
        let snr: f64 = rng.gen_range(0.1..1000.0);
        let a = snr / 2.0;
        let g = |l: usize, k: usize| -> Complex64 { (0..2).map(|i| h.get(l, i) * h.get(k, i).conj()).sum() };
        let m00 = 1.0 + a * g(0, 0).re;
        let m11 = 1.0 + a * g(1, 1).re;
        let det = m00 * m11 - a * a * g(0, 1).norm_sqr();
        let c = instantaneous_capacity(&h, snr);
        assert!((c - det.log2()).abs() < 1e-9, "{c} vs {}", det.log2());
    }
}
