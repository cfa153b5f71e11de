//! Randomized invariants over configurations, bit buffers, matching, and
//! geometry helpers.

use std::sync::OnceLock;

use iib::{
    apply_mask, brute_force_mutual, compute_channels, correspondences, descriptor_size, extract,
    extract_with_ops, grid_keypoints, hamming, natural_texture, project_point, select_top_m,
    synth_pair, BinaryDescriptor, BitBuffer, ChannelStack, DescriptorConfig, Homography, Keypoint,
    Mapping, OpCounts, SynthSpec, DEFAULT_CHANNELS,
};
use proptest::prelude::*;

const MAPPINGS: [Mapping; 5] = [
    Mapping::Mean,
    Mapping::Max,
    Mapping::Min,
    Mapping::Quartile,
    Mapping::Sort,
];

fn shared_stack() -> &'static ChannelStack {
    static STACK: OnceLock<ChannelStack> = OnceLock::new();
    STACK.get_or_init(|| compute_channels(&natural_texture(96, 96, 5), &[]).unwrap())
}

fn any_config() -> impl Strategy<Value = DescriptorConfig> {
    (1u8..=5, 0usize..5, any::<bool>(), 1usize..=4)
        .prop_flat_map(|(granularity, mapping, overlap, n_channels)| {
            let min_radius = (1u32 << granularity) as f64;
            (
                Just(granularity),
                Just(mapping),
                Just(overlap),
                Just(n_channels),
                min_radius..=40.0,
            )
        })
        .prop_map(|(granularity, mapping, overlap, n_channels, radius)| DescriptorConfig {
            granularity,
            mapping: MAPPINGS[mapping],
            overlap,
            channels: DEFAULT_CHANNELS[..n_channels].to_vec(),
            rotation_enabled: false,
            radius,
        })
}

fn bits_per_patch(mapping: Mapping) -> usize {
    match mapping {
        Mapping::Mean | Mapping::Max | Mapping::Min => 1,
        Mapping::Quartile | Mapping::Sort => 2,
    }
}

fn expected_size(config: &DescriptorConfig) -> usize {
    let quadruples: usize = (1..=config.granularity as u32)
        .map(|g| {
            if config.overlap {
                ((1usize << g) - 1).pow(2)
            } else {
                4usize.pow(g - 1)
            }
        })
        .sum();
    bits_per_patch(config.mapping) * config.channels.len() * 4 * quadruples
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn size_matches_closed_form(config in any_config()) {
        prop_assert_eq!(descriptor_size(&config), expected_size(&config));
    }

    #[test]
    fn extraction_is_structurally_sound(config in any_config()) {
        let kp = Keypoint {
            x: 48.0,
            y: 48.0,
            radius: config.radius,
            angle: None,
        };
        let d = extract(shared_stack(), &kp, &config).unwrap();
        prop_assert_eq!(d.len(), descriptor_size(&config));
        prop_assert_eq!(d.segment_bounds.len(), config.granularity as usize + 1);
        prop_assert_eq!(d.segment_bounds[0], 0);
        prop_assert_eq!(*d.segment_bounds.last().unwrap(), d.len());
        prop_assert!(d.segment_bounds.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(d.fingerprint.clone(), config.fingerprint());
    }

    #[test]
    fn algebraic_work_stays_within_four_per_bit(config in any_config()) {
        let kp = Keypoint {
            x: 48.0,
            y: 48.0,
            radius: config.radius,
            angle: None,
        };
        let mut counts = OpCounts::default();
        extract_with_ops(shared_stack(), &kp, &config, &mut counts).unwrap();
        let m = descriptor_size(&config) as u64;
        // depth-1 overlap is the one corner above the bound: a lone quadruple
        // reuses four patch means yet still pays its threshold cost
        if !config.overlap || config.granularity >= 2 {
            prop_assert!(counts.algebraic <= 4 * m);
        }
        if config.mapping == Mapping::Mean && !config.overlap {
            prop_assert_eq!(counts.algebraic, 4 * m);
            prop_assert_eq!(counts.relational, m);
            prop_assert_eq!(counts.setup_algebraic, 4 * config.channels.len() as u64);
        }
    }
}

fn proto() -> &'static BinaryDescriptor {
    static PROTO: OnceLock<BinaryDescriptor> = OnceLock::new();
    PROTO.get_or_init(|| {
        let cfg = DescriptorConfig {
            granularity: 3,
            channels: DEFAULT_CHANNELS[..1].to_vec(),
            ..DescriptorConfig::default()
        };
        extract(shared_stack(), &Keypoint::new(48.0, 48.0), &cfg).unwrap()
    })
}

fn with_bits(bits: &[bool]) -> BinaryDescriptor {
    let proto = proto();
    BinaryDescriptor {
        keypoint: proto.keypoint,
        bits: BitBuffer::from_bools(bits),
        segment_bounds: proto.segment_bounds.clone(),
        fingerprint: proto.fingerprint.clone(),
    }
}

proptest! {
    #[test]
    fn bit_buffer_round_trips(bits in prop::collection::vec(any::<bool>(), 0..300)) {
        let buf = BitBuffer::from_bools(&bits);
        prop_assert_eq!(buf.len(), bits.len());
        for (i, &b) in bits.iter().enumerate() {
            prop_assert_eq!(buf.get(i), b);
        }
        let reread = BitBuffer::from_bytes(&buf.to_bytes(), bits.len());
        prop_assert_eq!(&reread, &buf);
        prop_assert_eq!(buf.count_ones() as usize, bits.iter().filter(|&&b| b).count());
    }

    #[test]
    fn popcount_splits_across_any_partition(
        pair in prop::collection::vec(any::<(bool, bool)>(), 1..200),
        cuts in prop::collection::vec(any::<prop::sample::Index>(), 0..6),
    ) {
        let a = BitBuffer::from_bools(&pair.iter().map(|p| p.0).collect::<Vec<_>>());
        let b = BitBuffer::from_bools(&pair.iter().map(|p| p.1).collect::<Vec<_>>());
        let mut bounds: Vec<usize> = cuts.iter().map(|c| c.index(pair.len() + 1)).collect();
        bounds.push(0);
        bounds.push(pair.len());
        bounds.sort_unstable();
        let total: u32 = bounds
            .windows(2)
            .map(|w| a.xor_popcount_range(&b, w[0], w[1]))
            .sum();
        prop_assert_eq!(total, a.xor_popcount(&b));
    }

    #[test]
    fn hamming_is_a_metric(
        triple in prop::collection::vec(any::<(bool, bool, bool)>(), 84..=84),
    ) {
        // 84 bits matches the fixed single-channel depth-3 prototype
        let a = with_bits(&triple.iter().map(|t| t.0).collect::<Vec<_>>());
        let b = with_bits(&triple.iter().map(|t| t.1).collect::<Vec<_>>());
        let c = with_bits(&triple.iter().map(|t| t.2).collect::<Vec<_>>());
        let ab = hamming(&a, &b).unwrap();
        let ba = hamming(&b, &a).unwrap();
        let ac = hamming(&a, &c).unwrap();
        let bc = hamming(&b, &c).unwrap();
        prop_assert_eq!(hamming(&a, &a).unwrap(), 0);
        prop_assert_eq!(ab, ba);
        prop_assert!(ac <= ab + bc);
    }

    #[test]
    fn mutual_matches_are_one_to_one_and_mutual(
        qbits in prop::collection::vec(prop::collection::vec(any::<bool>(), 84..=84), 1..10),
        tbits in prop::collection::vec(prop::collection::vec(any::<bool>(), 84..=84), 1..10),
    ) {
        let queries: Vec<_> = qbits.iter().map(|b| with_bits(b)).collect();
        let trains: Vec<_> = tbits.iter().map(|b| with_bits(b)).collect();
        let (pairs, stats) = brute_force_mutual(&queries, &trains).unwrap();
        let mut seen_q = std::collections::HashSet::new();
        let mut seen_t = std::collections::HashSet::new();
        for p in &pairs {
            prop_assert!(seen_q.insert(p.query));
            prop_assert!(seen_t.insert(p.train));
            prop_assert_eq!(p.distance, hamming(&queries[p.query], &trains[p.train]).unwrap());
            for (j, t) in trains.iter().enumerate() {
                let d = hamming(&queries[p.query], t).unwrap();
                prop_assert!(d > p.distance || (d == p.distance && j >= p.train));
            }
            for (i, q) in queries.iter().enumerate() {
                let d = hamming(q, &trains[p.train]).unwrap();
                prop_assert!(d > p.distance || (d == p.distance && i >= p.query));
            }
        }
        prop_assert_eq!(stats.match_cost, 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn masks_nest_and_reduce_distances(
        weights in prop::collection::vec(0.0f64..1.0, 84..=84),
        k_small in 1usize..=10,
        extra in 0usize..=10,
        qbits in prop::collection::vec(any::<bool>(), 84..=84),
        tbits in prop::collection::vec(any::<bool>(), 84..=84),
    ) {
        // depth-3 single-channel mean config: 21 quadruples, 84 bits
        let cfg = DescriptorConfig {
            granularity: 3,
            channels: DEFAULT_CHANNELS[..1].to_vec(),
            ..DescriptorConfig::default()
        };
        let quads = weights.len() / 4;
        let k_large = (k_small + extra).min(quads);
        let small = select_top_m(&weights[..quads], &cfg, 4 * k_small).unwrap();
        let large = select_top_m(&weights[..quads], &cfg, 4 * k_large).unwrap();
        prop_assert!(small.quadruples.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(small.selected_bits, 4 * k_small);
        let large_set: std::collections::HashSet<_> = large.quadruples.iter().collect();
        prop_assert!(small.quadruples.iter().all(|q| large_set.contains(q)));

        let a = with_bits(&qbits);
        let b = with_bits(&tbits);
        let full = hamming(&a, &b).unwrap();
        let da = apply_mask(&a, &small).unwrap();
        let db = apply_mask(&b, &small).unwrap();
        let masked = hamming(&da, &db).unwrap();
        prop_assert!(masked <= full);

        // the masked distance is the sum over the chosen blocks
        let manual: u32 = small
            .quadruples
            .iter()
            .map(|&q| a.bits.xor_popcount_range(&b.bits, 4 * q, 4 * (q + 1)))
            .sum();
        prop_assert_eq!(masked, manual);
    }

    #[test]
    fn correspondences_are_one_to_one_within_epsilon(
        refs in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 0..20),
        tests in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 0..20),
        epsilon in 0.0f64..8.0,
        shift in (-10.0f64..10.0, -10.0f64..10.0),
    ) {
        let h = Homography::translation(shift.0, shift.1);
        let ref_kps: Vec<Keypoint> = refs.iter().map(|&(x, y)| Keypoint::new(x, y)).collect();
        let test_kps: Vec<Keypoint> = tests.iter().map(|&(x, y)| Keypoint::new(x, y)).collect();
        let corr = correspondences(&ref_kps, &test_kps, &h, epsilon).unwrap();
        let mut seen_r = std::collections::HashSet::new();
        let mut seen_t = std::collections::HashSet::new();
        for &(i, j) in &corr.pairs {
            prop_assert!(seen_r.insert(i));
            prop_assert!(seen_t.insert(j));
            let p = project_point(&h, ref_kps[i].x, ref_kps[i].y).unwrap();
            let d = ((p.0 - test_kps[j].x).powi(2) + (p.1 - test_kps[j].y).powi(2)).sqrt();
            prop_assert!(d <= epsilon);
        }
        prop_assert!(corr.len() <= ref_kps.len().min(test_kps.len()));
    }

    #[test]
    fn homography_inverse_round_trips(
        a in 0.5f64..2.0,
        b in -0.4f64..0.4,
        c in -20.0f64..20.0,
        d in -0.4f64..0.4,
        e in 0.5f64..2.0,
        f in -20.0f64..20.0,
        x in -50.0f64..50.0,
        y in -50.0f64..50.0,
    ) {
        let h = Homography::new([a, b, c, d, e, f, 0.0, 0.0, 1.0]).unwrap();
        let inv = h.inverse();
        let fwd = project_point(&h, x, y).unwrap();
        let back = project_point(&inv, fwd.0, fwd.1).unwrap();
        prop_assert!((back.0 - x).abs() < 1e-8);
        prop_assert!((back.1 - y).abs() < 1e-8);
    }

    #[test]
    fn synthesized_pairs_stay_eight_bit(
        gain in 0.2f64..3.0,
        bias in -0.4f64..0.4,
        gamma in 0.2f64..3.0,
        seed in 0u64..50,
    ) {
        let img = natural_texture(48, 40, seed);
        let spec = SynthSpec {
            gain,
            bias,
            gamma,
            homography: Homography::identity(),
        };
        let (out, _) = synth_pair(&img, &spec).unwrap();
        for r in 0..out.height() {
            for c in 0..out.width() {
                let v = out.get(r, c);
                prop_assert!((0.0..=255.0).contains(&v));
                prop_assert_eq!(v, v.round());
            }
        }
    }

    #[test]
    fn grid_keypoints_stay_inside_the_margin(
        rows in 1usize..8,
        cols in 1usize..8,
        margin in 0.0f64..40.0,
        radius in 1.0f64..40.0,
    ) {
        let (w, h) = (200usize, 160usize);
        let kps = grid_keypoints(w, h, rows, cols, margin, radius);
        prop_assert_eq!(kps.len(), rows * cols);
        for kp in &kps {
            prop_assert!(kp.x >= margin && kp.x <= w as f64 - margin);
            prop_assert!(kp.y >= margin && kp.y <= h as f64 - margin);
            prop_assert_eq!(kp.radius, radius);
        }
    }
}

// synthetic identity: gain 1, bias 0, gamma 1 must reproduce integer inputs
#[test]
fn synth_identity_reproduces_integer_images() {
    let img = natural_texture(64, 48, 9);
    let (out, _) = synth_pair(&img, &SynthSpec::default()).unwrap();
    for r in 0..out.height() {
        for c in 0..out.width() {
            assert_eq!(out.get(r, c), img.get(r, c));
        }
    }
}
