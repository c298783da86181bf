use proptest::prelude::*;

use flowtopo::field::FpMatrix;
use flowtopo::flow_io::{pixel_index, read_flo, sample_patches, write_flo, FlowField, Provenance};
use flowtopo::geometry::{cover_radius, densest_core, distance_matrix, maxmin_sample, PointCloud};
use flowtopo::patch_pipeline::{
    contrast_norm_of, grid_laplacian, normalize_vec, predominant_direction_of, projective_distance,
    Direction,
};
use flowtopo::persistence::{oracle_betti, persistent_homology, vr_filtration, Barcode};
use flowtopo::zigzag::{
    build_angle_zigzag, homology_basis, pointwise_dims, zigzag_intervals, Arrow, ArrowDirection,
    Complex, NodeLabel, ZigzagModule,
};

fn patch() -> impl Strategy<Value = [f64; 18]> {
    prop::array::uniform18(-5.0..5.0f64)
}

fn cloud(max_points: usize, dim: usize) -> impl Strategy<Value = PointCloud> {
    prop::collection::vec(prop::collection::vec(-1.0..1.0f64, dim), 2..=max_points)
        .prop_map(|pts| PointCloud::new(pts).unwrap())
}

fn sorted_bars(bc: &Barcode) -> Vec<(usize, u64, Option<u64>)> {
    let mut v: Vec<_> = bc
        .intervals
        .iter()
        .filter(|iv| iv.death != Some(iv.birth))
        .map(|iv| (iv.dim, iv.birth.to_bits(), iv.death.map(f64::to_bits)))
        .collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalization_is_idempotent(x in patch()) {
        let d = grid_laplacian();
        prop_assume!(contrast_norm_of(&x, &d) > 1e-3);
        let once = normalize_vec(&x, &d, 1e-12).unwrap();
        let twice = normalize_vec(&once.vec, &d, 1e-12).unwrap();
        for (a, b) in once.vec.iter().zip(&twice.vec) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!((contrast_norm_of(&once.vec, &d) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn d_norm_ignores_channel_means(x in patch(), du in -3.0..3.0f64, dv in -3.0..3.0f64) {
        let d = grid_laplacian();
        let mut shifted = x;
        for i in 0..9 {
            shifted[i] += du;
            shifted[9 + i] += dv;
        }
        prop_assert!((contrast_norm_of(&x, &d) - contrast_norm_of(&shifted, &d)).abs() < 1e-9);
    }

    #[test]
    fn direction_survives_negation(x in patch()) {
        let neg = x.map(|c| -c);
        match (predominant_direction_of(&x), predominant_direction_of(&neg)) {
            (Ok(Direction::Angle(a)), Ok(Direction::Angle(b))) => {
                prop_assert!(projective_distance(a, b) < 1e-9)
            }
            (Ok(Direction::Isotropic), Ok(Direction::Isotropic)) | (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
    }

    #[test]
    fn flo_round_trip(w in 1usize..9, h in 1usize..9, seed in any::<u64>()) {
        let field = FlowField::from_fn(w, h, |r, c| {
            let s = seed.wrapping_mul(r as u64 * 31 + c as u64 + 7);
            [f32::from_bits((s as u32) & 0x3fff_ffff), -((s >> 40) as f32) * 1e-3]
        })
        .unwrap();
        prop_assert_eq!(read_flo(&write_flo(&field)).unwrap(), field);
    }

    #[test]
    fn patches_are_column_major(w in 3usize..10, h in 3usize..10, seed in any::<u64>()) {
        let field = FlowField::from_fn(w, h, |r, c| [(100 * r + c) as f32, -((100 * r + c) as f32)]).unwrap();
        for p in sample_patches(&[field], 20, seed).unwrap() {
            let Provenance::Field { row, col, .. } = p.provenance else { panic!("provenance") };
            for dr in 0..3 {
                for dc in 0..3 {
                    let want = (100 * (row + dr) + col + dc) as f64;
                    prop_assert_eq!(p.vec[pixel_index(dr, dc)], want);
                    prop_assert_eq!(p.vec[9 + pixel_index(dr, dc)], -want);
                }
            }
        }
    }

    #[test]
    fn dense_cores_are_nested(c in cloud(40, 3), k in 1usize..5, p1 in 5.0..100.0f64, p2 in 5.0..100.0f64) {
        prop_assume!(k < c.len());
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        let small = densest_core(&c, k, lo).unwrap();
        let big = densest_core(&c, k, hi).unwrap();
        prop_assert!(small.ids().iter().all(|id| big.ids().contains(id)));
    }

    #[test]
    fn cover_radius_shrinks_with_more_landmarks(c in cloud(30, 2)) {
        let dm = distance_matrix(&c);
        let order = maxmin_sample(&dm, c.len(), 0).unwrap();
        let radii: Vec<f64> = (1..=order.len()).map(|m| cover_radius(&dm, &order[..m])).collect();
        prop_assert!(radii.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(*radii.last().unwrap(), 0.0);
    }

    #[test]
    fn barcode_ignores_vertex_labels(c in cloud(8, 3), p in prop::sample::select(vec![2u64, 3, 5]), rot in 0usize..8) {
        let dm = distance_matrix(&c);
        let filt = vr_filtration(&dm, f64::INFINITY, 2).unwrap();
        let n = c.len() as u32;
        let perm: Vec<u32> = (0..n).map(|v| (v + rot as u32) % n).rev().collect();
        let a = persistent_homology(&filt, p).unwrap();
        let b = persistent_homology(&filt.relabel(&perm), p).unwrap();
        prop_assert_eq!(sorted_bars(&a), sorted_bars(&b));
    }

    #[test]
    fn barcode_betti_matches_oracle(c in cloud(7, 2), p in prop::sample::select(vec![2u64, 3]), r in 0.0..2.5f64) {
        let dm = distance_matrix(&c);
        let filt = vr_filtration(&dm, 3.0, 2).unwrap();
        let bc = persistent_homology(&filt, p).unwrap();
        prop_assert_eq!(bc.betti_at(r), oracle_betti(&filt, r, p).unwrap());
    }

    #[test]
    fn homology_basis_rank_matches_oracle(c in cloud(8, 2), p in prop::sample::select(vec![2u64, 3]), r in 0.2..1.5f64, k in 0usize..2) {
        let complex = Complex::vietoris_rips(&c, r, k + 1).unwrap();
        let basis = homology_basis(&complex, k, p).unwrap();
        let filt = vr_filtration(&distance_matrix(&c), r, k + 1).unwrap();
        prop_assert_eq!(basis.rank(), oracle_betti(&filt, r, p).unwrap()[k]);
    }

    #[test]
    fn bins_sit_inside_their_unions(bins in prop::collection::vec(cloud(4, 2), 2..5), r in 0.3..1.2f64) {
        let mut offset = 0;
        let bins: Vec<PointCloud> = bins
            .into_iter()
            .map(|b| {
                let ids = (offset..offset + b.len()).collect();
                offset += b.len();
                PointCloud::with_ids(b.points().to_vec(), ids).unwrap()
            })
            .collect();
        let z = build_angle_zigzag(&bins, r, 2).unwrap();
        prop_assert_eq!(z.nodes.len(), 2 * bins.len());
        for (t, label) in z.labels.iter().enumerate() {
            if let NodeLabel::Bin { .. } = label {
                if t > 0 {
                    prop_assert!(z.nodes[t].is_subcomplex_of(&z.nodes[t - 1]));
                }
                prop_assert!(z.nodes[t].is_subcomplex_of(&z.nodes[t + 1]));
            }
        }
        let bc = zigzag_intervals(&z, 1, 2).unwrap();
        prop_assert_eq!(pointwise_dims(&bc.intervals, bc.node_count()), bc.node_ranks);
    }
}

fn module() -> impl Strategy<Value = ZigzagModule> {
    (prop::collection::vec(0usize..4, 2..7), any::<u64>()).prop_map(|(dims, seed)| {
        let p = 3u64;
        let mut s = seed;
        let arrows = (0..dims.len() - 1)
            .map(|t| {
                let direction = if (s >> t) & 1 == 0 { ArrowDirection::Forward } else { ArrowDirection::Backward };
                let (src, dst) = match direction {
                    ArrowDirection::Forward => (dims[t], dims[t + 1]),
                    ArrowDirection::Backward => (dims[t + 1], dims[t]),
                };
                let mut m = FpMatrix::zeros(dst, src);
                for r in 0..dst {
                    for c in 0..src {
                        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        m.set(r, c, ((s >> 33) % p) as u32);
                    }
                }
                Arrow { direction, matrix: m }
            })
            .collect();
        ZigzagModule::new(p, dims, arrows).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn intervals_add_up_to_node_dimensions(m in module()) {
        let ivs = m.decompose().unwrap();
        prop_assert_eq!(pointwise_dims(&ivs, m.len()), m.dims().to_vec());
    }

    #[test]
    fn reversal_mirrors_decomposition(m in module()) {
        let n = m.len();
        let mut fwd: Vec<_> = m
            .decompose()
            .unwrap()
            .into_iter()
            .map(|iv| (n - 1 - iv.end, n - 1 - iv.start, iv.multiplicity))
            .collect();
        let mut rev: Vec<_> = m.reversed().decompose().unwrap().into_iter().map(|iv| (iv.start, iv.end, iv.multiplicity)).collect();
        fwd.sort();
        rev.sort();
        prop_assert_eq!(fwd, rev);
    }
}
