use std::collections::HashSet;

use num_bigint::BigUint;
use num_rational::BigRational;
use proptest::prelude::*;

use simplex_map::analysis::{constraint_residual, r_star, vs_general, RecursionParams, Reduction};
use simplex_map::dispatch::{simulate_bb, simulate_mapped, MappedStrategy};
use simplex_map::map2::{decompose_below, floor_log2, grid2_for, lambda2, pad_above, pow2_floor, Block2};
use simplex_map::map3::{classify3, grid3_for, map3_flat, reflect_local, Mapped, Region3};
use simplex_map::oracle::{check_cover, rank, unrank, BinMode, CheckOptions, CoverStrategy};
use simplex_map::simplex::{simplex_volume, BlockShape, Coord};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rank_unrank_roundtrip(m in 1usize..=5, n in 1u64..40, seed in any::<u64>()) {
        let total: u64 = simplex_volume(m, n).unwrap().try_into().unwrap();
        let r = seed % total;
        let c = unrank(r, m, n);
        prop_assert!(c.l1() < n as u128);
        prop_assert_eq!(rank(&c, n), r);
    }

    #[test]
    fn floor_log2_brackets_value(y in 1u64..u64::MAX) {
        let l = floor_log2(y).unwrap();
        prop_assert!(y >> l == 1);
        prop_assert_eq!(pow2_floor(y).unwrap(), 1u64 << l);
    }

    #[test]
    fn lambda2_lands_in_strict_triangle(k in 1u32..=32, seed in any::<u64>()) {
        let n = 1u64 << k;
        let grid = grid2_for(n).unwrap();
        let w = grid.block_at(seed % grid.block_count());
        let c = lambda2(w);
        prop_assert!(c.get(0) < c.get(1) && c.get(1) < n);
    }

    #[test]
    fn lambda2_copy_translation(k in 2u32..=32, seed in any::<u64>()) {
        let n = 1u64 << k;
        let grid = grid2_for(n).unwrap();
        let w = grid.block_at(seed % grid.block_count());
        let b = pow2_floor(w.y).unwrap();
        let q = w.x / b;
        let base = lambda2(Block2::new(w.x - q * b, w.y));
        let c = lambda2(w);
        prop_assert_eq!(c.get(0), base.get(0) + 2 * q * b);
        prop_assert_eq!(c.get(1), base.get(1) + 2 * q * b);
    }

    #[test]
    fn map3_images_stay_in_region(k in 1u32..=21, seed in any::<u64>()) {
        let n = 1u64 << k;
        let grid = grid3_for(n).unwrap();
        let w = grid.block_at(seed % grid.block_count());
        match map3_flat(w, n).unwrap() {
            Mapped::Cell(p) => {
                prop_assert!(p.get(0) < p.get(1) && p.get(1) < n);
                prop_assert!(p.get(2) < p.get(1) - p.get(0));
                prop_assert_ne!(classify3(w, n).unwrap(), Region3::Unused);
            }
            Mapped::Discard => prop_assert_eq!(classify3(w, n).unwrap(), Region3::Unused),
        }
    }

    #[test]
    fn reflection_is_involution(l in 0u32..20, seed in any::<u64>()) {
        let b = 1u64 << l;
        let (u, v, w) = (seed % b, (seed >> 20) % b, (seed >> 40) % (2 * b));
        let r = reflect_local(b, (u, v, w));
        prop_assert_eq!(reflect_local(b, r), (u, v, w));
    }

    #[test]
    fn closed_form_equals_recurrence(m in 2usize..=8, beta in 2u32..=6, k in 0u32..=16) {
        let params = RecursionParams::new(Reduction::ratio(1, 2), beta).unwrap();
        let n = 1u64 << k;
        let mut v = BigUint::from(0u32);
        let mut side = BigUint::from(n);
        let mut weight = BigUint::from(1u32);
        while side > BigUint::from(1u32) {
            side /= 2u32;
            v += &weight * side.pow(m as u32);
            weight *= beta;
        }
        prop_assert_eq!(vs_general(m, n, &params).unwrap().exact, Some(v));
    }

    #[test]
    fn r_star_solves_constraint(m in 2usize..=8, beta in 2u32..=64) {
        let r = r_star(m, beta).unwrap();
        prop_assert!(constraint_residual(m, beta, &r) < 1e-12);
        if let Reduction::Exact(q) = &r {
            let fact: BigUint = (1..=m as u64).product();
            let lhs = q.recip().pow(m as i32) - BigRational::from_integer(beta.into());
            prop_assert_eq!(lhs, BigRational::from_integer(fact.into()));
        }
    }

    #[test]
    fn bb_stats_independent_of_shards(m in 2usize..=3, n in 1u64..60, rho in 1u64..5, shards in 1usize..16) {
        let shape = BlockShape::new(rho).unwrap();
        let a = simulate_bb(m, n, shape, 1).unwrap();
        let b = simulate_bb(m, n, shape, shards).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.launched, a.useful + a.wasted);
        prop_assert!(a.efficiency > 0.0 && a.efficiency <= 1.0);
    }

    #[test]
    fn mapped_stats_independent_of_shards(n in 1u64..40, shards in 1usize..16, which in 0usize..3) {
        let s = [MappedStrategy::Map2, MappedStrategy::Map3Flat, MappedStrategy::Map3Rec][which];
        let shape = BlockShape::default();
        prop_assert_eq!(simulate_mapped(s, n, shape, 1).unwrap(), simulate_mapped(s, n, shape, shards).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn padded_cover_passes(n in 1u64..700, shards in 1usize..8) {
        let report = check_cover(&pad_above(n).unwrap(), CheckOptions::with_shards(shards)).unwrap();
        prop_assert!(report.pass, "{:?}", report);
    }

    #[test]
    fn decomposition_pieces_disjoint(n in 1u64..400) {
        let d = decompose_below(n).unwrap();
        let mut seen = HashSet::new();
        for i in 0..d.launched() {
            let c = d.image(i).unwrap();
            prop_assert!(c.l1() < n as u128);
            prop_assert!(seen.insert(c));
        }
        prop_assert_eq!(seen.len() as u64, n * (n + 1) / 2);
    }

    #[test]
    fn report_independent_of_bin_mode(n in 1u64..200, shards in 1usize..6) {
        let d = decompose_below(n).unwrap();
        let dense = check_cover(&d, CheckOptions { shards, mode: BinMode::Dense }).unwrap();
        let sorted = check_cover(&d, CheckOptions { shards, mode: BinMode::Sorted }).unwrap();
        prop_assert_eq!(dense, sorted);
    }
}

#[test]
fn map3_raw_image_set_is_exact_for_small_grids() {
    for k in 1..=6 {
        let n = 1u64 << k;
        let grid = grid3_for(n).unwrap();
        let images: Vec<Coord> = (0..grid.block_count())
            .filter_map(|i| match map3_flat(grid.block_at(i), n).unwrap() {
                Mapped::Cell(c) => Some(c),
                Mapped::Discard => None,
            })
            .collect();
        let distinct: HashSet<_> = images.iter().copied().collect();
        assert_eq!(distinct.len(), images.len());
        assert_eq!(images.len() as u64, (n * n * n - n) / 6);
        assert_eq!(grid.unused_count(), grid.block_count() - images.len() as u64);
    }
}

#[test]
fn oversized_grids_are_rejected() {
    assert!(grid2_for(1 << 32).is_ok());
    assert!(grid2_for(1 << 33).is_err());
    assert!(grid3_for(1 << 21).is_ok());
    assert!(grid3_for(1 << 22).is_err());
    assert!(simplex_map::map3::recursive_placements(1 << 13).is_err());
}
