mod common;

use std::collections::BTreeMap;

use cowork_core::grid::{astar_path, euclidean, Cell, GridError, GridWorkplace};
use proptest::prelude::*;

use common::{dijkstra, path_surd, random_world};

fn free_cells(world: &GridWorkplace) -> Vec<Cell> {
    world.cells().filter(|&c| world.is_free(c)).collect()
}

#[test]
fn astar_matches_dijkstra_on_random_grids() {
    let mut checked = 0;
    for seed in 0..40 {
        let world = random_world(seed, 10, 0.2);
        let free = free_cells(&world);
        for (i, &s) in free.iter().enumerate().step_by(7) {
            let g = free[(i * 13 + 5) % free.len()];
            match (astar_path(&world, s, g), dijkstra(&world, s, g)) {
                (Ok(p), Some(d)) => {
                    assert_eq!(path_surd(&p.cells), d, "seed {seed} {s} -> {g}");
                    checked += 1;
                }
                (Err(GridError::NoPath { .. }), None) => {}
                (a, d) => panic!("seed {seed} {s} -> {g}: astar {a:?}, dijkstra {d:?}"),
            }
        }
    }
    assert!(checked > 100);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn astar_paths_are_valid(seed in 0u64..10_000, si in 0usize..100, gi in 0usize..100) {
        let world = random_world(seed, 10, 0.2);
        let free = free_cells(&world);
        prop_assume!(!free.is_empty());
        let (s, g) = (free[si % free.len()], free[gi % free.len()]);
        if let Ok(p) = astar_path(&world, s, g) {
            prop_assert_eq!(p.start(), s);
            prop_assert_eq!(p.end(), g);
            for c in &p.cells {
                prop_assert!(world.is_free(*c));
            }
            for w in p.cells.windows(2) {
                prop_assert_eq!(w[0].chebyshev(w[1]), 1);
            }
            let surd = path_surd(&p.cells);
            prop_assert!((p.cost - (surd.a as f64 + surd.b as f64 * std::f64::consts::SQRT_2)).abs() < 1e-9);
            prop_assert!(p.cost + 1e-9 >= euclidean(s, g));
        }
    }

    #[test]
    fn euclidean_is_a_metric(ax in -20i32..20, ay in -20i32..20, bx in -20i32..20, by in -20i32..20, cx in -20i32..20, cy in -20i32..20) {
        let (a, b, c) = (Cell::new(ax, ay), Cell::new(bx, by), Cell::new(cx, cy));
        prop_assert_eq!(euclidean(a, b), euclidean(b, a));
        prop_assert_eq!(euclidean(a, a), 0.0);
        prop_assert!(euclidean(a, c) <= euclidean(a, b) + euclidean(b, c) + 1e-12);
    }

    #[test]
    fn open_grid_cost_is_octile(n in 2i32..12, sx in 1i32..12, sy in 1i32..12, gx in 1i32..12, gy in 1i32..12) {
        let world = GridWorkplace::new(n, n, [], BTreeMap::new()).unwrap();
        let (s, g) = (Cell::new(sx.min(n), sy.min(n)), Cell::new(gx.min(n), gy.min(n)));
        let p = astar_path(&world, s, g).unwrap();
        let (dx, dy) = ((g.x - s.x).abs(), (g.y - s.y).abs());
        let diag = dx.min(dy);
        let expected = f64::from(dx.max(dy) - diag) + f64::from(diag) * std::f64::consts::SQRT_2;
        prop_assert!((p.cost - expected).abs() < 1e-9);
    }
}
