use faer::Mat;
use gmsfem_core::assembly::{element_matrices, weighted_norms, FineSystem};
use gmsfem_core::fields::{example_source, generate_contrast_field, CellField, PatternParams};
use gmsfem_core::grid::{CoarseGrid, FineGrid};
use gmsfem_core::linsolve::{dense_matvec, gen_eig_sym};
use proptest::prelude::*;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coarse_edge_bookkeeping(nc in 1usize..6, r in 1usize..6) {
        let fine = FineGrid::new((nc * r).max(2)).unwrap();
        prop_assume!(fine.n() % nc == 0);
        let coarse = CoarseGrid::new(fine, nc).unwrap();
        let mut on_interior = std::collections::BTreeSet::new();
        for &e in coarse.interior_edges() {
            let edges = coarse.fine_edges_on(e);
            prop_assert_eq!(edges.len(), coarse.ratio());
            prop_assert!(edges.windows(2).all(|w| w[0] < w[1]));
            on_interior.extend(edges);
        }
        let total: usize = coarse.neighborhoods().iter().map(|nb| nb.num_traces()).sum();
        prop_assert_eq!(total, on_interior.len());
        for e in 0..fine.num_edges() {
            let cells = fine.edge_cells(e);
            prop_assert!(!cells.is_empty() && cells.len() <= 2);
            prop_assert_eq!(cells.len() == 1, fine.is_boundary_edge(e));
        }
    }

    #[test]
    fn contrast_power_is_monotone(seed in 0u64..1000, p1 in 0i32..6, dp in 1i32..3) {
        let grid = FineGrid::new(16).unwrap();
        let kappa = generate_contrast_field(&grid, "inclusions", seed, 1.0, 10.0, &PatternParams::default()).unwrap();
        let lo = kappa.contrast_power(p1);
        let hi = kappa.contrast_power(p1 + dp);
        for (a, b) in lo.values().iter().zip(hi.values()) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn element_matrices_match_gauss_quadrature(h in 1e-3f64..1.0, a in 1.0f64..1e6, b in 1e-2f64..1e2) {
        // 2x2 Gauss rule is exact for the bilinear integrands
        let g = 0.5 / 3f64.sqrt();
        let pts = [0.5 - g, 0.5 + g];
        let basis = |k: usize, r: f64, s: f64| -> ([f64; 2], f64) {
            match k {
                0 => ([(1.0 - s) / h, 0.0], 1.0 / (h * h)),
                1 => ([s / h, 0.0], -1.0 / (h * h)),
                2 => ([0.0, (1.0 - r) / h], -1.0 / (h * h)),
                _ => ([0.0, r / h], 1.0 / (h * h)),
            }
        };
        let (k, m) = element_matrices(h, a, b);
        for i in 0..4 {
            for j in 0..4 {
                let (mut kq, mut mq) = (0.0, 0.0);
                for &x in &pts {
                    for &y in &pts {
                        let w = 0.25 * h * h;
                        let (vi, ci) = basis(i, x, y);
                        let (vj, cj) = basis(j, x, y);
                        kq += w * a * ci * cj;
                        mq += w * b * (vi[0] * vj[0] + vi[1] * vj[1]);
                    }
                }
                prop_assert!((k[i][j] - kq).abs() <= 1e-12 * a / (h * h));
                prop_assert!((m[i][j] - mq).abs() <= 1e-12 * b);
            }
        }
    }

    #[test]
    fn energy_norm_matches_quadratic_form(v in prop::collection::vec(-1.0f64..1.0, 40), seed in 0u64..100) {
        let grid = FineGrid::new(5).unwrap();
        let kappa = generate_contrast_field(&grid, "checker", seed, 1.0, 10.0, &PatternParams::default()).unwrap();
        let sys = FineSystem::assemble(grid, kappa.contrast_power(3), CellField::constant(&grid, 2.0), &example_source(1, &grid).unwrap()).unwrap();
        let v = &v[..sys.num_dofs()];
        let all: Vec<usize> = (0..grid.num_cells()).collect();
        let norms = weighted_norms(&grid, &sys.dofs.extend(v), &all, &sys.a, &sys.b);
        let q = sys.energy_sq(v);
        prop_assert!((norms.energy.powi(2) - q).abs() <= 1e-12 * q.max(1e-300));
    }

    #[test]
    fn rayleigh_quotients_lie_in_spectrum(
        entries in prop::collection::vec(-1.0f64..1.0, 36),
        diag in prop::collection::vec(0.1f64..10.0, 6),
        probe in prop::collection::vec(-1.0f64..1.0, 6),
    ) {
        let n = 6;
        let r = Mat::from_fn(n, n, |i, j| entries[i * n + j]);
        let s = &r * r.transpose() + Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 });
        let a = Mat::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 });
        let pairs = gen_eig_sym(a.as_ref(), s.as_ref()).unwrap();
        prop_assume!(probe.iter().any(|x| x.abs() > 1e-3));
        let q = dot(&probe, &dense_matvec(a.as_ref(), &probe)) / dot(&probe, &dense_matvec(s.as_ref(), &probe));
        let (lo, hi) = (pairs.values[0], pairs.values[n - 1]);
        prop_assert!(q >= lo * (1.0 - 1e-10) && q <= hi * (1.0 + 1e-10));
    }
}
