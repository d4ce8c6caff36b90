use std::f64::consts::TAU;
use std::sync::Arc;

use alphamod::families::random_bandlimited;
use alphamod::psido::{verify_oscillatory_decay, verify_piece_convolution};
use alphamod::spaces::alpha_norm_equiv;
use alphamod::symbols::{Bessel, Product, RandomTrig};
use alphamod::{
    alpha_norm, multiplier_apply, quantize_apply, quantize_direct, AlphaCover, BandKind, Complex64, Grid, GridSignal,
    ModulatedFamily, PieceBuilder, QuasiNormParams, Symbol, XProfile,
};

fn grid() -> Grid {
    Grid::new(1, 256, TAU * 4.0).unwrap()
}

#[test]
fn product_with_multiplier_factor_composes() {
    let g = grid();
    let f = random_bandlimited(&g, 24.0, 1.0, 10, 3).unwrap();
    for seed in 0..5 {
        let sigma: Arc<dyn Symbol> = Arc::new(RandomTrig::seeded(1, 6, g.dxi(), 16, 0.5, seed).unwrap());
        let tau: Arc<dyn Symbol> = Arc::new(Bessel::new(1, -1.0).unwrap());
        let product = Product::new(sigma.clone(), tau).unwrap();
        let lhs = quantize_direct(&product, &f).unwrap();
        let inner = multiplier_apply(|xi| Complex64::new((1.0 + xi[0] * xi[0]).powf(-0.5), 0.0), &f);
        let rhs = quantize_direct(sigma.as_ref(), &inner).unwrap();
        assert!(lhs.relative_l2_distance(&rhs).unwrap() <= 1e-12);
    }
}

#[test]
fn fast_route_matches_direct_sum() {
    let g = grid();
    let cover = Arc::new(AlphaCover::for_grid(0.5, &g).unwrap());
    let sigma = ModulatedFamily::uniform(cover, 0.7, &[1.0], XProfile::Harmonics { ratio: 0.4, terms: 3 }).unwrap();
    let f = random_bandlimited(&g, 24.0, 1.0, 10, 5).unwrap();
    let fast = quantize_apply(&sigma, &f).unwrap();
    let direct = quantize_direct(&sigma, &f).unwrap();
    assert!(fast.relative_l2_distance(&direct).unwrap() <= 1e-12);
}

#[test]
fn pure_tone_in_a_plateau_has_equal_norms() {
    let g = Grid::new(1, 512, TAU * 4.0).unwrap();
    let cover = AlphaCover::for_grid(0.0, &g).unwrap();
    let params = QuasiNormParams::new(1.0, f64::INFINITY, 0.0, 0.0).unwrap();
    for k in [-5i64, 0, 3, 11] {
        let xi = k as f64;
        let f = GridSignal::from_fn(g, |x| Complex64::from_polar(1.0, xi * x[0])).unwrap();
        let r = alpha_norm_equiv(&f, &cover, &params).unwrap() / alpha_norm(&f, &cover, &params).unwrap();
        assert!((r - 1.0).abs() <= 1e-6, "k={k}: {r}");
    }
}

#[test]
fn equivalent_norms_stay_comparable() {
    let g = Grid::new(1, 1024, TAU * 8.0).unwrap();
    let cover = AlphaCover::for_grid(0.5, &g).unwrap();
    let params = QuasiNormParams::new(1.0, 1.0, 0.0, 0.5).unwrap();
    let ratios: Vec<f64> = (0..20)
        .map(|seed| {
            let f = random_bandlimited(&g, 50.0, 1.0, 8, seed).unwrap();
            alpha_norm_equiv(&f, &cover, &params).unwrap() / alpha_norm(&f, &cover, &params).unwrap()
        })
        .collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |a, &r| (a.0.min(r), a.1.max(r)));
    assert!(lo >= 1.0 - 1e-12, "rho_k >= eta_k pointwise gives ratio >= 1, got {lo}");
    assert!(hi <= cover.overlap() as f64 + 1e-12, "{hi}");
}

#[test]
fn piece_kernels_and_outputs_obey_their_bounds() {
    let g = Grid::new(1, 1024, TAU * 4.0).unwrap();
    let cover = Arc::new(AlphaCover::for_grid(0.5, &g).unwrap());
    let sigma =
        ModulatedFamily::uniform(cover.clone(), 1.0, &[1.0], XProfile::Harmonics { ratio: 0.5, terms: 10 }).unwrap();
    let builder = PieceBuilder::new(&sigma, &cover, g).unwrap();
    let pieces = builder.pieces(4, 1..=8, true);
    let osc = verify_oscillatory_decay(&pieces, 2, &[1, 2]).unwrap();
    assert!(osc.passed, "{osc:?}");

    let rho = cover.bands(&g, BandKind::Rho).unwrap();
    let f = random_bandlimited(&g, 60.0, 1.0, 20, 8).unwrap();
    let mut cases = Vec::new();
    for m in [2i64, 4, 6] {
        for piece in builder.pieces(m, 1..=6, false) {
            let out = piece.apply(&f).unwrap();
            for k in (m - 3)..=(m + 3 + piece.ell) {
                cases.push((out.clone(), [k, 0], piece.ell));
            }
        }
    }
    for p in [0.5, 1.0, 2.0] {
        let r = verify_piece_convolution(&cases, &rho, p).unwrap();
        assert!(r.passed, "p={p}: {r:?}");
    }
}
