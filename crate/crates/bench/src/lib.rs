//! Shared fixtures for the benchmarks.

use std::f64::consts::TAU;

use alphamod::families::random_bandlimited;
use alphamod::{AlphaCover, Grid, GridSignal};

/// One-dimensional grid with Nyquist frequency `n / 8`.
pub fn grid(n: usize) -> Grid {
    Grid::new(1, n, TAU * 4.0).expect("valid grid")
}

/// Random band-limited signal using half the band.
pub fn signal(n: usize, seed: u64) -> GridSignal {
    let g = grid(n);
    random_bandlimited(&g, g.nyquist() / 2.0, 1.0, 16, seed).expect("window fits")
}

pub fn cover(alpha: f64, n: usize) -> AlphaCover {
    AlphaCover::for_grid(alpha, &grid(n)).expect("cover fits the grid")
}
