//! Seeded random smooth fields for oracle and inequality sweeps.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scatterlab::remainder::{packet_sum, Packet, TrilinearInput};
use scatterlab::{ComplexField, Grid1D};

/// Grid used for the brute-force remainder comparison.
pub fn oracle_grid() -> Grid1D {
    Grid1D::new(64.0, 64).expect("valid grid")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two Gaussian packets, wide enough to stay resolved and localized on the
/// oracle grid for `s ≤ 10`.
pub fn smooth_packets(rng: &mut ChaCha8Rng) -> Vec<Packet> {
    (0..2)
        .map(|_| Packet {
            amplitude: Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            center: rng.gen_range(-2.0..2.0),
            width: rng.gen_range(3.2..3.8),
            carrier: rng.gen_range(-0.15..0.15),
        })
        .collect()
}

pub fn smooth_field(rng: &mut ChaCha8Rng, grid: &Grid1D) -> ComplexField {
    packet_sum(grid, &smooth_packets(rng))
}

pub fn trilinear_input(rng: &mut ChaCha8Rng, s: f64) -> TrilinearInput {
    let grid = oracle_grid();
    let f = smooth_field(rng, &grid);
    let g = smooth_field(rng, &grid);
    TrilinearInput::new(f, g, s).expect("spectral fields on one grid")
}

/// Packets of random width, position and carrier on a wider grid, for the
/// inequality sweeps.
pub fn varied_field(rng: &mut ChaCha8Rng, grid: &Grid1D) -> ComplexField {
    let count = rng.gen_range(1..4);
    let packets: Vec<Packet> = (0..count)
        .map(|_| Packet {
            amplitude: Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            center: rng.gen_range(-5.0..5.0),
            width: rng.gen_range(0.5..3.0),
            carrier: rng.gen_range(-1.0..1.0),
        })
        .collect();
    packet_sum(grid, &packets)
}
