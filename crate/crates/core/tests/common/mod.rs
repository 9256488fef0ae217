#![allow(dead_code)]

use orbitflag::linalg::unit;
use orbitflag::{CMatrix, LindbladSystem};

/// `sqrt(rate) e_{to, from}` with one-based indices.
pub fn jump(n: usize, to: usize, from: usize, rate: f64) -> CMatrix {
    unit(n, to - 1, from - 1).scale(rate.sqrt())
}

pub fn jump_system(n: usize, entries: &[(usize, usize, f64)]) -> LindbladSystem {
    LindbladSystem::new(n, entries.iter().map(|&(t, f, r)| jump(n, t, f, r)).collect()).unwrap()
}

pub fn four_jumps() -> LindbladSystem {
    jump_system(4, &[(1, 2, 5.0), (2, 1, 3.0), (2, 3, 4.0), (3, 4, 3.0)])
}

pub fn eight_jumps() -> LindbladSystem {
    jump_system(
        4,
        &[(1, 2, 4.0), (1, 3, 8.0), (1, 4, 6.0), (2, 3, 13.0), (3, 2, 8.0), (3, 4, 17.0), (4, 2, 4.0), (4, 3, 5.0)],
    )
}

/// Random jump + de-phasing system with rates in `[0, 10)`.
pub fn random_jump_dephasing(rng: &mut orbitflag::SeededRng, n: usize) -> LindbladSystem {
    let mut ops = Vec::new();
    for j in 1..=n {
        for k in 1..=n {
            if j != k && rng.uniform() < 0.7 {
                ops.push(jump(n, j, k, 10.0 * rng.uniform()));
            }
        }
    }
    let diag: Vec<f64> = (0..n).map(|_| rng.gaussian()).collect();
    ops.push(orbitflag::linalg::diag_real(&diag));
    LindbladSystem::new(n, ops).unwrap()
}
