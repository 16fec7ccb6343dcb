//! 8x8 integer core transform for residual blocks.
//!
//! The basis is the HEVC 8-point matrix, whose rows have squared norm
//! `64^2 * 8 = 2^15`, so `M X M^T / 2^15` is an orthonormal-scale transform.

pub const SIZE: usize = 8;

const M: [[i64; SIZE]; SIZE] = [
    [64, 64, 64, 64, 64, 64, 64, 64],
    [89, 75, 50, 18, -18, -50, -75, -89],
    [83, 36, -36, -83, -83, -36, 36, 83],
    [75, -18, -89, -50, 50, 89, 18, -75],
    [64, -64, -64, 64, 64, -64, -64, 64],
    [50, -89, 18, 75, -75, -18, 89, -50],
    [36, -83, 83, -36, -36, 83, -83, 36],
    [18, -50, 75, -89, 89, -75, 50, -18],
];

/// Multiply-accumulates of one inverse transform (two separable passes).
pub const OPS_INVERSE: u64 = 2 * (SIZE * SIZE * SIZE) as u64;

fn round_shift(v: i64) -> i32 {
    ((v + (1 << 14)) >> 15) as i32
}

/// Row-major 8x8 residual to coefficients; `c[v * 8 + u]` has horizontal
/// frequency `u` and vertical frequency `v`.
pub fn forward(x: &[i32; SIZE * SIZE]) -> [i32; SIZE * SIZE] {
    let mut tmp = [0i64; SIZE * SIZE];
    for v in 0..SIZE {
        for col in 0..SIZE {
            tmp[v * SIZE + col] = (0..SIZE).map(|row| M[v][row] * i64::from(x[row * SIZE + col])).sum();
        }
    }
    let mut c = [0i32; SIZE * SIZE];
    for v in 0..SIZE {
        for u in 0..SIZE {
            c[v * SIZE + u] = round_shift((0..SIZE).map(|col| tmp[v * SIZE + col] * M[u][col]).sum());
        }
    }
    c
}

pub fn inverse(c: &[i32; SIZE * SIZE]) -> [i32; SIZE * SIZE] {
    let mut tmp = [0i64; SIZE * SIZE];
    for row in 0..SIZE {
        for u in 0..SIZE {
            tmp[row * SIZE + u] = (0..SIZE).map(|v| M[v][row] * i64::from(c[v * SIZE + u])).sum();
        }
    }
    let mut x = [0i32; SIZE * SIZE];
    for row in 0..SIZE {
        for col in 0..SIZE {
            x[row * SIZE + col] = round_shift((0..SIZE).map(|u| tmp[row * SIZE + u] * M[u][col]).sum());
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flat_block_has_only_dc() {
        let c = forward(&[10; 64]);
        assert_eq!(c[0], 80);
        assert!(c[1..].iter().all(|&v| v == 0));
        assert_eq!(inverse(&c), [10; 64]);
    }

    proptest! {
        #[test]
        fn round_trip_is_near_lossless(x in prop::array::uniform32(-255i32..=255)) {
            let mut block = [0i32; 64];
            for (i, v) in block.iter_mut().enumerate() {
                *v = x[i % 32] - x[(i * 7) % 32] / 2;
            }
            let back = inverse(&forward(&block));
            for (a, b) in block.iter().zip(&back) {
                prop_assert!((a - b).abs() <= 3, "{a} vs {b}");
            }
        }
    }
}
