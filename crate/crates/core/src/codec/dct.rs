//! Orthonormal 8x8 type-II cosine transform.

use std::f64::consts::PI;
use std::sync::OnceLock;

pub const N: usize = 8;

fn basis() -> &'static [[f64; N]; N] {
    static BASIS: OnceLock<[[f64; N]; N]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut c = [[0.0; N]; N];
        for (k, row) in c.iter_mut().enumerate() {
            let alpha = if k == 0 {
                (1.0 / N as f64).sqrt()
            } else {
                (2.0 / N as f64).sqrt()
            };
            for (n, v) in row.iter_mut().enumerate() {
                *v = alpha * ((2 * n + 1) as f64 * k as f64 * PI / (2 * N) as f64).cos();
            }
        }
        c
    })
}

/// `C · X · Cᵀ` on a row-major block.
pub fn forward(block: &[f64; N * N]) -> [f64; N * N] {
    let c = basis();
    let mut tmp = [0.0; N * N];
    for u in 0..N {
        for x in 0..N {
            let mut acc = 0.0;
            for y in 0..N {
                acc += c[u][y] * block[y * N + x];
            }
            tmp[u * N + x] = acc;
        }
    }
    let mut out = [0.0; N * N];
    for u in 0..N {
        for v in 0..N {
            let mut acc = 0.0;
            for x in 0..N {
                acc += tmp[u * N + x] * c[v][x];
            }
            out[u * N + v] = acc;
        }
    }
    out
}

/// `Cᵀ · Y · C`, the exact inverse of [`forward`].
pub fn inverse(coeffs: &[f64; N * N]) -> [f64; N * N] {
    let c = basis();
    let mut tmp = [0.0; N * N];
    for y in 0..N {
        for v in 0..N {
            let mut acc = 0.0;
            for u in 0..N {
                acc += c[u][y] * coeffs[u * N + v];
            }
            tmp[y * N + v] = acc;
        }
    }
    let mut out = [0.0; N * N];
    for y in 0..N {
        for x in 0..N {
            let mut acc = 0.0;
            for v in 0..N {
                acc += tmp[y * N + v] * c[v][x];
            }
            out[y * N + x] = acc;
        }
    }
    out
}
