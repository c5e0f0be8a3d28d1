//! Minimal dense row-major matrix/vector kernels shared by the hand-written
//! models. Everything trains on flat `Vec<f64>` storage so parameter vectors,
//! gradients, and optimizer state stay congruent by construction.

/// `out = m * x` where `m` is `rows x cols` row-major and `x` has `cols` entries.
pub(crate) fn matvec(m: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    let mut out = vec![0.0; rows];
    for r in 0..rows {
        let row = &m[r * cols..(r + 1) * cols];
        let mut acc = 0.0;
        for (w, v) in row.iter().zip(x) {
            acc += w * v;
        }
        out[r] = acc;
    }
    out
}

/// `out += m * x`.
pub(crate) fn matvec_acc(m: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(m.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    debug_assert_eq!(out.len(), rows);
    for r in 0..rows {
        let row = &m[r * cols..(r + 1) * cols];
        let mut acc = 0.0;
        for (w, v) in row.iter().zip(x) {
            acc += w * v;
        }
        out[r] += acc;
    }
}

/// `out += m^T * y` where `y` has `rows` entries and `out` has `cols`.
pub(crate) fn matvec_transpose_acc(
    m: &[f64],
    rows: usize,
    cols: usize,
    y: &[f64],
    out: &mut [f64],
) {
    debug_assert_eq!(m.len(), rows * cols);
    debug_assert_eq!(y.len(), rows);
    debug_assert_eq!(out.len(), cols);
    for r in 0..rows {
        let row = &m[r * cols..(r + 1) * cols];
        let yr = y[r];
        for (o, w) in out.iter_mut().zip(row) {
            *o += yr * w;
        }
    }
}

/// Rank-one update `m += u * v^T` for row-major `m` of shape `(u.len, v.len)`.
pub(crate) fn outer_acc(m: &mut [f64], u: &[f64], v: &[f64]) {
    debug_assert_eq!(m.len(), u.len() * v.len());
    for (r, &ur) in u.iter().enumerate() {
        let row = &mut m[r * v.len()..(r + 1) * v.len()];
        for (w, &vc) in row.iter_mut().zip(v) {
            *w += ur * vc;
        }
    }
}
