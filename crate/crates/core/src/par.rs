//! Row-wise loop helpers with a sequential fallback.
//!
//! Fields are stored row-major with the x index outermost, so one "row" is
//! the θ-circle at a fixed x station. Writes are partitioned by row; sums
//! and extrema are computed per row and then folded in row order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
fn go_parallel() -> bool {
    rayon::current_num_threads() > 1
}

/// Calls `f(i, row)` for every row of `out`.
pub fn for_each_row<F>(out: &mut [f64], ny: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if go_parallel() {
        out.par_chunks_mut(ny)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
        return;
    }
    out.chunks_mut(ny).enumerate().for_each(|(i, row)| f(i, row));
}

/// Calls `f(i, row_a, row_b)` for matching rows of two outputs.
pub fn for_each_row2<F>(a: &mut [f64], b: &mut [f64], ny: usize, f: F)
where
    F: Fn(usize, &mut [f64], &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if go_parallel() {
        a.par_chunks_mut(ny)
            .zip(b.par_chunks_mut(ny))
            .enumerate()
            .for_each(|(i, (ra, rb))| f(i, ra, rb));
        return;
    }
    a.chunks_mut(ny)
        .zip(b.chunks_mut(ny))
        .enumerate()
        .for_each(|(i, (ra, rb))| f(i, ra, rb));
}

/// Builds a node field from `f(i, j)`.
pub fn map_nodes<F>(nx: usize, ny: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, usize) -> f64 + Sync + Send,
{
    let mut out = vec![0.0; nx * ny];
    for_each_row(&mut out, ny, |i, row| {
        for (j, v) in row.iter_mut().enumerate() {
            *v = f(i, j);
        }
    });
    out
}

/// Evaluates `f(i)` for every row, returning the results in row order.
pub fn per_row<T, F>(nx: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if go_parallel() {
        return (0..nx).into_par_iter().map(f).collect();
    }
    (0..nx).map(f).collect()
}

/// Deterministic sum of `f(i, j)` over all nodes.
pub fn sum_nodes<F>(nx: usize, ny: usize, f: F) -> f64
where
    F: Fn(usize, usize) -> f64 + Sync + Send,
{
    per_row(nx, |i| (0..ny).map(|j| f(i, j)).sum::<f64>())
        .into_iter()
        .sum()
}

/// Largest `f(i, j)` and the first node (row-major) attaining it.
/// NaN values win, so a corrupted field cannot hide behind a finite maximum.
pub fn argmax_nodes<F>(nx: usize, ny: usize, f: F) -> (f64, (usize, usize))
where
    F: Fn(usize, usize) -> f64 + Sync + Send,
{
    let rows = per_row(nx, |i| {
        let mut best = (f64::NEG_INFINITY, 0usize);
        for j in 0..ny {
            let v = f(i, j);
            if v > best.0 || (v.is_nan() && !best.0.is_nan()) {
                best = (v, j);
            }
        }
        best
    });
    let mut best = (f64::NEG_INFINITY, (0, 0));
    for (i, (v, j)) in rows.into_iter().enumerate() {
        if v > best.0 || (v.is_nan() && !best.0.is_nan()) {
            best = (v, (i, j));
        }
    }
    best
}

/// Smallest `f(i, j)` and the first node attaining it.
pub fn argmin_nodes<F>(nx: usize, ny: usize, f: F) -> (f64, (usize, usize))
where
    F: Fn(usize, usize) -> f64 + Sync + Send,
{
    let (v, at) = argmax_nodes(nx, ny, |i, j| -f(i, j));
    (-v, at)
}

/// `y += a * x` over whole fields.
pub fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    #[cfg(feature = "parallel")]
    if go_parallel() {
        y.par_iter_mut().zip(x.par_iter()).for_each(|(y, x)| *y += a * x);
        return;
    }
    y.iter_mut().zip(x).for_each(|(y, x)| *y += a * x);
}
