//! Data-parallel helpers. With the `parallel` feature (default) the loops run
//! on rayon; without it the same code runs sequentially.

use nalgebra::{DMatrix, DVector};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Assemble a matrix column by column.
pub fn build_columns<F>(nrows: usize, ncols: usize, column: F) -> DMatrix<f64>
where
    F: Fn(usize) -> DVector<f64> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    let cols: Vec<DVector<f64>> = (0..ncols).into_par_iter().map(column).collect();
    #[cfg(not(feature = "parallel"))]
    let cols: Vec<DVector<f64>> = (0..ncols).map(column).collect();

    let mut m = DMatrix::zeros(nrows, ncols);
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

/// Map over an index range, preserving order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
