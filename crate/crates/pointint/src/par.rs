//! Thin data-parallel layer. With the `parallel` feature the loops run on
//! rayon; without it everything falls back to the `_seq` paths. The `_seq`
//! variants stay public so the bench suite can compare both on one build.

use num_complex::Complex64;

pub fn for_each_chunk_mut_seq<T, F>(data: &mut [T], chunk: usize, f: F)
where
    F: Fn(usize, &mut [T]) + Sync,
{
    for (i, c) in data.chunks_mut(chunk).enumerate() {
        f(i, c);
    }
}

#[cfg(feature = "parallel")]
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    use rayon::prelude::*;
    data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    for_each_chunk_mut_seq(data, chunk, f);
}

pub fn map_indexed_seq<F>(data: &mut [Complex64], f: F)
where
    F: Fn(usize, Complex64) -> Complex64 + Sync,
{
    for (i, v) in data.iter_mut().enumerate() {
        *v = f(i, *v);
    }
}

#[cfg(feature = "parallel")]
pub fn map_indexed<F>(data: &mut [Complex64], f: F)
where
    F: Fn(usize, Complex64) -> Complex64 + Sync,
{
    use rayon::prelude::*;
    data.par_iter_mut()
        .enumerate()
        .for_each(|(i, v)| *v = f(i, *v));
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<F>(data: &mut [Complex64], f: F)
where
    F: Fn(usize, Complex64) -> Complex64 + Sync,
{
    map_indexed_seq(data, f);
}

pub fn sum_indexed_seq<F>(len: usize, f: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync,
{
    (0..len).map(f).sum()
}

#[cfg(feature = "parallel")]
pub fn sum_indexed<F>(len: usize, f: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync + Send,
{
    use rayon::prelude::*;
    (0..len).into_par_iter().map(f).sum()
}

#[cfg(not(feature = "parallel"))]
pub fn sum_indexed<F>(len: usize, f: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync,
{
    sum_indexed_seq(len, f)
}

pub fn fill_indexed_seq<F>(data: &mut [Complex64], f: F)
where
    F: Fn(usize) -> Complex64 + Sync,
{
    for (i, v) in data.iter_mut().enumerate() {
        *v = f(i);
    }
}

#[cfg(feature = "parallel")]
pub fn fill_indexed<F>(data: &mut [Complex64], f: F)
where
    F: Fn(usize) -> Complex64 + Sync,
{
    use rayon::prelude::*;
    data.par_iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
}

#[cfg(not(feature = "parallel"))]
pub fn fill_indexed<F>(data: &mut [Complex64], f: F)
where
    F: Fn(usize) -> Complex64 + Sync,
{
    fill_indexed_seq(data, f);
}
