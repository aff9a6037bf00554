//! Tensor-factor bookkeeping on dense matrices: partial trace and partial
//! transpose over an explicit list of factor dimensions.
//!
//! Factor 0 is the most significant index, matching the convention of
//! [`ComplexMatrix::kron`]: for dims `[d0, d1, ...]` the flat index of the
//! multi-index `(k0, k1, ...)` is `k0·d1·d2·… + k1·d2·… + …`.

use crate::error::{Error, Result};
use crate::linalg::matrix::{C64, ComplexMatrix};

fn check_factvec(m: &ComplexMatrix, dims: &[usize]) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "tensor operations need a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidArgument("zero factor dimension".into()));
    }
    let total: usize = dims.iter().product();
    if total != m.rows() {
        return Err(Error::DimensionMismatch(format!(
            "factor dimensions {dims:?} multiply to {total}, matrix side is {}",
            m.rows()
        )));
    }
    Ok(total)
}

fn checked_subset(dims: &[usize], subset: &[usize]) -> Result<Vec<usize>> {
    let mut s: Vec<usize> = subset.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.len() != subset.len() {
        return Err(Error::InvalidArgument(format!(
            "repeated factor index in {subset:?}"
        )));
    }
    if let Some(&bad) = s.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::InvalidArgument(format!(
            "factor index {bad} out of range for {} factors",
            dims.len()
        )));
    }
    Ok(s)
}

/// Strides for mixed-radix decomposition of flat indices, factor 0 most
/// significant.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Flat offsets contributed by every joint value of the factors in `subset`.
///
/// Entry `t` of the result is `Σ_k digit_k(t) · stride(subset[k])` where `t`
/// runs over the mixed-radix counter on `dims[subset]` in row-major order.
fn subset_offsets(dims: &[usize], subset: &[usize], all_strides: &[usize]) -> Vec<usize> {
    let mut offsets = vec![0usize];
    for &k in subset {
        let mut next = Vec::with_capacity(offsets.len() * dims[k]);
        for &base in &offsets {
            for digit in 0..dims[k] {
                next.push(base + digit * all_strides[k]);
            }
        }
        offsets = next;
    }
    offsets
}

/// Traces out all factors not listed in `keep`.
///
/// The kept factors stay in ascending original order.  An empty `keep`
/// yields the 1x1 matrix holding the full trace; keeping every factor is the
/// identity operation.
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    check_factvec(m, dims)?;
    let keep = checked_subset(dims, keep)?;
    let drop: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let st = strides(dims);
    let keep_offsets = subset_offsets(dims, &keep, &st);
    let drop_offsets = subset_offsets(dims, &drop, &st);
    let out_dim = keep_offsets.len();

    let mut out = ComplexMatrix::zeros(out_dim, out_dim);
    for (a, &ra) in keep_offsets.iter().enumerate() {
        for (b, &rb) in keep_offsets.iter().enumerate() {
            let mut sum = C64::new(0.0, 0.0);
            for &re in &drop_offsets {
                sum += m.get(ra + re, rb + re);
            }
            out.set(a, b, sum);
        }
    }
    Ok(out)
}

/// Transposes the factors listed in `subset` and leaves the rest alone.
///
/// This is a pure relabelling of entries, so applying it twice returns the
/// original matrix bit for bit.
pub fn partial_transpose(
    m: &ComplexMatrix,
    dims: &[usize],
    subset: &[usize],
) -> Result<ComplexMatrix> {
    let total = check_factvec(m, dims)?;
    let subset = checked_subset(dims, subset)?;
    let st = strides(dims);

    // Cache the digit decomposition of every flat index once.
    let digits: Vec<Vec<usize>> = (0..total)
        .map(|mut idx| {
            let mut d = Vec::with_capacity(dims.len());
            for k in 0..dims.len() {
                d.push(idx / st[k]);
                idx %= st[k];
            }
            d
        })
        .collect();

    let mut out = ComplexMatrix::zeros(total, total);
    for row in 0..total {
        for col in 0..total {
            let mut r2 = row;
            let mut c2 = col;
            for &k in &subset {
                let dr = digits[row][k];
                let dc = digits[col][k];
                // Swap the k-th digit between row and column.
                r2 = r2 - dr * st[k] + dc * st[k];
                c2 = c2 - dc * st[k] + dr * st[k];
            }
            out.set(r2, c2, m.get(row, col));
        }
    }
    Ok(out)
}
