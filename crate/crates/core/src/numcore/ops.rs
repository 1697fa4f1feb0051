//! Forward kernels shared by the eager API and the autodiff graph.

use super::tensor::Tensor;
use crate::error::{shape_err, Error, Result};

/// Variance stabilizer used by [`layer_norm`].
pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Lower clamp applied to probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// What a masked softmax does with a row that has no attendable position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmptyRow {
    Error,
    /// Emit an all-zero row (the attention term vanishes).
    Zero,
}

pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = a.dims2();
    let (k2, n) = b.dims2();
    if k != k2 {
        return Err(shape_err("matmul", format!("({m},{k}) x ({k2},{n})")));
    }
    let (av, bv) = (a.values(), b.values());
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = av[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let brow = &bv[p * n..(p + 1) * n];
            for (o, b) in orow.iter_mut().zip(brow) {
                *o += aip * b;
            }
        }
    }
    Tensor::matrix(m, n, out)
}

/// `a · bᵀ` for `a: (m, k)`, `b: (n, k)`.
pub fn matmul_nt(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = a.dims2();
    let (n, k2) = b.dims2();
    if k != k2 {
        return Err(shape_err("matmul_nt", format!("({m},{k}) x ({n},{k2})ᵀ")));
    }
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let ar = a.row(i);
        for j in 0..n {
            out[i * n + j] = ar.iter().zip(b.row(j)).map(|(x, y)| x * y).sum();
        }
    }
    Tensor::matrix(m, n, out)
}

/// `aᵀ · b` for `a: (k, m)`, `b: (k, n)`.
pub fn matmul_tn(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (k, m) = a.dims2();
    let (k2, n) = b.dims2();
    if k != k2 {
        return Err(shape_err("matmul_tn", format!("({k},{m})ᵀ x ({k2},{n})")));
    }
    let mut out = vec![0.0; m * n];
    for p in 0..k {
        let ar = a.row(p);
        let br = b.row(p);
        for (i, &x) in ar.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, y) in orow.iter_mut().zip(br) {
                *o += x * y;
            }
        }
    }
    Tensor::matrix(m, n, out)
}

pub fn transpose(a: &Tensor) -> Tensor {
    let (m, n) = a.dims2();
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            out[j * m + i] = a.values()[i * n + j];
        }
    }
    Tensor::matrix(n, m, out).expect("transpose preserves size")
}

/// Softmax along the last axis, with max subtraction.
pub fn softmax(x: &Tensor) -> Result<Tensor> {
    masked_softmax(x, None, EmptyRow::Error)
}

/// Row softmax where `mask[i * cols + j] == false` forces weight 0.
pub fn masked_softmax(x: &Tensor, mask: Option<&[bool]>, empty: EmptyRow) -> Result<Tensor> {
    let (r, c) = x.dims2();
    if c == 0 || x.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if let Some(m) = mask {
        if m.len() != r * c {
            return Err(shape_err("masked_softmax", "mask does not match scores"));
        }
    }
    let mut out = vec![0.0; r * c];
    for i in 0..r {
        let row = x.row(i);
        let allowed = |j: usize| mask.is_none_or(|m| m[i * c + j]);
        let max = (0..c)
            .filter(|&j| allowed(j))
            .map(|j| row[j])
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            match empty {
                EmptyRow::Error => return Err(Error::NoAttendablePositions { row: i }),
                EmptyRow::Zero => continue,
            }
        }
        let orow = &mut out[i * c..(i + 1) * c];
        let mut sum = 0.0;
        for j in 0..c {
            if allowed(j) {
                orow[j] = (row[j] - max).exp();
                sum += orow[j];
            }
        }
        for o in orow.iter_mut() {
            *o /= sum;
        }
    }
    Tensor::new(x.shape().to_vec(), out)
}

/// Per-row normalization statistics kept for the backward pass.
#[derive(Debug, Clone)]
pub struct LayerNormCache {
    pub normalized: Tensor,
    pub inv_std: Vec<f64>,
}

/// Layer norm over the last axis: `gain ⊙ (x − mean)/√(var + ε) + bias`.
pub fn layer_norm(x: &Tensor, gain: &Tensor, bias: &Tensor) -> Result<Tensor> {
    layer_norm_with_cache(x, gain, bias).map(|(y, _)| y)
}

pub fn layer_norm_with_cache(
    x: &Tensor,
    gain: &Tensor,
    bias: &Tensor,
) -> Result<(Tensor, LayerNormCache)> {
    let (r, c) = x.dims2();
    if c < 2 {
        return Err(shape_err(
            "layer_norm",
            format!("normalized axis has length {c}"),
        ));
    }
    if gain.len() != c || bias.len() != c {
        return Err(shape_err(
            "layer_norm",
            "gain/bias length differs from row length",
        ));
    }
    let mut normalized = vec![0.0; r * c];
    let mut out = vec![0.0; r * c];
    let mut inv_std = Vec::with_capacity(r);
    for i in 0..r {
        let row = x.row(i);
        let mean = row.iter().sum::<f64>() / c as f64;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c as f64;
        let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        inv_std.push(inv);
        for j in 0..c {
            let nv = (row[j] - mean) * inv;
            normalized[i * c + j] = nv;
            out[i * c + j] = gain.values()[j] * nv + bias.values()[j];
        }
    }
    let shape = x.shape().to_vec();
    Ok((
        Tensor::new(shape.clone(), out)?,
        LayerNormCache {
            normalized: Tensor::new(shape, normalized)?,
            inv_std,
        },
    ))
}

/// `−Σ yᵢ ln max(ŷᵢ, 1e-12)`; for one-hot `y` this is `−ln ŷ[true]`.
pub fn cross_entropy(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(shape_err(
            "cross_entropy",
            format!("target has {} classes, prediction {}", y.len(), y_hat.len()),
        ));
    }
    Ok(y.iter()
        .zip(y_hat)
        .filter(|(t, _)| **t != 0.0)
        .map(|(t, p)| -t * p.clamp(PROB_FLOOR, 1.0).ln())
        .sum())
}

/// Scaled dot-product attention; returns `(weights · V, weights)`.
pub fn scaled_dot_attention(
    q: &Tensor,
    k: &Tensor,
    v: &Tensor,
    mask: Option<&[bool]>,
) -> Result<(Tensor, Tensor)> {
    if k.rows() != v.rows() {
        return Err(shape_err("attention", "keys and values differ in length"));
    }
    let scale = 1.0 / (q.cols() as f64).sqrt();
    let scores = matmul_nt(q, k)?.map(|s| s * scale);
    let weights = masked_softmax(&scores, mask, EmptyRow::Error)?;
    let out = matmul(&weights, v)?;
    Ok((out, weights))
}

/// Causal mask for `n` positions: row `i` may attend to `j <= i`.
pub fn causal_mask(n: usize) -> Vec<bool> {
    (0..n * n).map(|ij| ij % n <= ij / n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let s = softmax(&Tensor::vector(vec![0.0, 0.0])).unwrap();
        assert_eq!(s.values(), &[0.5, 0.5]);
    }

    #[test]
    fn softmax_matches_direct_exponentiation() {
        let x = [1.0f64, 2.0, 3.0];
        let z: f64 = x.iter().map(|v| v.exp()).sum();
        let oracle: Vec<f64> = x.iter().map(|v| v.exp() / z).collect();
        let s = softmax(&Tensor::vector(x.to_vec())).unwrap();
        for (a, b) in s.values().iter().zip(&oracle) {
            assert!(close(*a, *b, 1e-15));
        }
        assert!(close(s.values()[0], 0.0900, 1e-4));
        assert!(close(s.values()[1], 0.2447, 1e-4));
        assert!(close(s.values()[2], 0.6652, 1e-4));
    }

    #[test]
    fn softmax_of_huge_logits_stays_finite() {
        let s = softmax(&Tensor::vector(vec![1000.0, 1001.0])).unwrap();
        assert!(s.is_finite());
        assert!(close(s.values().iter().sum(), 1.0, 1e-12));
    }

    #[test]
    fn softmax_rejects_empty_axis() {
        let err = softmax(&Tensor::vector(vec![])).unwrap_err();
        assert_eq!(err.to_string(), "empty distribution");
    }

    #[test]
    fn layer_norm_two_values() {
        let x = Tensor::vector(vec![1.0, 3.0]);
        let y = layer_norm(&x, &Tensor::full(&[2], 1.0), &Tensor::zeros(&[2])).unwrap();
        let expected = 1.0 / (1.0f64 + LAYER_NORM_EPS).sqrt();
        assert!(close(y.values()[0], -expected, 1e-15));
        assert!(close(y.values()[1], expected, 1e-15));
        assert!(close(y.values()[1], 0.99999, 1e-5));
    }

    #[test]
    fn layer_norm_constant_row_and_zero_gain() {
        let y = layer_norm(
            &Tensor::vector(vec![5.0, 5.0, 5.0]),
            &Tensor::full(&[3], 1.0),
            &Tensor::zeros(&[3]),
        )
        .unwrap();
        assert_eq!(y.values(), &[0.0, 0.0, 0.0]);

        let bias = Tensor::vector(vec![0.3, -0.7]);
        let y = layer_norm(
            &Tensor::vector(vec![4.0, -2.0]),
            &Tensor::zeros(&[2]),
            &bias,
        )
        .unwrap();
        assert_eq!(y.values(), bias.values());
    }

    #[test]
    fn layer_norm_needs_two_columns() {
        let one = Tensor::vector(vec![1.0]);
        assert!(layer_norm(&one, &one, &one).is_err());
    }

    #[test]
    fn layer_norm_standardizes_rows() {
        let x = Tensor::from_rows(&[vec![0.3, -1.2, 4.0, 2.2], vec![9.0, 1.0, -3.0, 0.5]]).unwrap();
        let y = layer_norm(&x, &Tensor::full(&[4], 1.0), &Tensor::zeros(&[4])).unwrap();
        for i in 0..2 {
            let row = y.row(i);
            let mean = row.iter().sum::<f64>() / 4.0;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
            let xr = x.row(i);
            let xm = xr.iter().sum::<f64>() / 4.0;
            let xv = xr.iter().map(|v| (v - xm).powi(2)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-9);
            assert!(close(var, xv / (xv + LAYER_NORM_EPS), 1e-9));
        }
    }

    #[test]
    fn cross_entropy_cases() {
        assert_eq!(cross_entropy(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert!(close(
            cross_entropy(&[1.0, 0.0], &[0.5, 0.5]).unwrap(),
            2f64.ln(),
            1e-15
        ));
        let clamped = cross_entropy(&[0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!(close(clamped, -(1e-12f64).ln(), 1e-12));
        assert!(close(clamped, 27.63, 0.01));
        assert!(cross_entropy(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn attention_single_key_copies_value() {
        let q = Tensor::from_rows(&[vec![0.3, -0.2]]).unwrap();
        let k = Tensor::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let v = Tensor::from_rows(&[vec![7.0, -1.0, 0.5]]).unwrap();
        let (out, w) = scaled_dot_attention(&q, &k, &v, None).unwrap();
        assert_eq!(w.values(), &[1.0]);
        assert_eq!(out.values(), v.values());
    }

    #[test]
    fn attention_orthogonal_query_is_uniform() {
        let q = Tensor::from_rows(&[vec![0.0, 1.0]]).unwrap();
        let k = Tensor::from_rows(&[vec![1.0, 0.0], vec![-3.0, 0.0], vec![2.0, 0.0]]).unwrap();
        let v = Tensor::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let (_, w) = scaled_dot_attention(&q, &k, &v, None).unwrap();
        for &x in w.values() {
            assert!(close(x, 1.0 / 3.0, 1e-15));
        }
    }

    #[test]
    fn attention_two_keys_with_log3_gap() {
        // d_k = 1 so the scaled score equals the raw dot product.
        let q = Tensor::from_rows(&[vec![1.0]]).unwrap();
        let k = Tensor::from_rows(&[vec![0.0], vec![3f64.ln()]]).unwrap();
        let v = Tensor::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let (out, w) = scaled_dot_attention(&q, &k, &v, None).unwrap();
        assert!(close(w.values()[0], 0.25, 1e-15));
        assert!(close(w.values()[1], 0.75, 1e-15));
        assert!(close(out.values()[0], 0.75, 1e-15));
    }

    #[test]
    fn attention_fully_masked_row_errors() {
        let q = Tensor::from_rows(&[vec![1.0]]).unwrap();
        let k = Tensor::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let err = scaled_dot_attention(&q, &k, &k, Some(&[false, false])).unwrap_err();
        assert_eq!(err.to_string(), "no attendable positions in row 0");
    }

    #[test]
    fn causal_mask_layout() {
        assert_eq!(
            causal_mask(3),
            vec![true, false, false, true, true, false, true, true, true]
        );
    }

    #[test]
    fn matmul_variants_agree() {
        let a = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![-1.0, 0.5]]).unwrap();
        let b = Tensor::from_rows(&[vec![0.5, -1.0, 2.0], vec![1.5, 0.0, 1.0]]).unwrap();
        let ab = matmul(&a, &b).unwrap();
        assert_eq!(ab, matmul_nt(&a, &transpose(&b)).unwrap());
        assert_eq!(ab, matmul_tn(&transpose(&a), &b).unwrap());
    }
}
