/// Real 3×3 matrix, row-major.
pub type Real3 = [[f64; 3]; 3];

/// Singular values (descending) with the matching right singular vectors.
///
/// `right[k]` is the unit vector `v_k` with `‖M v_k‖ = values[k]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Svd3 {
    pub values: [f64; 3],
    pub right: [[f64; 3]; 3],
}

const MAX_SWEEPS: usize = 60;

/// One-sided Jacobi: rotate column pairs of `M V` until mutually orthogonal.
pub fn svd3(m: &Real3) -> Svd3 {
    let mut a = *m;
    // columns of v accumulate the rotations
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..3 {
            for j in (i + 1)..3 {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for row in &a {
                    alpha += row[i] * row[i];
                    beta += row[j] * row[j];
                    gamma += row[i] * row[j];
                }
                if gamma.abs() <= 1e-17 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for row in a.iter_mut() {
                    let (x, y) = (row[i], row[j]);
                    row[i] = c * x - s * y;
                    row[j] = s * x + c * y;
                }
                for row in v.iter_mut() {
                    let (x, y) = (row[i], row[j]);
                    row[i] = c * x - s * y;
                    row[j] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..3)
        .map(|k| a.iter().map(|row| row[k] * row[k]).sum::<f64>().sqrt())
        .collect();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let mut values = [0.0; 3];
    let mut right = [[0.0; 3]; 3];
    for (slot, &k) in order.iter().enumerate() {
        values[slot] = norms[k];
        for (r, row) in v.iter().enumerate() {
            right[slot][r] = row[k];
        }
    }
    Svd3 { values, right }
}

/// Singular values of a real 3×3 matrix, descending.
pub fn singular_values(m: &Real3) -> [f64; 3] {
    svd3(m).values
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat_vec(m: &Real3, v: &[f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (o, row) in out.iter_mut().zip(m) {
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    #[test]
    fn identity_and_diagonal() {
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert_eq!(singular_values(&id), [1.0, 1.0, 1.0]);
        let d = [[2.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        assert_eq!(singular_values(&d), [2.0, 0.0, 0.0]);
    }

    #[test]
    fn negative_and_permuted_diagonal() {
        let m = [[0.0, 0.0, -3.0], [0.0, 1.0, 0.0], [2.0, 0.0, 0.0]];
        let s = singular_values(&m);
        for (got, want) in s.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_matrix_has_unit_values() {
        let (c, s) = (0.3_f64.cos(), 0.3_f64.sin());
        let m = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, -1.0]];
        for x in singular_values(&m) {
            assert!((x - 1.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn values_match_sum_of_squares_and_vectors(entries in prop::collection::vec(-2.0f64..2.0, 9)) {
            let m: Real3 = [
                [entries[0], entries[1], entries[2]],
                [entries[3], entries[4], entries[5]],
                [entries[6], entries[7], entries[8]],
            ];
            let svd = svd3(&m);
            let frob: f64 = entries.iter().map(|x| x * x).sum();
            let sv2: f64 = svd.values.iter().map(|x| x * x).sum();
            prop_assert!((frob - sv2).abs() < 1e-10);
            prop_assert!(svd.values[0] >= svd.values[1] && svd.values[1] >= svd.values[2]);
            for k in 0..3 {
                let image = mat_vec(&m, &svd.right[k]);
                let n = image.iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!((n - svd.values[k]).abs() < 1e-10);
            }
        }
    }
}
