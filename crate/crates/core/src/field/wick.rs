/// An ordinary monomial `Π X_{i}` over variable indices, with a coefficient.
pub type Term = (f64, Vec<usize>);

/// Expands the Wick product `:Π_j X_{f_j}:` into ordinary monomials using
/// `:X_{f_1} R: = X_{f_1} :R: − Σ_{j ∈ R} Cov(f_1, f_j) :R∖j:`.
pub fn wick_expand(indices: &[usize], cov: &dyn Fn(usize, usize) -> f64) -> Vec<Term> {
    let Some((&first, rest)) = indices.split_first() else {
        return vec![(1.0, Vec::new())];
    };
    let mut out: Vec<Term> = wick_expand(rest, cov)
        .into_iter()
        .map(|(c, mut m)| {
            m.insert(0, first);
            (c, m)
        })
        .collect();
    for j in 0..rest.len() {
        let c1j = cov(first, rest[j]);
        if c1j == 0.0 {
            continue;
        }
        let mut reduced = rest.to_vec();
        reduced.remove(j);
        out.extend(wick_expand(&reduced, cov).into_iter().map(|(c, m)| (-c1j * c, m)));
    }
    out
}

/// `E[Π_j X_{i_j}]` for a centred Gaussian family: the sum over perfect
/// pairings of products of covariances.
pub fn isserlis_moment(indices: &[usize], cov: &dyn Fn(usize, usize) -> f64) -> f64 {
    if indices.len() % 2 == 1 {
        return 0.0;
    }
    let Some((&first, rest)) = indices.split_first() else {
        return 1.0;
    };
    let mut s = 0.0;
    for j in 0..rest.len() {
        let c = cov(first, rest[j]);
        if c == 0.0 {
            continue;
        }
        let mut reduced = rest.to_vec();
        reduced.remove(j);
        s += c * isserlis_moment(&reduced, cov);
    }
    s
}

/// `E[:Π X_{left}: · :Π X_{right}:]`.
pub fn wick_moment(left: &[usize], right: &[usize], cov: &dyn Fn(usize, usize) -> f64) -> f64 {
    let a = wick_expand(left, cov);
    let b = wick_expand(right, cov);
    let mut s = 0.0;
    for (ca, ma) in &a {
        for (cb, mb) in &b {
            let mut all = ma.clone();
            all.extend_from_slice(mb);
            s += ca * cb * isserlis_moment(&all, cov);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GaussianSampler;
    use crate::rng::stream;
    use nalgebra::DMatrix;

    #[test]
    fn wick_mean_vanishes() {
        let cov = |i: usize, j: usize| [[0.5, 0.2], [0.2, 0.7]][i][j];
        assert_eq!(wick_moment(&[0, 1], &[], &cov), 0.0);
        assert!(wick_moment(&[0, 0, 1, 1], &[], &cov).abs() < 1e-15);
    }

    #[test]
    fn chaos_orthogonality() {
        let cov = |i: usize, j: usize| [[0.5, 0.2, 0.1], [0.2, 0.7, 0.0], [0.1, 0.0, 0.4]][i][j];
        assert!(wick_moment(&[0], &[1, 2], &cov).abs() < 1e-15);
        assert!(wick_moment(&[0, 1], &[0, 1, 2, 2], &cov).abs() < 1e-15);
        assert!(wick_moment(&[0, 0, 0], &[1], &cov).abs() < 1e-15);
    }

    #[test]
    fn second_chaos_norm() {
        let half = |_: usize, _: usize| 0.5;
        assert!((wick_moment(&[0, 0], &[0, 0], &half) - 0.5).abs() < 1e-15);
        // same chaos: E[:X_a X_b: :X_c X_d:] = C_ac C_bd + C_ad C_bc
        let cov = |i: usize, j: usize| [[0.5, 0.2], [0.2, 0.7]][i][j];
        assert!((wick_moment(&[0, 1], &[0, 1], &cov) - (0.5 * 0.7 + 0.2 * 0.2)).abs() < 1e-15);
    }

    #[test]
    fn isserlis_fourth_moment() {
        let c = |_: usize, _: usize| 2.0;
        assert_eq!(isserlis_moment(&[0, 0, 0, 0], &c), 12.0);
        assert_eq!(isserlis_moment(&[0, 0, 0], &c), 0.0);
        assert_eq!(isserlis_moment(&[], &c), 1.0);
    }

    #[test]
    fn moments_against_sampling() {
        let m = DMatrix::from_row_slice(3, 3, &[0.5, 0.2, -0.1, 0.2, 0.7, 0.15, -0.1, 0.15, 0.4]);
        let cov = |i: usize, j: usize| m[(i, j)];
        let s = GaussianSampler::new(&m).unwrap();
        let cases: [(&[usize], &[usize]); 4] =
            [(&[0, 1], &[0, 1]), (&[0, 0], &[2, 2]), (&[0], &[0, 1, 2]), (&[1, 2], &[1, 2])];
        let n = 1_000_000;
        let mut rng = stream(5, 0);
        let mut v = [0.0; 3];
        let mut sums = [(0.0, 0.0); 4];
        let eval = |idx: &[usize], v: &[f64]| -> f64 {
            wick_expand(idx, &cov).iter().map(|(c, mono)| c * mono.iter().map(|&i| v[i]).product::<f64>()).sum()
        };
        for _ in 0..n {
            s.sample(&mut rng, &mut v);
            for (k, (l, r)) in cases.iter().enumerate() {
                let x = eval(l, &v) * eval(r, &v);
                sums[k].0 += x;
                sums[k].1 += x * x;
            }
        }
        for (k, (l, r)) in cases.iter().enumerate() {
            let mean = sums[k].0 / n as f64;
            let se = ((sums[k].1 / n as f64 - mean * mean) / n as f64).sqrt();
            let exact = wick_moment(l, r, &cov);
            assert!((mean - exact).abs() < 3.0 * se, "case {k}: {mean} vs {exact} ± {se}");
        }
    }
}
