//! Schur polynomials evaluated at numeric points via the branching rule
//! `s_λ(x_1…x_m) = Σ_μ s_μ(x_1…x_{m−1}) · x_m^{|λ|−|μ|}` over horizontal strips `λ/μ`.

use super::young::YoungDiagram;
use std::collections::HashMap;

/// `s_λ(x_1, …, x_m)`. Stable for non-negative arguments (every term is non-negative).
pub fn schur_polynomial_eval(lambda: &YoungDiagram, xs: &[f64]) -> f64 {
    let mut memo = HashMap::new();
    eval(lambda.parts(), xs, &mut memo)
}

fn eval(parts: &[usize], xs: &[f64], memo: &mut HashMap<(Vec<usize>, usize), f64>) -> f64 {
    let m = xs.len();
    if parts.is_empty() {
        return 1.0;
    }
    if parts.len() > m {
        return 0.0;
    }
    let key = (parts.to_vec(), m);
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let total: usize = parts.iter().sum();
    let x = xs[m - 1];
    let mut acc = 0.0;
    // μ interlaces λ: λ_{i+1} ≤ μ_i ≤ λ_i, with at most m−1 parts.
    let mut mu = vec![0; parts.len()];
    interlacing(parts, 0, &mut mu, &mut |mu| {
        let trimmed: Vec<usize> = mu.iter().copied().filter(|&p| p > 0).collect();
        if trimmed.len() > m - 1 {
            return;
        }
        let removed = total - trimmed.iter().sum::<usize>();
        acc += eval(&trimmed, &xs[..m - 1], memo) * x.powi(removed as i32);
    });
    memo.insert(key, acc);
    acc
}

fn interlacing(parts: &[usize], i: usize, mu: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if i == parts.len() {
        f(mu);
        return;
    }
    let lo = parts.get(i + 1).copied().unwrap_or(0);
    for v in lo..=parts[i] {
        mu[i] = v;
        interlacing(parts, i + 1, mu, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elementary_cases() {
        let h2 = YoungDiagram::new(vec![2]).unwrap();
        // h_2(x, y) = x² + xy + y²
        assert!((schur_polynomial_eval(&h2, &[2.0, 3.0]) - 19.0).abs() < 1e-12);
        let e2 = YoungDiagram::new(vec![1, 1]).unwrap();
        assert!((schur_polynomial_eval(&e2, &[2.0, 3.0, 5.0]) - 31.0).abs() < 1e-12);
        let l21 = YoungDiagram::new(vec![2, 1]).unwrap();
        // s_{21}(x,y) = x²y + xy²
        assert!((schur_polynomial_eval(&l21, &[2.0, 3.0]) - 30.0).abs() < 1e-12);
        assert_eq!(schur_polynomial_eval(&e2, &[1.0]), 0.0);
    }
}
