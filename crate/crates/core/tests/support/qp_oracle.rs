//! Exhaustive active-set oracle for the ε-SVR dual
//!
//! ```text
//! minimize ½βᵀKβ − yᵀβ + ε Σ|βᵢ|   subject to Σβᵢ = 0, |βᵢ| ≤ C
//! ```
//!
//! For each assignment of the coefficients to one of five states (at −C,
//! free negative, zero, free positive, at +C) the oracle solves the
//! stationarity system of the face restricted to the free coefficients,
//! keeps solutions that are feasible and sign-consistent, and reports the
//! smallest objective found. The problem is convex, so that is the optimum.
//! Cost is `5ⁿ` small solves; keep `n ≤ 8`.

pub fn dual_objective(k: &[Vec<f64>], y: &[f64], eps: f64, beta: &[f64]) -> f64 {
    let n = y.len();
    let mut v = 0.0;
    for i in 0..n {
        let kb: f64 = (0..n).map(|j| k[i][j] * beta[j]).sum();
        v += 0.5 * beta[i] * kb - y[i] * beta[i] + eps * beta[i].abs();
    }
    v
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let m = b.len();
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..m {
            let f = a[r][col] / a[col][col];
            for c in col..m {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

pub fn oracle(k: &[Vec<f64>], y: &[f64], c: f64, eps: f64) -> f64 {
    oracle_solution(k, y, c, eps).0
}

/// Optimal objective and a minimizing coefficient vector.
pub fn oracle_solution(k: &[Vec<f64>], y: &[f64], c: f64, eps: f64) -> (f64, Vec<f64>) {
    let n = y.len();
    let feas = 1e-9;
    let mut best = f64::INFINITY;
    let mut arg = vec![0.0; n];
    let total = 5usize.pow(n as u32);
    let mut state = vec![0u8; n];
    for code in 0..total {
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 5) as u8;
            rest /= 5;
        }
        // 0: −C, 1: free negative, 2: zero, 3: free positive, 4: +C
        let mut beta = vec![0.0; n];
        let mut free = Vec::new();
        for i in 0..n {
            match state[i] {
                0 => beta[i] = -c,
                4 => beta[i] = c,
                1 | 3 => free.push(i),
                _ => {}
            }
        }
        let fixed_sum: f64 = beta.iter().sum();
        if free.is_empty() {
            if fixed_sum.abs() > feas {
                continue;
            }
        } else {
            let m = free.len();
            let mut a = vec![vec![0.0; m + 1]; m + 1];
            let mut rhs = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (cc, &j) in free.iter().enumerate() {
                    a[r][cc] = k[i][j];
                }
                a[r][m] = 1.0;
                a[m][r] = 1.0;
                let sign = if state[i] == 3 { 1.0 } else { -1.0 };
                let kb: f64 = (0..n).map(|j| k[i][j] * beta[j]).sum();
                rhs[r] = y[i] - eps * sign - kb;
            }
            rhs[m] = -fixed_sum;
            let Some(sol) = solve_linear(a, rhs) else {
                continue;
            };
            let mut ok = true;
            for (r, &i) in free.iter().enumerate() {
                let v = sol[r];
                let consistent = if state[i] == 3 { v >= -feas } else { v <= feas };
                if !consistent || v.abs() > c + feas {
                    ok = false;
                    break;
                }
                beta[i] = v;
            }
            if !ok {
                continue;
            }
        }
        let v = dual_objective(k, y, eps, &beta);
        if v < best {
            best = v;
            arg = beta;
        }
    }
    (best, arg)
}
