//! Shared test helpers: the worked 5-item instance and an independent
//! LP oracle that enumerates candidate vertices by brute force. The
//! oracle never touches the simplex path it is used to check.
#![allow(dead_code)] // not every test binary uses every helper
#![allow(clippy::needless_range_loop)] // parallel-array index loops

use mkp::instance::MkpInstance;
use mkp::lp::{LinearProgram, RowSense, Sense};

pub fn five_item() -> MkpInstance {
    MkpInstance::new(
        "p5",
        vec![12.0, 12.0, 9.0, 8.0, 8.0],
        vec![vec![11.0, 12.0, 10.0, 10.0, 10.0]],
        vec![30.0],
    )
}

/// Optimal objective of a [0,1]-box LP by exhaustive vertex candidate
/// enumeration: every vertex has some subset of rows tight and the
/// remaining variables at 0 or 1. Returns None when no feasible candidate
/// exists. Intended for n <= 8 and a handful of rows.
pub fn vertex_enumeration_opt(lp: &LinearProgram) -> Option<(f64, Vec<f64>)> {
    let n = lp.num_vars();
    assert!(n <= 8, "oracle guarded to tiny LPs");
    // collect all rows as (coeffs, rhs, is_equality)
    let mut rows: Vec<(Vec<f64>, f64, bool)> = lp
        .rows
        .iter()
        .map(|r| match r.sense {
            RowSense::Le => (r.coeffs.clone(), r.rhs, false),
            RowSense::Ge => (r.coeffs.iter().map(|c| -c).collect(), -r.rhs, false),
        })
        .collect();
    if let Some((coeffs, rhs)) = &lp.equality {
        rows.push((coeffs.clone(), *rhs, true));
    }
    let nrows = rows.len();
    let maximize = lp.sense == Sense::Max;
    let mut best: Option<(f64, Vec<f64>)> = None;

    // subsets of tight rows
    for row_mask in 0u32..(1 << nrows) {
        // equality rows must be tight
        if rows
            .iter()
            .enumerate()
            .any(|(i, (_, _, eq))| *eq && row_mask & (1 << i) == 0)
        {
            continue;
        }
        let tight: Vec<usize> = (0..nrows).filter(|i| row_mask & (1 << i) != 0).collect();
        let k = tight.len();
        if k > n {
            continue;
        }
        // subsets of free variables of the same cardinality
        for var_mask in 0u32..(1 << n) {
            if (var_mask.count_ones() as usize) != k {
                continue;
            }
            let free: Vec<usize> = (0..n).filter(|j| var_mask & (1 << j) != 0).collect();
            let fixed: Vec<usize> = (0..n).filter(|j| var_mask & (1 << j) == 0).collect();
            // all 0/1 assignments of the fixed variables
            for assign in 0u32..(1 << fixed.len()) {
                let mut x = vec![0.0; n];
                for (bit, &j) in fixed.iter().enumerate() {
                    x[j] = if assign & (1 << bit) != 0 { 1.0 } else { 0.0 };
                }
                if k > 0 {
                    // solve the k x k system over the free variables
                    let mut a = vec![vec![0.0; k + 1]; k];
                    for (ri, &row) in tight.iter().enumerate() {
                        let (coeffs, rhs, _) = &rows[row];
                        let mut b = *rhs;
                        for &j in &fixed {
                            b -= coeffs[j] * x[j];
                        }
                        for (ci, &j) in free.iter().enumerate() {
                            a[ri][ci] = coeffs[j];
                        }
                        a[ri][k] = b;
                    }
                    match solve_square(&mut a) {
                        Some(sol) => {
                            for (ci, &j) in free.iter().enumerate() {
                                x[j] = sol[ci];
                            }
                        }
                        None => continue,
                    }
                }
                if x.iter().any(|&v| !(-1e-9..=1.0 + 1e-9).contains(&v)) {
                    continue;
                }
                let feasible = rows.iter().all(|(coeffs, rhs, eq)| {
                    let lhs: f64 = coeffs.iter().zip(&x).map(|(c, v)| c * v).sum();
                    if *eq {
                        (lhs - rhs).abs() <= 1e-7
                    } else {
                        lhs <= rhs + 1e-7
                    }
                });
                if !feasible {
                    continue;
                }
                let obj: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                let better = match &best {
                    None => true,
                    Some((cur, _)) => {
                        if maximize {
                            obj > *cur
                        } else {
                            obj < *cur
                        }
                    }
                };
                if better {
                    best = Some((obj, x.clone()));
                }
            }
        }
    }
    best
}

/// Gaussian elimination with partial pivoting on an augmented k x (k+1)
/// system. None when singular.
fn solve_square(a: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let k = a.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        let inv = 1.0 / a[col][col];
        for c in col..=k {
            a[col][c] *= inv;
        }
        for r in 0..k {
            if r != col && a[r][col] != 0.0 {
                let f = a[r][col];
                for c in col..=k {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    Some((0..k).map(|r| a[r][k]).collect())
}
