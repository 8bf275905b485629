use std::collections::HashMap;

use crate::error::{DcplError, Result};

/// Contingency counts between two labelings plus both marginals.
struct Contingency {
    cells: Vec<f64>,
    rows: Vec<f64>,
    cols: Vec<f64>,
    n: f64,
}

fn relabel(x: &[usize]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let out = x
        .iter()
        .map(|v| {
            let next = map.len();
            *map.entry(*v).or_insert(next)
        })
        .collect();
    (out, map.len())
}

fn contingency(a: &[usize], b: &[usize]) -> Result<Contingency> {
    if a.len() != b.len() {
        return Err(DcplError::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    let (a, ka) = relabel(a);
    let (b, kb) = relabel(b);
    let mut cells = vec![0.0; ka * kb];
    let mut rows = vec![0.0; ka];
    let mut cols = vec![0.0; kb];
    for (&x, &y) in a.iter().zip(&b) {
        cells[x * kb + y] += 1.0;
        rows[x] += 1.0;
        cols[y] += 1.0;
    }
    Ok(Contingency {
        cells,
        rows,
        cols,
        n: a.len() as f64,
    })
}

fn pairs(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index. Labelings that are both a single cluster, or both all
/// singletons, score 1.
pub fn ari(a: &[usize], b: &[usize]) -> Result<f64> {
    let c = contingency(a, b)?;
    if c.n < 2.0 {
        return Ok(1.0);
    }
    let index: f64 = c.cells.iter().map(|&x| pairs(x)).sum();
    let sa: f64 = c.rows.iter().map(|&x| pairs(x)).sum();
    let sb: f64 = c.cols.iter().map(|&x| pairs(x)).sum();
    let expected = sa * sb / pairs(c.n);
    let max = 0.5 * (sa + sb);
    let denom = max - expected;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}

fn entropy(counts: &[f64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| {
            let p = x / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information with arithmetic-mean normalization.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64> {
    let c = contingency(a, b)?;
    if c.n == 0.0 {
        return Ok(1.0);
    }
    let ha = entropy(&c.rows, c.n);
    let hb = entropy(&c.cols, c.n);
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    let kb = c.cols.len();
    let mut mi = 0.0;
    for (x, &ra) in c.rows.iter().enumerate() {
        for (y, &cb) in c.cols.iter().enumerate() {
            let nij = c.cells[x * kb + y];
            if nij > 0.0 {
                mi += nij / c.n * (c.n * nij / (ra * cb)).ln();
            }
        }
    }
    Ok((mi / (0.5 * (ha + hb))).clamp(0.0, 1.0))
}
