//! Brute-force Helly oracle: every subfamily of a given size, then the whole
//! family, each decided by one LP.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::LinearProgram;

use super::ConvexSetSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct HellyReport {
    pub all_subfamilies_intersect: bool,
    pub global_intersects: bool,
    /// A point of the full intersection.
    pub witness: Option<Vec<f64>>,
    /// First subfamily (lexicographic) with empty intersection.
    pub failing_subfamily: Option<Vec<usize>>,
    pub subfamilies_checked: usize,
}

fn intersection_point(sets: &[ConvexSetSpec], idx: &[usize], d: usize) -> Result<Option<Vec<f64>>> {
    let mut lp = LinearProgram::new(d);
    for j in 0..d {
        lp.set_free(j, true);
    }
    for &i in idx {
        sets[i].add_rows(&mut lp, 0);
    }
    let s = lp.solve()?;
    Ok(s.is_optimal().then_some(s.x))
}

/// Calls `f` on every `size`-subset of `0..m` in lexicographic order until it
/// returns `false`.
pub(crate) fn for_each_subset(m: usize, size: usize, mut f: impl FnMut(&[usize]) -> Result<bool>) -> Result<()> {
    if size > m {
        return Ok(());
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        if !f(&idx)? {
            return Ok(());
        }
        // advance
        let mut i = size;
        loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            if idx[i] < m - size + i {
                idx[i] += 1;
                for j in i + 1..size {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Checks every subfamily of `subset_size` sets (all sets if fewer) and the
/// whole family.
pub fn helly_check(sets: &[ConvexSetSpec], d: usize, subset_size: usize) -> Result<HellyReport> {
    helly_check_containing(sets, d, subset_size, None)
}

/// As [`helly_check`], restricted to subfamilies that contain `must_contain`
/// when given. With a set of affine dimension `≤ ℓ` as `must_contain`,
/// `subset_size = ℓ + 2` is enough.
pub fn helly_check_containing(
    sets: &[ConvexSetSpec],
    d: usize,
    subset_size: usize,
    must_contain: Option<usize>,
) -> Result<HellyReport> {
    if subset_size == 0 {
        return Err(Error::Domain("subset_size must be ≥ 1".into()));
    }
    for (i, s) in sets.iter().enumerate() {
        s.check_shape(d, i)?;
    }
    if let Some(c) = must_contain {
        if c >= sets.len() {
            return Err(Error::Domain(format!("set index {c} out of range")));
        }
    }
    let m = sets.len();
    let size = subset_size.min(m);
    let mut checked = 0;
    let mut failing = None;
    for_each_subset(m, size, |idx| {
        if must_contain.is_some_and(|c| !idx.contains(&c)) {
            return Ok(true);
        }
        checked += 1;
        if intersection_point(sets, idx, d)?.is_none() {
            failing = Some(idx.to_vec());
            return Ok(false);
        }
        Ok(true)
    })?;
    let all: Vec<usize> = (0..m).collect();
    let witness = intersection_point(sets, &all, d)?;
    Ok(HellyReport {
        all_subfamilies_intersect: failing.is_none(),
        global_intersects: witness.is_some(),
        witness,
        failing_subfamily: failing,
        subfamilies_checked: checked,
    })
}
