//! Weighted least-squares isotonic and unimodal regression.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::IsotonicError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Direction {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, Copy)]
struct Block {
    weight: f64,
    // weighted sum for positive-weight blocks, plain sum otherwise
    sum: f64,
    count: usize,
    len: usize,
}

impl Block {
    fn new(value: f64, weight: f64) -> Self {
        Self {
            weight,
            sum: if weight > 0.0 { value * weight } else { value },
            count: 1,
            len: 1,
        }
    }

    fn mean(&self) -> f64 {
        if self.weight > 0.0 {
            self.sum / self.weight
        } else {
            self.sum / self.count as f64
        }
    }

    fn absorb(&mut self, other: &Block) {
        let merged_weight = self.weight + other.weight;
        self.sum = match (self.weight > 0.0, other.weight > 0.0) {
            (true, true) => self.sum + other.sum,
            (true, false) => self.sum,
            (false, true) => other.sum,
            (false, false) => self.sum + other.sum,
        };
        self.count = if merged_weight > 0.0 {
            0
        } else {
            self.count + other.count
        };
        self.weight = merged_weight;
        self.len += other.len;
    }
}

fn check(values: &[f64], weights: &[f64]) -> Result<(), IsotonicError> {
    if values.len() != weights.len() {
        return Err(IsotonicError::LengthMismatch {
            values: values.len(),
            weights: weights.len(),
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0)) || !weights.iter().any(|w| *w > 0.0) {
        return Err(IsotonicError::NoPositiveWeight);
    }
    Ok(())
}

// Non-decreasing fit returned as a stack of pooled blocks, left to right.
fn increasing_blocks(values: impl Iterator<Item = (f64, f64)>) -> Vec<Block> {
    let mut stack: Vec<Block> = Vec::new();
    for (v, w) in values {
        let mut cur = Block::new(v, w);
        while let Some(top) = stack.last() {
            if top.mean() > cur.mean() {
                let mut top = stack.pop().unwrap();
                top.absorb(&cur);
                cur = top;
            } else {
                break;
            }
        }
        stack.push(cur);
    }
    stack
}

fn expand(blocks: &[Block], out: &mut Vec<f64>) {
    for b in blocks {
        let m = b.mean();
        out.extend(core::iter::repeat_n(m, b.len));
    }
}

/// Pool-adjacent-violators projection onto the monotone cone.
///
/// Zero-weight entries are allowed as long as some weight is positive; they
/// never move the fit at positive-weight entries.
pub fn pava(values: &[f64], weights: &[f64], direction: Direction) -> Result<Vec<f64>, IsotonicError> {
    check(values, weights)?;
    let sign = match direction {
        Direction::Increasing => 1.0,
        Direction::Decreasing => -1.0,
    };
    let blocks = increasing_blocks(values.iter().zip(weights).map(|(v, w)| (sign * v, *w)));
    let mut out = Vec::with_capacity(values.len());
    expand(&blocks, &mut out);
    if sign < 0.0 {
        out.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(out)
}

/// Least-squares fit that rises up to `mode` and falls after it.
///
/// The order is a tree rooted at the mode with two chains hanging off it.
/// Each chain is solved by PAVA toward the root; the root block then absorbs
/// whichever adjacent chain block has the largest mean above its own, until
/// no violation remains.
pub fn unimodal(values: &[f64], weights: &[f64], mode: usize) -> Result<Vec<f64>, IsotonicError> {
    check(values, weights)?;
    let n = values.len();
    if mode >= n {
        return Err(IsotonicError::BadMode { mode, len: n });
    }
    let mut left = increasing_blocks((0..mode).map(|i| (values[i], weights[i])));
    let mut right = increasing_blocks((mode + 1..n).rev().map(|i| (values[i], weights[i])));
    let mut root = Block::new(values[mode], weights[mode]);
    let mut left_taken = 0usize;
    let mut right_taken = 0usize;
    loop {
        let lm = left.last().map(|b| b.mean());
        let rm = right.last().map(|b| b.mean());
        let root_mean = root.mean();
        let pick_left = match (lm, rm) {
            (Some(l), Some(r)) if l > root_mean || r > root_mean => l >= r,
            (Some(l), None) if l > root_mean => true,
            (None, Some(r)) if r > root_mean => false,
            _ => break,
        };
        let b = if pick_left {
            left.pop().unwrap()
        } else {
            right.pop().unwrap()
        };
        if pick_left {
            left_taken += b.len;
        } else {
            right_taken += b.len;
        }
        root.absorb(&b);
    }
    let mut out = Vec::with_capacity(n);
    expand(&left, &mut out);
    let root_mean = root.mean();
    out.extend(core::iter::repeat_n(root_mean, left_taken + 1 + right_taken));
    let mut tail = Vec::new();
    expand(&right, &mut tail);
    tail.reverse();
    out.extend(tail);
    Ok(out)
}

/// Weighted squared error of a fit.
pub fn weighted_sse(values: &[f64], weights: &[f64], fit: &[f64]) -> f64 {
    values
        .iter()
        .zip(weights)
        .zip(fit)
        .map(|((v, w), f)| w * (v - f) * (v - f))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn monotone_input_unchanged() {
        let v = [0.1, 0.2, 0.2, 0.5];
        assert!(close(&pava(&v, &[1.0; 4], Direction::Increasing).unwrap(), &v));
    }

    #[test]
    fn pools_violators() {
        let fit = pava(&[0.1, 0.05, 0.2], &[3.0; 3], Direction::Increasing).unwrap();
        assert!(close(&fit, &[0.075, 0.075, 0.2]));
        let fit = pava(&[0.3, 0.2, 0.1], &[1.0; 3], Direction::Increasing).unwrap();
        assert!(close(&fit, &[0.2, 0.2, 0.2]));
        let fit = pava(&[0.1, 0.2, 0.3], &[1.0, 2.0, 1.0], Direction::Decreasing).unwrap();
        assert!(close(&fit, &[0.2, 0.2, 0.2]));
    }

    #[test]
    fn weight_errors() {
        assert_eq!(
            pava(&[0.1, 0.2], &[0.0, 0.0], Direction::Increasing),
            Err(IsotonicError::NoPositiveWeight)
        );
        assert!(matches!(
            pava(&[0.1], &[1.0, 1.0], Direction::Increasing),
            Err(IsotonicError::LengthMismatch { .. })
        ));
        assert!(matches!(
            unimodal(&[0.1, 0.2], &[1.0, 1.0], 2),
            Err(IsotonicError::BadMode { .. })
        ));
    }

    #[test]
    fn zero_weight_entries_do_not_move_fit() {
        let fit = pava(&[0.5, 0.0, 0.3], &[1.0, 0.0, 1.0], Direction::Increasing).unwrap();
        assert!((fit[0] - 0.4).abs() < 1e-12 && (fit[2] - 0.4).abs() < 1e-12);
        // untried mode takes the larger neighbour, no pooling across it
        let fit = unimodal(&[0.5, 0.0, 0.7], &[1.0, 0.0, 1.0], 1).unwrap();
        assert!(close(&fit, &[0.5, 0.7, 0.7]));
    }

    #[test]
    fn unimodal_extremes_reduce_to_monotone() {
        let v = [0.4, 0.1, 0.6, 0.3, 0.5];
        let w = [3.0, 1.0, 2.0, 4.0, 1.0];
        assert!(close(
            &unimodal(&v, &w, 4).unwrap(),
            &pava(&v, &w, Direction::Increasing).unwrap()
        ));
        assert!(close(
            &unimodal(&v, &w, 0).unwrap(),
            &pava(&v, &w, Direction::Decreasing).unwrap()
        ));
    }

    #[test]
    fn unimodal_peaks_at_mode() {
        let v = vec![0.3, 0.5, 0.7, 0.75, 0.8];
        for mode in 0..5 {
            let fit = unimodal(&v, &[1.0; 5], mode).unwrap();
            for i in 0..mode {
                assert!(fit[i] <= fit[i + 1] + 1e-15);
            }
            for i in mode..4 {
                assert!(fit[i] >= fit[i + 1] - 1e-15);
            }
        }
        // mode 1 on increasing data pools everything from the mode on
        let fit = unimodal(&v, &[1.0; 5], 1).unwrap();
        assert!(close(&fit, &[0.3, 0.6875, 0.6875, 0.6875, 0.6875]));
    }
}
