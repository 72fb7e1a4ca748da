use std::ops::RangeInclusive;

use crate::error::{Error, Result};

/// Position index sets seen by one stage of a window decoder.
///
/// All positions are 1-based. Boundary positions are already-decoded VN
/// positions whose decision LLRs feed the in-window CNs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowView {
    pub stage: usize,
    pub window: usize,
    pub length: usize,
    pub w: usize,
}

pub fn window_view(length: usize, w: usize, stage: usize, window: usize) -> Result<WindowView> {
    if stage == 0 || stage > length {
        return Err(Error::InvalidInput(format!(
            "stage {stage} outside 1..={length}"
        )));
    }
    if window < w + 1 {
        return Err(Error::InvalidInput(format!(
            "window size {window} smaller than w + 1 = {}",
            w + 1
        )));
    }
    Ok(WindowView {
        stage,
        window,
        length,
        w,
    })
}

impl WindowView {
    pub fn vn_positions(&self) -> RangeInclusive<usize> {
        self.stage..=(self.stage + self.window - 1).min(self.length)
    }

    pub fn cn_positions(&self) -> RangeInclusive<usize> {
        self.stage..=(self.stage + self.window - 1).min(self.length + self.w)
    }

    /// Empty for stage 1.
    pub fn boundary_positions(&self) -> RangeInclusive<usize> {
        let lo = self.stage.saturating_sub(self.w).max(1);
        // `1..=0` is empty
        lo..=self.stage - 1
    }

    /// Target positions for a target size `t_size`, clipped to the chain.
    pub fn target_positions(&self, t_size: usize) -> RangeInclusive<usize> {
        self.stage..=(self.stage + t_size - 1).min(*self.vn_positions().end())
    }

    /// Window slot index (0-based) of a proto CN at a CN position.
    #[inline]
    pub fn slot(&self, cn_position: usize, proto_cn: usize, n_c: usize) -> usize {
        (cn_position - self.stage) * n_c + proto_cn
    }

    /// The same window offsets at another stage.
    pub fn at_stage(&self, stage: usize) -> Result<Self> {
        window_view(self.length, self.w, stage, self.window)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collect(r: RangeInclusive<usize>) -> Vec<usize> {
        r.collect()
    }

    #[test]
    fn first_stage_truncated() {
        let v = window_view(4, 2, 1, 6).unwrap();
        assert_eq!(collect(v.vn_positions()), vec![1, 2, 3, 4]);
        assert_eq!(collect(v.cn_positions()), vec![1, 2, 3, 4, 5, 6]);
        assert!(v.boundary_positions().is_empty());
    }

    #[test]
    fn third_stage_boundary() {
        let v = window_view(4, 2, 3, 6).unwrap();
        assert_eq!(collect(v.boundary_positions()), vec![1, 2]);
        let v = window_view(100, 2, 50, 6).unwrap();
        assert_eq!(collect(v.boundary_positions()), vec![48, 49]);
        assert_eq!(collect(v.vn_positions()), (50..=55).collect::<Vec<_>>());
    }

    #[test]
    fn second_stage_has_one_boundary_position() {
        let v = window_view(10, 2, 2, 4).unwrap();
        assert_eq!(collect(v.boundary_positions()), vec![1]);
    }

    #[test]
    fn chain_end() {
        let len = 20;
        let v = window_view(len, 2, len, 10).unwrap();
        assert_eq!(collect(v.vn_positions()), vec![len]);
        assert_eq!(collect(v.cn_positions()), vec![len, len + 1, len + 2]);
    }

    #[test]
    fn preconditions() {
        assert!(window_view(4, 2, 0, 6).is_err());
        assert!(window_view(4, 2, 5, 6).is_err());
        assert!(window_view(4, 2, 1, 2).is_err());
    }
}
