//! Stick-level sufficient statistics derived from the memberships.

use crate::model::{ChainState, PanelDataset};

/// Counts `m_k(t) = #{i observed: s_it >= k}` and `r_k(t) = #{i observed: s_it = k}`
/// (zero-based labels), stored stick-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StickUpdateWorkspace {
    h: usize,
    times: usize,
    m: Vec<u32>,
    r: Vec<u32>,
}

impl StickUpdateWorkspace {
    pub fn new(h: usize, times: usize) -> Self {
        Self { h, times, m: vec![0; h * times], r: vec![0; h * times] }
    }

    pub fn from_state(state: &ChainState, data: &PanelDataset) -> Self {
        let mut ws = Self::new(state.h, state.times);
        ws.recompute(state, data);
        ws
    }

    pub fn recompute(&mut self, state: &ChainState, data: &PanelDataset) {
        let (h, times) = (self.h, self.times);
        self.r.iter_mut().for_each(|v| *v = 0);
        for i in 0..state.n {
            for t in 0..times {
                if data.is_observed(i, t) {
                    self.r[state.label(i, t) * times + t] += 1;
                }
            }
        }
        for t in 0..times {
            let mut acc = 0;
            for k in (0..h).rev() {
                acc += self.r[k * times + t];
                self.m[k * times + t] = acc;
            }
        }
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn times(&self) -> usize {
        self.times
    }

    #[inline]
    pub fn m(&self, k: usize, t: usize) -> u32 {
        self.m[k * self.times + t]
    }

    #[inline]
    pub fn r(&self, k: usize, t: usize) -> u32 {
        self.r[k * self.times + t]
    }

    pub fn m_row(&self, k: usize) -> &[u32] {
        &self.m[k * self.times..(k + 1) * self.times]
    }

    pub fn r_row(&self, k: usize) -> &[u32] {
        &self.r[k * self.times..(k + 1) * self.times]
    }

    /// Active times of stick `k`: those with `m_k(t) > 0`.
    pub fn active_times(&self, k: usize) -> Vec<usize> {
        (0..self.times).filter(|&t| self.m(k, t) > 0).collect()
    }

    /// Index set `I_k = {(i, t): s_it >= k}` over observed cells.
    pub fn index_set(&self, k: usize, state: &ChainState, data: &PanelDataset) -> Vec<(usize, usize)> {
        data.observed_cells().into_iter().filter(|&(i, t)| state.label(i, t) >= k).collect()
    }
}
