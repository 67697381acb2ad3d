//! Multi-view schema: which modes exist, how wide each one is, and which
//! modes every view spans.
//!
//! Modes and views are indexed from zero. A view is an ordered list of
//! distinct modes; the order is significant because Hadamard products over a
//! view are always evaluated in that order.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    mode_dims: Vec<usize>,
    view_modes: Vec<Vec<usize>>,
    coview_index: Vec<Vec<usize>>,
}

impl Schema {
    /// Validates the incidence structure and derives the inverse index.
    pub fn new(mode_dims: Vec<usize>, view_modes: Vec<Vec<usize>>) -> Result<Self> {
        let num_modes = mode_dims.len();
        if num_modes == 0 {
            return Err(Error::Schema("schema must declare at least one mode".into()));
        }
        if view_modes.is_empty() {
            return Err(Error::Schema("schema must declare at least one view".into()));
        }
        if let Some(m) = mode_dims.iter().position(|&d| d == 0) {
            return Err(Error::Schema(format!("mode {m} has zero features")));
        }

        let mut coview_index = vec![Vec::new(); num_modes];
        for (v, modes) in view_modes.iter().enumerate() {
            if modes.len() < 2 {
                return Err(Error::Schema(format!(
                    "view {v} must span >=2 modes, got {}",
                    modes.len()
                )));
            }
            for (k, &m) in modes.iter().enumerate() {
                if m >= num_modes {
                    return Err(Error::Schema(format!(
                        "view {v} references mode {m}, but only {num_modes} modes exist"
                    )));
                }
                if modes[..k].contains(&m) {
                    return Err(Error::Schema(format!("view {v} lists mode {m} twice")));
                }
                coview_index[m].push(v);
            }
        }
        if let Some(m) = coview_index.iter().position(Vec::is_empty) {
            return Err(Error::Schema(format!("mode {m} is not used by any view")));
        }

        Ok(Schema {
            mode_dims,
            view_modes,
            coview_index,
        })
    }

    pub fn num_modes(&self) -> usize {
        self.mode_dims.len()
    }

    pub fn num_views(&self) -> usize {
        self.view_modes.len()
    }

    pub fn mode_dim(&self, mode: usize) -> usize {
        self.mode_dims[mode]
    }

    pub fn mode_dims(&self) -> &[usize] {
        &self.mode_dims
    }

    /// Modes of `view` in declared order.
    pub fn view_modes(&self, view: usize) -> &[usize] {
        &self.view_modes[view]
    }

    pub fn views(&self) -> &[Vec<usize>] {
        &self.view_modes
    }

    /// Views containing `mode`, ascending.
    pub fn coview_index(&self, mode: usize) -> &[usize] {
        &self.coview_index[mode]
    }

    /// Σ_m I_m.
    pub fn total_features(&self) -> usize {
        self.mode_dims.iter().sum()
    }

    /// Σ_v M_v, the number of (view, mode) bias rows.
    pub fn total_view_modes(&self) -> usize {
        self.view_modes.iter().map(Vec::len).sum()
    }
}

/// Builds a [`Schema`], checking that `num_modes` agrees with `mode_dims`.
pub fn build_schema(num_modes: usize, mode_dims: Vec<usize>, view_modes: Vec<Vec<usize>>) -> Result<Schema> {
    if mode_dims.len() != num_modes {
        return Err(Error::Schema(format!(
            "declared {num_modes} modes but got {} dimensions",
            mode_dims.len()
        )));
    }
    Schema::new(mode_dims, view_modes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_view_inverse_incidence() {
        let s = build_schema(2, vec![2, 1], vec![vec![0, 1]]).unwrap();
        assert_eq!(s.coview_index(0), &[0]);
        assert_eq!(s.coview_index(1), &[0]);
        assert_eq!(s.total_features(), 3);
        assert_eq!(s.total_view_modes(), 2);
    }

    #[test]
    fn shared_mode_inverse_incidence() {
        let s = build_schema(3, vec![2, 2, 2], vec![vec![0, 1], vec![1, 2]]).unwrap();
        assert_eq!(s.coview_index(1), &[0, 1]);
        assert_eq!(s.coview_index(0), &[0]);
        assert_eq!(s.coview_index(2), &[1]);
    }

    #[test]
    fn rejects_single_mode_view() {
        let err = build_schema(2, vec![1, 1], vec![vec![0]]).unwrap_err();
        assert!(err.to_string().contains("view 0 must span >=2 modes"), "{err}");
    }

    #[test]
    fn rejects_unused_mode() {
        let err = build_schema(3, vec![1, 1, 1], vec![vec![0, 1]]).unwrap_err();
        assert!(err.to_string().contains("mode 2 is not used"), "{err}");
    }

    #[test]
    fn rejects_out_of_range_and_duplicates() {
        assert!(build_schema(2, vec![1, 1], vec![vec![0, 2]]).is_err());
        assert!(build_schema(2, vec![1, 1], vec![vec![0, 0, 1]]).is_err());
        assert!(build_schema(2, vec![1, 1, 1], vec![vec![0, 1]]).is_err());
        assert!(build_schema(2, vec![1, 0], vec![vec![0, 1]]).is_err());
        assert!(build_schema(1, vec![1], vec![]).is_err());
    }
}
