use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_resamples() -> usize {
    1000
}

/// Monte Carlo settings; path `k` uses seed `base_seed + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCConfig {
    pub paths: usize,
    pub base_seed: u64,
    /// Bootstrap resamples for confidence intervals.
    #[serde(default = "default_resamples")]
    pub resamples: usize,
}

impl MCConfig {
    pub fn new(paths: usize, base_seed: u64) -> Result<Self> {
        let mc = Self {
            paths,
            base_seed,
            resamples: default_resamples(),
        };
        mc.validate()?;
        Ok(mc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths < 100 {
            return Err(Error::InvalidParameter(format!("need at least 100 paths, got {}", self.paths)));
        }
        if self.resamples < 2 {
            return Err(Error::InvalidParameter("need at least 2 bootstrap resamples".into()));
        }
        Ok(())
    }

    pub fn seed(&self, path: usize) -> u64 {
        self.base_seed.wrapping_add(path as u64)
    }
}

/// Runs `f` once per path, in parallel, returning results in path order.
/// `init` builds per-worker scratch state.
pub(crate) fn map_paths<S, T, I, F>(mc: &MCConfig, init: I, f: F) -> Result<Vec<T>>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> Result<T> + Sync + Send,
{
    (0..mc.paths)
        .into_par_iter()
        .map_init(init, |state, k| f(state, mc.seed(k)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_seeds() {
        let mc = MCConfig::new(100, u64::MAX - 1).unwrap();
        assert_eq!(mc.seed(0), u64::MAX - 1);
        assert_eq!(mc.seed(2), 0);
        assert!(MCConfig::new(99, 0).is_err());
    }

    #[test]
    fn results_keep_path_order() {
        let mc = MCConfig::new(300, 10).unwrap();
        let out = map_paths(&mc, || (), |_, s| Ok(s)).unwrap();
        assert_eq!(out, (10..310).collect::<Vec<u64>>());
    }
}
