//! DWDM grid arithmetic.
//!
//! ITU channels sit on the 100 GHz grid at `190.0 + 0.1 * n` THz. Logical
//! channels (LC) are ITU channels relabelled around the degenerate centre
//! of the pair source, so LC `+k` and LC `-k` carry the two photons of an
//! entangled pair.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Channel number on the ITU 100 GHz grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItuChannel(pub u32);

/// ITU channel relabelled relative to the grid centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogicalChannel(pub i32);

/// The channel pair `(+k, -k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConjugatePair(pub u32);

impl LogicalChannel {
    pub fn conjugate(self) -> Result<LogicalChannel> {
        if self.0 == 0 {
            return Err(Error::DegenerateCenter);
        }
        Ok(LogicalChannel(-self.0))
    }

    /// The pair this channel belongs to; `None` for the centre.
    pub fn pair(self) -> Option<ConjugatePair> {
        (self.0 != 0).then(|| ConjugatePair(self.0.unsigned_abs()))
    }
}

impl ConjugatePair {
    pub fn plus(self) -> LogicalChannel {
        LogicalChannel(self.0 as i32)
    }

    pub fn minus(self) -> LogicalChannel {
        LogicalChannel(-(self.0 as i32))
    }
}

impl fmt::Display for LogicalChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", self.0)
    }
}

impl fmt::Display for ItuChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ITU{}", self.0)
    }
}

/// Grid extent, centre and splitter rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub min_itu: u32,
    pub max_itu: u32,
    pub center_itu: u32,
    /// Channels with `|lc| >= split_threshold` carry a 1-to-4 splitter.
    pub split_threshold: u32,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            min_itu: 19,
            max_itu: 49,
            center_itu: 34,
            split_threshold: 6,
        }
    }
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        if self.min_itu > self.center_itu || self.center_itu > self.max_itu {
            return Err(Error::InvalidGrid(format!(
                "centre {} not within {}..={}",
                self.center_itu, self.min_itu, self.max_itu
            )));
        }
        if self.max_k() == 0 {
            return Err(Error::InvalidGrid("grid has no conjugate pairs".into()));
        }
        if self.max_itu > 10_000 {
            return Err(Error::InvalidGrid(format!(
                "max_itu {} is unreasonably large",
                self.max_itu
            )));
        }
        Ok(())
    }

    /// Largest `k` such that both `+k` and `-k` lie on the grid.
    pub fn max_k(&self) -> u32 {
        let below = self.center_itu.saturating_sub(self.min_itu);
        let above = self.max_itu.saturating_sub(self.center_itu);
        below.min(above)
    }

    pub fn itu_to_lc(&self, itu: ItuChannel) -> Result<LogicalChannel> {
        if itu.0 < self.min_itu || itu.0 > self.max_itu {
            return Err(Error::ChannelOutOfGrid {
                index: itu.0 as i64,
                min: self.min_itu,
                max: self.max_itu,
            });
        }
        Ok(LogicalChannel(itu.0 as i32 - self.center_itu as i32))
    }

    pub fn lc_to_itu(&self, lc: LogicalChannel) -> Result<ItuChannel> {
        let index = self.center_itu as i64 + lc.0 as i64;
        if index < self.min_itu as i64 || index > self.max_itu as i64 {
            return Err(Error::ChannelOutOfGrid {
                index,
                min: self.min_itu,
                max: self.max_itu,
            });
        }
        Ok(ItuChannel(index as u32))
    }

    pub fn contains(&self, lc: LogicalChannel) -> bool {
        self.lc_to_itu(lc).is_ok()
    }

    /// Centre frequency in THz.
    pub fn lc_frequency(&self, lc: LogicalChannel) -> Result<f64> {
        let itu = self.lc_to_itu(lc)?;
        Ok(itu_frequency(itu))
    }

    /// The conjugate partner of `lc`, checked against the grid.
    pub fn conjugate(&self, lc: LogicalChannel) -> Result<LogicalChannel> {
        self.lc_to_itu(lc)?;
        let partner = lc.conjugate()?;
        self.lc_to_itu(partner)?;
        Ok(partner)
    }

    pub fn is_split(&self, lc: LogicalChannel) -> bool {
        lc.0.unsigned_abs() >= self.split_threshold
    }

    pub fn is_split_pair(&self, pair: ConjugatePair) -> bool {
        pair.0 >= self.split_threshold
    }

    /// Every conjugate pair with both members on the grid, ascending `k`.
    pub fn pairs(&self) -> Vec<ConjugatePair> {
        (1..=self.max_k()).map(ConjugatePair).collect()
    }
}

/// `190.0 + 0.1 * n` THz, computed in tenths so grid points are exactly rounded.
pub fn itu_frequency(itu: ItuChannel) -> f64 {
    (1900.0 + itu.0 as f64) / 10.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn itu_labels() {
        let g = Grid::default();
        assert_eq!(g.itu_to_lc(ItuChannel(19)).unwrap(), LogicalChannel(-15));
        assert_eq!(g.itu_to_lc(ItuChannel(34)).unwrap(), LogicalChannel(0));
        assert_eq!(g.itu_to_lc(ItuChannel(49)).unwrap(), LogicalChannel(15));
        assert!(matches!(
            g.itu_to_lc(ItuChannel(50)),
            Err(Error::ChannelOutOfGrid { index: 50, .. })
        ));
        assert!(g.itu_to_lc(ItuChannel(18)).is_err());
    }

    #[test]
    fn frequencies() {
        let g = Grid::default();
        assert_eq!(g.lc_frequency(LogicalChannel(0)).unwrap(), 193.4);
        assert!((g.lc_frequency(LogicalChannel(15)).unwrap() - 194.9).abs() < 1e-12);
        assert!((g.lc_frequency(LogicalChannel(-15)).unwrap() - 191.9).abs() < 1e-12);
        assert!(g.lc_frequency(LogicalChannel(16)).is_err());
    }

    #[test]
    fn conjugates() {
        let g = Grid::default();
        assert_eq!(g.conjugate(LogicalChannel(6)).unwrap(), LogicalChannel(-6));
        assert_eq!(
            g.conjugate(LogicalChannel(-15)).unwrap(),
            LogicalChannel(15)
        );
        assert_eq!(g.conjugate(LogicalChannel(0)), Err(Error::DegenerateCenter));
    }

    #[test]
    fn splitting() {
        let g = Grid::default();
        assert!(g.is_split(LogicalChannel(6)));
        assert!(!g.is_split(LogicalChannel(-5)));
        assert!(g.is_split(LogicalChannel(15)));
        assert_eq!(
            g.pairs().iter().filter(|p| g.is_split_pair(**p)).count(),
            10
        );
        assert_eq!(g.pairs().len(), 15);
    }

    #[test]
    fn asymmetric_grid_limits_pairs() {
        let g = Grid {
            min_itu: 30,
            max_itu: 49,
            center_itu: 34,
            split_threshold: 2,
        };
        assert_eq!(g.max_k(), 4);
        assert!(g.conjugate(LogicalChannel(10)).is_err());
        assert!(Grid {
            min_itu: 40,
            ..Grid::default()
        }
        .validate()
        .is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn conjugate_is_involution(lc in -15i32..=15) {
                prop_assume!(lc != 0);
                let g = Grid::default();
                let c = g.conjugate(LogicalChannel(lc)).unwrap();
                prop_assert_eq!(g.conjugate(c).unwrap(), LogicalChannel(lc));
                prop_assert_eq!(g.is_split(LogicalChannel(lc)), g.is_split(c));
            }

            #[test]
            fn itu_round_trip(itu in 19u32..=49) {
                let g = Grid::default();
                let lc = g.itu_to_lc(ItuChannel(itu)).unwrap();
                prop_assert_eq!(g.lc_to_itu(lc).unwrap(), ItuChannel(itu));
            }
        }
    }
}
