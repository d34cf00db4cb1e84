//! Stable configurations of the periodic Raise and Peel model.
//!
//! A configuration is the upper boundary of the tile pile on a cylinder of
//! even circumference `L`, stored as a height profile `h_1, ..., h_L` (site
//! indices are 1-based and cyclic). Heights change by one unit between
//! neighbouring sites, carry the parity of their site (`h_i ≡ i mod 2`), and
//! the pile always touches the two substrate levels, so the minimum height is
//! 0 or 1. The substrate itself is the zig-zag `(1, 0, 1, 0, ...)`.
//!
//! Every balanced sequence of up/down steps corresponds to exactly one such
//! profile, which gives `binomial(L, L/2)` states. States are ranked
//! colexicographically on their step bit-sequence (up = 1).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest width accepted for dense enumeration of the state space.
pub const MAX_ENUMERATION_WIDTH: usize = 20;

/// Largest width whose state count fits the 64-bit ranking tables.
pub const MAX_RANK_WIDTH: usize = 62;

/// Height profile of a stable configuration.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyckConfig {
    heights: Vec<i32>,
}

/// Local shape of the profile at a site, as seen by a falling tile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SiteKind {
    Peak,
    Valley,
    /// A valley whose filling completes two full layers around the cylinder.
    GlobalValley,
    SlopeUp,
    SlopeDown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DropKind {
    Reflection,
    Adsorption,
    LocalAvalanche,
    GlobalAvalanche,
}

/// Result of dropping one tile onto a configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DropOutcome {
    pub next: DyckConfig,
    /// Tiles removed by the avalanche, the dropped tile included.
    pub tiles_removed: u32,
    /// Whether the drop triggered a global avalanche.
    pub global: bool,
    pub kind: DropKind,
}

/// Dense index of a configuration among all `binomial(L, L/2)` states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateIndex {
    pub index: u64,
    pub width: usize,
}

fn check_width(width: usize) -> Result<()> {
    if width < 2 || width % 2 != 0 {
        return Err(Error::invalid(format!(
            "lattice width must be even and at least 2, got {width}"
        )));
    }
    Ok(())
}

/// The substrate `(1, 0, 1, 0, ...)` of width `width`.
pub fn substrate(width: usize) -> Result<DyckConfig> {
    check_width(width)?;
    let heights = (0..width).map(|k| if k % 2 == 0 { 1 } else { 0 }).collect();
    Ok(DyckConfig { heights })
}

impl DyckConfig {
    /// Validates a height profile (`heights[0]` is site 1).
    pub fn new(heights: Vec<i32>) -> Result<Self> {
        let width = heights.len();
        check_width(width)?;
        for k in 0..width {
            let next = heights[(k + 1) % width];
            if (next - heights[k]).abs() != 1 {
                return Err(Error::invalid(format!(
                    "heights at sites {} and {} differ by {}, expected a unit step",
                    k + 1,
                    (k + 1) % width + 1,
                    next - heights[k]
                )));
            }
            // site k+1 must carry the parity of k+1
            if (heights[k] - (k as i32 + 1)).rem_euclid(2) != 0 {
                return Err(Error::invalid(format!(
                    "height {} at site {} violates the site parity",
                    heights[k],
                    k + 1
                )));
            }
        }
        let min = *heights.iter().min().unwrap();
        if !(0..=1).contains(&min) {
            return Err(Error::invalid(format!(
                "profile minimum is {min}, a stable configuration touches level 0 or 1"
            )));
        }
        Ok(DyckConfig { heights })
    }

    /// Builds the canonical profile of a balanced step sequence.
    ///
    /// Bit `width - 1 - k` of `bits` is the step from site `k + 1` to site
    /// `k + 2` (so the most significant of the `width` bits is the first
    /// step), 1 meaning up.
    pub fn from_step_bits(width: usize, bits: u64) -> Result<Self> {
        check_width(width)?;
        if width > 64 || (width < 64 && bits >> width != 0) {
            return Err(Error::invalid(format!(
                "step word {bits:#x} does not fit width {width}"
            )));
        }
        if bits.count_ones() as usize != width / 2 {
            return Err(Error::invalid(format!(
                "step word {bits:#x} is not balanced ({} up-steps of {width})",
                bits.count_ones()
            )));
        }
        let mut heights = Vec::with_capacity(width);
        let mut h = 1i32;
        for k in 0..width {
            heights.push(h);
            h += if step_is_up(width, bits, k) { 1 } else { -1 };
        }
        let min = *heights.iter().min().unwrap();
        let shift = min.div_euclid(2) * 2;
        heights.iter_mut().for_each(|h| *h -= shift);
        Ok(DyckConfig { heights })
    }

    /// Step word in the layout of [`DyckConfig::from_step_bits`].
    pub fn step_bits(&self) -> u64 {
        let width = self.width();
        let mut bits = 0u64;
        for k in 0..width {
            bits <<= 1;
            if self.heights[(k + 1) % width] > self.heights[k] {
                bits |= 1;
            }
        }
        bits
    }

    pub fn width(&self) -> usize {
        self.heights.len()
    }

    pub fn heights(&self) -> &[i32] {
        &self.heights
    }

    /// Height at 1-based `site`, read cyclically.
    pub fn height(&self, site: usize) -> i32 {
        let width = self.width();
        self.heights[(site + width - 1) % width]
    }

    /// Step word as hexadecimal, `ceil(L/4)` digits.
    pub fn to_hex(&self) -> String {
        let digits = self.width().div_ceil(4);
        format!("{:0digits$x}", self.step_bits())
    }

    pub fn from_hex(width: usize, hex: &str) -> Result<Self> {
        let bits = u64::from_str_radix(hex.trim_start_matches("0x"), 16)
            .map_err(|e| Error::invalid(format!("bad step word {hex:?}: {e}")))?;
        Self::from_step_bits(width, bits)
    }

    fn check_site(&self, site: usize) -> Result<usize> {
        if site == 0 || site > self.width() {
            return Err(Error::invalid(format!(
                "site {site} outside 1..={}",
                self.width()
            )));
        }
        Ok(site - 1)
    }

    /// Shape of the profile at 1-based `site`.
    pub fn classify_site(&self, site: usize) -> Result<SiteKind> {
        let k = self.check_site(site)?;
        Ok(classify(&self.heights, k))
    }

    /// Drops a tile at 1-based `site` and relaxes the configuration.
    pub fn drop_tile(&self, site: usize) -> Result<DropOutcome> {
        let k = self.check_site(site)?;
        let mut next = self.heights.clone();
        let (tiles_removed, kind) = relax(&mut next, k);
        Ok(DropOutcome {
            next: DyckConfig { heights: next },
            tiles_removed,
            global: kind == DropKind::GlobalAvalanche,
            kind,
        })
    }

    pub fn peaks_count(&self) -> usize {
        (0..self.width())
            .filter(|&k| classify(&self.heights, k) == SiteKind::Peak)
            .count()
    }

    /// Whether some site of this configuration is a [`SiteKind::GlobalValley`].
    pub fn is_global_susceptible(&self) -> bool {
        (0..self.width()).any(|k| classify(&self.heights, k) == SiteKind::GlobalValley)
    }

    pub fn rank(&self) -> Result<StateIndex> {
        let width = self.width();
        if width > MAX_RANK_WIDTH {
            return Err(Error::ResourceLimit(format!(
                "ranking supports widths up to {MAX_RANK_WIDTH}, got {width}"
            )));
        }
        Ok(StateIndex {
            index: colex_rank(width, self.step_bits()),
            width,
        })
    }

    pub fn unrank(s: StateIndex) -> Result<Self> {
        check_width(s.width)?;
        if s.width > MAX_RANK_WIDTH {
            return Err(Error::ResourceLimit(format!(
                "ranking supports widths up to {MAX_RANK_WIDTH}, got {}",
                s.width
            )));
        }
        let count = state_count(s.width)?;
        if s.index >= count {
            return Err(Error::invalid(format!(
                "state index {} out of range 0..{count} for width {}",
                s.index, s.width
            )));
        }
        Self::from_step_bits(s.width, colex_unrank(s.width, s.index))
    }
}

impl fmt::Debug for DyckConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DyckConfig{:?}", self.heights)
    }
}

impl fmt::Display for DyckConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, h) in self.heights.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{h}")?;
        }
        write!(f, ")")
    }
}

fn step_is_up(width: usize, bits: u64, k: usize) -> bool {
    (bits >> (width - 1 - k)) & 1 == 1
}

pub(crate) fn classify(h: &[i32], k: usize) -> SiteKind {
    let width = h.len();
    let left = h[(k + width - 1) % width];
    let right = h[(k + 1) % width];
    let here = h[k];
    match (left - here, right - here) {
        (-1, -1) => SiteKind::Peak,
        (1, 1) => {
            // filling lifts site k to here + 2; the rest must already be >= 2
            let rest_min = h
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &v)| v)
                .min()
                .unwrap_or(here + 2)
                .min(here + 2);
            if rest_min >= 2 {
                SiteKind::GlobalValley
            } else {
                SiteKind::Valley
            }
        }
        (-1, 1) => SiteKind::SlopeUp,
        (1, -1) => SiteKind::SlopeDown,
        _ => unreachable!("profile violates unit steps at site {}", k + 1),
    }
}

/// Applies a tile drop at 0-based site `k` in place; returns the number of
/// removed tiles and the kind of event.
pub(crate) fn relax(h: &mut [i32], k: usize) -> (u32, DropKind) {
    let width = h.len();
    match classify(h, k) {
        SiteKind::Peak => (0, DropKind::Reflection),
        SiteKind::Valley => {
            h[k] += 2;
            (0, DropKind::Adsorption)
        }
        SiteKind::GlobalValley => {
            h[k] += 2;
            h.iter_mut().for_each(|v| *v -= 2);
            (width as u32, DropKind::GlobalAvalanche)
        }
        SiteKind::SlopeUp => (peel(h, k, 1), DropKind::LocalAvalanche),
        SiteKind::SlopeDown => (peel(h, k, width - 1), DropKind::LocalAvalanche),
    }
}

/// Peels the one-tile layer from site `k` towards `dir` (1 = right,
/// `width - 1` = left) until the profile returns to the arrival level.
fn peel(h: &mut [i32], k: usize, dir: usize) -> u32 {
    let width = h.len();
    let level = h[k];
    let mut j = (k + dir) % width;
    let mut distance = 1u32;
    while h[j] != level {
        h[j] -= 2;
        j = (j + dir) % width;
        distance += 1;
        debug_assert!((distance as usize) < width, "avalanche scan wrapped");
    }
    distance
}

/// `binomial(n, k)` as `u64`; exact for `n <= 62`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
    }
    acc as u64
}

/// Number of stable configurations of width `width`.
pub fn state_count(width: usize) -> Result<u64> {
    check_width(width)?;
    if width > MAX_RANK_WIDTH {
        return Err(Error::ResourceLimit(format!(
            "state count overflows for width {width} (max {MAX_RANK_WIDTH})"
        )));
    }
    Ok(binomial(width, width / 2))
}

// Position p counts from the end of the step sequence: the step from site k+1
// sits at position width-1-k, which is simply bit p of the word.
fn colex_rank(width: usize, bits: u64) -> u64 {
    let mut rank = 0;
    let mut seen = 0;
    for p in 0..width {
        if (bits >> p) & 1 == 1 {
            seen += 1;
            rank += binomial(p, seen);
        }
    }
    rank
}

fn colex_unrank(width: usize, mut rank: u64) -> u64 {
    let mut bits = 0u64;
    let mut remaining = width / 2;
    for p in (0..width).rev() {
        if remaining == 0 {
            break;
        }
        let c = binomial(p, remaining);
        if rank >= c {
            rank -= c;
            bits |= 1 << p;
            remaining -= 1;
        }
    }
    bits
}

/// All configurations of width `width` in rank order.
pub fn enumerate(width: usize) -> Result<Vec<DyckConfig>> {
    check_width(width)?;
    if width > MAX_ENUMERATION_WIDTH {
        return Err(Error::ResourceLimit(format!(
            "exact enumeration is limited to L <= {MAX_ENUMERATION_WIDTH}, got {width}"
        )));
    }
    let count = binomial(width, width / 2);
    (0..count)
        .map(|index| DyckConfig::unrank(StateIndex { index, width }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(h: &[i32]) -> DyckConfig {
        DyckConfig::new(h.to_vec()).unwrap()
    }

    #[test]
    fn substrate_profiles() {
        assert_eq!(substrate(2).unwrap().heights(), &[1, 0]);
        assert_eq!(substrate(4).unwrap().heights(), &[1, 0, 1, 0]);
        assert_eq!(substrate(6).unwrap().heights(), &[1, 0, 1, 0, 1, 0]);
        assert_eq!(substrate(6).unwrap().peaks_count(), 3);
        assert!(substrate(3).is_err());
        assert!(substrate(0).is_err());
    }

    #[test]
    fn site_classes() {
        let s = substrate(6).unwrap();
        assert_eq!(s.classify_site(1).unwrap(), SiteKind::Peak);
        assert_eq!(s.classify_site(2).unwrap(), SiteKind::Valley);
        let m = cfg(&[1, 2, 3, 4, 3, 2]);
        assert_eq!(m.classify_site(1).unwrap(), SiteKind::GlobalValley);
        assert_eq!(m.classify_site(2).unwrap(), SiteKind::SlopeUp);
        assert_eq!(m.classify_site(4).unwrap(), SiteKind::Peak);
        assert_eq!(m.classify_site(6).unwrap(), SiteKind::SlopeDown);
        assert!(m.classify_site(0).is_err());
        assert!(m.classify_site(7).is_err());
    }

    #[test]
    fn figure_drops() {
        let m = cfg(&[1, 2, 3, 4, 3, 2]);
        let local = m.drop_tile(2).unwrap();
        assert_eq!(local.next.heights(), &[1, 2, 1, 2, 1, 2]);
        assert_eq!(local.tiles_removed, 4);
        assert!(!local.global);
        assert_eq!(local.kind, DropKind::LocalAvalanche);

        let global = m.drop_tile(1).unwrap();
        assert_eq!(global.next.heights(), &[1, 0, 1, 2, 1, 0]);
        assert_eq!(global.tiles_removed, 6);
        assert!(global.global);

        let mirror = m.drop_tile(6).unwrap();
        assert_eq!(mirror.next.heights(), &[1, 2, 1, 2, 1, 2]);
        assert_eq!(mirror.tiles_removed, 4);

        let s = substrate(6).unwrap();
        let refl = s.drop_tile(1).unwrap();
        assert_eq!(refl.next, s);
        assert_eq!(refl.kind, DropKind::Reflection);
        assert_eq!(refl.tiles_removed, 0);
        let ads = s.drop_tile(2).unwrap();
        assert_eq!(ads.next.heights(), &[1, 2, 1, 0, 1, 0]);
        assert_eq!(ads.kind, DropKind::Adsorption);
    }

    #[test]
    fn invalid_profiles_rejected() {
        assert!(DyckConfig::new(vec![1, 0, 1]).is_err());
        assert!(DyckConfig::new(vec![0, 1, 0, 1]).is_err()); // parity
        assert!(DyckConfig::new(vec![3, 2, 3, 2]).is_err()); // floating pile
        assert!(DyckConfig::new(vec![1, 2, 1, 2, 3, 0]).is_err()); // jump
    }

    #[test]
    fn width_two_states() {
        let states = enumerate(2).unwrap();
        assert_eq!(states.len(), 2);
        let mut hs: Vec<_> = states.iter().map(|c| c.heights().to_vec()).collect();
        hs.sort();
        assert_eq!(hs, vec![vec![1, 0], vec![1, 2]]);
    }

    #[test]
    fn state_counts() {
        assert_eq!(enumerate(4).unwrap().len(), 6);
        assert_eq!(enumerate(6).unwrap().len(), 20);
        assert_eq!(state_count(20).unwrap(), 184_756);
        assert!(matches!(enumerate(22), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn rank_is_colex_monotone() {
        let states = enumerate(6).unwrap();
        for (i, c) in states.iter().enumerate() {
            assert_eq!(c.rank().unwrap().index, i as u64);
            assert_eq!(DyckConfig::unrank(c.rank().unwrap()).unwrap(), *c);
        }
        // colex order: compare words from the last step backwards
        for w in states.windows(2) {
            let (a, b) = (w[0].step_bits(), w[1].step_bits());
            let top = 63 - (a ^ b).leading_zeros();
            assert!((b >> top) & 1 == 1);
        }
        assert!(DyckConfig::unrank(StateIndex { index: 20, width: 6 }).is_err());
    }

    #[test]
    fn hex_round_trip() {
        let m = cfg(&[1, 2, 3, 4, 3, 2]);
        // steps: up up up down down down
        assert_eq!(m.step_bits(), 0b111000);
        assert_eq!(m.to_hex(), "38");
        assert_eq!(DyckConfig::from_hex(6, "38").unwrap(), m);
        assert!(DyckConfig::from_hex(6, "3f").is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(20, 10), 184_756);
        assert_eq!(binomial(62, 31), 465_428_353_255_261_088);
        assert_eq!(binomial(3, 5), 0);
    }
}
