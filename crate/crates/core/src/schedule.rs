//! Monthly evaluation schedule.
//!
//! Anchors sit at one-based trading days `first_anchor + (i - 1) * step`.
//! For each anchor the estimators see only returns strictly before it, and
//! realized volatility is measured over the `realized_len` returns starting at
//! the anchor itself.
//!
//! Windows are stored as zero-based half-open ranges into the return vector,
//! so the one-based day range `[a, b]` becomes `a - 1 .. b`.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How the estimation window evolves from one anchor to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowMode {
    /// The `T` returns immediately preceding the anchor.
    Rolling(usize),
    /// Every return before the anchor.
    Increasing,
}

impl WindowMode {
    /// Estimation window for a one-based anchor day, or `None` if it would
    /// reach before the first return.
    pub fn estimation_window(&self, anchor_day: usize) -> Option<Range<usize>> {
        let end = anchor_day.checked_sub(1)?;
        match *self {
            WindowMode::Rolling(t) => end.checked_sub(t).map(|start| start..end),
            WindowMode::Increasing => Some(0..end),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            WindowMode::Rolling(t) if t < 2 => Err(Error::invalid(format!(
                "rolling window must hold at least 2 returns, got {t}"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for WindowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowMode::Rolling(t) => write!(f, "rolling:{t}"),
            WindowMode::Increasing => f.write_str("increasing"),
        }
    }
}

impl FromStr for WindowMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "increasing" {
            return Ok(WindowMode::Increasing);
        }
        s.strip_prefix("rolling:")
            .and_then(|t| t.parse().ok())
            .map(WindowMode::Rolling)
            .ok_or_else(|| Error::invalid(format!("bad window mode `{s}`")))
    }
}

/// One evaluation date.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchedulePoint {
    /// One-based evaluation counter.
    pub index: usize,
    /// One-based trading day of the first forward return.
    pub anchor_day: usize,
    pub estimation_window: Range<usize>,
    pub realized_window: Range<usize>,
}

impl SchedulePoint {
    /// Estimation window under a different mode at the same anchor.
    pub fn window_for(&self, mode: WindowMode) -> Option<Range<usize>> {
        mode.estimation_window(self.anchor_day)
    }

    /// Zero-based index of the anchor return.
    pub fn anchor_offset(&self) -> usize {
        self.anchor_day - 1
    }
}

/// Parameters shared by every schedule in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleSpec {
    pub first_anchor: usize,
    pub step: usize,
    pub realized_len: usize,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            first_anchor: 253,
            step: 20,
            realized_len: 21,
        }
    }
}

impl ScheduleSpec {
    pub fn build(&self, series_len: usize, mode: WindowMode) -> Result<Vec<SchedulePoint>> {
        build_schedule(
            series_len,
            self.first_anchor,
            self.step,
            mode,
            self.realized_len,
        )
    }
}

/// Lays out every evaluation point whose windows fit inside a series of
/// `series_len` returns.
pub fn build_schedule(
    series_len: usize,
    first_anchor: usize,
    step: usize,
    mode: WindowMode,
    realized_len: usize,
) -> Result<Vec<SchedulePoint>> {
    mode.validate()?;
    if first_anchor < 2 {
        return Err(Error::invalid("first anchor must leave at least one prior return"));
    }
    if step == 0 {
        return Err(Error::invalid("schedule step must be positive"));
    }
    if realized_len < 2 {
        return Err(Error::invalid("realized window must hold at least 2 returns"));
    }
    if mode.estimation_window(first_anchor).is_none() {
        return Err(Error::invalid(format!(
            "first anchor {first_anchor} leaves too little history for {mode}"
        )));
    }
    if series_len + 1 < first_anchor + realized_len {
        return Err(Error::insufficient(format!(
            "{series_len} returns cannot hold one evaluation point \
             (anchor {first_anchor}, realized window {realized_len})"
        )));
    }

    let mut points = Vec::new();
    let mut anchor_day = first_anchor;
    while anchor_day - 1 + realized_len <= series_len {
        let start = anchor_day - 1;
        let estimation_window = mode
            .estimation_window(anchor_day)
            .expect("later anchors have more history than the first");
        points.push(SchedulePoint {
            index: points.len() + 1,
            anchor_day,
            estimation_window,
            realized_window: start..start + realized_len,
        });
        anchor_day += step;
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_history_layout() {
        let pts = build_schedule(3853, 253, 20, WindowMode::Rolling(252), 21).unwrap();
        assert_eq!(pts.len(), 180);
        assert_eq!(pts[0].index, 1);
        // one-based [1, 252] and [253, 273]
        assert_eq!(pts[0].estimation_window, 0..252);
        assert_eq!(pts[0].realized_window, 252..273);
        let last = pts.last().unwrap();
        assert_eq!(last.anchor_day, 253 + 179 * 20);
        assert_eq!(last.realized_window.end, 3853);
    }

    #[test]
    fn boundary_fit_gives_single_point() {
        let pts = build_schedule(273, 253, 20, WindowMode::Increasing, 21).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].estimation_window, 0..252);
    }

    #[test]
    fn modes_agree_at_first_point() {
        let r = build_schedule(600, 253, 20, WindowMode::Rolling(252), 21).unwrap();
        let i = build_schedule(600, 253, 20, WindowMode::Increasing, 21).unwrap();
        assert_eq!(r[0].estimation_window, i[0].estimation_window);
        assert_eq!(r[1].estimation_window, 20..272);
        assert_eq!(i[1].estimation_window, 0..272);
    }

    #[test]
    fn too_short_is_insufficient_data() {
        let err = build_schedule(272, 253, 20, WindowMode::Increasing, 21).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
    }

    #[test]
    fn bad_configuration() {
        assert!(build_schedule(1000, 253, 20, WindowMode::Rolling(1), 21).is_err());
        assert!(build_schedule(1000, 100, 20, WindowMode::Rolling(252), 21).is_err());
        assert!(build_schedule(1000, 253, 0, WindowMode::Increasing, 21).is_err());
    }

    #[test]
    fn mode_parses() {
        assert_eq!("rolling:252".parse::<WindowMode>().unwrap(), WindowMode::Rolling(252));
        assert_eq!("increasing".parse::<WindowMode>().unwrap(), WindowMode::Increasing);
        assert!("rolling".parse::<WindowMode>().is_err());
    }
}
