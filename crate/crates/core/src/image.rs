//! Region comparison on intensity rasters.
//!
//! Rectangular regions are tiled into disjoint square windows from their
//! top-left corner, every window is fitted, and pairs of windows are tested
//! within a region (size) or across two regions (power).

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::distances::{distances, DistanceKind, EvalMethod};
use crate::error::{Error, Result};
use crate::estimation::{fit_ml, FitResult};
use crate::exec::{map_range, Execution};
use crate::model::Sample;
use crate::montecarlo::RateCell;
use crate::testing::{p_value, statistic_from_distance, DEGREES_OF_FREEDOM};

pub const DEFAULT_SIDE: usize = 7;
/// Fitted α outside this band marks a window as suspicious.
pub const SANE_ALPHA: (f64, f64) = (-50.0, -0.01);
pub const MAX_SANE_GAMMA: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    rows: usize,
    cols: usize,
    looks: f64,
    pixels: Vec<f64>,
}

fn parse_err(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        location: location.into(),
        message: message.into(),
    }
}

impl Raster {
    pub fn new(rows: usize, cols: usize, looks: f64, pixels: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Domain("raster must have at least one row and column".into()));
        }
        if !(looks >= 1.0 && looks.is_finite()) {
            return Err(Error::Domain(format!("looks must be at least 1, got {looks}")));
        }
        if rows.checked_mul(cols) != Some(pixels.len()) {
            return Err(Error::Domain(format!(
                "{rows}x{cols} raster needs {} pixels, got {}",
                rows.saturating_mul(cols),
                pixels.len()
            )));
        }
        if let Some(i) = pixels.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!("pixel {i} is not a positive finite value")));
        }
        Ok(Raster { rows, cols, looks, pixels })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn looks(&self) -> f64 {
        self.looks
    }

    /// Row-major intensities.
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.cols + col]
    }

    /// Text form: "rows cols looks" then one row of pixels per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.rows, self.cols, self.looks);
        for row in self.pixels.chunks(self.cols) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Parses the text raster format.
///
/// The header is "rows cols [looks]". `looks` overrides the header value and
/// is required when the header has none.
pub fn parse_raster(text: &str, looks: Option<f64>) -> Result<Raster> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or_else(|| parse_err("line 1", "missing header"))?;
    let hloc = format!("line {}", hline + 1);
    let fields: Vec<&str> = header.split_whitespace().collect();
    if !(2..=3).contains(&fields.len()) {
        return Err(parse_err(hloc, "header must be 'rows cols [looks]'"));
    }
    let dim = |s: &str, what: &str| {
        s.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| parse_err(hloc.clone(), format!("{what} '{s}' is not a positive integer")))
    };
    let rows = dim(fields[0], "rows")?;
    let cols = dim(fields[1], "cols")?;
    let header_looks = match fields.get(2) {
        Some(s) => Some(
            s.parse::<f64>()
                .ok()
                .filter(|l| *l >= 1.0 && l.is_finite())
                .ok_or_else(|| parse_err(hloc.clone(), format!("looks '{s}' must be a real at least 1")))?,
        ),
        None => None,
    };
    let looks = looks
        .or(header_looks)
        .ok_or_else(|| parse_err(hloc.clone(), "no looks in header and none supplied"))?;
    let expected = rows
        .checked_mul(cols)
        .ok_or_else(|| parse_err(hloc.clone(), "raster dimensions overflow"))?;
    let mut pixels = Vec::with_capacity(expected);
    for (ln, line) in lines {
        for (tok_idx, tok) in line.split_whitespace().enumerate() {
            let index = pixels.len();
            let loc = format!("line {}, token {}, pixel {}", ln + 1, tok_idx + 1, index);
            if index >= expected {
                return Err(parse_err(loc, format!("more than {expected} pixels")));
            }
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(loc.clone(), format!("'{tok}' is not a number")))?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(parse_err(loc, format!("pixel value {tok} is not positive")));
            }
            pixels.push(v);
        }
    }
    if pixels.len() != expected {
        return Err(parse_err(
            "end of file",
            format!("expected {expected} pixels, found {}", pixels.len()),
        ));
    }
    Raster::new(rows, cols, looks, pixels)
}

pub fn load_raster(path: &Path, looks: Option<f64>) -> Result<Raster> {
    parse_raster(&fs::read_to_string(path)?, looks)
}

pub fn save_raster(raster: &Raster, path: &Path) -> Result<()> {
    fs::write(path, raster.to_text())?;
    Ok(())
}

/// A named axis-aligned rectangle with 0-based offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionLabel {
    pub name: String,
    pub row0: usize,
    pub col0: usize,
    pub height: usize,
    pub width: usize,
}

/// One region per line: "name row0 col0 height width". Blank lines and
/// lines starting with '#' are skipped.
pub fn parse_regions(text: &str) -> Result<Vec<RegionLabel>> {
    let mut out: Vec<RegionLabel> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let loc = format!("line {}", i + 1);
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 {
            return Err(parse_err(loc, "expected 'name row0 col0 height width'"));
        }
        let mut nums = [0usize; 4];
        for (k, s) in f[1..].iter().enumerate() {
            nums[k] = s
                .parse()
                .map_err(|_| parse_err(loc.clone(), format!("'{s}' is not a nonnegative integer")))?;
        }
        if nums[2] == 0 || nums[3] == 0 {
            return Err(parse_err(loc, "height and width must be positive"));
        }
        if out.iter().any(|r| r.name == f[0]) {
            return Err(parse_err(loc, format!("duplicate region name '{}'", f[0])));
        }
        out.push(RegionLabel {
            name: f[0].to_string(),
            row0: nums[0],
            col0: nums[1],
            height: nums[2],
            width: nums[3],
        });
    }
    Ok(out)
}

pub fn load_regions(path: &Path) -> Result<Vec<RegionLabel>> {
    parse_regions(&fs::read_to_string(path)?)
}

/// Row-major pixel indices of each window of `region`.
pub fn window_indices(raster: &Raster, region: &RegionLabel, side: usize) -> Result<Vec<Vec<usize>>> {
    if side == 0 {
        return Err(Error::Domain("window side must be positive".into()));
    }
    if region.row0 + region.height > raster.rows || region.col0 + region.width > raster.cols {
        return Err(Error::Domain(format!("region '{}' extends beyond the raster", region.name)));
    }
    let (nr, nc) = (region.height / side, region.width / side);
    if nr == 0 || nc == 0 {
        return Err(Error::Domain(format!(
            "region '{}' ({}x{}) is smaller than one {side}x{side} window",
            region.name, region.height, region.width
        )));
    }
    let mut out = Vec::with_capacity(nr * nc);
    for wr in 0..nr {
        for wc in 0..nc {
            let (r0, c0) = (region.row0 + wr * side, region.col0 + wc * side);
            let idx = (r0..r0 + side)
                .flat_map(|r| (c0..c0 + side).map(move |c| r * raster.cols + c))
                .collect();
            out.push(idx);
        }
    }
    Ok(out)
}

/// ⌊h/side⌋·⌊w/side⌋ disjoint samples of side² pixels; partial strips are dropped.
pub fn partition_windows(raster: &Raster, region: &RegionLabel, side: usize) -> Result<Vec<Sample>> {
    window_indices(raster, region, side)?
        .into_iter()
        .map(|idx| Sample::new(idx.into_iter().map(|i| raster.pixels[i]).collect(), raster.looks))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowFit {
    /// Position of the window in its region's row-major tiling.
    pub id: usize,
    pub region: String,
    pub n: usize,
    pub fit: Option<FitResult>,
    pub sane: bool,
}

/// Converged, with α̂ ∈ [−50, −0.01] and γ̂ ∈ (0, 10¹²].
pub fn is_sane(fit: &FitResult) -> bool {
    let (a, g) = (fit.params.alpha(), fit.params.gamma());
    fit.converged && (SANE_ALPHA.0..=SANE_ALPHA.1).contains(&a) && g > 0.0 && g <= MAX_SANE_GAMMA
}

pub fn fit_windows(raster: &Raster, regions: &[RegionLabel], side: usize, exec: Execution) -> Result<Vec<WindowFit>> {
    let mut jobs = Vec::new();
    for region in regions {
        for (id, s) in partition_windows(raster, region, side)?.into_iter().enumerate() {
            jobs.push((region.name.clone(), id, s));
        }
    }
    Ok(map_range(0..jobs.len(), exec, |j| {
        let (name, id, s) = &jobs[j];
        let fit = fit_ml(s).ok();
        WindowFit {
            id: *id,
            region: name.clone(),
            n: s.len(),
            sane: fit.as_ref().is_some_and(is_sane),
            fit,
        }
    }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairMode {
    /// All unordered pairs of windows within one region.
    SameRegion(String),
    /// All pairs with one window from each region.
    CrossRegion(String, String),
}

impl PairMode {
    pub fn label(&self) -> String {
        match self {
            PairMode::SameRegion(a) => format!("same:{a}"),
            PairMode::CrossRegion(a, b) => format!("cross:{a}|{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairReport {
    pub mode: PairMode,
    pub looks: f64,
    /// Window size in pixels.
    pub n: usize,
    pub cells: Vec<RateCell>,
    /// Usable pairs P: both fits sane and every distance evaluated.
    pub pairs: usize,
    /// All pairs of windows in the involved regions, usable or not.
    pub total_pairs: usize,
    /// Windows in the involved regions excluded by the sanity band.
    pub excluded_windows: usize,
    /// Pairs with sane fits dropped because a distance failed.
    pub failed_pairs: usize,
}

impl PairReport {
    pub fn rate(&self, kind: DistanceKind, level: f64) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.kind == kind && c.level == level)
            .map(|c| c.rejection_rate)
    }
}

fn region_fits<'a>(fits: &'a [WindowFit], name: &str) -> Vec<&'a WindowFit> {
    fits.iter().filter(|f| f.region == name).collect()
}

/// Rejection rates over the window pairs selected by `mode`.
pub fn pairwise_rejection_rates(
    fits: &[WindowFit],
    mode: &PairMode,
    kinds: &[DistanceKind],
    levels: &[f64],
    exec: Execution,
) -> Result<PairReport> {
    if kinds.is_empty() || levels.is_empty() || levels.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
        return Err(Error::Domain("need at least one kind and levels in (0, 1)".into()));
    }
    let involved: Vec<&WindowFit>;
    let mut pairs: Vec<(&WindowFit, &WindowFit)> = Vec::new();
    match mode {
        PairMode::SameRegion(a) => {
            involved = region_fits(fits, a);
            if involved.len() < 2 {
                return Err(Error::Domain(format!("region '{a}' has fewer than 2 windows")));
            }
            for i in 0..involved.len() {
                for j in i + 1..involved.len() {
                    pairs.push((involved[i], involved[j]));
                }
            }
        }
        PairMode::CrossRegion(a, b) => {
            let (fa, fb) = (region_fits(fits, a), region_fits(fits, b));
            if fa.is_empty() || fb.is_empty() {
                return Err(Error::Domain(format!("regions '{a}' and '{b}' both need windows")));
            }
            for x in &fa {
                for y in &fb {
                    pairs.push((x, y));
                }
            }
            involved = fa.into_iter().chain(fb).collect();
        }
    }
    let excluded_windows = involved.iter().filter(|f| !f.sane).count();
    let n = involved[0].n;
    let looks = involved[0].fit.map_or(f64::NAN, |f| f.params.looks());
    let sane_pairs: Vec<_> = pairs.iter().filter(|(x, y)| x.sane && y.sane).collect();

    // Each pair yields its rejection flags or None when a distance fails.
    let outcomes = map_range(0..sane_pairs.len(), exec, |k| {
        let (x, y) = sane_pairs[k];
        let (fx, fy) = (x.fit.expect("sane fit"), y.fit.expect("sane fit"));
        let ds = distances(kinds, &fx.params, &fy.params, EvalMethod::Auto);
        let mut flags = Vec::with_capacity(kinds.len() * levels.len());
        for (&kind, d) in kinds.iter().zip(ds) {
            let s = statistic_from_distance(kind, d.ok()?, x.n, y.n);
            let p = p_value(s, DEGREES_OF_FREEDOM).ok()?;
            flags.extend(levels.iter().map(|&l| p <= l));
        }
        Some(flags)
    });
    let mut counts = vec![0usize; kinds.len() * levels.len()];
    let (mut usable, mut failed) = (0, 0);
    for o in outcomes {
        match o {
            Some(flags) => {
                usable += 1;
                for (c, f) in counts.iter_mut().zip(flags) {
                    *c += f as usize;
                }
            }
            None => failed += 1,
        }
    }
    if usable == 0 {
        return Err(Error::Degenerate(format!("no usable pairs for {}", mode.label())));
    }
    let mut cells = Vec::with_capacity(counts.len());
    let mut it = counts.into_iter();
    for &kind in kinds {
        for &level in levels {
            let rejections = it.next().expect("one count per cell");
            cells.push(RateCell {
                kind,
                level,
                rejections,
                rejection_rate: rejections as f64 / usable as f64,
            });
        }
    }
    Ok(PairReport {
        mode: mode.clone(),
        looks,
        n,
        cells,
        pairs: usable,
        total_pairs: pairs.len(),
        excluded_windows,
        failed_pairs: failed,
    })
}

/// Same-region reports for every region with at least two windows, then
/// cross-region reports for every pair of regions in file order. Modes that
/// have no usable pair are skipped.
pub fn analyze(
    raster: &Raster,
    regions: &[RegionLabel],
    side: usize,
    kinds: &[DistanceKind],
    levels: &[f64],
    exec: Execution,
) -> Result<Vec<PairReport>> {
    let names: BTreeSet<&str> = regions.iter().map(|r| r.name.as_str()).collect();
    if names.len() != regions.len() {
        return Err(Error::Domain("region names must be unique".into()));
    }
    let fits = fit_windows(raster, regions, side, exec)?;
    let mut modes = Vec::new();
    for r in regions {
        if region_fits(&fits, &r.name).len() >= 2 {
            modes.push(PairMode::SameRegion(r.name.clone()));
        }
    }
    for i in 0..regions.len() {
        for j in i + 1..regions.len() {
            modes.push(PairMode::CrossRegion(regions[i].name.clone(), regions[j].name.clone()));
        }
    }
    let mut out = Vec::new();
    for mode in modes {
        match pairwise_rejection_rates(&fits, &mode, kinds, levels, exec) {
            Ok(r) => out.push(r),
            Err(Error::Degenerate(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if out.is_empty() {
        return Err(Error::Degenerate("no region comparison had a usable pair".into()));
    }
    Ok(out)
}

pub const CSV_HEADER: &str =
    "scenario,alpha1,gamma1,alpha2,gamma2,L,N,kind,level,rejection_rate,valid_reps,attempted_reps,pairs";

/// The Monte Carlo CSV schema plus a pairs column. The parameter columns are
/// left empty since the laws are unknown; valid and attempted counts are
/// usable and total pairs.
pub fn reports_csv(reports: &[PairReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        for c in &r.cells {
            out.push_str(&format!(
                "{},,,,,{},{},{},{},{},{},{},{}\n",
                r.mode.label(),
                r.looks,
                r.n,
                c.kind,
                c.level,
                c.rejection_rate,
                r.pairs,
                r.total_pairs,
                r.pairs
            ));
        }
    }
    out
}
