//! Plain-text Deep Sea Treasure maps.
//!
//! A map file has up to three sections, each introduced by a header line.
//! Text from `;` to the end of a line is a comment; blank lines are
//! ignored.
//!
//! ```text
//! [grid]          one line per row, one character per cell:
//!                 '.' open water, '#' blocked, 'S' start (exactly one),
//!                 'a'..='z' a treasure whose value is given in the legend
//! [legend]        lines of the form `<letter> = <value>`, one per letter
//!                 used in the grid
//! [settings]      optional; `time_penalty = <value>` (default -1)
//! ```
//!
//! All grid rows must have the same length, each letter may appear only
//! once, and every legend letter must appear in the grid.

use std::collections::BTreeMap;
use std::path::Path;

use morl_core::environments::DstMap;

use crate::{io_err, HarnessError, Result};

const DEFAULT_MAP: &str = include_str!("../maps/deep_sea_treasure.map");

/// The shipped 11×10 map with the ten classic treasure values.
pub fn default_map() -> DstMap {
    parse_map(DEFAULT_MAP, "deep_sea_treasure.map").expect("shipped map parses")
}

pub fn load_map(path: &Path) -> Result<DstMap> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_map(&text, &path.display().to_string())
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Grid,
    Legend,
    Settings,
}

pub fn parse_map(text: &str, origin: &str) -> Result<DstMap> {
    let err = |line: usize, message: String| HarnessError::Parse { origin: origin.to_string(), line, message };

    let mut section: Option<Section> = None;
    let mut seen: Vec<Section> = Vec::new();
    let mut grid: Vec<(usize, String)> = Vec::new();
    let mut legend: BTreeMap<char, (usize, f64)> = BTreeMap::new();
    let mut time_penalty = -1.0;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let next = match name.trim() {
                "grid" => Section::Grid,
                "legend" => Section::Legend,
                "settings" => Section::Settings,
                other => return Err(err(line_no, format!("unknown section [{other}]"))),
            };
            if seen.contains(&next) {
                return Err(err(line_no, format!("section [{}] appears twice", name.trim())));
            }
            seen.push(next);
            section = Some(next);
            continue;
        }
        match section {
            None => return Err(err(line_no, "content before the first section header".into())),
            Some(Section::Grid) => grid.push((line_no, line.to_string())),
            Some(Section::Legend) => {
                let (key, value) = split_pair(line).ok_or_else(|| err(line_no, "expected `<letter> = <value>`".into()))?;
                let mut chars = key.chars();
                let letter = match (chars.next(), chars.next()) {
                    (Some(c), None) if c.is_ascii_lowercase() => c,
                    _ => return Err(err(line_no, format!("legend key `{key}` is not a single letter a-z"))),
                };
                let value = parse_number(value).ok_or_else(|| err(line_no, format!("invalid treasure value `{value}`")))?;
                if legend.insert(letter, (line_no, value)).is_some() {
                    return Err(err(line_no, format!("letter `{letter}` defined twice")));
                }
            }
            Some(Section::Settings) => {
                let (key, value) = split_pair(line).ok_or_else(|| err(line_no, "expected `<key> = <value>`".into()))?;
                match key {
                    "time_penalty" => {
                        time_penalty =
                            parse_number(value).ok_or_else(|| err(line_no, format!("invalid time penalty `{value}`")))?;
                    }
                    other => return Err(err(line_no, format!("unknown setting `{other}`"))),
                }
            }
        }
    }

    let Some(&(first_line, ref first)) = grid.first() else {
        return Err(err(text.lines().count().max(1), "missing [grid] section or empty grid".into()));
    };
    let cols = first.chars().count();
    let mut start = None;
    let mut blocked = Vec::new();
    let mut letters: BTreeMap<char, (usize, usize, usize)> = BTreeMap::new();
    for (r, (line_no, row)) in grid.iter().enumerate() {
        if row.chars().count() != cols {
            return Err(err(
                *line_no,
                format!("row has {} cells but line {first_line} has {cols}", row.chars().count()),
            ));
        }
        for (c, ch) in row.chars().enumerate() {
            match ch {
                '.' => {}
                '#' => blocked.push((r, c)),
                'S' => {
                    if start.replace((r, c)).is_some() {
                        return Err(err(*line_no, "second start cell `S`".into()));
                    }
                }
                'a'..='z' => {
                    if let Some((prev, _, _)) = letters.insert(ch, (*line_no, r, c)) {
                        return Err(err(*line_no, format!("treasure `{ch}` already placed on line {prev}")));
                    }
                }
                other => return Err(err(*line_no, format!("unknown cell character `{other}`"))),
            }
        }
    }
    let start = start.ok_or_else(|| err(first_line, "grid has no start cell `S`".into()))?;

    let mut treasures = Vec::with_capacity(letters.len());
    for (&ch, &(line_no, r, c)) in &letters {
        let (_, value) = legend.get(&ch).ok_or_else(|| err(line_no, format!("treasure `{ch}` has no legend entry")))?;
        treasures.push((r, c, *value));
    }
    if let Some((ch, (line_no, _))) = legend.iter().find(|(ch, _)| !letters.contains_key(ch)) {
        return Err(err(*line_no, format!("legend letter `{ch}` does not appear in the grid")));
    }
    treasures.sort_by_key(|&(r, c, _)| (r, c));

    let map = DstMap { rows: grid.len(), cols, treasures, blocked, start, time_penalty };
    map.validate().map_err(|e| err(first_line, e.to_string()))?;
    Ok(map)
}

fn split_pair(line: &str) -> Option<(&str, &str)> {
    let (k, v) = line.split_once('=')?;
    let (k, v) = (k.trim(), v.trim());
    (!k.is_empty() && !v.is_empty()).then_some((k, v))
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Stable textual form of a map, used for hashing configs.
pub fn canonical_map(map: &DstMap) -> String {
    let mut out = format!("rows={} cols={} start={},{} penalty={}", map.rows, map.cols, map.start.0, map.start.1, map.time_penalty);
    let mut blocked = map.blocked.clone();
    blocked.sort();
    for (r, c) in blocked {
        out.push_str(&format!(" #{r},{c}"));
    }
    let mut treasures = map.treasures.clone();
    treasures.sort_by_key(|&(r, c, _)| (r, c));
    for (r, c, v) in treasures {
        out.push_str(&format!(" t{r},{c}={v}"));
    }
    out
}
