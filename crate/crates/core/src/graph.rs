//! View-pair graphs: the static star `{(R, V_i)}` for a single image and the
//! sliding-window union for video, where each frame contributes one
//! real–virtual spatial pair and real views within a window are paired
//! temporally.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViewKind {
    Real,
    /// Virtual view index, starting at 1.
    Virtual(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ViewId {
    pub kind: ViewKind,
    pub frame_time: u32,
}

impl ViewId {
    pub const REAL: ViewId = ViewId::real(0);

    pub const fn real(frame_time: u32) -> Self {
        ViewId {
            kind: ViewKind::Real,
            frame_time,
        }
    }

    pub fn virtual_view(index: u32, frame_time: u32) -> Result<Self> {
        if index == 0 {
            return Err(Error::ConfigError("virtual view indices start at 1".into()));
        }
        Ok(ViewId {
            kind: ViewKind::Virtual(index),
            frame_time,
        })
    }

    pub fn is_real(&self) -> bool {
        self.kind == ViewKind::Real
    }
}

impl fmt::Display for ViewId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViewKind::Real => write!(f, "real:{}", self.frame_time),
            ViewKind::Virtual(i) => write!(f, "virtual:{i}@{}", self.frame_time),
        }
    }
}

impl FromStr for ViewId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::ConfigError(format!("bad view id {s:?}"));
        if let Some(t) = s.strip_prefix("real:") {
            return Ok(ViewId::real(t.parse().map_err(|_| bad())?));
        }
        let rest = s.strip_prefix("virtual:").ok_or_else(bad)?;
        let (i, t) = rest.split_once('@').ok_or_else(bad)?;
        ViewId::virtual_view(i.parse().map_err(|_| bad())?, t.parse().map_err(|_| bad())?)
    }
}

impl Serialize for ViewId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ViewId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub a: ViewId,
    pub b: ViewId,
}

impl Edge {
    pub fn is_spatial(&self) -> bool {
        self.a.is_real() != self.b.is_real()
    }

    fn sort_key(&self) -> (u32, u32, bool, Edge) {
        let lo = self.a.frame_time.min(self.b.frame_time);
        let hi = self.a.frame_time.max(self.b.frame_time);
        (lo, hi, !self.is_spatial(), *self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairGraph {
    pub edges: Vec<Edge>,
    /// Temporal window size for video graphs.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub window: Option<usize>,
}

impl PairGraph {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.edges).expect("edges serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let edges: Vec<Edge> =
            serde_json::from_str(text).map_err(|e| Error::ConfigError(format!("bad graph json: {e}")))?;
        Ok(PairGraph { edges, window: None })
    }

    /// Virtual views in the graph, in edge order.
    pub fn virtual_views(&self) -> Vec<ViewId> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for e in &self.edges {
            for v in [e.a, e.b] {
                if !v.is_real() && seen.insert(v) {
                    out.push(v);
                }
            }
        }
        out
    }
}

/// `[(R, V_1), …, (R, V_n)]`.
pub fn build_static(num_virtual: u32) -> Result<PairGraph> {
    if num_virtual == 0 {
        return Err(Error::NoVirtualViews);
    }
    let edges = (1..=num_virtual)
        .map(|i| Edge {
            a: ViewId::REAL,
            b: ViewId {
                kind: ViewKind::Virtual(i),
                frame_time: 0,
            },
        })
        .collect();
    Ok(PairGraph { edges, window: None })
}

/// Union over `t` of the window `[t, t + w]` (clamped to the video): one
/// spatial edge per frame and temporal edges `(real_a, real_b)`, `a < b`.
pub fn build_video(frames: u32, window: usize) -> Result<PairGraph> {
    if frames == 0 {
        return Err(Error::EmptyVideo);
    }
    let mut set = BTreeSet::new();
    for t in 0..frames {
        let hi = (t as u64 + window as u64).min(frames as u64 - 1) as u32;
        for i in t..=hi {
            set.insert(Edge {
                a: ViewId::real(i),
                b: ViewId {
                    kind: ViewKind::Virtual(1),
                    frame_time: i,
                },
            });
            for b in (i + 1)..=hi {
                set.insert(Edge {
                    a: ViewId::real(i),
                    b: ViewId::real(b),
                });
            }
        }
    }
    let mut edges: Vec<Edge> = set.into_iter().collect();
    edges.sort_by_key(Edge::sort_key);
    Ok(PairGraph {
        edges,
        window: Some(window),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(g: &PairGraph) -> Vec<String> {
        g.edges.iter().map(|e| format!("{}-{}", e.a, e.b)).collect()
    }

    #[test]
    fn static_graphs() {
        assert_eq!(names(&build_static(1).unwrap()), ["real:0-virtual:1@0"]);
        assert_eq!(
            names(&build_static(3).unwrap()),
            ["real:0-virtual:1@0", "real:0-virtual:2@0", "real:0-virtual:3@0"]
        );
        assert!(matches!(build_static(0), Err(Error::NoVirtualViews)));
    }

    #[test]
    fn two_frames_window_one() {
        assert_eq!(
            names(&build_video(2, 1).unwrap()),
            ["real:0-virtual:1@0", "real:0-real:1", "real:1-virtual:1@1"]
        );
    }

    #[test]
    fn zero_window_has_no_temporal_edges() {
        let g = build_video(5, 0).unwrap();
        assert_eq!(g.edges.len(), 5);
        assert!(g.edges.iter().all(Edge::is_spatial));
    }

    #[test]
    fn three_frames_full_window() {
        let g = build_video(3, 2).unwrap();
        let temporal: Vec<_> = g.edges.iter().filter(|e| !e.is_spatial()).map(|e| (e.a.frame_time, e.b.frame_time)).collect();
        assert_eq!(temporal, [(0, 1), (0, 2), (1, 2)]);
        assert!(matches!(build_video(0, 1), Err(Error::EmptyVideo)));
    }

    #[test]
    fn json_edges() {
        let g = build_static(1).unwrap();
        let text = g.to_json();
        assert!(text.contains(r#""a": "real:0""#) && text.contains(r#""b": "virtual:1@0""#));
        assert_eq!(PairGraph::from_json(&text).unwrap().edges, g.edges);
        assert!("virtual:0@0".parse::<ViewId>().is_err());
    }
}
