//! Residual-stream bookkeeping: named channel → dimension-slice mapping.
//!
//! Builders allocate every channel they read or write through a layout, so
//! dimension arithmetic lives in one place and composed programs can be
//! inspected by name. Allocation is bump-style: slices are disjoint and in
//! declaration order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slice {
    pub offset: usize,
    pub width: usize,
}

impl Slice {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.width
    }

    /// The single channel index of a width-1 slice.
    pub fn at(&self) -> usize {
        debug_assert_eq!(self.width, 1);
        self.offset
    }

    pub fn index(&self, k: usize) -> usize {
        debug_assert!(k < self.width);
        self.offset + k
    }

    /// The channel indices covered by this slice.
    pub fn indices(&self) -> Vec<usize> {
        self.range().collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StreamLayout {
    channels: Vec<(String, Slice)>,
    /// Present when the layout was opened with a fixed capacity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    capacity: Option<usize>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LayoutError {
    #[error("channel {0:?} already allocated")]
    DuplicateName(String),
    #[error("allocating {name:?} ({need} dims) exceeds capacity {capacity}")]
    Overflow { name: String, need: usize, capacity: usize },
    #[error("channel {0:?} not found")]
    Unknown(String),
}

impl StreamLayout {
    /// Growable layout; total width is the high-water mark.
    pub fn open() -> Self {
        StreamLayout::default()
    }

    /// Layout with a fixed total width `d`; allocation past it errors.
    pub fn with_capacity(d: usize) -> Self {
        StreamLayout { channels: Vec::new(), capacity: Some(d) }
    }

    /// Reserves the next `width` dimensions under `name`.
    pub fn allocate(&mut self, name: &str, width: usize) -> Result<Slice, LayoutError> {
        if self.channels.iter().any(|(n, _)| n == name) {
            return Err(LayoutError::DuplicateName(name.to_string()));
        }
        let offset = self.width();
        if let Some(cap) = self.capacity {
            if offset + width > cap {
                return Err(LayoutError::Overflow { name: name.to_string(), need: offset + width, capacity: cap });
            }
        }
        let slice = Slice { offset, width };
        self.channels.push((name.to_string(), slice));
        Ok(slice)
    }

    pub fn get(&self, name: &str) -> Result<Slice, LayoutError> {
        self.channels
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| *s)
            .ok_or_else(|| LayoutError::Unknown(name.to_string()))
    }

    /// Allocated extent (equals `d` once a builder has claimed the full
    /// stream).
    pub fn width(&self) -> usize {
        self.channels.last().map_or(0, |(_, s)| s.offset + s.width)
    }

    pub fn channels(&self) -> impl Iterator<Item = (&str, Slice)> {
        self.channels.iter().map(|(n, s)| (n.as_str(), *s))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.channels.iter().any(|(n, _)| n == name)
    }

    /// One-line summary, e.g. `o:0 bal:1 err:2 tot:3 (d=4)`.
    pub fn summary(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        for (name, s) in &self.channels {
            if s.width == 1 {
                parts.push(format!("{name}:{}", s.offset));
            } else {
                parts.push(format!("{name}:{}..{}", s.offset, s.offset + s.width));
            }
        }
        format!("{} (d={})", parts.join(" "), self.width())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_allocation_offsets() {
        let mut l = StreamLayout::with_capacity(8);
        assert_eq!(l.allocate("a", 2).unwrap(), Slice { offset: 0, width: 2 });
        assert_eq!(l.allocate("b", 3).unwrap(), Slice { offset: 2, width: 3 });
        assert_eq!(l.width(), 5);
    }

    #[test]
    fn duplicate_name_errors() {
        let mut l = StreamLayout::open();
        l.allocate("a", 1).unwrap();
        assert_eq!(l.allocate("a", 1).unwrap_err(), LayoutError::DuplicateName("a".into()));
    }

    #[test]
    fn overflow_errors() {
        let mut l = StreamLayout::with_capacity(3);
        l.allocate("a", 2).unwrap();
        assert!(matches!(l.allocate("b", 2).unwrap_err(), LayoutError::Overflow { .. }));
    }

    #[test]
    fn slices_disjoint_and_covering() {
        let mut l = StreamLayout::open();
        for (name, w) in [("x", 3), ("y", 1), ("z", 4)] {
            l.allocate(name, w).unwrap();
        }
        let mut seen = vec![false; l.width()];
        for (_, s) in l.channels() {
            for i in s.range() {
                assert!(!seen[i], "overlap at {i}");
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&b| b));
    }
}
