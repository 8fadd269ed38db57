//! Partition of aortic meshes into anatomical segments by cut planes.
//!
//! Labels are propagated from the inlet along mesh edges. Each cut plane may
//! only be crossed in order; a crossing counts when an edge changes side of
//! the plane within the cut's disk radius.

use std::collections::VecDeque;

use super::{FaceLabel, Point, TetMesh};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SegmentLabel {
    AscendingAorta,
    AorticArch,
    ProximalDescending,
    DistalDescending,
    Excluded,
}

pub const SEGMENTS: [SegmentLabel; 4] = [
    SegmentLabel::AscendingAorta,
    SegmentLabel::AorticArch,
    SegmentLabel::ProximalDescending,
    SegmentLabel::DistalDescending,
];

impl SegmentLabel {
    pub fn name(self) -> &'static str {
        match self {
            SegmentLabel::AscendingAorta => "AAo",
            SegmentLabel::AorticArch => "AArch",
            SegmentLabel::ProximalDescending => "pDAo",
            SegmentLabel::DistalDescending => "dDAo",
            SegmentLabel::Excluded => "excluded",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        SEGMENTS
            .iter()
            .chain(&[SegmentLabel::Excluded])
            .copied()
            .find(|s| s.name().eq_ignore_ascii_case(name))
    }
}

impl std::fmt::Display for SegmentLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CutPlane {
    pub point: [f64; 3],
    /// Points from the upstream segment into the downstream one.
    pub normal: [f64; 3],
    /// Crossings further than this from `point` are ignored.
    #[serde(default)]
    pub radius: Option<f64>,
}

impl CutPlane {
    fn signed_distance(&self, p: &Point, n: &Point) -> f64 {
        (p - Point::from(self.point)).dot(n)
    }

    fn crosses(&self, a: &Point, b: &Point) -> bool {
        let n = Point::from(self.normal).normalize();
        let (da, db) = (self.signed_distance(a, &n), self.signed_distance(b, &n));
        if (da > 0.0) == (db > 0.0) {
            return false;
        }
        match self.radius {
            None => true,
            Some(r) => {
                let t = da / (da - db);
                let x = a + (b - a) * t;
                (x - Point::from(self.point)).norm() <= r
            }
        }
    }
}

/// Region of vertices removed from every segment, e.g. supra-aortic branches.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Exclusion {
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    /// Vertices beyond the plane and within `radius` of `point`.
    HalfSpace {
        point: [f64; 3],
        normal: [f64; 3],
        radius: f64,
    },
}

impl Exclusion {
    fn contains(&self, p: &Point) -> bool {
        match *self {
            Exclusion::Sphere { center, radius } => (p - Point::from(center)).norm() <= radius,
            Exclusion::HalfSpace { point, normal, radius } => {
                let d = p - Point::from(point);
                d.dot(&Point::from(normal)) > 0.0 && d.norm() <= radius
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentLabels {
    pub labels: Vec<SegmentLabel>,
}

impl SegmentLabels {
    pub fn vertices_of(&self, label: SegmentLabel) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn count(&self, label: SegmentLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

/// Labels every vertex with the segment reached from the inlet. With `k` cuts
/// the first `k + 1` segments are populated and each must be non-empty.
pub fn segment_labels(mesh: &TetMesh, cuts: &[CutPlane], exclusions: &[Exclusion]) -> Result<SegmentLabels> {
    if cuts.len() > SEGMENTS.len() - 1 {
        return Err(Error::Labeling(format!(
            "at most {} cut planes are supported, got {}",
            SEGMENTS.len() - 1,
            cuts.len()
        )));
    }
    for (i, c) in cuts.iter().enumerate() {
        let n = Point::from(c.normal);
        if !(n.norm() > 0.0) || !n.iter().all(|v| v.is_finite()) {
            return Err(Error::Labeling(format!("cut plane {i} has an invalid normal")));
        }
    }
    let nv = mesh.num_vertices();
    let mut adjacency = vec![Vec::new(); nv];
    for (a, b) in mesh.edges() {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    let masked: Vec<bool> = mesh
        .vertices
        .iter()
        .map(|p| exclusions.iter().any(|e| e.contains(p)))
        .collect();

    let mut labels = vec![SegmentLabel::Excluded; nv];
    let mut seeds: Vec<usize> = mesh
        .label_vertices(FaceLabel::Inlet)
        .into_iter()
        .filter(|&v| !masked[v])
        .collect();
    if seeds.is_empty() {
        return Err(Error::Labeling("mesh has no unmasked inlet vertices".into()));
    }
    for (s, &segment) in SEGMENTS[..=cuts.len()].iter().enumerate() {
        let mut queue: VecDeque<usize> = VecDeque::new();
        for v in seeds.drain(..) {
            if labels[v] == SegmentLabel::Excluded {
                labels[v] = segment;
                queue.push_back(v);
            }
        }
        let mut frontier = Vec::new();
        while let Some(a) = queue.pop_front() {
            for &b in &adjacency[a] {
                if masked[b] || labels[b] != SegmentLabel::Excluded {
                    continue;
                }
                let (pa, pb) = (&mesh.vertices[a], &mesh.vertices[b]);
                let crossed = cuts.iter().position(|c| c.crosses(pa, pb));
                match crossed {
                    None => {
                        labels[b] = segment;
                        queue.push_back(b);
                    }
                    Some(c) if c == s => frontier.push(b),
                    Some(_) => {}
                }
            }
        }
        frontier.sort_unstable();
        frontier.dedup();
        seeds = frontier;
    }
    let result = SegmentLabels { labels };
    for &segment in &SEGMENTS[..=cuts.len()] {
        if result.count(segment) == 0 {
            return Err(Error::Labeling(format!("segment {segment} is empty")));
        }
    }
    Ok(result)
}
