use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::HemoResult;
use crate::error::{Error, Result};
use crate::mesh::{SegmentLabels, SEGMENTS};
use crate::numeric::mean_std;

/// Segment name of the cross-segment rows: mean and standard deviation of
/// the per-segment means.
pub const ALL_SEGMENTS: &str = "all";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Wss,
    Osi,
    ElRate,
}

impl Param {
    pub const ALL: [Param; 3] = [Param::Wss, Param::Osi, Param::ElRate];

    pub fn name(self) -> &'static str {
        match self {
            Param::Wss => "wss",
            Param::Osi => "osi",
            Param::ElRate => "el_rate",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Param::Wss => "Pa",
            Param::Osi => "-",
            Param::ElRate => "µW",
        }
    }
}

/// One mean ± std; `frame` is empty for cycle quantities (OSI) and both
/// statistics are empty for a segment without vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub segment: String,
    pub frame: Option<usize>,
    pub param: Param,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SegmentStats {
    pub rows: Vec<StatRow>,
}

type Key = (String, Option<usize>, Param);

fn key(r: &StatRow) -> Key {
    (r.segment.clone(), r.frame, r.param)
}

impl SegmentStats {
    pub fn get(&self, segment: &str, frame: Option<usize>, param: Param) -> Option<&StatRow> {
        self.rows
            .iter()
            .find(|r| r.segment == segment && r.frame == frame && r.param == param)
    }
}

/// Mean and population standard deviation per segment: WSS and OSI over wall
/// vertices, energy loss over all vertices. Rows run parameter by
/// parameter, frame by frame, the four segments then [`ALL_SEGMENTS`].
pub fn segment_stats(result: &HemoResult, labels: &SegmentLabels) -> Result<SegmentStats> {
    let n = labels.labels.len();
    if result.el_rate.iter().any(|f| f.len() != n) || result.wall_vertices.iter().any(|&v| v >= n) {
        return Err(Error::InvalidInput(
            "segment labels do not match the result's mesh".into(),
        ));
    }
    let wall_by_segment: Vec<Vec<usize>> = SEGMENTS
        .iter()
        .map(|s| {
            (0..result.wall_vertices.len())
                .filter(|&i| labels.labels[result.wall_vertices[i]] == *s)
                .collect()
        })
        .collect();
    let lumen_by_segment: Vec<Vec<usize>> = SEGMENTS.iter().map(|s| labels.vertices_of(*s)).collect();

    let mut rows = Vec::new();
    let mut emit = |param: Param, frame: Option<usize>, values: &dyn Fn(&[usize]) -> Vec<f64>, sets: &[Vec<usize>]| {
        let mut means = Vec::new();
        for (s, set) in SEGMENTS.iter().zip(sets) {
            let stats = mean_std(&values(set));
            if let Some((m, _)) = stats {
                means.push(m);
            }
            rows.push(StatRow {
                segment: s.name().into(),
                frame,
                param,
                mean: stats.map(|s| s.0),
                std: stats.map(|s| s.1),
            });
        }
        let cross = mean_std(&means);
        rows.push(StatRow {
            segment: ALL_SEGMENTS.into(),
            frame,
            param,
            mean: cross.map(|s| s.0),
            std: cross.map(|s| s.1),
        });
    };
    for (k, mags) in result.wss_mag.iter().enumerate() {
        emit(
            Param::Wss,
            Some(k),
            &|set| set.iter().map(|&i| mags[i]).collect(),
            &wall_by_segment,
        );
    }
    emit(
        Param::Osi,
        None,
        &|set| set.iter().map(|&i| result.osi[i]).collect(),
        &wall_by_segment,
    );
    for (k, el) in result.el_rate.iter().enumerate() {
        emit(
            Param::ElRate,
            Some(k),
            &|set| set.iter().map(|&v| el[v]).collect(),
            &lumen_by_segment,
        );
    }
    Ok(SegmentStats { rows })
}

/// Difference of `other` against `reference` for one statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub segment: String,
    pub frame: Option<usize>,
    pub param: Param,
    pub reference: Option<f64>,
    pub other: Option<f64>,
    pub abs_diff: Option<f64>,
    /// `(other − reference) / reference × 100`; empty when the reference is
    /// zero or missing. On cross-segment rows: the mean of the per-segment
    /// percentages.
    pub rel_diff_percent: Option<f64>,
    /// Cross-segment rows only: standard deviation of the per-segment
    /// percentages.
    pub rel_diff_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

/// Relative and absolute differences of `other` against `reference`, row by
/// row. A positive percentage means `other` is larger.
pub fn compare_models(reference: &SegmentStats, other: &SegmentStats) -> Result<Comparison> {
    let lookup: HashMap<Key, &StatRow> = other.rows.iter().map(|r| (key(r), r)).collect();
    if lookup.len() != reference.rows.len() {
        return Err(Error::InvalidInput("statistics tables have different rows".into()));
    }
    let mut rows = Vec::with_capacity(reference.rows.len());
    let mut pending: Vec<f64> = Vec::new();
    for a in &reference.rows {
        let b = lookup.get(&key(a)).ok_or_else(|| {
            Error::InvalidInput(format!(
                "row {} / {:?} / {} missing from the compared table",
                a.segment,
                a.frame,
                a.param.name()
            ))
        })?;
        let abs_diff = a.mean.zip(b.mean).map(|(x, y)| y - x);
        let rel = a
            .mean
            .zip(b.mean)
            .and_then(|(x, y)| (x != 0.0).then(|| (y - x) / x * 100.0));
        let (rel, rel_std) = if a.segment == ALL_SEGMENTS {
            let s = mean_std(&pending);
            pending.clear();
            (s.map(|s| s.0), s.map(|s| s.1))
        } else {
            pending.extend(rel);
            (rel, None)
        };
        rows.push(ComparisonRow {
            segment: a.segment.clone(),
            frame: a.frame,
            param: a.param,
            reference: a.mean,
            other: b.mean,
            abs_diff,
            rel_diff_percent: rel,
            rel_diff_std: rel_std,
        });
    }
    Ok(Comparison { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hemodynamics::ViscosityModel;
    use crate::mesh::{Point, SegmentLabel};

    /// Four wall vertices and one lumen vertex per segment, two frames.
    fn fixture(scale: f64) -> (HemoResult, SegmentLabels) {
        let labels: Vec<SegmentLabel> = SEGMENTS.iter().flat_map(|&s| [s; 5]).collect();
        let wall: Vec<usize> = (0..20).filter(|v| v % 5 != 4).collect();
        let wss_mag: Vec<Vec<f64>> = (0..2)
            .map(|k| {
                wall.iter()
                    .map(|&v| scale * (1.0 + (v / 5) as f64 + k as f64))
                    .collect()
            })
            .collect();
        let result = HemoResult {
            model: ViscosityModel::Newtonian { mu: 3.5e-3 },
            frame_times: vec![0.0, 0.5],
            period: 1.0,
            wss: wss_mag
                .iter()
                .map(|f| f.iter().map(|m| Point::x() * *m).collect())
                .collect(),
            wss_mag,
            osi: vec![0.25 * scale.min(1.0); wall.len()],
            el_rate: vec![vec![scale; 20]; 2],
            mu_apparent: vec![vec![3.5e-3; 20]; 2],
            wall_vertices: wall,
        };
        (result, SegmentLabels { labels })
    }

    #[test]
    fn per_segment_means() {
        let (r, labels) = fixture(1.0);
        let s = segment_stats(&r, &labels).unwrap();
        assert_eq!(s.rows.len(), 2 * 5 + 5 + 2 * 5);
        let aao = s.get("AAo", Some(0), Param::Wss).unwrap();
        assert_eq!((aao.mean, aao.std), (Some(1.0), Some(0.0)));
        let d = s.get("dDAo", Some(1), Param::Wss).unwrap();
        assert_eq!(d.mean, Some(5.0));
        let all = s.get(ALL_SEGMENTS, Some(0), Param::Wss).unwrap();
        assert_eq!(all.mean, Some(2.5));
        assert!((all.std.unwrap() - 1.25f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.get("pDAo", None, Param::Osi).unwrap().mean, Some(0.25));
    }

    #[test]
    fn empty_segment_is_missing() {
        let (r, mut labels) = fixture(1.0);
        for l in labels.labels.iter_mut().skip(5).take(5) {
            *l = SegmentLabel::Excluded;
        }
        let s = segment_stats(&r, &labels).unwrap();
        let row = s.get("AArch", Some(0), Param::Wss).unwrap();
        assert_eq!((row.mean, row.std), (None, None));
        assert_eq!(s.get(ALL_SEGMENTS, Some(0), Param::Wss).unwrap().mean, Some(8.0 / 3.0));
    }

    #[test]
    fn comparison_signs() {
        let (a, labels) = fixture(1.0);
        let (b, _) = fixture(2.0);
        let sa = segment_stats(&a, &labels).unwrap();
        let sb = segment_stats(&b, &labels).unwrap();
        let same = compare_models(&sa, &sa).unwrap();
        assert!(same.rows.iter().all(|r| r.rel_diff_percent == Some(0.0)));
        let doubled = compare_models(&sa, &sb).unwrap();
        for r in &doubled.rows {
            if r.param != Param::Osi {
                assert!((r.rel_diff_percent.unwrap() - 100.0).abs() < 1e-12, "{r:?}");
            }
        }
        let back = compare_models(&sb, &sa).unwrap();
        assert!(back
            .rows
            .iter()
            .filter(|r| r.param == Param::Wss)
            .all(|r| r.rel_diff_percent.unwrap() < 0.0));
    }

    #[test]
    fn zero_reference_is_undefined() {
        let (mut a, labels) = fixture(1.0);
        a.osi.iter_mut().for_each(|o| *o = 0.0);
        let (b, _) = fixture(1.0);
        let c = compare_models(
            &segment_stats(&a, &labels).unwrap(),
            &segment_stats(&b, &labels).unwrap(),
        )
        .unwrap();
        let row = c
            .rows
            .iter()
            .find(|r| r.param == Param::Osi && r.segment == "AAo")
            .unwrap();
        assert_eq!(row.rel_diff_percent, None);
        assert_eq!(row.abs_diff, Some(0.25));
    }
}
