//! Per-pair summaries of a run and metric series for analysis.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::domain::{MinuteRecord, NodeId};
use crate::engine::{EngineParams, RunStats};
use crate::simulator::ScenarioConfig;

/// A column of the minute record that can be analysed as a series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    P,
    Si,
    S,
    D,
    M,
    V,
    N,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::P,
        Metric::Si,
        Metric::S,
        Metric::D,
        Metric::M,
        Metric::V,
        Metric::N,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::P => "p",
            Metric::Si => "si",
            Metric::S => "s",
            Metric::D => "d",
            Metric::M => "m",
            Metric::V => "v",
            Metric::N => "n",
        }
    }

    /// Value of the metric in a record; an out-of-range distance is infinite.
    pub fn value(self, r: &MinuteRecord) -> f64 {
        match self {
            Metric::P => r.p_ij,
            Metric::Si => r.si_ij,
            Metric::S => r.s_ij,
            Metric::D => r.d_ij.to_real(),
            Metric::M => f64::from(r.m_i.code()),
            Metric::V => f64::from(r.v_i.code()),
            Metric::N => f64::from(r.n_i),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "p" | "propinquity" => Metric::P,
            "si" | "social_interaction" => Metric::Si,
            "s" | "strength" | "social_strength" => Metric::S,
            "d" | "distance" => Metric::D,
            "m" | "motion" => Metric::M,
            "v" | "sound" => Metric::V,
            "n" | "degree" => Metric::N,
            _ => {
                return Err(format!(
                    "unknown metric {s:?} (expected one of p, si, s, d, m, v, n)"
                ))
            }
        })
    }
}

/// `(minute, value)` of `metric` for the ordered pair, minutes in `range`.
pub fn series(
    records: &[MinuteRecord],
    i: &NodeId,
    j: &NodeId,
    from_minute: u64,
    to_minute: u64,
    metric: Metric,
) -> Vec<(u64, f64)> {
    records
        .iter()
        .filter(|r| &r.i == i && &r.j == j && (from_minute..=to_minute).contains(&r.minute))
        .map(|r| (r.minute, metric.value(r)))
        .collect()
}

/// Pearson correlation. `None` for fewer than two points, non-finite
/// values, or a constant series unless both series are identical.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 || x.iter().chain(y).any(|v| !v.is_finite()) {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return (x == y).then_some(1.0);
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Correlation of the `i -> j` and `j -> i` series over the minutes both
/// directions have a record.
pub fn symmetry(
    records: &[MinuteRecord],
    i: &NodeId,
    j: &NodeId,
    from_minute: u64,
    to_minute: u64,
    metric: Metric,
) -> Option<f64> {
    let back: BTreeMap<u64, f64> = series(records, j, i, from_minute, to_minute, metric)
        .into_iter()
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = series(records, i, j, from_minute, to_minute, metric)
        .into_iter()
        .filter_map(|(m, v)| back.get(&m).map(|w| (v, *w)))
        .unzip();
    pearson(&x, &y)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        Some(Summary {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionSummary {
    pub i: NodeId,
    pub j: NodeId,
    pub records: usize,
    pub p: Option<Summary>,
    pub si: Option<Summary>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairSummary {
    pub pair: (NodeId, NodeId),
    pub contact_seconds: f64,
    pub directions: [DirectionSummary; 2],
    pub p_symmetry: Option<f64>,
    pub si_symmetry: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    /// Scenario name or trace directory.
    pub source: String,
    pub seed: Option<u64>,
    pub scenario: Option<ScenarioConfig>,
    pub params: EngineParams,
    pub minutes: u64,
    pub records: usize,
    pub pairs: Vec<PairSummary>,
    /// Wall clock of the run; the only field that varies between identical runs.
    pub runtime_ms: f64,
}

fn direction(records: &[MinuteRecord], i: &NodeId, j: &NodeId) -> DirectionSummary {
    let mine: Vec<&MinuteRecord> = records.iter().filter(|r| &r.i == i && &r.j == j).collect();
    let p: Vec<f64> = mine.iter().map(|r| r.p_ij).collect();
    let si: Vec<f64> = mine.iter().map(|r| r.si_ij).collect();
    DirectionSummary {
        i: i.clone(),
        j: j.clone(),
        records: mine.len(),
        p: Summary::of(&p),
        si: Summary::of(&si),
    }
}

impl RunReport {
    pub fn build(
        source: impl Into<String>,
        scenario: Option<&ScenarioConfig>,
        params: &EngineParams,
        stats: &RunStats,
        records: &[MinuteRecord],
    ) -> RunReport {
        let pairs = stats
            .pairs
            .iter()
            .map(|ps| {
                let (a, b) = (&ps.i, &ps.j);
                PairSummary {
                    pair: (a.clone(), b.clone()),
                    contact_seconds: ps.contact_seconds,
                    directions: [direction(records, a, b), direction(records, b, a)],
                    p_symmetry: symmetry(records, a, b, 0, u64::MAX, Metric::P),
                    si_symmetry: symmetry(records, a, b, 0, u64::MAX, Metric::Si),
                }
            })
            .collect();
        RunReport {
            source: source.into(),
            seed: scenario.map(|c| c.seed),
            scenario: scenario.cloned(),
            params: params.clone(),
            minutes: stats.minutes,
            records: stats.records,
            pairs,
            runtime_ms: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Distance, Motion, Nearness, SoundClass};
    use approx::assert_relative_eq;

    fn id(s: &str) -> NodeId {
        NodeId::new(s).unwrap()
    }

    fn rec(minute: u64, i: &str, j: &str, si: f64) -> MinuteRecord {
        MinuteRecord {
            minute,
            i: id(i),
            j: id(j),
            n_i: 1,
            m_i: Motion::Stationary,
            v_i: SoundClass::Normal,
            d_ij: Distance::Meters(1.0),
            s_ij: 60.0,
            p_ij: 30.0,
            si_ij: si,
            nearness: Nearness::Low,
        }
    }

    #[test]
    fn metric_names_and_aliases() {
        for m in Metric::ALL {
            assert_eq!(m.as_str().parse::<Metric>().unwrap(), m);
        }
        assert_eq!("propinquity".parse::<Metric>().unwrap(), Metric::P);
        assert_eq!("Social-Interaction".parse::<Metric>().unwrap(), Metric::Si);
        assert!("q".parse::<Metric>().is_err());
    }

    #[test]
    fn pearson_basics() {
        assert_relative_eq!(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), 1.0);
        assert_relative_eq!(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert_eq!(pearson(&[1.0], &[1.0]), None);
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 1.0]), Some(1.0));
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), None);
        assert_eq!(pearson(&[1.0, f64::INFINITY], &[1.0, 2.0]), None);
    }

    #[test]
    fn symmetry_aligns_on_minutes() {
        let records = vec![
            rec(0, "a", "b", 1.0),
            rec(0, "b", "a", 1.0),
            rec(1, "a", "b", 2.0),
            rec(2, "a", "b", 3.0),
            rec(2, "b", "a", 3.0),
        ];
        let (a, b) = (id("a"), id("b"));
        assert_eq!(
            series(&records, &a, &b, 1, 2, Metric::Si),
            vec![(1, 2.0), (2, 3.0)]
        );
        assert_relative_eq!(symmetry(&records, &a, &b, 0, 10, Metric::Si).unwrap(), 1.0);
        assert!(series(&records, &a, &id("c"), 0, 10, Metric::Si).is_empty());
    }

    #[test]
    fn report_summarises_both_directions() {
        let records = vec![
            rec(0, "a", "b", 1.0),
            rec(0, "b", "a", 1.0),
            rec(1, "a", "b", 3.0),
            rec(1, "b", "a", 3.0),
        ];
        let stats = RunStats {
            minutes: 2,
            records: 4,
            pairs: vec![crate::engine::PairStats {
                i: id("a"),
                j: id("b"),
                contact_seconds: 120.0,
            }],
        };
        let r = RunReport::build("x", None, &EngineParams::default(), &stats, &records);
        assert_eq!(r.pairs.len(), 1);
        let d = &r.pairs[0].directions[0];
        assert_eq!(d.records, 2);
        assert_eq!(
            d.si.unwrap(),
            Summary {
                mean: 2.0,
                min: 1.0,
                max: 3.0
            }
        );
        assert_eq!(r.pairs[0].si_symmetry, Some(1.0));
    }
}
