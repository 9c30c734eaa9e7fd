//! Per-episode learning curves shared by both learners.

use std::io::Write;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: usize,
    /// Cumulative primitive steps at the end of the episode.
    pub steps: u64,
    #[serde(rename = "return")]
    pub episode_return: f64,
    /// Alignment of the episode's actions with the demonstration, when one
    /// is available.
    pub alignment: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub points: Vec<CurvePoint>,
}

impl LearningCurve {
    pub fn push(&mut self, point: CurvePoint) {
        self.points.push(point);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Mean return over the last `n` episodes (fewer if the curve is short).
    pub fn tail_mean_return(&self, n: usize) -> f64 {
        let tail = &self.points[self.points.len().saturating_sub(n)..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().map(|p| p.episode_return).sum::<f64>() / tail.len() as f64
    }

    /// CSV with header `episode,steps,return,alignment`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.points {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory csv");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> csv::Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let points = r.deserialize().collect::<Result<Vec<CurvePoint>, _>>()?;
        Ok(Self { points })
    }
}
