use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalObservation {
    /// Observed time `min(T, C, tau)`.
    pub y: f64,
    /// Whether `y` is an event time.
    pub delta: bool,
    pub z: Vec<f64>,
}

/// Right-censored observations on `[0, tau]`.
///
/// Construction also builds a view sorted by `y` descending, so risk-set sums
/// in the likelihood are single-pass cumulative sums.
#[derive(Clone, Debug, PartialEq)]
pub struct SurvivalDataset {
    observations: Vec<SurvivalObservation>,
    tau: f64,
    d: usize,
    sorted: SortedView,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct SortedView {
    /// Original index of the observation at each sorted position.
    pub order: Vec<usize>,
    pub y: Vec<f64>,
    pub event: Vec<bool>,
    /// Row-major `n x d` covariates in sorted order.
    pub z: Vec<f64>,
    /// Exclusive end positions of the groups of tied `y`.
    pub group_ends: Vec<usize>,
}

impl SurvivalDataset {
    pub fn new(observations: Vec<SurvivalObservation>, tau: f64) -> Result<Self> {
        let Some(first) = observations.first() else {
            return Err(Error::Size { n: 0, min: 1 });
        };
        let d = first.z.len();
        if d == 0 {
            return Err(Error::Validation("covariate dimension must be at least 1".into()));
        }
        if !tau.is_finite() || tau <= 0.0 {
            return Err(Error::Validation(format!("tau must be finite and positive, got {tau}")));
        }
        for (i, obs) in observations.iter().enumerate() {
            if !obs.y.is_finite() || obs.y < 0.0 {
                return Err(Error::Validation(format!("observation {i}: y = {} is not a finite non-negative time", obs.y)));
            }
            if obs.y > tau {
                return Err(Error::Validation(format!("observation {i}: y = {} exceeds tau = {tau}", obs.y)));
            }
            if obs.z.len() != d {
                return Err(Error::Validation(format!(
                    "observation {i}: covariate dimension {} differs from {d}",
                    obs.z.len()
                )));
            }
            if obs.z.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("observation {i}: non-finite covariate")));
            }
        }
        let sorted = SortedView::build(&observations, d);
        Ok(Self { observations, tau, d, sorted })
    }

    /// Uses the largest observed time as the horizon.
    pub fn from_observations(observations: Vec<SurvivalObservation>) -> Result<Self> {
        let tau = observations.iter().map(|o| o.y).fold(0.0, f64::max);
        Self::new(observations, if tau > 0.0 { tau } else { 1.0 })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn observations(&self) -> &[SurvivalObservation] {
        &self.observations
    }

    pub fn event_count(&self) -> usize {
        self.observations.iter().filter(|o| o.delta).count()
    }

    pub fn censoring_fraction(&self) -> f64 {
        1.0 - self.event_count() as f64 / self.len() as f64
    }

    pub(crate) fn sorted(&self) -> &SortedView {
        &self.sorted
    }

    /// Parse `y,delta,z1,...,zd` CSV; lines starting with `#` are skipped.
    /// Line numbers in errors are 1-based and count the header.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
            .clone();
        let d = check_header(&headers)?;
        let mut observations = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.len() != d + 2 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} fields, found {}", d + 2, record.len()),
                });
            }
            let field = |k: usize, name: &str| -> Result<f64> {
                record[k].parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("{name}: cannot parse `{}` as a number", &record[k]),
                })
            };
            let y = field(0, "y")?;
            let delta = match &record[1] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::Parse {
                        line,
                        message: format!("delta must be 0 or 1, found `{other}`"),
                    })
                }
            };
            let z = (0..d).map(|j| field(j + 2, &headers[j + 2])).collect::<Result<Vec<_>>>()?;
            if !y.is_finite() || y < 0.0 {
                return Err(Error::Parse { line, message: format!("y = {y} is not a finite non-negative time") });
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parse { line, message: "non-finite covariate".into() });
            }
            observations.push(SurvivalObservation { y, delta, z });
        }
        if observations.is_empty() {
            return Err(Error::Parse { line: 1, message: "no data rows".into() });
        }
        Self::from_observations(observations)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = String::from("y,delta");
        for j in 1..=self.d {
            header.push_str(&format!(",z{j}"));
        }
        writeln!(out, "{header}")?;
        for obs in &self.observations {
            write!(out, "{},{}", obs.y, u8::from(obs.delta))?;
            for v in &obs.z {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

fn check_header(headers: &csv::StringRecord) -> Result<usize> {
    let bad = |message: String| Error::Parse { line: 1, message };
    if headers.len() < 3 || &headers[0] != "y" || &headers[1] != "delta" {
        return Err(bad("header must be `y,delta,z1,...,zd`".into()));
    }
    for (j, h) in headers.iter().skip(2).enumerate() {
        if h != format!("z{}", j + 1) {
            return Err(bad(format!("expected column `z{}`, found `{h}`", j + 1)));
        }
    }
    Ok(headers.len() - 2)
}

impl SortedView {
    fn build(observations: &[SurvivalObservation], d: usize) -> Self {
        let mut order: Vec<usize> = (0..observations.len()).collect();
        order.sort_by(|&a, &b| observations[b].y.total_cmp(&observations[a].y).then(a.cmp(&b)));
        let y: Vec<f64> = order.iter().map(|&i| observations[i].y).collect();
        let event = order.iter().map(|&i| observations[i].delta).collect();
        let mut z = Vec::with_capacity(observations.len() * d);
        for &i in &order {
            z.extend_from_slice(&observations[i].z);
        }
        let mut group_ends = Vec::new();
        for k in 1..y.len() {
            if y[k] != y[k - 1] {
                group_ends.push(k);
            }
        }
        group_ends.push(y.len());
        Self { order, y, event, z, group_ends }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(y: f64, delta: bool, z: f64) -> SurvivalObservation {
        SurvivalObservation { y, delta, z: vec![z] }
    }

    #[test]
    fn sorted_view_groups_ties() {
        let data =
            SurvivalDataset::from_observations(vec![obs(1.0, true, 0.0), obs(3.0, false, 1.0), obs(1.0, false, 2.0), obs(2.0, true, 3.0)])
                .unwrap();
        let s = data.sorted();
        assert_eq!(s.order, vec![1, 3, 0, 2]);
        assert_eq!(s.group_ends, vec![1, 2, 4]);
        assert_eq!(s.z, vec![1.0, 3.0, 0.0, 2.0]);
        assert_eq!(data.tau(), 3.0);
    }

    #[test]
    fn validation() {
        assert!(SurvivalDataset::new(vec![obs(2.0, true, 0.0)], 1.0).is_err());
        assert!(SurvivalDataset::new(vec![obs(-1.0, true, 0.0)], 1.0).is_err());
        assert!(SurvivalDataset::new(vec![], 1.0).is_err());
        let mixed = vec![obs(0.5, true, 0.0), SurvivalObservation { y: 0.2, delta: false, z: vec![1.0, 2.0] }];
        assert!(SurvivalDataset::new(mixed, 1.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let data = SurvivalDataset::from_observations(vec![obs(0.125, true, -1.5), obs(2.0, false, 0.1)]).unwrap();
        let text = data.to_csv_string();
        assert_eq!(text, "y,delta,z1\n0.125,1,-1.5\n2,0,0.1\n");
        let back = SurvivalDataset::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let err = SurvivalDataset::read_csv("y,delta,z1\n1,1,0\n2,x,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err = SurvivalDataset::read_csv("y,delta,z1\n1,1,0\n2,0,abc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err = SurvivalDataset::read_csv("y,delta,z2\n1,1,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err:?}");
        let err = SurvivalDataset::read_csv("y,delta,z1\n1,1,0\n2,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }
}
