//! Monthly joint counts of natural catastrophes, 1967–2014, shipped as
//! contingency tables and expanded into pair lists on load.

use serde::Serialize;

use crate::simulate::CountSample;

/// A named contingency table of `(x1, x2)` counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DatasetFixture {
    pub name: &'static str,
    pub x1_label: &'static str,
    pub x2_label: &'static str,
    /// `cells[i][j]` = number of months with `x1 = i` and `x2 = j`.
    pub cells: &'static [&'static [u64]],
    pub provenance: &'static str,
}

pub const STORM_FLOOD: DatasetFixture = DatasetFixture {
    name: "storm_flood",
    x1_label: "storm",
    x2_label: "flood",
    cells: &[&[488, 20, 1], &[37, 17, 0], &[4, 3, 5], &[1, 0, 0]],
    provenance: "monthly counts of storms and floods, 1967-2014 (576 months)",
};

pub const BUSHFIRE_FLOOD: DatasetFixture = DatasetFixture {
    name: "bushfire_flood",
    x1_label: "bushfire",
    x2_label: "flood",
    cells: &[&[508, 39, 6], &[19, 1, 0], &[3, 0, 0]],
    provenance: "monthly counts of bushfires and floods, 1967-2014 (576 months)",
};

pub const FIXTURES: [DatasetFixture; 2] = [STORM_FLOOD, BUSHFIRE_FLOOD];

impl DatasetFixture {
    /// Expands the table row by row into a list of pairs.
    pub fn sample(&self) -> CountSample {
        let mut pairs = Vec::new();
        for (i, row) in self.cells.iter().enumerate() {
            for (j, &count) in row.iter().enumerate() {
                pairs.extend(std::iter::repeat_n((i as u64, j as u64), count as usize));
            }
        }
        CountSample::new(pairs)
    }
}

pub fn fixture(name: &str) -> Option<DatasetFixture> {
    FIXTURES.into_iter().find(|f| f.name == name)
}

pub fn storm_flood() -> CountSample {
    STORM_FLOOD.sample()
}

pub fn bushfire_flood() -> CountSample {
    BUSHFIRE_FLOOD.sample()
}

/// Cross-tabulation of a sample: `table[i][j]` counts pairs `(i, j)`.
pub fn crosstab(sample: &CountSample) -> Vec<Vec<u64>> {
    let (m1, m2) = sample.max_counts();
    let mut table = vec![vec![0u64; m2 as usize + 1]; m1 as usize + 1];
    for &(a, b) in &sample.pairs {
        table[a as usize][b as usize] += 1;
    }
    table
}

/// Descriptive summary of a sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: [f64; 2],
    /// Sample variances with divisor `n - 1`.
    pub variance: [f64; 2],
    /// Sample covariance with divisor `n - 1`.
    pub covariance: f64,
    pub zero_pairs: usize,
    pub crosstab: Vec<Vec<u64>>,
}

pub fn summarize(sample: &CountSample) -> Option<SampleSummary> {
    let n = sample.len();
    if n == 0 {
        return None;
    }
    let nf = n as f64;
    let mean = [
        sample.pairs.iter().map(|p| p.0 as f64).sum::<f64>() / nf,
        sample.pairs.iter().map(|p| p.1 as f64).sum::<f64>() / nf,
    ];
    let denom = if n > 1 { nf - 1.0 } else { f64::NAN };
    let (mut v1, mut v2, mut c) = (0.0, 0.0, 0.0);
    for &(a, b) in &sample.pairs {
        let (d1, d2) = (a as f64 - mean[0], b as f64 - mean[1]);
        v1 += d1 * d1;
        v2 += d2 * d2;
        c += d1 * d2;
    }
    Some(SampleSummary {
        n,
        mean,
        variance: [v1 / denom, v2 / denom],
        covariance: c / denom,
        zero_pairs: sample.zero_pairs(),
        crosstab: crosstab(sample),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn storm_flood_sums() {
        let s = storm_flood();
        assert_eq!(s.len(), 576);
        let sum = |f: fn(&(u64, u64)) -> u64| s.pairs.iter().map(f).sum::<u64>();
        assert_eq!(sum(|p| p.0), 81);
        assert_eq!(sum(|p| p.0 * p.0), 111);
        assert_eq!(sum(|p| p.1), 52);
        assert_eq!(sum(|p| p.1 * p.1), 64);
        assert_eq!(sum(|p| p.0 * p.1), 43);
        assert_eq!(crosstab(&s)[1][1], 17);
    }

    #[test]
    fn bushfire_flood_cells() {
        let s = bushfire_flood();
        assert_eq!(s.len(), 576);
        assert_eq!(crosstab(&s)[0][1], 39);
    }

    #[test]
    fn fixtures_reaggregate_exactly() {
        for f in FIXTURES {
            let tab = crosstab(&f.sample());
            for (i, row) in f.cells.iter().enumerate() {
                for (j, &c) in row.iter().enumerate() {
                    assert_eq!(tab.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0), c);
                }
            }
        }
        assert!(fixture("storm_flood").is_some());
        assert!(fixture("nope").is_none());
    }

    #[test]
    fn summary_covariance() {
        let s = storm_flood();
        let sum = summarize(&s).unwrap();
        assert!((sum.covariance - (43.0 - 81.0 * 52.0 / 576.0) / 575.0).abs() < 1e-14);
        assert!(summarize(&CountSample::default()).is_none());
    }
}
