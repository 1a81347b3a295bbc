use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::binary::BinaryParams;
use crate::error::{Error, Result};

use super::ProxyParams;

/// One observed unit. The latent `U` is never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub a: Vec<bool>,
    pub y: bool,
    pub z: Option<[bool; 2]>,
}

impl Row {
    pub fn s(&self) -> usize {
        self.a.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    rows: Vec<Row>,
    seed: u64,
}

impl Dataset {
    /// Rows must share the same number of causes and either all or none
    /// carry proxies.
    pub fn new(rows: Vec<Row>, seed: u64) -> Result<Self> {
        if let Some(first) = rows.first() {
            let (m, has_z) = (first.a.len(), first.z.is_some());
            if m == 0 {
                return Err(Error::InvalidArgument("rows must carry at least one cause".into()));
            }
            if let Some(i) = rows.iter().position(|r| r.a.len() != m || r.z.is_some() != has_z) {
                return Err(Error::InvalidArgument(format!("row {i} does not match the arity of row 0")));
            }
        }
        Ok(Self { rows, seed })
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of causes per row (0 for an empty dataset).
    pub fn m(&self) -> usize {
        self.rows.first().map_or(0, |r| r.a.len())
    }

    pub fn has_proxies(&self) -> bool {
        self.rows.first().is_some_and(|r| r.z.is_some())
    }

    /// Same rows with proxy columns dropped.
    pub fn without_proxies(&self) -> Dataset {
        let rows = self.rows.iter().map(|r| Row { z: None, ..r.clone() }).collect();
        Dataset { rows, seed: self.seed }
    }
}

/// Draw `n` units from the binary model, optionally with two proxies of `U`.
pub fn sample_dataset(
    params: &BinaryParams,
    proxies: Option<&ProxyParams>,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = params.m();
    let rows = (0..n)
        .map(|_| {
            let u = usize::from(rng.random::<f64>() < params.pi_u());
            let p_a = params.p_a(u);
            let a: Vec<bool> = (0..m).map(|_| rng.random::<f64>() < p_a).collect();
            let s = a.iter().filter(|&&b| b).count();
            let y = rng.random::<f64>() < params.p_y(u, s);
            let z = proxies.map(|p| {
                let z1 = rng.random::<f64>() < p.p_z1[u];
                let z2 = rng.random::<f64>() < p.p_z2[u];
                [z1, z2]
            });
            Row { a, y, z }
        })
        .collect();
    Dataset::new(rows, seed)
}

/// Row counts by `(S(a), y, z-pattern)`. The likelihood of a row depends on
/// `a` only through `S(a)`, so these counts are sufficient.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    pub m: usize,
    pub with_proxies: bool,
    pub n: usize,
    counts: Vec<f64>,
}

impl SufficientStats {
    pub fn from_dataset(data: &Dataset, with_proxies: bool) -> Result<Self> {
        if with_proxies && !data.has_proxies() {
            return Err(Error::InvalidArgument("proxy fit requested but rows carry no proxies".into()));
        }
        let m = data.m();
        let mut stats = Self {
            m,
            with_proxies,
            n: data.len(),
            counts: vec![0.0; (m + 1) * 2 * Self::patterns_for(with_proxies)],
        };
        for row in data.rows() {
            let zp = match (with_proxies, row.z) {
                (true, Some([z1, z2])) => usize::from(z1) + 2 * usize::from(z2),
                _ => 0,
            };
            let idx = stats.index(row.s(), usize::from(row.y), zp);
            stats.counts[idx] += 1.0;
        }
        Ok(stats)
    }

    fn patterns_for(with_proxies: bool) -> usize {
        if with_proxies {
            4
        } else {
            1
        }
    }

    /// Number of proxy patterns tracked (4 with proxies, 1 without).
    pub fn patterns(&self) -> usize {
        Self::patterns_for(self.with_proxies)
    }

    fn index(&self, s: usize, y: usize, zp: usize) -> usize {
        (s * 2 + y) * self.patterns() + zp
    }

    pub fn count(&self, s: usize, y: usize, zp: usize) -> f64 {
        self.counts[self.index(s, y, zp)]
    }

    /// Non-empty cells as `(s, y, z1, z2, count)`; `z` entries are 0 when
    /// proxies are not tracked.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, usize, usize, f64)> + '_ {
        let pats = self.patterns();
        (0..=self.m).flat_map(move |s| {
            (0..2).flat_map(move |y| {
                (0..pats).filter_map(move |zp| {
                    let c = self.count(s, y, zp);
                    (c > 0.0).then_some((s, y, zp & 1, zp >> 1, c))
                })
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> BinaryParams {
        BinaryParams::with_logistic_outcome(4, 0.3, 0.2, 0.8, 0.5, 2.0).unwrap()
    }

    #[test]
    fn same_seed_same_data() {
        let p = params();
        let z = ProxyParams::new([0.2, 0.8], [0.3, 0.6]).unwrap();
        let a = sample_dataset(&p, Some(&z), 500, 11).unwrap();
        let b = sample_dataset(&p, Some(&z), 500, 11).unwrap();
        let c = sample_dataset(&p, Some(&z), 500, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.seed(), 11);
        assert!(a.has_proxies() && !a.without_proxies().has_proxies());
    }

    #[test]
    fn degenerate_latent_matches_p_a0() {
        let p = BinaryParams::with_logistic_outcome(5, 0.0, 0.25, 0.9, 0.5, 2.0).unwrap();
        let data = sample_dataset(&p, None, 20_000, 3).unwrap();
        for k in 0..5 {
            let mean = data.rows().iter().filter(|r| r.a[k]).count() as f64 / 20_000.0;
            // sd = sqrt(0.25 * 0.75 / 20000) ~ 0.0031
            assert!((mean - 0.25).abs() < 0.013, "cause {k}: {mean}");
        }
    }

    #[test]
    fn arity_is_checked() {
        let rows = vec![
            Row { a: vec![true, false], y: true, z: None },
            Row { a: vec![true], y: true, z: None },
        ];
        assert!(Dataset::new(rows, 0).is_err());
        let rows = vec![
            Row { a: vec![true], y: true, z: None },
            Row { a: vec![false], y: true, z: Some([true, true]) },
        ];
        assert!(Dataset::new(rows, 0).is_err());
        assert!(sample_dataset(&params(), None, 0, 1).is_err());
    }

    #[test]
    fn stats_count_every_row() {
        let z = ProxyParams::new([0.2, 0.8], [0.3, 0.6]).unwrap();
        let data = sample_dataset(&params(), Some(&z), 1000, 5).unwrap();
        let with = SufficientStats::from_dataset(&data, true).unwrap();
        let without = SufficientStats::from_dataset(&data, false).unwrap();
        let total = |s: &SufficientStats| s.cells().map(|c| c.4).sum::<f64>();
        assert_eq!(total(&with), 1000.0);
        assert_eq!(total(&without), 1000.0);
        for s in 0..=4 {
            for y in 0..2 {
                let sum: f64 = (0..4).map(|zp| with.count(s, y, zp)).sum();
                assert_eq!(sum, without.count(s, y, 0));
            }
        }
        assert!(SufficientStats::from_dataset(&data.without_proxies(), true).is_err());
    }
}
