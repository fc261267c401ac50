//! k-projection coverage over the emotional feature space.
//!
//! A projection is a k-subset of the four feature kinds; a cell is one value
//! assignment to a projection. A suite covers a cell when some sentence's
//! feature vector restricted to the projection equals the cell's values.
//! Coverage is `covered / (C(n,k) * alpha^k)`, which for `k = n` is
//! `covered / alpha^n`.
//!
//! Cells are stored in a dense bitmap indexed by
//! `projection_index * alpha^k + mixed_radix(values)`, where projections are
//! numbered in lexicographic order of their kinds and values use the
//! canonical emotion order (first kind most significant).

use crate::feature::{write_assignments, EmotionLabel, FeatureKind, FeatureVector, EMOTION_COUNT, FEATURE_COUNT};
use fixedbitset::FixedBitSet;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoverageError {
    #[error("k must be in 1..={FEATURE_COUNT}, got {0}")]
    InvalidK(usize),
    #[error("alpha must be in 1..={EMOTION_COUNT}, got {0}")]
    InvalidAlpha(usize),
    #[error("value `{value}` is outside the configured domain of {alpha} values")]
    ValueOutOfDomain { value: EmotionLabel, alpha: usize },
}

/// Coverage parameters. `n` is fixed at four features; `alpha` defaults to
/// six and may be narrowed to the first `alpha` emotion values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawCoverageConfig")]
pub struct CoverageConfig {
    k: usize,
    alpha: usize,
}

#[derive(Deserialize)]
struct RawCoverageConfig {
    k: usize,
    #[serde(default = "default_alpha")]
    alpha: usize,
}

fn default_alpha() -> usize {
    EMOTION_COUNT
}

impl TryFrom<RawCoverageConfig> for CoverageConfig {
    type Error = CoverageError;

    fn try_from(raw: RawCoverageConfig) -> Result<Self, Self::Error> {
        CoverageConfig::with_alpha(raw.k, raw.alpha)
    }
}

impl CoverageConfig {
    pub fn new(k: usize) -> Result<Self, CoverageError> {
        Self::with_alpha(k, EMOTION_COUNT)
    }

    pub fn with_alpha(k: usize, alpha: usize) -> Result<Self, CoverageError> {
        if !(1..=FEATURE_COUNT).contains(&k) {
            return Err(CoverageError::InvalidK(k));
        }
        if !(1..=EMOTION_COUNT).contains(&alpha) {
            return Err(CoverageError::InvalidAlpha(alpha));
        }
        Ok(CoverageConfig { k, alpha })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        FEATURE_COUNT
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn projection_count(&self) -> usize {
        binomial(FEATURE_COUNT, self.k)
    }

    pub fn cells_per_projection(&self) -> usize {
        self.alpha.pow(self.k as u32)
    }

    /// `C(n,k) * alpha^k`.
    pub fn total_cells(&self) -> usize {
        self.projection_count() * self.cells_per_projection()
    }

    pub fn domain(&self) -> &'static [EmotionLabel] {
        &EmotionLabel::ALL[..self.alpha]
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// A sorted k-subset of feature kinds.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Projection {
    kinds: Vec<FeatureKind>,
}

impl Projection {
    /// Returns `None` unless `kinds` is non-empty and strictly ascending.
    pub fn new(kinds: Vec<FeatureKind>) -> Option<Self> {
        if kinds.is_empty() || kinds.windows(2).any(|w| w[0] >= w[1]) {
            return None;
        }
        Some(Projection { kinds })
    }

    pub fn kinds(&self) -> &[FeatureKind] {
        &self.kinds
    }

    pub fn k(&self) -> usize {
        self.kinds.len()
    }

    pub fn contains(&self, kind: FeatureKind) -> bool {
        self.kinds.contains(&kind)
    }

    /// `verb+adj`, `adv`, ...
    pub fn name(&self) -> String {
        self.kinds.iter().map(|k| k.key()).collect::<Vec<_>>().join("+")
    }

    pub fn restrict(&self, fv: &FeatureVector) -> Vec<EmotionLabel> {
        self.kinds.iter().map(|&k| fv.get(k)).collect()
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// One value assignment to one projection.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProjectionCell {
    projection: Projection,
    values: Vec<EmotionLabel>,
}

impl ProjectionCell {
    pub fn new(projection: Projection, values: Vec<EmotionLabel>) -> Option<Self> {
        (projection.k() == values.len()).then_some(ProjectionCell { projection, values })
    }

    /// Convenience constructor from `(kind, value)` pairs in any order.
    pub fn from_pairs(pairs: &[(FeatureKind, EmotionLabel)]) -> Option<Self> {
        let mut pairs = pairs.to_vec();
        pairs.sort_by_key(|p| p.0);
        let projection = Projection::new(pairs.iter().map(|p| p.0).collect())?;
        Self::new(projection, pairs.into_iter().map(|p| p.1).collect())
    }

    pub fn projection(&self) -> &Projection {
        &self.projection
    }

    pub fn values(&self) -> &[EmotionLabel] {
        &self.values
    }

    pub fn pairs(&self) -> impl Iterator<Item = (FeatureKind, EmotionLabel)> + '_ {
        self.projection.kinds.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, kind: FeatureKind) -> Option<EmotionLabel> {
        self.pairs().find(|p| p.0 == kind).map(|p| p.1)
    }

    /// True when `fv` restricted to this cell's projection equals its values.
    pub fn matches(&self, fv: &FeatureVector) -> bool {
        self.pairs().all(|(k, v)| fv.get(k) == v)
    }
}

/// Canonical vector text restricted to the projection, e.g. `verb=sadness,adv=joy`.
impl fmt::Display for ProjectionCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_assignments(f, self.pairs())
    }
}

impl FromStr for ProjectionCell {
    type Err = crate::feature::FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let pairs = crate::feature::parse_assignments(s)?;
        ProjectionCell::from_pairs(&pairs).ok_or_else(|| crate::feature::FeatureError::Malformed(s.to_string()))
    }
}

impl Serialize for ProjectionCell {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ProjectionCell {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// All `C(4,k)` projections in lexicographic order of their kinds.
pub fn enumerate_projections(cfg: &CoverageConfig) -> Vec<Projection> {
    let mut out = Vec::with_capacity(cfg.projection_count());
    let mut combo: Vec<usize> = (0..cfg.k).collect();
    loop {
        out.push(Projection {
            kinds: combo.iter().map(|&i| FeatureKind::ALL[i]).collect(),
        });
        // advance to the next combination in lexicographic order
        let mut i = cfg.k;
        while i > 0 && combo[i - 1] == FEATURE_COUNT - cfg.k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        combo[i - 1] += 1;
        for j in i..cfg.k {
            combo[j] = combo[j - 1] + 1;
        }
    }
}

/// The `C(4,k)` cells a single vector occupies, one per projection.
pub fn cells_of(fv: &FeatureVector, cfg: &CoverageConfig) -> Vec<ProjectionCell> {
    enumerate_projections(cfg)
        .into_iter()
        .map(|p| {
            let values = p.restrict(fv);
            ProjectionCell { projection: p, values }
        })
        .collect()
}

/// Covered-cell set for one suite (or one pooled group of suites).
#[derive(Debug, Clone)]
pub struct CoverageState {
    config: CoverageConfig,
    projections: Vec<Projection>,
    covered: FixedBitSet,
}

impl PartialEq for CoverageState {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.covered == other.covered
    }
}

impl Eq for CoverageState {}

impl CoverageState {
    pub fn new(config: CoverageConfig) -> Self {
        CoverageState {
            config,
            projections: enumerate_projections(&config),
            covered: FixedBitSet::with_capacity(config.total_cells()),
        }
    }

    pub fn config(&self) -> &CoverageConfig {
        &self.config
    }

    pub fn projections(&self) -> &[Projection] {
        &self.projections
    }

    pub fn covered_count(&self) -> usize {
        self.covered.count_ones(..)
    }

    pub fn total_cells(&self) -> usize {
        self.config.total_cells()
    }

    pub fn is_complete(&self) -> bool {
        self.covered_count() == self.total_cells()
    }

    fn value_index(&self, v: EmotionLabel) -> Result<usize, CoverageError> {
        let i = v.index();
        if i < self.config.alpha {
            Ok(i)
        } else {
            Err(CoverageError::ValueOutOfDomain { value: v, alpha: self.config.alpha })
        }
    }

    fn index_of(&self, projection_index: usize, values: impl Iterator<Item = EmotionLabel>) -> Result<usize, CoverageError> {
        let mut offset = 0;
        for v in values {
            offset = offset * self.config.alpha + self.value_index(v)?;
        }
        Ok(projection_index * self.config.cells_per_projection() + offset)
    }

    /// Canonical index of `cell`, or `None` if it does not belong to this space.
    pub fn cell_index(&self, cell: &ProjectionCell) -> Option<usize> {
        let p = self.projections.iter().position(|p| *p == cell.projection)?;
        self.index_of(p, cell.values.iter().copied()).ok()
    }

    /// Inverse of [`cell_index`](Self::cell_index).
    pub fn cell_at(&self, index: usize) -> Option<ProjectionCell> {
        if index >= self.total_cells() {
            return None;
        }
        let per = self.config.cells_per_projection();
        let projection = self.projections[index / per].clone();
        let mut rest = index % per;
        let mut values = vec![EmotionLabel::Joy; self.config.k];
        for slot in values.iter_mut().rev() {
            *slot = EmotionLabel::ALL[rest % self.config.alpha];
            rest /= self.config.alpha;
        }
        Some(ProjectionCell { projection, values })
    }

    fn vector_indices(&self, fv: &FeatureVector) -> Result<Vec<usize>, CoverageError> {
        self.projections
            .iter()
            .enumerate()
            .map(|(p, proj)| self.index_of(p, proj.kinds.iter().map(|&k| fv.get(k))))
            .collect()
    }

    pub fn is_covered(&self, cell: &ProjectionCell) -> bool {
        self.cell_index(cell).is_some_and(|i| self.covered.contains(i))
    }

    /// Adds one vector; returns how many cells became newly covered.
    pub fn try_add_vector(&mut self, fv: &FeatureVector) -> Result<usize, CoverageError> {
        let indices = self.vector_indices(fv)?;
        let mut fresh = 0;
        for i in indices {
            if !self.covered.put(i) {
                fresh += 1;
            }
        }
        Ok(fresh)
    }

    /// Like [`try_add_vector`](Self::try_add_vector).
    ///
    /// # Panics
    /// If a value of `fv` lies outside the configured `alpha` domain. This
    /// cannot happen with the default `alpha = 6`.
    pub fn add_vector(&mut self, fv: &FeatureVector) -> usize {
        self.try_add_vector(fv).unwrap_or_else(|e| panic!("{e}"))
    }

    pub fn add_suite<'a>(&mut self, fvs: impl IntoIterator<Item = &'a FeatureVector>) -> usize {
        fvs.into_iter().map(|fv| self.add_vector(fv)).sum()
    }

    /// Number of cells of `fv` that are currently uncovered.
    pub fn uncovered_gain(&self, fv: &FeatureVector) -> usize {
        match self.vector_indices(fv) {
            Ok(ix) => ix.into_iter().filter(|&i| !self.covered.contains(i)).count(),
            Err(_) => 0,
        }
    }

    pub fn covered_cells(&self) -> Vec<ProjectionCell> {
        self.covered.ones().filter_map(|i| self.cell_at(i)).collect()
    }

    /// Uncovered cells in canonical index order.
    pub fn uncovered(&self) -> Vec<ProjectionCell> {
        self.covered.zeroes().filter_map(|i| self.cell_at(i)).collect()
    }

    pub fn report(&self) -> CoverageReport {
        let per = self.config.cells_per_projection();
        let per_projection = self
            .projections
            .iter()
            .enumerate()
            .map(|(p, proj)| (proj.name(), self.covered.count_ones(p * per..(p + 1) * per) as u64))
            .collect();
        CoverageReport {
            k: self.config.k,
            covered_count: self.covered_count() as u64,
            total_cells: self.total_cells() as u64,
            per_projection,
        }
    }
}

/// Snapshot of a [`CoverageState`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "ReportRecord", try_from = "ReportRecord")]
pub struct CoverageReport {
    pub k: usize,
    pub covered_count: u64,
    pub total_cells: u64,
    /// Covered cells per projection, keyed by projection name.
    pub per_projection: BTreeMap<String, u64>,
}

impl CoverageReport {
    /// Exact coverage ratio (reduced).
    pub fn cov(&self) -> Ratio<u64> {
        Ratio::new(self.covered_count, self.total_cells)
    }

    pub fn cov_percent(&self) -> f64 {
        let exact = crate::rational::ratio(self.covered_count as i64 * 100, self.total_cells as i64);
        crate::rational::decimal(&exact, 4).parse().unwrap_or(f64::NAN)
    }
}

#[derive(Serialize, Deserialize)]
struct ReportRecord {
    k: usize,
    covered: u64,
    total: u64,
    cov_numerator: u64,
    cov_denominator: u64,
    cov_percent: f64,
    per_projection: BTreeMap<String, u64>,
}

impl From<CoverageReport> for ReportRecord {
    fn from(r: CoverageReport) -> Self {
        let cov = r.cov();
        ReportRecord {
            k: r.k,
            covered: r.covered_count,
            total: r.total_cells,
            cov_numerator: *cov.numer(),
            cov_denominator: *cov.denom(),
            cov_percent: r.cov_percent(),
            per_projection: r.per_projection,
        }
    }
}

impl TryFrom<ReportRecord> for CoverageReport {
    type Error = String;

    fn try_from(r: ReportRecord) -> Result<Self, Self::Error> {
        if r.total == 0 || r.covered > r.total {
            return Err(format!("inconsistent coverage counts {}/{}", r.covered, r.total));
        }
        Ok(CoverageReport {
            k: r.k,
            covered_count: r.covered,
            total_cells: r.total,
            per_projection: r.per_projection,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use EmotionLabel::*;

    fn cfg(k: usize) -> CoverageConfig {
        CoverageConfig::new(k).unwrap()
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert_eq!(CoverageConfig::new(0), Err(CoverageError::InvalidK(0)));
        assert_eq!(CoverageConfig::new(5), Err(CoverageError::InvalidK(5)));
        assert_eq!(CoverageConfig::with_alpha(2, 7), Err(CoverageError::InvalidAlpha(7)));
    }

    #[test]
    fn projection_counts() {
        assert_eq!(enumerate_projections(&cfg(1)).len(), 4);
        assert_eq!(enumerate_projections(&cfg(2)).len(), 6);
        assert_eq!(enumerate_projections(&cfg(3)).len(), 4);
        assert_eq!(enumerate_projections(&cfg(4)).len(), 1);
        let names: Vec<_> = enumerate_projections(&cfg(2)).iter().map(|p| p.name()).collect();
        assert_eq!(names, ["verb+adj", "verb+adv", "verb+noun", "adj+adv", "adj+noun", "adv+noun"]);
    }

    #[test]
    fn cells_of_vector() {
        let fv = FeatureVector::new(Sadness, Neutral, Joy, Fear);
        let full = cells_of(&fv, &cfg(4));
        assert_eq!(full.len(), 1);
        assert_eq!(full[0].values(), fv.values());
        assert_eq!(cells_of(&fv, &cfg(2)).len(), 6);
        for c in cells_of(&FeatureVector::uniform(Joy), &cfg(2)) {
            assert_eq!(c.values(), [Joy, Joy]);
        }
    }

    #[test]
    fn single_vector_at_k2_covers_one_36th() {
        let mut st = CoverageState::new(cfg(2));
        assert_eq!(st.add_suite(&[]), 0);
        assert_eq!(st.report().covered_count, 0);
        assert_eq!(st.add_vector(&FeatureVector::uniform(Fear)), 6);
        let r = st.report();
        assert_eq!((r.covered_count, r.total_cells), (6, 216));
        assert_eq!(r.cov(), Ratio::new(1, 36));
        let again = st.add_vector(&FeatureVector::uniform(Fear));
        assert_eq!(again, 0);
        assert_eq!(st.report(), r);
    }

    #[test]
    fn totals_per_k() {
        let totals: Vec<_> = (1..=4).map(|k| CoverageState::new(cfg(k)).report().total_cells).collect();
        assert_eq!(totals, [24, 216, 864, 1296]);
    }

    #[test]
    fn empty_state_has_zero_coverage() {
        let r = CoverageState::new(cfg(3)).report();
        assert_eq!(r.cov(), Ratio::new(0, 1));
        assert_eq!(r.cov_percent(), 0.0);
    }

    #[test]
    fn uncovered_listing() {
        let mut st = CoverageState::new(cfg(2));
        assert_eq!(st.uncovered().len(), 216);
        let mut k1 = CoverageState::new(cfg(1));
        k1.add_vector(&FeatureVector::uniform(Joy));
        let un = k1.uncovered();
        assert_eq!(un.len(), 20);
        assert!(un.iter().all(|c| c.values() != [Joy]));
        for fv in FeatureVector::all() {
            st.add_vector(&fv);
        }
        assert!(st.uncovered().is_empty());
        assert!(st.is_complete());
    }

    #[test]
    fn cell_index_roundtrip() {
        for k in 1..=4 {
            let st = CoverageState::new(cfg(k));
            for i in 0..st.total_cells() {
                let cell = st.cell_at(i).unwrap();
                assert_eq!(st.cell_index(&cell), Some(i));
            }
            assert!(st.cell_at(st.total_cells()).is_none());
        }
    }

    #[test]
    fn narrowed_alpha_rejects_foreign_values() {
        let mut st = CoverageState::new(CoverageConfig::with_alpha(2, 2).unwrap());
        assert_eq!(st.total_cells(), 24);
        assert!(st.try_add_vector(&FeatureVector::uniform(Neutral)).is_err());
        assert_eq!(st.try_add_vector(&FeatureVector::new(Joy, Anger, Joy, Anger)), Ok(6));
    }

    #[test]
    fn cell_text_roundtrip() {
        let cell = ProjectionCell::from_pairs(&[(FeatureKind::Adverb, Joy), (FeatureKind::Verb, Sadness)]).unwrap();
        assert_eq!(cell.to_string(), "verb=sadness,adv=joy");
        assert_eq!("verb=sadness,adv=joy".parse::<ProjectionCell>().unwrap(), cell);
        assert!("adv=joy,verb=sadness".parse::<ProjectionCell>().is_err());
    }

    #[test]
    fn report_json_shape() {
        let mut st = CoverageState::new(cfg(2));
        st.add_vector(&FeatureVector::uniform(Joy));
        let v = serde_json::to_value(st.report()).unwrap();
        assert_eq!(v["k"], 2);
        assert_eq!(v["covered"], 6);
        assert_eq!(v["total"], 216);
        assert_eq!(v["cov_numerator"], 1);
        assert_eq!(v["cov_denominator"], 36);
        assert_eq!(v["cov_percent"], 2.7778);
        assert_eq!(v["per_projection"]["verb+adj"], 1);
        let back: CoverageReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, st.report());
    }
}
