//! Rail line description and deterministic passenger accounting.
//!
//! Stations and boarding positions (cars) are 1-based everywhere in this
//! module's public API.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

/// Smallest distance used in the access-point decay law, in position widths.
pub const DISTANCE_FLOOR: f64 = 0.5;

/// Platform layout of one station: where passengers enter, where committed
/// passengers want to be when they get off here, and how sharply
/// non-committed passengers cluster around the entrances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationLayout {
    pub n_positions: usize,
    pub access_points: Vec<usize>,
    pub exit_points: Vec<usize>,
    pub decay: f64,
}

impl StationLayout {
    fn validate(&self, station: usize, boards: bool) -> Result<()> {
        let field = |name: &str| format!("line.stations[{station}].{name}");
        if self.n_positions == 0 {
            return Err(Error::invalid("line.n_cars", "must be >= 1"));
        }
        ensure_positive(&field("xi"), self.decay)?;
        for (name, pts) in [
            ("access", &self.access_points),
            ("exits", &self.exit_points),
        ] {
            if let Some(p) = pts.iter().find(|&&p| p == 0 || p > self.n_positions) {
                return Err(Error::invalid(
                    field(name),
                    format!("position {p} outside 1..={}", self.n_positions),
                ));
            }
        }
        if boards && self.access_points.is_empty() {
            return Err(Error::invalid(
                field("access"),
                "origin station needs an access point",
            ));
        }
        Ok(())
    }
}

/// Where non-committed passengers wait:
/// `p_k ∝ sum_l max(|k - l|, 0.5)^(-xi)` over the access points `l`.
pub fn noncommitted_position_probs(layout: &StationLayout) -> Result<Vec<f64>> {
    if layout.access_points.is_empty() {
        return Err(Error::invalid("access", "no access points"));
    }
    let weights: Vec<f64> = (1..=layout.n_positions)
        .map(|k| {
            layout
                .access_points
                .iter()
                .map(|&l| {
                    (k as f64 - l as f64)
                        .abs()
                        .max(DISTANCE_FLOOR)
                        .powf(-layout.decay)
                })
                .sum()
        })
        .collect();
    let z: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / z).collect())
}

/// Where committed passengers bound for this station wait: uniform over its
/// exits, or over every position when no exits are listed.
pub fn committed_position_probs(dest: &StationLayout) -> Vec<f64> {
    let k = dest.n_positions;
    if dest.exit_points.is_empty() {
        return vec![1.0 / k as f64; k];
    }
    let mut p = vec![0.0; k];
    let share = 1.0 / dest.exit_points.len() as f64;
    for &e in &dest.exit_points {
        p[e - 1] += share;
    }
    p
}

/// Flat indexing of the strictly upper-triangular `M x M` ODM in row order
/// `[b_12, ..., b_1M, b_23, ..., b_2M, ...]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OdmIndex {
    n_stations: usize,
}

impl OdmIndex {
    pub fn new(n_stations: usize) -> Self {
        Self { n_stations }
    }

    /// The index with exactly `len` entries, if one exists (`M >= 2`).
    pub fn from_len(len: usize) -> Option<Self> {
        (2..)
            .map(Self::new)
            .take_while(|ix| ix.len() <= len)
            .find(|ix| ix.len() == len)
    }

    pub fn n_stations(&self) -> usize {
        self.n_stations
    }

    pub fn len(&self) -> usize {
        self.n_stations * self.n_stations.saturating_sub(1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of `(origin, destination)`, both 1-based.
    pub fn flat(&self, origin: usize, dest: usize) -> Option<usize> {
        let m = self.n_stations;
        if origin == 0 || origin >= dest || dest > m {
            return None;
        }
        // rows before `origin` hold (m-1) + (m-2) + ... + (m-origin+1) entries
        let before = (origin - 1) * (2 * m - origin) / 2;
        Some(before + dest - origin - 1)
    }

    /// Inverse of [`OdmIndex::flat`].
    pub fn pair(&self, idx: usize) -> (usize, usize) {
        self.pairs().nth(idx).expect("flat index out of range")
    }

    /// All `(origin, destination)` pairs in flat order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        let m = self.n_stations;
        (1..m).flat_map(move |i| ((i + 1)..=m).map(move |j| (i, j)))
    }
}

/// Car-level origin-destination counts for one car.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CarOdm {
    pub index: OdmIndex,
    pub entries: Vec<u32>,
}

impl CarOdm {
    pub fn zeros(n_stations: usize) -> Self {
        let index = OdmIndex::new(n_stations);
        Self {
            entries: vec![0; index.len()],
            index,
        }
    }

    pub fn from_entries(n_stations: usize, entries: Vec<u32>) -> Result<Self> {
        let index = OdmIndex::new(n_stations);
        if entries.len() != index.len() {
            return Err(Error::invalid(
                "odm",
                format!("expected {} entries, got {}", index.len(), entries.len()),
            ));
        }
        Ok(Self { index, entries })
    }

    pub fn get(&self, origin: usize, dest: usize) -> u32 {
        self.index.flat(origin, dest).map_or(0, |i| self.entries[i])
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|&b| u64::from(b)).sum()
    }
}

/// The simulated line: layouts, demand, headways and travel probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct LineConfig {
    pub n_stations: usize,
    pub n_cars: usize,
    pub layouts: Vec<StationLayout>,
    /// Passengers per second at each origin station `1..M-1`.
    pub arrival_rates: Vec<f64>,
    /// Seconds between trains at each origin station `1..M-1`.
    pub headways: Vec<f64>,
    /// Row `i - 1` holds `p_{i,j}` for `j = i+1..=M`.
    pub odm_probs: Vec<Vec<f64>>,
    pub committed_prob: f64,
}

impl LineConfig {
    pub fn validate(&self) -> Result<()> {
        let m = self.n_stations;
        if m < 2 {
            return Err(Error::invalid(
                "line.n_stations",
                "need at least 2 stations",
            ));
        }
        if self.n_cars == 0 {
            return Err(Error::invalid("line.n_cars", "need at least one car"));
        }
        if self.layouts.len() != m {
            return Err(Error::invalid(
                "line.stations",
                format!("expected {m} station layouts, got {}", self.layouts.len()),
            ));
        }
        for (s, layout) in self.layouts.iter().enumerate() {
            if layout.n_positions != self.n_cars {
                return Err(Error::invalid(
                    format!("line.stations[{}]", s + 1),
                    "layout position count differs from n_cars",
                ));
            }
            layout.validate(s + 1, s + 1 < m)?;
        }
        for (name, v) in [
            ("line.arrival_rates", &self.arrival_rates),
            ("line.headways", &self.headways),
        ] {
            if v.len() != m - 1 {
                return Err(Error::invalid(
                    name,
                    format!("expected {} values, got {}", m - 1, v.len()),
                ));
            }
        }
        if let Some(r) = self
            .arrival_rates
            .iter()
            .find(|r| !(r.is_finite() && **r >= 0.0))
        {
            return Err(Error::invalid(
                "line.arrival_rates",
                format!("must be >= 0, got {r}"),
            ));
        }
        for h in &self.headways {
            ensure_positive("line.headways", *h)?;
        }
        if !(0.0..=1.0).contains(&self.committed_prob) {
            return Err(Error::invalid("line.committed_prob", "must lie in [0, 1]"));
        }
        if self.odm_probs.len() != m - 1 {
            return Err(Error::invalid(
                "line.odm_probs",
                format!("expected {} rows, got {}", m - 1, self.odm_probs.len()),
            ));
        }
        for (i, row) in self.odm_probs.iter().enumerate() {
            let field = format!("line.odm_probs[{}]", i + 1);
            if row.len() != m - 1 - i {
                return Err(Error::invalid(
                    field,
                    format!("expected {} entries", m - 1 - i),
                ));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::invalid(field, "probabilities must lie in [0, 1]"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(
                    field,
                    format!("row sums to {sum}, expected 1"),
                ));
            }
        }
        Ok(())
    }

    /// Five stations, six cars. Demand, headways and travel probabilities are
    /// the simulation tables; the platform layouts other than station 4's
    /// exits (positions 2 and 4) are made up.
    pub fn five_station_default() -> Self {
        let layout = |access: &[usize], exits: &[usize]| StationLayout {
            n_positions: 6,
            access_points: access.to_vec(),
            exit_points: exits.to_vec(),
            decay: 1.0,
        };
        Self {
            n_stations: 5,
            n_cars: 6,
            layouts: vec![
                layout(&[1], &[1]),
                layout(&[3], &[3]),
                layout(&[6], &[5, 6]),
                layout(&[2, 4], &[2, 4]),
                layout(&[6], &[6]),
            ],
            arrival_rates: vec![1.5, 1.5, 1.2, 1.2],
            headways: vec![180.0, 100.0, 100.0, 120.0],
            odm_probs: vec![
                vec![0.2, 0.2, 0.3, 0.3],
                vec![0.2, 0.4, 0.4],
                vec![0.6, 0.4],
                vec![1.0],
            ],
            committed_prob: 0.3,
        }
    }

    pub fn odm_index(&self) -> OdmIndex {
        OdmIndex::new(self.n_stations)
    }

    /// Expected boardings at `origin` across all cars and destinations.
    pub fn expected_boardings(&self, origin: usize) -> f64 {
        self.arrival_rates[origin - 1] * self.headways[origin - 1]
    }

    /// Poisson rate of `b_{i,j}^k`:
    /// `lambda_i dt_i p_ij (p_i^{k,nc} (1 - p_c) + p_j^{k,c} p_c)`.
    pub fn car_level_rate(&self, origin: usize, dest: usize, car: usize) -> Result<f64> {
        let m = self.n_stations;
        if origin == 0 || origin >= dest || dest > m {
            return Err(Error::invalid(
                "station pair",
                format!("({origin}, {dest}) is not 1 <= i < j <= {m}"),
            ));
        }
        if car == 0 || car > self.n_cars {
            return Err(Error::invalid(
                "car",
                format!("{car} not in 1..={}", self.n_cars),
            ));
        }
        let nc = noncommitted_position_probs(&self.layouts[origin - 1])?[car - 1];
        let c = committed_position_probs(&self.layouts[dest - 1])[car - 1];
        Ok(self.rate_from_parts(origin, dest, nc, c))
    }

    fn rate_from_parts(&self, origin: usize, dest: usize, nc: f64, c: f64) -> f64 {
        let p_ij = self.odm_probs[origin - 1][dest - origin - 1];
        let pc = self.committed_prob;
        self.expected_boardings(origin) * p_ij * (nc * (1.0 - pc) + c * pc)
    }

    /// Rates for every flat ODM index, one vector per car (`[car - 1][idx]`).
    pub fn rate_table(&self) -> Result<Vec<Vec<f64>>> {
        let index = self.odm_index();
        let nc: Vec<Vec<f64>> = (1..self.n_stations)
            .map(|i| noncommitted_position_probs(&self.layouts[i - 1]))
            .collect::<Result<_>>()?;
        let c: Vec<Vec<f64>> = self.layouts.iter().map(committed_position_probs).collect();
        Ok((0..self.n_cars)
            .map(|k| {
                index
                    .pairs()
                    .map(|(i, j)| self.rate_from_parts(i, j, nc[i - 1][k], c[j - 1][k]))
                    .collect()
            })
            .collect())
    }
}

/// Sparse 0/1 matrix mapping flat ODM entries to on-board counts
/// `[o_2, ..., o_j]`. Row `r` (0-based) is `o_{r+2}`; it covers every
/// `(i, j')` with `i <= r + 1 < j'`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OnboardMatrix {
    n_cols: usize,
    rows: Vec<Vec<usize>>,
}

impl OnboardMatrix {
    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.n_cols
    }

    /// Column indices holding a one in `row`.
    pub fn row(&self, row: usize) -> &[usize] {
        &self.rows[row]
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        self.rows
            .iter()
            .map(|cols| {
                let mut r = vec![0u8; self.n_cols];
                for &c in cols {
                    r[c] = 1;
                }
                r
            })
            .collect()
    }

    pub fn apply(&self, b: &[u32]) -> Vec<u64> {
        self.rows
            .iter()
            .map(|cols| cols.iter().map(|&c| u64::from(b[c])).sum())
            .collect()
    }

    /// For each column, the rows that contain it.
    pub fn column_rows(&self) -> Vec<Vec<usize>> {
        let mut cols = vec![Vec::new(); self.n_cols];
        for (r, row) in self.rows.iter().enumerate() {
            for &c in row {
                cols[c].push(r);
            }
        }
        cols
    }
}

/// On-board matrix for measurements `o_2..o_j` on an `m`-station line.
/// `j = 1` gives the matrix with no rows (nothing measured yet).
pub fn build_a_matrix(j: usize, m: usize) -> Result<OnboardMatrix> {
    if j == 0 || j > m {
        return Err(Error::invalid("station", format!("{j} not in 1..={m}")));
    }
    let index = OdmIndex::new(m);
    let rows = (1..j)
        .map(|r| {
            index
                .pairs()
                .enumerate()
                .filter(|(_, (i, jp))| *i <= r && r < *jp)
                .map(|(c, _)| c)
                .collect()
        })
        .collect();
    Ok(OnboardMatrix {
        n_cols: index.len(),
        rows,
    })
}

/// Per-station counts for one car; index `s - 1` is station `s`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CarFlow {
    pub boarded: Vec<u32>,
    pub alighted: Vec<u32>,
    /// On board on arrival.
    pub onboard: Vec<u32>,
    /// Remaining after alighting.
    pub crowding: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowTrace {
    pub cars: Vec<CarFlow>,
}

/// Crowding `w_j = sum_{i<j} sum_{j'>j} b_{i,j'}` for one car.
pub fn crowding_at(odm: &CarOdm, station: usize) -> u32 {
    let m = odm.index.n_stations();
    (1..station)
        .flat_map(|i| ((station + 1)..=m).map(move |jp| (i, jp)))
        .map(|(i, jp)| odm.get(i, jp))
        .sum()
}

pub fn flow_accounting(odms: &[CarOdm]) -> FlowTrace {
    let cars = odms
        .iter()
        .map(|odm| {
            let m = odm.index.n_stations();
            let mut flow = CarFlow::default();
            for j in 1..=m {
                let boarded = ((j + 1)..=m).map(|jp| odm.get(j, jp)).sum();
                let alighted: u32 = (1..j).map(|i| odm.get(i, j)).sum();
                let onboard: u32 = (1..j)
                    .flat_map(|i| (j..=m).map(move |jp| (i, jp)))
                    .map(|(i, jp)| odm.get(i, jp))
                    .sum();
                flow.boarded.push(boarded);
                flow.alighted.push(alighted);
                flow.onboard.push(onboard);
                flow.crowding.push(onboard - alighted);
            }
            flow
        })
        .collect();
    FlowTrace { cars }
}
