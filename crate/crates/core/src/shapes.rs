//! Base-year shape curves: CSV loading, gap cleaning, RE correction, per-MW
//! solar/wind shapes and a deterministic synthetic year for tests and demos.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::series::{days_in_year, energy_mwh, slots_in_year, SLOTS_PER_DAY};
use crate::{Error, HalfHourlySeries, Result};

pub const TIMESERIES_HEADER: [&str; 7] = [
    "timestamp",
    "demand_mw",
    "coal_mw",
    "gas_mw",
    "hydro_mw",
    "nuclear_mw",
    "re_mw",
];

pub const SHAPE_HEADER: [&str; 2] = ["slot", "fraction"];

/// Share of whole missing rows above which a file is rejected.
pub const MAX_MISSING_ROW_SHARE: f64 = 0.05;

/// Default linear-interpolation limit for gaps, in slots.
pub const DEFAULT_MAX_GAP_SLOTS: usize = 4;

/// Default per-slot tolerance for the supply-vs-demand residual diagnostic.
pub const DEFAULT_RESIDUAL_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fuel {
    Coal,
    Gas,
    Hydro,
    Nuclear,
    Re,
}

impl Fuel {
    pub const ALL: [Fuel; 5] = [Fuel::Coal, Fuel::Gas, Fuel::Hydro, Fuel::Nuclear, Fuel::Re];

    pub fn as_str(self) -> &'static str {
        match self {
            Fuel::Coal => "coal",
            Fuel::Gas => "gas",
            Fuel::Hydro => "hydro",
            Fuel::Nuclear => "nuclear",
            Fuel::Re => "re",
        }
    }
}

impl fmt::Display for Fuel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A column of the base-year input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    Demand,
    Supply(Fuel),
}

impl Column {
    pub const ALL: [Column; 6] = [
        Column::Demand,
        Column::Supply(Fuel::Coal),
        Column::Supply(Fuel::Gas),
        Column::Supply(Fuel::Hydro),
        Column::Supply(Fuel::Nuclear),
        Column::Supply(Fuel::Re),
    ];
}

/// A run of consecutive slots that had no value in the source data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub start: usize,
    pub len: usize,
    pub columns: Vec<Column>,
}

/// Demand and fuel-wise supply for the base year.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseYearData {
    pub demand: HalfHourlySeries,
    pub supply: BTreeMap<Fuel, HalfHourlySeries>,
    /// Multiplier applied to the RE series by [`clean_series`]; 1.0 until then.
    pub re_correction_factor: f64,
    /// Gaps found on load. Cleaning fills them but keeps the record.
    pub gaps: Vec<Gap>,
}

/// Per-slot mismatch between summed supply and demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_relative: f64,
    pub slots_over_tolerance: usize,
}

impl BaseYearData {
    pub fn year(&self) -> i32 {
        self.demand.year()
    }

    pub fn len(&self) -> usize {
        self.demand.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demand.is_empty()
    }

    pub fn fuel(&self, fuel: Fuel) -> &HalfHourlySeries {
        &self.supply[&fuel]
    }

    pub fn column(&self, column: Column) -> &HalfHourlySeries {
        match column {
            Column::Demand => &self.demand,
            Column::Supply(fuel) => &self.supply[&fuel],
        }
    }

    fn column_mut(&mut self, column: Column) -> &mut HalfHourlySeries {
        match column {
            Column::Demand => &mut self.demand,
            Column::Supply(fuel) => self.supply.get_mut(&fuel).expect("all fuels present"),
        }
    }

    /// True when every value is finite and non-negative.
    pub fn is_clean(&self) -> bool {
        Column::ALL
            .iter()
            .all(|&c| self.column(c).values().iter().all(|v| v.is_finite() && *v >= 0.0))
    }

    pub fn supply_residual(&self, tolerance: f64) -> ResidualReport {
        let mut report = ResidualReport {
            max_relative: 0.0,
            slots_over_tolerance: 0,
        };
        for slot in 0..self.len() {
            let demand = self.demand.values()[slot];
            let supplied: f64 = self.supply.values().map(|s| s.values()[slot]).sum();
            let rel = if demand > 0.0 {
                (supplied - demand).abs() / demand
            } else if supplied > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            report.max_relative = report.max_relative.max(rel);
            if rel > tolerance {
                report.slots_over_tolerance += 1;
            }
        }
        report
    }

    fn validate_shapes(&self) -> Result<()> {
        for (fuel, s) in &self.supply {
            if s.year() != self.year() || s.len() != self.len() {
                return Err(Error::Integrity(format!(
                    "{fuel} series does not match the demand year/length"
                )));
            }
        }
        if self.supply.len() != Fuel::ALL.len() {
            return Err(Error::Integrity("base-year data must carry all five fuels".into()));
        }
        Ok(())
    }
}

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    const FORMATS: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
    ];
    let raw = raw.trim();
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
        .or_else(|| DateTime::parse_from_rfc3339(raw).ok().map(|dt| dt.naive_local()))
}

/// Calendar year of the first data row of a base-year CSV.
pub fn infer_timeseries_year(path: impl AsRef<Path>) -> Result<i32> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let record = reader.records().next().ok_or_else(|| Error::Parse {
        path: path.into(),
        line: 2,
        message: "no data rows".into(),
    })??;
    parse_timestamp(&record[0]).map(|ts| ts.year()).ok_or_else(|| Error::Parse {
        path: path.into(),
        line: record.position().map_or(2, |p| p.line()),
        message: format!("unparseable timestamp `{}`", &record[0]),
    })
}

/// Read the base-year CSV. Values are kept raw; missing rows and empty cells
/// become NaN and are recorded in [`BaseYearData::gaps`].
pub fn load_timeseries_csv(path: impl AsRef<Path>, year: i32) -> Result<BaseYearData> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header = reader.headers()?.clone();
    if header.iter().ne(TIMESERIES_HEADER.iter().copied()) {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            message: format!("expected header `{}`", TIMESERIES_HEADER.join(",")),
        });
    }

    let n = slots_in_year(year);
    let origin = NaiveDate::from_ymd_opt(year, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .ok_or_else(|| Error::Parameter(format!("invalid year {year}")))?;
    let mut columns = vec![vec![f64::NAN; n]; Column::ALL.len()];
    let mut row_seen = vec![false; n];
    let mut previous: Option<usize> = None;

    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let parse_err = |message: String| Error::Parse {
            path: path.into(),
            line,
            message,
        };
        let cadence_err = |message: String| Error::Cadence {
            path: path.into(),
            line,
            message,
        };
        if record.len() != TIMESERIES_HEADER.len() {
            return Err(parse_err(format!(
                "expected {} fields, found {}",
                TIMESERIES_HEADER.len(),
                record.len()
            )));
        }
        let ts = parse_timestamp(&record[0])
            .ok_or_else(|| parse_err(format!("unparseable timestamp `{}`", &record[0])))?;
        let minutes = (ts - origin).num_minutes();
        if minutes < 0 || minutes % 30 != 0 || (ts - origin).num_seconds() % 60 != 0 {
            return Err(cadence_err(format!("{ts} is not on the 30-minute grid of {year}")));
        }
        let slot = (minutes / 30) as usize;
        if slot >= n {
            return Err(cadence_err(format!("{ts} lies outside {year}")));
        }
        if previous.is_some_and(|p| slot <= p) {
            return Err(cadence_err(format!("{ts} is not strictly after the previous row")));
        }
        previous = Some(slot);
        row_seen[slot] = true;

        for (c, cell) in record.iter().skip(1).enumerate() {
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(format!("`{cell}` in {} is not a number", TIMESERIES_HEADER[c + 1])))?;
            if !v.is_finite() || v < 0.0 {
                return Err(parse_err(format!(
                    "{} must be a finite non-negative MW value, got {v}",
                    TIMESERIES_HEADER[c + 1]
                )));
            }
            columns[c][slot] = v;
        }
    }

    let missing_rows = row_seen.iter().filter(|s| !**s).count();
    if missing_rows as f64 > MAX_MISSING_ROW_SHARE * n as f64 {
        return Err(Error::Integrity(format!(
            "{}: {missing_rows} of {n} rows missing (limit {:.0}%)",
            path.display(),
            MAX_MISSING_ROW_SHARE * 100.0
        )));
    }

    let gaps = find_gaps(&columns);
    let mut it = columns.into_iter();
    let demand = HalfHourlySeries::new(year, "demand", it.next().unwrap())?;
    let supply = Fuel::ALL
        .iter()
        .zip(it)
        .map(|(&fuel, values)| Ok((fuel, HalfHourlySeries::new(year, fuel.as_str(), values)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(BaseYearData {
        demand,
        supply,
        re_correction_factor: 1.0,
        gaps,
    })
}

/// Run-length encode missing cells; consecutive slots with the same set of
/// missing columns form one gap.
fn find_gaps(columns: &[Vec<f64>]) -> Vec<Gap> {
    let n = columns[0].len();
    let mask_at = |slot: usize| -> u8 {
        columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c[slot].is_nan())
            .fold(0u8, |m, (i, _)| m | (1 << i))
    };
    let mut gaps = Vec::new();
    let mut slot = 0;
    while slot < n {
        let mask = mask_at(slot);
        if mask == 0 {
            slot += 1;
            continue;
        }
        let start = slot;
        while slot < n && mask_at(slot) == mask {
            slot += 1;
        }
        gaps.push(Gap {
            start,
            len: slot - start,
            columns: Column::ALL
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &c)| c)
                .collect(),
        });
    }
    gaps
}

pub fn write_timeseries_csv(path: impl AsRef<Path>, data: &BaseYearData) -> Result<()> {
    let origin = NaiveDate::from_ymd_opt(data.year(), 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .ok_or_else(|| Error::Parameter(format!("invalid year {}", data.year())))?;
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(TIMESERIES_HEADER)?;
    for slot in 0..data.len() {
        let ts = origin + chrono::Duration::minutes(30 * slot as i64);
        let mut row = vec![ts.format("%Y-%m-%dT%H:%M:%S").to_string()];
        row.extend(Column::ALL.iter().map(|&c| {
            let v = data.column(c).values()[slot];
            if v.is_nan() {
                String::new()
            } else {
                v.to_string()
            }
        }));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Fill gaps and apply the proportional RE correction.
///
/// Gaps of at most `max_gap_slots` bounded on both sides are linearly
/// interpolated. Longer gaps, and gaps touching either end of the year, copy
/// the same slot from the nearest day that has a value there (earlier day
/// wins ties). The RE series is then multiplied by a single factor so that
/// its annual energy equals `re_annual_target_gwh`.
pub fn clean_series(
    raw: BaseYearData,
    max_gap_slots: usize,
    re_annual_target_gwh: f64,
) -> Result<BaseYearData> {
    if max_gap_slots < 1 {
        return Err(Error::Parameter("max_gap_slots must be at least 1".into()));
    }
    if !(re_annual_target_gwh > 0.0) {
        return Err(Error::Parameter(format!(
            "RE annual target must be positive, got {re_annual_target_gwh} GWh"
        )));
    }
    let mut raw = fill_all_gaps(raw, max_gap_slots)?;
    let re = raw.supply.get_mut(&Fuel::Re).expect("RE present");
    let current_gwh = re.energy_mwh() * 1e-3;
    if !(current_gwh > 0.0) {
        return Err(Error::Integrity("RE series has no energy to correct".into()));
    }
    let factor = re_annual_target_gwh / current_gwh;
    if factor != 1.0 {
        re.values_mut().iter_mut().for_each(|v| *v *= factor);
    }
    raw.re_correction_factor *= factor;
    Ok(raw)
}

/// Gap filling of [`clean_series`] without the RE correction.
pub fn fill_all_gaps(mut raw: BaseYearData, max_gap_slots: usize) -> Result<BaseYearData> {
    if max_gap_slots < 1 {
        return Err(Error::Parameter("max_gap_slots must be at least 1".into()));
    }
    raw.validate_shapes()?;
    for column in Column::ALL {
        let series = raw.column_mut(column);
        fill_gaps(series.values_mut(), max_gap_slots)
            .map_err(|m| Error::Integrity(format!("{}: {m}", series.label())))?;
    }
    Ok(raw)
}

fn fill_gaps(values: &mut [f64], max_gap_slots: usize) -> std::result::Result<(), String> {
    let n = values.len();
    let original = values.to_vec();
    let days = n / SLOTS_PER_DAY;
    let mut slot = 0;
    while slot < n {
        if !original[slot].is_nan() {
            slot += 1;
            continue;
        }
        let start = slot;
        while slot < n && original[slot].is_nan() {
            slot += 1;
        }
        let len = slot - start;
        if len <= max_gap_slots && start > 0 && slot < n {
            let left = original[start - 1];
            let right = original[slot];
            for k in 0..len {
                values[start + k] = left + (right - left) * (k + 1) as f64 / (len + 1) as f64;
            }
            continue;
        }
        for i in start..slot {
            let (day, s) = (i / SLOTS_PER_DAY, i % SLOTS_PER_DAY);
            let donor = (1..days)
                .flat_map(|k| [day.checked_sub(k), Some(day + k).filter(|d| *d < days)])
                .flatten()
                .map(|d| original[d * SLOTS_PER_DAY + s])
                .find(|v| !v.is_nan())
                .ok_or_else(|| format!("slot {s} has no value on any day"))?;
            values[i] = donor;
        }
    }
    Ok(())
}

/// A dimensionless per-MW output profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerMwShape {
    values: Vec<f64>,
    achieved_cuf: f64,
}

impl PerMwShape {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DegenerateShape("empty shape".into()));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::DegenerateShape(format!(
                "slot {i} has fraction {v} outside [0, 1]"
            )));
        }
        let achieved_cuf = values.iter().sum::<f64>() / values.len() as f64;
        Ok(Self {
            values,
            achieved_cuf,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn achieved_cuf(&self) -> f64 {
        self.achieved_cuf
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// MW output of `capacity_mw` of plant following this shape.
    pub fn output_mw(&self, capacity_mw: f64) -> Vec<f64> {
        self.values.iter().map(|f| f * capacity_mw).collect()
    }

    /// Re-express for another calendar year (see [`HalfHourlySeries::map_to_year`]).
    pub fn map_to_year(&self, year: i32) -> Self {
        let values = crate::series::remap_days(&self.values, days_in_year(year));
        let achieved_cuf = values.iter().sum::<f64>() / values.len() as f64;
        Self {
            values,
            achieved_cuf,
        }
    }
}

pub fn load_shape_csv(path: impl AsRef<Path>) -> Result<PerMwShape> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    if reader.headers()?.iter().ne(SHAPE_HEADER.iter().copied()) {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            message: format!("expected header `{}`", SHAPE_HEADER.join(",")),
        });
    }
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let err = |message: String| Error::Parse {
            path: path.into(),
            line,
            message,
        };
        let slot: usize = record
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err("bad slot index".into()))?;
        if slot != values.len() {
            return Err(err(format!("expected slot {}, found {slot}", values.len())));
        }
        let f: f64 = record
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err("bad fraction".into()))?;
        if !(0.0..=1.0).contains(&f) {
            return Err(err(format!("fraction {f} outside [0, 1]")));
        }
        values.push(f);
    }
    if values.len() % SLOTS_PER_DAY != 0 || !(365..=366).contains(&(values.len() / SLOTS_PER_DAY)) {
        return Err(Error::Integrity(format!(
            "{}: shape has {} slots, expected a full year",
            path.display(),
            values.len()
        )));
    }
    PerMwShape::new(values)
}

pub fn write_shape_csv(path: impl AsRef<Path>, shape: &PerMwShape) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(SHAPE_HEADER)?;
    for (slot, f) in shape.values().iter().enumerate() {
        writer.write_record([slot.to_string(), f.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

const CUF_TOLERANCE: f64 = 1e-6;
const CUF_MAX_ITERATIONS: usize = 100;

/// Scale a per-MW shape to a target capacity utilization factor.
///
/// Each pass scales, clips at 1.0 and re-measures. The scale for the next
/// pass is solved exactly on the current clipped set, so the iteration
/// approaches the target monotonically from below and stops once no new
/// slot clips. Clipping flattens the peak.
pub fn rescale_to_cuf(shape: &PerMwShape, target_cuf: f64) -> Result<PerMwShape> {
    if !(target_cuf > 0.0 && target_cuf < 1.0) {
        return Err(Error::Parameter(format!("target CUF {target_cuf} not in (0, 1)")));
    }
    let mean = shape.achieved_cuf();
    if !(mean > 0.0) {
        return Err(Error::DegenerateShape("shape has zero mean".into()));
    }
    if (mean - target_cuf).abs() <= CUF_TOLERANCE {
        return Ok(shape.clone());
    }
    let n = shape.len() as f64;
    let ceiling = shape.values().iter().filter(|v| **v > 0.0).count() as f64 / n;
    if target_cuf > ceiling {
        return Err(Error::UnreachableCuf {
            target: target_cuf,
            ceiling,
        });
    }

    let mut scale = target_cuf / mean;
    for _ in 0..CUF_MAX_ITERATIONS {
        let (clipped, unclipped_sum) = shape.values().iter().fold((0usize, 0.0), |(c, s), v| {
            if v * scale >= 1.0 {
                (c + 1, s)
            } else {
                (c, s + v)
            }
        });
        let achieved = (scale * unclipped_sum + clipped as f64) / n;
        if (achieved - target_cuf).abs() <= 1e-12 || unclipped_sum == 0.0 {
            break;
        }
        let next = (target_cuf * n - clipped as f64) / unclipped_sum;
        if next == scale {
            break;
        }
        scale = next;
    }
    let out = PerMwShape::new(shape.values().iter().map(|v| (v * scale).min(1.0)).collect())?;
    if (out.achieved_cuf() - target_cuf).abs() > CUF_TOLERANCE {
        return Err(Error::UnreachableCuf {
            target: target_cuf,
            ceiling,
        });
    }
    Ok(out)
}

/// Per-MW wind shape from aggregate RE minus the solar share.
///
/// `max(0, re - solar_capacity * solar)` is normalized by its peak (the
/// implied wind capacity) and rescaled to `wind_cuf`.
pub fn derive_wind_shape(
    re: &HalfHourlySeries,
    solar: &PerMwShape,
    solar_capacity_mw: f64,
    wind_cuf: f64,
) -> Result<PerMwShape> {
    if !(solar_capacity_mw >= 0.0) {
        return Err(Error::Parameter(format!(
            "solar capacity must be non-negative, got {solar_capacity_mw}"
        )));
    }
    if solar.len() != re.len() {
        return Err(Error::Integrity(format!(
            "solar shape has {} slots but RE series has {}",
            solar.len(),
            re.len()
        )));
    }
    let residual: Vec<f64> = re
        .values()
        .iter()
        .zip(solar.values())
        .map(|(r, s)| (r - solar_capacity_mw * s).max(0.0))
        .collect();
    let peak = residual.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::DegenerateShape(
            "RE minus solar is zero in every slot".into(),
        ));
    }
    let normalized = PerMwShape::new(residual.into_iter().map(|v| v / peak).collect())?;
    rescale_to_cuf(&normalized, wind_cuf)
}

/// Calendar year of the synthetic base data.
pub const SYNTH_YEAR: i32 = 2019;
/// Annual demand the synthetic year is calibrated to.
pub const SYNTH_DEMAND_TWH: f64 = 1360.0;
/// Installed solar and wind behind the synthetic RE series.
pub const SYNTH_SOLAR_MW: f64 = 36_000.0;
pub const SYNTH_WIND_MW: f64 = 38_000.0;
const SYNTH_HYDRO_MW: f64 = 35_500.0;
const SYNTH_NUCLEAR_MW: f64 = 5_400.0;
const SYNTH_COAL_MW: f64 = 162_600.0;
const SYNTH_GAS_MW: f64 = 21_300.0;

#[derive(Clone, Copy)]
enum Stream {
    Demand = 1,
    Solar = 2,
    Wind = 3,
    Hydro = 4,
    Nuclear = 5,
    Gas = 6,
}

fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Circular Gaussian bump on the 24-hour clock.
fn bump(hour: f64, center: f64, width: f64) -> f64 {
    let mut d = (hour - center).abs();
    if d > 12.0 {
        d = 24.0 - d;
    }
    (-0.5 * (d / width).powi(2)).exp()
}

fn monsoon(day: usize, center: f64, width: f64) -> f64 {
    (-((day as f64 - center) / width).powi(2)).exp()
}

fn slot_hour(slot: usize) -> f64 {
    (slot % SLOTS_PER_DAY) as f64 * 0.5 + 0.25
}

/// Daily AR(1) factor around 1.0.
fn daily_ar1(rng: &mut ChaCha8Rng, days: usize, rho: f64, amp: f64) -> Vec<f64> {
    let mut x = 0.0;
    (0..days)
        .map(|_| {
            x = rho * x + (1.0 - rho * rho).sqrt() * rng.random_range(-1.0..1.0);
            1.0 + amp * x
        })
        .collect()
}

/// Historical (base-year) per-MW solar output for the synthetic year.
pub fn synth_solar_shape(seed: u64) -> PerMwShape {
    let days = days_in_year(SYNTH_YEAR);
    let mut rng = stream_rng(seed, Stream::Solar);
    let cloud = daily_ar1(&mut rng, days, 0.6, 0.35);
    let values = (0..days * SLOTS_PER_DAY)
        .map(|i| {
            let day = i / SLOTS_PER_DAY;
            let h = slot_hour(i);
            let season = (2.0 * PI * (day as f64 - 172.0) / 365.0).cos();
            let (rise, set) = (6.2 - 0.5 * season, 18.2 + 0.5 * season);
            if h <= rise || h >= set {
                return 0.0;
            }
            let amp = 0.84 * (1.0 - 0.3 * monsoon(day, 200.0, 40.0)) * cloud[day].clamp(0.45, 1.15);
            let jitter = 1.0 + 0.03 * rng.random_range(-1.0..1.0);
            (amp * jitter * (PI * (h - rise) / (set - rise)).sin()).clamp(0.0, 1.0)
        })
        .collect();
    PerMwShape::new(values).expect("synthetic solar within [0, 1]")
}

fn synth_wind_shape(seed: u64) -> Vec<f64> {
    let days = days_in_year(SYNTH_YEAR);
    let mut rng = stream_rng(seed, Stream::Wind);
    let weather = daily_ar1(&mut rng, days, 0.8, 0.45);
    (0..days * SLOTS_PER_DAY)
        .map(|i| {
            let day = i / SLOTS_PER_DAY;
            let h = slot_hour(i);
            let seasonal = 0.08 + 0.5 * monsoon(day, 190.0, 50.0);
            let diurnal = 1.0 + 0.3 * (2.0 * PI * (h - 14.0) / 24.0).sin();
            let jitter = 1.0 + 0.05 * rng.random_range(-1.0..1.0);
            (seasonal * diurnal * weather[day].max(0.1) * jitter).clamp(0.0, 1.0)
        })
        .collect()
}

/// Deterministic synthetic base year.
///
/// Demand is bimodal within the day (morning and a higher evening peak) with
/// a pre-monsoon seasonal high, calibrated to [`SYNTH_DEMAND_TWH`];
/// `peakiness` scales every deviation from the flat mean, so 0 gives flat
/// demand. Wind peaks in the monsoon, solar is diurnal, hydro follows the
/// monsoon with an evening peaking cycle, and coal closes the balance.
pub fn synth_shapes(seed: u64, peakiness: f64) -> BaseYearData {
    assert!(peakiness >= 0.0, "peakiness must be non-negative");
    let year = SYNTH_YEAR;
    let days = days_in_year(year);
    let n = days * SLOTS_PER_DAY;

    let mut rng = stream_rng(seed, Stream::Demand);
    let weather = daily_ar1(&mut rng, days, 0.7, 0.03);
    let profile = |h: f64| 0.06 * bump(h, 10.5, 2.0) + 0.12 * bump(h, 19.5, 1.5) - 0.12 * bump(h, 3.5, 2.5);
    let profile_mean = (0..SLOTS_PER_DAY).map(|s| profile(slot_hour(s))).sum::<f64>() / SLOTS_PER_DAY as f64;
    let mut demand: Vec<f64> = (0..n)
        .map(|i| {
            let day = i / SLOTS_PER_DAY;
            let seasonal = 0.06 * (2.0 * PI * (day as f64 - 140.0) / 365.0).cos()
                - 0.04 * monsoon(day, 215.0, 35.0);
            let deviation = profile(slot_hour(i)) - profile_mean
                + seasonal
                + (weather[day] - 1.0)
                + 0.004 * rng.random_range(-1.0..1.0);
            (1.0 + peakiness * deviation).max(0.0)
        })
        .collect();
    let target_mwh = SYNTH_DEMAND_TWH * 1e6;
    let scale = target_mwh / energy_mwh(&demand);
    demand.iter_mut().for_each(|v| *v *= scale);

    let solar = synth_solar_shape(seed);
    let wind = synth_wind_shape(seed);
    let re: Vec<f64> = solar
        .values()
        .iter()
        .zip(&wind)
        .map(|(s, w)| SYNTH_SOLAR_MW * s + SYNTH_WIND_MW * w)
        .collect();

    let mut rng = stream_rng(seed, Stream::Hydro);
    let hydro_daily = daily_ar1(&mut rng, days, 0.9, 0.1);
    let hydro: Vec<f64> = (0..n)
        .map(|i| {
            let day = i / SLOTS_PER_DAY;
            let h = slot_hour(i);
            let level = 0.3 + 0.4 * monsoon(day, 215.0, 45.0);
            let cycle = 0.85 + 0.35 * bump(h, 19.5, 1.8) + 0.1 * bump(h, 9.0, 1.5);
            (SYNTH_HYDRO_MW * level * cycle * hydro_daily[day]).clamp(0.0, 0.95 * SYNTH_HYDRO_MW)
        })
        .collect();

    let mut rng = stream_rng(seed, Stream::Nuclear);
    let nuclear_daily = daily_ar1(&mut rng, days, 0.95, 0.05);
    let nuclear: Vec<f64> = (0..n)
        .map(|i| (SYNTH_NUCLEAR_MW * 0.8 * nuclear_daily[i / SLOTS_PER_DAY]).min(SYNTH_NUCLEAR_MW))
        .collect();

    let mut rng = stream_rng(seed, Stream::Gas);
    let mut gas: Vec<f64> = (0..n)
        .map(|i| 3_500.0 + 3_000.0 * bump(slot_hour(i), 19.5, 2.0) + 400.0 * rng.random_range(-1.0..1.0))
        .collect();

    let coal_cap = 0.97 * SYNTH_COAL_MW;
    let coal: Vec<f64> = (0..n)
        .map(|i| {
            let residual = demand[i] - re[i] - hydro[i] - nuclear[i] - gas[i];
            if residual > coal_cap {
                gas[i] = (gas[i] + residual - coal_cap).min(SYNTH_GAS_MW);
            }
            residual.clamp(0.0, coal_cap)
        })
        .collect();

    let series = |label: &str, v: Vec<f64>| HalfHourlySeries::new(year, label, v).expect("full year");
    let supply = BTreeMap::from([
        (Fuel::Coal, series("coal", coal)),
        (Fuel::Gas, series("gas", gas)),
        (Fuel::Hydro, series("hydro", hydro)),
        (Fuel::Nuclear, series("nuclear", nuclear)),
        (Fuel::Re, series("re", re)),
    ]);
    BaseYearData {
        demand: series("demand", demand),
        supply,
        re_correction_factor: 1.0,
        gaps: Vec::new(),
    }
}
