//! Calendar-year half-hourly series.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const SLOTS_PER_DAY: usize = 48;
/// Length of one slot in hours.
pub const SLOT_HOURS: f64 = 0.5;

/// Zero-based day-of-year index of 28 February.
const FEB_28: usize = 58;

pub fn is_leap_year(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

pub fn days_in_year(year: i32) -> usize {
    if is_leap_year(year) {
        366
    } else {
        365
    }
}

pub fn slots_in_year(year: i32) -> usize {
    days_in_year(year) * SLOTS_PER_DAY
}

/// One calendar year of half-hourly MW values for a single quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfHourlySeries {
    year: i32,
    label: String,
    values: Vec<f64>,
}

impl HalfHourlySeries {
    pub fn new(year: i32, label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let label = label.into();
        let expected = slots_in_year(year);
        if values.len() != expected {
            return Err(Error::Integrity(format!(
                "series `{label}` for {year} has {} slots, expected {expected}",
                values.len()
            )));
        }
        Ok(Self {
            year,
            label,
            values,
        })
    }

    pub fn zeros(year: i32, label: impl Into<String>) -> Self {
        Self {
            year,
            label: label.into(),
            values: vec![0.0; slots_in_year(year)],
        }
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn days(&self) -> usize {
        self.values.len() / SLOTS_PER_DAY
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Annual energy in MWh.
    pub fn energy_mwh(&self) -> f64 {
        energy_mwh(&self.values)
    }

    pub fn energy_twh(&self) -> f64 {
        self.energy_mwh() * 1e-6
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            year: self.year,
            label: self.label.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Re-express this series in another calendar year, matching days by
    /// day-of-year. 29 February is dropped, or synthesized as a copy of
    /// 28 February, as the two calendars require.
    pub fn map_to_year(&self, year: i32) -> Self {
        Self {
            year,
            label: self.label.clone(),
            values: remap_days(&self.values, days_in_year(year)),
        }
    }
}

pub fn energy_mwh(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() * SLOT_HOURS
}

/// Day-of-year remapping between 365- and 366-day calendars.
pub fn remap_days(values: &[f64], to_days: usize) -> Vec<f64> {
    let from_days = values.len() / SLOTS_PER_DAY;
    match (from_days, to_days) {
        (a, b) if a == b => values.to_vec(),
        (365, 366) => {
            let split = (FEB_28 + 1) * SLOTS_PER_DAY;
            let mut out = Vec::with_capacity(to_days * SLOTS_PER_DAY);
            out.extend_from_slice(&values[..split]);
            out.extend_from_slice(&values[FEB_28 * SLOTS_PER_DAY..split]);
            out.extend_from_slice(&values[split..]);
            out
        }
        (366, 365) => {
            let feb29 = (FEB_28 + 1) * SLOTS_PER_DAY;
            let mut out = Vec::with_capacity(to_days * SLOTS_PER_DAY);
            out.extend_from_slice(&values[..feb29]);
            out.extend_from_slice(&values[feb29 + SLOTS_PER_DAY..]);
            out
        }
        (a, b) => panic!("cannot remap a {a}-day series onto {b} days"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leap_years() {
        assert!(is_leap_year(2024));
        assert!(is_leap_year(2000));
        assert!(!is_leap_year(1900));
        assert!(!is_leap_year(2019));
        assert_eq!(slots_in_year(2019), 17_520);
        assert_eq!(slots_in_year(2028), 17_568);
    }

    #[test]
    fn rejects_wrong_length() {
        assert!(HalfHourlySeries::new(2019, "x", vec![0.0; 100]).is_err());
    }

    #[test]
    fn map_to_leap_duplicates_feb_28() {
        let values: Vec<f64> = (0..slots_in_year(2019)).map(|i| (i / 48) as f64).collect();
        let s = HalfHourlySeries::new(2019, "day", values).unwrap();
        let leap = s.map_to_year(2024);
        assert_eq!(leap.len(), 17_568);
        assert_eq!(leap.values()[58 * 48], 58.0);
        assert_eq!(leap.values()[59 * 48], 58.0);
        assert_eq!(leap.values()[60 * 48], 59.0);
        assert_eq!(*leap.values().last().unwrap(), 364.0);

        let back = leap.map_to_year(2019);
        assert_eq!(back.values(), s.values());
    }

    #[test]
    fn energy_is_half_hour_weighted() {
        let s = HalfHourlySeries::new(2019, "flat", vec![2.0; 17_520]).unwrap();
        assert_eq!(s.energy_mwh(), 17_520.0);
    }
}
