//! Scenario parameters, parameter grids and per-year capacity trajectories.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::series::slots_in_year;
use crate::shapes::{derive_wind_shape, rescale_to_cuf, BaseYearData, Fuel, PerMwShape};
use crate::{horizon, Error, HalfHourlySeries, Result, FIRST_YEAR, LAST_YEAR};

/// Which technology serves the demand the existing fleet cannot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NewOption {
    Coal,
    Ocgt,
    Ccgt,
    GasIc,
    DieselGen,
    BatteryRe,
}

impl NewOption {
    pub const ALL: [NewOption; 6] = [
        NewOption::Coal,
        NewOption::Ocgt,
        NewOption::Ccgt,
        NewOption::GasIc,
        NewOption::DieselGen,
        NewOption::BatteryRe,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NewOption::Coal => "coal",
            NewOption::Ocgt => "ocgt",
            NewOption::Ccgt => "ccgt",
            NewOption::GasIc => "gas_ic",
            NewOption::DieselGen => "diesel_gen",
            NewOption::BatteryRe => "battery_re",
        }
    }

    pub fn is_thermal(self) -> bool {
        self != NewOption::BatteryRe
    }
}

impl std::fmt::Display for NewOption {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the round-trip battery loss is split between charging and discharging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EfficiencySplit {
    /// `sqrt(roundtrip)` on each side.
    Symmetric,
    /// The whole loss on the charging side.
    AllOnCharge,
}

/// Fuel family used for escalation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FuelFamily {
    Coal,
    Gas,
    Diesel,
}

/// Cost and performance of a thermal NEW option.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalSpec {
    pub life_years: u32,
    /// Rs/MW in 2021.
    pub capex_2021: f64,
    pub capex_escalation: f64,
    pub aux: f64,
    /// Rs/kWh in 2021.
    pub fuel_2021: f64,
    pub fuel: FuelFamily,
    /// Annual O&M as a fraction of capex.
    pub om_rate: f64,
}

/// One fully resolved parameter point. Units: capacities in GW, capex in
/// Rs/MW, O&M in Rs/MW/yr, fuel prices in Rs/kWh of generation, rates as
/// fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    pub demand_growth: f64,
    pub flex_limit: f64,
    pub re_2030: f64,
    pub solar_share: f64,

    pub re_2021_gw: f64,
    pub hydro_2021_gw: f64,
    pub gas_2021_gw: f64,
    pub nuclear_2021_gw: f64,
    pub coal_2021_gw: f64,
    pub hydro_growth: f64,
    pub nuclear_growth: f64,
    pub coal_retirement_2030: f64,
    pub fgd_penalty: f64,
    /// Last year with no FGD penalty; the penalty ramps linearly to full by `fgd_full_year`.
    pub fgd_start_year: i32,
    pub fgd_full_year: i32,
    /// Fraction of coal capacity held out for maintenance.
    pub coal_maintenance_derate: f64,
    /// Non-solar/wind RE, held flat at `other_re_plf`.
    pub other_re_gw: f64,
    pub other_re_plf: f64,

    pub solar_cuf: f64,
    pub wind_cuf: f64,
    pub solar_kwh_per_kw_day: f64,
    pub base_solar_gw: f64,
    /// Annual RE energy the base-year RE series is corrected to, if any.
    pub base_re_energy_gwh: Option<f64>,
    pub max_gap_slots: usize,
    pub residual_tolerance: f64,

    pub solar_capex_2021: f64,
    pub solar_capex_change: f64,
    pub wind_capex_2021: f64,
    pub wind_capex_2030: f64,
    pub solar_om: f64,
    pub wind_om: f64,
    pub om_inflation: f64,
    pub re_life_years: u32,

    pub forex_escalation: f64,
    pub inr_per_usd: f64,
    /// USD/kWh of cells.
    pub battery_price_2021: f64,
    pub battery_learning_rate: f64,
    /// Rs/kW.
    pub inverter_capex: f64,
    pub battery_life_years: u32,
    pub inverter_life_years: u32,
    pub battery_om_rate: f64,
    pub dod_buffer: f64,
    pub roundtrip_eff: f64,
    pub efficiency_split: EfficiencySplit,
    pub battery_size_fraction: f64,
    pub dedicated_solar_extra: f64,
    /// Slot index (0–47) at which a daily battery cycle begins.
    pub cycle_boundary_slot: usize,

    pub discount_rate: f64,
    pub wacc: f64,
    pub full_life_annuities: bool,

    pub fuel_price_coal_2019: f64,
    pub fuel_price_coal_slack: f64,
    pub fuel_price_gas_2019: f64,
    pub fuel_price_gas_nonapm: f64,
    pub fuel_escalation_coal: f64,
    pub fuel_escalation_gas: f64,
    pub fuel_escalation_diesel: f64,

    pub aux_coal: f64,
    pub aux_gas: f64,
    pub aux_hydro: f64,
    pub aux_nuclear: f64,
    pub aux_re: f64,

    pub ists_losses: f64,
    pub grid_buffer: f64,

    pub new_option: NewOption,
    pub new_coal_size_fraction: f64,

    pub newcoal_life_years: u32,
    pub newcoal_capex_2021: f64,
    pub newcoal_capex_escalation: f64,
    pub newcoal_aux: f64,
    pub newcoal_fuel_2021: f64,
    pub ocgt_life_years: u32,
    pub ocgt_capex_2021: f64,
    pub ocgt_capex_escalation: f64,
    pub ocgt_aux: f64,
    pub ocgt_fuel_2021: f64,
    pub ccgt_life_years: u32,
    pub ccgt_capex_2021: f64,
    pub ccgt_capex_escalation: f64,
    pub ccgt_aux: f64,
    pub ccgt_fuel_2021: f64,
    pub gasic_life_years: u32,
    pub gasic_capex_2021: f64,
    pub gasic_capex_escalation: f64,
    pub gasic_aux: f64,
    pub gasic_fuel_2021: f64,
    pub diesel_life_years: u32,
    pub diesel_capex_2021: f64,
    pub diesel_capex_escalation: f64,
    pub diesel_aux: f64,
    pub diesel_fuel_2021: f64,
    pub thermal_om_rate: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            demand_growth: 0.0525,
            flex_limit: 0.60,
            re_2030: 450.0,
            solar_share: 8.0 / 12.0,

            re_2021_gw: 98.0,
            hydro_2021_gw: 35.5,
            gas_2021_gw: 21.3,
            nuclear_2021_gw: 5.4,
            coal_2021_gw: 162.6,
            hydro_growth: 0.03,
            nuclear_growth: 0.039,
            coal_retirement_2030: 20.0,
            fgd_penalty: 0.025,
            fgd_start_year: 2022,
            fgd_full_year: 2027,
            coal_maintenance_derate: 0.0,
            other_re_gw: 0.0,
            other_re_plf: 0.198,

            solar_cuf: 0.27,
            wind_cuf: 0.35,
            solar_kwh_per_kw_day: 5.85,
            base_solar_gw: 36.0,
            base_re_energy_gwh: None,
            max_gap_slots: crate::shapes::DEFAULT_MAX_GAP_SLOTS,
            residual_tolerance: crate::shapes::DEFAULT_RESIDUAL_TOLERANCE,

            solar_capex_2021: 43_000_000.0,
            solar_capex_change: -0.02,
            wind_capex_2021: 75_000_000.0,
            wind_capex_2030: 70_500_000.0,
            solar_om: 600_000.0,
            wind_om: 500_000.0,
            om_inflation: 0.04,
            re_life_years: 25,

            forex_escalation: 0.03,
            inr_per_usd: 73.65,
            battery_price_2021: 175.0,
            battery_learning_rate: 0.07,
            inverter_capex: 7_500.0,
            battery_life_years: 15,
            inverter_life_years: 13,
            battery_om_rate: 0.015,
            dod_buffer: 0.05,
            roundtrip_eff: 0.90,
            efficiency_split: EfficiencySplit::Symmetric,
            battery_size_fraction: 1.0,
            dedicated_solar_extra: 0.0,
            cycle_boundary_slot: 34,

            discount_rate: 0.06,
            wacc: 0.085,
            full_life_annuities: false,

            fuel_price_coal_2019: 2.6,
            fuel_price_coal_slack: 3.0,
            fuel_price_gas_2019: 2.8,
            fuel_price_gas_nonapm: 5.0,
            fuel_escalation_coal: 0.05,
            fuel_escalation_gas: 0.03,
            fuel_escalation_diesel: 0.03,

            aux_coal: 0.08,
            aux_gas: 0.05,
            aux_hydro: 0.01,
            aux_nuclear: 0.07,
            aux_re: 0.0,

            ists_losses: 0.0339,
            grid_buffer: 0.05,

            new_option: NewOption::BatteryRe,
            new_coal_size_fraction: 1.0,

            newcoal_life_years: 25,
            newcoal_capex_2021: 85_000_000.0,
            newcoal_capex_escalation: 0.06,
            newcoal_aux: 0.08,
            newcoal_fuel_2021: 2.4,
            ocgt_life_years: 25,
            ocgt_capex_2021: 50_000_000.0,
            ocgt_capex_escalation: 0.04,
            ocgt_aux: 0.025,
            ocgt_fuel_2021: 6.8,
            ccgt_life_years: 25,
            ccgt_capex_2021: 60_000_000.0,
            ccgt_capex_escalation: 0.05,
            ccgt_aux: 0.05,
            ccgt_fuel_2021: 5.0,
            gasic_life_years: 18,
            gasic_capex_2021: 55_000_000.0,
            gasic_capex_escalation: 0.04,
            gasic_aux: 0.005,
            gasic_fuel_2021: 5.8,
            diesel_life_years: 15,
            diesel_capex_2021: 20_000_000.0,
            diesel_capex_escalation: 0.04,
            diesel_aux: 0.005,
            diesel_fuel_2021: 20.0,
            thermal_om_rate: 0.015,
        }
    }
}

fn check_range(name: &str, v: f64, lo: f64, hi: f64, lo_open: bool, hi_open: bool) -> Result<()> {
    let ok = v.is_finite()
        && if lo_open { v > lo } else { v >= lo }
        && if hi_open { v < hi } else { v <= hi };
    if ok {
        Ok(())
    } else {
        let l = if lo_open { '(' } else { '[' };
        let h = if hi_open { ')' } else { ']' };
        Err(Error::Parameter(format!("{name} = {v} outside {l}{lo}, {hi}{h}")))
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        check_range("flex_limit", self.flex_limit, 0.5, 0.8, false, false)?;
        check_range("dod_buffer", self.dod_buffer, 0.0, 1.0, true, true)?;
        check_range("roundtrip_eff", self.roundtrip_eff, 0.0, 1.0, true, false)?;
        check_range("solar_share", self.solar_share, 0.0, 1.0, false, false)?;
        check_range("solar_cuf", self.solar_cuf, 0.0, 1.0, true, true)?;
        check_range("wind_cuf", self.wind_cuf, 0.0, 1.0, true, true)?;
        check_range("battery_size_fraction", self.battery_size_fraction, 0.0, 1.0, true, false)?;
        check_range("new_coal_size_fraction", self.new_coal_size_fraction, 0.0, 1.0, true, false)?;
        check_range("dedicated_solar_extra", self.dedicated_solar_extra, 0.0, 1.0, false, false)?;
        check_range("solar_kwh_per_kw_day", self.solar_kwh_per_kw_day, 0.0, 24.0, true, true)?;
        check_range("demand_growth", self.demand_growth, -1.0, 1.0, true, true)?;
        check_range("ists_losses", self.ists_losses, 0.0, 1.0, false, true)?;
        check_range("grid_buffer", self.grid_buffer, 0.0, 1.0, false, true)?;
        check_range("fgd_penalty", self.fgd_penalty, 0.0, 1.0, false, true)?;
        check_range("coal_maintenance_derate", self.coal_maintenance_derate, 0.0, 1.0, false, true)?;
        check_range("other_re_plf", self.other_re_plf, 0.0, 1.0, false, false)?;
        check_range("residual_tolerance", self.residual_tolerance, 0.0, f64::INFINITY, false, true)?;
        for (name, v) in [
            ("aux_coal", self.aux_coal),
            ("aux_gas", self.aux_gas),
            ("aux_hydro", self.aux_hydro),
            ("aux_nuclear", self.aux_nuclear),
            ("aux_re", self.aux_re),
            ("newcoal_aux", self.newcoal_aux),
            ("ocgt_aux", self.ocgt_aux),
            ("ccgt_aux", self.ccgt_aux),
            ("gasic_aux", self.gasic_aux),
            ("diesel_aux", self.diesel_aux),
        ] {
            check_range(name, v, 0.0, 1.0, false, true)?;
        }
        for (name, v) in [
            ("discount_rate", self.discount_rate),
            ("wacc", self.wacc),
            ("battery_learning_rate", self.battery_learning_rate),
        ] {
            check_range(name, v, -1.0, f64::INFINITY, true, true)?;
        }
        for (name, v) in [
            ("re_2021_gw", self.re_2021_gw),
            ("hydro_2021_gw", self.hydro_2021_gw),
            ("gas_2021_gw", self.gas_2021_gw),
            ("nuclear_2021_gw", self.nuclear_2021_gw),
            ("coal_2021_gw", self.coal_2021_gw),
            ("other_re_gw", self.other_re_gw),
            ("base_solar_gw", self.base_solar_gw),
            ("coal_retirement_2030", self.coal_retirement_2030),
        ] {
            check_range(name, v, 0.0, f64::INFINITY, false, true)?;
        }
        if self.coal_retirement_2030 > self.coal_2021_gw {
            return Err(Error::Parameter(format!(
                "coal_retirement_2030 = {} exceeds the {} GW fleet",
                self.coal_retirement_2030, self.coal_2021_gw
            )));
        }
        if self.re_2030 < self.re_2021_gw || !self.re_2030.is_finite() {
            return Err(Error::Parameter(format!(
                "re_2030 = {} GW is below the {} GW base",
                self.re_2030, self.re_2021_gw
            )));
        }
        if self.fgd_full_year <= self.fgd_start_year {
            return Err(Error::Parameter("fgd_full_year must be after fgd_start_year".into()));
        }
        if self.cycle_boundary_slot >= crate::SLOTS_PER_DAY {
            return Err(Error::Parameter(format!(
                "cycle_boundary_slot = {} must be below {}",
                self.cycle_boundary_slot,
                crate::SLOTS_PER_DAY
            )));
        }
        if self.max_gap_slots < 1 {
            return Err(Error::Parameter("max_gap_slots must be at least 1".into()));
        }
        if let Some(t) = self.base_re_energy_gwh {
            if !(t > 0.0) {
                return Err(Error::Parameter(format!("base_re_energy_gwh = {t} must be positive")));
            }
        }
        for (name, v) in [
            ("re_life_years", self.re_life_years),
            ("battery_life_years", self.battery_life_years),
            ("inverter_life_years", self.inverter_life_years),
            ("newcoal_life_years", self.newcoal_life_years),
            ("ocgt_life_years", self.ocgt_life_years),
            ("ccgt_life_years", self.ccgt_life_years),
            ("gasic_life_years", self.gasic_life_years),
            ("diesel_life_years", self.diesel_life_years),
        ] {
            if v == 0 {
                return Err(Error::Parameter(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    /// Charge-side and discharge-side efficiencies.
    pub fn efficiencies(&self) -> (f64, f64) {
        match self.efficiency_split {
            EfficiencySplit::Symmetric => {
                let e = self.roundtrip_eff.sqrt();
                (e, e)
            }
            EfficiencySplit::AllOnCharge => (self.roundtrip_eff, 1.0),
        }
    }

    /// Cost and performance of a thermal NEW option; `None` for the battery.
    pub fn thermal(&self, option: NewOption) -> Option<ThermalSpec> {
        let om_rate = self.thermal_om_rate;
        Some(match option {
            NewOption::Coal => ThermalSpec {
                life_years: self.newcoal_life_years,
                capex_2021: self.newcoal_capex_2021,
                capex_escalation: self.newcoal_capex_escalation,
                aux: self.newcoal_aux,
                fuel_2021: self.newcoal_fuel_2021,
                fuel: FuelFamily::Coal,
                om_rate,
            },
            NewOption::Ocgt => ThermalSpec {
                life_years: self.ocgt_life_years,
                capex_2021: self.ocgt_capex_2021,
                capex_escalation: self.ocgt_capex_escalation,
                aux: self.ocgt_aux,
                fuel_2021: self.ocgt_fuel_2021,
                fuel: FuelFamily::Gas,
                om_rate,
            },
            NewOption::Ccgt => ThermalSpec {
                life_years: self.ccgt_life_years,
                capex_2021: self.ccgt_capex_2021,
                capex_escalation: self.ccgt_capex_escalation,
                aux: self.ccgt_aux,
                fuel_2021: self.ccgt_fuel_2021,
                fuel: FuelFamily::Gas,
                om_rate,
            },
            NewOption::GasIc => ThermalSpec {
                life_years: self.gasic_life_years,
                capex_2021: self.gasic_capex_2021,
                capex_escalation: self.gasic_capex_escalation,
                aux: self.gasic_aux,
                fuel_2021: self.gasic_fuel_2021,
                fuel: FuelFamily::Gas,
                om_rate,
            },
            NewOption::DieselGen => self.biodiesel(),
            NewOption::BatteryRe => return None,
        })
    }

    /// Biodiesel generators for under-sized NEW supply use the diesel row.
    pub fn biodiesel(&self) -> ThermalSpec {
        ThermalSpec {
            life_years: self.diesel_life_years,
            capex_2021: self.diesel_capex_2021,
            capex_escalation: self.diesel_capex_escalation,
            aux: self.diesel_aux,
            fuel_2021: self.diesel_fuel_2021,
            fuel: FuelFamily::Diesel,
            om_rate: self.thermal_om_rate,
        }
    }

    pub fn escalation(&self, fuel: FuelFamily) -> f64 {
        match fuel {
            FuelFamily::Coal => self.fuel_escalation_coal,
            FuelFamily::Gas => self.fuel_escalation_gas,
            FuelFamily::Diesel => self.fuel_escalation_diesel,
        }
    }

    pub fn aux(&self, fuel: Fuel) -> f64 {
        match fuel {
            Fuel::Coal => self.aux_coal,
            Fuel::Gas => self.aux_gas,
            Fuel::Hydro => self.aux_hydro,
            Fuel::Nuclear => self.aux_nuclear,
            Fuel::Re => self.aux_re,
        }
    }

    /// Per-MW output of dedicated battery-charging solar (daily yield / 24 h).
    pub fn dedicated_solar_cuf(&self) -> f64 {
        self.solar_kwh_per_kw_day / 24.0
    }

    /// Known parameter names, i.e. the accepted config keys.
    pub fn field_names() -> Vec<String> {
        match serde_json::to_value(Self::default()) {
            Ok(Value::Object(m)) => m.keys().cloned().collect(),
            _ => unreachable!("params serialize to an object"),
        }
    }
}

/// One axis of a parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub values: Vec<Value>,
    pub base: Option<Value>,
}

/// Fixed parameter overrides plus value lists to sweep.
///
/// Expansion is a lexicographic cartesian product over axes sorted by name,
/// with the last axis varying fastest.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamGrid {
    fixed: Map<String, Value>,
    axes: BTreeMap<String, Axis>,
}

/// One expanded grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub index: usize,
    /// Value of every swept axis, in axis order.
    pub coords: Vec<(String, Value)>,
    pub params: ScenarioParams,
}

impl Scenario {
    /// `name=value` pairs joined by `;`, or `base` for a singleton grid.
    pub fn key(&self) -> String {
        if self.coords.is_empty() {
            return "base".into();
        }
        self.coords
            .iter()
            .map(|(k, v)| format!("{k}={}", value_label(v)))
            .collect::<Vec<_>>()
            .join(";")
    }
}

pub fn value_label(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl ParamGrid {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parse a JSON config object. Scalars fix a parameter; arrays sweep it;
    /// `{"values": [...], "base": v}` sweeps it and marks `v` as the base.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let root: Value = serde_json::from_str(text)?;
        let Value::Object(entries) = root else {
            return Err(Error::Parameter("config must be a JSON object".into()));
        };
        let known = ScenarioParams::field_names();
        let mut grid = Self::new();
        for (key, value) in entries {
            if !known.contains(&key) {
                return Err(Error::Parameter(format!("unknown config key `{key}`")));
            }
            match value {
                Value::Array(values) => grid.sweep(key, values, None)?,
                Value::Object(mut spec) => {
                    let values = match spec.remove("values") {
                        Some(Value::Array(v)) => v,
                        _ => {
                            return Err(Error::Parameter(format!(
                                "`{key}` must give a `values` array"
                            )))
                        }
                    };
                    let base = spec.remove("base");
                    if let Some(extra) = spec.keys().next() {
                        return Err(Error::Parameter(format!("unknown field `{extra}` in `{key}`")));
                    }
                    grid.sweep(key, values, base)?
                }
                scalar => {
                    grid.fixed.insert(key, scalar);
                }
            }
        }
        grid.resolve(&grid.fixed)?;
        Ok(grid)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Fix a parameter to one value.
    pub fn fix(&mut self, key: impl Into<String>, value: Value) -> &mut Self {
        self.fixed.insert(key.into(), value);
        self
    }

    /// Sweep a parameter over `values`.
    pub fn sweep(&mut self, key: impl Into<String>, values: Vec<Value>, base: Option<Value>) -> Result<()> {
        let key = key.into();
        if values.is_empty() {
            return Err(Error::Parameter(format!("`{key}` has an empty value list")));
        }
        if let Some(b) = &base {
            if !values.contains(b) {
                return Err(Error::Parameter(format!("base value {b} of `{key}` is not in its list")));
            }
        }
        self.axes.insert(key, Axis { values, base });
        Ok(())
    }

    /// The four-axis sweep of growth, flex, 2030 RE and solar share
    /// (3 × 3 × 7 × 3 = 189 points).
    pub fn standard() -> Self {
        let mut grid = Self::new();
        let nums = |v: &[f64]| v.iter().map(|x| Value::from(*x)).collect::<Vec<_>>();
        let axes: [(&str, Vec<f64>, f64); 4] = [
            ("demand_growth", vec![0.05, 0.0525, 0.055], 0.0525),
            ("flex_limit", vec![0.55, 0.60, 0.70], 0.60),
            (
                "re_2030",
                vec![250.0, 300.0, 350.0, 400.0, 450.0, 500.0, 550.0],
                450.0,
            ),
            ("solar_share", vec![6.0 / 12.0, 7.0 / 12.0, 8.0 / 12.0], 8.0 / 12.0),
        ];
        for (name, values, base) in axes {
            grid.sweep(name, nums(&values), Some(Value::from(base)))
                .expect("static grid is valid");
        }
        grid
    }

    pub fn axes(&self) -> &BTreeMap<String, Axis> {
        &self.axes
    }

    pub fn fixed(&self) -> &Map<String, Value> {
        &self.fixed
    }

    /// Number of scenarios the grid expands to.
    pub fn len(&self) -> usize {
        self.axes.values().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn resolve(&self, overrides: &Map<String, Value>) -> Result<ScenarioParams> {
        let Value::Object(mut merged) = serde_json::to_value(ScenarioParams::default())? else {
            unreachable!("params serialize to an object")
        };
        for (k, v) in overrides {
            merged.insert(k.clone(), v.clone());
        }
        let params: ScenarioParams = serde_json::from_value(Value::Object(merged))
            .map_err(|e| Error::Parameter(e.to_string()))?;
        Ok(params)
    }

    /// The scenario built from base markers (or first values) on every axis.
    pub fn base(&self) -> Result<ScenarioParams> {
        let mut overrides = self.fixed.clone();
        for (k, axis) in &self.axes {
            overrides.insert(k.clone(), axis.base.clone().unwrap_or_else(|| axis.values[0].clone()));
        }
        self.resolve(&overrides)
    }

    /// Index of [`ParamGrid::base`] among the expanded scenarios.
    pub fn base_index(&self) -> usize {
        self.axes.values().fold(0, |acc, axis| {
            let pos = axis
                .base
                .as_ref()
                .and_then(|b| axis.values.iter().position(|v| v == b))
                .unwrap_or(0);
            acc * axis.values.len() + pos
        })
    }

    /// JSON config that parses back into this grid.
    pub fn to_json(&self) -> Value {
        let mut out = self.fixed.clone();
        for (k, axis) in &self.axes {
            let v = match &axis.base {
                Some(b) => serde_json::json!({"values": axis.values, "base": b}),
                None => Value::Array(axis.values.clone()),
            };
            out.insert(k.clone(), v);
        }
        Value::Object(out)
    }

    /// Expand into resolved scenarios. Values are type-checked here;
    /// range validation is left to [`ScenarioParams::validate`] so one bad
    /// point does not abort a sweep.
    pub fn expand(&self) -> Result<Vec<Scenario>> {
        let axes: Vec<(&String, &Axis)> = self.axes.iter().collect();
        let total = self.len();
        let mut out = Vec::with_capacity(total);
        for index in 0..total {
            let mut rem = index;
            let mut coords = vec![(String::new(), Value::Null); axes.len()];
            for (slot, (name, axis)) in axes.iter().enumerate().rev() {
                let n = axis.values.len();
                coords[slot] = ((*name).clone(), axis.values[rem % n].clone());
                rem /= n;
            }
            let mut overrides = self.fixed.clone();
            overrides.extend(coords.iter().cloned());
            out.push(Scenario {
                index,
                coords,
                params: self.resolve(&overrides)?,
            });
        }
        Ok(out)
    }
}

/// Expand a grid (free-function form).
pub fn expand_param_grid(grid: &ParamGrid) -> Result<Vec<Scenario>> {
    grid.expand()
}

/// Net busbar capacity for one year, GW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YearCapacity {
    pub year: i32,
    pub re_gw: f64,
    pub solar_gw: f64,
    pub wind_gw: f64,
    pub other_re_gw: f64,
    pub hydro_gw: f64,
    pub nuclear_gw: f64,
    pub coal_pre_fgd_gw: f64,
    pub coal_gw: f64,
    pub gas_gw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityPath {
    pub years: Vec<YearCapacity>,
}

impl CapacityPath {
    pub fn get(&self, year: i32) -> Result<&YearCapacity> {
        self.years
            .iter()
            .find(|y| y.year == year)
            .ok_or_else(|| Error::Integrity(format!("capacity path has no entry for {year}")))
    }
}

/// Fraction of the FGD penalty in force in `year`.
pub fn fgd_ramp(p: &ScenarioParams, year: i32) -> f64 {
    let span = (p.fgd_full_year - p.fgd_start_year) as f64;
    ((year - p.fgd_start_year) as f64 / span).clamp(0.0, 1.0)
}

pub fn build_capacity_path(p: &ScenarioParams) -> Result<CapacityPath> {
    if !(p.re_2030 >= p.re_2021_gw) || p.re_2021_gw <= 0.0 {
        return Err(Error::Parameter(format!(
            "re_2030 = {} GW must be at least the {} GW base",
            p.re_2030, p.re_2021_gw
        )));
    }
    let span = (LAST_YEAR - FIRST_YEAR) as f64;
    let years = horizon()
        .map(|year| {
            let n = (year - FIRST_YEAR) as f64;
            let re_gw = if year == LAST_YEAR {
                p.re_2030
            } else {
                p.re_2021_gw * (p.re_2030 / p.re_2021_gw).powf(n / span)
            };
            let coal_pre_fgd_gw = p.coal_2021_gw - p.coal_retirement_2030 * n / span;
            let coal_gw = coal_pre_fgd_gw
                * (1.0 - p.fgd_penalty * fgd_ramp(p, year))
                * (1.0 - p.coal_maintenance_derate);
            YearCapacity {
                year,
                re_gw,
                solar_gw: re_gw * p.solar_share,
                wind_gw: re_gw * (1.0 - p.solar_share),
                other_re_gw: p.other_re_gw,
                hydro_gw: p.hydro_2021_gw * (1.0 + p.hydro_growth).powf(n),
                nuclear_gw: p.nuclear_2021_gw * (1.0 + p.nuclear_growth).powf(n),
                coal_pre_fgd_gw,
                coal_gw,
                gas_gw: p.gas_2021_gw,
            }
        })
        .collect();
    Ok(CapacityPath { years })
}

fn check_year(year: i32) -> Result<()> {
    if (FIRST_YEAR..=LAST_YEAR).contains(&year) {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "year {year} outside {FIRST_YEAR}–{LAST_YEAR}"
        )))
    }
}

/// Demand at the state periphery for `year`: base shape remapped to the
/// year's calendar and scaled by compound growth.
pub fn project_demand(p: &ScenarioParams, base: &BaseYearData, year: i32) -> Result<HalfHourlySeries> {
    check_year(year)?;
    let factor = (1.0 + p.demand_growth).powi(year - FIRST_YEAR);
    Ok(base.demand.map_to_year(year).scaled(factor))
}

/// Per-MW shapes a scenario needs, derived from the base year.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSet {
    pub solar: PerMwShape,
    pub wind: PerMwShape,
    pub dedicated_solar: PerMwShape,
}

impl ShapeSet {
    /// `historic_solar` is the base-year per-MW solar output behind the RE series.
    pub fn prepare(base: &BaseYearData, historic_solar: &PerMwShape, p: &ScenarioParams) -> Result<Self> {
        let historic_solar = if historic_solar.len() == base.len() {
            historic_solar.clone()
        } else {
            historic_solar.map_to_year(base.year())
        };
        let wind = derive_wind_shape(
            base.fuel(Fuel::Re),
            &historic_solar,
            p.base_solar_gw * 1e3,
            p.wind_cuf,
        )?;
        Ok(Self {
            solar: rescale_to_cuf(&historic_solar, p.solar_cuf)?,
            wind,
            dedicated_solar: rescale_to_cuf(&historic_solar, p.dedicated_solar_cuf())?,
        })
    }
}

/// Slot-level availability for one modelled year, MW at the busbar.
#[derive(Debug, Clone, PartialEq)]
pub struct YearInputs {
    pub year: i32,
    pub capacity: YearCapacity,
    /// Demand grossed up for transmission losses.
    pub demand: Vec<f64>,
    pub re_available: Vec<f64>,
    pub hydro: Vec<f64>,
    pub nuclear: Vec<f64>,
    pub coal_2019_cap: Vec<f64>,
    pub coal_slack_cap: Vec<f64>,
    pub gas_2019_cap: Vec<f64>,
    pub gas_slack_cap: Vec<f64>,
    /// Per-MW dedicated solar output for this calendar year.
    pub dedicated_solar: Vec<f64>,
}

impl YearInputs {
    pub fn len(&self) -> usize {
        self.demand.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demand.is_empty()
    }

    pub fn coal_cap_mw(&self) -> f64 {
        self.capacity.coal_gw * 1e3
    }

    pub fn gas_cap_mw(&self) -> f64 {
        self.capacity.gas_gw * 1e3
    }
}

/// Split a fleet into the slot-wise tranche used in the base year and the rest.
fn split_tranche(base_output: &[f64], cap_mw: f64) -> (Vec<f64>, Vec<f64>) {
    base_output
        .iter()
        .map(|b| {
            let used = b.min(cap_mw).max(0.0);
            (used, cap_mw - used)
        })
        .unzip()
}

pub fn build_year_inputs(
    p: &ScenarioParams,
    base: &BaseYearData,
    shapes: &ShapeSet,
    path: &CapacityPath,
    year: i32,
) -> Result<YearInputs> {
    let capacity = *path.get(year)?;
    let first = path.get(FIRST_YEAR)?;
    let n = slots_in_year(year);
    let remap = |v: &[f64]| crate::series::remap_days(v, n / crate::SLOTS_PER_DAY);

    let demand: Vec<f64> = project_demand(p, base, year)?
        .into_values()
        .into_iter()
        .map(|d| d / (1.0 - p.ists_losses))
        .collect();
    let solar = remap(shapes.solar.values());
    let wind = remap(shapes.wind.values());
    let other_mw = capacity.other_re_gw * 1e3 * p.other_re_plf;
    let re_available = solar
        .iter()
        .zip(&wind)
        .map(|(s, w)| capacity.solar_gw * 1e3 * s + capacity.wind_gw * 1e3 * w + other_mw)
        .collect();

    let pro_rata = |fuel: Fuel, now: f64, then: f64| -> Vec<f64> {
        let k = if then > 0.0 { now / then } else { 0.0 };
        base.fuel(fuel).map_to_year(year).into_values().into_iter().map(|v| v * k).collect()
    };
    let hydro = pro_rata(Fuel::Hydro, capacity.hydro_gw, first.hydro_gw);
    let nuclear = pro_rata(Fuel::Nuclear, capacity.nuclear_gw, first.nuclear_gw);
    let (coal_2019_cap, coal_slack_cap) =
        split_tranche(base.fuel(Fuel::Coal).map_to_year(year).values(), capacity.coal_gw * 1e3);
    let (gas_2019_cap, gas_slack_cap) =
        split_tranche(base.fuel(Fuel::Gas).map_to_year(year).values(), capacity.gas_gw * 1e3);

    Ok(YearInputs {
        year,
        capacity,
        demand,
        re_available,
        hydro,
        nuclear,
        coal_2019_cap,
        coal_slack_cap,
        gas_2019_cap,
        gas_slack_cap,
        dedicated_solar: remap(shapes.dedicated_solar.values()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::{synth_shapes, synth_solar_shape};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use serde_json::json;

    #[test]
    fn defaults_validate() {
        ScenarioParams::default().validate().unwrap();
    }

    #[test]
    fn flex_limit_range_enforced() {
        let p = ScenarioParams {
            flex_limit: 0.4,
            ..Default::default()
        };
        assert!(matches!(p.validate(), Err(Error::Parameter(_))));
    }

    #[test]
    fn growth_by_re_grid_has_21_points() {
        let grid = ParamGrid::from_json_str(
            r#"{"demand_growth": [0.05, 0.0525, 0.055],
                "re_2030": [250, 300, 350, 400, 450, 500, 550],
                "flex_limit": 0.6}"#,
        )
        .unwrap();
        let scenarios = grid.expand().unwrap();
        assert_eq!(scenarios.len(), 21);
        // Axes are ordered by name, last fastest.
        assert_eq!(scenarios[1].params.re_2030, 300.0);
        assert_eq!(scenarios[7].params.demand_growth, 0.0525);
        assert!(scenarios.iter().all(|s| s.params.flex_limit == 0.6));
    }

    #[test]
    fn singleton_grid_is_base() {
        let grid = ParamGrid::from_json_str(r#"{"wacc": [0.085]}"#).unwrap();
        let scenarios = grid.expand().unwrap();
        assert_eq!(scenarios.len(), 1);
        assert_eq!(scenarios[0].params, ScenarioParams::default());

        let empty = ParamGrid::from_json_str("{}").unwrap();
        let s = empty.expand().unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].key(), "base");
    }

    #[test]
    fn config_errors() {
        assert!(matches!(
            ParamGrid::from_json_str(r#"{"nope": 1}"#),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            ParamGrid::from_json_str(r#"{"re_2030": []}"#),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            ParamGrid::from_json_str(r#"{"re_2030": "lots"}"#),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            ParamGrid::from_json_str(r#"{"re_2030": {"values": [300], "base": 400}}"#),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn standard_grid_base_point() {
        let grid = ParamGrid::standard();
        assert_eq!(grid.len(), 189);
        let base = grid.base().unwrap();
        assert_eq!(base.demand_growth, 0.0525);
        assert_eq!(base.flex_limit, 0.60);
        assert_eq!(base.re_2030, 450.0);
        assert_eq!(base.solar_share, 8.0 / 12.0);
        assert_eq!(grid.expand().unwrap().len(), 189);
    }

    #[test]
    fn base_index_points_at_base_params() {
        let grid = ParamGrid::standard();
        let scenarios = grid.expand().unwrap();
        assert_eq!(scenarios[grid.base_index()].params, grid.base().unwrap());
        assert_eq!(ParamGrid::new().base_index(), 0);
    }

    #[test]
    fn grid_json_round_trips() {
        let mut grid = ParamGrid::standard();
        grid.fix("new_option", json!("ocgt"));
        grid.sweep("wacc", vec![json!(0.08), json!(0.09)], None).unwrap();
        let back = ParamGrid::from_json_str(&grid.to_json().to_string()).unwrap();
        assert_eq!(back, grid);
    }

    #[test]
    fn capacity_path_endpoints() {
        let p = ScenarioParams::default();
        let path = build_capacity_path(&p).unwrap();
        let first = path.get(2021).unwrap();
        let last = path.get(2030).unwrap();
        assert_eq!(first.re_gw, 98.0);
        assert_eq!(last.re_gw, 450.0);
        assert_eq!(first.hydro_gw, 35.5);
        assert_eq!(first.gas_gw, 21.3);
        assert_eq!(first.nuclear_gw, 5.4);
        assert_eq!(first.coal_gw, 162.6);
        let mut hydro = 35.5;
        for _ in 0..9 {
            hydro *= 1.03;
        }
        assert_relative_eq!(last.hydro_gw, hydro, max_relative = 1e-12);
        assert!((last.hydro_gw - 46.3).abs() < 0.05);
        assert_relative_eq!(last.coal_pre_fgd_gw, 142.6, max_relative = 1e-12);
        assert_relative_eq!(last.coal_gw, 142.6 * 0.975, max_relative = 1e-12);
    }

    #[test]
    fn fgd_ramp_schedule() {
        let p = ScenarioParams::default();
        let r: Vec<f64> = horizon().map(|y| fgd_ramp(&p, y)).collect();
        assert_eq!(r[0], 0.0);
        assert_eq!(r[1], 0.0);
        assert_relative_eq!(r[2], 0.2);
        assert_eq!(r[6], 1.0);
        assert_eq!(r[9], 1.0);
    }

    #[test]
    fn re_below_base_is_rejected() {
        let p = ScenarioParams {
            re_2030: 50.0,
            ..Default::default()
        };
        assert!(matches!(build_capacity_path(&p), Err(Error::Parameter(_))));
    }

    #[test]
    fn demand_projection() {
        let base = synth_shapes(1, 1.0);
        let p = ScenarioParams::default();
        let d2021 = project_demand(&p, &base, 2021).unwrap();
        assert_eq!(d2021.values(), base.demand.values());
        let d2030 = project_demand(&p, &base, 2030).unwrap();
        let expected = 1360.0 * 1.0525f64.powi(9);
        assert_relative_eq!(d2030.energy_twh(), expected, max_relative = 1e-9);
        assert!((d2030.energy_twh() - 2160.0).abs() / 2160.0 < 0.005);
        assert!(project_demand(&p, &base, 2031).is_err());

        let flat = ScenarioParams {
            demand_growth: 0.0,
            ..Default::default()
        };
        let d = project_demand(&flat, &base, 2027).unwrap();
        assert_eq!(d.values(), base.demand.values());
        // 2028 is a leap year.
        assert_eq!(project_demand(&p, &base, 2028).unwrap().len(), 17_568);
    }

    #[test]
    fn year_inputs_split_tranches() {
        let base = synth_shapes(2, 1.0);
        let p = ScenarioParams::default();
        let shapes = ShapeSet::prepare(&base, &synth_solar_shape(2), &p).unwrap();
        assert!((shapes.solar.achieved_cuf() - 0.27).abs() < 1e-6);
        assert!((shapes.wind.achieved_cuf() - 0.35).abs() < 1e-6);
        let path = build_capacity_path(&p).unwrap();
        let yi = build_year_inputs(&p, &base, &shapes, &path, 2030).unwrap();
        let cap = yi.coal_cap_mw();
        for i in 0..yi.len() {
            assert_relative_eq!(yi.coal_2019_cap[i] + yi.coal_slack_cap[i], cap, max_relative = 1e-12);
            assert!(yi.coal_slack_cap[i] >= 0.0);
        }
        let re_twh: f64 = yi.re_available.iter().sum::<f64>() * 0.5e-6;
        let expected = (300.0 * 0.27 + 150.0 * 0.35) * 8.76;
        assert_relative_eq!(re_twh, expected, max_relative = 1e-3);
    }

    proptest! {
        #[test]
        fn capacity_path_monotone(re in 98.0f64..800.0, ret in 0.0f64..60.0, hg in 0.0f64..0.1) {
            let p = ScenarioParams {
                re_2030: re,
                coal_retirement_2030: ret,
                hydro_growth: hg,
                ..Default::default()
            };
            let path = build_capacity_path(&p).unwrap();
            for w in path.years.windows(2) {
                prop_assert!(w[1].coal_gw <= w[0].coal_gw);
                prop_assert!(w[1].re_gw >= w[0].re_gw);
                prop_assert!(w[1].hydro_gw >= w[0].hydro_gw);
                prop_assert!(w[1].nuclear_gw >= w[0].nuclear_gw);
            }
            prop_assert!((path.years[9].re_gw - re).abs() <= 1e-9 * re);
        }

        #[test]
        fn projection_preserves_shape(g in -0.05f64..0.15, year in 2021i32..=2030) {
            let base = synth_shapes(3, 1.0);
            let p = ScenarioParams { demand_growth: g, ..Default::default() };
            let d = project_demand(&p, &base, year).unwrap();
            let k = (1.0 + g).powi(year - 2021);
            let mapped = base.demand.map_to_year(year);
            prop_assert!((d.peak() - mapped.peak() * k).abs() <= 1e-9 * d.peak());
            prop_assert!((d.mean() - mapped.mean() * k).abs() <= 1e-9 * d.mean());
        }
    }
}
