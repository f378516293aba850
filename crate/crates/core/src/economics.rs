//! Price paths, annuities, NPV of non-sunk system cost, levelized costs and
//! the cost frontier.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::scenario::{NewOption, ScenarioParams, ThermalSpec};
use crate::{Error, Result, FIRST_YEAR, LAST_YEAR};

/// `base * (1 + escalation)^(year - 2021)`.
pub fn fuel_price_path(base: f64, escalation: f64, year: i32) -> f64 {
    base * (1.0 + escalation).powi(year - FIRST_YEAR)
}

/// Battery cell price in USD/kWh.
pub fn battery_price_usd(p: &ScenarioParams, year: i32) -> f64 {
    p.battery_price_2021 * (1.0 - p.battery_learning_rate).powi(year - FIRST_YEAR)
}

/// Battery cell price in Rs/kWh: USD learning curve times an escalating
/// exchange rate.
pub fn battery_price_path(p: &ScenarioParams, year: i32) -> f64 {
    battery_price_usd(p, year) * p.inr_per_usd * (1.0 + p.forex_escalation).powi(year - FIRST_YEAR)
}

/// Level payment amortizing `principal` over `n_years` at `rate`.
pub fn annuity_payment(principal: f64, rate: f64, n_years: u32) -> f64 {
    assert!(n_years >= 1, "annuity needs at least one payment");
    if rate == 0.0 {
        return principal / n_years as f64;
    }
    let g = (1.0 + rate).powi(n_years as i32);
    principal * rate * g / (g - 1.0)
}

/// Discount factor to 2021 for a cash flow at the end of `year`.
pub fn discount_factor(rate: f64, year: i32) -> f64 {
    (1.0 + rate).powi(-(year - FIRST_YEAR))
}

pub fn solar_capex(p: &ScenarioParams, year: i32) -> f64 {
    fuel_price_path(p.solar_capex_2021, p.solar_capex_change, year)
}

/// Linear between the 2021 and 2030 endpoints.
pub fn wind_capex(p: &ScenarioParams, year: i32) -> f64 {
    let f = (year - FIRST_YEAR) as f64 / (LAST_YEAR - FIRST_YEAR) as f64;
    p.wind_capex_2021 + f * (p.wind_capex_2030 - p.wind_capex_2021)
}

pub fn thermal_fuel_price(p: &ScenarioParams, spec: &ThermalSpec, year: i32) -> f64 {
    fuel_price_path(spec.fuel_2021, p.escalation(spec.fuel), year)
}

/// `Σ costs_t/(1+d)^t ÷ Σ energy_t/(1+d)^t` with `t` counted from 2021.
pub fn levelized_cost(costs: &[(i32, f64)], energy: &[(i32, f64)], discount: f64) -> Result<f64> {
    let num: f64 = costs.iter().map(|(y, c)| c * discount_factor(discount, *y)).sum();
    let den: f64 = energy.iter().map(|(y, e)| e * discount_factor(discount, *y)).sum();
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(Error::UndefinedCost)
    }
}

/// NPV or annual cost split by line item, Rs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Components {
    pub re_capex: f64,
    pub re_om: f64,
    pub coal_fuel: f64,
    pub gas_fuel_2019: f64,
    pub gas_fuel_nonapm: f64,
    pub new_capex: f64,
    pub new_fuel: f64,
    pub new_om: f64,
    pub biodiesel: f64,
}

impl Components {
    pub const NAMES: [&'static str; 9] = [
        "re_capex",
        "re_om",
        "coal_fuel",
        "gas_fuel_2019",
        "gas_fuel_nonapm",
        "new_capex",
        "new_fuel",
        "new_om",
        "biodiesel",
    ];

    pub fn values(&self) -> [f64; 9] {
        [
            self.re_capex,
            self.re_om,
            self.coal_fuel,
            self.gas_fuel_2019,
            self.gas_fuel_nonapm,
            self.new_capex,
            self.new_fuel,
            self.new_om,
            self.biodiesel,
        ]
    }

    pub fn total(&self) -> f64 {
        self.values().iter().sum()
    }

    fn add_scaled(&mut self, o: &Components, k: f64) {
        self.re_capex += k * o.re_capex;
        self.re_om += k * o.re_om;
        self.coal_fuel += k * o.coal_fuel;
        self.gas_fuel_2019 += k * o.gas_fuel_2019;
        self.gas_fuel_nonapm += k * o.gas_fuel_nonapm;
        self.new_capex += k * o.new_capex;
        self.new_fuel += k * o.new_fuel;
        self.new_om += k * o.new_om;
        self.biodiesel += k * o.biodiesel;
    }

    /// Existing-fleet and RE expansion cost.
    pub fn existing(&self) -> f64 {
        self.re_capex + self.re_om + self.coal_fuel + self.gas_fuel_2019 + self.gas_fuel_nonapm
    }

    pub fn new_supply(&self) -> f64 {
        self.new_capex + self.new_fuel + self.new_om + self.biodiesel
    }
}

/// Net busbar energy (MWh) per fossil tranche.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FossilEnergy {
    pub coal_2019: f64,
    pub coal_slack: f64,
    pub gas_2019: f64,
    pub gas_slack: f64,
}

/// Physical outcome of one modelled year, as the cost model needs it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct YearOutcome {
    pub year: i32,
    pub solar_gw: f64,
    pub wind_gw: f64,
    /// Existing-fleet fossil energy after flex floors, before NEW feedback.
    pub fossil_mwh: FossilEnergy,
    /// Busbar energy from RE, hydro and nuclear.
    pub must_run_mwh: f64,
    /// Change in existing fossil energy caused by NEW supply (displacement,
    /// bonus, re-flexing). Priced and charged to NEW.
    pub fossil_shift_mwh: FossilEnergy,
    /// Energy delivered by NEW supply (battery discharge or thermal output).
    pub new_output_mwh: f64,
    pub thermal_increment_mw: f64,
    pub battery_increment_mwh: f64,
    pub inverter_increment_mw: f64,
    pub dedicated_solar_gw: f64,
    pub dedicated_solar_increment_gw: f64,
    pub biodiesel_mwh: f64,
    pub biodiesel_increment_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostYear {
    pub year: i32,
    pub nominal: Components,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub npv_total: f64,
    pub npv_by_component: Components,
    /// Rs/kWh; absent when no energy was delivered.
    pub levelized_existing: Option<f64>,
    pub levelized_new: Option<f64>,
    /// Nominal cash flows by year, including post-2030 years when full-life
    /// annuities are counted.
    pub annual: Vec<CostYear>,
}

struct Flows {
    first: i32,
    years: Vec<Components>,
}

impl Flows {
    fn new(last: i32) -> Self {
        Self {
            first: FIRST_YEAR,
            years: vec![Components::default(); (last - FIRST_YEAR + 1) as usize],
        }
    }

    fn at(&mut self, year: i32) -> &mut Components {
        &mut self.years[(year - self.first) as usize]
    }

    /// Spread an annuity starting in `year` over `life` payments, truncated
    /// to the flow horizon.
    fn annuity(&mut self, year: i32, principal: f64, rate: f64, life: u32, field: fn(&mut Components) -> &mut f64) {
        if principal == 0.0 {
            return;
        }
        let pay = annuity_payment(principal, rate, life);
        let last = (year + life as i32 - 1).min(self.first + self.years.len() as i32 - 1);
        for y in year..=last {
            *field(self.at(y)) += pay;
        }
    }
}

fn fossil_cost(p: &ScenarioParams, e: &FossilEnergy, year: i32) -> (f64, f64, f64) {
    let kwh = 1e3;
    let coal = (e.coal_2019 * fuel_price_path(p.fuel_price_coal_2019, p.fuel_escalation_coal, year)
        + e.coal_slack * fuel_price_path(p.fuel_price_coal_slack, p.fuel_escalation_coal, year))
        * kwh
        / (1.0 - p.aux_coal);
    let gas_2019 = e.gas_2019 * fuel_price_path(p.fuel_price_gas_2019, p.fuel_escalation_gas, year) * kwh
        / (1.0 - p.aux_gas);
    let gas_nonapm = e.gas_slack * fuel_price_path(p.fuel_price_gas_nonapm, p.fuel_escalation_gas, year) * kwh
        / (1.0 - p.aux_gas);
    (coal, gas_2019, gas_nonapm)
}

/// Discounted cost of RE expansion, existing-fleet fuel and NEW supply.
///
/// Existing capacity is sunk. Capex is annuitized at the WACC from the build
/// year; payments after 2030 are dropped unless `full_life_annuities` is set.
/// Feedback-loop fuel changes are charged (or credited) to `new_fuel`.
pub fn npv_system_cost(p: &ScenarioParams, option: NewOption, years: &[YearOutcome]) -> Result<CostReport> {
    for (i, y) in crate::horizon().enumerate() {
        if years.get(i).map(|o| o.year) != Some(y) {
            return Err(Error::Integrity(format!("cost model has no outcome for {y}")));
        }
    }
    if years.len() != crate::horizon().count() {
        return Err(Error::Integrity("cost model given years outside the horizon".into()));
    }

    let thermal = p.thermal(option);
    let bio = p.biodiesel();
    let longest = [
        p.re_life_years,
        p.battery_life_years,
        p.inverter_life_years,
        thermal.map_or(0, |t| t.life_years),
        bio.life_years,
    ]
    .into_iter()
    .max()
    .unwrap_or(1);
    let last = if p.full_life_annuities {
        LAST_YEAR + longest as i32 - 1
    } else {
        LAST_YEAR
    };
    let mut flows = Flows::new(last);
    let base = &years[0];
    let kw = 1e3;
    let mut om_base_new = Vec::<(i32, f64)>::new();
    let mut om_base_bio = Vec::<(i32, f64)>::new();

    for (i, o) in years.iter().enumerate() {
        let y = o.year;
        let infl = (1.0 + p.om_inflation).powi(y - FIRST_YEAR);

        if i > 0 {
            let prev = &years[i - 1];
            let added_solar = (o.solar_gw - prev.solar_gw).max(0.0) * 1e3;
            let added_wind = (o.wind_gw - prev.wind_gw).max(0.0) * 1e3;
            let principal = added_solar * solar_capex(p, y) + added_wind * wind_capex(p, y);
            flows.annuity(y, principal, p.wacc, p.re_life_years, |c| &mut c.re_capex);
        }
        flows.at(y).re_om = ((o.solar_gw - base.solar_gw).max(0.0) * 1e3 * p.solar_om
            + (o.wind_gw - base.wind_gw).max(0.0) * 1e3 * p.wind_om)
            * infl;

        let (coal, gas19, gas_na) = fossil_cost(p, &o.fossil_mwh, y);
        let c = flows.at(y);
        c.coal_fuel = coal;
        c.gas_fuel_2019 = gas19;
        c.gas_fuel_nonapm = gas_na;

        let (sc, sg19, sgna) = fossil_cost(p, &o.fossil_shift_mwh, y);
        let mut new_fuel = sc + sg19 + sgna;
        match thermal {
            Some(spec) => {
                new_fuel += o.new_output_mwh * kw / (1.0 - spec.aux) * thermal_fuel_price(p, &spec, y);
                let principal = o.thermal_increment_mw * fuel_price_path(spec.capex_2021, spec.capex_escalation, y);
                flows.annuity(y, principal, p.wacc, spec.life_years, |c| &mut c.new_capex);
                om_base_new.push((y, principal * spec.om_rate));
            }
            None => {
                let cells = o.battery_increment_mwh * kw * battery_price_path(p, y);
                let inverter = o.inverter_increment_mw * kw * p.inverter_capex;
                let solar = o.dedicated_solar_increment_gw * 1e3 * solar_capex(p, y);
                flows.annuity(y, cells, p.wacc, p.battery_life_years, |c| &mut c.new_capex);
                flows.annuity(y, inverter, p.wacc, p.inverter_life_years, |c| &mut c.new_capex);
                flows.annuity(y, solar, p.wacc, p.re_life_years, |c| &mut c.new_capex);
                om_base_new.push((y, (cells + inverter) * p.battery_om_rate));
                flows.at(y).new_om += o.dedicated_solar_gw * 1e3 * p.solar_om * infl;
            }
        }
        flows.at(y).new_fuel = new_fuel;

        let bio_capex = o.biodiesel_increment_mw * fuel_price_path(bio.capex_2021, bio.capex_escalation, y);
        flows.annuity(y, bio_capex, p.wacc, bio.life_years, |c| &mut c.biodiesel);
        om_base_bio.push((y, bio_capex * bio.om_rate));
        flows.at(y).biodiesel +=
            o.biodiesel_mwh * kw / (1.0 - bio.aux) * thermal_fuel_price(p, &bio, y);
    }

    // O&M on NEW capex runs for every modelled year after the build,
    // inflating from the build year.
    for year in crate::horizon() {
        let om: f64 = om_base_new
            .iter()
            .filter(|(b, _)| *b <= year)
            .map(|(b, v)| v * (1.0 + p.om_inflation).powi(year - b))
            .sum();
        let om_bio: f64 = om_base_bio
            .iter()
            .filter(|(b, _)| *b <= year)
            .map(|(b, v)| v * (1.0 + p.om_inflation).powi(year - b))
            .sum();
        let c = flows.at(year);
        c.new_om += om;
        c.biodiesel += om_bio;
    }

    let mut npv = Components::default();
    let annual: Vec<CostYear> = flows
        .years
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let year = FIRST_YEAR + i as i32;
            npv.add_scaled(c, discount_factor(p.discount_rate, year));
            CostYear { year, nominal: *c }
        })
        .collect();

    let horizon_flows = || annual.iter().filter(|c| c.year <= LAST_YEAR);
    let existing_energy: Vec<(i32, f64)> = years
        .iter()
        .map(|o| {
            let f = &o.fossil_mwh;
            (o.year, (o.must_run_mwh + f.coal_2019 + f.coal_slack + f.gas_2019 + f.gas_slack) * kw)
        })
        .collect();
    let existing_cost: Vec<(i32, f64)> = horizon_flows().map(|c| (c.year, c.nominal.existing())).collect();
    let new_energy: Vec<(i32, f64)> = years
        .iter()
        .map(|o| (o.year, (o.new_output_mwh + o.biodiesel_mwh) * kw))
        .collect();
    let new_cost: Vec<(i32, f64)> = horizon_flows().map(|c| (c.year, c.nominal.new_supply())).collect();

    Ok(CostReport {
        npv_total: npv.total(),
        npv_by_component: npv,
        levelized_existing: levelized_cost(&existing_cost, &existing_energy, p.discount_rate).ok(),
        levelized_new: levelized_cost(&new_cost, &new_energy, p.discount_rate).ok(),
        annual,
    })
}

/// One scenario's position on the cost frontier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierEntry {
    pub scenario: usize,
    pub key: String,
    pub re_2030: f64,
    pub new_option: NewOption,
    pub npv_total: f64,
    /// Peak installed NEW capacity, MW.
    pub new_capacity_mw: f64,
    /// Total RE curtailment over the horizon, TWh.
    pub curtailment_twh: f64,
    pub npv_by_component: Components,
    pub levelized_existing: Option<f64>,
    pub levelized_new: Option<f64>,
}

fn frontier_order(a: &FrontierEntry, b: &FrontierEntry) -> Ordering {
    a.npv_total
        .total_cmp(&b.npv_total)
        .then(a.new_capacity_mw.total_cmp(&b.new_capacity_mw))
        .then(a.curtailment_twh.total_cmp(&b.curtailment_twh))
        .then(a.scenario.cmp(&b.scenario))
}

/// Rank by NPV, then lower NEW capacity, then lower curtailment.
pub fn frontier(mut entries: Vec<FrontierEntry>) -> Vec<FrontierEntry> {
    entries.sort_by(frontier_order);
    entries
}

/// Cheapest entry per (2030 RE, NEW option) cell, ordered by RE then option.
pub fn frontier_cells(entries: &[FrontierEntry]) -> Vec<FrontierEntry> {
    let mut best: Vec<FrontierEntry> = Vec::new();
    for e in entries {
        match best
            .iter_mut()
            .find(|b| b.re_2030 == e.re_2030 && b.new_option == e.new_option)
        {
            Some(b) if frontier_order(e, b) == Ordering::Less => *b = e.clone(),
            Some(_) => {}
            None => best.push(e.clone()),
        }
    }
    best.sort_by(|a, b| a.re_2030.total_cmp(&b.re_2030).then(a.new_option.cmp(&b.new_option)));
    best
}
