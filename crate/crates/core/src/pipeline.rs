//! End-to-end scenario runs: base data → despatch for every year → NEW
//! supply sizing → costs, and the parallel driver over a scenario grid.

use std::path::Path;

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispatch::{
    buffer_check, coal_daily_max, compute_unmet, ramp_audit, BufferReport, CoalFleet, DispatchYear,
    RampHistogram, Tranche,
};
use crate::economics::{npv_system_cost, CostReport, FossilEnergy, FrontierEntry, YearOutcome};
use crate::newsupply::{
    coal_peak_bonus, displace_gas_with_new_coal, displace_with_battery, residual_from, serve_unmet,
    simulate_soc, size_battery, size_dedicated_solar, size_dedicated_solar_relaxed, size_new_capacity,
    BatterySpec, DedicatedSolar, SocTrace,
};
use crate::scenario::{
    build_capacity_path, build_year_inputs, CapacityPath, NewOption, Scenario, ScenarioParams, ShapeSet,
};
use crate::series::{energy_mwh, SLOT_HOURS};
use crate::shapes::{
    clean_series, fill_all_gaps, infer_timeseries_year, load_shape_csv, load_timeseries_csv, synth_shapes,
    synth_solar_shape, BaseYearData, PerMwShape, ResidualReport,
};
use crate::{Error, Result};

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const SOLAR_SHAPE_FILE: &str = "solar_shape.csv";

const DUST_MW: f64 = 1e-6;

/// Raw base-year inputs shared by every scenario. Cleaning depends on
/// scenario parameters and happens per run.
#[derive(Debug, Clone)]
pub struct BaseInputs {
    pub raw: BaseYearData,
    pub historic_solar: PerMwShape,
}

impl BaseInputs {
    pub fn synthetic(seed: u64) -> Self {
        Self {
            raw: synth_shapes(seed, 1.0),
            historic_solar: synth_solar_shape(seed),
        }
    }

    /// Load `timeseries.csv` and `solar_shape.csv` from `dir`; the base year
    /// is taken from the first timestamp.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let ts = dir.join(TIMESERIES_FILE);
        let year = infer_timeseries_year(&ts)?;
        let raw = load_timeseries_csv(&ts, year)?;
        let historic_solar = load_shape_csv(dir.join(SOLAR_SHAPE_FILE))?;
        if historic_solar.len() != raw.len() {
            return Err(Error::Integrity(format!(
                "solar shape has {} slots but the {year} time series has {}",
                historic_solar.len(),
                raw.len()
            )));
        }
        info!("loaded base year {year} from {} ({} gaps)", dir.display(), raw.gaps.len());
        Ok(Self { raw, historic_solar })
    }

    pub fn year(&self) -> i32 {
        self.raw.year()
    }

    /// Gap-fill and RE-correct for one parameter set.
    pub fn clean(&self, p: &ScenarioParams) -> Result<BaseYearData> {
        match p.base_re_energy_gwh {
            Some(target) => clean_series(self.raw.clone(), p.max_gap_slots, target),
            None => fill_all_gaps(self.raw.clone(), p.max_gap_slots),
        }
    }
}

/// Physical summary of one modelled year after NEW supply.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct YearSummary {
    pub year: i32,
    pub demand_mwh: f64,
    pub re_mwh: f64,
    pub hydro_mwh: f64,
    pub nuclear_mwh: f64,
    pub coal_2019_mwh: f64,
    pub coal_slack_mwh: f64,
    pub gas_2019_mwh: f64,
    pub gas_slack_mwh: f64,
    pub new_mwh: f64,
    pub biodiesel_mwh: f64,
    /// RE curtailment after flex floors, before NEW supply.
    pub curtailment_mwh: f64,
    pub flex_curtailment_mwh: f64,
    /// Curtailed RE stored by the battery.
    pub battery_absorbed_mwh: f64,
    /// Curtailment avoided by lowering coal peaks.
    pub bonus_mwh: f64,
    pub net_curtailment_mwh: f64,
    /// Unmet demand before NEW supply.
    pub unmet_mwh: f64,
    pub peak_unmet_mw: f64,
    pub requirement_mw: f64,
    pub secondary_unmet_mwh: f64,
    pub coal_capacity_mw: f64,
    pub coal_plf: f64,
    pub peak_coal_mw: f64,
    pub relaxed_slots: usize,
    pub displaced_gas_mwh: f64,
    pub displaced_coal_mwh: f64,
    /// Largest buffer shortfall left once NEW supply is in place.
    pub residual_shortfall_mw: f64,
}

/// NEW supply decisions for one year. Capacities are cumulative.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NewYear {
    pub year: i32,
    pub required_mw: f64,
    /// Gross thermal MW, or battery inverter MW.
    pub installed_mw: f64,
    pub increment_mw: f64,
    pub battery: Option<BatterySpec>,
    pub battery_increment_mwh: f64,
    pub dedicated_solar: Option<DedicatedSolar>,
    pub dedicated_solar_gw: f64,
    pub output_mwh: f64,
    pub secondary_unmet_mwh: f64,
    pub secondary_peak_mw: f64,
    pub biodiesel_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewSupplyPlan {
    pub option: NewOption,
    pub years: Vec<NewYear>,
    pub diagnostics: Vec<String>,
}

/// Slot-level results for one year of one scenario.
#[derive(Debug, Clone)]
pub struct YearDetail {
    pub year: i32,
    /// Despatch after NEW supply; biodiesel is not a tranche.
    pub dispatch: DispatchYear,
    pub unmet_before_new: Vec<f64>,
    pub biodiesel_mw: Vec<f64>,
    pub soc: Option<SocTrace>,
    pub ramp: RampHistogram,
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub index: usize,
    pub key: String,
    pub params: ScenarioParams,
    pub base_residual: ResidualReport,
    pub capacity: CapacityPath,
    pub annual: Vec<YearSummary>,
    pub plan: NewSupplyPlan,
    pub cost: CostReport,
    pub detail: Option<YearDetail>,
}

impl ScenarioResult {
    pub fn frontier_entry(&self) -> FrontierEntry {
        FrontierEntry {
            scenario: self.index,
            key: self.key.clone(),
            re_2030: self.params.re_2030,
            new_option: self.params.new_option,
            npv_total: self.cost.npv_total,
            new_capacity_mw: self.plan.years.last().map_or(0.0, |y| y.installed_mw),
            curtailment_twh: self.annual.iter().map(|y| y.net_curtailment_mwh).sum::<f64>() * 1e-6,
            npv_by_component: self.cost.npv_by_component,
            levelized_existing: self.cost.levelized_existing,
            levelized_new: self.cost.levelized_new,
        }
    }
}

fn fossil(dy: &DispatchYear) -> FossilEnergy {
    FossilEnergy {
        coal_2019: dy.energy_mwh(Tranche::Coal2019),
        coal_slack: dy.energy_mwh(Tranche::CoalSlack),
        gas_2019: dy.energy_mwh(Tranche::Gas2019),
        gas_slack: dy.energy_mwh(Tranche::GasSlack),
    }
}

fn fossil_delta(after: &FossilEnergy, before: &FossilEnergy) -> FossilEnergy {
    FossilEnergy {
        coal_2019: after.coal_2019 - before.coal_2019,
        coal_slack: after.coal_slack - before.coal_slack,
        gas_2019: after.gas_2019 - before.gas_2019,
        gas_slack: after.gas_slack - before.gas_slack,
    }
}

/// A year after the pre-NEW despatch.
struct Despatched {
    dy: DispatchYear,
    buffer: BufferReport,
    unmet: Vec<f64>,
    requirement: f64,
    dedicated_solar: Vec<f64>,
    coal_capacity_mw: f64,
    solar_gw: f64,
    wind_gw: f64,
}

/// NEW-supply bookkeeping carried between years.
#[derive(Default)]
struct Installed {
    battery: Option<BatterySpec>,
    dedicated_solar_gw: f64,
    biodiesel_mw: f64,
}

/// Run one scenario over the horizon. `detail_year` keeps slot-level
/// results for that year.
pub fn run_scenario(base: &BaseInputs, scenario: &Scenario, detail_year: Option<i32>) -> Result<ScenarioResult> {
    let p = &scenario.params;
    p.validate()?;
    let data = base.clean(p)?;
    let base_residual = data.supply_residual(p.residual_tolerance);
    if base_residual.slots_over_tolerance > 0 {
        debug!(
            "scenario {}: {} base-year slots outside the supply residual tolerance",
            scenario.index, base_residual.slots_over_tolerance
        );
    }
    let shapes = ShapeSet::prepare(&data, &base.historic_solar, p)?;
    let path = build_capacity_path(p)?;

    let mut years = Vec::new();
    for year in crate::horizon() {
        let inputs = build_year_inputs(p, &data, &shapes, &path, year)?;
        let dy = DispatchYear::run(year, (&inputs).into(), p.flex_limit);
        let buffer = buffer_check(&dy, p.grid_buffer, 0.0);
        let (unmet, requirement) = compute_unmet(&dy, &buffer);
        years.push(Despatched {
            coal_capacity_mw: inputs.coal_cap_mw(),
            solar_gw: inputs.capacity.solar_gw,
            wind_gw: inputs.capacity.wind_gw,
            dedicated_solar: inputs.dedicated_solar,
            dy,
            buffer,
            unmet,
            requirement,
        });
    }

    let option = p.new_option;
    let thermal = p.thermal(option);
    let thermal_steps = thermal.map(|spec| {
        let fraction = if option == NewOption::Coal { p.new_coal_size_fraction } else { 1.0 };
        let req: Vec<(i32, f64)> = years.iter().map(|d| (d.dy.year, fraction * d.requirement)).collect();
        size_new_capacity(&req, spec.aux)
    });
    let fleet = if option == NewOption::Coal { CoalFleet::WithNew } else { CoalFleet::Existing };

    let mut plan = NewSupplyPlan {
        option,
        years: Vec::new(),
        diagnostics: Vec::new(),
    };
    let mut annual = Vec::new();
    let mut outcomes = Vec::new();
    let mut detail = None;
    let mut installed = Installed::default();

    for (k, d) in years.into_iter().enumerate() {
        let Despatched {
            mut dy,
            buffer,
            unmet,
            requirement,
            dedicated_solar,
            coal_capacity_mw,
            solar_gw,
            wind_gw,
        } = d;
        let year = dy.year;
        let baseline = fossil(&dy);
        let must_run = dy.energy_mwh(Tranche::Re) + dy.energy_mwh(Tranche::Hydro) + dy.energy_mwh(Tranche::Nuclear);
        let curtailment_mwh = dy.curtailment_mwh();
        let flex_curtailment_mwh = energy_mwh(&dy.flex_curtailment);

        let mut ny = NewYear {
            year,
            required_mw: requirement,
            ..Default::default()
        };
        let mut outcome = YearOutcome {
            year,
            solar_gw,
            wind_gw,
            fossil_mwh: baseline,
            must_run_mwh: must_run,
            ..Default::default()
        };
        let mut summary = YearSummary {
            year,
            curtailment_mwh,
            flex_curtailment_mwh,
            unmet_mwh: energy_mwh(&unmet),
            peak_unmet_mw: unmet.iter().copied().fold(0.0, f64::max),
            requirement_mw: requirement,
            coal_capacity_mw,
            ..Default::default()
        };
        let mut soc = None;
        let new_capacity_mw;

        match (&thermal, &thermal_steps) {
            (Some(spec), Some(steps)) => {
                let step = steps[k];
                let net = step.installed_gross_mw * (1.0 - spec.aux);
                let output: Vec<f64> = unmet.iter().map(|u| u.min(net)).collect();
                serve_unmet(&mut dy, &output);
                dy.capacity[Tranche::New].iter_mut().for_each(|c| *c = net);
                if option == NewOption::Coal {
                    summary.displaced_gas_mwh = displace_gas_with_new_coal(net, &mut dy, p.flex_limit);
                }
                outcome.fossil_shift_mwh = fossil_delta(&fossil(&dy), &baseline);
                outcome.new_output_mwh = dy.energy_mwh(Tranche::New);
                outcome.thermal_increment_mw = step.increment_gross_mw;
                ny.installed_mw = step.installed_gross_mw;
                ny.increment_mw = step.increment_gross_mw;
                new_capacity_mw = net;
            }
            _ => {
                let full = size_battery(&unmet, &buffer.shortfall, p)?;
                let battery = match installed.battery {
                    Some(prev) => full.max_with(&prev),
                    None => full,
                };
                let prev = installed.battery.unwrap_or(BatterySpec {
                    energy_mwh: 0.0,
                    inverter_mw: 0.0,
                    ..battery
                });
                if !battery.is_empty() {
                    let curtailed = dy.curtailment.clone();
                    let sized = match size_dedicated_solar(
                        &battery,
                        &curtailed,
                        &unmet,
                        &dedicated_solar,
                        p.dedicated_solar_extra,
                        p.cycle_boundary_slot,
                    ) {
                        Ok(s) => s,
                        Err(Error::Infeasible(msg)) => {
                            let note = format!("scenario {} year {year}: {msg}", scenario.index);
                            warn!("{note}");
                            plan.diagnostics.push(note);
                            size_dedicated_solar_relaxed(
                                &battery,
                                &curtailed,
                                &unmet,
                                &dedicated_solar,
                                p.dedicated_solar_extra,
                                p.cycle_boundary_slot,
                            )
                        }
                        Err(e) => return Err(e),
                    };
                    let solar_gw = installed.dedicated_solar_gw.max(sized.chosen_gw);
                    let solar_mw: Vec<f64> = dedicated_solar.iter().map(|s| s * solar_gw * 1e3).collect();
                    let trace = simulate_soc(&battery, &unmet, &curtailed, &solar_mw, p.cycle_boundary_slot);
                    serve_unmet(&mut dy, &trace.discharge_mw);
                    dy.capacity[Tranche::New].iter_mut().for_each(|c| *c = battery.inverter_mw);

                    let disp = displace_with_battery(&trace, &battery, &dy, p.cycle_boundary_slot);
                    let bonus: f64 = (0..dy.days())
                        .map(|day| coal_peak_bonus(&dy, day, disp.coal_by_day[day], p.flex_limit))
                        .sum();
                    outcome.fossil_shift_mwh = FossilEnergy {
                        coal_2019: -(disp.coal_mwh + bonus),
                        gas_slack: -disp.gas_nonapm_mwh,
                        ..Default::default()
                    };
                    summary.displaced_gas_mwh = disp.gas_nonapm_mwh;
                    summary.displaced_coal_mwh = disp.coal_mwh;
                    summary.bonus_mwh = bonus;
                    summary.battery_absorbed_mwh = energy_mwh(&trace.charge_from_re_mw);

                    outcome.dedicated_solar_increment_gw = solar_gw - installed.dedicated_solar_gw;
                    outcome.dedicated_solar_gw = solar_gw;
                    installed.dedicated_solar_gw = solar_gw;
                    ny.dedicated_solar = Some(sized);
                    soc = Some(trace);
                }
                outcome.new_output_mwh = dy.energy_mwh(Tranche::New);
                outcome.battery_increment_mwh = battery.energy_mwh - prev.energy_mwh;
                outcome.inverter_increment_mw = battery.inverter_mw - prev.inverter_mw;
                ny.installed_mw = battery.inverter_mw;
                ny.increment_mw = outcome.inverter_increment_mw;
                ny.battery_increment_mwh = outcome.battery_increment_mwh;
                ny.battery = Some(battery);
                ny.dedicated_solar_gw = installed.dedicated_solar_gw;
                installed.battery = Some(battery);
                new_capacity_mw = battery.inverter_mw;
            }
        }

        // Whatever NEW leaves unserved falls to biodiesel. Residues below
        // DUST_MW are SoC rounding and count as served by NEW.
        for i in 0..dy.len() {
            if dy.unmet[i] < DUST_MW {
                dy.supply[Tranche::New][i] += dy.unmet[i];
                dy.unmet[i] = 0.0;
            }
        }
        let biodiesel_mw = std::mem::replace(&mut dy.unmet, vec![0.0; unmet.len()]);
        let demand_mwh = energy_mwh(&dy.demand);
        let residual = residual_from(&biodiesel_mw, demand_mwh, p.diesel_aux);
        let bio_capacity = installed.biodiesel_mw.max(residual.biodiesel_capacity_mw);
        outcome.biodiesel_increment_mw = bio_capacity - installed.biodiesel_mw;
        outcome.biodiesel_mwh = residual.secondary_unmet_mwh;
        installed.biodiesel_mw = bio_capacity;
        ny.output_mwh = outcome.new_output_mwh;
        ny.secondary_unmet_mwh = residual.secondary_unmet_mwh;
        ny.secondary_peak_mw = residual.peak_mw;
        ny.biodiesel_mw = bio_capacity;

        let after = buffer_check(&dy, p.grid_buffer, new_capacity_mw);
        let coal_mwh = dy.energy_mwh(Tranche::Coal2019) + dy.energy_mwh(Tranche::CoalSlack);
        summary.demand_mwh = demand_mwh;
        summary.re_mwh = dy.energy_mwh(Tranche::Re);
        summary.hydro_mwh = dy.energy_mwh(Tranche::Hydro);
        summary.nuclear_mwh = dy.energy_mwh(Tranche::Nuclear);
        summary.coal_2019_mwh = dy.energy_mwh(Tranche::Coal2019);
        summary.coal_slack_mwh = dy.energy_mwh(Tranche::CoalSlack);
        summary.gas_2019_mwh = dy.energy_mwh(Tranche::Gas2019);
        summary.gas_slack_mwh = dy.energy_mwh(Tranche::GasSlack);
        summary.new_mwh = dy.energy_mwh(Tranche::New);
        summary.biodiesel_mwh = residual.secondary_unmet_mwh;
        summary.secondary_unmet_mwh = residual.secondary_unmet_mwh;
        summary.net_curtailment_mwh =
            (summary.curtailment_mwh - summary.battery_absorbed_mwh - summary.bonus_mwh).max(0.0);
        summary.coal_plf = if coal_capacity_mw > 0.0 {
            coal_mwh / (coal_capacity_mw * dy.len() as f64 * SLOT_HOURS)
        } else {
            0.0
        };
        summary.peak_coal_mw = (0..dy.len()).map(|i| dy.coal(CoalFleet::Existing, i)).fold(0.0, f64::max);
        summary.relaxed_slots = dy.relaxed_slots;
        summary.residual_shortfall_mw = after.shortfall.iter().copied().fold(0.0, f64::max);

        if detail_year == Some(year) {
            let nominal = coal_daily_max(&dy, fleet);
            let ramp = ramp_audit(&dy, &nominal, fleet)?;
            detail = Some(YearDetail {
                year,
                dispatch: dy,
                unmet_before_new: unmet,
                biodiesel_mw,
                soc,
                ramp,
            });
        }

        annual.push(summary);
        outcomes.push(outcome);
        plan.years.push(ny);
    }

    let cost = npv_system_cost(p, option, &outcomes)?;
    debug!("scenario {} ({}): NPV {:.4e}", scenario.index, scenario.key(), cost.npv_total);
    Ok(ScenarioResult {
        index: scenario.index,
        key: scenario.key(),
        params: p.clone(),
        base_residual,
        capacity: path,
        annual,
        plan,
        cost,
        detail,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Worker threads; 0 uses every core.
    pub parallelism: usize,
    pub detail_year: Option<i32>,
    /// Index of the scenario whose detail is kept.
    pub detail_scenario: usize,
}

#[derive(Debug)]
pub struct ScenarioOutcome {
    pub index: usize,
    pub key: String,
    pub result: Result<ScenarioResult>,
}

/// Run every scenario, isolating failures. Output order follows `scenarios`
/// whatever the thread count.
pub fn run_grid(base: &BaseInputs, scenarios: &[Scenario], opts: &RunOptions) -> Result<Vec<ScenarioOutcome>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.parallelism)
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start worker pool: {e}")))?;
    info!(
        "running {} scenarios on {} threads",
        scenarios.len(),
        pool.current_num_threads()
    );
    let outcomes = pool.install(|| {
        scenarios
            .par_iter()
            .map(|s| {
                let detail = opts.detail_year.filter(|_| s.index == opts.detail_scenario);
                let result = run_scenario(base, s, detail);
                if let Err(e) = &result {
                    warn!("scenario {} ({}) failed: {e}", s.index, s.key());
                }
                ScenarioOutcome {
                    index: s.index,
                    key: s.key(),
                    result,
                }
            })
            .collect()
    });
    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ParamGrid;
    use serde_json::json;

    fn scenario(params: ScenarioParams) -> Scenario {
        Scenario {
            index: 0,
            coords: Vec::new(),
            params,
        }
    }

    fn base() -> BaseInputs {
        BaseInputs::synthetic(7)
    }

    #[test]
    fn battery_run_serves_all_demand() {
        let r = run_scenario(&base(), &scenario(ScenarioParams::default()), Some(2030)).unwrap();
        assert_eq!(r.annual.len(), 10);
        let d = r.detail.as_ref().unwrap();
        assert!(d.dispatch.balance_error() < 1e-6);
        for y in &r.annual {
            let supplied = y.re_mwh
                + y.hydro_mwh
                + y.nuclear_mwh
                + y.coal_2019_mwh
                + y.coal_slack_mwh
                + y.gas_2019_mwh
                + y.gas_slack_mwh
                + y.new_mwh
                + y.biodiesel_mwh;
            assert!((supplied - y.demand_mwh).abs() < 1e-6 * y.demand_mwh, "year {}", y.year);
        }
        assert!(r.cost.npv_total.is_finite());
    }

    #[test]
    fn thermal_capacity_never_shrinks() {
        let p = ScenarioParams {
            new_option: NewOption::Ocgt,
            ..Default::default()
        };
        let r = run_scenario(&base(), &scenario(p), None).unwrap();
        for w in r.plan.years.windows(2) {
            assert!(w[1].installed_mw >= w[0].installed_mw);
        }
        // Full-size thermal leaves nothing for biodiesel.
        assert!(r.annual.iter().all(|y| y.secondary_unmet_mwh < 1e-6));
    }

    #[test]
    fn invalid_params_fail_the_scenario_only() {
        let mut grid = ParamGrid::new();
        grid.sweep("flex_limit", vec![json!(0.6), json!(1.5)], None).unwrap();
        let scenarios = grid.expand().unwrap();
        let out = run_grid(
            &base(),
            &scenarios,
            &RunOptions {
                parallelism: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(out[0].result.is_ok());
        assert!(matches!(out[1].result, Err(Error::Parameter(_))));
    }
}
