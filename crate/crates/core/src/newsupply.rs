//! NEW supply: capacity sizing, battery sizing and state-of-charge
//! simulation, dedicated charging solar, fossil displacement and the
//! coal-peak curtailment bonus, and under-sizing with biodiesel backup.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dispatch::{apply_coal_flex, CoalFleet, DispatchYear, Tranche};
use crate::scenario::{NewOption, ScenarioParams};
use crate::{Error, Result, SLOTS_PER_DAY, SLOT_HOURS};

/// One year of cumulative NEW capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityStep {
    pub year: i32,
    pub required_net_mw: f64,
    pub required_gross_mw: f64,
    pub installed_gross_mw: f64,
    pub increment_gross_mw: f64,
}

/// Cumulative builds from per-year net requirements. Capacity is never
/// retired inside the horizon.
pub fn size_new_capacity(requirements: &[(i32, f64)], aux: f64) -> Vec<CapacityStep> {
    let mut installed = 0.0f64;
    requirements
        .iter()
        .map(|&(year, net)| {
            let gross = net.max(0.0) / (1.0 - aux);
            let increment = (gross - installed).max(0.0);
            installed += increment;
            CapacityStep {
                year,
                required_net_mw: net.max(0.0),
                required_gross_mw: gross,
                installed_gross_mw: installed,
                increment_gross_mw: increment,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec {
    pub energy_mwh: f64,
    pub inverter_mw: f64,
    pub dod_buffer: f64,
    pub eta_charge: f64,
    pub eta_discharge: f64,
    pub size_fraction: f64,
}

impl BatterySpec {
    pub fn usable_mwh(&self) -> f64 {
        self.energy_mwh * (1.0 - self.dod_buffer)
    }

    pub fn floor_mwh(&self) -> f64 {
        self.energy_mwh * self.dod_buffer
    }

    /// Charging ceiling in MW: inverter rating and 1C.
    pub fn max_charge_mw(&self) -> f64 {
        self.inverter_mw.min(self.energy_mwh)
    }

    pub fn is_empty(&self) -> bool {
        self.energy_mwh <= 0.0
    }

    /// Same battery with capacities at least those of `other`.
    pub fn max_with(&self, other: &BatterySpec) -> BatterySpec {
        BatterySpec {
            energy_mwh: self.energy_mwh.max(other.energy_mwh),
            inverter_mw: self.inverter_mw.max(other.inverter_mw),
            ..*self
        }
    }
}

/// Index range of each daily cycle. Cycles start at `boundary` each day;
/// the slots before the first boundary form a short leading cycle.
pub fn cycles(n: usize, boundary: usize) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut next = boundary;
    while start < n {
        let end = if next == 0 { SLOTS_PER_DAY.min(n) } else { next.min(n) };
        if end > start {
            out.push(start..end);
        }
        start = end;
        next = end + SLOTS_PER_DAY;
        if end == n {
            break;
        }
    }
    out
}

/// Full-size battery from the residual, scaled by `size_fraction`.
///
/// The inverter covers the worst slot of unmet plus buffer shortfall; the
/// energy covers the largest cycle's unmet energy, and at least one slot at
/// the inverter-sizing slot, above the DoD floor after discharge losses.
pub fn size_battery(unmet: &[f64], shortfall: &[f64], p: &ScenarioParams) -> Result<BatterySpec> {
    let size_fraction = p.battery_size_fraction;
    if !(size_fraction > 0.0) {
        return Err(Error::Parameter(format!(
            "battery size fraction must be positive, got {size_fraction}"
        )));
    }
    let (eta_charge, eta_discharge) = p.efficiencies();
    let (peak_slot_mw, _) = unmet
        .iter()
        .zip(shortfall)
        .map(|(u, s)| u + s)
        .enumerate()
        .fold((0.0, 0), |(best, bi), (i, v)| if v > best { (v, i) } else { (best, bi) });
    let cycle_energy = cycles(unmet.len(), p.cycle_boundary_slot)
        .into_iter()
        .map(|r| unmet[r].iter().sum::<f64>() * SLOT_HOURS)
        .fold(0.0, f64::max);
    let energy_need = cycle_energy.max(peak_slot_mw * SLOT_HOURS);
    Ok(BatterySpec {
        energy_mwh: size_fraction * energy_need / ((1.0 - p.dod_buffer) * eta_discharge),
        inverter_mw: size_fraction * peak_slot_mw / eta_discharge,
        dod_buffer: p.dod_buffer,
        eta_charge,
        eta_discharge,
        size_fraction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChargeSource {
    Idle,
    Discharge,
    CurtailedRe,
    DedicatedSolar,
    Mixed,
}

impl ChargeSource {
    pub fn as_str(self) -> &'static str {
        match self {
            ChargeSource::Idle => "idle",
            ChargeSource::Discharge => "discharge",
            ChargeSource::CurtailedRe => "curtailed_re",
            ChargeSource::DedicatedSolar => "dedicated_solar",
            ChargeSource::Mixed => "mixed",
        }
    }
}

/// Chronological battery trace. `stored_mwh` is the physical state of
/// charge at the end of each slot; `soc_mwh` is the reporting view (usable
/// energy above the DoD floor, minus unserved energy so far in the cycle,
/// so it goes negative when the battery falls short).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SocTrace {
    pub stored_mwh: Vec<f64>,
    pub soc_mwh: Vec<f64>,
    /// AC power drawn for charging.
    pub charge_mw: Vec<f64>,
    pub charge_from_re_mw: Vec<f64>,
    pub charge_from_solar_mw: Vec<f64>,
    /// AC power delivered.
    pub discharge_mw: Vec<f64>,
    pub secondary_unmet_mw: Vec<f64>,
    /// Charging the sources could have supplied but the battery could not take.
    pub unused_charge_mw: Vec<f64>,
    pub source: Vec<ChargeSource>,
    pub initial_mwh: f64,
}

impl SocTrace {
    pub fn len(&self) -> usize {
        self.stored_mwh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stored_mwh.is_empty()
    }

    pub fn secondary_unmet_mwh(&self) -> f64 {
        crate::series::energy_mwh(&self.secondary_unmet_mw)
    }

    pub fn discharge_mwh(&self) -> f64 {
        crate::series::energy_mwh(&self.discharge_mw)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["slot", "soc_mwh", "charge_mw", "discharge_mw", "source", "secondary_unmet_mw"])?;
        for i in 0..self.len() {
            w.write_record([
                i.to_string(),
                self.soc_mwh[i].to_string(),
                self.charge_mw[i].to_string(),
                self.discharge_mw[i].to_string(),
                self.source[i].as_str().to_string(),
                self.secondary_unmet_mw[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Simulate the battery slot by slot, starting full.
///
/// Slots with unmet demand discharge (never charge); other slots charge
/// from curtailed RE first, then dedicated solar, within the inverter, 1C
/// and headroom limits.
pub fn simulate_soc(
    battery: &BatterySpec,
    unmet: &[f64],
    curtailed_re: &[f64],
    dedicated_solar: &[f64],
    cycle_boundary_slot: usize,
) -> SocTrace {
    let n = unmet.len();
    assert!(curtailed_re.len() == n && dedicated_solar.len() == n, "SoC inputs differ in length");
    let floor = battery.floor_mwh();
    let cap = battery.energy_mwh;
    let charge_limit = battery.max_charge_mw();
    let mut s = cap;
    let mut deficit = 0.0;
    let mut t = SocTrace {
        initial_mwh: cap,
        ..Default::default()
    };
    for i in 0..n {
        if i % SLOTS_PER_DAY == cycle_boundary_slot {
            deficit = 0.0;
        }
        let (mut charge, mut from_re, mut from_solar, mut discharge, mut secondary, mut unused) =
            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let source;
        if unmet[i] > 0.0 {
            let deliverable = if battery.eta_discharge > 0.0 {
                ((s - floor).max(0.0) * battery.eta_discharge / SLOT_HOURS).min(battery.inverter_mw)
            } else {
                0.0
            };
            discharge = unmet[i].min(deliverable);
            s -= discharge * SLOT_HOURS / battery.eta_discharge;
            if s < floor {
                s = floor;
            }
            secondary = unmet[i] - discharge;
            deficit += secondary * SLOT_HOURS;
            source = ChargeSource::Discharge;
        } else {
            let available = curtailed_re[i] + dedicated_solar[i];
            let possible = available.min(charge_limit);
            let headroom_mw = if battery.eta_charge > 0.0 {
                ((cap - s).max(0.0) / (SLOT_HOURS * battery.eta_charge)).max(0.0)
            } else {
                0.0
            };
            charge = possible.min(headroom_mw);
            from_re = charge.min(curtailed_re[i]);
            from_solar = charge - from_re;
            unused = possible - charge;
            s = (s + charge * SLOT_HOURS * battery.eta_charge).min(cap);
            source = match (from_re > 0.0, from_solar > 0.0) {
                (false, false) => ChargeSource::Idle,
                (true, false) => ChargeSource::CurtailedRe,
                (false, true) => ChargeSource::DedicatedSolar,
                (true, true) => ChargeSource::Mixed,
            };
        }
        t.stored_mwh.push(s);
        t.soc_mwh.push(s - floor - deficit);
        t.charge_mw.push(charge);
        t.charge_from_re_mw.push(from_re);
        t.charge_from_solar_mw.push(from_solar);
        t.discharge_mw.push(discharge);
        t.secondary_unmet_mw.push(secondary);
        t.unused_charge_mw.push(unused);
        t.source.push(source);
    }
    t
}

/// Dedicated charging solar, GW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DedicatedSolar {
    pub min_gw: f64,
    pub max_gw: f64,
    pub chosen_gw: f64,
    /// Secondary unmet energy left even with unlimited charging solar.
    pub unserved_at_unbounded_mwh: f64,
}

const SOLAR_TOLERANCE_GW: f64 = 0.1;

/// Size dedicated solar for the battery.
///
/// The minimum is the smallest capacity (to 0.1 GW, rounded up) whose
/// secondary unmet is no worse than with unlimited charging solar; the
/// maximum is the smallest capacity that refills the battery at cycle
/// boundaries as fully as unlimited solar would. Fails as infeasible when a
/// full-size battery leaves unmet demand even with unlimited solar.
pub fn size_dedicated_solar(
    battery: &BatterySpec,
    curtailed_re: &[f64],
    unmet: &[f64],
    solar_per_mw: &[f64],
    extra: f64,
    cycle_boundary_slot: usize,
) -> Result<DedicatedSolar> {
    let sized = size_dedicated_solar_relaxed(battery, curtailed_re, unmet, solar_per_mw, extra, cycle_boundary_slot);
    let tol = 1e-6 * (1.0 + crate::series::energy_mwh(unmet));
    if battery.size_fraction >= 1.0 && sized.unserved_at_unbounded_mwh > tol {
        return Err(Error::Infeasible(format!(
            "battery leaves {:.1} MWh unserved even with unlimited charging solar",
            sized.unserved_at_unbounded_mwh
        )));
    }
    Ok(sized)
}

/// [`size_dedicated_solar`] without the full-size feasibility check.
pub fn size_dedicated_solar_relaxed(
    battery: &BatterySpec,
    curtailed_re: &[f64],
    unmet: &[f64],
    solar_per_mw: &[f64],
    extra: f64,
    cycle_boundary_slot: usize,
) -> DedicatedSolar {
    let zero = DedicatedSolar {
        min_gw: 0.0,
        max_gw: 0.0,
        chosen_gw: 0.0,
        unserved_at_unbounded_mwh: crate::series::energy_mwh(unmet),
    };
    if battery.is_empty() {
        return zero;
    }
    let boundaries: Vec<usize> = cycles(unmet.len(), cycle_boundary_slot)
        .iter()
        .map(|r| r.end - 1)
        .collect();
    let run = |gw: f64| -> (f64, f64) {
        let solar: Vec<f64> = solar_per_mw
            .iter()
            .map(|s| if gw.is_infinite() { if *s > 0.0 { f64::INFINITY } else { 0.0 } } else { gw * 1e3 * s })
            .collect();
        let t = simulate_soc(battery, unmet, curtailed_re, &solar, cycle_boundary_slot);
        let refill: f64 = boundaries.iter().map(|&i| t.stored_mwh[i]).sum();
        (t.secondary_unmet_mwh(), refill)
    };

    let (sec_inf, refill_inf) = run(f64::INFINITY);
    let eps_sec = 1e-9 * (1.0 + crate::series::energy_mwh(unmet));
    let eps_refill = 1e-9 * (1.0 + battery.energy_mwh * boundaries.len() as f64);

    // Capacity above which every sunny slot already saturates the charger.
    let min_positive = solar_per_mw.iter().copied().filter(|s| *s > 0.0).fold(f64::INFINITY, f64::min);
    let saturating_gw = if min_positive.is_finite() {
        battery.max_charge_mw() / min_positive / 1e3
    } else {
        0.0
    };

    let smallest = |ok: &dyn Fn(f64) -> bool| -> f64 {
        if ok(0.0) {
            return 0.0;
        }
        let mut lo = 0.0;
        let mut hi = SOLAR_TOLERANCE_GW;
        while !ok(hi) {
            lo = hi;
            hi *= 2.0;
            if hi >= saturating_gw {
                hi = saturating_gw;
                break;
            }
        }
        while hi - lo > SOLAR_TOLERANCE_GW {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let min_gw = smallest(&|gw| run(gw).0 <= sec_inf + eps_sec);
    let max_gw = smallest(&|gw| run(gw).1 >= refill_inf - eps_refill).max(min_gw);
    DedicatedSolar {
        min_gw,
        max_gw,
        chosen_gw: min_gw + extra * (max_gw - min_gw),
        unserved_at_unbounded_mwh: sec_inf,
    }
}

/// Fossil energy displaced by spare battery output.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Displacement {
    pub spare_mwh: f64,
    pub gas_nonapm_mwh: f64,
    pub coal_mwh: f64,
    /// Coal displaced, allocated to calendar days.
    pub coal_by_day: Vec<f64>,
}

/// Per cycle, spare battery energy is the smaller of the charge left unused
/// at the cycle's lowest point and the extra charging the sources could
/// have delivered; it displaces slack gas in the cycle first, then coal.
pub fn displace_with_battery(
    trace: &SocTrace,
    battery: &BatterySpec,
    dy: &DispatchYear,
    cycle_boundary_slot: usize,
) -> Displacement {
    let mut out = Displacement {
        coal_by_day: vec![0.0; dy.days()],
        ..Default::default()
    };
    if battery.is_empty() {
        return out;
    }
    let floor = battery.floor_mwh();
    for r in cycles(dy.len(), cycle_boundary_slot) {
        let mut lowest = if r.start == 0 { trace.initial_mwh } else { trace.stored_mwh[r.start - 1] };
        for i in r.clone() {
            lowest = lowest.min(trace.stored_mwh[i]);
        }
        let unused_charge: f64 = trace.unused_charge_mw[r.clone()].iter().sum::<f64>() * SLOT_HOURS * battery.eta_charge;
        let spare = (lowest - floor).max(0.0).min(unused_charge) * battery.eta_discharge;
        if spare <= 0.0 {
            continue;
        }
        let gas: f64 = dy.supply[Tranche::GasSlack][r.clone()].iter().sum::<f64>() * SLOT_HOURS;
        let coal_slots: Vec<f64> = r.clone().map(|i| dy.coal(CoalFleet::Existing, i)).collect();
        let coal: f64 = coal_slots.iter().sum::<f64>() * SLOT_HOURS;
        let g = spare.min(gas);
        let c = (spare - g).min(coal);
        out.spare_mwh += spare;
        out.gas_nonapm_mwh += g;
        out.coal_mwh += c;
        if c > 0.0 {
            for (k, i) in r.clone().enumerate() {
                out.coal_by_day[i / SLOTS_PER_DAY] += c * coal_slots[k] * SLOT_HOURS / coal;
            }
        }
    }
    out
}

/// Lowered daily maximum after taking `displaced_mwh` off the top of the
/// day's descending coal curve.
pub fn lowered_max(coal: &[f64], displaced_mwh: f64) -> f64 {
    let mut sorted = coal.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let top = sorted.first().copied().unwrap_or(0.0);
    if displaced_mwh <= 0.0 {
        return top;
    }
    let mut sum = 0.0;
    for k in 0..sorted.len() {
        sum += sorted[k];
        let next = sorted.get(k + 1).copied().unwrap_or(0.0);
        // Area above `next` using the top k+1 slots.
        let area = (sum - (k + 1) as f64 * next) * SLOT_HOURS;
        if area >= displaced_mwh {
            return (sum - displaced_mwh / SLOT_HOURS) / (k + 1) as f64;
        }
    }
    0.0
}

/// RE curtailment avoided on one day when displacement lowers the daily
/// coal maximum, and with it the flex floor.
///
/// Each flexed slot's raise is recomputed against the lower floor and the
/// cuts are re-applied in their original order (gas, RE, hydro), so a
/// smaller raise restores hydro first, then RE. Only the RE part counts.
pub fn coal_peak_bonus(dy: &DispatchYear, day: usize, displaced_mwh: f64, flex_limit: f64) -> f64 {
    if displaced_mwh <= 0.0 {
        return 0.0;
    }
    let range = day * SLOTS_PER_DAY..(day + 1) * SLOTS_PER_DAY;
    let coal: Vec<f64> = range.clone().map(|i| dy.coal(CoalFleet::Existing, i)).collect();
    let old_max = coal.iter().copied().fold(0.0, f64::max);
    let new_max = lowered_max(&coal, displaced_mwh);
    debug_assert!(new_max <= old_max);
    let new_floor = flex_limit * new_max;
    range
        .map(|i| {
            let raise = dy.flex_raise[i];
            if raise <= 0.0 {
                return 0.0;
            }
            let pre = coal[i - day * SLOTS_PER_DAY] - raise;
            let new_raise = raise.min((new_floor - pre).max(0.0));
            let gas_cut = dy.flex_gas_cut[i];
            let re_cut = dy.flex_curtailment[i];
            let new_re_cut = (new_raise - gas_cut).clamp(0.0, re_cut);
            re_cut - new_re_cut
        })
        .sum::<f64>()
        * SLOT_HOURS
}

/// Slack gas displaced by spare NEW-coal capacity, then flex floors re-run
/// for the combined coal fleet. `dy.supply[New]` must already hold NEW
/// coal's output serving unmet demand. Returns displaced gas, MWh.
pub fn displace_gas_with_new_coal(new_coal_mw: f64, dy: &mut DispatchYear, flex_limit: f64) -> f64 {
    let mut displaced = 0.0;
    for i in 0..dy.len() {
        dy.capacity[Tranche::New][i] = new_coal_mw;
        let spare = (new_coal_mw - dy.supply[Tranche::New][i]).max(0.0);
        let d = spare.min(dy.supply[Tranche::GasSlack][i]);
        dy.supply[Tranche::GasSlack][i] -= d;
        dy.supply[Tranche::New][i] += d;
        displaced += d * SLOT_HOURS;
    }
    apply_coal_flex(dy, flex_limit, CoalFleet::WithNew);
    displaced
}

/// Serve unmet demand from NEW output, slot-wise capped by `capacity_mw`.
pub fn serve_unmet(dy: &mut DispatchYear, new_output: &[f64]) {
    for (i, &o) in new_output.iter().enumerate() {
        let served = o.min(dy.unmet[i]).max(0.0);
        dy.supply[Tranche::New][i] += served;
        dy.unmet[i] -= served;
    }
}

/// Residual demand left by under-sized NEW supply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub secondary_unmet_mwh: f64,
    pub peak_mw: f64,
    pub biodiesel_capacity_mw: f64,
    /// Secondary unmet as a share of annual demand.
    pub share_of_demand: f64,
}

/// Secondary unmet demand for NEW supply at `size_fraction` of full size.
///
/// Batteries are simulated with unlimited charging so that only the size
/// reduction shows; thermal NEW serves `min(unmet, fraction * capacity)`.
pub fn undersize_residual(
    option: NewOption,
    unmet: &[f64],
    shortfall: &[f64],
    demand_mwh: f64,
    size_fraction: f64,
    p: &ScenarioParams,
) -> Result<Residual> {
    if !(size_fraction > 0.0 && size_fraction <= 1.0) {
        return Err(Error::Parameter(format!("size fraction {size_fraction} not in (0, 1]")));
    }
    let secondary: Vec<f64> = match option {
        NewOption::BatteryRe => {
            let full = ScenarioParams {
                battery_size_fraction: size_fraction,
                ..p.clone()
            };
            let battery = size_battery(unmet, shortfall, &full)?;
            let unlimited = vec![f64::INFINITY; unmet.len()];
            let zero = vec![0.0; unmet.len()];
            simulate_soc(&battery, unmet, &unlimited, &zero, p.cycle_boundary_slot).secondary_unmet_mw
        }
        _ => {
            let requirement = unmet
                .iter()
                .zip(shortfall)
                .map(|(u, s)| u + s)
                .fold(0.0, f64::max);
            let k = size_fraction * requirement;
            unmet.iter().map(|u| (u - k).max(0.0)).collect()
        }
    };
    Ok(residual_from(&secondary, demand_mwh, p.diesel_aux))
}

pub fn residual_from(secondary: &[f64], demand_mwh: f64, biodiesel_aux: f64) -> Residual {
    let secondary_unmet_mwh = crate::series::energy_mwh(secondary);
    let peak_mw = secondary.iter().copied().fold(0.0, f64::max);
    Residual {
        secondary_unmet_mwh,
        peak_mw,
        biodiesel_capacity_mw: peak_mw / (1.0 - biodiesel_aux),
        share_of_demand: if demand_mwh > 0.0 { secondary_unmet_mwh / demand_mwh } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::DespatchInputs;
    use crate::scenario::EfficiencySplit;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec(energy: f64, inverter: f64) -> BatterySpec {
        BatterySpec {
            energy_mwh: energy,
            inverter_mw: inverter,
            dod_buffer: 0.05,
            eta_charge: 0.9f64.sqrt(),
            eta_discharge: 0.9f64.sqrt(),
            size_fraction: 1.0,
        }
    }

    #[test]
    fn capacity_steps() {
        let steps = size_new_capacity(&[(2028, 0.0), (2029, 46_000.0), (2030, 30_000.0)], 0.08);
        assert_relative_eq!(steps[1].required_gross_mw, 50_000.0, max_relative = 1e-12);
        assert_relative_eq!(steps[1].increment_gross_mw, 50_000.0, max_relative = 1e-12);
        assert_eq!(steps[2].increment_gross_mw, 0.0);
        assert_relative_eq!(steps[2].installed_gross_mw, 50_000.0, max_relative = 1e-12);
    }

    #[test]
    fn cycle_ranges() {
        let c = cycles(96, 34);
        assert_eq!(c, vec![0..34, 34..82, 82..96]);
        assert_eq!(cycles(96, 0), vec![0..48, 48..96]);
    }

    fn single_slot_unmet() -> Vec<f64> {
        let mut u = vec![0.0; 96];
        u[40] = 1_000.0;
        u
    }

    #[test]
    fn battery_single_slot_all_on_charge() {
        let p = ScenarioParams {
            efficiency_split: EfficiencySplit::AllOnCharge,
            ..Default::default()
        };
        let u = single_slot_unmet();
        let b = size_battery(&u, &vec![0.0; 96], &p).unwrap();
        assert_relative_eq!(b.energy_mwh, 500.0 / 0.95, max_relative = 1e-12);
        assert!((b.energy_mwh - 526.3).abs() < 0.1);
        assert_relative_eq!(b.inverter_mw, 1_000.0, max_relative = 1e-12);
    }

    #[test]
    fn battery_single_slot_symmetric() {
        let p = ScenarioParams::default();
        let b = size_battery(&single_slot_unmet(), &vec![0.0; 96], &p).unwrap();
        let eta = 0.9f64.sqrt();
        assert_relative_eq!(b.energy_mwh, 500.0 / (0.95 * eta), max_relative = 1e-12);
        assert_relative_eq!(b.inverter_mw, 1_000.0 / eta, max_relative = 1e-12);
    }

    #[test]
    fn battery_zero_and_half() {
        let p = ScenarioParams::default();
        let z = vec![0.0; 96];
        let b = size_battery(&z, &z, &p).unwrap();
        assert_eq!((b.energy_mwh, b.inverter_mw), (0.0, 0.0));

        let full = size_battery(&single_slot_unmet(), &z, &p).unwrap();
        let half = size_battery(
            &single_slot_unmet(),
            &z,
            &ScenarioParams {
                battery_size_fraction: 0.5,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(half.energy_mwh, 0.5 * full.energy_mwh);
        assert_eq!(half.inverter_mw, 0.5 * full.inverter_mw);
        assert!(matches!(
            size_battery(
                &z,
                &z,
                &ScenarioParams {
                    battery_size_fraction: 0.0,
                    ..Default::default()
                }
            ),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn soc_constant_without_activity() {
        let b = spec(100.0, 50.0);
        let z = vec![0.0; 48];
        let t = simulate_soc(&b, &z, &z, &z, 34);
        assert!(t.stored_mwh.iter().all(|s| *s == 100.0));
    }

    #[test]
    fn soc_shortfall_is_secondary_unmet() {
        let b = spec(100.0, 1_000.0);
        let mut u = vec![0.0; 48];
        u[0] = 500.0;
        let z = vec![0.0; 48];
        let t = simulate_soc(&b, &u, &z, &z, 34);
        let deliverable = 95.0 * b.eta_discharge / 0.5;
        assert_relative_eq!(t.discharge_mw[0], deliverable, max_relative = 1e-12);
        assert_relative_eq!(t.secondary_unmet_mw[0], 500.0 - deliverable, max_relative = 1e-12);
        assert_relative_eq!(t.stored_mwh[0], 5.0, max_relative = 1e-9);
        assert!(t.soc_mwh[0] < 0.0);
    }

    /// Step-by-step recursion written independently of `simulate_soc`.
    fn oracle(b: &BatterySpec, u: &[f64], re: &[f64], solar: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut s = b.energy_mwh;
        let mut stored = vec![];
        let mut sec = vec![];
        for i in 0..u.len() {
            if u[i] > 0.0 {
                let energy_out = (u[i] * 0.5 / b.eta_discharge).min(s - b.floor_mwh()).min(b.inverter_mw * 0.5 / b.eta_discharge);
                s -= energy_out;
                sec.push(u[i] - energy_out * b.eta_discharge / 0.5);
            } else {
                let energy_in = ((re[i] + solar[i]).min(b.inverter_mw).min(b.energy_mwh) * 0.5 * b.eta_charge)
                    .min(b.energy_mwh - s);
                s += energy_in;
                sec.push(0.0);
            }
            stored.push(s);
        }
        (stored, sec)
    }

    #[test]
    fn soc_matches_recursion_over_three_days() {
        let b = spec(400.0, 150.0);
        let n = 144;
        let u: Vec<f64> = (0..n).map(|i| if (38..46).contains(&(i % 48)) { 60.0 + (i % 7) as f64 * 10.0 } else { 0.0 }).collect();
        let re: Vec<f64> = (0..n).map(|i| if (22..28).contains(&(i % 48)) { 40.0 } else { 0.0 }).collect();
        let solar: Vec<f64> = (0..n).map(|i| if (14..34).contains(&(i % 48)) { 30.0 } else { 0.0 }).collect();
        let t = simulate_soc(&b, &u, &re, &solar, 34);
        let (stored, sec) = oracle(&b, &u, &re, &solar);
        for i in 0..n {
            assert!((t.stored_mwh[i] - stored[i]).abs() < 1e-9, "slot {i}");
            assert!((t.secondary_unmet_mw[i] - sec[i]).abs() < 1e-9, "slot {i}");
        }
    }

    fn evening_unmet(days: usize) -> Vec<f64> {
        (0..days * 48)
            .map(|i| match i % 48 {
                37..=44 => 100.0 + 10.0 * ((i % 48) as f64 - 40.0).abs(),
                _ => 0.0,
            })
            .collect()
    }

    fn solar_shape(days: usize) -> Vec<f64> {
        (0..days * 48)
            .map(|i| {
                let h = (i % 48) as f64 * 0.5 + 0.25;
                if (6.0..18.0).contains(&h) {
                    (std::f64::consts::PI * (h - 6.0) / 12.0).sin() * 0.8
                } else {
                    0.0
                }
            })
            .collect()
    }

    #[test]
    fn dedicated_solar_endpoints() {
        let p = ScenarioParams::default();
        let u = evening_unmet(4);
        let z = vec![0.0; u.len()];
        let b = size_battery(&u, &z, &p).unwrap();
        let shape = solar_shape(4);

        let plenty: Vec<f64> = (0..u.len()).map(|i| if (20..30).contains(&(i % 48)) { 1e6 } else { 0.0 }).collect();
        let s = size_dedicated_solar(&b, &plenty, &u, &shape, 0.0, 34).unwrap();
        assert_eq!(s.min_gw, 0.0);

        let lo = size_dedicated_solar(&b, &z, &u, &shape, 0.0, 34).unwrap();
        let hi = size_dedicated_solar(&b, &z, &u, &shape, 1.0, 34).unwrap();
        assert!(lo.min_gw > 0.0);
        assert_eq!(lo.chosen_gw, lo.min_gw);
        assert_eq!(hi.chosen_gw, hi.max_gw);
        assert!(hi.max_gw >= hi.min_gw);
        let solar: Vec<f64> = shape.iter().map(|s| s * lo.min_gw * 1e3).collect();
        let t = simulate_soc(&b, &u, &z, &solar, 34);
        assert!(t.secondary_unmet_mwh() < 1e-6);
        let solar: Vec<f64> = shape.iter().map(|s| s * (lo.min_gw - 0.2).max(0.0) * 1e3).collect();
        assert!(simulate_soc(&b, &u, &z, &solar, 34).secondary_unmet_mwh() > 0.0);
    }

    #[test]
    fn displacement_priority() {
        // One 48-slot cycle with 4 MWh of slack gas and 100 MWh of coal.
        let n = 48;
        let mut gas = vec![0.0; n];
        gas[10] = 8.0;
        let coal = vec![200.0 / 48.0 * 1.0; n];
        let demand: Vec<f64> = gas.iter().zip(&coal).map(|(g, c)| g + c).collect();
        let z = vec![0.0; n];
        let dy = DispatchYear::merit(
            2021,
            DespatchInputs {
                demand: &demand,
                re: &z,
                hydro: &z,
                nuclear: &z,
                coal_2019: &coal,
                gas_2019: &z,
                coal_slack: &z,
                gas_slack: &gas,
                despatchable_mw: 1e3,
            },
        );
        let b = BatterySpec {
            energy_mwh: 20.0,
            inverter_mw: 100.0,
            dod_buffer: 0.5,
            eta_charge: 1.0,
            eta_discharge: 1.0,
            size_fraction: 1.0,
        };
        // Stays full, with 10 MWh above the floor and ample unused charge.
        let mut t = simulate_soc(&b, &z, &vec![100.0; n], &z, 0);
        assert!(t.stored_mwh.iter().all(|s| *s == 20.0));
        t.unused_charge_mw[0] = 100.0;
        let d = displace_with_battery(&t, &b, &dy, 0);
        assert_relative_eq!(d.spare_mwh, 10.0);
        assert_relative_eq!(d.gas_nonapm_mwh, 4.0);
        assert_relative_eq!(d.coal_mwh, 6.0);
        assert_relative_eq!(d.coal_by_day[0], 6.0);

        let none = displace_with_battery(&simulate_soc(&b, &z, &z, &z, 0), &b, &dy, 0);
        assert_eq!(none.spare_mwh, 0.0);
    }

    #[test]
    fn lowered_max_on_flat_and_peaked_days() {
        assert_relative_eq!(lowered_max(&[10.0; 48], 12.0), 9.5);
        let mut c = vec![50.0; 48];
        c[0] = 100.0;
        // 25 MWh off a 50 MW spike over half an hour.
        assert_relative_eq!(lowered_max(&c, 25.0), 50.0);
        assert_relative_eq!(lowered_max(&c, 10.0), 80.0);
        assert_eq!(lowered_max(&c, 0.0), 100.0);
        assert_eq!(lowered_max(&c, 1e9), 0.0);
    }

    #[test]
    fn bonus_zero_without_displacement() {
        let n = 48;
        let z = vec![0.0; n];
        let d = vec![100.0; n];
        let dy = DispatchYear::run(
            2021,
            DespatchInputs {
                demand: &d,
                re: &z,
                hydro: &z,
                nuclear: &z,
                coal_2019: &d,
                gas_2019: &z,
                coal_slack: &z,
                gas_slack: &z,
                despatchable_mw: 100.0,
            },
            0.6,
        );
        assert_eq!(coal_peak_bonus(&dy, 0, 0.0, 0.6), 0.0);
    }

    #[test]
    fn new_coal_gas_displacement() {
        let n = 48;
        let z = vec![0.0; n];
        let gas = vec![60.0; n];
        let coal = vec![100.0; n];
        let demand = vec![160.0; n];
        let mut dy = DispatchYear::run(
            2021,
            DespatchInputs {
                demand: &demand,
                re: &z,
                hydro: &z,
                nuclear: &z,
                coal_2019: &coal,
                gas_2019: &z,
                coal_slack: &z,
                gas_slack: &gas,
                despatchable_mw: 160.0,
            },
            0.6,
        );
        let displaced = displace_gas_with_new_coal(100.0, &mut dy, 0.6);
        assert_relative_eq!(displaced, 60.0 * 24.0);
        assert!(dy.supply[Tranche::GasSlack].iter().all(|g| *g == 0.0));
        assert!(dy.balance_error() < 1e-9);

        let mut none = DispatchYear::run(
            2021,
            DespatchInputs {
                demand: &coal,
                re: &z,
                hydro: &z,
                nuclear: &z,
                coal_2019: &coal,
                gas_2019: &z,
                coal_slack: &z,
                gas_slack: &gas,
                despatchable_mw: 160.0,
            },
            0.6,
        );
        assert_eq!(displace_gas_with_new_coal(100.0, &mut none, 0.6), 0.0);
    }

    #[test]
    fn full_size_leaves_no_residual() {
        let p = ScenarioParams::default();
        let u = evening_unmet(5);
        let z = vec![0.0; u.len()];
        let r = undersize_residual(NewOption::BatteryRe, &u, &z, 1e6, 1.0, &p).unwrap();
        assert!(r.secondary_unmet_mwh < 1e-6);
        let r = undersize_residual(NewOption::Coal, &u, &z, 1e6, 1.0, &p).unwrap();
        assert_eq!(r.secondary_unmet_mwh, 0.0);
    }

    #[test]
    fn halving_leaves_less_than_half() {
        let p = ScenarioParams::default();
        // Peaky across days as well as within them.
        let u: Vec<f64> = evening_unmet(5)
            .iter()
            .enumerate()
            .map(|(i, v)| v * (0.3 + 0.2 * (i / 48) as f64))
            .collect();
        let z = vec![0.0; u.len()];
        let total = crate::series::energy_mwh(&u);
        for opt in [NewOption::BatteryRe, NewOption::Coal] {
            let r = undersize_residual(opt, &u, &z, 1e6, 0.5, &p).unwrap();
            assert!(r.secondary_unmet_mwh > 0.0);
            assert!(r.secondary_unmet_mwh < 0.5 * total, "{opt}: {r:?}");
            assert_relative_eq!(r.biodiesel_capacity_mw, r.peak_mw / 0.995);
        }
    }

    proptest! {
        #[test]
        fn soc_invariants(
            u in proptest::collection::vec(prop_oneof![Just(0.0), 0.0f64..200.0], 96),
            re in proptest::collection::vec(0.0f64..150.0, 96),
            e in 10.0f64..500.0,
            inv in 10.0f64..300.0,
        ) {
            let b = spec(e, inv);
            let z = vec![0.0; 96];
            let t = simulate_soc(&b, &u, &re, &z, 34);
            let mut prev = t.initial_mwh;
            for i in 0..96 {
                let delta = t.stored_mwh[i] - prev;
                let expected = 0.5 * (t.charge_mw[i] * b.eta_charge - t.discharge_mw[i] / b.eta_discharge);
                prop_assert!((delta - expected).abs() < 1e-6);
                prop_assert!(t.stored_mwh[i] <= e + 1e-9);
                prop_assert!(t.stored_mwh[i] >= b.floor_mwh() - 1e-9);
                prop_assert!(!(t.charge_mw[i] > 0.0 && t.discharge_mw[i] > 0.0));
                prop_assert!(t.charge_mw[i] <= inv + 1e-9 && t.discharge_mw[i] <= inv + 1e-9);
                prop_assert!((t.discharge_mw[i] + t.secondary_unmet_mw[i] - u[i]).abs() < 1e-9);
                prev = t.stored_mwh[i];
            }
        }

        #[test]
        fn secondary_monotone_in_size(u in proptest::collection::vec(prop_oneof![Just(0.0), 0.0f64..200.0], 144)) {
            let p = ScenarioParams::default();
            let z = vec![0.0; 144];
            let mut last = f64::INFINITY;
            for f in [0.2, 0.4, 0.6, 0.8, 1.0] {
                let r = undersize_residual(NewOption::BatteryRe, &u, &z, 1e6, f, &p).unwrap();
                prop_assert!(r.secondary_unmet_mwh <= last + 1e-6);
                last = r.secondary_unmet_mwh;
            }
        }

        #[test]
        fn bonus_bounded(coal in proptest::collection::vec(10.0f64..100.0, 48), re in proptest::collection::vec(0.0f64..80.0, 48), disp in 0.0f64..500.0) {
            let z = vec![0.0; 48];
            let demand: Vec<f64> = coal.iter().zip(&re).map(|(c, r)| c + r).collect();
            let cap = vec![200.0; 48];
            let dy = DispatchYear::run(
                2021,
                DespatchInputs {
                    demand: &demand,
                    re: &re,
                    hydro: &z,
                    nuclear: &z,
                    coal_2019: &cap,
                    gas_2019: &z,
                    coal_slack: &z,
                    gas_slack: &z,
                    despatchable_mw: 200.0,
                },
                0.6,
            );
            let b = coal_peak_bonus(&dy, 0, disp, 0.6);
            let flex_cut = crate::dispatch::day_energy(&dy.flex_curtailment, 0);
            prop_assert!(b >= 0.0);
            prop_assert!(b <= flex_cut + 1e-9);
        }
    }
}
