//! Must-run netting, tranche merit order, daily coal flex floors, grid
//! buffer, unmet residual and the post-hoc coal ramp audit.

use std::io::Write;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::scenario::YearInputs;
use crate::{Error, Result, SLOTS_PER_DAY, SLOT_HOURS};

/// Supply tranches tracked per slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tranche {
    Re,
    Hydro,
    Nuclear,
    Coal2019,
    CoalSlack,
    Gas2019,
    GasSlack,
    New,
}

impl Tranche {
    pub const ALL: [Tranche; 8] = [
        Tranche::Re,
        Tranche::Hydro,
        Tranche::Nuclear,
        Tranche::Coal2019,
        Tranche::CoalSlack,
        Tranche::Gas2019,
        Tranche::GasSlack,
        Tranche::New,
    ];

    /// Fossil tranches in merit order.
    pub const MERIT: [Tranche; 4] = [
        Tranche::Coal2019,
        Tranche::Gas2019,
        Tranche::CoalSlack,
        Tranche::GasSlack,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Tranche::Re => "re",
            Tranche::Hydro => "hydro",
            Tranche::Nuclear => "nuclear",
            Tranche::Coal2019 => "coal_2019",
            Tranche::CoalSlack => "coal_slack",
            Tranche::Gas2019 => "gas_2019",
            Tranche::GasSlack => "gas_slack",
            Tranche::New => "new",
        }
    }

    fn idx(self) -> usize {
        self as usize
    }
}

/// One vector per tranche.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PerTranche(pub [Vec<f64>; 8]);

impl PerTranche {
    fn zeros(n: usize) -> Self {
        Self(std::array::from_fn(|_| vec![0.0; n]))
    }
}

impl Index<Tranche> for PerTranche {
    type Output = Vec<f64>;
    fn index(&self, t: Tranche) -> &Vec<f64> {
        &self.0[t.idx()]
    }
}

impl IndexMut<Tranche> for PerTranche {
    fn index_mut(&mut self, t: Tranche) -> &mut Vec<f64> {
        &mut self.0[t.idx()]
    }
}

/// Which tranches count as the coal fleet for flex floors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoalFleet {
    Existing,
    /// Existing coal plus NEW coal.
    WithNew,
}

impl CoalFleet {
    fn members(self) -> &'static [Tranche] {
        match self {
            CoalFleet::Existing => &[Tranche::Coal2019, Tranche::CoalSlack],
            CoalFleet::WithNew => &[Tranche::Coal2019, Tranche::CoalSlack, Tranche::New],
        }
    }
}

/// Slot-level inputs to a despatch run, MW.
#[derive(Debug, Clone, Copy)]
pub struct DespatchInputs<'a> {
    pub demand: &'a [f64],
    pub re: &'a [f64],
    pub hydro: &'a [f64],
    pub nuclear: &'a [f64],
    pub coal_2019: &'a [f64],
    pub gas_2019: &'a [f64],
    pub coal_slack: &'a [f64],
    pub gas_slack: &'a [f64],
    /// Installed despatchable capacity (coal, gas, hydro, nuclear) for the buffer check.
    pub despatchable_mw: f64,
}

impl<'a> From<&'a YearInputs> for DespatchInputs<'a> {
    fn from(y: &'a YearInputs) -> Self {
        let c = &y.capacity;
        Self {
            demand: &y.demand,
            re: &y.re_available,
            hydro: &y.hydro,
            nuclear: &y.nuclear,
            coal_2019: &y.coal_2019_cap,
            gas_2019: &y.gas_2019_cap,
            coal_slack: &y.coal_slack_cap,
            gas_slack: &y.gas_slack_cap,
            despatchable_mw: (c.coal_gw + c.gas_gw + c.hydro_gw + c.nuclear_gw) * 1e3,
        }
    }
}

/// Per-slot despatch for one year.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchYear {
    pub year: i32,
    pub demand: Vec<f64>,
    pub supply: PerTranche,
    /// Per-slot availability of each tranche (`New` is zero until sized).
    pub capacity: PerTranche,
    /// Total RE curtailed (must-run surplus plus flex).
    pub curtailment: Vec<f64>,
    /// Part of `curtailment` caused by coal flex floors.
    pub flex_curtailment: Vec<f64>,
    pub hydro_spill: Vec<f64>,
    pub nuclear_spill: Vec<f64>,
    pub unmet: Vec<f64>,
    /// Coal raised in each slot by the flex floor.
    pub flex_raise: Vec<f64>,
    /// Gas backed down in each slot to make room for `flex_raise`.
    pub flex_gas_cut: Vec<f64>,
    pub coal_daily_max: Vec<f64>,
    pub coal_flex_floor: Vec<f64>,
    /// Slots where the flex floor could not be met in full.
    pub relaxed_slots: usize,
    pub despatchable_mw: f64,
}

/// Grid buffer headroom check.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BufferReport {
    pub headroom: Vec<f64>,
    pub requirement: Vec<f64>,
    pub shortfall: Vec<f64>,
}

/// Counts of slot pairs per coal ramp class (%/min).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RampHistogram {
    pub le_0_5: usize,
    pub le_1: usize,
    pub le_2: usize,
    pub gt_2: usize,
}

pub const RAMP_CLASSES: [&str; 4] = ["<=0.5", "(0.5,1]", "(1,2]", ">2"];

impl RampHistogram {
    pub fn counts(&self) -> [usize; 4] {
        [self.le_0_5, self.le_1, self.le_2, self.gt_2]
    }

    fn add(&mut self, pct_per_min: f64) {
        match pct_per_min {
            r if r <= 0.5 => self.le_0_5 += 1,
            r if r <= 1.0 => self.le_1 += 1,
            r if r <= 2.0 => self.le_2 += 1,
            _ => self.gt_2 += 1,
        }
    }
}

/// Subtract must-run supply from demand.
///
/// Returns `(net, curtailment)` with `net = max(0, D - RE - hydro - nuclear)`
/// and the surplus as curtailment.
pub fn net_demand(demand: &[f64], re: &[f64], hydro: &[f64], nuclear: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert!(
        demand.len() == re.len() && re.len() == hydro.len() && hydro.len() == nuclear.len(),
        "net_demand inputs differ in length"
    );
    demand
        .iter()
        .zip(re)
        .zip(hydro)
        .zip(nuclear)
        .map(|(((d, r), h), n)| {
            let x = d - r - h - n;
            (x.max(0.0), (-x).max(0.0))
        })
        .unzip()
}

/// Greedy fill of `net` through `capacities` in the order given.
/// Returns per-tranche output and the remainder.
pub fn merit_dispatch(net: &[f64], capacities: &[&[f64]]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut outputs = vec![vec![0.0; net.len()]; capacities.len()];
    let mut unmet = net.to_vec();
    for (out, cap) in outputs.iter_mut().zip(capacities) {
        assert_eq!(cap.len(), net.len(), "tranche capacity length mismatch");
        for i in 0..net.len() {
            let take = unmet[i].min(cap[i].max(0.0));
            out[i] = take;
            unmet[i] -= take;
        }
    }
    (outputs, unmet)
}

impl DispatchYear {
    pub fn len(&self) -> usize {
        self.demand.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demand.is_empty()
    }

    pub fn days(&self) -> usize {
        self.len() / SLOTS_PER_DAY
    }

    /// Coal fleet output in slot `i`.
    pub fn coal(&self, fleet: CoalFleet, i: usize) -> f64 {
        fleet.members().iter().map(|&t| self.supply[t][i]).sum()
    }

    pub fn energy_mwh(&self, t: Tranche) -> f64 {
        crate::series::energy_mwh(&self.supply[t])
    }

    pub fn curtailment_mwh(&self) -> f64 {
        crate::series::energy_mwh(&self.curtailment)
    }

    pub fn unmet_mwh(&self) -> f64 {
        crate::series::energy_mwh(&self.unmet)
    }

    pub fn peak_unmet(&self) -> f64 {
        self.unmet.iter().copied().fold(0.0, f64::max)
    }

    /// Largest `|supply + unmet - demand|` over all slots.
    pub fn balance_error(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let s: f64 = Tranche::ALL.iter().map(|&t| self.supply[t][i]).sum();
                (s + self.unmet[i] - self.demand[i]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Must-run netting plus merit order, before flex floors.
    pub fn merit(year: i32, inp: DespatchInputs<'_>) -> Self {
        let n = inp.demand.len();
        assert_eq!(n % SLOTS_PER_DAY, 0, "despatch needs whole days");
        let (net, surplus) = net_demand(inp.demand, inp.re, inp.hydro, inp.nuclear);
        let (out, unmet) = merit_dispatch(&net, &[inp.coal_2019, inp.gas_2019, inp.coal_slack, inp.gas_slack]);

        let mut supply = PerTranche::zeros(n);
        let mut curtailment = vec![0.0; n];
        let mut hydro_spill = vec![0.0; n];
        let mut nuclear_spill = vec![0.0; n];
        for i in 0..n {
            let mut s = surplus[i];
            let cut_re = s.min(inp.re[i]);
            s -= cut_re;
            let cut_hydro = s.min(inp.hydro[i]);
            s -= cut_hydro;
            let cut_nuclear = s.min(inp.nuclear[i]);
            curtailment[i] = cut_re;
            hydro_spill[i] = cut_hydro;
            nuclear_spill[i] = cut_nuclear;
            supply[Tranche::Re][i] = inp.re[i] - cut_re;
            supply[Tranche::Hydro][i] = inp.hydro[i] - cut_hydro;
            supply[Tranche::Nuclear][i] = inp.nuclear[i] - cut_nuclear;
        }
        for (t, o) in Tranche::MERIT.iter().zip(out) {
            supply[*t] = o;
        }

        let mut capacity = PerTranche::zeros(n);
        capacity[Tranche::Re] = inp.re.to_vec();
        capacity[Tranche::Hydro] = inp.hydro.to_vec();
        capacity[Tranche::Nuclear] = inp.nuclear.to_vec();
        capacity[Tranche::Coal2019] = inp.coal_2019.to_vec();
        capacity[Tranche::Gas2019] = inp.gas_2019.to_vec();
        capacity[Tranche::CoalSlack] = inp.coal_slack.to_vec();
        capacity[Tranche::GasSlack] = inp.gas_slack.to_vec();

        let days = n / SLOTS_PER_DAY;
        Self {
            year,
            demand: inp.demand.to_vec(),
            supply,
            capacity,
            curtailment,
            flex_curtailment: vec![0.0; n],
            hydro_spill,
            nuclear_spill,
            unmet,
            flex_raise: vec![0.0; n],
            flex_gas_cut: vec![0.0; n],
            coal_daily_max: vec![0.0; days],
            coal_flex_floor: vec![0.0; days],
            relaxed_slots: 0,
            despatchable_mw: inp.despatchable_mw,
        }
    }

    /// Merit order followed by existing-fleet coal flex floors.
    pub fn run(year: i32, inp: DespatchInputs<'_>, flex_limit: f64) -> Self {
        let mut dy = Self::merit(year, inp);
        apply_coal_flex(&mut dy, flex_limit, CoalFleet::Existing);
        dy
    }

    pub fn write_slot_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["slot".to_string(), "demand_mw".into()];
        header.extend(Tranche::ALL.iter().map(|t| format!("{}_mw", t.as_str())));
        header.extend(["unmet_mw".into(), "curtailment_mw".into()]);
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![i.to_string(), self.demand[i].to_string()];
            row.extend(Tranche::ALL.iter().map(|&t| self.supply[t][i].to_string()));
            row.push(self.unmet[i].to_string());
            row.push(self.curtailment[i].to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Load-duration curve: values sorted descending.
pub fn load_duration_curve(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn write_ldc_csv<W: Write>(out: W, column: &str, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", column])?;
    for (rank, v) in load_duration_curve(values).iter().enumerate() {
        w.write_record([rank.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Daily maximum of the coal fleet's output.
pub fn coal_daily_max(dy: &DispatchYear, fleet: CoalFleet) -> Vec<f64> {
    (0..dy.days())
        .map(|d| {
            (d * SLOTS_PER_DAY..(d + 1) * SLOTS_PER_DAY)
                .map(|i| dy.coal(fleet, i))
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Enforce `floor = flex_limit * daily max coal` in every slot of every day.
pub fn apply_coal_flex(dy: &mut DispatchYear, flex_limit: f64, fleet: CoalFleet) {
    let maxima = coal_daily_max(dy, fleet);
    let floors: Vec<f64> = maxima.iter().map(|m| flex_limit * m).collect();
    apply_coal_floors(dy, &floors, fleet);
    dy.coal_daily_max = maxima;
}

/// Raise coal to explicit per-day floors.
///
/// Coal is raised cheapest tranche first (2019 coal, slack coal, then NEW
/// coal when in the fleet). Room is made by backing down slack gas, 2019
/// gas, then RE (counted as flex curtailment), then hydro. If all of those
/// are exhausted the slot's floor is relaxed and counted.
pub fn apply_coal_floors(dy: &mut DispatchYear, floors: &[f64], fleet: CoalFleet) {
    assert_eq!(floors.len(), dy.days(), "one floor per day");
    for (day, &floor) in floors.iter().enumerate() {
        for i in day * SLOTS_PER_DAY..(day + 1) * SLOTS_PER_DAY {
            let coal = dy.coal(fleet, i);
            let need = floor - coal;
            if need <= 1e-9 {
                continue;
            }
            let headroom: f64 = fleet
                .members()
                .iter()
                .map(|&t| (dy.capacity[t][i] - dy.supply[t][i]).max(0.0))
                .sum();
            let absorbable = [Tranche::GasSlack, Tranche::Gas2019, Tranche::Re, Tranche::Hydro]
                .iter()
                .map(|&t| dy.supply[t][i])
                .sum::<f64>();
            let raise = need.min(headroom).min(absorbable);
            if raise < need - 1e-9 {
                dy.relaxed_slots += 1;
            }
            if raise <= 0.0 {
                continue;
            }

            let mut left = raise;
            for &t in fleet.members() {
                let room = (dy.capacity[t][i] - dy.supply[t][i]).max(0.0);
                let step = left.min(room);
                dy.supply[t][i] += step;
                left -= step;
            }
            let mut left = raise;
            for t in [Tranche::GasSlack, Tranche::Gas2019, Tranche::Re, Tranche::Hydro] {
                let step = left.min(dy.supply[t][i]);
                dy.supply[t][i] -= step;
                left -= step;
                match t {
                    Tranche::GasSlack | Tranche::Gas2019 => dy.flex_gas_cut[i] += step,
                    Tranche::Re => {
                        dy.curtailment[i] += step;
                        dy.flex_curtailment[i] += step;
                    }
                    Tranche::Hydro => dy.hydro_spill[i] += step,
                    _ => unreachable!(),
                }
            }
            dy.flex_raise[i] += raise;
        }
    }
    dy.coal_flex_floor = floors.to_vec();
}

/// Despatchable headroom against `grid_buffer * demand`.
///
/// Headroom is installed coal, gas, hydro, nuclear and NEW capacity less
/// their output in the slot.
pub fn buffer_check(dy: &DispatchYear, grid_buffer: f64, new_capacity_mw: f64) -> BufferReport {
    let despatchable = [
        Tranche::Hydro,
        Tranche::Nuclear,
        Tranche::Coal2019,
        Tranche::CoalSlack,
        Tranche::Gas2019,
        Tranche::GasSlack,
        Tranche::New,
    ];
    let mut report = BufferReport::default();
    for i in 0..dy.len() {
        let output: f64 = despatchable.iter().map(|&t| dy.supply[t][i]).sum();
        let headroom = dy.despatchable_mw + new_capacity_mw - output;
        let requirement = grid_buffer * dy.demand[i];
        report.headroom.push(headroom);
        report.requirement.push(requirement);
        report.shortfall.push((requirement - headroom).max(0.0));
    }
    report
}

/// Per-slot unmet energy and the year's NEW capacity requirement
/// `max(unmet + shortfall)`.
pub fn compute_unmet(dy: &DispatchYear, buffer: &BufferReport) -> (Vec<f64>, f64) {
    let requirement = dy
        .unmet
        .iter()
        .zip(&buffer.shortfall)
        .map(|(u, s)| u + s)
        .fold(0.0, f64::max);
    (dy.unmet.clone(), requirement)
}

/// Classify coal ramps between consecutive slots as %/min of the nominal
/// coal in operation on the later slot's day. Audit only.
pub fn ramp_audit(dy: &DispatchYear, nominal_mw: &[f64], fleet: CoalFleet) -> Result<RampHistogram> {
    if nominal_mw.len() != dy.days() {
        return Err(Error::Integrity(format!(
            "{} nominal values for {} days",
            nominal_mw.len(),
            dy.days()
        )));
    }
    let mut hist = RampHistogram::default();
    for i in 1..dy.len() {
        let (a, b) = (dy.coal(fleet, i - 1), dy.coal(fleet, i));
        let nominal = nominal_mw[i / SLOTS_PER_DAY];
        if nominal <= 0.0 {
            if a > 0.0 || b > 0.0 {
                return Err(Error::Integrity(format!(
                    "day {} has coal output but zero nominal capacity",
                    i / SLOTS_PER_DAY
                )));
            }
            hist.add(0.0);
            continue;
        }
        hist.add((b - a).abs() / (30.0 * nominal) * 100.0);
    }
    Ok(hist)
}

/// Energy (MWh) of a per-slot MW series restricted to one day.
pub fn day_energy(values: &[f64], day: usize) -> f64 {
    values[day * SLOTS_PER_DAY..(day + 1) * SLOTS_PER_DAY].iter().sum::<f64>() * SLOT_HOURS
}
