//! Scenario data, unit conventions and closed-form helpers.
//!
//! Money is in €, power in MW, energy in MWh and hydrogen in kg throughout.
//! Inputs given in k€ are converted once by [`validate_scenario`].

use std::fmt;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hours in a non-leap year; annual cost terms are scaled by `|T| / HOURS_PER_YEAR`.
pub const HOURS_PER_YEAR: f64 = 8760.0;

/// Hydrogen heating value (kWh/kg) used by [`efficiency_to_yield`].
///
/// 350/9 ≈ 38.89 maps a 70 % efficiency to exactly 18 kg/MWh, i.e. a 100 MW
/// stack producing 1800 kg/h.
pub const DEFAULT_HHV_KWH_PER_KG: f64 = 350.0 / 9.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

/// Grid connection agreement types. Ordinals are fixed: 1 = FA, 2 = NFA85,
/// 3 = NFA.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ContractKind {
    Fa,
    Nfa85,
    Nfa,
}

impl ContractKind {
    pub const ALL: [ContractKind; 3] = [ContractKind::Fa, ContractKind::Nfa85, ContractKind::Nfa];

    pub fn ordinal(self) -> usize {
        self.index() + 1
    }

    /// Zero-based position, for indexing per-contract arrays.
    pub fn index(self) -> usize {
        match self {
            ContractKind::Fa => 0,
            ContractKind::Nfa85 => 1,
            ContractKind::Nfa => 2,
        }
    }

    pub fn from_ordinal(c: usize) -> Option<Self> {
        match c {
            1 => Some(ContractKind::Fa),
            2 => Some(ContractKind::Nfa85),
            3 => Some(ContractKind::Nfa),
            _ => None,
        }
    }

    /// Whether capacity under this agreement can be curtailed through CRCs.
    pub fn crc_eligible(self) -> bool {
        !matches!(self, ContractKind::Nfa)
    }

    pub fn label(self) -> &'static str {
        match self {
            ContractKind::Fa => "fa",
            ContractKind::Nfa85 => "nfa85",
            ContractKind::Nfa => "nfa",
        }
    }
}

impl fmt::Display for ContractKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoneyUnit {
    #[default]
    Eur,
    Keur,
}

impl MoneyUnit {
    pub fn to_eur(self) -> f64 {
        match self {
            MoneyUnit::Eur => 1.0,
            MoneyUnit::Keur => 1000.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeHorizon {
    pub hours: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElectrolyzerTech {
    /// Annualized capital cost C_el (€/MW/yr, or k€ when `unit` says so).
    /// Derived from the raw fields when omitted.
    #[serde(default)]
    pub annualized_capital: Option<f64>,
    pub min_load_ratio: f64,
    /// Hydrogen yield in kg/MWh.
    pub h2_yield: f64,
    #[serde(default)]
    pub capital_cost: Option<f64>,
    #[serde(default)]
    pub discount_rate: Option<f64>,
    #[serde(default)]
    pub lifetime_years: Option<u32>,
    #[serde(default)]
    pub unit: MoneyUnit,
}

impl ElectrolyzerTech {
    /// Annualized capital cost in € (valid after [`validate_scenario`]).
    pub fn c_el(&self) -> f64 {
        self.annualized_capital.unwrap_or(f64::NAN)
    }

    pub fn reference() -> Self {
        ElectrolyzerTech {
            annualized_capital: Some(annualize_capital(937_500.0, 0.1, 15).expect("valid")),
            min_load_ratio: 0.2,
            h2_yield: efficiency_to_yield(0.7, DEFAULT_HHV_KWH_PER_KG).expect("valid"),
            capital_cost: Some(937_500.0),
            discount_rate: Some(0.1),
            lifetime_years: Some(15),
            unit: MoneyUnit::Eur,
        }
    }
}

/// Annual connection and transport tariffs per contract, indexed by
/// [`ContractKind::index`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TariffSchedule {
    pub per_mw_year: [f64; 3],
    #[serde(default)]
    pub unit: MoneyUnit,
}

impl TariffSchedule {
    pub fn get(&self, c: ContractKind) -> f64 {
        self.per_mw_year[c.index()]
    }

    pub fn reference() -> Self {
        TariffSchedule {
            per_mw_year: [87_600.0, 43_800.0, 26_280.0],
            unit: MoneyUnit::Eur,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceSet {
    /// Electricity price per hour (€/MWh).
    pub electricity: Vec<f64>,
    /// €/kg.
    pub hydrogen: f64,
    /// CRC price (€/MW per curtailed hour).
    pub crc: f64,
    /// Optional hourly CRC prices overriding `crc` in the operator's cost.
    #[serde(default)]
    pub crc_series: Option<Vec<f64>>,
    pub crc_plus: f64,
}

impl PriceSet {
    pub fn crc_at(&self, t: usize) -> f64 {
        self.crc_series.as_ref().map_or(self.crc, |s| s[t])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSeries {
    /// Residual grid capacity S̄ per hour (MW).
    pub residual_capacity: Vec<f64>,
    /// Maximum hydrogen offtake D per hour (kg/h).
    pub h2_offtake: Vec<f64>,
}

impl NetworkSeries {
    pub fn max_residual(&self) -> f64 {
        self.residual_capacity.iter().copied().fold(0.0, f64::max)
    }
}

/// Which curtailment the per-hour congestion budget pins.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetMode {
    /// `λ_crc · s_t = θ · B_CM`; CRC+ stays voluntary.
    #[default]
    PinCrc,
    /// `λ_crc+ · s+_t = θ · B_CM` as literally stated.
    PinCrcPlus,
}

impl BudgetMode {
    pub fn label(self) -> &'static str {
        match self {
            BudgetMode::PinCrc => "pin-crc",
            BudgetMode::PinCrcPlus => "pin-crc-plus",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetPolicy {
    /// Share of hours in which NFA85 capacity may be curtailed.
    pub nfa85_time_share: f64,
    /// NFA curtailable energy as a multiple of the NFA capacity (hours).
    pub nfa_energy_hours: f64,
    /// Congestion-management budget B_CM (€/h).
    pub cm_budget: f64,
    /// Share θ of B_CM spent on this client.
    pub theta: f64,
    /// Tie-breaking penalty π on agreement curtailment (€/MW).
    pub penalty: f64,
    #[serde(default)]
    pub mode: BudgetMode,
}

impl BudgetPolicy {
    pub fn reference() -> Self {
        BudgetPolicy {
            nfa85_time_share: 0.15,
            nfa_energy_hours: 1.0,
            cm_budget: 0.0,
            theta: 0.0,
            penalty: 1.0,
            mode: BudgetMode::PinCrc,
        }
    }

    /// Hourly CM spending θ·B_CM.
    pub fn hourly_spend(&self) -> f64 {
        self.theta * self.cm_budget
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioData {
    pub horizon: TimeHorizon,
    pub tech: ElectrolyzerTech,
    pub tariffs: TariffSchedule,
    pub prices: PriceSet,
    pub network: NetworkSeries,
    pub budgets: BudgetPolicy,
    /// Big-M constant (MW); defaults to twice the peak residual capacity.
    #[serde(default)]
    pub big_m: Option<f64>,
    /// Factor applied to annual cost terms; `None` means `|T| / 8760`.
    #[serde(default)]
    pub annual_scale: Option<f64>,
}

impl ScenarioData {
    pub fn hours(&self) -> usize {
        self.horizon.hours
    }

    /// Scale applied to C_el and tariffs so that a horizon shorter than a
    /// year stays economically balanced.
    pub fn annual_scale(&self) -> f64 {
        self.annual_scale
            .unwrap_or(self.horizon.hours as f64 / HOURS_PER_YEAR)
    }

    pub fn big_m(&self) -> f64 {
        self.big_m.unwrap_or_else(|| default_big_m(&self.network))
    }

    /// C_el after horizon scaling.
    pub fn scaled_c_el(&self) -> f64 {
        self.tech.c_el() * self.annual_scale()
    }

    /// Tariff after horizon scaling.
    pub fn scaled_tariff(&self, c: ContractKind) -> f64 {
        self.tariffs.get(c) * self.annual_scale()
    }

    /// Hours `start..start + len` as a scenario of their own. Annual terms
    /// are rescaled to the slice length unless a scale was set explicitly.
    pub fn slice(&self, start: usize, len: usize) -> Result<ScenarioData, ParamError> {
        let end = start.checked_add(len).filter(|&e| e <= self.hours() && len > 0).ok_or_else(|| {
            ParamError::Invalid(format!("slice {start}+{len} outside {} hours", self.hours()))
        })?;
        let cut = |v: &Vec<f64>| v[start..end].to_vec();
        let mut sc = self.clone();
        sc.horizon.hours = len;
        sc.prices.electricity = cut(&self.prices.electricity);
        sc.prices.crc_series = self.prices.crc_series.as_ref().map(cut);
        sc.network.residual_capacity = cut(&self.network.residual_capacity);
        sc.network.h2_offtake = cut(&self.network.h2_offtake);
        Ok(sc)
    }

    /// reference parameters around the given hourly series.
    pub fn reference(residual_capacity: Vec<f64>, electricity: Vec<f64>, h2_offtake: Vec<f64>) -> Self {
        let hours = residual_capacity.len();
        ScenarioData {
            horizon: TimeHorizon { hours },
            tech: ElectrolyzerTech::reference(),
            tariffs: TariffSchedule::reference(),
            prices: PriceSet {
                electricity,
                hydrogen: 10.0,
                crc: 40.0,
                crc_series: None,
                crc_plus: 1.0,
            },
            network: NetworkSeries {
                residual_capacity,
                h2_offtake,
            },
            budgets: BudgetPolicy::reference(),
            big_m: None,
            annual_scale: None,
        }
    }
}

fn default_big_m(network: &NetworkSeries) -> f64 {
    let peak = network.max_residual();
    if peak > 0.0 {
        2.0 * peak
    } else {
        1.0
    }
}

/// Capital recovery factor `r(1+r)^n / ((1+r)^n - 1)`, or `1/n` when `r = 0`.
pub fn capital_recovery_factor(discount_rate: f64, lifetime: u32) -> Result<f64, ParamError> {
    if lifetime == 0 {
        return Err(ParamError::Invalid("lifetime must be at least one year".into()));
    }
    if !(discount_rate.is_finite() && discount_rate >= 0.0) {
        return Err(ParamError::Invalid(format!("discount rate {discount_rate} must be >= 0")));
    }
    let n = lifetime as f64;
    if discount_rate == 0.0 {
        return Ok(1.0 / n);
    }
    let growth = (1.0 + discount_rate).powi(lifetime as i32);
    Ok(discount_rate * growth / (growth - 1.0))
}

/// Equivalent annual cost of `capital` (€/MW) over `lifetime` years.
pub fn annualize_capital(capital: f64, discount_rate: f64, lifetime: u32) -> Result<f64, ParamError> {
    if !(capital.is_finite() && capital >= 0.0) {
        return Err(ParamError::Invalid(format!("capital {capital} must be >= 0")));
    }
    Ok(capital * capital_recovery_factor(discount_rate, lifetime)?)
}

/// Maximum hourly hydrogen output (kg/h) at `power` MW.
pub fn hydrogen_yield(power: f64, eta_sys: f64) -> Result<f64, ParamError> {
    if !(power.is_finite() && power >= 0.0) {
        return Err(ParamError::Invalid(format!("power {power} must be >= 0")));
    }
    if !(eta_sys.is_finite() && eta_sys > 0.0) {
        return Err(ParamError::Invalid(format!("yield {eta_sys} must be > 0")));
    }
    Ok(eta_sys * power)
}

/// Converts a fractional system efficiency to a yield in kg/MWh.
pub fn efficiency_to_yield(efficiency: f64, hhv_kwh_per_kg: f64) -> Result<f64, ParamError> {
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(ParamError::Invalid(format!("efficiency {efficiency} must lie in (0, 1]")));
    }
    if !(hhv_kwh_per_kg.is_finite() && hhv_kwh_per_kg > 0.0) {
        return Err(ParamError::Invalid("heating value must be > 0".into()));
    }
    Ok(efficiency * 1000.0 / hhv_kwh_per_kg)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Issue {
    LengthMismatch { field: String, expected: usize, found: usize },
    NonFinite { field: String },
    OutOfRange { field: String, value: f64, rule: String },
    DivisionHazard { detail: String },
    Inconsistent { detail: String },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::LengthMismatch { field, expected, found } => {
                write!(f, "length mismatch: `{field}` has {found} entries, horizon has {expected}")
            }
            Issue::NonFinite { field } => write!(f, "non-finite value in `{field}`"),
            Issue::OutOfRange { field, value, rule } => write!(f, "`{field}` = {value} violates {rule}"),
            Issue::DivisionHazard { detail } => write!(f, "division hazard: {detail}"),
            Issue::Inconsistent { detail } => write!(f, "inconsistent scenario: {detail}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("scenario rejected: {}", .issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ValidationError {
    pub issues: Vec<Issue>,
}

impl ValidationError {
    pub fn has_length_mismatch(&self) -> bool {
        self.issues.iter().any(|i| matches!(i, Issue::LengthMismatch { .. }))
    }

    pub fn has_division_hazard(&self) -> bool {
        self.issues.iter().any(|i| matches!(i, Issue::DivisionHazard { .. }))
    }
}

struct Checker {
    issues: Vec<Issue>,
}

impl Checker {
    fn finite(&mut self, field: &str, v: f64) -> bool {
        if v.is_finite() {
            true
        } else {
            self.issues.push(Issue::NonFinite { field: field.into() });
            false
        }
    }

    fn rule(&mut self, field: &str, v: f64, ok: bool, rule: &str) {
        if self.finite(field, v) && !ok {
            self.issues.push(Issue::OutOfRange {
                field: field.into(),
                value: v,
                rule: rule.into(),
            });
        }
    }

    fn series(&mut self, field: &str, s: &[f64], hours: usize, nonneg: bool) {
        if s.len() != hours {
            self.issues.push(Issue::LengthMismatch {
                field: field.into(),
                expected: hours,
                found: s.len(),
            });
        }
        if let Some(t) = s.iter().position(|v| !v.is_finite()) {
            self.issues.push(Issue::NonFinite { field: format!("{field}[{t}]") });
        } else if nonneg {
            if let Some(t) = s.iter().position(|&v| v < 0.0) {
                self.issues.push(Issue::OutOfRange {
                    field: format!("{field}[{t}]"),
                    value: s[t],
                    rule: ">= 0".into(),
                });
            }
        }
    }
}

/// Checks every scenario invariant and returns a normalized copy: money in
/// €, C_el filled from the raw capital fields, M defaulted to 2·max S̄.
///
/// Idempotent: validating the result returns it unchanged.
pub fn validate_scenario(raw: ScenarioData) -> Result<ScenarioData, ValidationError> {
    let mut sc = raw;
    let mut ck = Checker { issues: Vec::new() };
    let hours = sc.horizon.hours;
    if hours == 0 {
        ck.issues.push(Issue::OutOfRange {
            field: "horizon.hours".into(),
            value: 0.0,
            rule: ">= 1".into(),
        });
    }

    // Units first, so every later check sees €.
    let tech_scale = sc.tech.unit.to_eur();
    sc.tech.annualized_capital = sc.tech.annualized_capital.map(|v| v * tech_scale);
    sc.tech.capital_cost = sc.tech.capital_cost.map(|v| v * tech_scale);
    sc.tech.unit = MoneyUnit::Eur;
    let tariff_scale = sc.tariffs.unit.to_eur();
    for v in &mut sc.tariffs.per_mw_year {
        *v *= tariff_scale;
    }
    sc.tariffs.unit = MoneyUnit::Eur;

    let tech = &sc.tech;
    let derived = match (tech.capital_cost, tech.discount_rate, tech.lifetime_years) {
        (Some(cap), Some(r), Some(n)) => match annualize_capital(cap, r, n) {
            Ok(v) => Some(v),
            Err(e) => {
                ck.issues.push(Issue::Inconsistent { detail: e.to_string() });
                None
            }
        },
        _ => None,
    };
    match (tech.annualized_capital, derived) {
        (None, Some(v)) => sc.tech.annualized_capital = Some(v),
        (None, None) => ck.issues.push(Issue::Inconsistent {
            detail: "tech needs annualized_capital or capital_cost, discount_rate and lifetime_years".into(),
        }),
        (Some(given), Some(v)) if (given - v).abs() > 1e-3 * v.abs() => {
            ck.issues.push(Issue::Inconsistent {
                detail: format!("annualized capital {given} differs from capital x CRF = {v:.2} by more than 0.1%"),
            })
        }
        _ => {}
    }
    if let Some(c) = sc.tech.annualized_capital {
        ck.rule("tech.annualized_capital", c, c > 0.0, "> 0");
    }
    let a = sc.tech.min_load_ratio;
    ck.rule("tech.min_load_ratio", a, (0.0..1.0).contains(&a), "0 <= alpha < 1");
    ck.rule("tech.h2_yield", sc.tech.h2_yield, sc.tech.h2_yield > 0.0, "> 0");

    for c in ContractKind::ALL {
        let v = sc.tariffs.get(c);
        ck.rule(&format!("tariffs.{c}"), v, v >= 0.0, ">= 0");
    }
    let t = &sc.tariffs.per_mw_year;
    if !(t[0] >= t[1] && t[1] >= t[2]) {
        warn!("tariffs are not ordered FA >= NFA85 >= NFA: {t:?}");
    }

    let p = &sc.prices;
    ck.series("prices.electricity", &p.electricity, hours, false);
    ck.rule("prices.hydrogen", p.hydrogen, true, "finite");
    ck.rule("prices.crc", p.crc, p.crc >= 0.0, ">= 0");
    if let Some(s) = &p.crc_series {
        ck.series("prices.crc_series", s, hours, true);
    }
    let b = &sc.budgets;
    if ck.finite("prices.crc_plus", p.crc_plus) {
        if p.crc_plus == 0.0 && b.mode == BudgetMode::PinCrcPlus {
            ck.issues.push(Issue::DivisionHazard {
                detail: "CRC+ price is zero but the budget row pins CRC+ spending".into(),
            });
        } else if p.crc_plus <= 0.0 {
            ck.rule("prices.crc_plus", p.crc_plus, false, "> 0");
        }
    }

    ck.series("network.residual_capacity", &sc.network.residual_capacity, hours, true);
    ck.series("network.h2_offtake", &sc.network.h2_offtake, hours, true);

    let share = b.nfa85_time_share;
    ck.rule("budgets.nfa85_time_share", share, (0.0..=1.0).contains(&share), "0 <= B <= 1");
    ck.rule("budgets.nfa_energy_hours", b.nfa_energy_hours, b.nfa_energy_hours >= 0.0, ">= 0");
    ck.rule("budgets.cm_budget", b.cm_budget, b.cm_budget >= 0.0, ">= 0");
    ck.rule("budgets.theta", b.theta, (0.0..=1.0).contains(&b.theta), "0 <= theta <= 1");
    ck.rule("budgets.penalty", b.penalty, b.penalty >= 0.0, ">= 0");
    if b.mode == BudgetMode::PinCrc && b.hourly_spend() > 0.0 {
        let zero_price = (0..hours.min(p.electricity.len()))
            .find(|&t| p.crc_series.as_ref().map_or(p.crc, |s| s.get(t).copied().unwrap_or(p.crc)) == 0.0);
        if let Some(t) = zero_price {
            ck.issues.push(Issue::DivisionHazard {
                detail: format!("CRC price is zero in hour {t} but the budget row pins CRC spending"),
            });
        }
    }

    if let Some(scale) = sc.annual_scale {
        ck.rule("annual_scale", scale, scale > 0.0, "> 0");
    }

    let peak = sc.network.max_residual();
    match sc.big_m {
        Some(m) => ck.rule("big_m", m, m >= peak && m > 0.0, ">= max residual capacity"),
        None if ck.issues.is_empty() => sc.big_m = Some(default_big_m(&sc.network)),
        None => {}
    }

    if ck.issues.is_empty() {
        Ok(sc)
    } else {
        Err(ValidationError { issues: ck.issues })
    }
}
