//! Programming-pulse bookkeeping and per-technology energy estimates.
//!
//! Only raw programming cost is modelled: every Set or Reset pulse fired at a
//! readout device costs one elementary write, saturated or not. Read energy,
//! hidden-layer integration and error routing are not counted.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::device::PulseKind;
use crate::error::{Error, Result};
use crate::learning::{Checkpoint, ConvergenceTrace};

/// Relative accuracy losses reported next to full training.
pub const LOSS_LEVELS: [f64; 2] = [0.10, 0.20];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechnologySpec {
    pub name: String,
    /// Joules per elementary write.
    pub energy_per_write: f64,
    /// Volts; metadata only.
    pub programming_voltage: f64,
    /// Seconds; metadata only.
    pub programming_time: f64,
}

impl TechnologySpec {
    pub fn new(
        name: impl Into<String>,
        energy_per_write: f64,
        programming_voltage: f64,
        programming_time: f64,
    ) -> Result<Self> {
        if !(energy_per_write > 0.0 && energy_per_write.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "energy per write must be positive, got {energy_per_write}"
            )));
        }
        Ok(Self {
            name: name.into(),
            energy_per_write,
            programming_voltage,
            programming_time,
        })
    }

    /// Electrografted iron-complex polymer device.
    pub fn tbfe() -> Self {
        Self {
            name: "TBFe".into(),
            energy_per_write: 0.077e-6,
            programming_voltage: 4.4,
            programming_time: 100e-6,
        }
    }

    /// Electrochemical polymer device: far cheaper writes, far slower.
    pub fn enode() -> Self {
        Self {
            name: "ENODe".into(),
            energy_per_write: 0.325e-9,
            programming_voltage: 0.5e-3,
            programming_time: 2.0,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "tbfe" => Some(Self::tbfe()),
            "enode" => Some(Self::enode()),
            _ => None,
        }
    }

    pub fn energy(&self, pulses: u64) -> f64 {
        pulses as f64 * self.energy_per_write
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub set_pulses: u64,
    pub reset_pulses: u64,
}

impl EnergyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, kind: PulseKind) {
        match kind {
            PulseKind::Set => self.set_pulses += 1,
            PulseKind::Reset => self.reset_pulses += 1,
        }
    }

    pub fn total_pulses(&self) -> u64 {
        self.set_pulses + self.reset_pulses
    }

    pub fn energy(&self, tech: &TechnologySpec) -> f64 {
        tech.energy(self.total_pulses())
    }

    /// Combines the counts of independent runs.
    pub fn merge(&mut self, other: &EnergyLedger) {
        self.set_pulses += other.set_pulses;
        self.reset_pulses += other.reset_pulses;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub samples_seen: u64,
    pub pulses: u64,
    pub joules: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub technology: String,
    pub full: Budget,
    pub loss_10: Budget,
    pub loss_20: Budget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub final_accuracy: f64,
    pub rows: Vec<EnergyRow>,
}

impl EnergyReport {
    pub const CSV_HEADER: &'static str = "technology,full_j,loss_10_j,loss_20_j,full_samples,loss_10_samples,loss_20_samples,full_pulses,loss_10_pulses,loss_20_pulses";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{},{},{},{},{},{}",
                r.technology,
                r.full.joules,
                r.loss_10.joules,
                r.loss_20.joules,
                r.full.samples_seen,
                r.loss_10.samples_seen,
                r.loss_20.samples_seen,
                r.full.pulses,
                r.loss_10.pulses,
                r.loss_20.pulses,
            );
        }
        out
    }
}

/// Earliest checkpoint whose accuracy is within `loss` (relative) of `final_accuracy`.
fn earliest_within(trace: &ConvergenceTrace, final_accuracy: f64, loss: f64) -> &Checkpoint {
    let threshold = final_accuracy * (1.0 - loss);
    trace
        .checkpoints
        .iter()
        .find(|c| c.test_accuracy >= threshold)
        .unwrap_or_else(|| trace.checkpoints.last().expect("non-empty trace"))
}

/// Energy at full training and at the earliest checkpoints reaching within
/// 10% and 20% of the final accuracy.
///
/// "Full" uses the ledger totals; the loss columns use the cumulative pulse
/// count recorded at the matching checkpoint.
pub fn report(
    ledger: &EnergyLedger,
    techs: &[TechnologySpec],
    trace: &ConvergenceTrace,
) -> Result<EnergyReport> {
    let last = trace.checkpoints.last().ok_or(Error::EmptyTrace)?;
    let final_accuracy = last.test_accuracy;
    let at_loss: Vec<&Checkpoint> = LOSS_LEVELS
        .iter()
        .map(|&l| earliest_within(trace, final_accuracy, l))
        .collect();
    let rows = techs
        .iter()
        .map(|t| {
            let budget = |c: &Checkpoint| Budget {
                samples_seen: c.samples_seen,
                pulses: c.cumulative_pulses,
                joules: t.energy(c.cumulative_pulses),
            };
            EnergyRow {
                technology: t.name.clone(),
                full: Budget {
                    samples_seen: last.samples_seen,
                    pulses: ledger.total_pulses(),
                    joules: ledger.energy(t),
                },
                loss_10: budget(at_loss[0]),
                loss_20: budget(at_loss[1]),
            }
        })
        .collect();
    Ok(EnergyReport {
        final_accuracy,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(points: &[(u64, f64, u64)]) -> ConvergenceTrace {
        let mut t = ConvergenceTrace::default();
        for &(s, a, p) in points {
            t.push(Checkpoint {
                samples_seen: s,
                test_accuracy: a,
                cumulative_pulses: p,
            })
            .unwrap();
        }
        t
    }

    #[test]
    fn zero_pulses_cost_nothing() {
        let l = EnergyLedger::new();
        for t in [TechnologySpec::tbfe(), TechnologySpec::enode()] {
            assert_eq!(l.energy(&t), 0.0);
        }
    }

    #[test]
    fn million_tbfe_pulses() {
        let l = EnergyLedger {
            set_pulses: 600_000,
            reset_pulses: 400_000,
        };
        let e = l.energy(&TechnologySpec::tbfe());
        assert!((e - 0.077).abs() < 1e-15, "{e}");
    }

    #[test]
    fn technology_ratio_is_exact() {
        let l = EnergyLedger {
            set_pulses: 12_345,
            reset_pulses: 6_789,
        };
        let ratio = l.energy(&TechnologySpec::enode()) / l.energy(&TechnologySpec::tbfe());
        assert!((ratio - 0.325e-9 / 0.077e-6).abs() < 1e-15);
    }

    #[test]
    fn merge_adds_counts() {
        let mut a = EnergyLedger {
            set_pulses: 1,
            reset_pulses: 2,
        };
        a.merge(&EnergyLedger {
            set_pulses: 10,
            reset_pulses: 20,
        });
        assert_eq!(a.total_pulses(), 33);
    }

    #[test]
    fn invalid_technology() {
        assert!(TechnologySpec::new("x", 0.0, 1.0, 1.0).is_err());
        assert!(TechnologySpec::new("x", -1.0, 1.0, 1.0).is_err());
        assert!(TechnologySpec::by_name("TBFE").is_some());
        assert!(TechnologySpec::by_name("sram").is_none());
    }

    #[test]
    fn report_picks_earliest_checkpoints() {
        let t = trace(&[
            (100, 0.50, 1_000),
            (200, 0.77, 1_800),
            (300, 0.86, 2_400),
            (400, 0.90, 2_900),
            (500, 0.95, 3_300),
        ]);
        let ledger = EnergyLedger {
            set_pulses: 2_000,
            reset_pulses: 1_300,
        };
        let r = report(&ledger, &[TechnologySpec::tbfe()], &t).unwrap();
        let row = &r.rows[0];
        assert_eq!(row.full.pulses, 3_300);
        // 0.9 * 0.95 = 0.855 first reached at 300; 0.8 * 0.95 = 0.76 at 200
        assert_eq!(row.loss_10.samples_seen, 300);
        assert_eq!(row.loss_20.samples_seen, 200);
        assert_eq!(row.loss_10.joules, 2_400.0 * 0.077e-6);
        assert!(r.to_csv().starts_with(EnergyReport::CSV_HEADER));
    }

    #[test]
    fn empty_trace_rejected() {
        let r = report(
            &EnergyLedger::new(),
            &[TechnologySpec::tbfe()],
            &ConvergenceTrace::default(),
        );
        assert!(matches!(r, Err(Error::EmptyTrace)));
    }
}
