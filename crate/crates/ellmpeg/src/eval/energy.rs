//! Energy accounting.
//!
//! When the kernel exposes RAPL counters under `/sys/class/powercap`, the
//! meter reads package energy directly. Otherwise a configured constant
//! power rating is multiplied by inference time. With neither source the
//! estimate is reported absent, never as a fake zero.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergySource {
    Rapl,
    ConstantPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub wh: f64,
    pub source: EnergySource,
}

/// Watt-hours from a constant power draw over `secs` seconds.
pub fn constant_power_wh(watts: f64, secs: f64) -> f64 {
    watts * secs / 3600.0
}

/// Reader over the RAPL package-domain counters.
#[derive(Debug, Clone)]
pub struct RaplReader {
    counters: Vec<PathBuf>,
}

impl RaplReader {
    /// Present only when at least one package counter is readable.
    pub fn probe() -> Option<Self> {
        Self::probe_at(std::path::Path::new("/sys/class/powercap"))
    }

    pub fn probe_at(root: &std::path::Path) -> Option<Self> {
        let entries = std::fs::read_dir(root).ok()?;
        let mut counters = Vec::new();
        for entry in entries.flatten() {
            let name = entry.file_name();
            let name = name.to_string_lossy();
            // Top-level package domains only: "intel-rapl:N", not ":N:M".
            if !name.starts_with("intel-rapl:") || name.matches(':').count() != 1 {
                continue;
            }
            let counter = entry.path().join("energy_uj");
            if std::fs::read_to_string(&counter)
                .ok()
                .and_then(|s| s.trim().parse::<u64>().ok())
                .is_some()
            {
                counters.push(counter);
            }
        }
        counters.sort();
        if counters.is_empty() {
            None
        } else {
            Some(Self { counters })
        }
    }

    /// Sum of all package counters, in microjoules.
    pub fn read_uj(&self) -> Option<u64> {
        let mut total = 0u64;
        for counter in &self.counters {
            let raw = std::fs::read_to_string(counter).ok()?;
            total = total.checked_add(raw.trim().parse().ok()?)?;
        }
        Some(total)
    }
}

/// A measurement in progress. RAPL wins when available; otherwise the
/// constant-power model; otherwise no estimate at all.
#[derive(Debug)]
pub enum EnergyMeter {
    Rapl { reader: RaplReader, start_uj: u64 },
    ConstantPower { watts: f64 },
    Absent,
}

impl EnergyMeter {
    pub fn start(power_watts: Option<f64>) -> Self {
        Self::start_with(RaplReader::probe(), power_watts)
    }

    pub fn start_with(rapl: Option<RaplReader>, power_watts: Option<f64>) -> Self {
        if let Some(reader) = rapl {
            if let Some(start_uj) = reader.read_uj() {
                return EnergyMeter::Rapl { reader, start_uj };
            }
        }
        match power_watts {
            Some(watts) if watts > 0.0 => EnergyMeter::ConstantPower { watts },
            _ => EnergyMeter::Absent,
        }
    }

    /// Finishes the measurement. `elapsed_secs` is only used by the
    /// constant-power model; RAPL reads its own counters.
    pub fn finish(self, elapsed_secs: f64) -> Option<EnergyEstimate> {
        match self {
            EnergyMeter::Rapl { reader, start_uj } => {
                let end_uj = reader.read_uj()?;
                let delta_uj = end_uj.checked_sub(start_uj)?;
                Some(EnergyEstimate {
                    // 1 Wh = 3.6e9 uJ.
                    wh: delta_uj as f64 / 3.6e9,
                    source: EnergySource::Rapl,
                })
            }
            EnergyMeter::ConstantPower { watts } => Some(EnergyEstimate {
                wh: constant_power_wh(watts, elapsed_secs),
                source: EnergySource::ConstantPower,
            }),
            EnergyMeter::Absent => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_power_reference_point() {
        assert_eq!(constant_power_wh(50.0, 72.0), 1.0);
        assert_eq!(constant_power_wh(0.0, 100.0), 0.0);
    }

    #[test]
    fn absent_source_yields_none_not_zero() {
        let meter = EnergyMeter::start_with(None, None);
        assert!(meter.finish(100.0).is_none());
    }

    #[test]
    fn constant_power_meter_uses_elapsed_time() {
        let meter = EnergyMeter::start_with(None, Some(50.0));
        let estimate = meter.finish(72.0).unwrap();
        assert_eq!(estimate.wh, 1.0);
        assert_eq!(estimate.source, EnergySource::ConstantPower);
    }

    #[test]
    fn rapl_counters_from_fake_sysfs() {
        let root = tempfile::tempdir().unwrap();
        let pkg = root.path().join("intel-rapl:0");
        let sub = root.path().join("intel-rapl:0:0");
        std::fs::create_dir_all(&pkg).unwrap();
        std::fs::create_dir_all(&sub).unwrap();
        std::fs::write(pkg.join("energy_uj"), "1000000\n").unwrap();
        std::fs::write(sub.join("energy_uj"), "999\n").unwrap();

        let reader = RaplReader::probe_at(root.path()).unwrap();
        assert_eq!(reader.read_uj(), Some(1_000_000));

        let meter = EnergyMeter::start_with(Some(reader), Some(50.0));
        // 3.6e9 uJ is exactly 1 Wh.
        std::fs::write(pkg.join("energy_uj"), format!("{}\n", 1_000_000u64 + 3_600_000_000)).unwrap();
        let estimate = meter.finish(0.0).unwrap();
        assert_eq!(estimate.source, EnergySource::Rapl);
        assert!((estimate.wh - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rapl_preferred_over_constant_power() {
        let root = tempfile::tempdir().unwrap();
        let pkg = root.path().join("intel-rapl:0");
        std::fs::create_dir_all(&pkg).unwrap();
        std::fs::write(pkg.join("energy_uj"), "0\n").unwrap();
        let reader = RaplReader::probe_at(root.path()).unwrap();
        let meter = EnergyMeter::start_with(Some(reader), Some(50.0));
        assert!(matches!(meter, EnergyMeter::Rapl { .. }));
    }
}
