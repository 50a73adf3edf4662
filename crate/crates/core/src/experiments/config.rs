use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::enumeration::DEFAULT_CAP;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Dense,
    Lazy,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Mode::Dense),
            "lazy" => Ok(Mode::Lazy),
            _ => Err(Error::Config(format!("unknown mode {s:?}"))),
        }
    }
}

/// Per-cell statistics a sweep can collect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Stat {
    ExistsComplete,
    Unmatched,
    QMinus,
    QPlus,
    RMinus,
    RPlus,
    Proposals,
    SComplete,
}

impl Stat {
    pub const ALL: [Stat; 8] = [
        Stat::ExistsComplete,
        Stat::Unmatched,
        Stat::QMinus,
        Stat::QPlus,
        Stat::RMinus,
        Stat::RPlus,
        Stat::Proposals,
        Stat::SComplete,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stat::ExistsComplete => "exists_complete",
            Stat::Unmatched => "unmatched",
            Stat::QMinus => "Q_minus",
            Stat::QPlus => "Q_plus",
            Stat::RMinus => "R_minus",
            Stat::RPlus => "R_plus",
            Stat::Proposals => "proposals",
            Stat::SComplete => "S_complete",
        }
    }

    /// Statistics that need the women-proposing run.
    pub(crate) fn needs_women(self) -> bool {
        matches!(self, Stat::QPlus | Stat::RMinus)
    }
}

impl fmt::Display for Stat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stat::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown statistic {s:?}")))
    }
}

/// Admissibility probabilities, either given directly or as multipliers `c`
/// of `(ln n)^2 / n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PSpec {
    Absolute(Vec<f64>),
    Multiplier(Vec<f64>),
}

impl PSpec {
    fn values(&self) -> &[f64] {
        match self {
            PSpec::Absolute(v) | PSpec::Multiplier(v) => v,
        }
    }
}

/// `(ln n)^2 / n`
pub fn threshold(n: usize) -> f64 {
    let nf = n as f64;
    nf.ln().powi(2) / nf
}

/// One `(n, p)` grid point with its multiplier `c = p / threshold(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub n: usize,
    pub p: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
    pub p_spec: PSpec,
    pub trials: u64,
    pub master_seed: u64,
    pub mode: Mode,
    pub statistics: Vec<Stat>,
    /// Record per-row trial time. Off by default so that output depends only
    /// on the configuration.
    pub timing: bool,
}

impl SweepConfig {
    pub fn new(n_values: Vec<usize>, p_spec: PSpec, trials: u64, master_seed: u64) -> Self {
        SweepConfig {
            n_values,
            p_spec,
            trials,
            master_seed,
            mode: Mode::Dense,
            statistics: default_statistics(),
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(Error::Config("no n values".into()));
        }
        if let Some(&n) = self.n_values.iter().find(|&&n| n < 2) {
            return Err(Error::Config(format!("n = {n} must be at least 2")));
        }
        if self.mode == Mode::Lazy && self.n_values.iter().any(|&n| n >= u32::MAX as usize) {
            return Err(Error::Config("n too large for lazy mode".into()));
        }
        if self.p_spec.values().is_empty() {
            return Err(Error::Config("no p values".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if let PSpec::Multiplier(cs) = &self.p_spec {
            if let Some(c) = cs.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
                return Err(Error::Config(format!(
                    "multiplier c = {c} must be finite and >= 0"
                )));
            }
        }
        for cell in self.cells() {
            if !(0.0..=1.0).contains(&cell.p) {
                return Err(Error::Config(format!("p = {} is not in [0, 1]", cell.p)));
            }
        }
        if self.statistics.contains(&Stat::SComplete) {
            if self.mode != Mode::Dense {
                return Err(Error::Config("S_complete requires dense mode".into()));
            }
            if let Some(&n) = self.n_values.iter().find(|&&n| n > DEFAULT_CAP) {
                return Err(Error::Config(format!(
                    "S_complete requires n <= {DEFAULT_CAP} (got {n})"
                )));
            }
        }
        Ok(())
    }

    /// Grid points in output order: `n` outer, `p` inner.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &n in &self.n_values {
            let t = threshold(n);
            for &v in self.p_spec.values() {
                cells.push(match self.p_spec {
                    PSpec::Absolute(_) => Cell { n, p: v, c: v / t },
                    PSpec::Multiplier(_) => Cell {
                        n,
                        p: (v * t).min(1.0),
                        c: v,
                    },
                });
            }
        }
        cells
    }

    pub fn wants(&self, stat: Stat) -> bool {
        self.statistics.contains(&stat)
    }

    /// Parses the flat `key = value` format. Blank lines and lines starting
    /// with `#` are ignored; lists are comma separated.
    pub fn parse(text: &str) -> Result<SweepConfig> {
        let mut n_values = None;
        let mut p_spec = None;
        let mut trials = None;
        let mut seed = 0;
        let mut mode = Mode::Dense;
        let mut statistics = default_statistics();
        let mut timing = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse { line: i + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected key = value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "n" => n_values = Some(parse_list(value).map_err(err)?),
                "p" | "c" => {
                    if p_spec.is_some() {
                        return Err(err("give exactly one of p and c".into()));
                    }
                    let values = parse_list(value).map_err(err)?;
                    p_spec = Some(if key == "p" {
                        PSpec::Absolute(values)
                    } else {
                        PSpec::Multiplier(values)
                    });
                }
                "trials" => trials = Some(parse_one(value).map_err(err)?),
                "seed" => seed = parse_one(value).map_err(err)?,
                "mode" => mode = value.parse().map_err(|e: Error| err(e.to_string()))?,
                "statistics" => statistics = parse_stats(value).map_err(|e| err(e.to_string()))?,
                "timing" => timing = parse_one(value).map_err(err)?,
                _ => return Err(err(format!("unknown key {key:?}"))),
            }
        }
        let config = SweepConfig {
            n_values: n_values.ok_or_else(|| Error::Config("missing key n".into()))?,
            p_spec: p_spec.ok_or_else(|| Error::Config("missing key p or c".into()))?,
            trials: trials.ok_or_else(|| Error::Config("missing key trials".into()))?,
            master_seed: seed,
            mode,
            statistics,
            timing,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Everything except `S_complete`, which needs enumeration.
pub fn default_statistics() -> Vec<Stat> {
    Stat::ALL[..7].to_vec()
}

pub fn parse_stats(value: &str) -> Result<Vec<Stat>> {
    let mut stats = value
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<Vec<Stat>>>()?;
    stats.sort();
    stats.dedup();
    Ok(stats)
}

fn parse_one<T: FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| format!("{value:?}: {e}"))
}

fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    value.split(',').map(|s| parse_one(s.trim())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_config() {
        let cfg = SweepConfig::parse(
            "# grid\nn = 100, 200\nc = 0.5,1\ntrials = 10\nseed = 7\nmode = lazy\nstatistics = unmatched,Q_minus\n",
        )
        .unwrap();
        assert_eq!(cfg.n_values, vec![100, 200]);
        assert_eq!(cfg.p_spec, PSpec::Multiplier(vec![0.5, 1.0]));
        assert_eq!(cfg.mode, Mode::Lazy);
        assert_eq!(cfg.statistics, vec![Stat::Unmatched, Stat::QMinus]);
        assert_eq!(cfg.cells().len(), 4);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "n = 10\ntrials = 5",
            "n = 10\np = 0.5\nc = 1\ntrials = 5",
            "n = 10\np = 1.5\ntrials = 5",
            "n = 10\np = 0.5\ntrials = 0",
            "n = 1\np = 0.5\ntrials = 5",
            "n = 10\np = 0.5\ntrials = 5\ncolour = red",
            "n = 10\np = 0.5\ntrials = 5\nstatistics = S_complete",
            "n = x\np = 0.5\ntrials = 5",
            "n = 10\np = 0.5\ntrials = 5\nmode = sparse",
            "garbage",
        ] {
            let err = SweepConfig::parse(text).unwrap_err();
            assert!(err.is_config(), "{text}: {err}");
        }
    }

    #[test]
    fn multiplier_resolution() {
        let cfg = SweepConfig::new(vec![1000], PSpec::Multiplier(vec![1.0, 1000.0]), 1, 0);
        let cells = cfg.cells();
        assert!((cells[0].p - 1000f64.ln().powi(2) / 1000.0).abs() < 1e-15);
        assert_eq!(cells[1].p, 1.0);
        assert_eq!(cells[1].c, 1000.0);
        let cfg = SweepConfig::new(vec![1000], PSpec::Absolute(vec![0.5]), 1, 0);
        assert!((cfg.cells()[0].c * threshold(1000) - 0.5).abs() < 1e-15);
    }
}
