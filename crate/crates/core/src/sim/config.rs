use std::fmt;
use std::str::FromStr;

use crate::cwz::CwzConfig;
use crate::error::{invalid, Error, Result};
use crate::lasso::LassoSettings;
use crate::vote::{NoiseScale, PrivacyBudget};

use super::{DataSpec, TruthSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// Non-private majority vote.
    Vote,
    DpVote,
    /// Pooled single-machine noisy baseline.
    Cwz,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Vote, Method::DpVote, Method::Cwz];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Vote => "vote",
            Method::DpVote => "dpvote",
            Method::Cwz => "cwz",
        }
    }

    pub(crate) fn tag(self) -> u64 {
        match self {
            Method::Vote => 0,
            Method::DpVote => 1,
            Method::Cwz => 2,
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vote" => Ok(Method::Vote),
            "dpvote" => Ok(Method::DpVote),
            "cwz" => Ok(Method::Cwz),
            other => invalid(format!("unknown method '{other}' (expected vote, dpvote or cwz)")),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Problem {
    Mean,
    Regression,
}

impl Problem {
    pub fn as_str(self) -> &'static str {
        match self {
            Problem::Mean => "mean",
            Problem::Regression => "regression",
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Machines,
    Epsilon,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "machines" | "m" => Ok(SweepAxis::Machines),
            "epsilon" | "eps" => Ok(SweepAxis::Epsilon),
            other => invalid(format!("unknown sweep axis '{other}' (expected machines or epsilon)")),
        }
    }
}

/// One sweep axis and the values it takes.
#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl Sweep {
    pub fn new(axis: SweepAxis, values: Vec<f64>) -> Self {
        Sweep { axis, values }
    }

    /// Inclusive range `a:b:step`. Values are rounded to 10 decimals so that
    /// `0.1:1:0.1` ends exactly at `1`.
    pub fn parse_range(axis: SweepAxis, spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        let nums = parts
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::InvalidArgument(format!("bad sweep bound '{s}'"))))
            .collect::<Result<Vec<_>>>()?;
        let (start, stop, step) = match nums[..] {
            [a, b, s] => (a, b, s),
            [a, b] => (a, b, 1.0),
            [a] => (a, a, 1.0),
            _ => return invalid(format!("sweep values must look like a:b:step, got '{spec}'")),
        };
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
            return invalid(format!("empty or malformed sweep range '{spec}'"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        let values = (0..count).map(|k| ((start + k as f64 * step) * 1e10).round() / 1e10).collect();
        Ok(Sweep { axis, values })
    }
}

/// Desk scale is `p = 100, n = 200`; full scale matches the published figures, `p = n = 500`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Full,
}

/// Named configurations matching the four published figures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Mean, sweep over the number of machines.
    Fig2,
    /// Mean, sweep over ε at a fixed number of machines.
    Fig3,
    /// Regression, sweep over the number of machines.
    Fig4,
    /// Regression, sweep over ε.
    Fig5,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(Preset::Fig2),
            "fig3" => Ok(Preset::Fig3),
            "fig4" => Ok(Preset::Fig4),
            "fig5" => Ok(Preset::Fig5),
            other => invalid(format!("unknown preset '{other}' (expected fig2..fig5)")),
        }
    }
}

impl Preset {
    pub fn config(self, scale: Scale) -> ExperimentConfig {
        let problem = match self {
            Preset::Fig2 | Preset::Fig3 => Problem::Mean,
            Preset::Fig4 | Preset::Fig5 => Problem::Regression,
        };
        let mut cfg = ExperimentConfig::new(problem, scale);
        let machines = match scale {
            Scale::Desk => vec![100.0, 200.0, 400.0, 800.0],
            Scale::Full => (5..=15).map(|k| 100.0 * k as f64).collect(),
        };
        let epsilons: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
        cfg.sweep = Some(match self {
            Preset::Fig2 | Preset::Fig4 => Sweep::new(SweepAxis::Machines, machines),
            Preset::Fig3 | Preset::Fig5 => Sweep::new(SweepAxis::Epsilon, epsilons),
        });
        cfg
    }
}

/// Everything needed to reproduce one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub method: Method,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub s_tilde: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub lambda_n: f64,
    /// Explicit θ*; `None` uses the default ten-coordinate signal.
    pub theta: Option<Vec<f64>>,
    pub decay: f64,
    pub replications: usize,
    pub seed: u64,
    pub sweep: Option<Sweep>,
    pub truncation: f64,
    pub cwz_steps: usize,
    pub cwz_step_size: f64,
    pub cwz_scale_factor: f64,
    pub lasso: LassoSettings,
    /// Mechanism noise multiplier (test hook; `1` in normal runs).
    pub mechanism_noise: NoiseScale,
    /// Data noise multiplier (test hook; `1` in normal runs).
    pub data_noise: f64,
    /// Fill the `wall_ms` column. Off by default so the CSV is reproducible byte for byte.
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn new(problem: Problem, scale: Scale) -> Self {
        let (p, n) = match scale {
            Scale::Desk => (100, 200),
            Scale::Full => (500, 500),
        };
        ExperimentConfig {
            problem,
            method: Method::DpVote,
            m: 800,
            n,
            p,
            s_tilde: 15,
            epsilon: 0.5,
            delta: 0.05,
            lambda_n: 0.1,
            theta: None,
            decay: 0.5,
            replications: 50,
            seed: 1,
            sweep: None,
            truncation: 2.0,
            cwz_steps: 20,
            cwz_step_size: 0.1,
            cwz_scale_factor: 1.0,
            lasso: LassoSettings::default(),
            mechanism_noise: NoiseScale::CALIBRATED,
            data_noise: 1.0,
            record_timing: false,
        }
    }

    pub fn truth(&self) -> Result<TruthSpec> {
        match &self.theta {
            Some(theta) if theta.len() != self.p => {
                invalid(format!("theta has length {}, expected p = {}", theta.len(), self.p))
            }
            Some(theta) => TruthSpec::new(theta.clone()),
            None => TruthSpec::default_signal(self.p),
        }
    }

    pub fn budget(&self) -> Result<PrivacyBudget> {
        PrivacyBudget::new(self.epsilon, self.delta, self.s_tilde)
    }

    pub fn data_spec(&self) -> DataSpec {
        DataSpec { m: self.m, n: self.n, decay: self.decay, noise_scale: self.data_noise }
    }

    pub fn cwz(&self) -> Result<CwzConfig> {
        let cfg = CwzConfig {
            truncation: self.truncation,
            steps: self.cwz_steps,
            step_size: self.cwz_step_size,
            budget: self.budget()?,
            scale_factor: self.cwz_scale_factor,
            noise: self.mechanism_noise,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// One configuration per sweep point (just `self` without a sweep).
    pub fn points(&self) -> Result<Vec<ExperimentConfig>> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![ExperimentConfig { sweep: None, ..self.clone() }]);
        };
        if sweep.values.is_empty() {
            return invalid("sweep has no values");
        }
        sweep
            .values
            .iter()
            .map(|&v| {
                let mut point = ExperimentConfig { sweep: None, ..self.clone() };
                match sweep.axis {
                    SweepAxis::Machines => {
                        if !(v >= 1.0) || v.fract() != 0.0 {
                            return invalid(format!("machine counts must be positive integers, got {v}"));
                        }
                        point.m = v as usize;
                    }
                    SweepAxis::Epsilon => point.epsilon = v,
                }
                Ok(point)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        for point in self.points()? {
            point.validate_point()?;
        }
        Ok(())
    }

    fn validate_point(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.p == 0 {
            return invalid("m, n and p must be positive");
        }
        if self.s_tilde > self.p {
            return invalid(format!("s_tilde = {} exceeds p = {}", self.s_tilde, self.p));
        }
        if self.replications == 0 {
            return invalid("replications must be at least 1");
        }
        if !(self.lambda_n > 0.0) || !self.lambda_n.is_finite() {
            return invalid(format!("lambda_N must be positive, got {}", self.lambda_n));
        }
        self.budget()?;
        self.truth()?;
        self.data_spec().validate()?;
        self.cwz()?;
        Ok(())
    }
}
