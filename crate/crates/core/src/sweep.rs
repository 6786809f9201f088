//! Parameter sweeps: one simulation point per axis value, several trials
//! per point, trials spread over a thread pool.

use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{MetricsLedger, Summary};
use crate::model::SystemConfig;
use crate::sim::{run_trial, Tables};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Mean new packets per phase, `b * N`.
    MeanArrivals,
    /// Transmission rate in bits per channel use.
    Rate,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::MeanArrivals => "bn",
            SweepAxis::Rate => "rate",
        }
    }

    /// Copy of `base` with the axis set to `value`.
    pub fn apply(self, base: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut cfg = base.clone();
        let n = base.n_users as f64;
        match self {
            SweepAxis::MeanArrivals => {
                if !(0.05 * n..=0.5 * n).contains(&value) {
                    return Err(Error::config("bn", format!("{value} outside [{}, {}]", 0.05 * n, 0.5 * n)));
                }
                cfg.set_mean_arrivals(value);
            }
            SweepAxis::Rate => {
                if !(0.5..=2.5).contains(&value) {
                    return Err(Error::config("rate", format!("{value} outside [0.5, 2.5]")));
                }
                cfg.rate = value;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bn" | "arrivals" => Ok(SweepAxis::MeanArrivals),
            "rate" | "R" => Ok(SweepAxis::Rate),
            _ => Err(Error::config("axis", format!("unknown axis `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub config: SystemConfig,
    pub ledger: MetricsLedger,
    pub summary: Summary,
}

#[derive(Debug)]
pub struct SweepOptions<'a> {
    pub trials: u64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    /// Directory for precomputed tables.
    pub cache_dir: Option<&'a Path>,
}

/// Runs every point of the sweep. Each point either yields its merged
/// results or the error that stopped it; one failing point does not stop the
/// others.
pub fn run_sweep(
    base: &SystemConfig,
    axis: SweepAxis,
    values: &[f64],
    opts: &SweepOptions,
) -> Result<Vec<(f64, Result<SweepPoint>)>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    let prepared: Vec<Result<(SystemConfig, Tables)>> = values
        .iter()
        .map(|&v| {
            let cfg = axis.apply(base, v)?;
            let tables = Tables::prepare(&cfg, opts.cache_dir)?;
            Ok((cfg, tables))
        })
        .collect();
    let jobs: Vec<(usize, u64)> = prepared
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_ok())
        .flat_map(|(i, _)| (0..opts.trials).map(move |t| (i, t)))
        .collect();
    let results: Vec<Result<MetricsLedger>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, t)| {
                let (cfg, tables) = prepared[i].as_ref().expect("filtered");
                run_trial(cfg, tables, t)
            })
            .collect()
    });
    let mut per_point: Vec<Vec<Result<MetricsLedger>>> = values.iter().map(|_| Vec::new()).collect();
    for (&(i, _), r) in jobs.iter().zip(results) {
        per_point[i].push(r);
    }
    Ok(values
        .iter()
        .zip(prepared)
        .zip(per_point)
        .map(|((&v, prep), ledgers)| {
            let point = prep.and_then(|(cfg, _)| {
                // trial order, independent of scheduling
                let mut ledger = MetricsLedger::new(cfg.max_retx);
                for l in ledgers {
                    ledger.merge(&l?);
                }
                let summary = Summary::from_ledger(&ledger, cfg.rate);
                Ok(SweepPoint {
                    axis_value: v,
                    config: cfg,
                    ledger,
                    summary,
                })
            });
            (v, point)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SystemConfig {
        SystemConfig {
            n_phases: 60,
            warmup_phases: 5,
            ..SystemConfig::default()
        }
    }

    #[test]
    fn axis_ranges() {
        let base = small();
        assert!(SweepAxis::MeanArrivals.apply(&base, 1.0).is_err());
        assert!(SweepAxis::MeanArrivals.apply(&base, 21.0).is_err());
        assert!((SweepAxis::MeanArrivals.apply(&base, 8.0).unwrap().activation_prob - 0.2).abs() < 1e-15);
        assert!(SweepAxis::Rate.apply(&base, 0.4).is_err());
        assert_eq!(SweepAxis::Rate.apply(&base, 2.5).unwrap().rate, 2.5);
        assert_eq!("bn".parse::<SweepAxis>().unwrap(), SweepAxis::MeanArrivals);
        assert!("x".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let base = small();
        let run = |threads| {
            let opts = SweepOptions {
                trials: 3,
                threads,
                cache_dir: None,
            };
            run_sweep(&base, SweepAxis::MeanArrivals, &[4.0, 30.0, 10.0], &opts).unwrap()
        };
        let (a, b) = (run(1), run(3));
        assert_eq!(a.len(), 3);
        assert!(a[1].1.is_err());
        for ((va, pa), (vb, pb)) in a.iter().zip(&b) {
            assert_eq!(va, vb);
            match (pa, pb) {
                (Ok(x), Ok(y)) => {
                    assert_eq!(x.ledger, y.ledger);
                    assert_eq!(x.ledger.phases_observed, 180);
                }
                (Err(_), Err(_)) => {}
                _ => panic!("outcome differs"),
            }
        }
    }

    #[test]
    fn trials_use_distinct_streams() {
        let base = small();
        let opts = SweepOptions {
            trials: 2,
            threads: 1,
            cache_dir: None,
        };
        let cfg = SweepAxis::MeanArrivals.apply(&base, 8.0).unwrap();
        let tables = Tables::prepare(&cfg, None).unwrap();
        let (t0, t1) = (run_trial(&cfg, &tables, 0).unwrap(), run_trial(&cfg, &tables, 1).unwrap());
        assert_ne!(t0, t1);
        let pts = run_sweep(&base, SweepAxis::MeanArrivals, &[8.0], &opts).unwrap();
        let merged = MetricsLedger::merged([&t0, &t1]);
        assert_eq!(pts[0].1.as_ref().unwrap().ledger, merged);
    }
}
