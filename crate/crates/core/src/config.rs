//! Plain-text experiment configuration: one `key = value` per line, `#`
//! starts a comment. Unset keys keep their defaults.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{dbm_to_watts, AccessMode, CsiMode, HarqMode, PairingStrategy, SystemConfig};

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::config(key, format!("cannot parse `{v}`")))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::config(key, format!("expected a boolean, got `{v}`"))),
    }
}

fn choice<T: Copy>(key: &str, v: &str, options: &[(&[&str], T)]) -> Result<T> {
    let lower = v.to_ascii_lowercase();
    options
        .iter()
        .find(|(names, _)| names.contains(&lower.as_str()))
        .map(|&(_, t)| t)
        .ok_or_else(|| Error::config(key, format!("unknown value `{v}`")))
}

pub fn parse_csi(key: &str, v: &str) -> Result<CsiMode> {
    choice(
        key,
        v,
        &[
            (&["statistical", "stat"], CsiMode::Statistical),
            (&["instantaneous", "inst"], CsiMode::Instantaneous),
        ],
    )
}

pub fn parse_harq(key: &str, v: &str) -> Result<HarqMode> {
    choice(
        key,
        v,
        &[
            (&["cc", "chase_combining"], HarqMode::ChaseCombining),
            (&["ir", "incremental_redundancy"], HarqMode::IncrementalRedundancy),
        ],
    )
}

pub fn parse_access(key: &str, v: &str) -> Result<AccessMode> {
    choice(key, v, &[(&["oma"], AccessMode::Oma), (&["noma"], AccessMode::Noma)])
}

pub fn parse_strategy(key: &str, v: &str) -> Result<PairingStrategy> {
    choice(
        key,
        v,
        &[
            (&["pc", "power_conservative"], PairingStrategy::PowerConservative),
            (&["rc", "resource_conservative"], PairingStrategy::ResourceConservative),
        ],
    )
}

/// Parses a configuration document on top of the default parameter set and
/// validates the result.
pub fn parse_config(text: &str) -> Result<SystemConfig> {
    let mut cfg = SystemConfig::default();
    let mut warmup_set = false;
    let mut bn = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}", lineno + 1), "expected `key = value`"))?;
        let (key, v) = (key.trim(), value.trim());
        match key {
            "n_users" | "N" => cfg.n_users = num(key, v)?,
            "n_slots" | "W" => cfg.n_slots_per_phase = num(key, v)?,
            "max_retx" | "L" => cfg.max_retx = num(key, v)?,
            "blocklength" | "K" => cfg.blocklength = num(key, v)?,
            "rate" | "R" => cfg.rate = num(key, v)?,
            "activation_prob" | "b" => cfg.activation_prob = num(key, v)?,
            "mean_arrivals" | "bn" => bn = Some((key.to_string(), num::<f64>(key, v)?)),
            "target_bler" | "eps_tar" => cfg.target_bler = num(key, v)?,
            "drop_threshold" | "eps_drop" => cfg.drop_threshold = num(key, v)?,
            "dist_min" => cfg.dist_min = num(key, v)?,
            "dist_max" => cfg.dist_max = num(key, v)?,
            "pathloss_exp" | "alpha" => cfg.pathloss_exp = num(key, v)?,
            "noise_dbm" => cfg.noise_power = dbm_to_watts(num(key, v)?),
            "noise_w" => cfg.noise_power = num(key, v)?,
            "csi" => cfg.csi_mode = parse_csi(key, v)?,
            "harq" => cfg.harq_mode = parse_harq(key, v)?,
            "access" => cfg.access_mode = parse_access(key, v)?,
            "strategy" => cfg.pairing_strategy = parse_strategy(key, v)?,
            "n_phases" => cfg.n_phases = num(key, v)?,
            "warmup_phases" => {
                cfg.warmup_phases = num(key, v)?;
                warmup_set = true;
            }
            "seed" => cfg.seed = num(key, v)?,
            "redraw_distances" => cfg.redraw_distances = flag(key, v)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
    }
    // mean arrivals depend on the final user count
    if let Some((key, bn)) = bn {
        if !(0.0..=cfg.n_users as f64).contains(&bn) {
            return Err(Error::config(key, "must lie in [0, n_users]"));
        }
        cfg.set_mean_arrivals(bn);
    }
    if !warmup_set {
        cfg.warmup_phases = SystemConfig::default_warmup(cfg.max_retx);
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn csi_name(m: CsiMode) -> &'static str {
    match m {
        CsiMode::Statistical => "statistical",
        CsiMode::Instantaneous => "instantaneous",
    }
}

pub fn harq_name(m: HarqMode) -> &'static str {
    match m {
        HarqMode::ChaseCombining => "cc",
        HarqMode::IncrementalRedundancy => "ir",
    }
}

pub fn access_name(m: AccessMode) -> &'static str {
    match m {
        AccessMode::Oma => "oma",
        AccessMode::Noma => "noma",
    }
}

pub fn strategy_name(m: PairingStrategy) -> &'static str {
    match m {
        PairingStrategy::PowerConservative => "pc",
        PairingStrategy::ResourceConservative => "rc",
    }
}

/// Writes every field so that [`parse_config`] reproduces `cfg` exactly.
pub fn emit_config(cfg: &SystemConfig) -> String {
    let mut s = String::new();
    let mut put = |k: &str, v: &dyn std::fmt::Display| {
        let _ = writeln!(s, "{k} = {v}");
    };
    put("n_users", &cfg.n_users);
    put("n_slots", &cfg.n_slots_per_phase);
    put("max_retx", &cfg.max_retx);
    put("blocklength", &cfg.blocklength);
    put("rate", &cfg.rate);
    put("activation_prob", &cfg.activation_prob);
    put("target_bler", &cfg.target_bler);
    put("drop_threshold", &cfg.drop_threshold);
    put("dist_min", &cfg.dist_min);
    put("dist_max", &cfg.dist_max);
    put("pathloss_exp", &cfg.pathloss_exp);
    put("noise_w", &cfg.noise_power);
    put("csi", &csi_name(cfg.csi_mode));
    put("harq", &harq_name(cfg.harq_mode));
    put("access", &access_name(cfg.access_mode));
    put("strategy", &strategy_name(cfg.pairing_strategy));
    put("n_phases", &cfg.n_phases);
    put("warmup_phases", &cfg.warmup_phases);
    put("seed", &cfg.seed);
    put("redraw_distances", &cfg.redraw_distances);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::watts_to_dbm;
    use proptest::prelude::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = parse_config("# nothing\n\n").unwrap();
        assert_eq!(cfg, SystemConfig::default());
        assert!((watts_to_dbm(cfg.noise_power) + 129.1).abs() < 1e-12);
        assert_eq!((cfg.n_users, cfg.n_slots_per_phase, cfg.max_retx, cfg.blocklength), (40, 10, 2, 50));
        assert_eq!((cfg.target_bler, cfg.drop_threshold), (1e-5, 1e-6));
        assert_eq!((cfg.dist_min, cfg.dist_max, cfg.pathloss_exp), (20.0, 120.0, 2.0));
    }

    #[test]
    fn instantaneous_chase_combining_is_rejected() {
        let err = parse_config("csi = instantaneous\nharq = cc").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "harq"), "{err}");
    }

    #[test]
    fn errors_name_the_key() {
        for (doc, key) in [
            ("bogus = 1", "bogus"),
            ("rate = fast", "rate"),
            ("b = 2", "activation_prob"),
            ("bn = 50", "bn"),
            ("access = tdma", "access"),
            ("noise_dbm = x", "noise_dbm"),
        ] {
            match parse_config(doc) {
                Err(Error::Config { key: k, .. }) => assert_eq!(k, key, "{doc}"),
                other => panic!("{doc}: {other:?}"),
            }
        }
        assert!(parse_config("just text").is_err());
    }

    #[test]
    fn aliases_and_derived_fields() {
        let cfg = parse_config("L = 1\nbn = 8 # per phase\nnoise_dbm = -100").unwrap();
        assert_eq!(cfg.max_retx, 1);
        assert_eq!(cfg.warmup_phases, 20);
        assert!((cfg.activation_prob - 0.2).abs() < 1e-15);
        assert!((watts_to_dbm(cfg.noise_power) + 100.0).abs() < 1e-12);
        let cfg = parse_config("bn = 8\nN = 80\nwarmup_phases = 3").unwrap();
        assert!((cfg.activation_prob - 0.1).abs() < 1e-15);
        assert_eq!(cfg.warmup_phases, 3);
    }

    proptest! {
        #[test]
        fn emit_then_parse_is_identity(
            b in 0.0..1.0f64,
            rate in 0.5..2.5f64,
            noise_dbm in -140.0..-90.0f64,
            l in 0usize..=2,
            seed in any::<u64>(),
            noma in any::<bool>(),
            ir in any::<bool>(),
            rc in any::<bool>(),
            redraw in any::<bool>(),
        ) {
            let cfg = SystemConfig {
                activation_prob: b,
                rate,
                noise_power: dbm_to_watts(noise_dbm),
                max_retx: l,
                seed,
                access_mode: if noma { AccessMode::Noma } else { AccessMode::Oma },
                harq_mode: if ir { HarqMode::IncrementalRedundancy } else { HarqMode::ChaseCombining },
                pairing_strategy: if rc { PairingStrategy::ResourceConservative } else { PairingStrategy::PowerConservative },
                redraw_distances: redraw,
                ..SystemConfig::default()
            };
            prop_assert_eq!(parse_config(&emit_config(&cfg)).unwrap(), cfg);
        }
    }
}
