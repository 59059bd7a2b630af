use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::encryption::{check_width, DEFAULT_MESSAGE_BITS};
use crate::error::{Error, Result};
use crate::key_exchange::DhProfile;

/// Protocol-level misbehaviour the simulator can inject.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// The sender opens its commitment with a different contribution.
    BadReveal { sender: usize },
    /// The sender never reveals.
    MissingReveal { sender: usize },
    /// The sender adds one to its encryption share at this epoch.
    CorruptShare { sender: usize, epoch: u64 },
    /// At this epoch every sender resubmits its previous ciphertext relabeled.
    Replay { epoch: u64 },
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fault::BadReveal { sender } => write!(f, "bad_reveal:{sender}"),
            Fault::MissingReveal { sender } => write!(f, "missing_reveal:{sender}"),
            Fault::CorruptShare { sender, epoch } => write!(f, "corrupt_share:{sender}@{epoch}"),
            Fault::Replay { epoch } => write!(f, "replay@{epoch}"),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Malformed(format!("{key}: cannot parse {value:?}")))
}

impl FromStr for Fault {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Malformed(format!("fault {s:?}"));
        let split = s.find([':', '@']).ok_or_else(bad)?;
        let (kind, arg) = (&s[..split], &s[split + 1..]);
        match kind {
            "bad_reveal" => Ok(Fault::BadReveal { sender: parse_num("fault", arg)? }),
            "missing_reveal" => Ok(Fault::MissingReveal { sender: parse_num("fault", arg)? }),
            "corrupt_share" => {
                let (sender, epoch) = arg.split_once('@').ok_or_else(bad)?;
                Ok(Fault::CorruptShare {
                    sender: parse_num("fault", sender)?,
                    epoch: parse_num("fault", epoch)?,
                })
            }
            "replay" => Ok(Fault::Replay { epoch: parse_num("fault", arg)? }),
            _ => Err(Error::Malformed(format!("unknown fault {kind:?}"))),
        }
    }
}

/// Simulation parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimConfig {
    pub n: usize,
    pub bits: u32,
    pub epochs: u64,
    pub seed: u64,
    pub dh_profile: DhProfile,
    pub corrupt_senders: BTreeSet<usize>,
    /// Accepted for completeness; receivers hold no keys in this protocol.
    pub corrupt_receivers: BTreeSet<usize>,
    pub faults: Vec<Fault>,
    pub parallel: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 4,
            bits: DEFAULT_MESSAGE_BITS,
            epochs: 10,
            seed: 0,
            dh_profile: DhProfile::Desk,
            corrupt_senders: BTreeSet::new(),
            corrupt_receivers: BTreeSet::new(),
            faults: Vec::new(),
            parallel: false,
        }
    }
}

fn parse_set(key: &str, value: &str) -> Result<BTreeSet<usize>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

impl SimConfig {
    pub fn new(n: usize, bits: u32, epochs: u64, seed: u64) -> Self {
        SimConfig {
            n,
            bits,
            epochs,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Malformed(format!("n must be at least 2, got {}", self.n)));
        }
        check_width(self.bits)?;
        let limit = self.n - 2;
        if self.corrupt_senders.len() > limit {
            return Err(Error::CorruptSetTooLarge {
                size: self.corrupt_senders.len(),
                limit,
            });
        }
        let out_of_range = self
            .corrupt_senders
            .iter()
            .chain(&self.corrupt_receivers)
            .copied()
            .chain(self.faults.iter().filter_map(|f| match *f {
                Fault::BadReveal { sender } | Fault::MissingReveal { sender } | Fault::CorruptShare { sender, .. } => {
                    Some(sender)
                }
                Fault::Replay { .. } => None,
            }))
            .find(|&i| i >= self.n);
        if let Some(index) = out_of_range {
            return Err(Error::IndexOutOfRange { index, n: self.n });
        }
        Ok(())
    }

    /// Parses `key=value` lines; `#` starts a comment and `fault` may repeat.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SimConfig::default();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Malformed(format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "n" => cfg.n = parse_num(key, value)?,
                "b" => cfg.bits = parse_num(key, value)?,
                "q" => cfg.epochs = parse_num(key, value)?,
                "seed" => cfg.seed = parse_num(key, value)?,
                "dh_profile" => cfg.dh_profile = value.parse()?,
                "corrupt_senders" => cfg.corrupt_senders = parse_set(key, value)?,
                "corrupt_receivers" => cfg.corrupt_receivers = parse_set(key, value)?,
                "fault" => cfg.faults.push(value.parse()?),
                "parallel" => cfg.parallel = parse_num(key, value)?,
                _ => return Err(Error::Malformed(format!("unknown key {key:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let join = |s: &BTreeSet<usize>| s.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let mut out = format!(
            "n={}\nb={}\nq={}\nseed={}\ndh_profile={}\ncorrupt_senders={}\ncorrupt_receivers={}\nparallel={}\n",
            self.n,
            self.bits,
            self.epochs,
            self.seed,
            self.dh_profile.name(),
            join(&self.corrupt_senders),
            join(&self.corrupt_receivers),
            self.parallel
        );
        for f in &self.faults {
            out.push_str(&format!("fault={f}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        let text = "n=5\nb=10 # width\nq=3\nseed=42\ndh_profile=production\ncorrupt_senders=1,3\n\
                    fault=bad_reveal:2\nfault=corrupt_share:4@2\nfault=replay@3\nparallel=true\n";
        let cfg = SimConfig::parse(text).unwrap();
        assert_eq!(cfg.n, 5);
        assert_eq!(cfg.bits, 10);
        assert_eq!(cfg.dh_profile, DhProfile::Production);
        assert_eq!(cfg.corrupt_senders, BTreeSet::from([1, 3]));
        assert_eq!(
            cfg.faults,
            vec![
                Fault::BadReveal { sender: 2 },
                Fault::CorruptShare { sender: 4, epoch: 2 },
                Fault::Replay { epoch: 3 }
            ]
        );
        assert!(cfg.parallel);
        assert_eq!(SimConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn validation() {
        assert!(SimConfig::new(1, 8, 1, 0).validate().is_err());
        assert!(SimConfig::new(2, 0, 1, 0).validate().is_err());
        let mut cfg = SimConfig::new(4, 8, 1, 0);
        cfg.corrupt_senders = BTreeSet::from([0, 1]);
        cfg.validate().unwrap();
        cfg.corrupt_senders.insert(2);
        assert_eq!(cfg.validate(), Err(Error::CorruptSetTooLarge { size: 3, limit: 2 }));
        let mut cfg = SimConfig::new(4, 8, 1, 0);
        cfg.faults.push(Fault::MissingReveal { sender: 4 });
        assert_eq!(cfg.validate(), Err(Error::IndexOutOfRange { index: 4, n: 4 }));
    }

    #[test]
    fn rejects_unknown_keys_and_garbage() {
        assert!(SimConfig::parse("colour=blue").is_err());
        assert!(SimConfig::parse("n").is_err());
        assert!(SimConfig::parse("n=two").is_err());
        assert!(SimConfig::parse("fault=explode:1").is_err());
    }
}
