//! Plain-text `key = value` form of [`NoiseSpec`].
//!
//! ```text
//! family = gaussian
//! rule = additive
//! seed = 42
//! mean = 0
//! std_dev = 33.25
//! ```
//!
//! Numbers are printed in shortest round-trip form, so parsing a printed
//! record reproduces the spec exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::{NoiseFamily, NoiseParams, NoiseRule, NoiseSpec};
use crate::error::{Error, Result};

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "family = {}", self.family())?;
        writeln!(f, "rule = {}", self.rule().name())?;
        writeln!(f, "seed = {}", self.seed)?;
        match self.params {
            NoiseParams::Gaussian { mean, std_dev } => {
                writeln!(f, "mean = {mean}")?;
                writeln!(f, "std_dev = {std_dev}")
            }
            NoiseParams::SaltPepper { density } => writeln!(f, "density = {density}"),
            NoiseParams::Speckle { shape, scale } => {
                writeln!(f, "shape = {shape}")?;
                writeln!(f, "scale = {scale}")
            }
            NoiseParams::Poisson { rate, centered } => {
                writeln!(f, "rate = {rate}")?;
                writeln!(f, "centered = {centered}")
            }
            NoiseParams::Uniform { low, high } => {
                writeln!(f, "low = {low}")?;
                writeln!(f, "high = {high}")
            }
        }
    }
}

/// Splits `key = value` lines, skipping blanks and `#` comments.
pub(crate) fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim().to_string();
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Parse(format!("line {}: duplicate key {key:?}", lineno + 1)));
        }
    }
    Ok(out)
}

struct Fields(BTreeMap<String, String>);

impl Fields {
    fn take(&mut self, key: &str) -> Result<String> {
        self.0
            .remove(key)
            .ok_or_else(|| Error::Parse(format!("missing key {key:?}")))
    }

    fn number(&mut self, key: &str) -> Result<f64> {
        let raw = self.take(key)?;
        raw.parse()
            .map_err(|_| Error::Parse(format!("{key}: not a number: {raw:?}")))
    }
}

impl FromStr for NoiseSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut fields = Fields(parse_key_values(text)?);
        let family: NoiseFamily = fields.take("family")?.parse()?;
        let seed_raw = fields.take("seed")?;
        let seed = seed_raw
            .parse()
            .map_err(|_| Error::Parse(format!("seed: not a u64: {seed_raw:?}")))?;
        if let Some(rule) = fields.0.remove("rule") {
            let rule: NoiseRule = rule.parse()?;
            if rule != family.rule() {
                return Err(Error::Parse(format!(
                    "{family} noise must use the {} rule, record says {}",
                    family.rule().name(),
                    rule.name()
                )));
            }
        }
        let params = match family {
            NoiseFamily::Gaussian => NoiseParams::Gaussian {
                mean: fields.number("mean")?,
                std_dev: fields.number("std_dev")?,
            },
            NoiseFamily::SaltPepper => NoiseParams::SaltPepper {
                density: fields.number("density")?,
            },
            NoiseFamily::Speckle => NoiseParams::Speckle {
                shape: fields.number("shape")?,
                scale: fields.number("scale")?,
            },
            NoiseFamily::Poisson => {
                let rate = fields.number("rate")?;
                let centered = match fields.0.remove("centered").as_deref() {
                    None | Some("false") => false,
                    Some("true") => true,
                    Some(other) => {
                        return Err(Error::Parse(format!("centered: expected true/false, got {other:?}")))
                    }
                };
                NoiseParams::Poisson { rate, centered }
            }
            NoiseFamily::Uniform => NoiseParams::Uniform {
                low: fields.number("low")?,
                high: fields.number("high")?,
            },
        };
        if let Some(extra) = fields.0.keys().next() {
            return Err(Error::Parse(format!("unexpected key {extra:?} for {family} noise")));
        }
        NoiseSpec::new(params, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gaussian_record_layout() {
        let spec = NoiseSpec::new(NoiseParams::Gaussian { mean: 0.0, std_dev: 33.25 }, 42).unwrap();
        assert_eq!(
            spec.to_string(),
            "family = gaussian\nrule = additive\nseed = 42\nmean = 0\nstd_dev = 33.25\n"
        );
    }

    #[test]
    fn mismatched_rule_is_rejected() {
        let text = "family = speckle\nrule = additive\nseed = 1\nshape = 2\nscale = 0.5\n";
        assert!(text.parse::<NoiseSpec>().is_err());
    }

    #[test]
    fn missing_and_extra_keys_are_rejected() {
        assert!("family = uniform\nseed = 1\nlow = -1\n".parse::<NoiseSpec>().is_err());
        assert!("family = salt_pepper\nseed = 1\ndensity = 0.1\nrate = 3\n"
            .parse::<NoiseSpec>()
            .is_err());
    }

    #[test]
    fn invalid_values_are_rejected_on_parse() {
        assert!("family = salt_pepper\nseed = 1\ndensity = 0.7\n".parse::<NoiseSpec>().is_err());
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# calibrated\nfamily = poisson\n\nseed = 9 # stream key\nrate = 4.5\ncentered = true\n";
        let spec: NoiseSpec = text.parse().unwrap();
        assert_eq!(spec.params, NoiseParams::Poisson { rate: 4.5, centered: true });
        assert_eq!(spec.seed, 9);
    }

    fn any_params() -> impl Strategy<Value = NoiseParams> {
        prop_oneof![
            (-50.0f64..50.0, 0.0f64..100.0).prop_map(|(mean, std_dev)| NoiseParams::Gaussian { mean, std_dev }),
            (0.0f64..0.5).prop_map(|density| NoiseParams::SaltPepper { density }),
            (0.01f64..50.0, 0.01f64..5.0).prop_map(|(shape, scale)| NoiseParams::Speckle { shape, scale }),
            (0.01f64..500.0, any::<bool>()).prop_map(|(rate, centered)| NoiseParams::Poisson { rate, centered }),
            (-100.0f64..0.0, 0.001f64..100.0).prop_map(|(low, w)| NoiseParams::Uniform { low, high: low + w }),
        ]
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(params in any_params(), seed in any::<u64>()) {
            let spec = NoiseSpec::new(params, seed).unwrap();
            let back: NoiseSpec = spec.to_string().parse().unwrap();
            prop_assert_eq!(back, spec);
        }
    }
}
