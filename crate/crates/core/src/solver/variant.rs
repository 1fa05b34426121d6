use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Injection {
    /// Spectral homogenization.
    Sh,
    /// `v + σ·n` with white `n`.
    Naive,
    None,
}

/// One ablation row: dual coupling on/off × injection kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSpec {
    #[serde(with = "on_off")]
    pub dual_coupling: bool,
    pub injection: Injection,
}

mod on_off {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(if *v { "on" } else { "off" })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match String::deserialize(d)?.as_str() {
            "on" => Ok(true),
            "off" => Ok(false),
            other => Err(D::Error::custom(format!("expected on|off, got {other:?}"))),
        }
    }
}

impl VariantSpec {
    pub const fn new(dual_coupling: bool, injection: Injection) -> Self {
        Self {
            dual_coupling,
            injection,
        }
    }

    /// Dual coupling with spectral homogenization.
    pub const FULL: VariantSpec = VariantSpec::new(true, Injection::Sh);
    pub const DC_ONLY: VariantSpec = VariantSpec::new(true, Injection::None);
    /// Memoryless splitting, `u ≡ 0`.
    pub const HQS: VariantSpec = VariantSpec::new(false, Injection::None);
    pub const HQS_SH: VariantSpec = VariantSpec::new(false, Injection::Sh);
    pub const DC_NAIVE: VariantSpec = VariantSpec::new(true, Injection::Naive);

    /// The four rows of the dual × homogenization grid.
    pub const ABLATION_GRID: [VariantSpec; 4] = [Self::HQS, Self::HQS_SH, Self::DC_ONLY, Self::FULL];

    /// Short label such as `dual=on,inject=sh`.
    pub fn key(&self) -> String {
        self.to_string()
    }

    /// Human-readable row name.
    pub fn label(&self) -> &'static str {
        match (self.dual_coupling, self.injection) {
            (false, Injection::None) => "HQS",
            (false, Injection::Sh) => "HQS+SH",
            (false, Injection::Naive) => "HQS+naive",
            (true, Injection::None) => "DC",
            (true, Injection::Sh) => "DC+SH",
            (true, Injection::Naive) => "DC+naive",
        }
    }
}

impl fmt::Display for VariantSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inject = match self.injection {
            Injection::Sh => "sh",
            Injection::Naive => "naive",
            Injection::None => "none",
        };
        write!(
            f,
            "dual={},inject={inject}",
            if self.dual_coupling { "on" } else { "off" }
        )
    }
}

impl FromStr for VariantSpec {
    type Err = Error;

    /// Parses `dual=on|off,inject=sh|naive|none` (either key may be
    /// omitted; defaults are the full method).
    fn from_str(s: &str) -> Result<Self> {
        let mut v = VariantSpec::FULL;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("variant field {part:?} is not key=value")))?;
            match (key.trim(), value.trim()) {
                ("dual", "on") => v.dual_coupling = true,
                ("dual", "off") => v.dual_coupling = false,
                ("inject", "sh") => v.injection = Injection::Sh,
                ("inject", "naive") => v.injection = Injection::Naive,
                ("inject", "none") => v.injection = Injection::None,
                _ => return Err(Error::invalid(format!("unknown variant field {part:?}"))),
            }
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_agree() {
        for v in [
            VariantSpec::FULL,
            VariantSpec::HQS,
            VariantSpec::DC_NAIVE,
            VariantSpec::HQS_SH,
        ] {
            assert_eq!(v.key().parse::<VariantSpec>().unwrap(), v);
        }
        assert_eq!("dual=off".parse::<VariantSpec>().unwrap(), VariantSpec::HQS_SH);
        assert!("dual=maybe".parse::<VariantSpec>().is_err());
        assert!("inject".parse::<VariantSpec>().is_err());
    }

    #[test]
    fn toml_keys() {
        let v: VariantSpec = toml::from_str("dual_coupling = \"off\"\ninjection = \"none\"\n").unwrap();
        assert_eq!(v, VariantSpec::HQS);
        assert!(toml::from_str::<VariantSpec>("dual_coupling = \"yes\"\ninjection = \"none\"\n").is_err());
    }
}
