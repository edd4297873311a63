use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::GnnError;
use crate::scalar::{parse_decimal, ratio_from_f64};

/// Exact neighbor sampling ratio in (0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SampleRatio(Ratio<u64>);

impl SampleRatio {
    pub const FULL: SampleRatio = SampleRatio(Ratio::new_raw(1, 1));

    pub fn new(ratio: Ratio<u64>) -> Result<Self, GnnError> {
        if *ratio.numer() == 0 || ratio > Ratio::from_integer(1) {
            return Err(GnnError::InvalidConfig(format!("sample ratio {ratio} is outside (0, 1]")));
        }
        Ok(Self(ratio))
    }

    pub fn from_f64(value: f64) -> Result<Self, GnnError> {
        let ratio = ratio_from_f64(value)
            .ok_or_else(|| GnnError::InvalidConfig(format!("sample ratio {value} is not a decimal")))?;
        Self::new(ratio)
    }

    pub fn ratio(&self) -> Ratio<u64> {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

impl FromStr for SampleRatio {
    type Err = GnnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let ratio = match s.split_once('/') {
            Some((n, d)) => {
                let n: u64 = n.trim().parse().map_err(|_| GnnError::InvalidConfig(s.into()))?;
                let d: u64 = d.trim().parse().map_err(|_| GnnError::InvalidConfig(s.into()))?;
                if d == 0 {
                    return Err(GnnError::InvalidConfig(s.into()));
                }
                Ratio::new(n, d)
            }
            None => parse_decimal(s).ok_or_else(|| GnnError::InvalidConfig(s.into()))?,
        };
        Self::new(ratio)
    }
}

impl fmt::Display for SampleRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

impl Serialize for SampleRatio {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for SampleRatio {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Number(v) => SampleRatio::from_f64(v),
            Repr::Text(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Prompt-based GNN settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnnConfig {
    pub layers: usize,
    pub sample_ratio: SampleRatio,
    pub neighbor_cap: usize,
    pub seed: u64,
    pub init_budget_tokens: usize,
    /// Output budget per layer, index 0 is layer 1.
    pub layer_budget_tokens: Vec<usize>,
    pub final_id_max_tokens: usize,
}

impl Default for GnnConfig {
    fn default() -> Self {
        Self {
            layers: 3,
            sample_ratio: SampleRatio(Ratio::new_raw(3, 5)),
            neighbor_cap: 20,
            seed: 0,
            init_budget_tokens: 120,
            layer_budget_tokens: vec![60, 30, 12],
            final_id_max_tokens: 10,
        }
    }
}

impl GnnConfig {
    pub const MAX_LAYERS: usize = 4;

    pub fn validate(&self) -> Result<(), GnnError> {
        let bad = |m: String| Err(GnnError::InvalidConfig(m));
        if self.layers == 0 || self.layers > Self::MAX_LAYERS {
            return bad(format!("layers = {}, expected 1..={}", self.layers, Self::MAX_LAYERS));
        }
        if self.neighbor_cap == 0 {
            return bad("neighbor_cap must be at least 1".into());
        }
        if self.init_budget_tokens == 0 || self.final_id_max_tokens == 0 {
            return bad("token budgets must be at least 1".into());
        }
        if self.layer_budget_tokens.len() < self.layers {
            return bad(format!(
                "{} layer budgets for {} layers",
                self.layer_budget_tokens.len(),
                self.layers
            ));
        }
        if self.layer_budget_tokens.contains(&0) {
            return bad("layer budgets must be at least 1".into());
        }
        if self.layer_budget_tokens.windows(2).any(|w| w[1] > w[0]) {
            return bad(format!(
                "layer budgets {:?} must not increase",
                self.layer_budget_tokens
            ));
        }
        SampleRatio::new(self.sample_ratio.0)?;
        Ok(())
    }

    /// Output budget of layer `layer` (1-based).
    pub fn layer_budget(&self, layer: usize) -> usize {
        self.layer_budget_tokens[layer - 1]
    }
}
