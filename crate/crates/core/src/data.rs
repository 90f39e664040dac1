//! Initial data `(phi, gamma)` and the named presets used by the studies.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Error;

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Initial position `phi` and velocity `gamma` of a real solution.
#[derive(Clone)]
pub struct InitialData {
    name: String,
    phi: Profile,
    gamma: Profile,
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialData").field("name", &self.name).finish()
    }
}

impl InitialData {
    pub fn new(
        name: impl Into<String>,
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        gamma: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        InitialData { name: name.into(), phi: Arc::new(phi), gamma: Arc::new(gamma) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn phi(&self, x: f64) -> f64 {
        (self.phi)(x)
    }

    pub fn gamma(&self, x: f64) -> f64 {
        (self.gamma)(x)
    }

    /// Same profiles multiplied by `s`.
    pub fn scaled(&self, s: f64) -> InitialData {
        let (phi, gamma) = (self.phi.clone(), self.gamma.clone());
        InitialData {
            name: format!("{}*{s}", self.name),
            phi: Arc::new(move |x| s * phi(x)),
            gamma: Arc::new(move |x| s * gamma(x)),
        }
    }

    /// `phi = 1/(2 + cos^2 x)`, `gamma = sin x` on the torus `[0, 2 pi]`.
    pub fn long_time() -> InitialData {
        InitialData::new("long_initial", |x: f64| 1.0 / (2.0 + x.cos().powi(2)), f64::sin)
    }

    /// `phi = 1/(e^{x^2} + e^{-x^2})`, `gamma = 2 e^{-x^2}` on the real line.
    pub fn whole_space() -> InitialData {
        InitialData::new(
            "whole_space",
            |x: f64| 1.0 / ((x * x).exp() + (-x * x).exp()),
            |x: f64| 2.0 * (-x * x).exp(),
        )
    }
}

/// Named initial-data presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialDataTag {
    LongInitial,
    WholeSpace,
}

impl InitialDataTag {
    pub fn data(self) -> InitialData {
        match self {
            InitialDataTag::LongInitial => InitialData::long_time(),
            InitialDataTag::WholeSpace => InitialData::whole_space(),
        }
    }

    /// Natural periodic domain for the torus preset.
    pub fn torus() -> (f64, f64) {
        (0.0, 2.0 * PI)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InitialDataTag::LongInitial => "long_initial",
            InitialDataTag::WholeSpace => "whole_space",
        }
    }
}

impl fmt::Display for InitialDataTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InitialDataTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "long_initial" | "long-initial" => Ok(InitialDataTag::LongInitial),
            "whole_space" | "whole-space" => Ok(InitialDataTag::WholeSpace),
            other => Err(Error::InvalidParameter(format!("unknown initial data '{other}'"))),
        }
    }
}
