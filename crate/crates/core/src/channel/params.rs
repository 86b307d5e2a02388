use serde::{Deserialize, Serialize};

use super::{ChannelError, Voltage};

/// Physical parameters of the SLC channel. All voltages in volts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams<V> {
    /// Threshold voltage distribution right after erase.
    pub erase_mean: V,
    pub erase_sigma: V,
    /// ISPP verify level for S1 (ν).
    pub verify_level: V,
    /// ISPP step voltage (ΔVpp).
    pub step: V,
    /// Coupling ratio between vertically adjacent word-line planes.
    pub gamma_wl: V,
    /// Coupling ratio between adjacent bit lines.
    pub gamma_bl: V,
    /// Coupling ratio between adjacent string-select-line groups.
    pub gamma_ssl: V,
    /// Fast detrapping shift distribution, applied once after programming.
    pub detrap_mean: V,
    pub detrap_sigma: V,
    /// Fraction of programmed cells hit by fast detrapping.
    pub detrap_fraction: f64,
    /// Per-read random noise.
    pub random_sigma: V,
    /// Read level (η).
    pub read_level: V,
    /// Identify level (ζ).
    pub identify_level: V,
}

impl<V: Voltage> Default for ChannelParams<V> {
    fn default() -> Self {
        Self {
            erase_mean: V::of(-4.0),
            erase_sigma: V::of(1.0),
            verify_level: V::of(1.0),
            step: V::of(1.0),
            gamma_wl: V::of(0.1),
            gamma_bl: V::zero(),
            gamma_ssl: V::zero(),
            detrap_mean: V::of(-0.2),
            detrap_sigma: V::of(0.4),
            detrap_fraction: 1.0,
            random_sigma: V::of(0.2),
            read_level: V::zero(),
            identify_level: V::of(0.2),
        }
    }
}

impl<V: Voltage> ChannelParams<V> {
    /// Checks the parameter invariants, naming the first offending field.
    pub fn validate(&self) -> Result<(), ChannelError> {
        let bad = |field: &'static str, why: &str| Err(ChannelError::InvalidParams { field, reason: why.to_string() });
        let finite = [
            ("erase_mean", self.erase_mean),
            ("erase_sigma", self.erase_sigma),
            ("verify_level", self.verify_level),
            ("step", self.step),
            ("gamma_wl", self.gamma_wl),
            ("gamma_bl", self.gamma_bl),
            ("gamma_ssl", self.gamma_ssl),
            ("detrap_mean", self.detrap_mean),
            ("detrap_sigma", self.detrap_sigma),
            ("random_sigma", self.random_sigma),
            ("read_level", self.read_level),
            ("identify_level", self.identify_level),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return bad(field, "must be finite");
            }
        }
        if self.step <= V::zero() {
            return bad("step", "must be positive");
        }
        for (field, v) in [
            ("erase_sigma", self.erase_sigma),
            ("detrap_sigma", self.detrap_sigma),
            ("random_sigma", self.random_sigma),
        ] {
            if v < V::zero() {
                return bad(field, "must be non-negative");
            }
        }
        for (field, v) in [("gamma_wl", self.gamma_wl), ("gamma_bl", self.gamma_bl), ("gamma_ssl", self.gamma_ssl)] {
            if v < V::zero() {
                return bad(field, "must be non-negative");
            }
        }
        if !(0.0..=1.0).contains(&self.detrap_fraction) {
            return bad("detrap_fraction", "must be in [0, 1]");
        }
        if self.identify_level < self.read_level {
            return bad("identify_level", "must not be below read_level");
        }
        Ok(())
    }

    /// Same parameters in another scalar type.
    pub fn cast<W: Voltage>(&self) -> ChannelParams<W> {
        let c = |v: V| W::of(v.as_f64());
        ChannelParams {
            erase_mean: c(self.erase_mean),
            erase_sigma: c(self.erase_sigma),
            verify_level: c(self.verify_level),
            step: c(self.step),
            gamma_wl: c(self.gamma_wl),
            gamma_bl: c(self.gamma_bl),
            gamma_ssl: c(self.gamma_ssl),
            detrap_mean: c(self.detrap_mean),
            detrap_sigma: c(self.detrap_sigma),
            detrap_fraction: self.detrap_fraction,
            random_sigma: c(self.random_sigma),
            read_level: c(self.read_level),
            identify_level: c(self.identify_level),
        }
    }
}
