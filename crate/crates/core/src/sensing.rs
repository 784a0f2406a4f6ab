//! ADC measurement model: every measured channel reads `true * scale + offset`.

use crate::error::{Error, Result};

/// Affine error model of a single acquisition channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorModel {
    pub offset: f64,
    pub scale: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self::IDEAL
    }
}

impl SensorModel {
    pub const IDEAL: SensorModel = SensorModel {
        offset: 0.0,
        scale: 1.0,
    };

    pub fn with_offset(offset: f64) -> Self {
        Self { offset, scale: 1.0 }
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        if !self.offset.is_finite() {
            return Err(Error::validation(key, "offset must be finite"));
        }
        if !(self.scale > 0.5 && self.scale < 1.5) {
            return Err(Error::validation(key, "scale must lie in (0.5, 1.5)"));
        }
        Ok(())
    }

    #[inline]
    pub fn read(&self, true_value: f64) -> f64 {
        apply_sensor(true_value, self)
    }
}

#[inline]
pub fn apply_sensor(true_value: f64, model: &SensorModel) -> f64 {
    true_value * model.scale + model.offset
}

/// Sensor set of one DG unit.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SensorBank {
    /// Output (filter capacitor) voltage.
    pub v_out: SensorModel,
    /// Inverter-side (inductor) current.
    pub i_inv: SensorModel,
    /// Output (line) current.
    pub i_out: SensorModel,
    pub v_dc: SensorModel,
}

impl SensorBank {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        self.v_out.validate(&format!("{prefix}.v_out"))?;
        self.i_inv.validate(&format!("{prefix}.i_inv"))?;
        self.i_out.validate(&format!("{prefix}.i_out"))?;
        self.v_dc.validate(&format!("{prefix}.v_dc"))
    }
}
