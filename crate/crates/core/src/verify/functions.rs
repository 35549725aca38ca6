use serde::{Deserialize, Serialize};

use crate::geometry::{Model, Point};

/// Initial data `f_0` for the semigroup inequalities, named so that configs
/// and reports can refer to them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TestFunction {
    Constant {
        value: f64,
    },
    /// First model coordinate: `z_0` (the pole axis on spheres).
    FirstCoordinate,
    /// `max(z_0, 0)`.
    ClippedFirstCoordinate,
    /// Indicator of `z_0 > 0`.
    HalfSpace,
    /// `exp(-d_0(o, z)² / (2 w²))` around the model origin.
    GaussianBump {
        width: f64,
    },
}

impl TestFunction {
    pub fn eval(&self, model: &Model, z: &Point) -> f64 {
        match self {
            TestFunction::Constant { value } => *value,
            TestFunction::FirstCoordinate => z.0[0],
            TestFunction::ClippedFirstCoordinate => z.0[0].max(0.0),
            TestFunction::HalfSpace => {
                if z.0[0] > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::GaussianBump { width } => {
                let d = model.distance(&model.origin(), z);
                (-d * d / (2.0 * width * width)).exp()
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            TestFunction::Constant { value } => format!("constant({value})"),
            TestFunction::FirstCoordinate => "first_coordinate".into(),
            TestFunction::ClippedFirstCoordinate => "clipped_first_coordinate".into(),
            TestFunction::HalfSpace => "half_space".into(),
            TestFunction::GaussianBump { width } => format!("gaussian_bump({width})"),
        }
    }
}
