//! Curve files: pretty-printed JSON with a versioned, strict schema.
//!
//! Floats are written with the shortest representation that parses back to
//! the same `f64`, so parse → serialize reproduces a file byte for byte.

use designcurve::verify::Space;
use designcurve::{PiecewiseCurve, Segment};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveDescription {
    pub format_version: u32,
    pub ambient_dim: usize,
    /// `s2`, `s3`, `torus-D` or `product:N1,N2,…`.
    pub space: String,
    #[serde(default = "closed_default")]
    pub closed: bool,
    pub segments: Vec<Segment>,
    pub breakpoints: Vec<f64>,
    #[serde(default)]
    pub self_intersections: Option<Vec<f64>>,
    #[serde(default)]
    pub metadata: Metadata,
}

fn closed_default() -> bool {
    true
}

impl CurveDescription {
    pub fn from_curve(curve: &PiecewiseCurve, space: &Space, metadata: Metadata) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            ambient_dim: curve.ambient_dim(),
            space: space.to_string(),
            closed: curve.is_closed(),
            segments: curve.segments().to_vec(),
            breakpoints: curve.breakpoints().to_vec(),
            self_intersections: curve.declared_self_intersections().map(<[f64]>::to_vec),
            metadata,
        }
    }

    pub fn space(&self) -> Result<Space, CliError> {
        Ok(self.space.parse::<Space>()?)
    }

    /// Builds the curve, enforcing the file's own declarations.
    pub fn to_curve(&self) -> Result<PiecewiseCurve, CliError> {
        let space = self.space()?;
        if space.ambient_dim() != self.ambient_dim {
            return Err(CliError::Parse(format!(
                "field `space`: {} lives in ℝ^{} but ambient_dim is {}",
                self.space,
                space.ambient_dim(),
                self.ambient_dim
            )));
        }
        if let Some(i) = self.segments.iter().position(|s| s.dim() != self.ambient_dim) {
            return Err(CliError::Parse(format!(
                "field `segments[{i}]`: dimension {} differs from ambient_dim {}",
                self.segments[i].dim(),
                self.ambient_dim
            )));
        }
        let mut curve = if self.closed {
            PiecewiseCurve::new(self.segments.clone(), self.breakpoints.clone())?
        } else {
            PiecewiseCurve::new_open(self.segments.clone(), self.breakpoints.clone())?
        };
        if let Some(d) = &self.self_intersections {
            curve = curve.with_declared_self_intersections(d.clone())?;
        }
        Ok(curve)
    }
}

pub fn parse_curve(text: &str) -> Result<CurveDescription, CliError> {
    let d: CurveDescription = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    if d.format_version != FORMAT_VERSION {
        return Err(CliError::Parse(format!(
            "field `format_version`: unsupported version {} (expected {FORMAT_VERSION})",
            d.format_version
        )));
    }
    Ok(d)
}

pub fn serialize_curve(d: &CurveDescription) -> String {
    let mut s = serde_json::to_string_pretty(d).expect("curve descriptions always serialize");
    s.push('\n');
    s
}
