//! JSON description of a system:
//! `{"maps":[{"r":…,"theta_over_pi":…|"theta":…,"reflect":…,"tx":…,"ty":…}]}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::ifs::{angle_from_turns_of_pi, Ifs, Orientation, Similitude};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_over_pi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default)]
    pub reflect: bool,
    #[serde(default)]
    pub tx: f64,
    #[serde(default)]
    pub ty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IfsSpec {
    pub maps: Vec<MapSpec>,
}

impl IfsSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<Ifs> {
        let maps = self
            .maps
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let angle = match (m.theta_over_pi, m.theta) {
                    (Some(t), None) => angle_from_turns_of_pi(t),
                    (None, Some(t)) => t,
                    _ => {
                        return Err(Error::Config(format!(
                            "map {}: give exactly one of theta_over_pi and theta",
                            i + 1
                        )))
                    }
                };
                let orientation = if m.reflect {
                    Orientation::Reversing
                } else {
                    Orientation::Preserving
                };
                Similitude::new(m.r, angle, orientation, Point::new(m.tx, m.ty))
            })
            .collect::<Result<Vec<_>>>()?;
        Ifs::new(maps)
    }
}

pub fn parse_ifs(text: &str) -> Result<Ifs> {
    IfsSpec::from_json(text)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn parses_figure_one_description() {
        let text = r#"{"maps":[
            {"r":0.3333333333333333,"theta_over_pi":2.414213562373095,"reflect":false,"tx":0,"ty":0},
            {"r":0.3333333333333333,"theta_over_pi":0,"reflect":false,"tx":0.6666666666666666,"ty":0},
            {"r":0.3333333333333333,"theta_over_pi":0,"reflect":false,"tx":0.3333333333333333,"ty":0.6666666666666666}
        ]}"#;
        let ifs = parse_ifs(text).unwrap();
        let reference = presets::figure_one();
        for (a, b) in ifs.maps().iter().zip(reference.maps()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rejects_both_or_neither_angle() {
        let both = r#"{"maps":[{"r":0.5,"theta":0,"theta_over_pi":0}]}"#;
        assert!(matches!(parse_ifs(both), Err(Error::Config(_))));
        let neither = r#"{"maps":[{"r":0.5}]}"#;
        assert!(matches!(parse_ifs(neither), Err(Error::Config(_))));
        let unknown = r#"{"maps":[{"r":0.5,"theta":0,"spin":1}]}"#;
        assert!(matches!(parse_ifs(unknown), Err(Error::Config(_))));
        assert!(matches!(parse_ifs("{"), Err(Error::Config(_))));
    }

    #[test]
    fn reflect_flag_sets_orientation() {
        let ifs = parse_ifs(r#"{"maps":[{"r":0.5,"theta":1.0,"reflect":true}]}"#).unwrap();
        assert_eq!(ifs.maps()[0].orientation(), Orientation::Reversing);
        assert!(matches!(
            parse_ifs(r#"{"maps":[{"r":1.5,"theta":0}]}"#),
            Err(Error::InvalidRatio(_))
        ));
    }
}
