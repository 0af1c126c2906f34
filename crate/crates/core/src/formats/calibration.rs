use std::path::Path;

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde_json::{json, Map, Value};

use super::{read_bytes, write_bytes, FormatError};
use crate::model::StereoRig;

const KEYS: [&str; 9] = [
    "f_mm",
    "pixel_pitch_um",
    "baseline_m",
    "u0",
    "v0",
    "width",
    "height",
    "rotation",
    "translation",
];

fn number(map: &Map<String, Value>, key: &str) -> Result<f64, FormatError> {
    map[key].as_f64().ok_or_else(|| FormatError::InvalidValue {
        key: key.into(),
        reason: "expected a number".into(),
    })
}

fn count(map: &Map<String, Value>, key: &str) -> Result<usize, FormatError> {
    map[key]
        .as_u64()
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| FormatError::InvalidValue {
            key: key.into(),
            reason: "expected a non-negative integer".into(),
        })
}

fn numbers(map: &Map<String, Value>, key: &str) -> Result<Vec<f64>, FormatError> {
    let invalid = || FormatError::InvalidValue {
        key: key.into(),
        reason: "expected an array of numbers".into(),
    };
    map[key]
        .as_array()
        .ok_or_else(invalid)?
        .iter()
        .map(|v| v.as_f64().ok_or_else(invalid))
        .collect()
}

/// Parses the calibration document. `rotation` is camera-to-world, either
/// 9 row-major entries or a 3-entry rotation vector (axis * angle in
/// radians); `translation` is the left camera center in world meters.
pub fn parse_calibration(bytes: &[u8]) -> Result<StereoRig, FormatError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| FormatError::MalformedBody {
        location: format!("line {} column {}", e.line(), e.column()),
        reason: e.to_string(),
    })?;
    let map = value.as_object().ok_or_else(|| FormatError::MalformedBody {
        location: "root".into(),
        reason: "expected a JSON object".into(),
    })?;
    if let Some(missing) = KEYS.iter().find(|k| !map.contains_key(**k)) {
        return Err(FormatError::MissingKey(missing.to_string()));
    }

    let rotation = numbers(map, "rotation")?;
    let r_cw = match rotation.len() {
        9 => Matrix3::from_row_slice(&rotation),
        3 => *Rotation3::from_scaled_axis(Vector3::new(rotation[0], rotation[1], rotation[2])).matrix(),
        n => {
            return Err(FormatError::InvalidValue {
                key: "rotation".into(),
                reason: format!("expected 9 matrix entries or a 3-vector, found {n} values"),
            })
        }
    };
    let translation = numbers(map, "translation")?;
    if translation.len() != 3 {
        return Err(FormatError::InvalidValue {
            key: "translation".into(),
            reason: format!("expected 3 values, found {}", translation.len()),
        });
    }

    Ok(StereoRig::new(
        number(map, "f_mm")? / 1e3,
        number(map, "pixel_pitch_um")? / 1e6,
        number(map, "baseline_m")?,
        number(map, "u0")?,
        number(map, "v0")?,
        count(map, "width")?,
        count(map, "height")?,
        r_cw,
        Vector3::new(translation[0], translation[1], translation[2]),
    )?)
}

/// Pretty JSON with the rotation written as 9 row-major entries.
pub fn encode_calibration(rig: &StereoRig) -> Vec<u8> {
    let r = rig.rotation();
    let t = rig.translation();
    let doc = json!({
        "f_mm": rig.focal_m() * 1e3,
        "pixel_pitch_um": rig.pixel_pitch() * 1e6,
        "baseline_m": rig.baseline(),
        "u0": rig.u0(),
        "v0": rig.v0(),
        "width": rig.width(),
        "height": rig.height(),
        "rotation": [r[(0, 0)], r[(0, 1)], r[(0, 2)], r[(1, 0)], r[(1, 1)], r[(1, 2)], r[(2, 0)], r[(2, 1)], r[(2, 2)]],
        "translation": [t.x, t.y, t.z],
    });
    let mut out = serde_json::to_vec_pretty(&doc).expect("calibration serializes");
    out.push(b'\n');
    out
}

pub fn read_calibration(path: &Path) -> Result<StereoRig, FormatError> {
    parse_calibration(&read_bytes(path)?)
}

pub fn write_calibration(rig: &StereoRig, path: &Path) -> Result<(), FormatError> {
    write_bytes(path, &encode_calibration(rig))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelError;

    fn doc(rotation: &str) -> String {
        format!(
            r#"{{"f_mm": 12, "pixel_pitch_um": 17, "baseline_m": 0.06, "u0": 319.5, "v0": 255.5,
                "width": 640, "height": 512, "rotation": {rotation}, "translation": [0, 0, 0]}}"#
        )
    }

    #[test]
    fn table_one_defaults_give_focal_in_pixels() {
        let rig = parse_calibration(doc("[1,0,0,0,1,0,0,0,1]").as_bytes()).unwrap();
        assert!((rig.focal_px() - 705.882).abs() < 1e-3);
        assert_eq!(rig.rotation(), &Matrix3::identity());
    }

    #[test]
    fn axis_angle_rotation() {
        let rig = parse_calibration(doc("[0.5, 0, 0]").as_bytes()).unwrap();
        let expected = crate::model::rotation_x(0.5);
        assert!((rig.rotation() - expected).abs().max() < 1e-15);
    }

    #[test]
    fn reflection_is_rejected() {
        let err = parse_calibration(doc("[1,0,0,0,1,0,0,0,-1]").as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            FormatError::Model(ModelError::ReflectionNotAllowed { .. })
        ));
    }

    #[test]
    fn missing_key_is_named() {
        let err = parse_calibration(br#"{"f_mm": 12}"#).unwrap_err();
        assert!(matches!(err, FormatError::MissingKey(ref k) if k == "pixel_pitch_um"));
    }

    #[test]
    fn nonpositive_baseline_is_rejected() {
        let text = doc("[1,0,0,0,1,0,0,0,1]").replace("0.06", "-0.06");
        let err = parse_calibration(text.as_bytes()).unwrap_err();
        assert!(matches!(err, FormatError::Model(ModelError::NonpositiveBaseline)));
    }

    #[test]
    fn written_rig_reads_back() {
        let rig = StereoRig::default_flume();
        let back = parse_calibration(&encode_calibration(&rig)).unwrap();
        assert!((back.focal_px() - rig.focal_px()).abs() < 1e-9);
        assert!((back.rotation() - rig.rotation()).abs().max() < 1e-15);
        assert_eq!(back.translation(), rig.translation());
    }
}
