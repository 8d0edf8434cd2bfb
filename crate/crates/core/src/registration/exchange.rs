//! Text exchange format for estimated transforms.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::mesh::{read_bytes, write_bytes, MeshError, RigidTransform};

/// A transform with its units and the frames it maps between.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformFile {
    /// Row-major 4x4 matrix.
    pub matrix: RigidTransform,
    #[serde(default = "default_units")]
    pub units: String,
    /// Frame the transform maps from.
    #[serde(default = "default_from")]
    pub from: String,
    /// Frame the transform maps into.
    #[serde(default = "default_to")]
    pub to: String,
}

fn default_units() -> String {
    "mm".into()
}
fn default_from() -> String {
    "MCS".into()
}
fn default_to() -> String {
    "RCS".into()
}

impl TransformFile {
    pub fn new(matrix: RigidTransform) -> Self {
        Self {
            matrix,
            units: default_units(),
            from: default_from(),
            to: default_to(),
        }
    }

    pub fn to_toml(&self) -> String {
        // one row of the matrix per line keeps the file diffable
        let m = self.matrix.to_row_major();
        let mut s = format!("units = \"{}\"\nfrom = \"{}\"\nto = \"{}\"\nmatrix = [\n", self.units, self.from, self.to);
        for r in 0..4 {
            let row: Vec<String> = (0..4).map(|c| format!("{:.17e}", m[4 * r + c])).collect();
            s.push_str(&format!("  {},\n", row.join(", ")));
        }
        s.push_str("]\n");
        s
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let f: TransformFile = toml::from_str(text).map_err(|e| e.to_string())?;
        if f.units != "mm" {
            return Err(format!("unsupported units '{}', expected mm", f.units));
        }
        Ok(f)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MeshError> {
        let path = path.as_ref();
        let bytes = read_bytes(path)?;
        let text = String::from_utf8(bytes).map_err(|_| MeshError::Malformed(format!("{}: not UTF-8 text", path.display())))?;
        Self::parse(&text).map_err(|m| MeshError::Malformed(format!("{}: {m}", path.display())))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MeshError> {
        write_bytes(path.as_ref(), self.to_toml().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Vector3;

    #[test]
    fn round_trip_is_exact() {
        let t = RigidTransform::from_rotation_vector(&Vector3::new(0.1, -0.2, 0.3), Vector3::new(1.0, 2.0, -3.5));
        let f = TransformFile::new(t);
        let back = TransformFile::parse(&f.to_toml()).unwrap();
        assert_eq!(back.matrix.to_row_major(), t.to_row_major());
        assert_eq!(back.from, "MCS");
    }

    #[test]
    fn rejects_wrong_units_and_bad_matrices() {
        assert!(TransformFile::parse("units = \"cm\"\nmatrix = [1,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1]").is_err());
        assert!(TransformFile::parse("matrix = [2,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1]").is_err());
        assert!(TransformFile::parse("matrix = [1,0,0]").is_err());
    }
}
