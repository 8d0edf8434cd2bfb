//! Design case files: which meshes, which transform, which parameters.
//!
//! ```toml
//! [meshes]
//! maxilla = "maxilla.stl"
//! mandible = "mandible_mi.stl"
//! occlusal = "occlusal.stl"      # optional, generated when absent
//! crown_mask = "crown.txt"       # optional, whitespace-separated triangle indices
//!
//! [transform]
//! file = "t_th.toml"             # or: matrix = [16 row-major numbers]
//!
//! [params]
//! wall_thickness = 1.5
//! ```
//! Relative paths are resolved against the case file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BuildError, DesignCase, SplintParams};
use crate::mesh::{load_mesh, read_bytes, RigidTransform};
use crate::registration::TransformFile;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseMeshes {
    pub maxilla: PathBuf,
    pub mandible: PathBuf,
    pub occlusal: Option<PathBuf>,
    pub crown_mask: Option<PathBuf>,
    pub condyle: Option<PathBuf>,
    pub fossa: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseTransform {
    pub file: Option<PathBuf>,
    pub matrix: Option<RigidTransform>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub meshes: CaseMeshes,
    pub transform: CaseTransform,
    #[serde(default)]
    pub params: SplintParams,
}

impl CaseFile {
    pub fn parse(text: &str) -> Result<CaseFile, BuildError> {
        let case: CaseFile = toml::from_str(text).map_err(|e| BuildError::Case(e.to_string()))?;
        match (&case.transform.file, &case.transform.matrix) {
            (Some(_), Some(_)) => return Err(BuildError::Case("transform: give either `file` or `matrix`, not both".into())),
            (None, None) => return Err(BuildError::Case("transform: `file` or `matrix` is required".into())),
            _ => {}
        }
        Ok(case)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("case file serializes")
    }

    /// Loads every referenced file; `base` is the directory relative paths start from.
    pub fn resolve(&self, base: &Path) -> Result<(DesignCase, SplintParams), BuildError> {
        let at = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
        let m = &self.meshes;
        let t_th = match (&self.transform.file, &self.transform.matrix) {
            (Some(f), _) => TransformFile::load(at(f))?.matrix,
            (None, Some(t)) => *t,
            (None, None) => return Err(BuildError::Case("transform missing".into())),
        };
        let mut case = DesignCase::new(load_mesh(at(&m.maxilla))?, load_mesh(at(&m.mandible))?, t_th);
        case.occlusal = m.occlusal.as_ref().map(|p| load_mesh(at(p))).transpose()?;
        case.condyle = m.condyle.as_ref().map(|p| load_mesh(at(p))).transpose()?;
        case.fossa = m.fossa.as_ref().map(|p| load_mesh(at(p))).transpose()?;
        if let Some(p) = &m.crown_mask {
            let path = at(p);
            let text = String::from_utf8(read_bytes(&path)?)
                .map_err(|_| BuildError::Case(format!("{}: not UTF-8 text", path.display())))?;
            let mut mask = Vec::new();
            for (n, tok) in text.split_whitespace().enumerate() {
                let t: usize = tok
                    .parse()
                    .map_err(|_| BuildError::Case(format!("{}: entry {} ('{tok}') is not a triangle index", path.display(), n + 1)))?;
                if t >= case.maxilla.triangle_count() {
                    return Err(BuildError::Case(format!(
                        "{}: triangle {t} out of range ({} triangles)",
                        path.display(),
                        case.maxilla.triangle_count()
                    )));
                }
                mask.push(t);
            }
            case.crown_mask = Some(mask);
        }
        Ok((case, self.params.clone()))
    }
}

/// Reads and resolves a case file.
pub fn load_case(path: impl AsRef<Path>) -> Result<(DesignCase, SplintParams), BuildError> {
    let path = path.as_ref();
    let text = String::from_utf8(read_bytes(path)?)
        .map_err(|_| BuildError::Case(format!("{}: not UTF-8 text", path.display())))?;
    let case = CaseFile::parse(&text).map_err(|e| match e {
        BuildError::Case(m) => BuildError::Case(format!("{}: {m}", path.display())),
        other => other,
    })?;
    case.resolve(path.parent().unwrap_or(Path::new(".")))
}
