use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{DatasetSplit, PointCloud, SplitRole};
use crate::error::{invalid, io_err, Error, Result};

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Shortest round-trip decimal form, so save→load is exact.
pub fn save_xyz(cloud: &PointCloud, path: &Path) -> Result<()> {
    let mut s = String::with_capacity(cloud.len() * 48);
    for p in &cloud.points {
        let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
    }
    write_atomic(path, s.as_bytes())
}

pub fn load_xyz(path: &Path) -> Result<PointCloud> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let perr = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(' ').collect();
        if fields.len() != 3 {
            return Err(perr(i + 1, format!("expected 3 space-separated values, got {line:?}")));
        }
        let mut p = [0.0; 3];
        for (k, f) in fields.iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| perr(i + 1, format!("not a number: {f:?}")))?;
            if !v.is_finite() {
                return Err(perr(i + 1, format!("non-finite value {f:?}")));
            }
            p[k] = v;
        }
        points.push(p);
    }
    if points.is_empty() {
        return Err(perr(0, "file contains no points".into()));
    }
    PointCloud::new(points, None)
}

/// Writes `<root>/classes.txt` and `<root>/<class>/<id>.xyz`.
pub fn save_dataset(split: &DatasetSplit, root: &Path) -> Result<()> {
    split.validate()?;
    let mut classes = split.class_names.join("\n");
    classes.push('\n');
    write_atomic(&root.join("classes.txt"), classes.as_bytes())?;
    for (cloud, id) in split.clouds.iter().zip(&split.ids) {
        let class = &split.class_names[cloud.label.unwrap_or(0)];
        save_xyz(cloud, &root.join(class).join(format!("{id}.xyz")))?;
    }
    Ok(())
}

/// Reads a directory written by [`save_dataset`]. Clouds are ordered by
/// class index, then by numeric id.
pub fn load_dataset(root: &Path, role: SplitRole) -> Result<DatasetSplit> {
    let classes_path = root.join("classes.txt");
    let text = fs::read_to_string(&classes_path).map_err(io_err(&classes_path))?;
    let class_names: Vec<String> = text.lines().map(|l| l.trim().to_string()).filter(|l| !l.is_empty()).collect();
    let mut clouds = Vec::new();
    let mut ids = Vec::new();
    for (label, name) in class_names.iter().enumerate() {
        let dir = root.join(name);
        if !dir.is_dir() {
            continue;
        }
        let mut entries = Vec::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let path = entry.map_err(io_err(&dir))?.path();
            if path.extension().is_some_and(|e| e == "xyz") {
                let id = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .and_then(|s| s.parse::<u64>().ok())
                    .ok_or_else(|| invalid(format!("{}: file name is not a numeric id", path.display())))?;
                entries.push((id, path));
            }
        }
        entries.sort();
        for (id, path) in entries {
            let mut cloud = load_xyz(&path)?;
            cloud.label = Some(label);
            clouds.push(cloud);
            ids.push(id);
        }
    }
    DatasetSplit::new(clouds, ids, class_names, role)
}
