use std::collections::BTreeMap;
use std::path::Path;

use super::{load_machine_file, GpuSpec};
use crate::error::{Error, Result};

pub const BUILTIN_NAMES: [&str; 2] = ["B200", "H200"];

const B200_SPEC: &str = include_str!("../../assets/machines/b200.spec");
const H200_SPEC: &str = include_str!("../../assets/machines/h200.spec");

/// Text of a bundled machine file, matched case-insensitively.
pub fn builtin_text(name: &str) -> Result<&'static str> {
    match name.to_ascii_uppercase().as_str() {
        "B200" => Ok(B200_SPEC),
        "H200" => Ok(H200_SPEC),
        _ => Err(Error::UnknownMachine(name.to_string())),
    }
}

pub fn builtin_spec(name: &str) -> Result<GpuSpec> {
    load_machine_file(builtin_text(name)?)
}

/// Which reference table each calibration block encodes.
const PROVENANCE: &[(&str, &str)] = &[
    ("decomp.format", "T1"),
    ("decomp.pattern", "T2"),
    ("decomp.chunk", "T3"),
    ("tensor.latency", "T5"),
    ("tensor.instr", "T6"),
    ("tensor.peak", "T7"),
    ("llm", "T8"),
    ("llm_latency", "T9"),
    ("workload.attention", "T10"),
    ("training", "T11"),
    ("dgemm", "T12"),
    ("memory.stream", "T13"),
    ("spmv", "T14"),
];

/// Named machine specs plus a provenance note per calibration block.
#[derive(Debug, Clone)]
pub struct CalibrationSet {
    specs: BTreeMap<String, GpuSpec>,
}

impl CalibrationSet {
    /// The bundled B200 and H200 presets.
    pub fn builtin() -> Result<Self> {
        let mut specs = BTreeMap::new();
        for name in BUILTIN_NAMES {
            specs.insert(name.to_string(), builtin_spec(name)?);
        }
        Ok(CalibrationSet { specs })
    }

    /// Built-ins, overridden by `*.spec` files in `dir` (keyed by the `name` they declare).
    pub fn with_override_dir(dir: &Path) -> Result<Self> {
        let mut set = Self::builtin()?;
        let entries = std::fs::read_dir(dir).map_err(|e| {
            Error::Precondition(format!("cannot read spec directory {}: {e}", dir.display()))
        })?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "spec"))
            .collect();
        paths.sort();
        for p in paths {
            set.insert_file(&p)?;
        }
        Ok(set)
    }

    pub fn insert_file(&mut self, path: &Path) -> Result<String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Precondition(format!("cannot read {}: {e}", path.display())))?;
        let spec = load_machine_file(&text)?;
        let name = spec.name.clone();
        self.insert(spec);
        Ok(name)
    }

    pub fn insert(&mut self, spec: GpuSpec) {
        self.specs
            .retain(|k, _| !k.eq_ignore_ascii_case(&spec.name));
        self.specs.insert(spec.name.clone(), spec);
    }

    pub fn get(&self, name: &str) -> Result<&GpuSpec> {
        self.specs
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v)
            .ok_or_else(|| Error::UnknownMachine(name.to_string()))
    }

    /// The machine a spec declares as its baseline, if it is in the set.
    pub fn baseline_of(&self, spec: &GpuSpec) -> Option<&GpuSpec> {
        spec.baseline.as_deref().and_then(|b| self.get(b).ok())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.specs.keys().map(String::as_str)
    }

    pub fn provenance(&self) -> &'static [(&'static str, &'static str)] {
        PROVENANCE
    }
}
