use std::fs;
use std::path::Path;

use crisis_core::mechanism::MechanismFile;
use crisis_core::{CrisisModel, DirectMechanism, ModelDescription, ValidationErrors};
use serde_json::Value;

use crate::exit::{CmdResult, Failure};

pub fn read_json(path: &Path) -> CmdResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Unreadable(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Unreadable(format!("{}: {e}", path.display())))
}

/// Deserializes a model value; schema errors count as an invalid model.
pub fn describe(value: Value) -> CmdResult<ModelDescription> {
    serde_json::from_value(value).map_err(|e| {
        let mut errs = ValidationErrors::default();
        errs.push("model", e.to_string());
        Failure::InvalidModel(errs)
    })
}

pub fn load_description(path: &Path) -> CmdResult<ModelDescription> {
    describe(read_json(path)?)
}

pub fn load_model(path: &Path) -> CmdResult<CrisisModel> {
    load_description(path)?.validate().map_err(Failure::InvalidModel)
}

pub fn load_mechanism(path: &Path) -> CmdResult<DirectMechanism> {
    let file: MechanismFile = serde_json::from_value(read_json(path)?)
        .map_err(|e| Failure::Unreadable(format!("{}: {e}", path.display())))?;
    DirectMechanism::from_file(file).map_err(|e| Failure::Incompatible(format!("{}: {e}", path.display())))
}
