//! `flags`: dump every subcommand's flags as JSON so scripts can discover
//! the interface without scraping `--help`.

use std::collections::BTreeMap;

use clap::ArgAction;
use serde_json::{json, Value};

use crate::errors::CliError;

fn arg_entry(a: &clap::Arg) -> Value {
    let takes_value = !matches!(
        a.get_action(),
        ArgAction::SetTrue | ArgAction::SetFalse | ArgAction::Count
    );
    let defaults: Vec<String> = a
        .get_default_values()
        .iter()
        .map(|v| v.to_string_lossy().into_owned())
        .collect();
    json!({
        "long": a.get_long(),
        "help": a.get_help().map(|h| h.to_string()),
        "required": a.is_required_set(),
        "takes_value": takes_value,
        "default": if defaults.is_empty() { Value::Null } else { json!(defaults.join(",")) },
    })
}

fn args_of(cmd: &clap::Command) -> Vec<Value> {
    cmd.get_arguments()
        .filter(|a| !matches!(a.get_id().as_str(), "help" | "version"))
        .map(arg_entry)
        .collect()
}

pub fn run(root: clap::Command) -> Result<(), CliError> {
    let mut subcommands = BTreeMap::new();
    for sub in root.get_subcommands() {
        subcommands.insert(
            sub.get_name().to_string(),
            json!({
                "about": sub.get_about().map(|a| a.to_string()),
                "flags": args_of(sub),
            }),
        );
    }
    let doc = json!({
        "name": root.get_name(),
        "global_flags": args_of(&root),
        "subcommands": subcommands,
    });
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::load(format!("flags serialization: {e}")))?;
    println!("{text}");
    Ok(())
}
