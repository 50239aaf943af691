use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Parser;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::args::{Cli, Command, SweepArgs};
use crate::error::{CliError, Result};
use crate::report::{Context, Report};
use crate::run_command;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub command: String,
    #[serde(default)]
    pub grid: BTreeMap<String, Vec<Value>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

pub struct SweepOutcome {
    pub reports: Vec<Report>,
    pub summary: Value,
    pub output_path: Option<PathBuf>,
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn push_param(argv: &mut Vec<String>, key: &str, v: &Value) -> Result<()> {
    let flag = format!("--{}", key.replace('_', "-"));
    match v {
        Value::Bool(true) => argv.push(flag),
        Value::Bool(false) => {}
        Value::Array(items) => {
            let parts: Option<Vec<String>> = items.iter().map(scalar).collect();
            let parts = parts.ok_or_else(|| CliError::Config(format!("{key}: list entries must be scalars")))?;
            argv.push(flag);
            argv.push(parts.join(","));
        }
        other => {
            let s = scalar(other).ok_or_else(|| CliError::Config(format!("{key}: unsupported value {other}")))?;
            argv.push(flag);
            argv.push(s);
        }
    }
    Ok(())
}

fn has_key(grid: &BTreeMap<String, Vec<Value>>, key: &str) -> bool {
    grid.contains_key(key) || grid.contains_key(&key.replace('-', "_"))
}

/// Argument vectors of every grid cell, last key varying fastest.
fn cells(cfg: &SweepConfig, outer: &Cli) -> Result<Vec<Vec<String>>> {
    if cfg.grid.is_empty() || cfg.grid.values().any(Vec::is_empty) {
        return Ok(Vec::new());
    }
    let keys: Vec<&String> = cfg.grid.keys().collect();
    let sizes: Vec<usize> = cfg.grid.values().map(Vec::len).collect();
    let total: usize = sizes.iter().product();
    let mut out = Vec::with_capacity(total);
    for index in 0..total {
        let mut argv = vec!["rogozin".to_string(), cfg.command.clone()];
        let mut rest = index;
        let mut picks = vec![0; keys.len()];
        for (slot, size) in picks.iter_mut().zip(&sizes).rev() {
            *slot = rest % size;
            rest /= size;
        }
        for (key, pick) in keys.iter().zip(&picks) {
            push_param(&mut argv, key, &cfg.grid[*key][*pick])?;
        }
        if !has_key(&cfg.grid, "seed") {
            argv.extend(["--seed".to_string(), cfg.seed.wrapping_add(index as u64).to_string()]);
        }
        if outer.rhs_scale != 1.0 && !has_key(&cfg.grid, "rhs-scale") {
            argv.extend(["--rhs-scale".to_string(), outer.rhs_scale.to_string()]);
        }
        if outer.timing && !has_key(&cfg.grid, "timing") {
            argv.push("--timing".to_string());
        }
        out.push(argv);
    }
    Ok(out)
}

pub fn run(outer: &Cli, args: &SweepArgs) -> Result<SweepOutcome> {
    let mut ctx = Context::new("sweep", args, outer.seed, 1.0, false);
    let cfg: SweepConfig = ctx.read_json("config", &args.config)?;
    if cfg.command == "sweep" {
        return Err(CliError::Config("a sweep cannot run another sweep".into()));
    }
    let parsed: Vec<Cli> = cells(&cfg, outer)?
        .into_iter()
        .enumerate()
        .map(|(i, argv)| {
            Cli::try_parse_from(&argv).map_err(|e| {
                let msg = e.render().to_string();
                let first = msg.lines().next().unwrap_or_default().to_string();
                CliError::Config(format!("cell {i} ({}): {first}", argv[1..].join(" ")))
            })
        })
        .collect::<Result<_>>()?;
    if parsed.iter().any(|c| matches!(c.command, Command::Sweep(_))) {
        return Err(CliError::Config("a sweep cannot run another sweep".into()));
    }
    let results: Vec<Result<Vec<Report>>> = parsed.par_iter().map(run_command).collect();
    let mut reports = Vec::new();
    for r in results {
        reports.extend(r?);
    }
    let satisfied = reports.iter().filter(|r| r.satisfied).count();
    let min_slack = reports.iter().map(|r| r.slack).fold(None, |acc: Option<f64>, s| {
        Some(acc.map_or(s, |a| a.min(s)))
    });
    let summary = json!({
        "summary": "sweep",
        "command": cfg.command,
        "cells": parsed.len(),
        "reports": reports.len(),
        "satisfied": satisfied,
        "violated": reports.len() - satisfied,
        "min_slack": min_slack,
    });
    Ok(SweepOutcome {
        reports,
        summary,
        output_path: cfg.output_path,
    })
}
