//! Structured-output contract between the prompt and the strategy extractor.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use super::{CotError, ControlCommand, ReasoningTrace, Result, STRATEGY_FENCE};
use crate::physics::NetworkScenario;

/// JSON schema the model is asked to satisfy.
pub fn strategy_schema() -> Value {
    json!({
        "type": "object",
        "additionalProperties": false,
        "required": ["uav_positions", "tx_powers_dbm"],
        "properties": {
            "uav_positions": {
                "type": "array",
                "description": "one [x, y] pair in meters per UAV slot, inside the area",
                "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
            },
            "tx_powers_dbm": {
                "type": "array",
                "description": "one transmit power per UAV slot, between 0 and the power cap",
                "items": {"type": "number"}
            },
            "assignments": {
                "type": "object",
                "description": "optional map from user id to UAV slot index",
                "additionalProperties": {"type": "integer", "minimum": 0}
            }
        }
    })
}

/// Body of a ```strategy fence if present, otherwise the whole text.
fn block_body(text: &str) -> &str {
    let trimmed = text.trim();
    match trimmed.find(STRATEGY_FENCE) {
        Some(start) => {
            let rest = &trimmed[start + STRATEGY_FENCE.len()..];
            rest.find("```").map_or(rest, |end| &rest[..end]).trim()
        }
        None => trimmed,
    }
}

fn finite_number(v: &Value, field: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| CotError::validation(field, format!("expected a finite number, got {v}")))
}

/// Parses and validates the final block of a trace. Out-of-range values are
/// rejected, never clamped.
pub fn extract_strategy(trace: &ReasoningTrace, scenario: &NetworkScenario) -> Result<ControlCommand> {
    let body = block_body(&trace.final_block);
    if body.is_empty() {
        return Err(CotError::Parse("empty strategy block".into()));
    }
    let value: Value = serde_json::from_str(body).map_err(|e| CotError::Parse(e.to_string()))?;
    let obj: &Map<String, Value> = value.as_object().ok_or_else(|| CotError::Parse("top level is not an object".into()))?;

    if let Some(k) = obj.keys().find(|k| !matches!(k.as_str(), "uav_positions" | "tx_powers_dbm" | "assignments")) {
        return Err(CotError::validation(k, "unknown field"));
    }
    let slots = scenario.uavs.len();
    let area = scenario.area_m;

    let positions = obj
        .get("uav_positions")
        .ok_or_else(|| CotError::validation("uav_positions", "missing"))?
        .as_array()
        .ok_or_else(|| CotError::validation("uav_positions", "must be an array"))?;
    if positions.len() != slots {
        return Err(CotError::validation("uav_positions", format!("{} entries for {slots} UAV slots", positions.len())));
    }
    let mut uav_positions = Vec::with_capacity(slots);
    for p in positions {
        let pair = p
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| CotError::validation("uav_positions", "each entry must be an [x, y] pair"))?;
        let (x, y) = (finite_number(&pair[0], "uav_positions")?, finite_number(&pair[1], "uav_positions")?);
        if !area.contains(x, y) {
            return Err(CotError::validation("uav_positions", format!("({x}, {y}) lies outside the area")));
        }
        uav_positions.push((x, y));
    }

    let powers = obj
        .get("tx_powers_dbm")
        .ok_or_else(|| CotError::validation("tx_powers_dbm", "missing"))?
        .as_array()
        .ok_or_else(|| CotError::validation("tx_powers_dbm", "must be an array"))?;
    if powers.len() != slots {
        return Err(CotError::validation("tx_powers_dbm", format!("{} entries for {slots} UAV slots", powers.len())));
    }
    let mut tx_powers_dbm = Vec::with_capacity(slots);
    for p in powers {
        let p = finite_number(p, "tx_powers_dbm")?;
        if !(0.0..=scenario.max_tx_power_dbm).contains(&p) {
            return Err(CotError::validation(
                "tx_powers_dbm",
                format!("{p} dBm outside [0, {}] dBm", scenario.max_tx_power_dbm),
            ));
        }
        tx_powers_dbm.push(p);
    }

    let assignments = match obj.get("assignments") {
        None | Some(Value::Null) => None,
        Some(Value::Object(map)) => {
            let mut out = BTreeMap::new();
            for (user, uav) in map {
                let user: u32 =
                    user.parse().map_err(|_| CotError::validation("assignments", format!("bad user id {user:?}")))?;
                if !scenario.users.iter().any(|u| u.id == user) {
                    return Err(CotError::validation("assignments", format!("unknown user {user}")));
                }
                let uav = uav
                    .as_u64()
                    .filter(|&i| (i as usize) < slots)
                    .ok_or_else(|| CotError::validation("assignments", format!("bad UAV index {uav}")))?;
                out.insert(user, uav as usize);
            }
            Some(out)
        }
        Some(_) => return Err(CotError::validation("assignments", "must be an object")),
    };

    Ok(ControlCommand { uav_positions, tx_powers_dbm, assignments })
}
