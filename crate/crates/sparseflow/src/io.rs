//! JSON schema for instances and solutions.
//!
//! An instance file carries `num_centers`, `num_zones`, `num_items`,
//! `cost` (one row per center, each row one value per zone), `capacity`
//! (one value per center), `demand` (one row per zone, each row one value
//! per item), and `sparsity` (one budget per item). Generated instances
//! additionally embed their generator configuration under
//! `metadata.generator`. A solution file carries `x` (center-major,
//! `x[u][v][i]`), `y` (center-major, `y[u][i]`), and `objective`.
//!
//! All numbers are plain JSON decimals. JSON has no NaN or infinity
//! literals, so malformed values fail parsing; writers reject non-finite
//! values instead of silently emitting null.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::gen::GenConfig;
use crate::model::{FlowSolution, Instance, ModelError};

#[derive(Debug)]
pub enum IoError {
    Parse(String),
    Model(ModelError),
    NotFinite(&'static str),
}

impl fmt::Display for IoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IoError::Parse(msg) => write!(f, "malformed file: {msg}"),
            IoError::Model(err) => write!(f, "inconsistent data: {err}"),
            IoError::NotFinite(what) => write!(f, "{what} contains a non-finite value"),
        }
    }
}

impl std::error::Error for IoError {}

impl From<ModelError> for IoError {
    fn from(err: ModelError) -> Self {
        IoError::Model(err)
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    num_centers: usize,
    num_zones: usize,
    num_items: usize,
    cost: Vec<Vec<f64>>,
    capacity: Vec<f64>,
    demand: Vec<Vec<f64>>,
    sparsity: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<Metadata>,
}

#[derive(Serialize, Deserialize)]
struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<GenConfig>,
}

#[derive(Serialize, Deserialize)]
struct SolutionJson {
    x: Vec<Vec<Vec<f64>>>,
    y: Vec<Vec<f64>>,
    objective: f64,
}

fn ensure_finite(values: impl IntoIterator<Item = f64>, what: &'static str) -> Result<(), IoError> {
    for v in values {
        if !v.is_finite() {
            return Err(IoError::NotFinite(what));
        }
    }
    Ok(())
}

/// Serializes an instance, optionally embedding the generator config that
/// produced it.
pub fn instance_to_json(inst: &Instance, generator: Option<&GenConfig>) -> Result<String, IoError> {
    ensure_finite(inst.cost_rows().iter().copied(), "cost")?;
    ensure_finite(inst.capacities().iter().copied(), "capacity")?;
    ensure_finite(inst.demand_rows().iter().copied(), "demand")?;
    let json = InstanceJson {
        num_centers: inst.num_centers(),
        num_zones: inst.num_zones(),
        num_items: inst.num_items(),
        cost: (0..inst.num_centers())
            .map(|u| (0..inst.num_zones()).map(|v| inst.cost(u, v)).collect())
            .collect(),
        capacity: inst.capacities().to_vec(),
        demand: (0..inst.num_zones())
            .map(|v| (0..inst.num_items()).map(|i| inst.demand(v, i)).collect())
            .collect(),
        sparsity: inst.sparsities().to_vec(),
        metadata: generator.map(|cfg| Metadata {
            generator: Some(cfg.clone()),
        }),
    };
    serde_json::to_string_pretty(&json).map_err(|e| IoError::Parse(e.to_string()))
}

/// Parses an instance file, returning the embedded generator config when
/// present.
pub fn instance_from_json(text: &str) -> Result<(Instance, Option<GenConfig>), IoError> {
    let json: InstanceJson =
        serde_json::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
    let mut cost = Vec::with_capacity(json.num_centers * json.num_zones);
    if json.cost.len() != json.num_centers {
        return Err(ModelError::ShapeMismatch {
            what: "cost rows",
            expected: json.num_centers,
            got: json.cost.len(),
        }
        .into());
    }
    for row in &json.cost {
        if row.len() != json.num_zones {
            return Err(ModelError::ShapeMismatch {
                what: "cost row",
                expected: json.num_zones,
                got: row.len(),
            }
            .into());
        }
        cost.extend_from_slice(row);
    }
    let mut demand = Vec::with_capacity(json.num_zones * json.num_items);
    if json.demand.len() != json.num_zones {
        return Err(ModelError::ShapeMismatch {
            what: "demand rows",
            expected: json.num_zones,
            got: json.demand.len(),
        }
        .into());
    }
    for row in &json.demand {
        if row.len() != json.num_items {
            return Err(ModelError::ShapeMismatch {
                what: "demand row",
                expected: json.num_items,
                got: row.len(),
            }
            .into());
        }
        demand.extend_from_slice(row);
    }
    let inst = Instance::new(
        json.num_centers,
        json.num_zones,
        json.num_items,
        cost,
        json.capacity,
        demand,
        json.sparsity,
    )?;
    Ok((inst, json.metadata.and_then(|m| m.generator)))
}

pub fn solution_to_json(sol: &FlowSolution) -> Result<String, IoError> {
    ensure_finite(sol.x.iter().copied(), "x")?;
    ensure_finite(sol.y.iter().copied(), "y")?;
    if !sol.objective.is_finite() {
        return Err(IoError::NotFinite("objective"));
    }
    let json = SolutionJson {
        x: (0..sol.num_centers())
            .map(|u| {
                (0..sol.num_zones())
                    .map(|v| (0..sol.num_items()).map(|i| sol.x_at(u, v, i)).collect())
                    .collect()
            })
            .collect(),
        y: (0..sol.num_centers())
            .map(|u| (0..sol.num_items()).map(|i| sol.y_at(u, i)).collect())
            .collect(),
        objective: sol.objective,
    };
    serde_json::to_string_pretty(&json).map_err(|e| IoError::Parse(e.to_string()))
}

pub fn solution_from_json(text: &str) -> Result<FlowSolution, IoError> {
    let json: SolutionJson =
        serde_json::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
    let num_centers = json.x.len();
    if num_centers == 0 {
        return Err(ModelError::EmptyDimension { what: "x" }.into());
    }
    let num_zones = json.x[0].len();
    if num_zones == 0 {
        return Err(ModelError::EmptyDimension { what: "x[0]" }.into());
    }
    let num_items = json.x[0][0].len();
    if num_items == 0 {
        return Err(ModelError::EmptyDimension { what: "x[0][0]" }.into());
    }
    let mut x = Vec::with_capacity(num_centers * num_zones * num_items);
    for center_block in &json.x {
        if center_block.len() != num_zones {
            return Err(ModelError::ShapeMismatch {
                what: "x zone block",
                expected: num_zones,
                got: center_block.len(),
            }
            .into());
        }
        for zone_block in center_block {
            if zone_block.len() != num_items {
                return Err(ModelError::ShapeMismatch {
                    what: "x item block",
                    expected: num_items,
                    got: zone_block.len(),
                }
                .into());
            }
            x.extend_from_slice(zone_block);
        }
    }
    let mut y = Vec::with_capacity(num_centers * num_items);
    if json.y.len() != num_centers {
        return Err(ModelError::ShapeMismatch {
            what: "y rows",
            expected: num_centers,
            got: json.y.len(),
        }
        .into());
    }
    for row in &json.y {
        if row.len() != num_items {
            return Err(ModelError::ShapeMismatch {
                what: "y row",
                expected: num_items,
                got: row.len(),
            }
            .into());
        }
        y.extend_from_slice(row);
    }
    Ok(FlowSolution::new(
        num_centers,
        num_zones,
        num_items,
        x,
        y,
        json.objective,
    )?)
}
