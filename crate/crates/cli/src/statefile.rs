//! JSON state files: either a named family with parameters or an explicit
//! row-major matrix of `[re, im]` pairs.

use std::fs;
use std::io::Read;
use std::path::Path;

use entlab::states::{bell, pure, random_density, two_qubit_layout, werner, BellState, DensityMatrix};
use entlab::tensor::{ComplexMatrix, SubsystemLayout};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum StateFile {
    Family {
        family: String,
        #[serde(default)]
        params: Value,
    },
    Matrix {
        dims: Vec<usize>,
        matrix: Vec<Vec<[f64; 2]>>,
    },
}

impl StateFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = if path == Path::new("-") {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|e| CliError::Input(format!("stdin: {e}")))?;
            s
        } else {
            fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        };
        Self::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        // Parse to a value first so syntax errors carry line and column.
        let value: Value = serde_json::from_str(text)
            .map_err(|e| format!("malformed JSON at line {}, column {}: {e}", e.line(), e.column()))?;
        serde_json::from_value(value).map_err(|_| {
            "expected {\"family\": name, \"params\": {...}} or {\"dims\": [...], \"matrix\": [[[re, im], ...], ...]}"
                .to_owned()
        })
    }

    pub fn from_density(rho: &DensityMatrix) -> Self {
        let m = rho.matrix();
        let matrix = (0..m.rows()).map(|r| m.row(r).iter().map(|z| [z.re, z.im]).collect()).collect();
        Self::Matrix { dims: rho.layout().dims(), matrix }
    }

    pub fn to_density(&self) -> Result<DensityMatrix, CliError> {
        let invalid = |e: entlab::Error| CliError::Input(format!("invalid state: {e}"));
        match self {
            Self::Matrix { dims, matrix } => {
                let layout = if dims[..] == [2, 2] {
                    two_qubit_layout()
                } else {
                    SubsystemLayout::from_dims(dims).map_err(invalid)?
                };
                let rows: Vec<Vec<C64>> =
                    matrix.iter().map(|row| row.iter().map(|&[re, im]| C64::new(re, im)).collect()).collect();
                let m = ComplexMatrix::from_rows(&rows).map_err(invalid)?;
                DensityMatrix::new(m, layout).map_err(invalid)
            }
            Self::Family { family, params } => family_state(family, params).map_err(|e| match e {
                FamilyError::Param(msg) => CliError::Input(format!("family {family}: {msg}")),
                FamilyError::State(e) => invalid(e),
            }),
        }
    }
}

enum FamilyError {
    Param(String),
    State(entlab::Error),
}

impl From<entlab::Error> for FamilyError {
    fn from(e: entlab::Error) -> Self {
        Self::State(e)
    }
}

fn number(params: &Value, key: &str) -> Result<Option<f64>, FamilyError> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v.as_f64().map(Some).ok_or_else(|| FamilyError::Param(format!("`{key}` must be a number"))),
    }
}

fn count(params: &Value, key: &str) -> Result<Option<u64>, FamilyError> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => {
            v.as_u64().map(Some).ok_or_else(|| FamilyError::Param(format!("`{key}` must be a nonnegative integer")))
        }
    }
}

fn bell_state(params: &Value) -> Result<BellState, FamilyError> {
    match params.get("which").or_else(|| params.get("index")) {
        None | Some(Value::Null) => Ok(BellState::PhiPlus),
        Some(Value::String(s)) => match s.as_str() {
            "phi+" | "phi_plus" => Ok(BellState::PhiPlus),
            "phi-" | "phi_minus" => Ok(BellState::PhiMinus),
            "psi+" | "psi_plus" => Ok(BellState::PsiPlus),
            "psi-" | "psi_minus" => Ok(BellState::PsiMinus),
            other => Err(FamilyError::Param(format!("unknown Bell state `{other}`"))),
        },
        Some(v) => {
            let i = v.as_u64().ok_or_else(|| FamilyError::Param("Bell index must be 0..=3".into()))?;
            Ok(BellState::from_index(i as usize)?)
        }
    }
}

fn family_state(family: &str, params: &Value) -> Result<DensityMatrix, FamilyError> {
    if !params.is_null() && !params.is_object() {
        return Err(FamilyError::Param("`params` must be an object".into()));
    }
    match family {
        "bell" => Ok(bell(bell_state(params)?)),
        "werner" => {
            let p = number(params, "p")?.ok_or_else(|| FamilyError::Param("missing `p`".into()))?;
            Ok(werner(p)?)
        }
        "pure" => {
            let amps = params
                .get("amplitudes")
                .and_then(Value::as_array)
                .ok_or_else(|| FamilyError::Param("missing `amplitudes` array".into()))?;
            let amps = amps
                .iter()
                .map(|a| match a {
                    Value::Number(n) => n.as_f64().map(|re| C64::new(re, 0.0)),
                    Value::Array(pair) if pair.len() == 2 => {
                        Some(C64::new(pair[0].as_f64()?, pair[1].as_f64()?))
                    }
                    _ => None,
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| FamilyError::Param("amplitudes must be numbers or [re, im] pairs".into()))?;
            Ok(pure(&amps)?)
        }
        "random" => {
            let seed = count(params, "seed")?.unwrap_or(0);
            let dims: Vec<usize> = match params.get("dims") {
                None | Some(Value::Null) => vec![2, 2],
                Some(v) => serde_json::from_value(v.clone())
                    .map_err(|_| FamilyError::Param("`dims` must be a list of counts".into()))?,
            };
            let full: usize = dims.iter().product();
            let rank = count(params, "rank")?.map_or(full, |r| r as usize);
            Ok(random_density(seed, &dims, rank)?)
        }
        other => Err(FamilyError::Param(format!("unknown family `{other}` (expected bell, werner, pure or random)"))),
    }
}
