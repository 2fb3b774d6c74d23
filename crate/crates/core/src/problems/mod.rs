//! Constrained test problems: an ordered list of constraints plus an
//! objective over a closed interval, each given as an expression tree.
//!
//! Constraints are verified in the order they are listed; a function at one
//! level is only meaningful where every earlier constraint holds, which is
//! why the order is part of the problem definition and not a detail.

mod expr;
mod parse;

pub use expr::{BinaryOp, EvalError, Expr, PieceBranch, UnaryOp};
pub use parse::{parse_expr, ParseError};

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A problem `min f(x) : g_1(x) <= 0, ..., g_m(x) <= 0, x in [a, b]`
/// with the constraints checked in listed order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedProblem {
    pub name: String,
    pub domain: (f64, f64),
    pub constraints: Vec<Expr>,
    pub objective: Expr,
    /// Known minimizer, when available; reporting metadata only.
    pub known_minimizer: Option<f64>,
    /// Penalty coefficient for the penalty-reduction baseline.
    pub penalty_coefficient: Option<f64>,
    /// A priori Lipschitz overestimates K_1..K_{m+1}, when known.
    pub lipschitz_overestimates: Option<Vec<f64>>,
}

impl ConstrainedProblem {
    /// Number of constraints m.
    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Number of levels m+1 (constraints plus the objective).
    pub fn levels(&self) -> usize {
        self.constraints.len() + 1
    }

    /// The function at 1-based `level`: `g_level` for `level <= m`,
    /// the objective for `level == m+1`.
    pub fn function(&self, level: usize) -> &Expr {
        assert!(level >= 1 && level <= self.levels(), "level out of range");
        if level <= self.constraints.len() {
            &self.constraints[level - 1]
        } else {
            &self.objective
        }
    }

    pub fn width(&self) -> f64 {
        self.domain.1 - self.domain.0
    }

    fn validate(&self) -> Result<(), ProblemError> {
        let (a, b) = self.domain;
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(ProblemError::Schema(format!(
                "domain [{a}, {b}] must be a finite interval with b > a"
            )));
        }
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(ProblemError::Schema(format!(
                "name `{}` must be a nonempty identifier (alphanumeric, `_`, `-`)",
                self.name
            )));
        }
        if let Some(xm) = self.known_minimizer {
            if !(a..=b).contains(&xm) {
                return Err(ProblemError::Schema(format!(
                    "minimizer {xm} lies outside the domain [{a}, {b}]"
                )));
            }
        }
        if let Some(p) = self.penalty_coefficient {
            if !(p.is_finite() && p > 0.0) {
                return Err(ProblemError::Schema(format!(
                    "penalty coefficient {p} must be positive"
                )));
            }
        }
        if let Some(ks) = &self.lipschitz_overestimates {
            if ks.len() != self.levels() {
                return Err(ProblemError::Schema(format!(
                    "lipschitz list has {} entries, expected {} (one per constraint plus the objective)",
                    ks.len(),
                    self.levels()
                )));
            }
            if ks.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
                return Err(ProblemError::Schema(
                    "lipschitz overestimates must all be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Error loading or saving a problem file.
#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("problem file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("expression error in `{field}`: {source}")]
    Expr {
        field: String,
        source: ParseError,
    },
}

// ---------------------------------------------------------------------------
// Problem file schema
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    name: String,
    domain: [f64; 2],
    constraints: Vec<ExprSpec>,
    objective: ExprSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    minimizer: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    penalty_coefficient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lipschitz: Option<Vec<f64>>,
}

/// A function in a problem file: either an inline grammar string or a
/// piecewise list of `(if_x_le, expr)` branches closed by an `else` branch.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ExprSpec {
    Grammar(String),
    Piecewise { piecewise: Vec<PieceSpec> },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum PieceSpec {
    Cond {
        if_x_le: f64,
        expr: String,
    },
    Else {
        #[serde(rename = "else")]
        otherwise: String,
    },
}

fn spec_to_expr(spec: &ExprSpec, field: &str) -> Result<Expr, ProblemError> {
    let parse = |text: &str, field: &str| {
        parse_expr(text).map_err(|source| ProblemError::Expr {
            field: field.to_string(),
            source,
        })
    };
    match spec {
        ExprSpec::Grammar(text) => parse(text, field),
        ExprSpec::Piecewise { piecewise } => {
            let mut branches = Vec::new();
            let mut otherwise = None;
            for (i, piece) in piecewise.iter().enumerate() {
                match piece {
                    PieceSpec::Cond { if_x_le, expr } => {
                        if otherwise.is_some() {
                            return Err(ProblemError::Schema(format!(
                                "`{field}`: piecewise branch after the else branch"
                            )));
                        }
                        branches.push(PieceBranch {
                            upper: *if_x_le,
                            expr: parse(expr, &format!("{field}[{i}]"))?,
                        });
                    }
                    PieceSpec::Else { otherwise: text } => {
                        if otherwise.is_some() {
                            return Err(ProblemError::Schema(format!(
                                "`{field}`: duplicate else branch"
                            )));
                        }
                        otherwise = Some(parse(text, &format!("{field}[{i}]"))?);
                    }
                }
            }
            let otherwise = otherwise.ok_or_else(|| {
                ProblemError::Schema(format!("`{field}`: piecewise list has no else branch"))
            })?;
            Expr::piecewise(branches, otherwise)
                .map_err(|m| ProblemError::Schema(format!("`{field}`: {m}")))
        }
    }
}

fn expr_to_spec(e: &Expr) -> ExprSpec {
    match e {
        Expr::Piecewise {
            branches,
            otherwise,
        } => {
            let mut pieces: Vec<PieceSpec> = branches
                .iter()
                .map(|b| PieceSpec::Cond {
                    if_x_le: b.upper,
                    expr: b.expr.to_string(),
                })
                .collect();
            pieces.push(PieceSpec::Else {
                otherwise: otherwise.to_string(),
            });
            ExprSpec::Piecewise { piecewise: pieces }
        }
        other => ExprSpec::Grammar(other.to_string()),
    }
}

/// Loads a problem from a JSON file.
pub fn load_problem(path: &Path) -> Result<ConstrainedProblem, ProblemError> {
    let text = fs::read_to_string(path)?;
    load_problem_str(&text)
}

/// Loads a problem from JSON text.
pub fn load_problem_str(text: &str) -> Result<ConstrainedProblem, ProblemError> {
    let file: ProblemFile = serde_json::from_str(text)?;
    let mut constraints = Vec::with_capacity(file.constraints.len());
    for (i, c) in file.constraints.iter().enumerate() {
        constraints.push(spec_to_expr(c, &format!("constraints[{i}]"))?);
    }
    let problem = ConstrainedProblem {
        name: file.name,
        domain: (file.domain[0], file.domain[1]),
        constraints,
        objective: spec_to_expr(&file.objective, "objective")?,
        known_minimizer: file.minimizer,
        penalty_coefficient: file.penalty_coefficient,
        lipschitz_overestimates: file.lipschitz,
    };
    problem.validate()?;
    Ok(problem)
}

/// Serializes a problem back to the JSON file format. Loading the result
/// yields a problem structurally equal to the input.
pub fn save_problem_str(p: &ConstrainedProblem) -> Result<String, ProblemError> {
    p.validate()?;
    let file = ProblemFile {
        name: p.name.clone(),
        domain: [p.domain.0, p.domain.1],
        constraints: p.constraints.iter().map(expr_to_spec).collect(),
        objective: expr_to_spec(&p.objective),
        minimizer: p.known_minimizer,
        penalty_coefficient: p.penalty_coefficient,
        lipschitz: p.lipschitz_overestimates.clone(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

/// Writes a problem to a JSON file.
pub fn save_problem(p: &ConstrainedProblem, path: &Path) -> Result<(), ProblemError> {
    fs::write(path, save_problem_str(p)?)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Built-in fixture
// ---------------------------------------------------------------------------

/// The built-in two-constraint test problem on `[0, 1.5*pi]`.
///
/// The objective is a three-piece function (parabola, sine hump, parabola),
/// both constraints are multiextremal, and the admissible region splits into
/// two disjoint subintervals. The known minimizer is 3.76984 with a
/// penalty coefficient of 15 for the penalty baseline.
pub fn builtin_problem_6() -> ConstrainedProblem {
    use std::f64::consts::PI;
    let branch = |text: &str| parse_expr(text).expect("builtin expression parses");
    let objective = Expr::piecewise(
        vec![
            PieceBranch {
                upper: 0.3 * PI,
                expr: branch("(100/(9*pi^2)*x^2 + 0.5)/3"),
            },
            PieceBranch {
                upper: 0.9 * PI,
                expr: branch("5/3*sin(20/3*x) + 0.5"),
            },
        ],
        branch("(100/(9*pi^2)*x^2 - 80/(3*pi)*x + 33/2)/3"),
    )
    .expect("builtin thresholds increase");
    ConstrainedProblem {
        name: "problem6".to_string(),
        domain: (0.0, 1.5 * PI),
        constraints: vec![
            branch("0.7 - abs(sin(3*x)^3 + cos(x)^3)"),
            branch("-abs((x - pi)^3/100) + abs(cos(2*(x - pi))) - 0.5"),
        ],
        objective,
        known_minimizer: Some(3.76984),
        penalty_coefficient: Some(15.0),
        lipschitz_overestimates: None,
    }
}

/// Looks up a built-in problem by name.
pub fn builtin(name: &str) -> Option<ConstrainedProblem> {
    match name {
        "problem6" => Some(builtin_problem_6()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn builtin_metadata_is_pinned() {
        let p = builtin_problem_6();
        assert_eq!(p.known_minimizer, Some(3.76984));
        assert_eq!(p.penalty_coefficient, Some(15.0));
        assert_eq!(p.num_constraints(), 2);
        assert_eq!(p.domain, (0.0, 1.5 * PI));
    }

    #[test]
    fn builtin_objective_at_zero_is_one_sixth() {
        let p = builtin_problem_6();
        let v = p.objective.eval(0.0).unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn builtin_objective_is_continuous_at_branch_boundaries() {
        let p = builtin_problem_6();
        for boundary in [0.3 * PI, 0.9 * PI] {
            let left = p.objective.eval(boundary).unwrap();
            let right = p.objective.eval(boundary + 1e-12).unwrap();
            assert!(
                (left - right).abs() < 1e-9,
                "objective jumps at {boundary}: {left} vs {right}"
            );
        }
    }

    #[test]
    fn builtin_is_feasible_at_its_known_minimizer() {
        let p = builtin_problem_6();
        let x = p.known_minimizer.unwrap();
        for g in &p.constraints {
            assert!(g.eval(x).unwrap() <= 0.0);
        }
    }

    #[test]
    fn file_round_trip_preserves_the_builtin() {
        let p = builtin_problem_6();
        let text = save_problem_str(&p).unwrap();
        let loaded = load_problem_str(&text).unwrap();
        assert_eq!(p, loaded);
        // And a second cycle is a fixed point.
        assert_eq!(text, save_problem_str(&loaded).unwrap());
    }

    #[test]
    fn unconstrained_file_is_valid() {
        let text = r#"{
            "name": "line",
            "domain": [0.0, 1.0],
            "constraints": [],
            "objective": "x"
        }"#;
        let p = load_problem_str(text).unwrap();
        assert_eq!(p.num_constraints(), 0);
        assert_eq!(p.levels(), 1);
    }

    #[test]
    fn decreasing_piecewise_thresholds_are_a_schema_violation() {
        let text = r#"{
            "name": "bad",
            "domain": [0.0, 1.0],
            "constraints": [],
            "objective": {"piecewise": [
                {"if_x_le": 0.8, "expr": "x"},
                {"if_x_le": 0.2, "expr": "x + 1"},
                {"else": "x + 2"}
            ]}
        }"#;
        match load_problem_str(text) {
            Err(ProblemError::Schema(msg)) => assert!(msg.contains("strictly increase")),
            other => panic!("expected schema violation, got {other:?}"),
        }
    }

    #[test]
    fn piecewise_without_else_is_rejected() {
        let text = r#"{
            "name": "bad",
            "domain": [0.0, 1.0],
            "constraints": [],
            "objective": {"piecewise": [{"if_x_le": 0.5, "expr": "x"}]}
        }"#;
        assert!(matches!(
            load_problem_str(text),
            Err(ProblemError::Schema(_))
        ));
    }

    #[test]
    fn inverted_domain_is_rejected() {
        let text = r#"{
            "name": "bad",
            "domain": [1.0, 0.0],
            "constraints": [],
            "objective": "x"
        }"#;
        assert!(matches!(
            load_problem_str(text),
            Err(ProblemError::Schema(_))
        ));
    }

    #[test]
    fn minimizer_outside_domain_is_rejected() {
        let text = r#"{
            "name": "bad",
            "domain": [0.0, 1.0],
            "constraints": [],
            "objective": "x",
            "minimizer": 2.0
        }"#;
        assert!(matches!(
            load_problem_str(text),
            Err(ProblemError::Schema(_))
        ));
    }

    #[test]
    fn lipschitz_list_length_is_checked() {
        let text = r#"{
            "name": "bad",
            "domain": [0.0, 1.0],
            "constraints": ["x"],
            "objective": "x",
            "lipschitz": [1.0]
        }"#;
        assert!(matches!(
            load_problem_str(text),
            Err(ProblemError::Schema(_))
        ));
    }
}
