//! Valve schedule scripts: one `INF <bladder> <ms>`, `DEF <bladder> <ms>`
//! or `RESET` per line. Blank lines and `#` comments are ignored.

use std::fmt;

use rand::Rng;
use softarm_core::experiments::ideal_pose_vector;
use softarm_core::plant::N_BLADDERS;
use softarm_core::{Plant, PlantState};

use crate::error::FormatError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    Inflate { bladder: usize, ms: f64 },
    Deflate { bladder: usize, ms: f64 },
    Reset,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Inflate { bladder, ms } => write!(f, "INF {bladder} {ms}"),
            Command::Deflate { bladder, ms } => write!(f, "DEF {bladder} {ms}"),
            Command::Reset => f.write_str("RESET"),
        }
    }
}

/// A command together with its 1-based source line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub line: usize,
    pub command: Command,
}

pub fn parse(text: &str) -> Result<Vec<Step>, FormatError> {
    let mut steps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| FormatError::Schedule { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let command = match tokens.as_slice() {
            ["RESET"] => Command::Reset,
            [op @ ("INF" | "DEF"), b, ms] => {
                let bladder: usize = b.parse().map_err(|_| err(format!("bad bladder index `{b}`")))?;
                if bladder >= N_BLADDERS {
                    return Err(err(format!(
                        "bladder index {bladder} out of range 0-{}",
                        N_BLADDERS - 1
                    )));
                }
                let ms: f64 = ms
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite() && *v >= 0.0)
                    .ok_or_else(|| err(format!("bad duration `{ms}`")))?;
                if *op == "INF" {
                    Command::Inflate { bladder, ms }
                } else {
                    Command::Deflate { bladder, ms }
                }
            }
            _ => {
                return Err(err(format!(
                    "expected `INF b ms`, `DEF b ms` or `RESET`, got `{content}`"
                )))
            }
        };
        steps.push(Step { line, command });
    }
    Ok(steps)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: Step,
    pub state: PlantState,
    /// Position (mm) and Euler angles (deg) of the beacon.
    pub pose: [f64; 6],
}

/// Executes the schedule from rest, recording the tip after each command.
pub fn replay<R: Rng + ?Sized>(plant: &Plant, steps: &[Step], rng: &mut R) -> Result<Vec<TraceRow>, FormatError> {
    let mut state = plant.reset();
    let mut rows = Vec::with_capacity(steps.len());
    for step in steps {
        let wrap = |e: softarm_core::PlantError| FormatError::Schedule {
            line: step.line,
            message: e.to_string(),
        };
        state = match step.command {
            Command::Inflate { bladder, ms } => plant.step_inflate(&state, bladder, ms).map_err(wrap)?,
            Command::Deflate { bladder, ms } => plant.step_deflate(&state, bladder, ms).map_err(wrap)?,
            Command::Reset => plant.reset(),
        };
        let pose = ideal_pose_vector(plant, &plant.tip_pose_noisy(&state, 0.0, rng));
        rows.push(TraceRow {
            step: *step,
            state,
            pose,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_commands_and_comments() {
        let s = parse("# warmup\nRESET\n\nINF 0 300  # half\nDEF 0 435\n").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[1].line, 4);
        assert_eq!(s[1].command, Command::Inflate { bladder: 0, ms: 300.0 });
        assert_eq!(s[2].command, Command::Deflate { bladder: 0, ms: 435.0 });
    }

    #[test]
    fn errors_name_the_line() {
        for (text, line) in [
            ("RESET\nINF 9 100", 2),
            ("INF 0", 1),
            ("RESET\n\nDEF 1 -3", 3),
            ("JUMP", 1),
        ] {
            match parse(text) {
                Err(FormatError::Schedule { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }
}
