//! Panel observations: per-individual state sequences at discrete times,
//! plus the CSV format used on disk.
//!
//! The file layout is one row per observation with columns
//! `id,time,state,end_kind`. States are 1-based labels in files and 0-based
//! indices in memory. `end_kind` is empty except on the last row of each
//! series, where it must be one of `censored`, `death_exact`,
//! `death_interval`. Numbers are written with 17 significant digits so a
//! written file re-reads to bitwise-identical values.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::EndKind;

/// One individual's discrete observations. Times start at zero and
/// strictly increase; the final time is the censoring or death-detection
/// time depending on `end_kind`.
#[derive(Clone, Debug, PartialEq)]
pub struct PanelSeries {
    pub id: String,
    pub times: Vec<f64>,
    pub states: Vec<usize>,
    pub end_kind: EndKind,
}

impl PanelSeries {
    pub fn new(id: String, times: Vec<f64>, states: Vec<usize>, end_kind: EndKind) -> Result<Self> {
        let series = Self {
            id,
            times,
            states,
            end_kind,
        };
        series.validate_shape()?;
        Ok(series)
    }

    fn validate_shape(&self) -> Result<()> {
        if self.times.len() != self.states.len() {
            return Err(Error::InvalidPanel(format!(
                "series {}: {} times but {} states",
                self.id,
                self.times.len(),
                self.states.len()
            )));
        }
        if self.times.len() < 2 {
            return Err(Error::InvalidPanel(format!(
                "series {}: need at least two observations",
                self.id
            )));
        }
        if self.times[0] != 0.0 {
            return Err(Error::InvalidPanel(format!(
                "series {}: first observation must be at time 0, got {}",
                self.id, self.times[0]
            )));
        }
        for w in self.times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidPanel(format!(
                    "series {}: times must strictly increase ({} then {})",
                    self.id, w[0], w[1]
                )));
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("validated nonempty")
    }

    pub fn n_intervals(&self) -> usize {
        self.times.len() - 1
    }

    /// Iterate `(t_prev, t_next, state_prev, state_next)` per interval.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64, usize, usize)> + '_ {
        (1..self.times.len()).map(move |i| {
            (
                self.times[i - 1],
                self.times[i],
                self.states[i - 1],
                self.states[i],
            )
        })
    }

    pub fn final_state(&self) -> usize {
        *self.states.last().expect("validated nonempty")
    }
}

/// A whole data set sharing one state space.
#[derive(Clone, Debug, PartialEq)]
pub struct PanelDataset {
    pub individuals: Vec<PanelSeries>,
    pub n_states: usize,
    pub state_labels: Vec<String>,
    pub absorbing_states: Vec<usize>,
}

impl PanelDataset {
    /// Assemble and cross-validate a dataset. The state count may exceed
    /// the largest observed label; absorbing states are the union of the
    /// caller's list and the final states of death-flagged series.
    pub fn new(
        individuals: Vec<PanelSeries>,
        n_states_hint: Option<usize>,
        absorbing_hint: &[usize],
    ) -> Result<Self> {
        let observed_max = individuals
            .iter()
            .flat_map(|s| s.states.iter().copied())
            .max()
            .map_or(0, |m| m + 1);
        let n_states = n_states_hint.unwrap_or(observed_max).max(observed_max);
        if n_states < 2 {
            return Err(Error::StateSpaceTooSmall {
                min: 2,
                got: n_states,
            });
        }
        let mut absorbing: Vec<usize> = absorbing_hint.to_vec();
        for series in &individuals {
            if series.end_kind.is_absorbed() {
                let last = series.final_state();
                if !absorbing.contains(&last) {
                    absorbing.push(last);
                }
            }
        }
        absorbing.sort_unstable();
        absorbing.dedup();
        if absorbing.iter().any(|&a| a >= n_states) {
            return Err(Error::InvalidPanel(
                "absorbing state outside the state space".into(),
            ));
        }

        for series in &individuals {
            if series.states.iter().any(|&s| s >= n_states) {
                return Err(Error::InvalidPanel(format!(
                    "series {}: state label outside 1..={n_states}",
                    series.id
                )));
            }
            // Absorbing states may only appear as the final observation of
            // a death-flagged series.
            for (i, &s) in series.states.iter().enumerate() {
                let is_last = i + 1 == series.states.len();
                if absorbing.contains(&s) && !(is_last && series.end_kind.is_absorbed()) {
                    return Err(Error::InvalidPanel(format!(
                        "series {}: absorbing state {} observed before the end of follow-up",
                        series.id,
                        s + 1
                    )));
                }
            }
            if series.end_kind.is_absorbed() && !absorbing.contains(&series.final_state()) {
                return Err(Error::InvalidPanel(format!(
                    "series {}: death-flagged series must end in an absorbing state",
                    series.id
                )));
            }
        }

        let state_labels = (1..=n_states).map(|s| s.to_string()).collect();
        Ok(Self {
            individuals,
            n_states,
            state_labels,
            absorbing_states: absorbing,
        })
    }

    pub fn n_individuals(&self) -> usize {
        self.individuals.len()
    }

    /// Mean observation gap across all series, used to seed exit rates.
    pub fn mean_observation_gap(&self) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for series in &self.individuals {
            for w in series.times.windows(2) {
                sum += w[1] - w[0];
                count += 1;
            }
        }
        if count == 0 {
            1.0
        } else {
            sum / count as f64
        }
    }
}

/// How death is recorded when a simulated trajectory is thinned to a
/// visit schedule: the exact absorption time enters the panel, or only
/// the first visit at which the subject is found absorbed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeathObservability {
    Exact,
    Interval,
}

/// Thin a complete trajectory to a panel series on a fixed visit schedule.
/// Observation stops at the visit where death is detected; surviving the
/// whole schedule yields a censored series.
pub fn thin_to_panel(
    trajectory: &crate::model::Trajectory,
    schedule: &[f64],
    death: DeathObservability,
    id: String,
) -> Result<PanelSeries> {
    if schedule.len() < 2 || schedule[0] != 0.0 || schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidConfig(
            "schedule must start at 0 and strictly increase".into(),
        ));
    }
    let horizon = *schedule.last().expect("schedule nonempty");
    if !trajectory.end_kind.is_absorbed() && trajectory.end_time < horizon {
        return Err(Error::InvalidTrajectory(format!(
            "trajectory ends at {} before the last visit {horizon}",
            trajectory.end_time
        )));
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    for &t in schedule {
        if trajectory.end_kind.is_absorbed() && trajectory.end_time <= t {
            let dead_state = trajectory.last_state();
            return match death {
                DeathObservability::Exact => {
                    times.push(trajectory.end_time);
                    states.push(dead_state);
                    PanelSeries::new(id, times, states, EndKind::AbsorbedExact)
                }
                DeathObservability::Interval => {
                    times.push(t);
                    states.push(dead_state);
                    PanelSeries::new(id, times, states, EndKind::AbsorbedInInterval)
                }
            };
        }
        times.push(t);
        states.push(trajectory.state_at(t));
    }
    PanelSeries::new(id, times, states, EndKind::Censored)
}

fn end_kind_label(kind: EndKind) -> &'static str {
    match kind {
        EndKind::Censored => "censored",
        EndKind::AbsorbedExact => "death_exact",
        EndKind::AbsorbedInInterval => "death_interval",
    }
}

fn parse_end_kind(s: &str, line: usize) -> Result<EndKind> {
    match s {
        "censored" => Ok(EndKind::Censored),
        "death_exact" => Ok(EndKind::AbsorbedExact),
        "death_interval" => Ok(EndKind::AbsorbedInInterval),
        other => Err(Error::PanelFormat {
            line,
            message: format!(
                "unknown end_kind `{other}` (expected censored, death_exact or death_interval)"
            ),
        }),
    }
}

/// Format a float with 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serialize a dataset in the long panel format.
pub fn panel_to_csv(dataset: &PanelDataset) -> String {
    let mut out = String::from("id,time,state,end_kind\n");
    for series in &dataset.individuals {
        let last = series.times.len() - 1;
        for i in 0..series.times.len() {
            let kind = if i == last {
                end_kind_label(series.end_kind)
            } else {
                ""
            };
            let _ = writeln!(
                out,
                "{},{},{},{kind}",
                series.id,
                format_number(series.times[i]),
                series.states[i] + 1
            );
        }
    }
    out
}

pub fn write_panel(dataset: &PanelDataset, path: &Path) -> Result<()> {
    std::fs::write(path, panel_to_csv(dataset))?;
    Ok(())
}

/// Parse the long panel format. Rows for one individual must be contiguous
/// and in time order; the series order of the file is preserved.
pub fn parse_panel_csv(text: &str) -> Result<PanelDataset> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::PanelFormat {
        line: 1,
        message: "empty file".into(),
    })?;
    if header.trim() != "id,time,state,end_kind" {
        return Err(Error::PanelFormat {
            line: 1,
            message: format!("expected header `id,time,state,end_kind`, got `{header}`"),
        });
    }

    struct Open {
        id: String,
        times: Vec<f64>,
        states: Vec<usize>,
        end: Option<EndKind>,
    }

    let mut finished: Vec<PanelSeries> = Vec::new();
    let mut seen_ids: Vec<String> = Vec::new();
    let mut open: Option<Open> = None;

    let mut close = |open: &mut Option<Open>, line: usize| -> Result<()> {
        if let Some(series) = open.take() {
            let end = series.end.ok_or_else(|| Error::PanelFormat {
                line,
                message: format!("series {} has no end_kind on its last row", series.id),
            })?;
            finished.push(PanelSeries::new(series.id, series.times, series.states, end)?);
        }
        Ok(())
    };

    for (idx, raw) in lines {
        let line = idx + 1;
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::PanelFormat {
                line,
                message: format!("expected 4 columns, got {}", fields.len()),
            });
        }
        let id = fields[0].trim();
        let time: f64 = fields[1].trim().parse().map_err(|_| Error::PanelFormat {
            line,
            message: format!("cannot parse time `{}`", fields[1]),
        })?;
        let state_label: usize = fields[2].trim().parse().map_err(|_| Error::PanelFormat {
            line,
            message: format!("cannot parse state `{}`", fields[2]),
        })?;
        if state_label == 0 {
            return Err(Error::PanelFormat {
                line,
                message: "state labels are 1-based".into(),
            });
        }
        let end_field = fields[3].trim();

        let start_new = match &open {
            Some(o) => o.id != id,
            None => true,
        };
        if start_new {
            close(&mut open, line)?;
            if seen_ids.iter().any(|seen| seen == id) {
                return Err(Error::PanelFormat {
                    line,
                    message: format!("rows for id {id} are not contiguous"),
                });
            }
            seen_ids.push(id.to_string());
            open = Some(Open {
                id: id.to_string(),
                times: Vec::new(),
                states: Vec::new(),
                end: None,
            });
        }
        let o = open.as_mut().expect("just opened");
        if o.end.is_some() {
            return Err(Error::PanelFormat {
                line,
                message: format!("series {id} continues past its end_kind row"),
            });
        }
        o.times.push(time);
        o.states.push(state_label - 1);
        if !end_field.is_empty() {
            o.end = Some(parse_end_kind(end_field, line)?);
        }
    }
    close(&mut open, usize::MAX)?;

    if finished.is_empty() {
        return Err(Error::InvalidPanel("no series in file".into()));
    }
    PanelDataset::new(finished, None, &[])
}

pub fn load_panel(path: &Path) -> Result<PanelDataset> {
    let text = std::fs::read_to_string(path)?;
    parse_panel_csv(&text)
}
