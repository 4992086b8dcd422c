//! Uniformly time-sampled sequence of states, the unit of iteration for the
//! fixed-point solver and the time-history store its sources require.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    dt: f64,
    states: Vec<S>,
}

impl<S> Trajectory<S> {
    pub fn new(dt: f64, states: Vec<S>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::validation("trajectory", "must hold at least one state"));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::validation("trajectory.dt", "dt must be positive and finite"));
        }
        Ok(Trajectory { dt, states })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of stored states (steps + 1).
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps() as f64
    }

    pub fn time(&self, index: usize) -> f64 {
        self.dt * index as f64
    }

    pub fn state(&self, index: usize) -> &S {
        &self.states[index]
    }

    pub fn first(&self) -> &S {
        &self.states[0]
    }

    pub fn last(&self) -> &S {
        self.states.last().expect("nonempty")
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn iter(&self) -> std::slice::Iter<'_, S> {
        self.states.iter()
    }

    pub fn map<T>(&self, f: impl FnMut(&S) -> T) -> Trajectory<T> {
        Trajectory { dt: self.dt, states: self.states.iter().map(f).collect() }
    }

    pub fn try_map<T>(&self, mut f: impl FnMut(&S) -> Result<T>) -> Result<Trajectory<T>> {
        let mut states = Vec::with_capacity(self.states.len());
        for s in &self.states {
            states.push(f(s)?);
        }
        Ok(Trajectory { dt: self.dt, states })
    }
}

/// Split `horizon` into steps of `dt`, requiring near-exact divisibility.
pub fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if horizon < 0.0 {
        return Err(Error::validation("horizon", "must be nonnegative"));
    }
    if !(dt > 0.0) {
        return Err(Error::validation("dt", "must be positive"));
    }
    let steps = (horizon / dt).round();
    if (steps * dt - horizon).abs() > 1e-9 * dt.max(horizon) {
        return Err(Error::validation(
            "dt",
            format!("dt {dt} does not divide the horizon {horizon}"),
        ));
    }
    Ok(steps as usize)
}
