use std::cell::Cell;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

/// Time slice granted to one request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quantum {
    Finite(Duration),
    Unlimited,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid quantum {0:?}: expected a positive number of milliseconds or \"inf\"")]
pub struct QuantumError(pub String);

impl Quantum {
    pub fn from_millis(ms: u64) -> Result<Self, QuantumError> {
        Self::finite(Duration::from_millis(ms))
    }

    pub fn finite(d: Duration) -> Result<Self, QuantumError> {
        if d.is_zero() {
            return Err(QuantumError(format!("{d:?}")));
        }
        Ok(Quantum::Finite(d))
    }

    pub fn duration(&self) -> Option<Duration> {
        match self {
            Quantum::Finite(d) => Some(*d),
            Quantum::Unlimited => None,
        }
    }

    pub fn is_unlimited(&self) -> bool {
        matches!(self, Quantum::Unlimited)
    }

    /// Starts a clock for this quantum now.
    pub fn start(&self) -> QuotaClock {
        match self {
            Quantum::Finite(d) => QuotaClock::start(*d),
            Quantum::Unlimited => QuotaClock::unlimited(),
        }
    }
}

impl FromStr for Quantum {
    type Err = QuantumError;

    /// `"75"` (milliseconds, may be fractional) or `"inf"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if matches!(s, "inf" | "infinite" | "unlimited") {
            return Ok(Quantum::Unlimited);
        }
        let ms: f64 = s.parse().map_err(|_| QuantumError(s.to_owned()))?;
        if !(ms.is_finite() && ms > 0.0) {
            return Err(QuantumError(s.to_owned()));
        }
        Self::finite(Duration::from_secs_f64(ms / 1000.0))
    }
}

impl fmt::Display for Quantum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantum::Finite(d) => write!(f, "{}ms", d.as_secs_f64() * 1000.0),
            Quantum::Unlimited => f.write_str("inf"),
        }
    }
}

/// Expiry check for one quantum, read at every preemption point.
///
/// Besides the monotonic deadline, a clock can be tied to an external
/// interrupt flag (a watchdog) or to a fixed number of checks, which makes the
/// interrupt point reproducible in tests.
///
/// A clock never reports expiry before the pipeline has consumed at least one
/// index entry in this quantum, so every quantum makes progress.
#[derive(Debug)]
pub struct QuotaClock {
    started: Instant,
    deadline: Option<Instant>,
    interrupt: Option<Arc<AtomicBool>>,
    checks_left: Option<Cell<u64>>,
    progressed: Cell<bool>,
    /// Deadline checks left before the system clock is read again.
    until_read: Cell<u32>,
    timed_out: Cell<bool>,
}

/// Reading the system clock costs more than an index step, so a deadline is
/// only compared against the time on every this many checks.
pub const READ_EVERY: u32 = 64;

impl QuotaClock {
    pub fn start(quantum: Duration) -> Self {
        assert!(!quantum.is_zero(), "quantum must be positive");
        let started = Instant::now();
        Self {
            started,
            deadline: started.checked_add(quantum),
            interrupt: None,
            checks_left: None,
            progressed: Cell::new(false),
            until_read: Cell::new(0),
            timed_out: Cell::new(false),
        }
    }

    pub fn unlimited() -> Self {
        Self {
            started: Instant::now(),
            deadline: None,
            interrupt: None,
            checks_left: None,
            progressed: Cell::new(false),
            until_read: Cell::new(0),
            timed_out: Cell::new(false),
        }
    }

    /// Expires on the `checks`-th call to [`expired`](Self::expired) made after
    /// the first progress, and stays expired.
    pub fn after_checks(checks: u64) -> Self {
        Self { checks_left: Some(Cell::new(checks)), ..Self::unlimited() }
    }

    pub fn with_interrupt(mut self, flag: Arc<AtomicBool>) -> Self {
        self.interrupt = Some(flag);
        self
    }

    pub fn elapsed(&self) -> Duration {
        self.started.elapsed()
    }

    pub(crate) fn record_progress(&self) {
        self.progressed.set(true);
    }

    pub fn has_progressed(&self) -> bool {
        self.progressed.get()
    }

    pub fn expired(&self) -> bool {
        if !self.progressed.get() {
            return false;
        }
        if let Some(left) = &self.checks_left {
            let n = left.get();
            if n <= 1 {
                left.set(0);
                return true;
            }
            left.set(n - 1);
        }
        if self.interrupt.as_ref().is_some_and(|f| f.load(Ordering::Acquire)) {
            return true;
        }
        let Some(deadline) = self.deadline else { return false };
        if self.timed_out.get() {
            return true;
        }
        let left = self.until_read.get();
        if left > 0 {
            self.until_read.set(left - 1);
            return false;
        }
        self.until_read.set(READ_EVERY - 1);
        self.timed_out.set(Instant::now() >= deadline);
        self.timed_out.get()
    }
}
