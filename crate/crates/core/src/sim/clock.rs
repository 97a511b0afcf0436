use crate::error::FsmError;

/// Simulation time in seconds since the session epoch. Only moves forward,
/// and only when told to.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VirtualClock {
    now: f64,
}

impl VirtualClock {
    pub fn new(start: f64) -> Self {
        Self { now: start }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn advance_to(&mut self, ts: f64) -> Result<(), FsmError> {
        if ts.is_nan() || ts < self.now {
            return Err(FsmError::NonMonotonic { last: self.now, ts });
        }
        self.now = ts;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_moves_forward() {
        let mut c = VirtualClock::new(5.0);
        c.advance_to(5.0).unwrap();
        c.advance_to(90.0).unwrap();
        assert_eq!(c.now(), 90.0);
        assert!(c.advance_to(89.0).is_err());
        assert!(c.advance_to(f64::NAN).is_err());
        assert_eq!(c.now(), 90.0);
    }
}
