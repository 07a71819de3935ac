use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Push,
    Pop,
    Mac,
    Grant,
    Stall,
    Emit,
}

impl TraceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceKind::Push => "push",
            TraceKind::Pop => "pop",
            TraceKind::Mac => "mac",
            TraceKind::Grant => "grant",
            TraceKind::Stall => "stall",
            TraceKind::Emit => "emit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Distributor,
    Lane(u8),
    Fifo(u8),
    Arbiter,
    Output,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Unit::Distributor => f.write_str("distributor"),
            Unit::Lane(k) => write!(f, "lane{k}"),
            Unit::Fifo(k) => write!(f, "fifo{k}"),
            Unit::Arbiter => f.write_str("arbiter"),
            Unit::Output => f.write_str("output"),
        }
    }
}

/// One line of the trace: `cycle=<n> unit=<name> event=<kind> detail=<k=v,...>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEvent {
    pub cycle: u64,
    pub unit: Unit,
    pub kind: TraceKind,
    detail: [(&'static str, i64); 3],
    detail_len: u8,
}

impl TraceEvent {
    pub(crate) fn new(cycle: u64, unit: Unit, kind: TraceKind, detail: &[(&'static str, i64)]) -> Self {
        let mut d = [("", 0); 3];
        d[..detail.len()].copy_from_slice(detail);
        TraceEvent {
            cycle,
            unit,
            kind,
            detail: d,
            detail_len: detail.len() as u8,
        }
    }

    pub fn detail(&self) -> &[(&'static str, i64)] {
        &self.detail[..self.detail_len as usize]
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cycle={} unit={} event={} detail=",
            self.cycle,
            self.unit,
            self.kind.as_str()
        )?;
        for (i, (k, v)) in self.detail().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Events in the order they happened. Empty when tracing is off.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PipelineTrace {
    events: Vec<TraceEvent>,
    enabled: bool,
}

impl PipelineTrace {
    pub(crate) fn new(enabled: bool) -> Self {
        PipelineTrace {
            events: Vec::new(),
            enabled,
        }
    }

    #[inline]
    pub(crate) fn record(&mut self, cycle: u64, unit: Unit, kind: TraceKind, detail: &[(&'static str, i64)]) {
        if self.enabled {
            self.events.push(TraceEvent::new(cycle, unit, kind, detail));
        }
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn count(&self, kind: TraceKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

impl fmt::Display for PipelineTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.events {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}
