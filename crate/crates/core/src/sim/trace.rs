use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::gasm::Register;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Read,
    Write,
    WakeBegin,
    WakeEnd,
    StateChange,
    Issue,
    StallScoreboard,
    StallWake,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Read => "read",
            EventKind::Write => "write",
            EventKind::WakeBegin => "wake_begin",
            EventKind::WakeEnd => "wake_end",
            EventKind::StateChange => "state_change",
            EventKind::Issue => "issue",
            EventKind::StallScoreboard => "stall_scoreboard",
            EventKind::StallWake => "stall_wake",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub cycle: u64,
    pub warp: usize,
    pub kind: EventKind,
    pub reg: Option<Register>,
    /// `key=value` pairs separated by `;`.
    pub detail: String,
}

/// `cycle,warp,event,reg,detail` with one row per event.
pub fn trace_csv(events: &[TraceEvent]) -> String {
    let mut out = String::from("cycle,warp,event,reg,detail\n");
    for e in events {
        let reg = e.reg.map(|r| r.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{},{}", e.cycle, e.warp, e.kind.name(), reg, e.detail);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows() {
        let ev = [
            TraceEvent { cycle: 3, warp: 1, kind: EventKind::Read, reg: Some(Register::r(2)), detail: "pc=4".into() },
            TraceEvent { cycle: 3, warp: 0, kind: EventKind::Issue, reg: None, detail: "pc=0".into() },
        ];
        assert_eq!(trace_csv(&ev), "cycle,warp,event,reg,detail\n3,1,read,$r2,pc=4\n3,0,issue,,pc=0\n");
    }
}
